"""Channel shadows: randomized sampling and eigenvalue / transfer estimation.

Protocol
--------
Each record prepares a uniformly random product Pauli eigenstate ``s`` (axis
in {X,Y,Z} and sign per qubit), sends it through the channel, and measures
every qubit in a fresh uniformly random Pauli basis, yielding ``t``.  The
core estimator for a Pauli string P is

    x_hat(P) = mean over records of
               prod_j tr(P_j (3|t_j><t_j| - I)) * tr(P_j |s_j><s_j|),

whose per-record value is 0 or +-3^|P|; the eigenvalue estimate is
``3^|P| * x_hat``.  Because the values are exact integers, estimators
accumulate signed integer counts (no floating-point summation error) and are
mergeable across blocks.

Randomness
----------
Sampling uses the counter-based Philox generator.  Records are produced in
fixed-size blocks; block ``b`` of a run with seed ``s`` always draws from
``Philox(key=s, counter=b << 128)`` and always draws full-block-sized arrays,
so record ``i`` depends only on (seed, i) - not on the total record count,
the block schedule, or any thread layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import exact
from .channels import PauliChannel, ProductChannel, TransferMatrix
from .clifford import conjugate_pauli, gate_arity
from .observables import locality_norm_constant
from .paulis import (
    PauliString,
    enumerate_low_weight,
    iter_all_paulis,
    low_weight_count,
)

AXES = "XYZ"
DEFAULT_BLOCK_SIZE = 1 << 16
COUNTS_QUBIT_CAP = 4  # 36^n histogram cells


# -- records -------------------------------------------------------------------


@dataclass
class ShadowRecords:
    """A batch of shadow records as (N, n) int8 arrays.

    Axis codes are 0=X, 1=Y, 2=Z; signs are +-1.  ``s_*`` describe the
    intended input eigenstate, ``t_*`` the measurement basis and outcome.
    """

    s_axis: np.ndarray
    s_sign: np.ndarray
    t_axis: np.ndarray
    t_sign: np.ndarray

    def __post_init__(self):
        shape = self.s_axis.shape
        for name in ("s_sign", "t_axis", "t_sign"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"field {name} has shape mismatch")
        if len(shape) != 2:
            raise ValueError(f"expected (N, n) arrays, got shape {shape}")

    def __len__(self) -> int:
        return self.s_axis.shape[0]

    @property
    def n(self) -> int:
        return self.s_axis.shape[1]

    def __getitem__(self, key) -> "ShadowRecords":
        if isinstance(key, int):
            key = slice(key, key + 1)
        return ShadowRecords(
            self.s_axis[key], self.s_sign[key], self.t_axis[key], self.t_sign[key]
        )

    @classmethod
    def concatenate(cls, batches: Sequence["ShadowRecords"]) -> "ShadowRecords":
        return cls(
            np.concatenate([b.s_axis for b in batches]),
            np.concatenate([b.s_sign for b in batches]),
            np.concatenate([b.t_axis for b in batches]),
            np.concatenate([b.t_sign for b in batches]),
        )

    # one record per line: "s:Z+X- t:Z-Y+"

    def to_lines(self) -> list[str]:
        out = []
        for i in range(len(self)):
            s = "".join(
                AXES[self.s_axis[i, j]] + ("+" if self.s_sign[i, j] > 0 else "-")
                for j in range(self.n)
            )
            t = "".join(
                AXES[self.t_axis[i, j]] + ("+" if self.t_sign[i, j] > 0 else "-")
                for j in range(self.n)
            )
            out.append(f"s:{s} t:{t}")
        return out

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "ShadowRecords":
        s_axis, s_sign, t_axis, t_sign = [], [], [], []
        n = None
        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2 or not parts[0].startswith("s:") or not parts[1].startswith("t:"):
                raise ValueError(f"line {lineno}: expected 's:... t:...', got {raw!r}")
            pairs = []
            for chunk in (parts[0][2:], parts[1][2:]):
                if len(chunk) % 2:
                    raise ValueError(f"line {lineno}: odd-length record {chunk!r}")
                axes, signs = [], []
                for pos in range(0, len(chunk), 2):
                    axis = AXES.find(chunk[pos])
                    if axis < 0 or chunk[pos + 1] not in "+-":
                        raise ValueError(f"line {lineno}: bad qubit token {chunk[pos:pos+2]!r}")
                    axes.append(axis)
                    signs.append(1 if chunk[pos + 1] == "+" else -1)
                pairs.append((axes, signs))
            if n is None:
                n = len(pairs[0][0])
            if len(pairs[0][0]) != n or len(pairs[1][0]) != n:
                raise ValueError(f"line {lineno}: qubit count differs from {n}")
            s_axis.append(pairs[0][0])
            s_sign.append(pairs[0][1])
            t_axis.append(pairs[1][0])
            t_sign.append(pairs[1][1])
        if n is None:
            raise ValueError("no records found")
        return cls(
            np.array(s_axis, dtype=np.int8),
            np.array(s_sign, dtype=np.int8),
            np.array(t_axis, dtype=np.int8),
            np.array(t_sign, dtype=np.int8),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.to_lines()) + "\n")

    @classmethod
    def load(cls, path) -> "ShadowRecords":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_lines(fh)


# -- sampling ------------------------------------------------------------------


def block_rng(seed: int, block: int) -> np.random.Generator:
    """The deterministic generator owning block ``block`` of run ``seed``."""
    return np.random.Generator(
        np.random.Philox(key=seed % (1 << 128), counter=block << 128)
    )


def _sample_block(
    channel: PauliChannel | ProductChannel,
    rows: int,
    rng: np.random.Generator,
    block_size: int,
    spam_flip_probability: float,
) -> ShadowRecords:
    """Draw one block.  Full-block-sized arrays are always drawn and then
    sliced, so a record's content never depends on the total record count."""
    n = channel.n
    shape = (block_size, n)
    s_axis = rng.integers(0, 3, shape, dtype=np.int8)
    s_sign = (1 - 2 * rng.integers(0, 2, shape, dtype=np.int8)).astype(np.int8)
    physical_sign = s_sign
    if spam_flip_probability > 0.0:
        prep_flip = rng.random(shape) < spam_flip_probability
        physical_sign = np.where(prep_flip, -s_sign, s_sign).astype(np.int8)
    if isinstance(channel, PauliChannel):
        errors = channel.sample_errors(block_size, rng)
        flips = (errors != 0) & (errors != s_axis + 1)
        out_sign = np.where(flips, -physical_sign, physical_sign).astype(np.int8)
        t_axis = rng.integers(0, 3, shape, dtype=np.int8)
        coin = (1 - 2 * rng.integers(0, 2, shape, dtype=np.int8)).astype(np.int8)
        t_sign = np.where(t_axis == s_axis, out_sign, coin).astype(np.int8)
    elif isinstance(channel, ProductChannel):
        t_axis = rng.integers(0, 3, shape, dtype=np.int8)
        u = rng.random(shape)
        t_sign = np.empty(shape, dtype=np.int8)
        rows_idx = np.arange(block_size)
        for j in range(n):
            ptm = channel.ptm(j)
            offset = ptm[1:, 0]
            column = ptm[1:, s_axis[:, j] + 1]  # (3, B)
            bloch = offset[:, None] + physical_sign[:, j][None, :] * column
            r_measured = bloch[t_axis[:, j], rows_idx]
            p_plus = np.clip((1.0 + r_measured) / 2.0, 0.0, 1.0)
            t_sign[:, j] = np.where(u[:, j] < p_plus, 1, -1)
    else:
        raise TypeError(f"cannot sample shadows of {type(channel).__name__}")
    if spam_flip_probability > 0.0:
        meas_flip = rng.random(shape) < spam_flip_probability
        t_sign = np.where(meas_flip, -t_sign, t_sign).astype(np.int8)
    records = ShadowRecords(s_axis, s_sign, t_axis, t_sign)
    return records[:rows] if rows < block_size else records


def iter_channel_shadow_blocks(
    channel: PauliChannel | ProductChannel,
    count: int,
    seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    spam_flip_probability: float = 0.0,
) -> Iterator[ShadowRecords]:
    """Stream records in deterministic blocks (see module docstring)."""
    if count < 0:
        raise ValueError(f"record count must be >= 0, got {count}")
    if not 0.0 <= spam_flip_probability <= 1.0:
        raise ValueError(f"flip probability must be in [0, 1], got {spam_flip_probability}")
    produced = 0
    block = 0
    while produced < count:
        rows = min(block_size, count - produced)
        yield _sample_block(
            channel, rows, block_rng(seed, block), block_size, spam_flip_probability
        )
        produced += rows
        block += 1


def sample_channel_shadows(
    channel: PauliChannel | ProductChannel,
    count: int,
    seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    spam_flip_probability: float = 0.0,
) -> ShadowRecords:
    blocks = list(
        iter_channel_shadow_blocks(channel, count, seed, block_size, spam_flip_probability)
    )
    if not blocks:
        n = channel.n
        empty = np.empty((0, n), dtype=np.int8)
        return ShadowRecords(empty, empty.copy(), empty.copy(), empty.copy())
    return ShadowRecords.concatenate(blocks)


# -- estimation ----------------------------------------------------------------


def _signed_numerator(records: ShadowRecords, in_pauli: PauliString | None,
                      out_pauli: PauliString) -> int:
    """Sum over records of the signed match indicator; exact integer.

    The per-record estimator value is 3^|out| times this indicator, with the
    input-side factor using ``in_pauli`` against s and the output side using
    ``out_pauli`` against t.
    """
    count = len(records)
    mask = np.ones(count, dtype=bool)
    parity = np.ones(count, dtype=np.int8)
    if in_pauli is not None:
        for j in range(records.n):
            code = in_pauli.letter_code(j)
            if code == 0:
                continue
            mask &= records.s_axis[:, j] == code - 1
            parity = parity * records.s_sign[:, j]
    for j in range(records.n):
        code = out_pauli.letter_code(j)
        if code == 0:
            continue
        mask &= records.t_axis[:, j] == code - 1
        parity = parity * records.t_sign[:, j]
    return int(parity[mask].sum(dtype=np.int64))


_CELL_FACTORS: np.ndarray | None = None


def _cell_factor_table() -> np.ndarray:
    """(4, 4, 36) table: per-qubit estimator factor by (in letter, out letter, cell)."""
    global _CELL_FACTORS
    if _CELL_FACTORS is None:
        table = np.zeros((4, 4, 36))
        for cell in range(36):
            sa, rem = divmod(cell, 12)
            sbit, rem = divmod(rem, 6)
            ta, tbit = divmod(rem, 2)
            s_sign = 1 - 2 * sbit
            t_sign = 1 - 2 * tbit
            for in_code in range(4):
                f_in = 1.0 if in_code == 0 else (s_sign if sa == in_code - 1 else 0.0)
                for out_code in range(4):
                    f_out = (
                        1.0 if out_code == 0 else (3.0 * t_sign if ta == out_code - 1 else 0.0)
                    )
                    table[in_code, out_code, cell] = f_in * f_out
        _CELL_FACTORS = table
    return _CELL_FACTORS


class ShadowCounts:
    """Joint histogram over per-qubit (s_axis, s_sign, t_axis, t_sign) cells.

    A sufficient statistic for every estimator in this module: 36 cells per
    qubit, 36^n joint cells (n <= 4).  Counts are integers, so estimates
    derived from them are exact functions of the drawn records, and two
    histograms merge by addition.
    """

    def __init__(self, n: int):
        if not 1 <= n <= COUNTS_QUBIT_CAP:
            raise ValueError(f"counts need 1 <= n <= {COUNTS_QUBIT_CAP}, got {n}")
        self.n = n
        self.counts = np.zeros(36**n, dtype=np.int64)
        self.n_records = 0

    @classmethod
    def from_records(cls, records: ShadowRecords) -> "ShadowCounts":
        out = cls(records.n)
        out.update(records)
        return out

    @classmethod
    def accumulate(cls, blocks: Iterable[ShadowRecords], n: int) -> "ShadowCounts":
        out = cls(n)
        for block in blocks:
            out.update(block)
        return out

    def update(self, records: ShadowRecords) -> None:
        if records.n != self.n:
            raise ValueError(f"records have n={records.n}, counts have n={self.n}")
        codes = np.zeros(len(records), dtype=np.int64)
        for j in range(self.n):
            cell = (
                (records.s_axis[:, j].astype(np.int64) * 2 + (records.s_sign[:, j] < 0)) * 6
                + records.t_axis[:, j] * 2
                + (records.t_sign[:, j] < 0)
            )
            codes = codes * 36 + cell
        self.counts += np.bincount(codes, minlength=36**self.n)
        self.n_records += len(records)

    def merge(self, other: "ShadowCounts") -> "ShadowCounts":
        if other.n != self.n:
            raise ValueError(f"cannot merge n={other.n} into n={self.n}")
        out = ShadowCounts(self.n)
        out.counts = self.counts + other.counts
        out.n_records = self.n_records + other.n_records
        return out

    def signed_numerator(self, in_pauli: PauliString | None, out_pauli: PauliString) -> float:
        table = _cell_factor_table()
        tensor = self.counts.reshape((36,) * self.n).astype(float)
        for j in range(self.n):
            in_code = 0 if in_pauli is None else in_pauli.letter_code(j)
            factors = table[in_code, out_pauli.letter_code(j)]
            tensor = np.tensordot(tensor, factors, axes=[(0,), (0,)])
        return float(tensor)


def _as_counts_or_records(source, n: int) -> ShadowCounts | ShadowRecords:
    if isinstance(source, (ShadowCounts, ShadowRecords)):
        if source.n != n:
            raise ValueError(f"source has n={source.n}, expected {n}")
        if isinstance(source, ShadowRecords) and n <= COUNTS_QUBIT_CAP:
            return ShadowCounts.from_records(source)
        return source
    # A stream of record blocks.
    return ShadowCounts.accumulate(source, n)


def _numerator(source: ShadowCounts | ShadowRecords, in_pauli, out_pauli) -> float:
    if isinstance(source, ShadowCounts):
        return source.signed_numerator(in_pauli, out_pauli)
    # Direct per-record path for n beyond the histogram cap.
    return 3.0 ** out_pauli.weight * _signed_numerator(source, in_pauli, out_pauli)


def _record_total(source: ShadowCounts | ShadowRecords) -> int:
    return source.n_records if isinstance(source, ShadowCounts) else len(source)


def estimate_x(records: ShadowRecords | ShadowCounts, p: PauliString) -> float:
    """x_hat(P): mean per-record estimator value (no 3^|P| rescaling)."""
    total = _record_total(records)
    if total == 0:
        raise ValueError("no records")
    return _numerator(records, p, p) / total


@dataclass
class EigenvalueEstimates:
    """Estimated eigenvalues for every string of weight <= k."""

    n: int
    values: dict[PauliString, float]
    n_records: int

    def __getitem__(self, p: PauliString) -> float:
        p = p.unsigned()
        if p.is_identity:
            return 1.0
        try:
            return self.values[p]
        except KeyError:
            raise KeyError(f"no eigenvalue estimate for {p}") from None

    def __contains__(self, p: PauliString) -> bool:
        p = p.unsigned()
        return p.is_identity or p in self.values

    def items(self):
        return self.values.items()

    @classmethod
    def from_channel(cls, channel: PauliChannel, k: int) -> "EigenvalueEstimates":
        """Oracle table: exact eigenvalues, usable wherever estimates are."""
        values = {
            p: channel.eigenvalue(p)
            for p in enumerate_low_weight(channel.n, k)
            if not p.is_identity
        }
        return cls(channel.n, values, 0)


def estimate_eigenvalues(
    source: ShadowRecords | ShadowCounts | Iterable[ShadowRecords],
    n: int,
    k: int,
) -> EigenvalueEstimates:
    """lambda_hat(P) = 3^|P| x_hat(P) for every weight <= k string."""
    source = _as_counts_or_records(source, n)
    total = _record_total(source)
    if total == 0:
        raise ValueError("no records")
    values: dict[PauliString, float] = {}
    for p in enumerate_low_weight(n, k):
        if p.is_identity:
            continue
        values[p] = 3.0 ** p.weight * _numerator(source, p, p) / total
    return EigenvalueEstimates(n, values, total)


def estimate_transfer_entry(
    records: ShadowRecords | ShadowCounts, in_pauli: PauliString, out_pauli: PauliString
) -> float:
    """lambda_hat_P(Q) = 3^|P| x_hat(P, Q): input side against s, output against t."""
    total = _record_total(records)
    if total == 0:
        raise ValueError("no records")
    if out_pauli.is_identity:
        return 1.0 if in_pauli.is_identity else 0.0
    return 3.0 ** in_pauli.weight * _numerator(records, in_pauli, out_pauli) / total


def estimate_transfer_matrix(
    source: ShadowRecords | ShadowCounts | Iterable[ShadowRecords],
    n: int,
    k: int,
) -> TransferMatrix:
    """Estimated adjoint transfer matrix on the weight <= k basis.

    Entries with |P| > |Q| are structurally zero under the weight-contracting
    assumption and are pinned to 0; the identity column is exact.
    """
    source = _as_counts_or_records(source, n)
    total = _record_total(source)
    if total == 0:
        raise ValueError("no records")
    basis = tuple(enumerate_low_weight(n, k))
    size = len(basis)
    matrix = np.zeros((size, size))
    matrix[0, 0] = 1.0  # identity column: lambda_P(I) = delta_PI
    for col, q in enumerate(basis):
        if q.is_identity:
            continue
        for row, p in enumerate(basis):
            if p.weight > q.weight:
                continue
            matrix[row, col] = (
                3.0 ** p.weight * _numerator(source, p, q) / total
            )
    return TransferMatrix(n, k, basis, matrix)


# -- sample-size planning ------------------------------------------------------


def plan_sample_size(
    epsilon: float,
    delta: float,
    n: int,
    k: int,
    degree: int,
    min_eigenvalue: float,
) -> int:
    """Records sufficient for end-to-end recovery error epsilon w.p. 1 - delta.

    The per-eigenvalue target is ``min_eigenvalue * C(k, degree) * epsilon / 3``
    with C the locality-norm constant; a Hoeffding bound with a union over all
    weight <= k strings gives the count.  Deliberately conservative.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not 0.0 < min_eigenvalue <= 1.0:
        raise ValueError(f"min eigenvalue must be in (0, 1], got {min_eigenvalue}")
    target = min_eigenvalue * locality_norm_constant(k, degree) * epsilon / 3.0
    per_string = target / 3.0**k
    strings = low_weight_count(n, k)
    bound = 2.0 * 9.0**k * math.log(2.0 * strings / delta) / per_string**2
    return int(math.ceil(bound))


# -- gate shadows --------------------------------------------------------------


def _gate_outcome_cdfs(kind: str, noise: PauliChannel | None) -> np.ndarray:
    """(6^g, 3^g, 2^g) outcome CDFs for every (input state, basis) pair."""
    g = gate_arity(kind)
    if noise is not None and noise.n != g:
        raise ValueError(f"{kind} noise must act on {g} qubits, got {noise.n}")
    unitary = exact.gate_unitary(kind, tuple(range(g)), g)
    cdfs = np.empty((6**g, 3**g, 2**g))
    for s_idx in range(6**g):
        digits = [(s_idx // 6**(g - 1 - j)) % 6 for j in range(g)]
        axes = [d // 2 for d in digits]
        signs = [1 - 2 * (d % 2) for d in digits]
        rho = exact.DenseState.product_eigenstate(axes, signs).rho
        rho = unitary @ rho @ unitary.conj().T
        if noise is not None:
            rho = exact.apply_to_operator(noise, rho)
        state = exact.DenseState(g, rho)
        for b_idx in range(3**g):
            basis = [(b_idx // 3**(g - 1 - j)) % 3 for j in range(g)]
            probs = exact.basis_outcome_probabilities(state, basis)
            cdf = np.cumsum(probs)
            cdf[-1] = 1.0
            cdfs[s_idx, b_idx] = cdf
    return cdfs


def sample_gate_shadows(
    kind: str,
    noise: PauliChannel | None,
    count: int,
    seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> ShadowRecords:
    """Shadow records of a noisy gate: random eigenstate in, gate plus noise,
    random Pauli measurement out.  ``n`` of the result is the gate arity."""
    g = gate_arity(kind)
    cdfs = _gate_outcome_cdfs(kind, noise)
    if count < 0:
        raise ValueError(f"record count must be >= 0, got {count}")
    blocks = []
    produced = 0
    block = 0
    powers6 = 6 ** np.arange(g - 1, -1, -1, dtype=np.int64)
    powers3 = 3 ** np.arange(g - 1, -1, -1, dtype=np.int64)
    bit_shift = np.arange(g - 1, -1, -1)
    while produced < count:
        rows = min(block_size, count - produced)
        rng = block_rng(seed, block)
        shape = (block_size, g)
        s_digits = rng.integers(0, 6, shape, dtype=np.int64)
        b_digits = rng.integers(0, 3, shape, dtype=np.int64)
        u = rng.random(block_size)
        s_idx = s_digits @ powers6
        b_idx = b_digits @ powers3
        row_cdfs = cdfs[s_idx, b_idx]  # (B, 2^g)
        outcomes = (u[:, None] >= row_cdfs[:, :-1]).sum(axis=1)
        bits = (outcomes[:, None] >> bit_shift[None, :]) & 1
        batch = ShadowRecords(
            (s_digits // 2).astype(np.int8),
            (1 - 2 * (s_digits % 2)).astype(np.int8),
            b_digits.astype(np.int8),
            (1 - 2 * bits).astype(np.int8),
        )
        blocks.append(batch[:rows] if rows < block_size else batch)
        produced += rows
        block += 1
    if not blocks:
        empty = np.empty((0, g), dtype=np.int8)
        return ShadowRecords(empty, empty.copy(), empty.copy(), empty.copy())
    return ShadowRecords.concatenate(blocks)


def estimate_gate_eigenvalues(
    records: ShadowRecords | ShadowCounts, kind: str
) -> EigenvalueEstimates:
    """Noise eigenvalues of a gate from its shadow records.

    The input-side Pauli is the backward conjugation U^dagger P U; its sign
    multiplies the estimate, and the 3^|.| rescaling uses the conjugated
    weight (the input side is what the random eigenstate sees).
    """
    g = gate_arity(kind)
    if records.n != g:
        raise ValueError(f"{kind} records must have n={g}, got {records.n}")
    total = _record_total(records)
    if total == 0:
        raise ValueError("no records")
    values: dict[PauliString, float] = {}
    qubits = tuple(range(g))
    for p in iter_all_paulis(g):
        if p.is_identity:
            continue
        back = conjugate_pauli(kind, qubits, p)
        numer = _numerator(records, back.unsigned(), p)
        values[p] = back.sign * 3.0 ** back.weight * numer / total
    return EigenvalueEstimates(g, values, total)


# -- preparation/measurement error ---------------------------------------------


def estimate_spam_factor(flip_probability: float, count: int, seed: int) -> float:
    """Estimated noiseless-channel prefactor under preparation/measurement flips.

    Runs the protocol on a single qubit with an identity channel, flipping the
    prepared eigenstate and the reported outcome each with the given
    probability, and estimates the (known to be 1) X eigenvalue.  The return
    value concentrates on (p0 - p1)^2; divide estimates from the same hardware
    by it to undo the prep/measurement bias.
    """
    records = sample_channel_shadows(
        PauliChannel.identity(1), count, seed, spam_flip_probability=flip_probability
    )
    x = PauliString.from_label("X")
    return 3.0 * estimate_x(records, x)


# -- state expectation estimation ---------------------------------------------


def estimate_state_expectations(
    state: "exact.DenseState",
    paulis: Sequence[PauliString],
    count: int,
    seed: int,
    n_batches: int = 10,
) -> dict[PauliString, float]:
    """Median-of-means Pauli expectations of a state from random-basis shadows.

    Measures ``count`` snapshots in uniformly random product Pauli bases
    (outcomes drawn from the exact distribution), reconstructs each Pauli's
    single-shot estimator, and returns the median of ``n_batches`` batch
    means.
    """
    if count < n_batches:
        raise ValueError(f"need at least {n_batches} records, got {count}")
    n = state.n
    rng = block_rng(seed, 0)
    bases = rng.integers(0, 3, (count, n), dtype=np.int8)
    signs = exact.sample_pauli_basis_outcomes(state, bases, rng)
    edges = np.linspace(0, count, n_batches + 1).astype(int)
    out: dict[PauliString, float] = {}
    for p in paulis:
        mask = np.ones(count, dtype=bool)
        parity = np.ones(count, dtype=np.int8)
        for j in range(n):
            code = p.letter_code(j)
            if code == 0:
                continue
            mask &= bases[:, j] == code - 1
            parity = parity * signs[:, j]
        values = np.where(mask, parity, 0).astype(np.int64)
        batch_means = [
            p.sign * 3.0 ** p.weight * values[a:b].sum() / max(b - a, 1)
            for a, b in zip(edges[:-1], edges[1:])
        ]
        out[p] = float(np.median(batch_means))
    return out
