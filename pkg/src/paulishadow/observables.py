"""Real linear combinations of Pauli strings and their structural statistics."""

from __future__ import annotations

import math
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from .paulis import PauliString, pauli_from_index


class Observable:
    """A Hermitian observable O = sum_P alpha_P P with real coefficients.

    Terms are keyed by unsigned Pauli strings; a signed string folds its sign
    into the coefficient.  Insertion order is preserved, so iteration and
    serialization are deterministic.
    """

    def __init__(
        self,
        n: int,
        terms: Mapping[PauliString, float] | Iterable[tuple[PauliString | str, float]] = (),
        drop_tolerance: float = 0.0,
    ):
        if n < 1:
            raise ValueError(f"need at least one qubit, got n={n}")
        self.n = n
        self._terms: dict[PauliString, float] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for key, coeff in items:
            p = PauliString.from_label(key) if isinstance(key, str) else key
            if p.n != n:
                raise ValueError(f"term {p} has {p.n} qubits, observable has {n}")
            coeff = float(coeff) * p.sign
            p = p.unsigned()
            self._terms[p] = self._terms.get(p, 0.0) + coeff
        if drop_tolerance > 0.0:
            self._terms = {
                p: c for p, c in self._terms.items() if abs(c) > drop_tolerance
            }

    # -- access -----------------------------------------------------------

    def terms(self) -> dict[PauliString, float]:
        return dict(self._terms)

    def coefficient(self, p: PauliString) -> float:
        return self._terms.get(p.unsigned(), 0.0) * p.sign

    def support(self) -> tuple[PauliString, ...]:
        return tuple(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[PauliString, float]]:
        return iter(self._terms.items())

    def __repr__(self) -> str:
        body = " + ".join(f"{c:g}*{p}" for p, c in list(self._terms.items())[:4])
        if len(self._terms) > 4:
            body += f" + ... ({len(self._terms)} terms)"
        return f"<Observable n={self.n}: {body or '0'}>"

    # -- structure --------------------------------------------------------

    @property
    def locality(self) -> int:
        """Largest weight among the terms (0 for an identity-only observable)."""
        return max((p.weight for p in self._terms), default=0)

    @property
    def degree(self) -> int:
        """Largest number of terms acting non-trivially on any single qubit."""
        counts = [0] * self.n
        for p in self._terms:
            for j in range(self.n):
                if p.acts_on(j):
                    counts[j] += 1
        return max(counts, default=0)

    def pauli_norm(self, order: float = 1) -> float:
        coeffs = np.array(list(self._terms.values()), dtype=float)
        if coeffs.size == 0:
            return 0.0
        if order == math.inf:
            return float(np.max(np.abs(coeffs)))
        return float(np.sum(np.abs(coeffs) ** order) ** (1.0 / order))

    # -- arithmetic -------------------------------------------------------

    def scaled(self, factor: float) -> "Observable":
        return Observable(self.n, {p: c * factor for p, c in self._terms.items()})

    def matrix(self) -> np.ndarray:
        out = np.zeros((2**self.n, 2**self.n), dtype=np.complex128)
        for p, c in self._terms.items():
            out += c * p.matrix()
        return out

    def spectral_norm(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix()))))

    def normalized(self) -> "Observable":
        norm = self.spectral_norm()
        if norm == 0.0:
            raise ValueError("cannot normalize the zero observable")
        return self.scaled(1.0 / norm)

    # -- text format -------------------------------------------------------
    #
    # One term per line: a letter string then a coefficient, e.g. "XZI 0.27".
    # Blank lines and lines starting with '#' are skipped.

    def to_text(self) -> str:
        lines = [f"{p.to_label()} {c:.17g}" for p, c in self._terms.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Observable":
        terms: list[tuple[PauliString, float]] = []
        n = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'PAULI COEFF', got {raw!r}")
            p = PauliString.from_label(parts[0])
            try:
                coeff = float(parts[1])
            except ValueError:
                raise ValueError(f"line {lineno}: bad coefficient {parts[1]!r}") from None
            if n is None:
                n = p.n
            elif p.n != n:
                raise ValueError(f"line {lineno}: {p} has {p.n} qubits, expected {n}")
            terms.append((p, coeff))
        if n is None:
            raise ValueError("no terms found in observable text")
        return cls(n, terms)

    @classmethod
    def load(cls, path) -> "Observable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())


class ObservableStats(NamedTuple):
    locality: int
    degree: int
    pauli_norm_1: float
    pauli_norm_2: float


def observable_stats(obs: Observable) -> ObservableStats:
    return ObservableStats(obs.locality, obs.degree, obs.pauli_norm(1), obs.pauli_norm(2))


def pauli_decompose(
    matrix: np.ndarray,
    drop_tolerance: float = 1e-12,
    hermitian_tolerance: float = 1e-9,
) -> Observable:
    """Expand a Hermitian matrix in the Pauli basis.

    Uses the per-qubit tensor transform, O(n 4^n) instead of the naive 16^n
    trace loop.  Coefficients whose magnitude is at most ``drop_tolerance``
    are discarded.
    """
    matrix = np.asarray(matrix, dtype=np.complex128)
    dim = matrix.shape[0]
    if matrix.ndim != 2 or matrix.shape[1] != dim:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    n = int(round(math.log2(dim)))
    if 2**n != dim:
        raise ValueError(f"matrix dimension {dim} is not a power of two")
    if n > 12:
        raise ValueError(f"dense decomposition capped at 12 qubits, got n={n}")
    if np.max(np.abs(matrix - matrix.conj().T)) > hermitian_tolerance:
        raise ValueError("matrix is not Hermitian within tolerance")

    # B[a, i, j] = (P_a)_{ji} / 2, so contracting over (i, j) yields tr(P_a .)/2.
    from .paulis import PAULI_MATRICES

    basis = np.stack([m.T / 2.0 for m in PAULI_MATRICES])  # (4, 2, 2)
    # Reshape into 2n axes: (r_0, ..., r_{n-1}, c_0, ..., c_{n-1}).
    tensor = matrix.reshape((2,) * (2 * n))
    for j in range(n):
        # Contract qubit j's row/column pair into a letter axis, appended last.
        tensor = np.tensordot(tensor, basis, axes=[(0, n - j), (1, 2)])
    coeffs = tensor.reshape(-1)  # base-4 index order, qubit 0 most significant
    # The per-qubit contraction consumed row axis first, so the letter axes come
    # out with qubit 0 first => index = sum code_j * 4^(n-1-j), matching
    # ``pauli_index``.
    if np.max(np.abs(coeffs.imag)) > hermitian_tolerance:
        raise ValueError("decomposition produced complex coefficients")
    terms = []
    for idx in np.flatnonzero(np.abs(coeffs.real) > drop_tolerance):
        terms.append((pauli_from_index(n, int(idx)), float(coeffs.real[idx])))
    return Observable(n, terms)


def locality_norm_constant(k: int, d: int) -> float:
    """Lower-bound constant relating the Pauli-1 norm to the spectral norm.

    For a k-local observable of degree d,
    ``locality_norm_constant(k, d) / 3 * pauli_norm_1 <= spectral_norm``.
    """
    if k < 1:
        raise ValueError(f"locality must be >= 1, got {k}")
    if d < 1:
        raise ValueError(f"degree must be >= 1, got {d}")
    return math.sqrt(2.0 * math.factorial(k)) / (
        math.sqrt(d) * k ** (k + 2.5) * (2.0 * math.sqrt(6.0) + 4.0 * math.sqrt(3.0)) ** k
    )


def heisenberg_observable(
    n: int,
    jx: float = 0.27,
    jy: float = 0.42,
    jz: float = 0.76,
    hz: float = 0.6,
    field_on_all: bool = False,
    periodic: bool = False,
) -> Observable:
    """Heisenberg-chain observable with a Z field.

    The default places one field term per bond site (qubits 0..n-2), mirroring
    the bond sum; ``field_on_all`` extends the field to every qubit, and
    ``periodic`` adds the wrap-around bond.
    """
    if n < 2:
        raise ValueError(f"Heisenberg chain needs n >= 2, got n={n}")
    terms: list[tuple[PauliString, float]] = []
    bonds = [(j, j + 1) for j in range(n - 1)]
    if periodic and n > 2:
        bonds.append((n - 1, 0))
    for a, b in bonds:
        terms.append((PauliString.from_letters(n, {a: "X", b: "X"}), jx))
        terms.append((PauliString.from_letters(n, {a: "Y", b: "Y"}), jy))
        terms.append((PauliString.from_letters(n, {a: "Z", b: "Z"}), jz))
    field_sites = range(n) if field_on_all else range(n - 1)
    for j in field_sites:
        terms.append((PauliString.from_letters(n, {j: "Z"}), hz))
    return Observable(n, terms)
