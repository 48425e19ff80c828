"""Signed n-qubit Pauli strings with a packed symplectic representation.

A Pauli string is stored as two bit masks ``x`` and ``z`` plus a real sign in
{+1, -1}.  Bit ``j`` of ``x``/``z`` gives the X/Z component on qubit ``j``:
(0,0) = I, (1,0) = X, (1,1) = Y, (0,1) = Z.  Qubit 0 is the leftmost letter of
a label such as ``"XZI"``.  Products with an imaginary global phase are
rejected: every quantity in this package is a real coefficient against a
Hermitian Pauli, so an ``i`` surviving a product is a usage bug.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator

import numpy as np

LETTERS = "IXYZ"

# Single-qubit matrices, indexed by letter code (I=0, X=1, Y=2, Z=3).
PAULI_MATRICES = (
    np.eye(2, dtype=np.complex128),
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)

# i-exponent of the single-qubit product sigma_a sigma_b = i^e sigma_(a xor b).
_PHASE_EXPONENT = {
    (1, 2): 1, (2, 3): 1, (3, 1): 1,
    (2, 1): 3, (3, 2): 3, (1, 3): 3,
}

_CODE_FROM_BITS = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}


class PauliString:
    """An immutable signed Pauli string on ``n`` qubits."""

    __slots__ = ("n", "x", "z", "sign")

    def __init__(self, n: int, x: int = 0, z: int = 0, sign: int = 1):
        if n < 1:
            raise ValueError(f"need at least one qubit, got n={n}")
        mask = (1 << n) - 1
        if x & ~mask or z & ~mask:
            raise ValueError(f"bit mask exceeds {n} qubits")
        if sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {sign!r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "sign", sign)

    def __setattr__(self, name, value):
        raise AttributeError("PauliString is immutable")

    # -- constructors ---------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def from_label(cls, label: str, sign: int = 1) -> "PauliString":
        """Build from a letter string such as ``"XZI"`` (qubit 0 leftmost)."""
        label = label.strip()
        if label.startswith("-"):
            sign = -sign
            label = label[1:]
        elif label.startswith("+"):
            label = label[1:]
        if not label:
            raise ValueError("empty Pauli label")
        x = z = 0
        for j, ch in enumerate(label):
            code = LETTERS.find(ch.upper())
            if code < 0:
                raise ValueError(f"invalid Pauli letter {ch!r} in {label!r}")
            if code in (1, 2):
                x |= 1 << j
            if code in (2, 3):
                z |= 1 << j
        return cls(len(label), x, z, sign)

    @classmethod
    def from_letters(cls, n: int, letters: dict[int, str], sign: int = 1) -> "PauliString":
        """Build from a sparse {qubit: letter} mapping, identity elsewhere."""
        x = z = 0
        for j, ch in letters.items():
            if not 0 <= j < n:
                raise ValueError(f"qubit index {j} out of range for n={n}")
            code = LETTERS.find(ch.upper())
            if code <= 0:
                raise ValueError(f"invalid non-identity letter {ch!r}")
            if code in (1, 2):
                x |= 1 << j
            if code in (2, 3):
                z |= 1 << j
        return cls(n, x, z, sign)

    # -- basic queries ---------------------------------------------------

    def letter_code(self, j: int) -> int:
        return _CODE_FROM_BITS[((self.x >> j) & 1, (self.z >> j) & 1)]

    def letter(self, j: int) -> str:
        return LETTERS[self.letter_code(j)]

    def acts_on(self, j: int) -> bool:
        return bool(((self.x | self.z) >> j) & 1)

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def support(self) -> tuple[int, ...]:
        bits = self.x | self.z
        return tuple(j for j in range(self.n) if (bits >> j) & 1)

    def commutes_with(self, other: "PauliString") -> bool:
        return symplectic_product(self, other) == 0

    def unsigned(self) -> "PauliString":
        return self if self.sign == 1 else PauliString(self.n, self.x, self.z, 1)

    def negate(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, -self.sign)

    # -- algebra ---------------------------------------------------------

    def __mul__(self, other: "PauliString") -> "PauliString":
        if not isinstance(other, PauliString):
            return NotImplemented
        if self.n != other.n:
            raise ValueError(f"qubit counts differ: {self.n} != {other.n}")
        exponent = 0
        bits = (self.x | self.z | other.x | other.z)
        j = 0
        while bits >> j:
            if (bits >> j) & 1:
                pair = (self.letter_code(j), other.letter_code(j))
                exponent += _PHASE_EXPONENT.get(pair, 0)
            j += 1
        exponent %= 4
        if exponent % 2:
            raise ValueError(
                f"product {self} * {other} has imaginary phase i^{exponent}"
            )
        sign = self.sign * other.sign * (1 if exponent == 0 else -1)
        return PauliString(self.n, self.x ^ other.x, self.z ^ other.z, sign)

    def restrict(self, qubits: Iterable[int]) -> "PauliString":
        """Project onto the given qubits (in the given order), keeping the sign."""
        qubits = tuple(qubits)
        x = z = 0
        for pos, j in enumerate(qubits):
            if not 0 <= j < self.n:
                raise ValueError(f"qubit index {j} out of range for n={self.n}")
            x |= ((self.x >> j) & 1) << pos
            z |= ((self.z >> j) & 1) << pos
        return PauliString(len(qubits), x, z, self.sign)

    def embed(self, n: int, qubits: Iterable[int]) -> "PauliString":
        """Place this string onto qubit positions ``qubits`` of an n-qubit register."""
        qubits = tuple(qubits)
        if len(qubits) != self.n:
            raise ValueError(f"expected {self.n} target qubits, got {len(qubits)}")
        x = z = 0
        for pos, j in enumerate(qubits):
            if not 0 <= j < n:
                raise ValueError(f"qubit index {j} out of range for n={n}")
            x |= ((self.x >> pos) & 1) << j
            z |= ((self.z >> pos) & 1) << j
        return PauliString(n, x, z, self.sign)

    def matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix (sign included).  Intended for small n."""
        if self.n > 14:
            raise ValueError(f"dense matrix for n={self.n} qubits is not supported")
        out = np.array([[self.sign]], dtype=np.complex128)
        for j in range(self.n):
            out = np.kron(out, PAULI_MATRICES[self.letter_code(j)])
        return out

    # -- dunder plumbing --------------------------------------------------

    def to_label(self) -> str:
        body = "".join(self.letter(j) for j in range(self.n))
        return body if self.sign == 1 else "-" + body

    def __str__(self) -> str:
        return self.to_label()

    def __repr__(self) -> str:
        return f"PauliString.from_label({self.to_label()!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (self.n, self.x, self.z, self.sign) == (other.n, other.x, other.z, other.sign)

    def __hash__(self) -> int:
        return hash((self.n, self.x, self.z, self.sign))


def symplectic_product(p: PauliString, q: PauliString) -> int:
    """1 if the strings anticommute, 0 if they commute."""
    if p.n != q.n:
        raise ValueError(f"qubit counts differ: {p.n} != {q.n}")
    return ((p.x & q.z).bit_count() + (p.z & q.x).bit_count()) % 2


def weight(p: PauliString) -> int:
    return p.weight


def pauli_index(p: PauliString) -> int:
    """Base-4 letter index of an unsigned string; qubit 0 is the leading digit."""
    idx = 0
    for j in range(p.n):
        idx = idx * 4 + p.letter_code(j)
    return idx


def pauli_from_index(n: int, idx: int) -> PauliString:
    if not 0 <= idx < 4**n:
        raise ValueError(f"index {idx} out of range for n={n}")
    x = z = 0
    for j in reversed(range(n)):
        code = idx % 4
        idx //= 4
        if code in (1, 2):
            x |= 1 << j
        if code in (2, 3):
            z |= 1 << j
    return PauliString(n, x, z)


def low_weight_count(n: int, k: int) -> int:
    """Number of Pauli strings with weight at most k, identity included."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    return sum(math.comb(n, w) * 3**w for w in range(k + 1))


def enumerate_low_weight(n: int, k: int) -> list[PauliString]:
    """All unsigned strings with weight <= k, in the package's canonical order.

    Order is weight-major; within a weight class the support sets ascend
    lexicographically and letters on the support ascend with X < Y < Z.  Every
    basis-indexed object (transfer matrices, CSV output) uses this order.
    """
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    out = [PauliString.identity(n)]
    from itertools import combinations, product

    for w in range(1, k + 1):
        for positions in combinations(range(n), w):
            for codes in product((1, 2, 3), repeat=w):
                x = z = 0
                for j, code in zip(positions, codes):
                    if code in (1, 2):
                        x |= 1 << j
                    if code in (2, 3):
                        z |= 1 << j
                out.append(PauliString(n, x, z))
    return out


def iter_all_paulis(n: int) -> Iterator[PauliString]:
    """All 4^n unsigned strings in base-4 index order (see ``pauli_index``)."""
    for idx in range(4**n):
        yield pauli_from_index(n, idx)
