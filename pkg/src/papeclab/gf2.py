"""Exact linear algebra over GF(2).

Bit strings are stored as ``uint8`` numpy arrays. When a bit string has to
index a computational basis state it is packed big-endian, so bit 0 is the
most significant bit and matches the first tensor factor.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


def _as_bits(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise ValueError("entries must be 0 or 1")
    return arr.astype(np.uint8)


def int_to_bits(value: int, length: int) -> np.ndarray:
    """Big-endian bit array of ``value`` with ``length`` entries."""
    if value < 0 or value >= 1 << length:
        raise ValueError(f"{value} does not fit in {length} bits")
    return np.array([(value >> (length - 1 - i)) & 1 for i in range(length)],
                    dtype=np.uint8)


def bits_to_int(bits: Sequence[int]) -> int:
    """Inverse of :func:`int_to_bits`."""
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def all_bit_strings(length: int) -> np.ndarray:
    """All ``2**length`` strings as rows, in basis-index order."""
    idx = np.arange(1 << length, dtype=np.int64)
    shifts = np.arange(length - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def hamming_weight(bits) -> int:
    return int(np.count_nonzero(bits))


class BitMatrix:
    """Immutable rectangular matrix over GF(2).

    Zero-row matrices are allowed so that an empty check matrix still
    carries its column count.
    """

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = _as_bits(data)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ValueError("BitMatrix needs a 2-D array")
        arr = arr.copy()
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(np.zeros((rows, cols), dtype=np.uint8))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(np.eye(n, dtype=np.uint8))

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], ncols: int | None = None) -> "BitMatrix":
        rows = [list(r) for r in rows]
        if not rows:
            if ncols is None:
                raise ValueError("ncols required for an empty matrix")
            return cls.zeros(0, ncols)
        return cls(np.array(rows))

    @classmethod
    def from_text(cls, text: str, ncols: int | None = None) -> "BitMatrix":
        """Parse the ``"110;011"`` form. An empty string needs ``ncols``."""
        text = text.strip()
        if not text:
            if ncols is None:
                raise ValueError("empty matrix text needs ncols")
            return cls.zeros(0, ncols)
        rows = [r.strip() for r in text.split(";")]
        if any(set(r) - {"0", "1"} or not r for r in rows):
            raise ValueError(f"malformed bit matrix text: {text!r}")
        if len({len(r) for r in rows}) != 1:
            raise ValueError("rows differ in length")
        return cls([[int(c) for c in r] for r in rows])

    def to_text(self) -> str:
        return ";".join("".join(str(int(b)) for b in row) for row in self._data)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    @property
    def nrows(self) -> int:
        return self._data.shape[0]

    @property
    def ncols(self) -> int:
        return self._data.shape[1]

    @property
    def T(self) -> "BitMatrix":
        return BitMatrix(self._data.T)

    def row(self, i: int) -> np.ndarray:
        return self._data[i]

    def __iter__(self):
        return iter(self._data)

    def __matmul__(self, other):
        if isinstance(other, BitMatrix):
            return BitMatrix((self._data.astype(np.int64) @ other._data) % 2)
        vec = _as_bits(other)
        return ((self._data.astype(np.int64) @ vec) % 2).astype(np.uint8)

    def apply_int(self, a: int) -> int:
        """Image of the packed string ``a`` as a packed string."""
        return bits_to_int(self @ int_to_bits(a, self.ncols))

    def table(self) -> np.ndarray:
        """Packed image of every packed input, indexed by input."""
        imgs = (all_bit_strings(self.ncols).astype(np.int64) @ self._data.T) % 2
        weights = 1 << np.arange(self.nrows - 1, -1, -1, dtype=np.int64)
        return imgs @ weights if self.nrows else np.zeros(1 << self.ncols, dtype=np.int64)

    def __eq__(self, other) -> bool:
        return (isinstance(other, BitMatrix) and self.shape == other.shape
                and np.array_equal(self._data, other._data))

    def __hash__(self) -> int:
        return hash((self.shape, self._data.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.to_text()!r}, shape={self.shape})"


def _row_reduce(a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form, pivoting on the lowest available index."""
    m = a.copy().astype(np.uint8)
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(m[r:, c])
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            m[[r, p]] = m[[p, r]]
        hits = np.flatnonzero(m[:, c])
        hits = hits[hits != r]
        m[hits] ^= m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def _data(m) -> np.ndarray:
    return m.data if isinstance(m, BitMatrix) else _as_bits(np.atleast_2d(m))


def rank(m) -> int:
    return len(_row_reduce(_data(m))[1])


def kernel_basis(m) -> BitMatrix:
    """Basis of ``{x : M x = 0}``, one vector per row."""
    a = _data(m)
    cols = a.shape[1]
    red, pivots = _row_reduce(a)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        x = np.zeros(cols, dtype=np.uint8)
        x[f] = 1
        for i, p in enumerate(pivots):
            x[p] = red[i, f]
        basis.append(x)
    return BitMatrix.from_rows(basis, ncols=cols)


def solve(m, b) -> np.ndarray:
    """One solution of ``M x = b``; free variables are set to zero.

    Raises:
        ValueError: if the system is inconsistent.
    """
    a = _data(m)
    b = _as_bits(b).reshape(-1, 1)
    aug = np.hstack([a, b])
    red, pivots = _row_reduce(aug)
    cols = a.shape[1]
    if cols in pivots:
        raise ValueError("inconsistent GF(2) system")
    x = np.zeros(cols, dtype=np.uint8)
    for i, p in enumerate(pivots):
        x[p] = red[i, cols]
    return x


def inverse(m) -> BitMatrix:
    a = _data(m)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    red, pivots = _row_reduce(np.hstack([a, np.eye(n, dtype=np.uint8)]))
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular over GF(2)")
    return BitMatrix(red[:, n:])


def complete_check_matrix(g: BitMatrix) -> BitMatrix:
    """Full-rank ``h`` with ``h g^T = 0``; rows span the kernel of ``g``."""
    if rank(g) != g.nrows:
        raise ValueError("g must have full row rank")
    return kernel_basis(g)


def extend_basis(g: BitMatrix, h: BitMatrix) -> BitMatrix:
    """Invertible ``v`` whose first rows are ``g`` and whose extra rows
    ``v_{m+i}`` satisfy ``v_{m+i} . h_j = delta_ij``.

    The extra rows are independent of ``g`` automatically: pairing a
    vanishing combination with each ``h_j`` kills the extra coefficients,
    and the rank of ``g`` kills the rest. The final rank test only guards
    against malformed inputs.
    """
    m, n = g.shape
    if h.shape != (n - m, n):
        raise ValueError("h has the wrong shape for g")
    if np.any((g @ h.T).data):
        raise ValueError("h g^T must vanish")
    extra = [solve(h, np.eye(n - m, dtype=np.uint8)[i]) for i in range(n - m)]
    v = BitMatrix(np.vstack([g.data] + [e[None, :] for e in extra]))
    if rank(v) != n:
        raise ValueError("g and h do not complete to a basis")
    return v


@dataclass(frozen=True)
class LinearHashFamily:
    """Distribution over m-by-n GF(2) matrices with exact probabilities."""

    n: int
    m: int
    members: tuple[tuple[BitMatrix, Fraction], ...]
    require_full_rank: bool = True

    def __post_init__(self):
        if not self.members:
            raise ValueError("family is empty")
        total = sum(p for _, p in self.members)
        if total != 1:
            raise ValueError(f"probabilities sum to {total}")
        for g, p in self.members:
            if g.shape != (self.m, self.n):
                raise ValueError("member shape mismatch")
            if p <= 0:
                raise ValueError("probabilities must be positive")
            if self.require_full_rank and rank(g) != self.m:
                raise ValueError("member is not surjective")

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def to_json(self) -> dict:
        return {"n": self.n, "m": self.m,
                "require_full_rank": self.require_full_rank,
                "members": [[g.to_text(), str(p)] for g, p in self.members]}

    @classmethod
    def from_json(cls, obj: dict) -> "LinearHashFamily":
        n, m = int(obj["n"]), int(obj["m"])
        members = tuple((BitMatrix.from_text(t, ncols=n), Fraction(p))
                        for t, p in obj["members"])
        return cls(n, m, members, bool(obj.get("require_full_rank", True)))


def uniform_family(n: int, m: int, mats: Sequence[BitMatrix],
                   require_full_rank: bool = True) -> LinearHashFamily:
    p = Fraction(1, len(mats))
    return LinearHashFamily(n, m, tuple((g, p) for g in mats), require_full_rank)


def toeplitz_matrix(seed: Sequence[int], n: int, m: int) -> BitMatrix:
    """Toeplitz ``m x n`` matrix with ``T[i, j] = seed[i - j + n - 1]``."""
    seed = _as_bits(seed)
    if seed.size != n + m - 1:
        raise ValueError("Toeplitz seed needs n + m - 1 bits")
    i = np.arange(m)[:, None]
    j = np.arange(n)[None, :]
    return BitMatrix(seed[i - j + n - 1])


def toeplitz_family(n: int, m: int, full_rank_only: bool = True) -> LinearHashFamily:
    """Uniform Toeplitz family over all seeds.

    With ``full_rank_only`` the rank-deficient members are dropped and the
    rest renormalized. Only the unfiltered family is guaranteed universal2.
    """
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    mats = [toeplitz_matrix(s, n, m)
            for s in itertools.product((0, 1), repeat=n + m - 1)]
    if full_rank_only:
        mats = [g for g in mats if rank(g) == m]
    return uniform_family(n, m, mats, require_full_rank=full_rank_only)


def full_rank_family(n: int, m: int) -> LinearHashFamily:
    """Uniform distribution over every surjective ``m x n`` matrix."""
    if not 1 <= m <= n or m * n > 24:
        raise ValueError("family too large to enumerate")
    mats = []
    for bits in itertools.product((0, 1), repeat=m * n):
        g = np.array(bits, dtype=np.uint8).reshape(m, n)
        if rank(g) == m:
            mats.append(BitMatrix(g))
    return uniform_family(n, m, mats)


def collision_probability(family: LinearHashFamily) -> Fraction:
    """Exact ``max_{a != a'} Pr[G a = G a']``.

    For linear members a collision only depends on ``a ^ a'``, so the
    maximum runs over nonzero differences.
    """
    n = family.n
    if n > 16:
        raise ValueError("input space too large")
    if n == 0:
        return Fraction(0)
    denom = math.lcm(*(p.denominator for _, p in family.members))
    weights = np.array([p.numerator * (denom // p.denominator) for _, p in family.members],
                       dtype=object)
    mats = np.stack([g.data for g, _ in family.members]).astype(np.int64)
    deltas = all_bit_strings(n)[1:].astype(np.int64)
    images = np.einsum("gij,dj->gdi", mats, deltas) % 2
    collide = ~images.any(axis=2)
    worst = max(int(weights[collide[:, d]].sum()) if collide[:, d].any() else 0
                for d in range(deltas.shape[0]))
    return Fraction(worst, denom)


def is_universal2(family: LinearHashFamily) -> bool:
    return collision_probability(family) <= Fraction(1, 2 ** family.m)


def coset_leader(h: BitMatrix, syndrome: Sequence[int]) -> np.ndarray:
    """Minimum-weight ``x`` with ``h x = syndrome``; ties go to the smallest
    packed value."""
    n = h.ncols
    target = _as_bits(syndrome)
    best = None
    for x in all_bit_strings(n):
        if np.array_equal(h @ x, target):
            w = hamming_weight(x)
            if best is None or w < best[0]:
                best = (w, x)
    if best is None:
        raise ValueError("syndrome not reachable")
    return best[1].copy()
