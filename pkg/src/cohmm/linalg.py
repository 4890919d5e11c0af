"""Exact rational vectors and matrices, row reduction and span closure.

Scalars are :class:`fractions.Fraction`. Vectors are tuples of Fractions.
Matrices are dense and immutable; a sparse view of the non-zero entries is
cached because most matrices built from HMMs are very sparse.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

from . import kernels

ZERO = Fraction(0)
ONE = Fraction(1)

RVector = tuple  # tuple[Fraction, ...]


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError(f"float {x!r} is not an exact rational")
    return Fraction(x)


def vector(entries: Iterable) -> RVector:
    return tuple(as_fraction(x) for x in entries)


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    if len(u) != len(v):
        raise ValueError(f"length mismatch {len(u)} != {len(v)}")
    s = ZERO
    for a, b in zip(u, v):
        if a and b:
            s += a * b
    return s


class RMatrix:
    """Dense rational matrix."""

    __slots__ = ("rows", "shape", "_nonzeros")

    def __init__(self, rows: Iterable[Iterable]):
        self.rows = tuple(vector(r) for r in rows)
        if not self.rows:
            raise ValueError("matrix needs at least one row")
        ncols = len(self.rows[0])
        if ncols == 0 or any(len(r) != ncols for r in self.rows):
            raise ValueError("ragged or empty matrix rows")
        self.shape = (len(self.rows), ncols)
        self._nonzeros = None

    @classmethod
    def zeros(cls, n: int, m: int | None = None) -> RMatrix:
        m = n if m is None else m
        return cls._from_rows(tuple((ZERO,) * m for _ in range(n)))

    @classmethod
    def identity(cls, n: int) -> RMatrix:
        return cls._from_rows(tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n)))

    @classmethod
    def from_entries(cls, n: int, m: int, entries: Iterable[tuple[int, int, Fraction]]) -> RMatrix:
        """Build from ``(i, j, value)`` triples; repeated positions are summed."""
        rows = [[ZERO] * m for _ in range(n)]
        for i, j, x in entries:
            rows[i][j] += as_fraction(x)
        return cls._from_rows(tuple(tuple(r) for r in rows))

    @classmethod
    def _from_rows(cls, rows: tuple) -> RMatrix:
        # trusted constructor: rows already tuples of Fractions
        self = object.__new__(cls)
        self.rows = rows
        self.shape = (len(rows), len(rows[0]))
        self._nonzeros = None
        return self

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        if not isinstance(other, RMatrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        body = "; ".join(" ".join(str(x) for x in r) for r in self.rows)
        return f"RMatrix[{body}]"

    def nonzeros(self) -> list[tuple[int, int, Fraction]]:
        if self._nonzeros is None:
            self._nonzeros = [(i, j, x) for i, r in enumerate(self.rows) for j, x in enumerate(r) if x]
        return self._nonzeros

    def sparse_rows(self) -> list[list[tuple[int, Fraction]]]:
        out = [[] for _ in range(self.shape[0])]
        for i, j, x in self.nonzeros():
            out[i].append((j, x))
        return out

    def _combine(self, other: RMatrix, a: Fraction, b: Fraction) -> RMatrix:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} != {other.shape}")
        rows = [list(r) for r in self.rows] if a == 1 else [[a * x for x in r] for r in self.rows]
        for i, j, x in other.nonzeros():
            rows[i][j] += b * x
        return RMatrix._from_rows(tuple(tuple(r) for r in rows))

    def __add__(self, other: RMatrix) -> RMatrix:
        return self._combine(other, ONE, ONE)

    def __sub__(self, other: RMatrix) -> RMatrix:
        return self._combine(other, ONE, -ONE)

    def scale(self, c) -> RMatrix:
        c = as_fraction(c)
        n, m = self.shape
        rows = [[ZERO] * m for _ in range(n)]
        for i, j, x in self.nonzeros():
            rows[i][j] = c * x
        return RMatrix._from_rows(tuple(tuple(r) for r in rows))

    def transpose(self) -> RMatrix:
        return RMatrix._from_rows(tuple(zip(*self.rows)))

    def matvec(self, v: Sequence[Fraction]) -> RVector:
        """Column action ``M v``."""
        if len(v) != self.shape[1]:
            raise ValueError(f"dimension mismatch {self.shape} vs {len(v)}")
        out = [ZERO] * self.shape[0]
        for i, j, x in self.nonzeros():
            y = v[j]
            if y:
                out[i] += x * y
        return tuple(out)

    def vecmat(self, v: Sequence[Fraction]) -> RVector:
        """Row action ``v M``."""
        if len(v) != self.shape[0]:
            raise ValueError(f"dimension mismatch {len(v)} vs {self.shape}")
        out = [ZERO] * self.shape[1]
        for i, j, x in self.nonzeros():
            y = v[i]
            if y:
                out[j] += y * x
        return tuple(out)

    def __matmul__(self, other):
        if isinstance(other, RMatrix):
            if self.shape[1] != other.shape[0]:
                raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
            return RMatrix._from_rows(tuple(other.vecmat(r) for r in self.rows))
        return self.matvec(other)

    def row_sums(self) -> RVector:
        return tuple(sum(r, ZERO) for r in self.rows)

    def is_nonnegative(self) -> bool:
        return all(x > 0 for _, _, x in self.nonzeros())

    def is_stochastic(self) -> bool:
        return self.is_nonnegative() and all(s == 1 for s in self.row_sums())


# -- integer scaling -------------------------------------------------------

def _int_vector(v: Sequence[Fraction]) -> list[int]:
    d = lcm(*(x.denominator for x in v)) if v else 1
    return kernels.primitive([x.numerator * (d // x.denominator) for x in v])


def _int_sparse_rows(m: RMatrix) -> list[list[tuple[int, int]]]:
    nz = m.nonzeros()
    d = lcm(*(x.denominator for _, _, x in nz)) if nz else 1
    out = [[] for _ in range(m.shape[0])]
    for i, j, x in nz:
        out[i].append((j, x.numerator * (d // x.denominator)))
    return out


# -- row reduction ---------------------------------------------------------

def rref(m: RMatrix) -> tuple[RMatrix, int, list[int]]:
    """Exact reduced row-echelon form.

    Returns ``(reduced, rank, pivot_cols)``; ``reduced`` has the same shape
    as ``m`` with the zero rows at the bottom.
    """
    n, k = m.shape
    ech = kernels.Echelon(k)
    for r in m.rows:
        res = ech.reduce(_int_vector(r))
        if any(res):
            ech.insert(res)
    order = sorted(range(ech.rank), key=lambda t: ech.pivots[t])
    rows = []
    pivots = []
    for t in order:
        row, p = ech.rows[t], ech.pivots[t]
        lead = row[p]
        rows.append(tuple(Fraction(x, lead) if x else ZERO for x in row))
        pivots.append(p)
    rows.extend((ZERO,) * k for _ in range(n - len(rows)))
    return RMatrix._from_rows(tuple(rows)), len(pivots), pivots


def rank(vectors: Sequence[Sequence[Fraction]]) -> int:
    if not vectors:
        return 0
    ech = kernels.Echelon(len(vectors[0]))
    for v in vectors:
        res = ech.reduce(_int_vector(v))
        if any(res):
            ech.insert(res)
    return ech.rank


def solve_in_span(basis: Sequence[Sequence[Fraction]], targets: Sequence[Sequence[Fraction]]):
    """Coordinates of each target in a linearly independent ``basis``.

    Returns one entry per target: a list of coefficients, or ``None`` when the
    target lies outside the span. Raises ``ValueError`` for a dependent basis.
    """
    m = len(basis)
    if m == 0:
        return [None if any(t) else [] for t in targets]
    n = len(basis[0])
    if any(len(b) != n for b in basis) or any(len(t) != n for t in targets):
        raise ValueError("dimension mismatch")
    width = m + len(targets)
    # one row per coordinate of the ambient space: [basis entries | target entries]
    rows = []
    for c in range(n):
        row = [b[c] for b in basis] + [t[c] for t in targets]
        if any(row):
            rows.append(row)
    pivot_row = {}
    r = 0
    for col in range(m):
        sel = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if sel is None:
            raise ValueError("basis vectors are linearly dependent")
        rows[r], rows[sel] = rows[sel], rows[r]
        piv = rows[r]
        inv = 1 / piv[col]
        piv = [x * inv if x else ZERO for x in piv]
        rows[r] = piv
        nzc = [j for j in range(col, width) if piv[j]]
        for i in range(len(rows)):
            if i != r:
                f = rows[i][col]
                if f:
                    row = rows[i]
                    for j in nzc:
                        row[j] -= f * piv[j]
        pivot_row[col] = r
        r += 1
    out = []
    for t in range(len(targets)):
        j = m + t
        if any(rows[i][j] for i in range(r, len(rows))):
            out.append(None)
        else:
            out.append([rows[pivot_row[col]][j] for col in range(m)])
    return out


def coordinates_in_span(v: Sequence[Fraction], basis: Sequence[Sequence[Fraction]]):
    """Exact coefficients ``c`` with ``v == sum(c[i] * basis[i])``, or ``None``."""
    return solve_in_span(basis, [v])[0]


# -- span closure ----------------------------------------------------------

@dataclass(frozen=True)
class SpanBasis:
    dimension: int
    vectors: tuple
    witness_words: tuple

    def __len__(self):
        return len(self.vectors)


def span_closure(seed: Sequence[Fraction], generators: Sequence[RMatrix]) -> SpanBasis:
    """Basis of ``span{G(w) seed}`` over all words ``w`` of generator indices.

    Basis vectors are discovered breadth first, so each stored word is a
    shortest word producing a vector outside the span found so far. The
    membership tests run on integer-scaled copies; the stored vectors are the
    exact products ``G(w) seed``.
    """
    n = len(seed)
    for g in generators:
        if g.shape != (n, n):
            raise ValueError(f"generator shape {g.shape} does not match seed dimension {n}")
    seed = vector(seed)
    ech = kernels.Echelon(n)
    start = _int_vector(seed)
    if not any(start):
        return SpanBasis(n, (), ())
    ech.insert(ech.reduce(start))
    int_gens = [_int_sparse_rows(g) for g in generators]
    vectors = [seed]
    words = [()]
    ints = [start]
    i = 0
    while i < len(vectors) and ech.rank < n:
        for a, g in enumerate(int_gens):
            cand = kernels.sparse_matvec(g, ints[i])
            res = ech.reduce(cand)
            if any(res):
                ech.insert(res)
                vectors.append(generators[a].matvec(vectors[i]))
                words.append((a,) + words[i])
                ints.append(kernels.primitive(cand))
                if ech.rank == n:
                    break
        i += 1
    return SpanBasis(n, tuple(vectors), tuple(words))


def apply_word(seed: Sequence[Fraction], generators: Sequence[RMatrix], word: Sequence[int]) -> RVector:
    """``G(w) seed`` with ``G(a1 ... ak) = G(a1) ... G(ak)``."""
    v = vector(seed)
    for a in reversed(word):
        v = generators[a].matvec(v)
    return v
