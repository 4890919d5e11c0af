"""Pure-Python integer kernels.

Reference implementation of the hot loops used by the exact linear algebra
layer. ``_ckernels.pyx`` mirrors this module function for function; the
pair is selected in :mod:`cohmm.kernels`.

Vectors are plain lists of Python ints and are only meaningful up to a
non-zero scalar factor, which is all that span computations need.
"""

from math import gcd


def primitive(v):
    """Divide ``v`` by the gcd of its entries; first non-zero entry positive."""
    g = gcd(*v)
    if g == 0:
        return list(v)
    for x in v:
        if x:
            if x < 0:
                g = -g
            break
    if g == 1:
        return list(v)
    return [x // g for x in v]


def sparse_matvec(rows, v):
    """Multiply a sparse integer matrix (rows of ``(col, value)`` pairs) by ``v``."""
    out = []
    for row in rows:
        s = 0
        for j, a in row:
            x = v[j]
            if x:
                s += a * x
        out.append(s)
    return out


class Echelon:
    """Fraction-free reduced echelon form over the integers.

    Every stored row has a distinct pivot column and is zero in the pivot
    columns of all other rows, so reducing a vector is order independent.
    """

    def __init__(self, n):
        self.n = n
        self.rows = []
        self.pivots = []

    @property
    def rank(self):
        return len(self.rows)

    def reduce(self, v):
        """Return the primitive residual of ``v``; all zeros iff ``v`` is in the span."""
        if len(v) != self.n:
            raise ValueError(f"vector length {len(v)} != {self.n}")
        c = list(v)
        for row, p in zip(self.rows, self.pivots):
            b = c[p]
            if b:
                a = row[p]
                g = gcd(a, b)
                a //= g
                b //= g
                c = [a * x - b * y for x, y in zip(c, row)]
        return primitive(c)

    def insert(self, r):
        """Add a residual returned by :meth:`reduce`; returns its pivot column."""
        p = -1
        for j, x in enumerate(r):
            if x:
                p = j
                break
        if p < 0:
            raise ValueError("cannot insert a zero vector")
        a = r[p]
        for k, row in enumerate(self.rows):
            b = row[p]
            if b:
                g = gcd(a, b)
                self.rows[k] = primitive([(a // g) * x - (b // g) * y for x, y in zip(row, r)])
        self.rows.append(list(r))
        self.pivots.append(p)
        return p
