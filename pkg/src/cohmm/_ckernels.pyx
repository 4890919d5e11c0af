# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled integer kernels; same contract as ``_pykernels``.

Entries stay Python ints (arbitrary precision), so the gain comes from
typed loop control and skipped attribute lookups, not from machine words.
"""

from math import gcd


cpdef list primitive(v):
    cdef Py_ssize_t i, n = len(v)
    g = gcd(*v)
    if g == 0:
        return list(v)
    for i in range(n):
        x = v[i]
        if x:
            if x < 0:
                g = -g
            break
    if g == 1:
        return list(v)
    return [x // g for x in v]


cpdef list sparse_matvec(list rows, list v):
    cdef list out = []
    cdef list row
    cdef Py_ssize_t j
    for row in rows:
        s = 0
        for j, a in row:
            x = v[j]
            if x:
                s += a * x
        out.append(s)
    return out


cdef class Echelon:
    cdef public Py_ssize_t n
    cdef public list rows
    cdef public list pivots

    def __init__(self, Py_ssize_t n):
        self.n = n
        self.rows = []
        self.pivots = []

    @property
    def rank(self):
        return len(self.rows)

    cpdef list reduce(self, v):
        cdef Py_ssize_t k, j, p, m = len(self.rows)
        cdef list c, row
        if len(v) != self.n:
            raise ValueError(f"vector length {len(v)} != {self.n}")
        c = list(v)
        for k in range(m):
            p = <Py_ssize_t>self.pivots[k]
            b = c[p]
            if b:
                row = <list>self.rows[k]
                a = row[p]
                g = gcd(a, b)
                a = a // g
                b = b // g
                for j in range(self.n):
                    y = row[j]
                    if y:
                        c[j] = a * c[j] - b * y
                    elif a != 1:
                        c[j] = a * c[j]
        return primitive(c)

    cpdef Py_ssize_t insert(self, list r) except -2:
        cdef Py_ssize_t j, k, p = -1, m = len(self.rows)
        cdef list row
        for j in range(self.n):
            if r[j]:
                p = j
                break
        if p < 0:
            raise ValueError("cannot insert a zero vector")
        a = r[p]
        for k in range(m):
            row = <list>self.rows[k]
            b = row[p]
            if b:
                g = gcd(a, b)
                self.rows[k] = primitive([(a // g) * x - (b // g) * y for x, y in zip(row, r)])
        self.rows.append(list(r))
        self.pivots.append(p)
        return p
