"""Equivalence of initial distributions.

For a finite-observation HMM, ``pi1`` and ``pi2`` are equivalent iff
``pi1 - pi2`` is orthogonal to every ``M(w) 1``; a basis of that space comes
from :func:`cohmm.linalg.span_closure`. Continuous models are first reduced
to a finite HMM with the same matrix span (see :mod:`cohmm.hmm`).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

from .hmm import (
    ContinuousHMM,
    FiniteHMM,
    InitialDistribution,
    functional_decomposition,
    finite_reduction,
    labelling_reduction,
    nonneg_reduction,
    require_valid,
)
from .linalg import ONE, ZERO, dot, span_closure

METHODS = ("auto", "labelling", "nonneg", "theta")


@dataclass(frozen=True)
class EquivalenceVerdict:
    equivalent: bool
    witness: Optional[tuple]  # (word, value) with word a tuple of letters
    basis_dimension: int
    method: Optional[str] = None
    letters: dict = field(default_factory=dict, compare=False)  # letter -> ProfileExpr

    def __post_init__(self):
        if self.equivalent and self.witness is not None:
            raise ValueError("equivalent verdict cannot carry a witness")
        if not self.equivalent and (self.witness is None or self.witness[1] == 0):
            raise ValueError("non-equivalent verdict needs a witness with non-zero value")

    @property
    def word(self):
        return None if self.witness is None else self.witness[0]

    @property
    def value(self) -> Optional[Fraction]:
        return None if self.witness is None else self.witness[1]

    def to_json(self) -> dict:
        return {
            "equivalent": self.equivalent,
            "method": self.method,
            "witness": None if self.witness is None else list(self.witness[0]),
            "value": None if self.witness is None else str(self.witness[1]),
            "basis_dimension": self.basis_dimension,
        }


def _check_dims(f: FiniteHMM, *dists: InitialDistribution):
    for pi in dists:
        if len(pi) != f.size:
            raise ValueError(f"distribution has {len(pi)} entries, model has {f.size} states")


def check_finite(f: FiniteHMM, pi1: InitialDistribution, pi2: InitialDistribution) -> EquivalenceVerdict:
    """Decide ``pi1 == pi2`` on a finite-observation HMM.

    The witness, when present, is the shortest word whose basis vector is not
    orthogonal to ``pi1 - pi2``, together with ``(pi1 - pi2) M(w) 1``.
    """
    _check_dims(f, pi1, pi2)
    diff = tuple(a - b for a, b in zip(pi1.weights, pi2.weights))
    basis = span_closure((ONE,) * f.size, f.matrices)
    witness = None
    if any(diff):
        for vec, word in zip(basis.vectors, basis.witness_words):
            val = dot(diff, vec)
            if val:
                witness = (tuple(f.alphabet[a] for a in word), val)
                break
    return EquivalenceVerdict(witness is None, witness, len(basis))


def check_continuous(
    h: ContinuousHMM,
    pi1: InitialDistribution,
    pi2: InitialDistribution,
    *,
    fast_path: bool = True,
    method: str = "auto",
) -> EquivalenceVerdict:
    """Decide equivalence on a continuous-observation HMM.

    Pipeline: optional labelling fast path (sound for "equivalent" only),
    then the independent functional decomposition and either the direct
    non-negative reduction or the theta-scaled one. ``method`` forces a
    route: ``"labelling"`` returns the labelling verdict as is (which may
    wrongly report non-equivalence), ``"nonneg"`` fails when a decomposition
    matrix has a negative entry, ``"theta"`` always scales.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    require_valid(h)
    if method == "labelling" or (fast_path and method == "auto"):
        lab = labelling_reduction(h)
        v = check_finite(lab, pi1, pi2)
        if method == "labelling" or v.equivalent:
            return replace(v, method="labelling", letters=dict(zip(lab.alphabet, h.profiles())))
    f, used, letters = _reduce(h, method)
    return replace(check_finite(f, pi1, pi2), method=used, letters=letters)


def finite_prefix_probability(f: FiniteHMM, pi: InitialDistribution, word: Sequence) -> Fraction:
    """``pi M(w1) ... M(wn) 1``: probability that the trace starts with ``word``."""
    _check_dims(f, pi)
    row = pi.weights
    for letter in word:
        row = f.matrix(letter).vecmat(row)
    return sum(row, ZERO)


def verify_witness(f: FiniteHMM, pi1: InitialDistribution, pi2: InitialDistribution, word: Sequence) -> Fraction:
    return finite_prefix_probability(f, pi1, word) - finite_prefix_probability(f, pi2, word)


def reduce_model(h: ContinuousHMM, method: str = "auto") -> tuple[FiniteHMM, str, dict]:
    """The finite HMM a given method checks, with the method actually used
    and the letter-to-profile map."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    require_valid(h)
    return _reduce(h, method)


def _reduce(h: ContinuousHMM, method: str):
    if method == "labelling":
        lab = labelling_reduction(h)
        return lab, "labelling", dict(zip(lab.alphabet, h.profiles()))
    fd = functional_decomposition(h)
    f = None
    if method in ("auto", "nonneg"):
        f = nonneg_reduction(fd)
        if f is None and method == "nonneg":
            raise ValueError("decomposition has negative entries; the non-negative reduction does not apply")
    used = "nonneg" if f is not None else "theta"
    if f is None:
        f = finite_reduction(fd)
    return f, used, dict(zip(f.alphabet, fd.basis_profiles))
