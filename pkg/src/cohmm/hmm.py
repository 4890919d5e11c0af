"""HMM models and the reductions from continuous to finite observations.

A :class:`ContinuousHMM` stores, for each ordered state pair, a tuple of
``(prob, profile)`` pairs: each pair is a transition that fires with
probability ``prob`` and emits an observation with density ``profile``. An
empty tuple is a structural zero; most entries hold a single pair, several
pairs on one edge express a mixture whose components keep separate labels.

Two reductions produce a :class:`FiniteHMM` over fresh letters ``a1..ad``:

* the labelling reduction gives every distinct profile its own letter; it
  is sound for equivalence but not complete;
* the decomposition route picks a linearly independent subset of the
  profiles, rewrites the transition matrix over it and then either uses the
  resulting matrices directly (when all are non-negative) or the theta-scaled
  matrices ``(P - theta*P_k) / (d - theta)``, which preserve the span and so
  decide equivalence exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .linalg import ONE, ZERO, RMatrix, as_fraction, rank
from .profiles import ProfileExpr, canonicalize, linear_decompose, nonnegativity_lint, total_mass


class InvalidModelError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        msg = "; ".join(str(d) for d in self.diagnostics if d.level == "error") or "invalid model"
        super().__init__(msg)


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" | "warning"
    message: str
    source: Optional[str] = None
    target: Optional[str] = None

    def __str__(self):
        where = f"{self.source} -> {self.target}: " if self.source is not None else ""
        return f"{self.level}: {where}{self.message}"


def letter_names(d: int) -> tuple[str, ...]:
    return tuple(f"a{k + 1}" for k in range(d))


def _entry(e):
    if e is None:
        return ()
    if len(e) == 2 and isinstance(e[1], ProfileExpr):
        e = (e,)
    return tuple((as_fraction(p), canonicalize(prof)) for p, prof in e)


@dataclass(frozen=True)
class ContinuousHMM:
    states: tuple
    psi: tuple  # psi[i][j] is a tuple of (prob, ProfileExpr) pairs

    def __post_init__(self):
        states = tuple(self.states)
        if len(set(states)) != len(states):
            raise ValueError("duplicate state names")
        n = len(states)
        if len(self.psi) != n or any(len(row) != n for row in self.psi):
            raise ValueError(f"psi must be {n}x{n}")
        psi = tuple(tuple(_entry(e) for e in row) for row in self.psi)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "psi", psi)

    @classmethod
    def from_transitions(cls, states: Sequence, transitions) -> ContinuousHMM:
        """Build from ``(source, target, prob, profile)`` tuples."""
        index = {q: i for i, q in enumerate(states)}
        n = len(states)
        psi = [[None] * n for _ in range(n)]
        for src, dst, prob, prof in transitions:
            i, j = index[src], index[dst]
            psi[i][j] = (psi[i][j] or ()) + ((prob, prof),)
        return cls(tuple(states), tuple(tuple(r) for r in psi))

    @property
    def size(self) -> int:
        return len(self.states)

    def entries(self):
        """Every pair as ``(i, j, prob, profile)`` in row-major order."""
        for i, row in enumerate(self.psi):
            for j, e in enumerate(row):
                for p, prof in e:
                    yield i, j, p, prof

    def profiles(self) -> list[ProfileExpr]:
        """Distinct canonical profiles in row-major order of first appearance."""
        seen = {}
        for _, _, _, prof in self.entries():
            seen.setdefault(prof, None)
        return list(seen)

    def transition_matrix(self) -> RMatrix:
        n = self.size
        return RMatrix.from_entries(n, n, ((i, j, p) for i, j, p, _ in self.entries()))

    def permuted(self, order: Sequence[int]) -> ContinuousHMM:
        """Reorder states: new state ``k`` is old state ``order[k]``."""
        psi = tuple(tuple(self.psi[i][j] for j in order) for i in order)
        return ContinuousHMM(tuple(self.states[i] for i in order), psi)


@dataclass(frozen=True)
class FiniteHMM:
    states: tuple
    alphabet: tuple
    matrices: tuple  # one RMatrix per letter

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "matrices", tuple(self.matrices))
        n = len(self.states)
        if len(self.alphabet) != len(self.matrices):
            raise ValueError("one matrix per letter required")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("duplicate letters")
        for m in self.matrices:
            if m.shape != (n, n):
                raise ValueError(f"matrix shape {m.shape} does not match {n} states")

    @property
    def size(self) -> int:
        return len(self.states)

    def matrix(self, letter) -> RMatrix:
        try:
            return self.matrices[self.alphabet.index(letter)]
        except ValueError:
            raise ValueError(f"unknown letter {letter!r}") from None

    def total(self) -> RMatrix:
        n = self.size
        return RMatrix.from_entries(n, n, (e for m in self.matrices for e in m.nonzeros()))

    def validate(self) -> list[Diagnostic]:
        out = []
        for a, m in zip(self.alphabet, self.matrices):
            if not m.is_nonnegative():
                out.append(Diagnostic("error", f"matrix for letter {a} has negative entries"))
        for q, s in zip(self.states, self.total().row_sums()):
            if s != 1:
                out.append(Diagnostic("error", f"outgoing mass of {q} is {s}, expected 1"))
        return out


@dataclass(frozen=True)
class InitialDistribution:
    weights: tuple

    def __post_init__(self):
        w = tuple(as_fraction(x) for x in self.weights)
        if any(x < 0 for x in w):
            raise ValueError("initial distribution has negative weights")
        if sum(w, ZERO) != 1:
            raise ValueError(f"initial distribution sums to {sum(w, ZERO)}, expected 1")
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)

    @classmethod
    def dirac(cls, states: Sequence, state) -> InitialDistribution:
        return cls(tuple(ONE if q == state else ZERO for q in states))

    @classmethod
    def from_mapping(cls, states: Sequence, mapping: Mapping) -> InitialDistribution:
        unknown = set(mapping) - set(states)
        if unknown:
            raise ValueError(f"unknown states {sorted(map(str, unknown))}")
        return cls(tuple(as_fraction(mapping.get(q, 0)) for q in states))

    def permuted(self, order: Sequence[int]) -> InitialDistribution:
        return InitialDistribution(tuple(self.weights[i] for i in order))


@dataclass(frozen=True)
class FunctionalDecomposition:
    states: tuple
    basis_profiles: tuple
    matrices: tuple
    # coefficients[i][k]: weight of basis profile k in source profile i
    source_profiles: tuple = field(default=())
    coefficients: tuple = field(default=())

    @property
    def d(self) -> int:
        return len(self.matrices)

    def total(self) -> RMatrix:
        n = len(self.states)
        return RMatrix.from_entries(n, n, (e for m in self.matrices for e in m.nonzeros()))


# -- validation ------------------------------------------------------------

def validate(h: ContinuousHMM, lint: bool = True, grid: int = 2000) -> list[Diagnostic]:
    """Check the model; problems are returned, never raised.

    Errors: non-positive probabilities, densities whose mass is not 1, rows
    whose probabilities do not sum to 1. Warnings: numeric non-negativity
    lint findings (only when ``lint`` is set).
    """
    out = []
    names = h.states
    sums = [ZERO] * h.size
    for i, j, p, prof in h.entries():
        src, dst = names[i], names[j]
        if p <= 0:
            out.append(Diagnostic("error", f"probability {p} must be positive", src, dst))
        sums[i] += p
        mass = total_mass(prof)
        if mass != 1:
            out.append(Diagnostic("error", f"density has total mass {mass}, expected 1", src, dst))
    for q, s in zip(names, sums):
        if s != 1:
            out.append(Diagnostic("error", f"outgoing probabilities sum to {s}, expected 1", q))
    if lint:
        for prof in h.profiles():
            for v in nonnegativity_lint(prof, grid):
                where = f"point mass {v.symbol}" if v.symbol else f"[{v.lo:.6g}, {v.hi:.6g}]"
                out.append(Diagnostic("warning", f"density {prof} is negative on {where} (min {v.min_value:.3g})"))
    return out


def require_valid(h: ContinuousHMM, lint: bool = False) -> None:
    diags = validate(h, lint=lint)
    if any(d.level == "error" for d in diags):
        raise InvalidModelError(diags)


# -- reductions ------------------------------------------------------------

def _profile_matrices(h: ContinuousHMM, order: Optional[Sequence[ProfileExpr]] = None):
    """Profiles in order together with the matrices placing their probabilities."""
    profiles = list(order) if order is not None else h.profiles()
    slot = {p: k for k, p in enumerate(profiles)}
    entries = [[] for _ in profiles]
    for i, j, p, prof in h.entries():
        try:
            entries[slot[prof]].append((i, j, p))
        except KeyError:
            raise ValueError(f"profile {prof} missing from the given order") from None
    n = h.size
    return profiles, [RMatrix.from_entries(n, n, e) for e in entries]


def labelling_reduction(h: ContinuousHMM, order: Optional[Sequence[ProfileExpr]] = None) -> FiniteHMM:
    """One fresh letter per distinct canonical profile."""
    profiles, mats = _profile_matrices(h, order)
    return FiniteHMM(h.states, letter_names(len(profiles)), tuple(mats))


def functional_decomposition(h: ContinuousHMM, order: Optional[Sequence[ProfileExpr]] = None) -> FunctionalDecomposition:
    """Independent functional decomposition built from the model's own profiles.

    ``order`` fixes the order in which profiles are offered to the greedy
    basis selection (default: row-major first appearance).
    """
    profiles, mats = _profile_matrices(h, order)
    chosen, coeffs = linear_decompose(profiles)
    n = h.size
    P = []
    for k in range(len(chosen)):
        acc = {}
        for i, m in enumerate(mats):
            b = coeffs[i][k]
            if b:
                for r, c, x in m.nonzeros():
                    acc[(r, c)] = acc.get((r, c), ZERO) + b * x
        P.append(RMatrix.from_entries(n, n, ((r, c, x) for (r, c), x in acc.items())))
    return FunctionalDecomposition(
        h.states,
        tuple(profiles[i] for i in chosen),
        tuple(P),
        tuple(profiles),
        tuple(tuple(row) for row in coeffs),
    )


def theta(fd: FunctionalDecomposition) -> Fraction:
    """``min(1/2, min positive entry of P / max entry over all P_k)``."""
    P = fd.total()
    pos = [x for _, _, x in P.nonzeros() if x > 0]
    top = max((x for m in fd.matrices for _, _, x in m.nonzeros()), default=ZERO)
    if not pos or top <= 0:
        raise ValueError("decomposition has no positive entries")
    return min(Fraction(1, 2), min(pos) / top)


def finite_reduction(fd: FunctionalDecomposition) -> FiniteHMM:
    """Letters ``a_k`` with matrices ``(P - theta*P_k) / (d - theta)``."""
    t = theta(fd)
    P = fd.total()
    d = fd.d
    scale = 1 / (d - t)
    support = {(i, j) for i, j, _ in P.nonzeros()}
    for m in fd.matrices:
        support.update((i, j) for i, j, _ in m.nonzeros())
    n = len(fd.states)
    mats = []
    for Pk in fd.matrices:
        mats.append(
            RMatrix.from_entries(n, n, ((i, j, (P[i, j] - t * Pk[i, j]) * scale) for i, j in sorted(support)))
        )
    return FiniteHMM(fd.states, letter_names(d), tuple(mats))


def nonneg_reduction(fd: FunctionalDecomposition) -> Optional[FiniteHMM]:
    """Use the decomposition matrices as letters when all are non-negative."""
    if not all(m.is_nonnegative() for m in fd.matrices):
        return None
    return FiniteHMM(fd.states, letter_names(fd.d), fd.matrices)


def matrix_span_rank(mats: Sequence[RMatrix]) -> int:
    """Rank of the matrices viewed as flattened vectors."""
    return rank([tuple(x for r in m.rows for x in r) for m in mats])
