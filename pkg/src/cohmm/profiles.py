"""Symbolic observation densities.

A profile is a rational linear combination of atoms:

* ``Gaussian(mu, sigma)``: normal density,
* ``Exponential(rate)``: ``rate * exp(-rate * x)`` on ``[0, inf)``,
* ``Monomial(degree, lo, hi)``: ``x**degree`` on ``[lo, hi)``,
* ``Discrete(symbol)``: unit point mass on a finite side alphabet.

Distinct Gaussians, distinct exponentials and monomials supported on
pairwise disjoint intervals are linearly independent, so every finite set
of profiles has exact coordinates over a refined atom basis. Everything on
the decision path here is exact; floats appear only in evaluation, lint and
the alternant probe.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from . import kernels
from .linalg import ZERO, _int_vector, as_fraction, solve_in_span

LINT_EPS = 1e-9
DEFAULT_GRID = 10_000

INDEPENDENT = "independent"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Gaussian:
    mu: Fraction
    sigma: Fraction

    def __post_init__(self):
        object.__setattr__(self, "mu", as_fraction(self.mu))
        object.__setattr__(self, "sigma", as_fraction(self.sigma))
        if self.sigma <= 0:
            raise ValueError(f"Gaussian sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class Exponential:
    rate: Fraction

    def __post_init__(self):
        object.__setattr__(self, "rate", as_fraction(self.rate))
        if self.rate <= 0:
            raise ValueError(f"exponential rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class Monomial:
    degree: int
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not isinstance(self.degree, int) or self.degree < 0:
            raise ValueError(f"monomial degree must be a non-negative int, got {self.degree!r}")
        object.__setattr__(self, "lo", as_fraction(self.lo))
        object.__setattr__(self, "hi", as_fraction(self.hi))
        if not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi})")


@dataclass(frozen=True)
class Discrete:
    symbol: str

    def __post_init__(self):
        if not isinstance(self.symbol, str) or not self.symbol:
            raise ValueError("discrete symbol must be a non-empty string")


Atom = Union[Gaussian, Exponential, Monomial, Discrete]


def atom_key(atom: Atom):
    """Total order on atoms: Gaussians by (sigma, mu), exponentials by rate
    descending, monomials by (start, degree, end), discrete atoms by symbol."""
    if isinstance(atom, Gaussian):
        return (0, atom.sigma, atom.mu)
    if isinstance(atom, Exponential):
        return (1, -atom.rate)
    if isinstance(atom, Monomial):
        return (2, atom.lo, atom.degree, atom.hi)
    return (3, atom.symbol)


def atom_mass(atom: Atom) -> Fraction:
    if isinstance(atom, Monomial):
        k = atom.degree + 1
        return (atom.hi**k - atom.lo**k) / k
    return Fraction(1)


@dataclass(frozen=True)
class ProfileExpr:
    """Rational linear combination of atoms, as a tuple of ``(coef, atom)``."""

    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((as_fraction(c), a) for c, a in self.terms))

    @classmethod
    def atom(cls, atom: Atom, coef=1) -> ProfileExpr:
        return cls(((coef, atom),))

    def __add__(self, other: ProfileExpr) -> ProfileExpr:
        return ProfileExpr(self.terms + other.terms)

    def __sub__(self, other: ProfileExpr) -> ProfileExpr:
        return self + (-other)

    def __neg__(self) -> ProfileExpr:
        return ProfileExpr(tuple((-c, a) for c, a in self.terms))

    def __mul__(self, c) -> ProfileExpr:
        c = as_fraction(c)
        return ProfileExpr(tuple((c * k, a) for k, a in self.terms))

    __rmul__ = __mul__

    def atoms(self) -> list[Atom]:
        return [a for _, a in self.terms]

    def __str__(self):
        return format_profile(self)


def _merge_equal(terms):
    acc: dict = {}
    for c, a in terms:
        acc[a] = acc.get(a, ZERO) + c
    return [(c, a) for a, c in acc.items() if c]


def _merge_touching(terms):
    # c*x^k on [a,b) + c*x^k on [b,e) -> c*x^k on [a,e)
    mono = sorted(
        ((c, a) for c, a in terms if isinstance(a, Monomial)),
        key=lambda t: (t[1].degree, t[0], t[1].lo),
    )
    rest = [(c, a) for c, a in terms if not isinstance(a, Monomial)]
    out = []
    for c, a in mono:
        if out:
            pc, pa = out[-1]
            if pc == c and pa.degree == a.degree and pa.hi == a.lo:
                out[-1] = (c, Monomial(a.degree, pa.lo, a.hi))
                continue
        out.append((c, a))
    return rest + out


def canonicalize(p: ProfileExpr) -> ProfileExpr:
    """Merge equal atoms and touching equal-coefficient monomials, drop zeros,
    sort terms by :func:`atom_key`."""
    terms = _merge_equal(p.terms)
    while True:
        merged = _merge_equal(_merge_touching(terms))
        if len(merged) == len(terms):
            terms = merged
            break
        terms = merged
    terms.sort(key=lambda t: atom_key(t[1]))
    return ProfileExpr(tuple(terms))


def total_mass(p: ProfileExpr) -> Fraction:
    """Exact integral over the whole observation space."""
    return sum((c * atom_mass(a) for c, a in p.terms), ZERO)


# -- atom bases and coordinates --------------------------------------------

@dataclass(frozen=True)
class AtomBasis:
    atoms: tuple

    def __len__(self):
        return len(self.atoms)

    def index(self, atom: Atom) -> int:
        return self.atoms.index(atom)


def refine_atoms(profiles: Sequence[ProfileExpr]):
    """Common independent atom basis and exact coordinates of every profile.

    Monomial intervals are split at every endpoint that occurs anywhere in
    the input; the basis holds ``x**n`` on each resulting piece for every
    degree ``n`` that occurs. Returns ``(AtomBasis, [coordinate tuple, ...])``.
    """
    gauss, expo, disc = set(), set(), set()
    points, degrees = set(), set()
    spans = []
    for p in profiles:
        for _, a in p.terms:
            if isinstance(a, Gaussian):
                gauss.add(a)
            elif isinstance(a, Exponential):
                expo.add(a)
            elif isinstance(a, Discrete):
                disc.add(a)
            else:
                points.update((a.lo, a.hi))
                degrees.add(a.degree)
                spans.append((a.lo, a.hi))
    cuts = sorted(points)
    starts = cuts[:-1]
    # keep only the elementary pieces covered by some monomial
    covered = [False] * len(starts)
    for lo, hi in spans:
        for t in range(bisect.bisect_left(cuts, lo), bisect.bisect_left(cuts, hi)):
            covered[t] = True
    pieces = [(cuts[t], cuts[t + 1]) for t in range(len(starts)) if covered[t]]
    piece_starts = [lo for lo, _ in pieces]
    degs = sorted(degrees)

    atoms = sorted(gauss, key=atom_key) + sorted(expo, key=atom_key)
    mono_offset = len(atoms)
    atoms += [Monomial(k, lo, hi) for lo, hi in pieces for k in degs]
    atoms += sorted(disc, key=atom_key)
    basis = AtomBasis(tuple(atoms))
    where = {a: i for i, a in enumerate(atoms)}
    deg_pos = {k: i for i, k in enumerate(degs)}

    coords = []
    for p in profiles:
        v = [ZERO] * len(atoms)
        for c, a in p.terms:
            if isinstance(a, Monomial):
                first = bisect.bisect_left(piece_starts, a.lo)
                t = first
                while t < len(pieces) and pieces[t][1] <= a.hi:
                    v[mono_offset + t * len(degs) + deg_pos[a.degree]] += c
                    t += 1
            else:
                v[where[a]] += c
        coords.append(tuple(v))
    return basis, coords


def linear_decompose(profiles: Sequence[ProfileExpr]):
    """Select a basis among ``profiles`` and express every profile in it.

    Selection is greedy in input order. Returns ``(basis_indices,
    coefficients)`` where ``coefficients[i][k]`` is the weight of profile
    ``basis_indices[k]`` in profile ``i``.
    """
    if not profiles:
        raise ValueError("linear_decompose needs at least one profile")
    _, coords = refine_atoms(profiles)
    ech = kernels.Echelon(len(coords[0]))
    chosen = []
    for i, v in enumerate(coords):
        if not any(v):
            continue
        res = ech.reduce(_int_vector(v))
        if any(res):
            ech.insert(res)
            chosen.append(i)
    slot = {i: k for k, i in enumerate(chosen)}
    m = len(chosen)
    coefficients: list = [None] * len(profiles)
    rest = [i for i in range(len(profiles)) if i not in slot]
    solved = solve_in_span([coords[i] for i in chosen], [coords[i] for i in rest]) if rest else []
    for i, sol in zip(rest, solved):
        if sol is None:  # pragma: no cover - the greedy pass guarantees membership
            raise AssertionError("profile outside the span of the selected basis")
        coefficients[i] = sol
    for i, k in slot.items():
        row = [ZERO] * m
        row[k] = Fraction(1)
        coefficients[i] = row
    return chosen, coefficients


# -- numeric evaluation ----------------------------------------------------

_SQRT_2PI = math.sqrt(2 * math.pi)


def _atom_values(atom: Atom, x: np.ndarray) -> np.ndarray:
    if isinstance(atom, Gaussian):
        mu, s = float(atom.mu), float(atom.sigma)
        return np.exp(-((x - mu) ** 2) / (2 * s * s)) / (s * _SQRT_2PI)
    if isinstance(atom, Exponential):
        lam = float(atom.rate)
        with np.errstate(over="ignore"):
            return np.where(x >= 0, lam * np.exp(-lam * np.maximum(x, 0.0)), 0.0)
    if isinstance(atom, Monomial):
        inside = (x >= float(atom.lo)) & (x < float(atom.hi))
        return np.where(inside, x**atom.degree, 0.0)
    return np.zeros_like(x)


def evaluate_array(p: ProfileExpr, x) -> np.ndarray:
    """Vectorised float evaluation on the continuous part of the space."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for c, a in p.terms:
        out += float(c) * _atom_values(a, x)
    return out


def evaluate_numeric(p: ProfileExpr, x) -> float:
    """Float value of the density at ``x``.

    A string ``x`` is read as a discrete symbol and yields the point mass on
    that symbol; continuous atoms contribute nothing there.
    """
    if isinstance(x, str):
        return float(sum((c for c, a in p.terms if isinstance(a, Discrete) and a.symbol == x), ZERO))
    return float(evaluate_array(p, np.array([float(x)]))[0])


# -- non-negativity lint ---------------------------------------------------

@dataclass(frozen=True)
class Violation:
    """A run of negative grid values on ``[lo, hi]``, or a negative point mass."""

    lo: float
    hi: float
    min_value: float
    symbol: str | None = None


def _breakpoints(p: ProfileExpr) -> list[float]:
    pts = set()
    for _, a in p.terms:
        if isinstance(a, Gaussian):
            mu, s = float(a.mu), float(a.sigma)
            pts.update((mu - 10 * s, mu - 3 * s, mu, mu + 3 * s, mu + 10 * s))
        elif isinstance(a, Exponential):
            pts.update((0.0, 3.0 / float(a.rate), 40.0 / float(a.rate)))
        elif isinstance(a, Monomial):
            pts.update((float(a.lo), float(a.hi)))
    return sorted(pts)


def lint_grid(p: ProfileExpr, grid: int = DEFAULT_GRID) -> np.ndarray:
    """Sample points: ``grid`` per segment between breakpoints plus both tails."""
    pts = _breakpoints(p)
    if not pts:
        return np.empty(0)
    chunks = [np.linspace(lo, hi, grid, endpoint=False) for lo, hi in zip(pts, pts[1:])]
    width = max(pts[-1] - pts[0], 1.0)
    tail = np.geomspace(1e-9, 10 * width, max(grid // 10, 10))
    chunks += [pts[0] - tail[::-1], np.array([pts[-1]]), pts[-1] + tail]
    return np.unique(np.concatenate(chunks))


def nonnegativity_lint(p: ProfileExpr, grid: int = DEFAULT_GRID) -> list[Violation]:
    """Grid points where the density dips below ``-LINT_EPS``, merged into runs.

    Advisory only: a clean result does not prove non-negativity.
    """
    violations = []
    disc = {}
    for c, a in p.terms:
        if isinstance(a, Discrete):
            disc[a.symbol] = disc.get(a.symbol, ZERO) + c
    for sym, c in sorted(disc.items()):
        if c < 0:
            violations.append(Violation(math.nan, math.nan, float(c), symbol=sym))
    xs = lint_grid(p, grid)
    if xs.size == 0:
        return violations
    vals = evaluate_array(p, xs)
    bad = vals < -LINT_EPS
    if not bad.any():
        return violations
    idx = np.flatnonzero(bad)
    # split into runs of consecutive grid indices
    runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    for run in runs:
        hi_i = min(run[-1] + 1, xs.size - 1)
        violations.append(Violation(float(xs[run[0]]), float(xs[hi_i]), float(vals[run].min())))
    return violations


# -- alternant probe -------------------------------------------------------

def _sample_point(p: ProfileExpr, rng: np.random.Generator):
    terms = [(c, a) for c, a in p.terms if c]
    if not terms:
        return float(rng.normal())
    _, a = terms[rng.integers(len(terms))]
    if isinstance(a, Gaussian):
        return float(a.mu) + float(a.sigma) * float(rng.normal())
    if isinstance(a, Exponential):
        return float(rng.exponential(1.0 / float(a.rate)))
    if isinstance(a, Monomial):
        return float(rng.uniform(float(a.lo), float(a.hi)))
    return a.symbol


def alternant_probe(profiles: Sequence[ProfileExpr], trials: int = 20, rng_seed: int = 0, max_cond: float = 1e10) -> str:
    """Numerical witness of linear independence.

    Each trial draws one input point per function from that function's
    support, builds the alternant matrix and tests whether it is
    well-conditioned after column scaling. Returns ``"independent"`` as soon
    as one trial succeeds and ``"undetermined"`` otherwise; floats can never
    certify dependence.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = len(profiles)
    if n == 0:
        return INDEPENDENT
    rng = np.random.default_rng(rng_seed)
    for _ in range(trials):
        pts = [_sample_point(p, rng) for p in profiles]
        A = np.array([[evaluate_numeric(f, x) for f in profiles] for x in pts])
        scale = np.abs(A).max(axis=0)
        if not np.all(scale > 0):
            continue
        A = A / scale
        if np.isfinite(A).all() and np.linalg.cond(A) < max_cond:
            return INDEPENDENT
    return UNDETERMINED


# -- text form -------------------------------------------------------------

def format_rational(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def format_atom(a: Atom) -> str:
    r = format_rational
    if isinstance(a, Gaussian):
        return f"N({r(a.mu)},{r(a.sigma)})"
    if isinstance(a, Exponential):
        return f"Exp({r(a.rate)})"
    if isinstance(a, Monomial):
        return f"Mono({a.degree},{r(a.lo)},{r(a.hi)})"
    return f"Dirac({a.symbol})"


def format_profile(p: ProfileExpr) -> str:
    """Text form accepted by :func:`cohmm.parser.parse_profile`."""
    if not p.terms:
        return "0"
    parts = []
    for i, (c, a) in enumerate(p.terms):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = format_atom(a) if mag == 1 else f"{format_rational(mag)}*{format_atom(a)}"
        if i == 0:
            parts.append(body if sign == "+" else f"-{body}")
        else:
            parts.append(f" {sign} {body}")
    return "".join(parts)


def profile_from_atoms(pairs: Iterable[tuple]) -> ProfileExpr:
    return canonicalize(ProfileExpr(tuple(pairs)))
