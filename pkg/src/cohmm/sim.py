"""Monte Carlo oracle: trace sampling, two-sample tests, cylinder probabilities.

Nothing here is on the exact decision path. The sampler and the chi-square
comparison give an independent, statistical check of verdicts; cylinder
probabilities are float evaluations of ``pi (int_B1 Psi) ... (int_Bn Psi) 1``.

Traces are produced in fixed-size chunks, chunk ``c`` drawing from
``SeedSequence([seed, c])``, so the result for a seed does not depend on how
many workers run the chunks.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr
from scipy.stats import chi2_contingency

from .hmm import ContinuousHMM, InitialDistribution, require_valid
from .profiles import (
    Discrete,
    Exponential,
    Gaussian,
    Monomial,
    ProfileExpr,
    nonnegativity_lint,
)

CHUNK = 8192
BISECT_TOL = 1e-12


class SamplingError(ValueError):
    pass


# -- per-profile samplers --------------------------------------------------

def _atom_cdf(atom, x: np.ndarray) -> np.ndarray:
    """``int_{-inf}^x atom``; monomials may be signed, which is fine here."""
    if isinstance(atom, Gaussian):
        return ndtr((x - float(atom.mu)) / float(atom.sigma))
    if isinstance(atom, Exponential):
        return np.where(x > 0, -np.expm1(-float(atom.rate) * np.maximum(x, 0.0)), 0.0)
    k = atom.degree + 1
    lo, hi = float(atom.lo), float(atom.hi)
    t = np.clip(x, lo, hi)
    return (t**k - lo**k) / k


def _support(atom) -> tuple[float, float]:
    if isinstance(atom, Gaussian):
        mu, s = float(atom.mu), float(atom.sigma)
        return mu - 40 * s, mu + 40 * s
    if isinstance(atom, Exponential):
        return 0.0, 60.0 / float(atom.rate)
    return float(atom.lo), float(atom.hi)


def _direct_ok(c, atom) -> bool:
    if c <= 0:
        return False
    return not isinstance(atom, Monomial) or atom.lo >= 0 or atom.degree % 2 == 0


class _ProfileSampler:
    """Draws from one lint-clean profile.

    Non-negative mixtures of Gaussians, exponentials and non-negative
    monomials are sampled component-wise; anything else (signed
    combinations) goes through bisection on the continuous CDF.
    """

    def __init__(self, prof: ProfileExpr):
        self.prof = prof
        disc = {}
        cont = []
        for c, a in prof.terms:
            if isinstance(a, Discrete):
                disc[a.symbol] = disc.get(a.symbol, 0) + c
            else:
                cont.append((c, a))
        self.symbols = sorted(disc)
        self.disc_p = np.array([float(disc[s]) for s in self.symbols])
        self.cont = cont
        self.cont_mass = 1.0 - float(self.disc_p.sum())
        self.direct = all(_direct_ok(c, a) for c, a in cont)
        if cont:
            w = []
            for c, a in cont:
                if isinstance(a, Monomial):
                    k = a.degree + 1
                    w.append(float(c * (a.hi**k - a.lo**k) / k))
                else:
                    w.append(float(c))
            self.weights = np.array(w)
            ends = [_support(a) for _, a in cont]
            self.lo = min(e[0] for e in ends)
            self.hi = max(e[1] for e in ends)

    def cdf(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x)
        for c, a in self.cont:
            out += float(c) * _atom_cdf(a, x)
        return out

    def _bisect(self, u: np.ndarray) -> np.ndarray:
        lo = np.full_like(u, self.lo)
        hi = np.full_like(u, self.hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) <= BISECT_TOL * max(1.0, abs(self.lo), abs(self.hi)):
                break
        return 0.5 * (lo + hi)

    def _component(self, atom, rng, m: int) -> np.ndarray:
        if isinstance(atom, Gaussian):
            return float(atom.mu) + float(atom.sigma) * rng.standard_normal(m)
        if isinstance(atom, Exponential):
            return -np.log1p(-rng.random(m)) / float(atom.rate)
        k = atom.degree + 1
        lo, hi = float(atom.lo), float(atom.hi)
        if lo >= 0:
            # inverse of (x^k - lo^k) / (hi^k - lo^k)
            return (lo**k + rng.random(m) * (hi**k - lo**k)) ** (1.0 / k)
        # even degree with a negative end: symmetric, fall back to bisection
        single = _ProfileSampler(ProfileExpr(((Fraction(1), atom),)))
        mass = float(single.cdf(np.array([hi]))[0])
        return single._bisect(rng.random(m) * mass)

    def draw(self, rng: np.random.Generator, m: int):
        """``m`` draws as (float values, symbol codes); code -1 is continuous."""
        values = np.full(m, np.nan)
        codes = np.full(m, -1, dtype=np.int64)
        u = rng.random(m)
        if self.symbols:
            edges = np.cumsum(self.disc_p)
            codes = np.where(u < edges[-1], np.searchsorted(edges, u, side="right"), -1)
        cont = np.flatnonzero(codes < 0)
        if cont.size and self.cont:
            if self.direct:
                pick = rng.choice(len(self.cont), size=cont.size, p=self.weights / self.weights.sum())
                for t, (_, a) in enumerate(self.cont):
                    sel = cont[pick == t]
                    if sel.size:
                        values[sel] = self._component(a, rng, sel.size)
            else:
                values[cont] = self._bisect(rng.random(cont.size) * self.cdf(np.array([self.hi]))[0])
        return values, codes


@lru_cache(maxsize=4096)
def _sampler(prof: ProfileExpr) -> _ProfileSampler:
    bad = nonnegativity_lint(prof)
    if bad:
        raise SamplingError(f"cannot sample from {prof}: density is negative somewhere (min {bad[0].min_value:.3g})")
    return _ProfileSampler(prof)


# -- traces ----------------------------------------------------------------

@dataclass
class TraceBatch:
    """``count`` traces of length ``n`` in array form.

    ``values[t, k]`` holds the real observation or NaN; ``codes[t, k]`` is an
    index into ``symbols`` for discrete observations and -1 otherwise.
    """

    values: np.ndarray
    codes: np.ndarray
    symbols: tuple = field(default=())

    def __len__(self):
        return self.values.shape[0]

    def trace(self, t: int) -> list:
        return [self.symbols[c] if c >= 0 else float(v) for v, c in zip(self.values[t], self.codes[t])]

    def traces(self) -> list[list]:
        return [self.trace(t) for t in range(len(self))]


class _Chain:
    def __init__(self, h: ContinuousHMM):
        require_valid(h)
        n = h.size
        self.pairs = [[] for _ in range(n)]  # per state: (target, prob, profile)
        for i, j, p, prof in h.entries():
            self.pairs[i].append((j, float(p), prof))
        self.samplers = [[_sampler(prof) for _, _, prof in row] for row in self.pairs]
        self.cum = [np.cumsum([p for _, p, _ in row]) for row in self.pairs]
        self.targets = [np.array([j for j, _, _ in row], dtype=np.int64) for row in self.pairs]
        syms = sorted({s for row in self.samplers for smp in row for s in smp.symbols})
        self.symbols = tuple(syms)
        self.remap = [
            [np.array([syms.index(s) for s in smp.symbols], dtype=np.int64) for smp in row] for row in self.samplers
        ]

    def run(self, pi: np.ndarray, n: int, count: int, rng: np.random.Generator):
        values = np.full((count, n), np.nan)
        codes = np.full((count, n), -1, dtype=np.int64)
        state = np.searchsorted(np.cumsum(pi), rng.random(count) * pi.sum(), side="right")
        state = np.minimum(state, len(pi) - 1)
        for k in range(n):
            nxt = state.copy()
            for i in range(len(self.pairs)):
                rows = np.flatnonzero(state == i)
                if not rows.size:
                    continue
                cum = self.cum[i]
                pick = np.minimum(np.searchsorted(cum, rng.random(rows.size) * cum[-1], side="right"), cum.size - 1)
                nxt[rows] = self.targets[i][pick]
                for e, smp in enumerate(self.samplers[i]):
                    sel = rows[pick == e]
                    if not sel.size:
                        continue
                    v, c = smp.draw(rng, sel.size)
                    values[sel, k] = v
                    if smp.symbols:
                        codes[sel, k] = np.where(c >= 0, self.remap[i][e][np.maximum(c, 0)], -1)
            state = nxt
        return values, codes


def sample_traces(
    h: ContinuousHMM,
    pi: InitialDistribution,
    n: int,
    count: int,
    rng_seed: int = 0,
    workers: int = 1,
) -> TraceBatch:
    """``count`` independent length-``n`` traces under ``pi``.

    Refuses profiles that fail the non-negativity lint, since those are not
    densities one can draw from.
    """
    if n < 0 or count < 0:
        raise ValueError("n and count must be non-negative")
    chain = _Chain(h)
    pi_f = np.array([float(w) for w in pi.weights])
    chunks = [(c, min(CHUNK, count - c * CHUNK)) for c in range(math.ceil(count / CHUNK))]

    def work(job):
        c, m = job
        rng = np.random.default_rng(np.random.SeedSequence([rng_seed, c]))
        return chain.run(pi_f, n, m, rng)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(work, chunks))
    else:
        parts = [work(j) for j in chunks]
    if not parts:
        return TraceBatch(np.empty((0, n)), np.empty((0, n), dtype=np.int64), chain.symbols)
    return TraceBatch(
        np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]), chain.symbols
    )


def sample_trace(h: ContinuousHMM, pi: InitialDistribution, n: int, rng_seed: int = 0) -> list:
    return sample_traces(h, pi, n, 1, rng_seed).trace(0)


def sample_profile(prof: ProfileExpr, count: int, rng_seed: int = 0):
    """Draws from a single profile: a float array, or a list when discrete atoms occur."""
    smp = _sampler(prof)
    rng = np.random.default_rng(rng_seed)
    v, c = smp.draw(rng, count)
    if not smp.symbols:
        return v
    return [smp.symbols[k] if k >= 0 else float(x) for x, k in zip(v, c)]


def mod_pad(x: np.ndarray, u: float, rng: np.random.Generator) -> np.ndarray:
    """``(X + Y) mod u`` with ``Y ~ U[0, u)`` drawn independently."""
    return np.mod(np.asarray(x, dtype=float) + rng.random(np.shape(x)) * u, u)


# -- two-sample chi-square -------------------------------------------------

@dataclass(frozen=True)
class TwoSampleResult:
    passed: bool
    statistic: float
    p_value: float
    cells: int


def _cells(batches: Sequence[TraceBatch], bins: int) -> list[np.ndarray]:
    """Product-bin every trace prefix; continuous edges are pooled quantiles."""
    n = batches[0].values.shape[1]
    nsym = len(batches[0].symbols)
    radix = bins + nsym
    ids = [np.zeros(len(b), dtype=np.int64) for b in batches]
    for k in range(n):
        pooled = np.concatenate([b.values[:, k] for b in batches])
        pooled = pooled[~np.isnan(pooled)]
        edges = np.quantile(pooled, np.linspace(0, 1, bins + 1)[1:-1]) if pooled.size else np.empty(0)
        for t, b in enumerate(batches):
            col = b.codes[:, k]
            bucket = np.where(col >= 0, bins + col, np.searchsorted(edges, np.nan_to_num(b.values[:, k]), side="right"))
            ids[t] = ids[t] * radix + bucket
    return ids


def two_sample_check(
    h: ContinuousHMM,
    pi1: InitialDistribution,
    pi2: InitialDistribution,
    n: int = 3,
    samples: int = 100_000,
    bins: int = 4,
    alpha: float = 0.01,
    rng_seed: int = 0,
    min_expected: float = 5.0,
) -> TwoSampleResult:
    """Chi-square homogeneity test between the length-``n`` prefix laws.

    Cells whose expected count falls below ``min_expected`` are pooled into
    one remainder cell. ``passed`` means no rejection at level ``alpha``.
    """
    b1 = sample_traces(h, pi1, n, samples, rng_seed)
    b2 = sample_traces(h, pi2, n, samples, rng_seed + 1_000_003)
    ids1, ids2 = _cells([b1, b2], bins)
    keys, inv = np.unique(np.concatenate([ids1, ids2]), return_inverse=True)
    table = np.zeros((2, keys.size))
    np.add.at(table[0], inv[: ids1.size], 1)
    np.add.at(table[1], inv[ids1.size:], 1)
    col = table.sum(axis=0)
    expected_min = col * min(table.sum(axis=1)) / table.sum()
    small = expected_min < min_expected
    if small.any():
        table = np.column_stack([table[:, ~small], table[:, small].sum(axis=1)])
        table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return TwoSampleResult(True, 0.0, 1.0, table.shape[1])
    stat, p, _, _ = chi2_contingency(table, correction=False)
    return TwoSampleResult(bool(p >= alpha), float(stat), float(p), table.shape[1])


# -- cylinder probabilities ------------------------------------------------

@dataclass(frozen=True)
class Box:
    """One observation constraint: the interval ``[lo, hi)`` plus a set of symbols.

    ``None`` bounds are infinite. Exact (rational) bounds keep monomial
    integrals exact until the final conversion to float.
    """

    lo: Optional[object] = None
    hi: Optional[object] = None
    symbols: frozenset = frozenset()
    continuous: bool = True

    @classmethod
    def only_symbols(cls, *symbols) -> Box:
        return cls(symbols=frozenset(symbols), continuous=False)


def _atom_integral(atom, box: Box) -> float:
    if isinstance(atom, Discrete):
        return 1.0 if atom.symbol in box.symbols else 0.0
    if not box.continuous:
        return 0.0
    lo = -math.inf if box.lo is None else box.lo
    hi = math.inf if box.hi is None else box.hi
    if not lo < hi:
        return 0.0
    if isinstance(atom, Gaussian):
        mu, s = float(atom.mu), float(atom.sigma)
        return float(ndtr((float(hi) - mu) / s) - ndtr((float(lo) - mu) / s))
    if isinstance(atom, Exponential):
        lam = float(atom.rate)
        a, b = max(float(lo), 0.0), max(float(hi), 0.0)
        return math.exp(-lam * a) - math.exp(-lam * b)
    a = atom.lo if lo == -math.inf or lo < atom.lo else lo
    b = atom.hi if hi == math.inf or hi > atom.hi else hi
    if not a < b:
        return 0.0
    k = atom.degree + 1
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return float((Fraction(b) ** k - Fraction(a) ** k) / k)
    return (float(b) ** k - float(a) ** k) / k


def box_matrix(h: ContinuousHMM, box: Box) -> np.ndarray:
    """``int_box Psi`` as a float matrix."""
    m = np.zeros((h.size, h.size))
    for i, j, p, prof in h.entries():
        m[i, j] += float(p) * sum(float(c) * _atom_integral(a, box) for c, a in prof.terms)
    return m


def cylinder_probability(h: ContinuousHMM, pi: InitialDistribution, boxes: Sequence[Box]) -> float:
    row = np.array([float(w) for w in pi.weights])
    for b in boxes:
        row = row @ box_matrix(h, b)
    return float(row.sum())


def candidate_boxes(h: ContinuousHMM) -> list[Box]:
    """Intervals between consecutive profile breakpoints, plus each symbol."""
    pts = set()
    syms = set()
    for _, _, _, prof in h.entries():
        for _, a in prof.terms:
            if isinstance(a, Gaussian):
                pts.update((a.mu - a.sigma, a.mu, a.mu + a.sigma))
            elif isinstance(a, Exponential):
                pts.update((Fraction(0), 1 / a.rate, 3 / a.rate))
            elif isinstance(a, Monomial):
                pts.update((a.lo, (a.lo + a.hi) / 2, a.hi))
            else:
                syms.add(a.symbol)
    pts = sorted(pts)
    out = []
    if pts:
        out.append(Box(None, pts[0]))
        out += [Box(lo, hi) for lo, hi in zip(pts, pts[1:])]
        out.append(Box(pts[-1], None))
    out += [Box.only_symbols(s) for s in sorted(syms)]
    return out


def find_distinguishing_boxes(
    h: ContinuousHMM,
    pi1: InitialDistribution,
    pi2: InitialDistribution,
    max_length: int,
    threshold: float = 1e-8,
    max_evaluations: int = 200_000,
) -> Optional[tuple[Box, ...]]:
    """Search box sequences of increasing length for differing cylinder probabilities.

    Use the witness length of a non-equivalent verdict as ``max_length``.
    Returns ``None`` if nothing above ``threshold`` turns up within the budget.
    """
    cands = candidate_boxes(h)
    mats = [box_matrix(h, b) for b in cands]
    diff0 = np.array([float(a - b) for a, b in zip(pi1.weights, pi2.weights)])
    budget = max_evaluations
    for length in range(1, max_length + 1):
        for combo in itertools.product(range(len(cands)), repeat=length):
            budget -= 1
            if budget < 0:
                return None
            row = diff0
            for k in combo:
                row = row @ mats[k]
            if abs(row.sum()) > threshold:
                return tuple(cands[k] for k in combo)
    return None
