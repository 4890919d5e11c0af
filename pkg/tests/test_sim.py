import math
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from cohmm.equivalence import check_continuous
from cohmm.hmm import ContinuousHMM, InitialDistribution
from cohmm.modelfile import load_bundled
from cohmm.parser import parse_profile as P
from cohmm.sim import (
    Box,
    SamplingError,
    candidate_boxes,
    cylinder_probability,
    find_distinguishing_boxes,
    mod_pad,
    sample_profile,
    sample_trace,
    sample_traces,
    two_sample_check,
)

seeds = st.integers(0, 2**32 - 1)
N = 100_000


def dirac(h, q):
    return InitialDistribution.dirac(h.states, q)


# -- sampler ---------------------------------------------------------------

@pytest.mark.stochastic
def test_exp_mean():
    x = sample_profile(P("Exp(2)"), N, 11)
    assert abs(x.mean() - 0.5) <= 3 * 0.5 / math.sqrt(N)


@pytest.mark.stochastic
def test_uniform_mean():
    x = sample_profile(P("U(-1,0)"), N, 12)
    assert abs(x.mean() + 0.5) <= 3 * math.sqrt(1 / 12) / math.sqrt(N)


@pytest.mark.stochastic
@pytest.mark.parametrize(
    "text, mean, var",
    [
        ("2*Mono(1,0,1)", 2 / 3, 1 / 18),
        ("2*Mono(0,0,1) - 2*Mono(1,0,1)", 1 / 3, 1 / 18),
        ("2*Exp(1) - Exp(2)", 1.5, 1.25),
        ("N(3,2)", 3.0, 4.0),
        ("3*Mono(2,-1,0)", -0.75, 3 / 80),
        ("1/2*N(0,1) + 1/2*U(4,6)", 2.5, 0.5 + 0.5 * (1 / 3 + 25) - 6.25),
    ],
)
def test_profile_moments(text, mean, var):
    x = sample_profile(P(text), N, 13)
    assert abs(x.mean() - mean) <= 4 * math.sqrt(var / N)


@pytest.mark.stochastic
def test_discrete_atoms():
    x = sample_profile(P("1/4*Dirac(a) + 3/4*Dirac(b)"), N, 14)
    share = sum(1 for v in x if v == "a") / N
    assert abs(share - 0.25) <= 4 * math.sqrt(0.25 * 0.75 / N)


@pytest.mark.stochastic
@pytest.mark.parametrize("text", ["2*Exp(1) - Exp(2)", "N(7/3,5)", "2*Mono(1,0,1)", "U(13/10,29/10)"])
def test_mod_padding_is_uniform(text):
    u = 1.0
    rng = np.random.default_rng(15)
    y = mod_pad(sample_profile(P(text), N, 16), u, rng)
    counts, _ = np.histogram(y, bins=20, range=(0, u))
    assert chisquare(counts).pvalue >= 0.01


def test_negative_profile_refused():
    with pytest.raises(SamplingError):
        sample_profile(P("2*Mono(0,0,1) - Mono(0,1,2)"), 10)
    h = ContinuousHMM.from_transitions(["q"], [("q", "q", 1, P("2*Mono(0,0,1) - Mono(0,1,2)"))])
    with pytest.raises(SamplingError):
        sample_trace(h, dirac(h, "q"), 3)


def test_seed_determinism_and_workers():
    h = load_bundled("exp_uniform").hmm
    pi = dirac(h, "q1")
    a = sample_traces(h, pi, 4, 20_000, rng_seed=7)
    b = sample_traces(h, pi, 4, 20_000, rng_seed=7, workers=3)
    c = sample_traces(h, pi, 4, 20_000, rng_seed=8)
    assert np.array_equal(a.values, b.values, equal_nan=True)
    assert not np.array_equal(a.values, c.values, equal_nan=True)
    assert sample_trace(h, pi, 5, 3) == sample_trace(h, pi, 5, 3)


@given(seeds)
def test_seed_determinism_property(seed):
    h = load_bundled("timing_leak").hmm
    pi = dirac(h, "s1")
    assert sample_trace(h, pi, 6, seed) == sample_trace(h, pi, 6, seed)


def test_trace_shape_mixed():
    h = load_bundled("timing_leak").hmm
    t = sample_trace(h, dirac(h, "s1"), 6, 1)
    assert len(t) == 6
    assert all(isinstance(x, str) for x in t[0::2]) and all(isinstance(x, float) for x in t[1::2])


# -- two-sample check ------------------------------------------------------

@pytest.mark.stochastic
def test_two_sample_identical():
    h = load_bundled("exp_uniform").hmm
    pi = dirac(h, "q1")
    assert two_sample_check(h, pi, pi, n=3, samples=N, rng_seed=1).passed


@pytest.mark.stochastic
def test_two_sample_counterexample():
    h = load_bundled("counterexample").hmm
    r = two_sample_check(h, dirac(h, "q1"), dirac(h, "q4"), n=3, samples=N, rng_seed=2)
    if not r.passed:  # one retry, as for every stochastic equivalence check
        r = two_sample_check(h, dirac(h, "q1"), dirac(h, "q4"), n=3, samples=N, rng_seed=3)
    assert r.passed


@pytest.mark.stochastic
def test_two_sample_perturbed_fails():
    h = load_bundled("counterexample").hmm
    trans = [(h.states[i], h.states[j], p, P("U(0,1)") if (i, j) == (0, 1) else g) for i, j, p, g in h.entries()]
    hp = ContinuousHMM.from_transitions(h.states, trans)
    assert not check_continuous(hp, dirac(hp, "q1"), dirac(hp, "q4")).equivalent
    assert not two_sample_check(hp, dirac(hp, "q1"), dirac(hp, "q4"), n=3, samples=N, rng_seed=4).passed


# -- cylinders -------------------------------------------------------------

def test_cylinder_examples():
    h = load_bundled("exp_uniform").hmm
    pi = dirac(h, "q1")
    assert cylinder_probability(h, pi, [Box(-1, 0)]) == pytest.approx(0.5, abs=1e-15)
    assert cylinder_probability(h, pi, [Box()]) == pytest.approx(1.0, abs=1e-12)
    # q1 -> q1 emits Exp(2) on [0, inf): P([0,1)) = 1/2 (1 - e^-2) + 1/2 * 0
    assert cylinder_probability(h, pi, [Box(0, 1)]) == pytest.approx(0.5 * (1 - math.exp(-2)))
    assert cylinder_probability(h, pi, []) == 1.0


def test_cylinder_symbols():
    h = load_bundled("timing_leak").hmm
    pi = dirac(h, "s1")
    assert cylinder_probability(h, pi, [Box.only_symbols("a")]) == pytest.approx(1 / 3)
    assert cylinder_probability(h, pi, [Box.only_symbols("b"), Box(F(9, 2), 5)]) == pytest.approx(1 / 3)


def _partition(rng):
    cuts = sorted({F(rng.randint(-40, 40), rng.randint(1, 4)) for _ in range(rng.randint(1, 8))})
    boxes = [Box(None, cuts[0])] + [Box(a, b) for a, b in zip(cuts, cuts[1:])] + [Box(cuts[-1], None)]
    boxes.append(Box.only_symbols("a", "b", "c"))
    return boxes


@given(seeds)
def test_cylinder_partition_sums_to_one(seed):
    from gen import random_small_continuous

    rng = random.Random(seed)
    h = random_small_continuous(rng)
    pi = dirac(h, h.states[rng.randrange(h.size)])
    total = sum(cylinder_probability(h, pi, [b]) for b in _partition(rng))
    assert total == pytest.approx(1.0, abs=1e-9)


@given(seeds)
def test_cylinders_agree_with_verdicts(seed):
    from gen import clone_distributions, random_small_continuous

    rng = random.Random(seed)
    h = random_small_continuous(rng)
    p1, p2, _ = clone_distributions(h, rng)
    v = check_continuous(h, p1, p2)
    if v.equivalent:
        cands = candidate_boxes(h)
        for _ in range(5):
            boxes = [rng.choice(cands) for _ in range(rng.randint(1, 3))]
            assert abs(cylinder_probability(h, p1, boxes) - cylinder_probability(h, p2, boxes)) <= 1e-9
    else:
        boxes = find_distinguishing_boxes(h, p1, p2, len(v.word))
        assert boxes is not None
        assert abs(cylinder_probability(h, p1, boxes) - cylinder_probability(h, p2, boxes)) > 10e-9
