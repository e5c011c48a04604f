import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prinn import autodiff as ad
from prinn.prob import (DegeneratePushforward, Normal, NormalSampler, affine_likelihood,
                        normalized_likelihood, pdf, pushforward, sample)


def test_normal_validation():
    with pytest.raises(ValueError, match="variance must be positive"):
        Normal(0.0, 0.0)
    with pytest.raises(ValueError):
        Normal(float("inf"), 1.0)


def test_pdf_values():
    assert float(pdf(Normal(0, 1), 0.0)) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)
    assert float(pdf(Normal(0, 1), 1.0)) == float(pdf(Normal(0, 1), -1.0))
    assert float(pdf(Normal(5, 4), 5.0)) == pytest.approx(1 / (2 * math.sqrt(2 * math.pi)))


def test_pushforward_examples():
    d = pushforward(Normal(0.2, 0.01), 1.0, 2.0)
    assert d.mean == pytest.approx(1.4) and d.variance == pytest.approx(0.04)
    ident = pushforward(Normal(3.0, 2.0), 0.0, 1.0)
    assert (ident.mean, ident.variance) == (3.0, 2.0)
    # oscillator residual: x'' + w^2 x + 2 w x' zeta with w=1, x'=0.5, x''+x=0.3
    w, xd = 1.0, 0.5
    d = pushforward(Normal(0.2, 0.01), 0.3, 2 * w * xd)
    assert d.mean == pytest.approx(0.5) and d.variance == pytest.approx(0.01)


def test_pushforward_zero_slope_is_signalled():
    with pytest.raises(DegeneratePushforward) as info:
        pushforward(Normal(0, 1), 0.7, 0.0)
    assert info.value.offset == 0.7


def test_pushforward_against_monte_carlo():
    base = Normal(0.2, 0.01)
    x = sample(base, 7, 10 ** 6)
    g = 1.0 + 2.0 * x
    n = g.size
    assert abs(g.mean() - 1.4) < 3 * math.sqrt(0.04 / n)
    assert abs(g.var() - 0.04) < 3 * 0.04 * math.sqrt(2 / n)


def test_pushforward_trials_within_four_standard_errors(rng):
    n = 20000
    for trial in range(100):
        base = Normal(rng.uniform(-2, 2), rng.uniform(0.1, 3))
        off, slope = rng.uniform(-3, 3), rng.uniform(0.2, 3) * rng.choice([-1, 1])
        d = pushforward(base, off, slope)
        g = off + slope * sample(base, trial, n)
        assert abs(g.mean() - d.mean) < 4 * math.sqrt(d.variance / n)


@pytest.mark.parametrize("d,x,expected", [
    (Normal(3.0, 2.0), 3.0, 1.0),
    (Normal(0.0, 1.0), 1.0, math.exp(-0.5)),
    (Normal(0.0, 0.25), 1.0, math.exp(-2.0)),
])
def test_normalized_likelihood(d, x, expected):
    assert float(normalized_likelihood(d, x)) == pytest.approx(expected, abs=1e-15)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 5), st.floats(0.1, 10),
       st.floats(-10, 10))
def test_normalized_likelihood_range_and_affine_invariance(x, m, v, scale, shift):
    lik = float(normalized_likelihood(Normal(m, v), x))
    assert 0.0 <= lik <= 1.0
    moved = float(normalized_likelihood(Normal(m * scale + shift, v * scale ** 2),
                                        x * scale + shift))
    assert moved == pytest.approx(lik, rel=1e-9, abs=1e-300)


def test_affine_likelihood_point_mass_rule():
    base = Normal(0.2, 0.01)
    out = affine_likelihood(base, np.array([0.0, 0.3, -0.4]), np.array([0.0, 0.0, 2.0]))
    assert out[0] == 1.0 and out[1] == 0.0
    assert out[2] == pytest.approx(float(normalized_likelihood(pushforward(base, -0.4, 2.0), 0.0)))


def test_affine_likelihood_differentiable():
    tape = ad.Tape()
    off, slope = tape.leaf(0.1), tape.leaf(1.5)
    lik = affine_likelihood(Normal(0.2, 0.01), off, slope)

    def f(o, s):
        z = 0 - (o + s * 0.2)
        return math.exp(-z * z / (2 * 0.01 * s * s))

    go, gs = ad.gradient(lik, [off, slope])
    h = 1e-6
    assert go == pytest.approx((f(0.1 + h, 1.5) - f(0.1 - h, 1.5)) / (2 * h), rel=1e-6)
    assert gs == pytest.approx((f(0.1, 1.5 + h) - f(0.1, 1.5 - h)) / (2 * h), rel=1e-6)


def test_sampling_moments_and_determinism():
    z = sample(Normal(0, 1), 3, 10 ** 6)
    assert abs(z.mean()) < 0.005
    v = sample(Normal(3, 4), 4, 10 ** 6).var()
    assert 3.97 <= v <= 4.03
    np.testing.assert_array_equal(sample(Normal(0, 1), 9, 101), sample(Normal(0, 1), 9, 101))
    assert not np.array_equal(sample(Normal(0, 1), 9, 10), sample(Normal(0, 1), 10, 10))


def test_sampler_odd_counts_and_validation():
    assert NormalSampler(0).standard(7).shape == (7,)
    with pytest.raises(ValueError):
        NormalSampler(0).standard(0)
