import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prinn import autodiff as ad
from prinn.network import ConstrainedParam, Mlp, forward, init, load_snapshot, param_value, snapshot_text


def test_init_is_deterministic_and_xavier_bounded():
    a, b = init([1, 32, 32, 1], 3), init([1, 32, 32, 1], 3)
    np.testing.assert_array_equal(a.flat(), b.flat())
    assert not np.array_equal(a.flat(), init([1, 32, 32, 1], 4).flat())
    for w, bias in zip(a.weights, a.biases):
        fan_in, fan_out = w.shape
        assert np.all(np.abs(w) <= math.sqrt(6 / (fan_in + fan_out)))
        assert np.all(bias == 0)


def test_init_rejects_bad_widths():
    with pytest.raises(ValueError, match="positive"):
        init([1, 0, 1], 0)
    with pytest.raises(ValueError):
        init([1], 0)


def test_zero_weights_return_the_bias_pattern():
    net = init([2, 4, 3], 0)
    net.weights = [np.zeros_like(w) for w in net.weights]
    net.biases = [np.zeros(4), np.array([1.5, -2.0, 0.25])]
    out = net(np.random.default_rng(0).normal(size=(5, 2)))
    np.testing.assert_array_equal(out, np.tile([1.5, -2.0, 0.25], (5, 1)))


def test_single_layer_net_is_affine():
    net = Mlp([1, 1], [np.array([[2.5]])], [np.array([0.5])])
    tape = ad.Tape()
    t = tape.leaf(1.2)
    x = forward(net.bind(tape), t)
    assert float(x) == pytest.approx(3.5)
    assert ad.gradient(x, [t]) == [2.5]


def test_forward_derivatives_match_finite_differences():
    net = init([1, 8, 8, 1], 1)
    f = lambda v: float(net(np.array([[v]]))[0, 0])  # noqa: E731
    for t0 in (-0.7, 0.0, 1.3):
        tape = ad.Tape()
        t = tape.leaf(t0)
        x = forward(net.bind(tape), t)
        (d1,) = ad.gradient(x, [t])
        assert d1 == pytest.approx((f(t0 + 1e-5) - f(t0 - 1e-5)) / 2e-5, rel=1e-4)
        tape = ad.Tape()
        t = tape.leaf(t0)
        d2 = ad.derivative_of_derivative(forward(net.bind(tape), t), t)
        h = 1e-4
        assert d2 == pytest.approx((f(t0 + h) - 2 * f(t0) + f(t0 - h)) / h ** 2, rel=1e-3, abs=1e-6)


def test_bound_and_plain_evaluation_agree():
    net = init([1, 16, 1], 2)
    t = np.linspace(0, 3, 11)[:, None]
    bound = net.bind(ad.Tape())(t)
    np.testing.assert_allclose(bound.value, net(t), rtol=0, atol=1e-15)


def test_constrained_param_examples():
    p = ConstrainedParam(0.0)
    assert float(param_value(p)) == 0.5
    tape = ad.Tape()
    raw = tape.leaf(0.0)
    assert ad.gradient(p.value(raw), [raw]) == [0.25]
    assert float(ConstrainedParam(40.0)) < 1.0
    assert float(ConstrainedParam(40.0)) == pytest.approx(1.0)
    assert float(ConstrainedParam.from_value(0.3)) == pytest.approx(0.3)
    assert float(ConstrainedParam.from_value(2.0, bounds=(1.0, 5.0))) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        ConstrainedParam.from_value(1.0)
    with pytest.raises(ValueError):
        ConstrainedParam(0.0, bounds=(1.0, 1.0))
    assert ConstrainedParam(-3.2, bounds=None).value() == -3.2


@given(st.floats(-50, 50), st.floats(-5, 5), st.floats(0.01, 10))
def test_constrained_param_never_reaches_bounds(raw, lo, width):
    hi = lo + width
    v = float(ConstrainedParam(raw, bounds=(lo, hi)))
    assert lo < v < hi


def test_snapshot_round_trip_is_bitwise():
    net = init([1, 5, 3, 1], 8)
    text = snapshot_text(net, {"mu": 0.123456789012345678})
    assert text.startswith("# prinn-snapshot,1\nwidths,1,5,3,1\n")
    back, extra = load_snapshot(text)
    np.testing.assert_array_equal(back.flat(), net.flat())
    assert extra == {"mu": 0.123456789012345678}
    assert snapshot_text(back, extra) == text


def test_snapshot_rejects_wrong_version_and_size():
    text = snapshot_text(init([1, 2, 1], 0))
    with pytest.raises(ValueError, match="header"):
        load_snapshot(text.replace("snapshot,1", "snapshot,9"))
    with pytest.raises(ValueError, match="holds"):
        load_snapshot(text + "99,1.0\n")
