import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

import oracles
from conftest import pot, tails
from eloforge.tails import TailIntegrals, adaptive_simpson


def test_zero(builtin):
    t = tails(builtin.name)
    assert t.cumulative(0.0) == 0.0 and t.moment(0.0) == 0.0
    assert t.cumulative_inv(0.0) == 0.0 and t.moment_inv(0.0) == 0.0


def test_logistic_examples(logistic_tails):
    assert logistic_tails.cumulative(2.0) == pytest.approx(math.e ** 2 + 1, rel=1e-13)
    assert logistic_tails.moment(2.0) == pytest.approx(math.e ** 2 + 1, rel=1e-12)
    assert logistic_tails.moment(1.0) == pytest.approx(1.0, abs=1e-12)
    assert logistic_tails.moment_inv(1.0) == pytest.approx(1.0, abs=1e-9)


def test_logistic_inverse_at_200(logistic_tails):
    x = logistic_tails.cumulative_inv(200.0)
    assert x == pytest.approx(oracles.logistic_f_inv(200.0), abs=1e-10)
    assert x == pytest.approx(5.27670, abs=1e-5)


@given(st.floats(min_value=0.0, max_value=30.0))
@settings(max_examples=300, deadline=None)
def test_logistic_closed_forms(x):
    t = tails("logistic")
    f, g = oracles.logistic_f(x), oracles.logistic_g(x)
    assert abs(t.cumulative(x) - f) <= 1e-8 * max(1.0, abs(f))
    assert abs(t.moment(x) - g) <= 1e-8 * max(1.0, abs(g))


def test_vectorised_matches_scalar(logistic_tails):
    xs = np.linspace(0, 30, 301)
    vec = logistic_tails.cumulative(xs)
    assert isinstance(vec, np.ndarray)
    for x, v in zip(xs, vec):
        assert v == pytest.approx(logistic_tails.cumulative(float(x)), rel=1e-15)


def test_algebraic_p1_closed_forms():
    t = tails("alg:p=1")
    # 1 / sigma(-t) = 2 (1 + t), so f = 2x + x^2 and g = x^2
    assert t.cumulative(1.0) == pytest.approx(3.0, rel=1e-13)
    for x in (0.5, 3.0, 40.0, 1000.0):
        assert t.cumulative(x) == pytest.approx(2 * x + x * x, rel=1e-12)
        assert t.moment(x) == pytest.approx(x * x, rel=1e-10)


def test_erf_against_scipy_quad():
    t = tails("erf")
    for x in (0.5, 2.0, 5.0):
        ref, _ = quad(lambda s: 2.0 / math.erfc(s / math.sqrt(2.0)), 0.0, x, epsabs=0, epsrel=1e-13)
        assert t.cumulative(x) == pytest.approx(ref, rel=1e-10)


@given(st.floats(min_value=0.0, max_value=50.0), st.sampled_from(["logistic", "alg:p=2", "erf"]))
@settings(max_examples=200, deadline=None)
def test_round_trips(x, spec):
    t = tails(spec)
    x = min(x, 0.9 * t.x_max)
    assert t.cumulative_inv(t.cumulative(x)) == pytest.approx(x, abs=1e-8)
    assert t.moment_inv(t.moment(x)) == pytest.approx(x, abs=1e-8)


@given(st.lists(st.floats(min_value=0.0, max_value=25.0), min_size=2, max_size=20, unique=True))
@settings(max_examples=100, deadline=None)
def test_strictly_increasing(xs):
    t = tails("logistic")
    xs = np.sort(np.asarray(xs))
    xs = xs[np.diff(np.concatenate([[-1.0], xs])) > 1e-9]
    assert np.all(np.diff(t.cumulative(xs)) > 0)
    assert np.all(np.diff(t.moment(xs)[xs > 1e-6]) > 0)


@given(st.floats(min_value=0.0, max_value=20.0), st.floats(min_value=0.0, max_value=20.0))
@settings(max_examples=100, deadline=None)
def test_cumulative_convex(a, b):
    t = tails("logistic")
    mid = t.cumulative(0.5 * (a + b))
    assert mid <= 0.5 * (t.cumulative(a) + t.cumulative(b)) + 1e-10 * max(1.0, mid)


def test_two_moment_paths_agree(builtin):
    t = tails(builtin.name)
    for x in (0.1, 1.0, 5.0, 12.0, 30.0):
        a, b = t.moment(x), t.moment_direct(x)
        assert abs(a - b) <= 1e-6 * max(1.0, abs(a)), (x, a, b)


def test_integral_matches_difference(logistic_tails):
    for a, b in ((0.0, 0.1), (1.0, 1.2), (3.0, 9.5)):
        ref = oracles.logistic_f(b) - oracles.logistic_f(a)
        assert logistic_tails.integral(a, b) == pytest.approx(ref, rel=1e-12)
    with pytest.raises(ValueError):
        logistic_tails.integral(2.0, 1.0)


def test_rejects_bad_arguments(logistic_tails):
    for bad in (-1.0, math.nan, math.inf):
        with pytest.raises(ValueError):
            logistic_tails.cumulative(bad)
        with pytest.raises(ValueError):
            logistic_tails.moment(bad)
        with pytest.raises(ValueError):
            logistic_tails.cumulative_inv(bad)
    with pytest.raises(ValueError):
        logistic_tails.cumulative(800.0)
    with pytest.raises(ValueError):
        logistic_tails.cumulative_inv(1e305)


def test_limits():
    assert tails("logistic").x_max == pytest.approx(700.0, abs=1e-6)
    assert tails("alg:p=1").x_max == 1e7
    assert 35 < tails("erf").x_max < 40


def test_adaptive_simpson_known_integrals():
    assert adaptive_simpson(math.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-10)
    assert adaptive_simpson(math.exp, 0.0, 10.0) == pytest.approx(math.expm1(10.0), rel=1e-10)
    assert adaptive_simpson(math.sin, 1.0, 1.0) == 0.0


def test_concurrent_readers_agree():
    t = TailIntegrals(pot("logistic"))
    xs = np.linspace(0, 40, 57)
    out = [None] * 4

    def work(i):
        out[i] = t.cumulative(xs[::-1] if i % 2 else xs)

    threads = [threading.Thread(target=work, args=(i,)) for i in range(4)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    ref = TailIntegrals(pot("logistic")).cumulative(xs)
    for i, o in enumerate(out):
        assert np.array_equal(o[::-1] if i % 2 else o, ref)


def test_span_integral_below_float_spacing(logistic_tails):
    # the span is under one ulp at z, so z + span is not representable
    z, width = 20.8125, 1.8e-15
    assert logistic_tails.integral_span(z, width) == pytest.approx(width * (1 + math.exp(z)), rel=1e-9)
    assert logistic_tails.integral_span(1.0, 0.5) == pytest.approx(logistic_tails.integral(1.0, 1.5), rel=1e-12)
    assert logistic_tails.integral_span(0.0, 3.0) == pytest.approx(logistic_tails.cumulative(3.0), rel=1e-12)
