import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import abramson, ideal, k5, two_stage
from vbkde.density import Sample
from vbkde.estimators import (
    ESTIMATORS,
    BandwidthPair,
    EstimatorError,
    abramson_ideal_eval,
    check_band_conditions,
    classical_kde_eval,
    default_B,
    evaluate_curve,
    hhm_ideal_eval,
    pilot_at_points,
    schedule,
    true_estimator_eval,
)
from vbkde.regions import region_grid_count, region_oracle

DATA = Path(__file__).parent / "data"
FIVE = np.array([-1.3, -0.4, 0.05, 0.6, 1.7])


def test_schedule_values():
    bw = schedule(512)
    assert bw.h1 == pytest.approx(0.25, rel=1e-15)
    assert bw.h2 == pytest.approx((math.log(512) / 512) ** (1 / 9), rel=1e-15)
    assert bw.h2 == pytest.approx(0.61278, abs=1e-5)
    assert schedule(512, 0.5).h1 == pytest.approx(512 ** (-2.5 / 9))
    with pytest.raises(EstimatorError):
        schedule(2)
    with pytest.raises(EstimatorError):
        schedule(100, 1.0)


def test_h2_decreasing_and_band_conditions():
    ns = np.unique(np.round(np.logspace(np.log10(8), 6, 2000)).astype(int))
    h2 = np.array([schedule(int(n)).h2 for n in ns])
    assert np.all(np.diff(h2) < 0)
    for n in (16, 512, 40000):
        assert check_band_conditions(n)


def test_classical_examples(K):
    assert classical_kde_eval([0.0], 1.0, K, 0.0) == 693 / 512
    assert classical_kde_eval([-0.5, 0.5], 1.0, K, 0.0) == pytest.approx(693 / 512 * 0.75 ** 5, rel=1e-15)
    assert classical_kde_eval([-0.5, 0.5], 1.0, K, 0.5 + 1.0 + 1e-9) == 0.0
    with pytest.raises(EstimatorError):
        classical_kde_eval([], 1.0, K, 0.0)
    with pytest.raises(EstimatorError):
        classical_kde_eval([0.0], 0.0, K, 0.0)


def test_abramson_examples(K, normal):
    h = 0.5
    t = 0.3
    v = abramson_ideal_eval([t], normal, h, K, t)
    assert v == pytest.approx(math.sqrt(normal.pdf(t)) * K(0) / h, rel=1e-15)
    # every observation in the far tail: the clip saturates at f(t)/10
    far = np.array([5.0, 5.3, -6.0])
    sat = np.sqrt(normal.pdf(t) / 10)
    expect = np.mean(sat / h * K.eval((t - far) * sat / h))
    assert abramson_ideal_eval(far, normal, h, K, t) == pytest.approx(expect, rel=1e-15)
    assert abramson_ideal_eval(FIVE, normal, h, K, 0.0) == pytest.approx(
        abramson(FIVE, normal.pdf, h, 0.0), rel=1e-12)


def test_hhm_examples(K, normal):
    h2 = 0.6
    B = default_B(K, 0.1)
    t = 0.3
    assert hhm_ideal_eval([t], normal, h2, B, K, t) == pytest.approx(
        K(0) * math.sqrt(normal.pdf(t)) / h2, rel=1e-15)
    assert hhm_ideal_eval([t + h2 * B], normal, h2, B, K, t) == 0.0
    assert hhm_ideal_eval(FIVE, normal, h2, B, K, t) == pytest.approx(
        ideal(FIVE, normal.pdf, h2, B, t), rel=1e-12)


def test_true_single_point(K):
    bw = schedule(512)
    B = default_B(K, 0.1)
    x0 = 0.7
    p = K(0) / bw.h1
    assert true_estimator_eval([x0], bw, B, K, x0) == pytest.approx(K(0) * math.sqrt(p) / bw.h2, rel=1e-15)


def test_true_matches_oracle_on_five_points(K):
    bw = schedule(512)
    B = default_B(K, 0.1)
    for t in (-1.0, 0.0, 0.33, 1.2):
        assert true_estimator_eval(FIVE, bw, B, K, t) == pytest.approx(
            two_stage(FIVE, bw.h1, bw.h2, B, t), rel=1e-12, abs=1e-15)


def test_plug_in_identity(K, normal):
    x = normal.sample(300, 5).observations
    bw = schedule(300)
    B = default_B(K, 0.1)
    grid = np.linspace(-2, 2, 101)
    a = true_estimator_eval(x, bw, B, K, grid, pilot=normal.pdf)
    b = hhm_ideal_eval(x, normal, bw, B, K, grid)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("tag", ["classical", "hhm_ideal", "true_twostage"])
def test_pruned_matches_naive(K, normal, tag):
    x = normal.sample(2000, 9).observations
    bw = schedule(2000)
    B = default_B(K, 0.1)
    grid = np.linspace(-3.5, 3.5, 301)
    if tag == "classical":
        a, b = (classical_kde_eval(x, 0.3, K, grid, m) for m in ("naive", "pruned"))
    elif tag == "hhm_ideal":
        a, b = (hhm_ideal_eval(x, normal, bw, B, K, grid, m) for m in ("naive", "pruned"))
    else:
        a, b = (true_estimator_eval(x, bw, B, K, grid, m) for m in ("naive", "pruned"))
    assert np.max(np.abs(a - b)) <= 1e-12


def test_nonnegative_and_local(K, normal):
    x = normal.sample(500, 2).observations
    bw = schedule(500)
    B = default_B(K, 0.1)
    grid = np.linspace(-4, 4, 161)
    for tag in ESTIMATORS:
        c = evaluate_curve(tag, x, K, grid, bw=bw, B=B, density=normal)
        assert np.all(c.values >= 0), tag
    t = 0.25
    near = x[np.abs(t - x) < bw.h2 * B]
    full = hhm_ideal_eval(x, normal, bw, B, K, t)
    # deleting far points only changes the 1/n normalization
    assert full * len(x) == pytest.approx(hhm_ideal_eval(near, normal, bw, B, K, t) * len(near), rel=1e-12)
    pilot = pilot_at_points(x, bw.h1, K)
    sel = np.abs(t - x) < bw.h2 * B
    a = true_estimator_eval(x, bw, B, K, t, pilot=pilot)
    b = true_estimator_eval(x[sel], bw, B, K, t, pilot=pilot[sel]) * sel.sum() / len(x)
    assert a == pytest.approx(b, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 10.0), st.integers(0, 10_000))
def test_classical_scale_equivariance(a, seed):
    from vbkde.kernel import quintic

    K = quintic()
    x = np.random.default_rng(seed).normal(size=20)
    t, h = 0.1, 0.4
    lhs = classical_kde_eval(a * x, a * h, K, a * t)
    rhs = classical_kde_eval(x, h, K, t) / a
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.permutations(list(range(40))))
def test_permutation_invariance(perm):
    from vbkde.density import get_density
    from vbkde.kernel import quintic

    K = quintic()
    d = get_density("normal")
    x = d.sample(40, 1).observations
    grid = np.linspace(-2, 2, 21)
    bw = schedule(40)
    for tag in ESTIMATORS:
        a = evaluate_curve(tag, x, K, grid, bw=bw, r=0.1, density=d).values
        b = evaluate_curve(tag, x[list(perm)], K, grid, bw=bw, r=0.1, density=d).values
        assert np.allclose(a, b, rtol=1e-13, atol=1e-16)


def test_curve_matches_pointwise(K, normal):
    x = normal.sample(200, 4).observations
    c = evaluate_curve("true_twostage", x, K, [0.4], r=0.1)
    assert c.values[0] == true_estimator_eval(x, schedule(200), default_B(K, 0.1), K, 0.4)
    with pytest.raises(EstimatorError):
        evaluate_curve("hhm_ideal", x, K, [0.0], r=0.1)
    with pytest.raises(EstimatorError):
        evaluate_curve("classical", x, K, [1.0, 0.0], r=0.1)
    with pytest.raises(EstimatorError):
        evaluate_curve("bogus", x, K, [0.0], r=0.1)


def golden_curve(K, normal):
    s = normal.sample(1024, 7)
    grid = region_grid_count(region_oracle(normal, 0.1), 1001)[:1001]
    return s, grid, evaluate_curve("true_twostage", s, K, grid, r=0.1)


def test_golden_curve(K, normal):
    s, grid, curve = golden_curve(K, normal)
    assert len(grid) == 1001
    # spot checks against the straight-line oracle before trusting the file
    bw = curve.bandwidths
    xs = list(s.observations)
    for j in (0, 250, 500, 750, 1000):
        ref = two_stage(xs, bw.h1, bw.h2, curve.B, grid[j])
        assert curve.values[j] == pytest.approx(ref, rel=1e-12)
    gold = np.loadtxt(DATA / "golden_curve_n1024_seed7.csv", delimiter=",", skiprows=1)
    assert np.array_equal(gold[:, 0], grid)
    assert np.allclose(gold[:, 1], curve.values, rtol=1e-12, atol=1e-15)


def test_bandwidth_pair_fields():
    bw = BandwidthPair(0.1, 0.2, 10)
    assert bw.rule_tag == "sqrt-law" and bw.eta == 0.0
    assert k5(0.0) == 693 / 512
    assert isinstance(Sample.from_points([1.0]).n, int)
