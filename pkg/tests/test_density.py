import json
import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from vbkde.density import (
    Bump,
    DensityError,
    Modulus,
    Sample,
    Uniform,
    certify_class,
    density_eval,
    draw_sample,
    get_density,
    mixture_from_json,
)

SQ2PI = math.sqrt(2 * math.pi)


def test_normal_closed_forms(normal):
    assert density_eval(normal, 0.0, 0) == pytest.approx(1 / SQ2PI, rel=1e-15)
    assert density_eval(normal, 0.0, 1) == 0.0
    assert density_eval(normal, 0.0, 4) == pytest.approx(3 / SQ2PI, rel=1e-14)
    x = np.linspace(-3, 3, 13)
    hermite = (x ** 4 - 6 * x ** 2 + 3) * normal.pdf(x)
    assert np.allclose(normal.eval(x, 4), hermite, rtol=1e-13, atol=1e-15)
    with pytest.raises(DensityError):
        normal.eval(0.0, 5)


@pytest.mark.parametrize("name", ["normal", "mixture", "bump"])
def test_unit_mass_and_nonnegative(name):
    d = get_density(name)
    lo, hi = d.support or (-12, 12)
    mass, _ = quad(d.pdf, lo, hi, limit=200, epsabs=1e-12)
    assert mass == pytest.approx(1.0, abs=1e-8)
    xs = np.linspace(-15, 15, 30001)
    assert np.all(d.pdf(xs) >= 0)


@pytest.mark.parametrize("name", ["normal", "mixture", "bump"])
@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_derivatives_match_finite_differences(name, order, rng):
    d = get_density(name)
    lo, hi = d.support or (-4, 4)
    x = rng.uniform(0.9 * lo, 0.9 * hi, 100)
    h = 1e-5
    fd = (d.eval(x + h, order - 1) - d.eval(x - h, order - 1)) / (2 * h)
    exact = d.eval(x, order)
    assert np.max(np.abs(fd - exact) / (np.abs(exact) + 1)) <= 1e-6


def test_sampling_is_deterministic(panel_densities):
    for d in panel_densities:
        a = draw_sample(d, 500, 11).observations
        b = draw_sample(d, 500, 11).observations
        assert np.array_equal(a, b)
        assert not np.array_equal(a, draw_sample(d, 500, 12).observations)
        # prefix property: draw i does not depend on n
        assert np.array_equal(draw_sample(d, 200, 11).observations, a[:200])


def test_normal_mean_clt(normal):
    for seed in range(20):
        x = normal.sample(1000, seed).observations
        assert abs(x.mean()) <= 4 / math.sqrt(1000)


@pytest.mark.parametrize("name", ["normal", "mixture", "bump"])
def test_ks_statistic(name):
    d = get_density(name)
    n = 10_000
    ok = 0
    for seed in range(100):
        x = d.sample(n, seed).observations
        ks = stats.kstest(x, d.cdf).statistic
        ok += ks < 1.95 / math.sqrt(n)
    assert ok >= 95


def test_bump_samples_stay_in_support(bump):
    x = bump.sample(20000, 3).observations
    assert np.all(np.abs(x) < 3.0)


def test_certification(normal, panel_densities):
    assert certify_class(normal, 3.0, lambda d: 10 * d)
    cert = certify_class(normal, 0.1, lambda d: 10 * d)
    assert not cert and cert.violation[1] == 0
    for d in panel_densities:
        assert certify_class(d, d.deriv_bound, d.modulus), d.name
    # a modulus that is too small is caught
    assert not certify_class(normal, 3.0, Modulus(1e-3))


def test_certified_constants_bound_grid(panel_densities):
    for d in panel_densities:
        xs = np.linspace(*d.scan_range, 100001)
        for k in range(5):
            assert np.max(np.abs(d.eval(xs, k))) <= d.deriv_bound + 1e-9


def test_sample_type():
    s = Sample.from_points([0.5, -1.0])
    assert s.n == 2 and s.tag.startswith("manual")
    with pytest.raises(ValueError):
        s.observations[0] = 3.0
    with pytest.raises(DensityError):
        Sample(np.zeros(3), 0, 2, "x")


def test_mixture_json(tmp_path):
    spec = {"weights": [0.3, 0.7], "means": [0, 2], "sds": [1, 0.5]}
    m = mixture_from_json(spec)
    p = tmp_path / "m.json"
    p.write_text(json.dumps(spec))
    m2 = get_density(str(p))
    assert m.pdf(1.3) == m2.pdf(1.3)
    ref = 0.3 * stats.norm.pdf(1.3) + 0.7 * stats.norm.pdf(1.3, 2, 0.5)
    assert m.pdf(1.3) == pytest.approx(ref, rel=1e-14)
    with pytest.raises(DensityError):
        get_density("cauchy")


def test_uniform_diagnostic():
    u = Uniform(-1.0, 1.0)
    assert u.pdf(0.3) == 0.5 and u.pdf(1.5) == 0.0
    assert isinstance(Bump(), Bump)
