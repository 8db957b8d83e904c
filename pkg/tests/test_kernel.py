import json
from math import gamma

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from vbkde.kernel import (
    Kernel,
    KernelError,
    get_kernel,
    kernel_eval,
    kernel_from_json,
    kernel_moment,
    kernel_tv,
    quintic,
)

C_QUINTIC = 693.0 / 512.0


def test_value_at_origin_is_normalizing_constant(K):
    # int (1-x^2)^5 = B(1/2, 6) = 512/693
    beta = gamma(0.5) * gamma(6) / gamma(6.5)
    assert beta == pytest.approx(512 / 693, rel=1e-14)
    assert kernel_eval(K, 0.0, 0) == pytest.approx(1 / beta, rel=1e-14)
    assert kernel_eval(K, 0.0, 0) == C_QUINTIC


def test_zero_outside_and_on_boundary(K):
    assert kernel_eval(K, 1.0, 0) == 0.0
    assert kernel_eval(K, -1.0, 3) == 0.0
    assert np.all(K.eval(np.array([1.5, -7.0, 1.0 + 1e-12]), 0) == 0.0)


def test_odd_derivative_vanishes_at_origin(K):
    assert kernel_eval(K, 0.0, 1) == 0.0
    assert kernel_eval(K, 0.0, 3) == 0.0


def test_unsupported_order(K):
    with pytest.raises(KernelError):
        K.eval(0.2, 5)
    with pytest.raises(KernelError):
        K.eval(0.2, -1)


def test_moments(K):
    assert kernel_moment(K, 0) == pytest.approx(1.0, abs=1e-14)
    assert abs(kernel_moment(K, 1)) <= 1e-15
    # int x^4 (1-x^2)^5 = B(5/2, 6)
    mu4 = C_QUINTIC * gamma(2.5) * gamma(6) / gamma(8.5)
    assert mu4 == pytest.approx(1 / 65, rel=1e-13)
    assert kernel_moment(K, 4) == pytest.approx(1 / 65, rel=1e-13)
    ref, _ = quad(lambda v: v ** 4 * K.eval(v), -1, 1, epsabs=1e-14)
    assert kernel_moment(K, 4) == pytest.approx(ref, abs=1e-13)
    for p in (1, 3, 5):
        assert abs(kernel_moment(K, p)) <= 1e-12
    with pytest.raises(KernelError):
        K.moment(9)


def test_total_variation(K):
    assert kernel_tv(K) == pytest.approx(693 / 256, rel=1e-14)
    xs = np.linspace(-1.0, 1.0, 100001)
    grid_tv = np.sum(np.abs(np.diff(K.eval(xs))))
    assert abs(grid_tv - kernel_tv(K)) <= 1e-6


def test_tv_of_rescaled_unimodal_kernel():
    # Epanechnikov-type on [-2, 2]: max 3/8, TV = 3/4
    k = Kernel((3 / 8, 0.0, -3 / 32), 2.0)
    assert k.total_variation() == pytest.approx(2 * 3 / 8, rel=1e-13)
    assert not k.order4_smooth


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_derivatives_match_finite_differences(K, rng, order):
    x = rng.uniform(-1 + 1e-3, 1 - 1e-3, 100)
    h = 1e-5
    fd = (K.eval(x + h, order - 1) - K.eval(x - h, order - 1)) / (2 * h)
    exact = K.eval(x, order)
    scale = np.maximum(np.abs(exact), 1.0)
    assert np.max(np.abs(fd - exact) / scale) <= 1e-6


def test_invariants(K):
    xs = np.linspace(-1.2, 1.2, 2001)
    assert np.all(K.eval(xs) >= 0)
    assert np.array_equal(K.eval(xs), K.eval(-xs))
    assert np.allclose(K.eval(xs, 1), -K.eval(-xs, 1), atol=0)
    assert K.order4_smooth
    for k in range(5):
        assert K.eval(np.array([-1.0, 1.0]), k).tolist() == [0.0, 0.0]


def test_sup_norms_against_grid(K):
    xs = np.linspace(-1, 1, 200001)
    grid = np.array([np.max(np.abs(K.eval(xs, k))) for k in range(5)])
    assert np.all(K.sup_norms >= grid - 1e-12)
    assert np.allclose(K.sup_norms, grid, rtol=1e-6)
    assert K.sup_norms[0] == C_QUINTIC


def test_L_is_derivative_of_zK(K, rng):
    z = rng.uniform(-0.999, 0.999, 50)
    h = 1e-6
    fd = ((z + h) * K.eval(z + h) - (z - h) * K.eval(z - h)) / (2 * h)
    assert np.max(np.abs(fd - K.L(z))) <= 1e-6
    assert np.allclose(K.L1(z), z * K.eval(z, 1))


def test_validation_rejects_bad_kernels():
    with pytest.raises(KernelError):
        Kernel((1.0,), 1.0)  # integrates to 2
    with pytest.raises(KernelError):
        Kernel((0.5, 0.1), 1.0)  # odd term
    with pytest.raises(KernelError):
        Kernel((-0.25, 0.0, 2.25), 1.0)  # negative near 0
    with pytest.raises(KernelError):
        Kernel((0.5,), 0.0)


def test_json_round_trip(tmp_path):
    k = quintic()
    spec = {"coefficients": list(k.coefficients), "half_width": 1.0, "name": "q"}
    path = tmp_path / "k.json"
    path.write_text(json.dumps(spec))
    for src in (spec, json.dumps(spec), str(path)):
        k2 = kernel_from_json(src)
        assert k2.coefficients == k.coefficients
    assert get_kernel(str(path)).name == "q"
    with pytest.raises(KernelError):
        get_kernel("gaussian")


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.2, max_value=5.0))
def test_rescaled_kernel_keeps_unit_mass(T):
    # K_T(x) = K(x/T)/T is a valid kernel on [-T, T]
    base = quintic().coefficients
    coef = tuple(c / T ** (j + 1) for j, c in enumerate(base))
    k = Kernel(coef, T)
    assert k.moment(0) == pytest.approx(1.0, abs=1e-10)
    assert k.moment(2) == pytest.approx(T ** 2 * quintic().moment(2), rel=1e-10)
