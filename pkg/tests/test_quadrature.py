import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vbkde.quadrature import composite_rule, integrate, panel_edges


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=60), st.floats(-3, 3), st.floats(0.1, 4))
def test_polynomials_integrate_exactly(p, a, width):
    b = a + width
    exact = (b ** (p + 1) - a ** (p + 1)) / (p + 1)
    assert integrate(lambda x: x ** p, a, b, panels=2) == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_weights_sum_to_length():
    x, w = composite_rule(-1.5, 2.0, 5, 16)
    assert w.sum() == pytest.approx(3.5, rel=1e-15)
    assert np.all((x > -1.5) & (x < 2.0))


def test_explicit_edges_match_count():
    x1, w1 = composite_rule(0.0, 1.0, 4, 8)
    x2, w2 = composite_rule(0.0, 1.0, np.linspace(0, 1, 5), 8)
    assert np.array_equal(x1, x2) and np.array_equal(w1, w2)


def test_panel_edges_respect_breaks_and_width():
    e = panel_edges([0.0, 0.3, 2.0], 0.5)
    assert 0.3 in e and e[0] == 0.0 and e[-1] == 2.0
    assert np.max(np.diff(e)) <= 0.5 + 1e-15


def test_empty_interval():
    assert integrate(np.exp, 1.0, 1.0) == 0.0
