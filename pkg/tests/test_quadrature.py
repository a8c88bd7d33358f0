import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vanhove.quadrature import composite_gauss_legendre, gauss_legendre, panel_count, simplex_grid


def test_gauss_legendre_exact_on_polynomials():
    x, w = gauss_legendre(5, 0.0, 2.0)
    assert w @ x**9 == pytest.approx(2.0**10 / 10, rel=1e-13)
    with pytest.raises(ValueError):
        gauss_legendre(0, 0, 1)


def test_composite_rule_integrates_oscillation():
    x, w = composite_gauss_legendre(0.0, 50.0, 16, panel_count(50.0, 7.0))
    assert w @ np.cos(7 * x) == pytest.approx(math.sin(350.0) / 7, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(dim=st.integers(1, 4), t=st.floats(0.0, 5.0))
def test_simplex_nodes_ordered_and_volume(dim, t):
    g = simplex_grid(dim, t, order=4)
    z = g.nodes
    assert np.all(np.diff(g.with_origin(), axis=1) >= 0)
    assert np.all(z <= t + 1e-15)
    vol = t**dim / math.factorial(dim)
    assert abs(g.weights.sum() - vol) <= 1e-10 * max(vol, 1e-300)


def test_simplex_moments_exact():
    # int over 0<=z1<=z2<=t of z1 z2^2 = t^5 / 10
    g = simplex_grid(2, 1.5, order=4)
    assert g.weights @ (g.nodes[:, 0] * g.nodes[:, 1] ** 2) == pytest.approx(1.5**5 / 10, rel=1e-13)


def test_simplex_rejects_bad_input():
    with pytest.raises(ValueError):
        simplex_grid(0, 1.0)
    with pytest.raises(ValueError):
        simplex_grid(2, -1.0)
