import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conetree.errors import AlphabetMismatch, DegenerateDifference
from conetree.halfplane import (
    CircleAngle,
    HalfPlaneVector,
    alpha,
    alpha_matrix,
    dist,
    gamma,
    gamma_A,
    hyperbolic_distance,
    point_at_distance,
    wrap_angle,
)

from strategies import upper_points


def test_gamma_examples():
    assert gamma(1j, 1j) == 0.0
    assert gamma(1j, 2j) == pytest.approx(0.5)
    assert gamma(1 + 1j, -1 + 1j) == pytest.approx(4.0)


def test_gamma_A_examples():
    g = HalfPlaneVector([1j, 1j])
    assert gamma_A(g, g) == 0.0
    assert gamma_A(HalfPlaneVector([1j, 1j]), HalfPlaneVector([2j, 1j])) == pytest.approx(0.5)
    assert gamma_A(HalfPlaneVector([1j, 1 + 1j]), HalfPlaneVector([2j, -1 + 1j])) == pytest.approx(4.0)


def test_dist_examples():
    g = HalfPlaneVector([1j])
    assert dist(g, g) == 0.0
    assert dist(g, HalfPlaneVector([2j])) == pytest.approx(math.log(2), abs=1e-15)
    assert dist(g, HalfPlaneVector([4j])) == pytest.approx(math.log(4), abs=1e-15)


def test_vector_rejects_lower_half_plane():
    with pytest.raises(ValueError):
        HalfPlaneVector([1j, 0.5])
    with pytest.raises(ValueError):
        HalfPlaneVector([1 - 1j])


def test_vector_labels():
    v = HalfPlaneVector([1j, 2j], ("o", "b"))
    assert v["b"] == 2j
    assert v[0] == 1j
    assert len(v) == 2
    with pytest.raises(AlphabetMismatch):
        HalfPlaneVector([1j], ("o", "b"))
    with pytest.raises(AlphabetMismatch):
        gamma_A(v, HalfPlaneVector([1j, 2j], ("x", "y")))
    with pytest.raises(AlphabetMismatch):
        gamma_A(v, HalfPlaneVector([1j, 2j, 3j]))


def _diff_pair(d):
    h = np.array([1j] * len(d))
    return h + np.array(d), h


def test_alpha_examples():
    g, h = _diff_pair([1, 2])
    assert alpha(g, h, 0, 1).value == 0.0
    g, h = _diff_pair([1, 1j])
    a = alpha(g, h, 0, 1)
    assert a.value == pytest.approx(-math.pi / 2)
    assert a.magnitude == pytest.approx(math.pi / 2)
    g, h = _diff_pair([1, -1])
    assert alpha(g, h, 0, 1).magnitude == pytest.approx(math.pi)


def test_alpha_by_label():
    g = HalfPlaneVector([1 + 1j, 1j + 1j], ("o", "b"))
    h = HalfPlaneVector([1j, 1j], ("o", "b"))
    assert alpha(g, h, "o", "b").value == pytest.approx(-math.pi / 2)


def test_alpha_degenerate():
    g, h = _diff_pair([0, 1])
    with pytest.raises(DegenerateDifference):
        alpha(g, h, 0, 1)
    assert np.isnan(alpha_matrix(g, h)[0, 1])
    assert alpha_matrix(g, h)[1, 1] == 0.0


def test_wrap_angle_range():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


@given(st.floats(-20, 20), st.floats(-20, 20))
def test_circle_triangle_inequality(a, b):
    x, y = CircleAngle(a), CircleAngle(b)
    assert (x + y).magnitude <= x.magnitude + y.magnitude + 1e-12
    assert 0.0 <= x.magnitude <= math.pi
    assert (x - x).magnitude == pytest.approx(0.0, abs=1e-12)


@given(upper_points(3), upper_points(3), upper_points(3))
@settings(max_examples=200)
def test_metric_axioms(g, h, k):
    assert dist(g, h) == dist(h, g)
    assert dist(g, k) <= dist(g, h) + dist(h, k) + 1e-12
    assert dist(g, g) == 0.0


@given(upper_points(3), upper_points(3))
@settings(max_examples=200)
def test_inversion_is_isometry(g, h):
    a = gamma(g, h)
    b = gamma(-1.0 / g, -1.0 / h)
    assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


@given(upper_points(2), upper_points(2), upper_points(2), upper_points(2))
@settings(max_examples=100)
def test_dist_monotone_in_gamma(g, h, g2, h2):
    if gamma_A(g, h) <= gamma_A(g2, h2):
        assert dist(g, h) <= dist(g2, h2)


@given(st.builds(complex, st.floats(-3, 3), st.floats(0.05, 3)),
       st.floats(0.0, 5.0), st.floats(-math.pi, math.pi))
def test_point_at_distance(center, d, theta):
    p = point_at_distance(center, d, theta)
    assert p.imag > 0
    assert hyperbolic_distance(center, p) == pytest.approx(d, abs=1e-7)
