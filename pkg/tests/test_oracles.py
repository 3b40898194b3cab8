from __future__ import annotations

import numpy as np
import pytest
from conftest import LinearMap, QuadraticGradientMap, RaisingMap
from hypothesis import given
from hypothesis import strategies as st

from iodsub import fixtures
from iodsub.engine import TriangleMap
from iodsub.mastermap import NonEvaluable
from iodsub.oracles import (
    ORACLES, DEFAULT_SEQUENCE, OracleConfig, Verdict, bb_rate, gd_step, label_map, label_triangle,
    newton_step, omega_gd_converge, omega_gd_disjoint, omega_intersection,
    omega_linear_approximation, omega_newton,
)
from iodsub.pplane import REF_VERTICES, Label, initial_triangulation, regular_subdivide

CFG = OracleConfig()


def _always(label):
    return lambda tm, cfg: Verdict(label)


def test_label_map_order():
    tm = LinearMap(np.eye(2), [0.1, 0.0])
    assert label_map(tm, [("no", _always(Label.REJECT))], CFG) == Verdict(Label.REJECT, "no")
    v = label_map(tm, [("p", _always(Label.PASS)), ("a", _always(Label.ACCEPT))], CFG)
    assert v == Verdict(Label.ACCEPT, "a")
    assert label_map(tm, [("p", _always(Label.PASS))], CFG).label is Label.PASS
    with pytest.raises(ValueError):
        label_map(tm, ["nonsense"], CFG)


def test_non_evaluable_means_pass():
    for name, oracle in ORACLES.items():
        if name == "intersection":
            continue
        assert oracle(RaisingMap(), CFG).label is Label.PASS


def test_config_validation():
    with pytest.raises(ValueError):
        OracleConfig(c_max_int_norm=0)
    with pytest.raises(ValueError):
        OracleConfig(c_area_scaling=1.5)
    with pytest.raises(ValueError):
        OracleConfig(newton_variant="other")


def test_intersection_pass_and_reject():
    s = fixtures.single_observer()
    t0 = initial_triangulation().nodes[0].triangle
    near = TriangleMap(s, t0)
    r = np.linalg.norm(near.intersections(np.zeros(2)).r, axis=1).max()
    assert omega_intersection(near, OracleConfig(c_max_int_norm=2 * r)).label is Label.PASS
    assert omega_intersection(near, OracleConfig(c_max_int_norm=r / 2)).label is Label.REJECT


def test_linear_approximation_examples():
    assert omega_linear_approximation(LinearMap(np.eye(2), [0, 0]), CFG).label is Label.PASS
    # |F(0)| = 5, |J| = 1
    tm = LinearMap(np.eye(2), [-3.0, -4.0])
    assert omega_linear_approximation(tm, OracleConfig(c_safety=1.0)).label is Label.REJECT
    assert omega_linear_approximation(tm, OracleConfig(c_safety=5.0)).label is Label.PASS


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0.1, 10), st.floats(-10, 10))
def test_linear_approximation_never_rejects_inside_radius(x, y, scale, shear):
    # zero within c_safety of the center: |F(0)| = |A z*| <= |A| |z*|
    a = np.array([[scale, shear], [0.0, 1.0]])
    z = np.array([x, y])
    cfg = OracleConfig(c_safety=float(np.linalg.norm(z)) + 1e-9)
    assert omega_linear_approximation(LinearMap(a, z), cfg).label is Label.PASS


def test_newton_step_examples():
    a = np.array([[2.0, 1.0], [0.5, 3.0]])
    tm = LinearMap(a, [0.2, -0.1])
    assert np.allclose(newton_step(tm.F, tm.J, [0.7, 0.4]), [0.2, -0.1], atol=1e-15)
    assert np.array_equal(newton_step(tm.F, tm.J, [0.2, -0.1]), [0.2, -0.1])
    with pytest.raises(NonEvaluable):
        newton_step(tm.F, lambda z: np.zeros((2, 2)), [0.0, 0.0])


def test_newton_quadratic_convergence():
    s = fixtures.nearly_circular()
    w = s.known_solutions[0]
    t = next(n.triangle for n in initial_triangulation().nodes if n.triangle.contains(w, 1e-12))
    for _ in range(8):
        t = max(regular_subdivide(t), key=lambda k: (k.barycentric_of(w) if k.barycentric_of(w) is not None
                                                   else np.full(3, -1.0)).min())
    tm = TriangleMap(s, t)
    z = np.zeros(2)
    for _ in range(20):
        z = newton_step(tm.F, tm.J, z)
    zstar = z
    z = np.array([0.3, -0.2])
    errs = []
    for _ in range(4):
        z = newton_step(tm.F, tm.J, z)
        errs.append(np.linalg.norm(z - zstar))
    ratios = [e1 / e0**2 for e0, e1 in zip(errs, errs[1:]) if e0 > 1e-7]
    assert ratios and max(ratios) < 100


def test_newton_oracle_linear():
    a = np.array([[1.0, 0.3], [-0.2, 2.0]])
    assert omega_newton(LinearMap(a, [0.1, 0.05]), CFG) == Verdict(Label.ACCEPT, "newton")
    assert omega_newton(LinearMap(a, [5.0, 5.0]), CFG).label is Label.PASS
    six = OracleConfig(newton_variant="six_point_hull")
    assert omega_newton(LinearMap(a, [0.1, 0.05]), six).label is Label.ACCEPT


def test_bb_rate_isotropic_quadratic():
    tm = QuadraticGradientMap([0.1, -0.05])
    assert bb_rate(tm) == pytest.approx(0.5)
    # |F|^2 has gradient 2 (z - z*); rate 1/2 lands every point on z*
    for z in REF_VERTICES:
        assert np.allclose(gd_step(tm, z, bb_rate(tm)), [0.1, -0.05])


def test_bb_rate_zero_gradient():
    with pytest.raises(NonEvaluable):
        bb_rate(QuadraticGradientMap([0.0, 0.0]))
    assert omega_gd_disjoint(QuadraticGradientMap([0.0, 0.0]), CFG).label is Label.PASS


class Translating:
    """Constant F with a Jacobian that grows along x: every gradient step
    points the same way, with enough variation to define the BB rate."""

    def F(self, z):
        return np.array([1.0, 0.0])

    def J(self, z):
        return np.array([[3.0 + z[0], 0.0], [0.0, 1.0]])


def test_gd_oracles():
    assert omega_gd_converge(QuadraticGradientMap([0.1, 0.0]), CFG).label is Label.ACCEPT
    assert omega_gd_disjoint(QuadraticGradientMap([0.1, 0.0]), CFG).label is Label.PASS
    assert omega_gd_disjoint(Translating(), CFG).label is Label.REJECT
    assert omega_gd_converge(Translating(), CFG).label is Label.PASS


def test_default_sequence_names():
    assert DEFAULT_SEQUENCE == ("intersection", "linear_approximation", "gd_disjoint", "newton")


def test_label_triangle_runs_on_fixture():
    s = fixtures.single_observer()
    t = initial_triangulation().nodes[0].triangle
    for child in regular_subdivide(regular_subdivide(t)[0]):
        v = label_triangle(child, DEFAULT_SEQUENCE, s, CFG)
        assert v.label in (Label.ACCEPT, Label.REJECT, Label.PASS)
        assert (v.oracle is None) == (v.label is Label.PASS)
