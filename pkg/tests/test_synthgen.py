from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iodsub import fixtures
from iodsub.mastermap import PlanarPoints, fit_conic, focus_residual, residual_at_normal
from iodsub.synthgen import (
    EllipseSpec, gen_single, gen_two_solutions, generate, random_betas, random_rotation,
    rotation_from_quaternion, sample_ellipse_points,
)

BETAS = (0.0, 1.3, 2.4, math.pi, 5.0)


def test_periapsis_and_apoapsis():
    r = sample_ellipse_points(EllipseSpec(2.0, 0.5, BETAS))
    assert np.allclose(r[0], [1, 0, 0], atol=1e-15)
    assert np.allclose(r[3], [-3, 0, 0], atol=1e-15)


@given(st.floats(0.1, 10), st.floats(0, 0.95), st.integers(0, 2**32 - 1))
def test_points_on_ellipse(a, ecc, seed):
    spec = EllipseSpec(a, ecc, random_betas(np.random.default_rng(seed)))
    r = sample_ellipse_points(spec)
    lhs = ((r[:, 0] + spec.c) / spec.a) ** 2 + (r[:, 1] / spec.b) ** 2
    assert np.allclose(lhs, 1.0, rtol=0, atol=1e-12)
    assert np.all(r[:, 2] == 0)


def test_spec_validation():
    with pytest.raises(ValueError):
        EllipseSpec(-1.0, 0.1, BETAS)
    with pytest.raises(ValueError):
        EllipseSpec(1.0, 1.0, BETAS)
    with pytest.raises(ValueError):
        EllipseSpec(1.0, 0.1, (0.0, 1.0, 2.0, 3.0, 2 * math.pi))


def test_single_identity_rotation():
    s = gen_single(EllipseSpec(2.0, 0.5, BETAS), [0.0, 0.0, 5.0], np.eye(3))
    assert np.array_equal(s.known_solutions[0], [0, 0, 1])
    assert np.linalg.norm(residual_at_normal(s, [0, 0, 1.0])) <= 1e-9


def test_single_flips_to_upper_hemisphere():
    flip = rotation_from_quaternion([0.0, 1.0, 0.0, 0.0])  # half turn about x
    assert (flip @ [0, 0, 1.0])[2] < 0
    s = gen_single(EllipseSpec(2.0, 0.5, BETAS), [0.0, 0.0, 5.0], flip)
    assert s.known_solutions[0][2] > 0


def test_rotation_checks():
    with pytest.raises(ValueError):
        gen_single(EllipseSpec(2.0, 0.5, BETAS), [0.0, 0.0, 5.0], 2 * np.eye(3))
    r = random_rotation(np.random.default_rng(1))
    assert np.allclose(r.T @ r, np.eye(3)) and np.linalg.det(r) == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(100))
def test_single_known_normal_is_zero(seed):
    s = generate("single", seed)
    assert np.linalg.norm(residual_at_normal(s, s.known_solutions[0])) <= 1e-7


@pytest.mark.parametrize("seed", range(100))
def test_two_known_normals_are_zeros(seed):
    s = generate("two", seed)
    assert len(s.known_solutions) == 2
    for w in s.known_solutions:
        assert np.linalg.norm(residual_at_normal(s, w)) <= 1e-9


def test_two_degenerate_configuration():
    spec = EllipseSpec(2.0, 0.5, BETAS)
    with pytest.raises(ValueError):
        gen_two_solutions(spec, spec, np.eye(3), np.eye(3), [0.5] * 5)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_generated_conic_has_focus_at_origin(seed):
    rng = np.random.default_rng(seed)
    spec = EllipseSpec(rng.uniform(1, 2), rng.uniform(0, 0.8), random_betas(rng))
    r = sample_ellipse_points(spec)
    th = fit_conic(PlanarPoints(r[:, 0], r[:, 1], np.zeros(5), r))
    assert np.allclose(focus_residual(th), 0, atol=1e-7)


def test_reference_two_solutions_first_normal():
    s = fixtures.two_solutions()
    assert np.linalg.norm(residual_at_normal(s, s.known_solutions[0])) <= 1e-5


@pytest.mark.xfail(strict=True, reason=(
    "inputs are printed to six digits; the true zero of the printed data is "
    "2.4e-6 from the printed w2, which leaves |F(w2)| near 5e-5"))
def test_reference_two_solutions_second_normal():
    s = fixtures.two_solutions()
    assert np.linalg.norm(residual_at_normal(s, s.known_solutions[1])) <= 1e-5


def test_generate_is_deterministic():
    a, b = generate("single", 42), generate("single", 42)
    assert np.array_equal(a.p, b.p) and np.array_equal(a.u_raw, b.u_raw)
    with pytest.raises(ValueError):
        generate("three", 0)
