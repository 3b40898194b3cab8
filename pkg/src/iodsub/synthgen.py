"""Synthetic scenarios with known orbital-plane normals.

A focal ellipse is sampled in the ``z = 0`` plane, lines of sight are
drawn through its points, and everything is rotated.  The single-ellipse
construction has one known normal; the two-ellipse construction threads
each line through a point of each of two ellipses, so both normals are
zeros of the master function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .mastermap import Scenario
from .pplane import canonical_normal

E3 = np.array([0.0, 0.0, 1.0])
MIN_BETA_GAP = 0.2


@dataclass(frozen=True)
class EllipseSpec:
    a: float
    ecc: float
    betas: tuple

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        object.__setattr__(self, "betas", betas)
        if not self.a > 0:
            raise ValueError("semi-major axis must be positive")
        if not 0 <= self.ecc < 1:
            raise ValueError("eccentricity must lie in [0, 1)")
        if len(betas) != 5:
            raise ValueError("need exactly five angles")
        wrapped = sorted(b % (2 * math.pi) for b in betas)
        if any(abs(x - y) < 1e-12 for x, y in zip(wrapped, wrapped[1:])) or (
            wrapped[0] + 2 * math.pi - wrapped[-1] < 1e-12
        ):
            raise ValueError("angles must be distinct modulo 2 pi")

    @property
    def c(self) -> float:
        return self.a * self.ecc

    @property
    def b(self) -> float:
        return math.sqrt(self.a * self.a - self.c * self.c)


def sample_ellipse_points(spec: EllipseSpec) -> np.ndarray:
    """Rows ``(a cos beta - c, b sin beta, 0)``: one focus at the origin."""
    beta = np.asarray(spec.betas)
    return np.column_stack([
        spec.a * np.cos(beta) - spec.c,
        spec.b * np.sin(beta),
        np.zeros(5),
    ])


def rotation_from_quaternion(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=float) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform rotation from a normalized Gaussian quaternion."""
    q = rng.standard_normal(4)
    while np.linalg.norm(q) < 1e-8:
        q = rng.standard_normal(4)
    return rotation_from_quaternion(q)


def _check_rotation(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ValueError("rotation must be 3x3")
    if np.abs(r.T @ r - np.eye(3)).max() > 1e-12 or abs(np.linalg.det(r) - 1.0) > 1e-12:
        raise ValueError("matrix is not a rotation")
    return r


def random_betas(rng: np.random.Generator, min_gap: float = MIN_BETA_GAP) -> tuple:
    """Five angles whose circular gaps are all at least ``min_gap``."""
    while True:
        b = np.sort(rng.uniform(0.0, 2 * math.pi, 5))
        gaps = np.diff(np.append(b, b[0] + 2 * math.pi))
        if gaps.min() >= min_gap:
            return tuple(b)


def random_ellipse(rng: np.random.Generator, a_range=(1.0, 2.0), ecc_range=(0.0, 0.8)) -> EllipseSpec:
    return EllipseSpec(rng.uniform(*a_range), rng.uniform(*ecc_range), random_betas(rng))


def random_shell_points(rng: np.random.Generator, rmin: float, rmax: float, n: int = 5) -> np.ndarray:
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return d * rng.uniform(rmin, rmax, n)[:, None]


def _directions(targets, origins) -> np.ndarray:
    u = np.asarray(targets, dtype=float) - np.asarray(origins, dtype=float)
    scale = max(1.0, float(np.abs(targets).max()), float(np.abs(origins).max()))
    if np.any(np.linalg.norm(u, axis=1) <= 1e-12 * scale):
        raise ValueError("observer coincides with an orbit point: zero line of sight")
    return u


def gen_single(spec: EllipseSpec, observers, rotation) -> Scenario:
    """Lines from ``observers`` (5x3, or one shared 3-vector) through the
    ellipse points, rotated by ``rotation``."""
    r = sample_ellipse_points(spec)
    p_star = np.broadcast_to(np.asarray(observers, dtype=float), (5, 3))
    u_star = _directions(r, p_star)
    rot = _check_rotation(rotation)
    w = canonical_normal(rot @ E3)
    return Scenario(p_star @ rot.T, u_star @ rot.T, known_solutions=(w,))


def gen_two_solutions(spec1: EllipseSpec, spec2: EllipseSpec, r1, r2, taus: Sequence[float]) -> Scenario:
    """Lines through ``r_i`` on the first ellipse and ``R2 r'_i`` on the
    rotated second ellipse; observers sit at ``R2 r'_i + tau_i u_i``."""
    r = sample_ellipse_points(spec1)
    rot1, rot2 = _check_rotation(r1), _check_rotation(r2)
    r_prime = sample_ellipse_points(spec2) @ rot2.T
    u_star = _directions(r, r_prime)
    taus = np.asarray(taus, dtype=float)
    if taus.shape != (5,):
        raise ValueError("need five line parameters")
    p_star = r_prime + taus[:, None] * u_star
    w1 = canonical_normal(rot1 @ E3)
    w2 = canonical_normal(rot1 @ rot2 @ E3)
    return Scenario(p_star @ rot1.T, u_star @ rot1.T, known_solutions=(w1, w2))


def random_single(seed: int) -> Scenario:
    rng = np.random.default_rng(seed)
    spec = random_ellipse(rng)
    observers = random_shell_points(rng, 1.5 * spec.a, 3.0 * spec.a)
    return gen_single(spec, observers, random_rotation(rng))


def random_two_solutions(seed: int, tau_range=(0.3, 0.7)) -> Scenario:
    rng = np.random.default_rng(seed)
    spec1, spec2 = random_ellipse(rng), random_ellipse(rng)
    rot1, rot2 = random_rotation(rng), random_rotation(rng)
    taus = rng.uniform(*tau_range, 5)
    return gen_two_solutions(spec1, spec2, rot1, rot2, taus)


def generate(kind: str, seed: int) -> Scenario:
    if kind == "single":
        return random_single(seed)
    if kind == "two":
        return random_two_solutions(seed)
    raise ValueError(f"unknown scenario kind {kind!r}")
