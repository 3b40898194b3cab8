"""Accept/reject oracles for triangles of the projective plane.

Each oracle looks at the master function restricted to one triangle,
in local coordinates where the triangle is always the reference triangle
P(-0.5, -0.5), Q(1, 0), R(-0.5, 0.5) with its center at the origin.  An
oracle returns a :class:`Verdict`; "pass" means it reached no conclusion.
A :class:`~iodsub.mastermap.NonEvaluable` anywhere inside an oracle turns
into "pass".

The functions take a ``TriangleMap``-like object: anything with ``F(z)``,
``J(z)`` and (for the intersection oracle) ``intersections(z)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .geometry import convex_hull, polygon_area, polygon_in_triangle, ray_exit, triangles_disjoint
from .mastermap import NonEvaluable, Scenario, TriangleMap
from .pplane import REF_AREA, REF_VERTICES, Label, Triangle

ORIGIN = np.zeros(2)
REF_MIDPOINTS = 0.5 * (REF_VERTICES + np.roll(REF_VERTICES, -1, axis=0))


class Verdict(NamedTuple):
    label: Label
    oracle: Optional[str] = None


PASS = Verdict(Label.PASS)


@dataclass(frozen=True)
class OracleConfig:
    c_max_int_norm: float = 10.0
    c_safety: float = 1.0
    c_area_scaling: float = 0.9
    newton_variant: str = "three_vertex"  # or "six_point_hull"
    jacobian_norm: str = "spectral"  # or "frobenius"

    def __post_init__(self):
        if not self.c_max_int_norm > 0:
            raise ValueError("c_max_int_norm must be positive")
        if not self.c_safety >= 0:
            raise ValueError("c_safety must be non-negative")
        if not 0 < self.c_area_scaling <= 1:
            raise ValueError("c_area_scaling must lie in (0, 1]")
        if self.newton_variant not in ("three_vertex", "six_point_hull"):
            raise ValueError(f"unknown newton_variant {self.newton_variant!r}")
        if self.jacobian_norm not in ("spectral", "frobenius"):
            raise ValueError(f"unknown jacobian_norm {self.jacobian_norm!r}")


def _totalize(name: str, fn):
    def oracle(tm, cfg: OracleConfig) -> Verdict:
        try:
            label = fn(tm, cfg)
        except NonEvaluable:
            return PASS
        return Verdict(label, name) if label is not Label.PASS else PASS

    oracle.__name__ = f"omega_{name}"
    oracle.__doc__ = fn.__doc__
    return oracle


def _intersection(tm, cfg):
    """Reject if a line of sight pierces the orbital plane through the
    triangle center farther than ``c_max_int_norm`` from the origin."""
    pts = tm.intersections(ORIGIN)
    if np.any(np.linalg.norm(pts.r, axis=1) > cfg.c_max_int_norm):
        return Label.REJECT
    return Label.PASS


def _matrix_norm(j, kind):
    if kind == "frobenius":
        return float(np.linalg.norm(j))
    return float(np.linalg.norm(j, 2))


def _linear_approximation(tm, cfg):
    """Reject if the first-order model at the center cannot reach zero
    within radius ``c_safety``."""
    f0, j0 = tm.F(ORIGIN), tm.J(ORIGIN)
    if np.linalg.norm(f0) - cfg.c_safety * _matrix_norm(j0, cfg.jacobian_norm) > 0:
        return Label.REJECT
    return Label.PASS


def newton_step(f, jac, z) -> np.ndarray:
    """One Newton iterate ``z - J(z)^-1 f(z)``."""
    z = np.asarray(z, dtype=float)
    jz = np.asarray(jac(z), dtype=float)
    det = jz[0, 0] * jz[1, 1] - jz[0, 1] * jz[1, 0]
    if not abs(det) > 1e-14 * float(np.sum(jz * jz)):
        raise NonEvaluable("newton", "singular Jacobian")
    return z - np.linalg.solve(jz, f(z))


def _contracts(images, cfg) -> bool:
    if len(images) > 3:
        images = convex_hull(images)
    return polygon_in_triangle(images, REF_VERTICES) and (
        polygon_area(images) <= cfg.c_area_scaling * REF_AREA
    )


def _newton(tm, cfg):
    """Accept if Newton maps the probe points into a strictly smaller
    region inside the triangle."""
    probes = list(REF_VERTICES)
    if cfg.newton_variant == "six_point_hull":
        probes += list(REF_MIDPOINTS)
    images = [newton_step(tm.F, tm.J, z) for z in probes]
    return Label.ACCEPT if _contracts(images, cfg) else Label.PASS


def grad_sq_norm(tm, z) -> np.ndarray:
    """Gradient of ``|F|^2``: ``2 J^T F``."""
    return 2.0 * tm.J(z).T @ tm.F(z)


def bb_rate(tm) -> float:
    """Barzilai-Borwein learning rate from the center and the midpoint of
    the center-to-boundary ray along the gradient."""
    g0 = grad_sq_norm(tm, ORIGIN)
    if not np.any(g0):
        raise NonEvaluable("gradient", "zero gradient at the center")
    exit_point = ray_exit(ORIGIN, g0, REF_VERTICES)
    if exit_point is None:
        raise NonEvaluable("gradient", "ray does not leave the triangle")
    mid = 0.5 * exit_point
    diff = grad_sq_norm(tm, mid) - g0
    denom = float(diff @ diff)
    if not np.sqrt(denom) > 1e-14 * np.linalg.norm(g0):
        raise NonEvaluable("gradient", "gradient does not change along the ray")
    return abs(float(mid @ diff)) / denom


def gd_step(tm, z, rate: float) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return z - rate * grad_sq_norm(tm, z)


def _gd_images(tm):
    rate = bb_rate(tm)
    return [gd_step(tm, z, rate) for z in REF_VERTICES]


def _gd_converge(tm, cfg):
    """Accept if one gradient step maps the triangle into a smaller
    triangle inside it."""
    return Label.ACCEPT if _contracts(_gd_images(tm), cfg) else Label.PASS


def _gd_disjoint(tm, cfg):
    """Reject if one gradient step moves the triangle off itself."""
    if triangles_disjoint(_gd_images(tm), REF_VERTICES):
        return Label.REJECT
    return Label.PASS


omega_intersection = _totalize("intersection", _intersection)
omega_linear_approximation = _totalize("linear_approximation", _linear_approximation)
omega_newton = _totalize("newton", _newton)
omega_gd_converge = _totalize("gd_converge", _gd_converge)
omega_gd_disjoint = _totalize("gd_disjoint", _gd_disjoint)

Oracle = Callable[[TriangleMap, OracleConfig], Verdict]

ORACLES: dict[str, Oracle] = {
    "intersection": omega_intersection,
    "linear_approximation": omega_linear_approximation,
    "gd_disjoint": omega_gd_disjoint,
    "gd_converge": omega_gd_converge,
    "newton": omega_newton,
}

DEFAULT_SEQUENCE = ("intersection", "linear_approximation", "gd_disjoint", "newton")


def resolve(sequence: Sequence) -> list[tuple[str, Oracle]]:
    """Turn oracle names (or ``(name, callable)`` pairs) into callables."""
    if not sequence:
        raise ValueError("oracle sequence must not be empty")
    out = []
    for item in sequence:
        if isinstance(item, str):
            table = ORACLES
            if item not in table:
                from .intervals import CERTIFIED_ORACLES

                table = CERTIFIED_ORACLES
            if item not in table:
                raise ValueError(f"unknown oracle {item!r}")
            out.append((item, table[item]))
        else:
            out.append(tuple(item))
    return out


def label_map(tm, sequence, cfg: OracleConfig) -> Verdict:
    """Apply oracles in order until one decides."""
    for name, oracle in resolve(sequence):
        verdict = oracle(tm, cfg)
        if verdict.label is not Label.PASS:
            return Verdict(verdict.label, verdict.oracle or name)
    return PASS


def label_triangle(t: Triangle, sequence, s: Scenario, cfg: OracleConfig) -> Verdict:
    return label_map(TriangleMap(s, t), sequence, cfg)
