"""The master function whose zeros are orbital-plane normals.

For a triangle with local frame ``A`` the map is the composition

    z  ->  A(z)  ->  w = A(z)/|A(z)|  ->  (w, v1, v2)  ->  (x_i, y_i)
       ->  conic coefficients theta  ->  focus residual

where ``(x_i, y_i)`` are the in-plane coordinates of the points where the
five lines of sight pierce the plane orthogonal to ``w``, ``theta`` fits
``a x^2 + b y^2 + c xy + d x + e y + 1 = 0`` through them, and the focus
residual ``(e^2 - 4b - d^2 + 4a, de - 2c)`` vanishes exactly when the
origin is a focus of the conic.

Coefficients follow the column order ``[x^2, y^2, xy, x, y]`` of the
collocation matrix; the focus polynomials are only correct in that order.

Every stage carries its derivative alongside its value, so ``eval_FJ``
returns ``F`` and the 2x2 Jacobian from one pass (and one 5x5 solve).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .pplane import LocalFrame, Triangle, local_frame

EPS_NORM = 1e-12
EPS_FRAME = 1e-10
EPS_LOS = 1e-10
KAPPA_MAX = 1e12


class NonEvaluable(ArithmeticError):
    """A pipeline stage is undefined at the requested point."""

    def __init__(self, stage: str, detail: str = ""):
        self.stage = stage
        self.detail = detail
        super().__init__(f"{stage}: {detail}" if detail else stage)


@dataclass(frozen=True)
class Scenario:
    """Five lines of sight ``p_i + t u_i``; rows of ``p`` and ``u`` are the lines.

    Directions are normalized on construction; the zero set of the master
    function does not depend on their length.  The directions as given are
    kept in ``u_raw`` so files round-trip exactly.
    """

    p: np.ndarray
    u: np.ndarray
    known_solutions: tuple = ()
    length_unit: Optional[str] = None
    u_raw: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        u = np.array(self.u, dtype=float)
        if p.shape != (5, 3) or u.shape != (5, 3):
            raise ValueError(f"need 5 lines in R^3, got p{p.shape} u{u.shape}")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(u))):
            raise ValueError("scenario contains non-finite values")
        norms = np.linalg.norm(u, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("zero direction vector")
        raw = u.copy()
        u = u / norms[:, None]
        for arr in (p, u, raw):
            arr.flags.writeable = False
        object.__setattr__(self, "u_raw", raw)
        known = tuple(np.array(w, dtype=float) for w in self.known_solutions)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "known_solutions", known)

    @classmethod
    def from_columns(cls, p, u, **kw) -> "Scenario":
        """Build from 3x5 matrices whose columns are the lines."""
        return cls(np.asarray(p, dtype=float).T, np.asarray(u, dtype=float).T, **kw)


@dataclass(frozen=True)
class Frame:
    w: np.ndarray
    v1: np.ndarray
    v2: np.ndarray


@dataclass(frozen=True)
class PlanarPoints:
    x: np.ndarray
    y: np.ndarray
    rho: np.ndarray
    r: np.ndarray  # 5x3 piercing points in R^3


@dataclass(frozen=True)
class ConicCoeffs:
    a: float
    b: float
    c: float
    d: float
    e: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d, self.e])

    def __call__(self, x, y):
        return self.a * x * x + self.b * y * y + self.c * x * y + self.d * x + self.e * y + 1.0


def normalize(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    n = float(np.linalg.norm(w))
    if not n > EPS_NORM:
        raise NonEvaluable("normalize", "vector too close to zero")
    return w / n


def build_frame(w, u1) -> Frame:
    w = np.asarray(w, dtype=float)
    c = np.cross(w, u1)
    nc = float(np.linalg.norm(c))
    if not nc > EPS_FRAME:
        raise NonEvaluable("frame", "normal parallel to first line of sight")
    v2 = c / nc
    e = np.cross(v2, w)
    v1 = e / np.linalg.norm(e)
    return Frame(w, v1, v2)


def intersect_plane(f: Frame, s: Scenario) -> PlanarPoints:
    pw = s.p @ f.w
    uw = s.u @ f.w
    if np.any(np.abs(uw) <= EPS_LOS):
        raise NonEvaluable("intersect", "line of sight parallel to orbital plane")
    rho = -pw / uw
    r = s.p + rho[:, None] * s.u
    return PlanarPoints(r @ f.v1, r @ f.v2, rho, r)


def collocation_matrix(x, y) -> np.ndarray:
    return np.column_stack([x * x, y * y, x * y, x, y])


def _inverse_checked(m: np.ndarray) -> np.ndarray:
    # condition is measured after column equilibration so it is unit-free
    scale = np.abs(m).max(axis=0)
    if not np.all(scale > 0.0) or not np.all(np.isfinite(m)):
        raise NonEvaluable("conic", "degenerate point configuration")
    ms = m / scale
    try:
        inv_s = np.linalg.inv(ms)
    except np.linalg.LinAlgError:
        raise NonEvaluable("conic", "singular collocation matrix") from None
    kappa = np.abs(ms).sum(axis=1).max() * np.abs(inv_s).sum(axis=1).max()
    if not kappa < KAPPA_MAX:
        raise NonEvaluable("conic", f"ill-conditioned collocation matrix (kappa={kappa:.3g})")
    return inv_s / scale[:, None]


def fit_conic(pts: PlanarPoints) -> ConicCoeffs:
    minv = _inverse_checked(collocation_matrix(pts.x, pts.y))
    return ConicCoeffs(*(-minv.sum(axis=1)))


def focus_residual(theta) -> np.ndarray:
    a, b, c, d, e = theta.as_array() if isinstance(theta, ConicCoeffs) else theta
    return np.array([e * e - 4.0 * b - d * d + 4.0 * a, d * e - 2.0 * c])


def _unit_with_derivative(v, dv, eps, stage):
    n = float(np.sqrt(v @ v))
    if not n > eps:
        raise NonEvaluable(stage, "vector too close to zero")
    q = v / n
    return q, (dv - q[:, None] * (q @ dv)) / n


def skew(a) -> np.ndarray:
    """Matrix of ``b -> a x b``."""
    return np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])


@dataclass
class Evaluation:
    """Every intermediate of one pass through the master function."""

    z: np.ndarray
    w: np.ndarray
    frame: Frame
    points: PlanarPoints
    theta: ConicCoeffs
    F: np.ndarray
    J: Optional[np.ndarray] = None


def evaluate(s: Scenario, frame: LocalFrame, z, jacobian: bool = True) -> Evaluation:
    """Run the pipeline at local point ``z``; raise :class:`NonEvaluable` on failure."""
    z = np.asarray(z, dtype=float)
    wr = frame.origin + frame.basis @ z
    dwr = frame.basis

    w, dw = _unit_with_derivative(wr, dwr, EPS_NORM, "normalize")

    ku1 = skew(s.u[0])
    c = -ku1 @ w
    dc = -ku1 @ dw
    v2, dv2 = _unit_with_derivative(c, dc, EPS_FRAME, "frame")
    kw = skew(w)
    e = -kw @ v2
    de = -kw @ dv2 + skew(v2) @ dw
    v1, dv1 = _unit_with_derivative(e, de, EPS_FRAME, "frame")

    pw = s.p @ w
    uw = s.u @ w
    if np.any(np.abs(uw) <= EPS_LOS):
        raise NonEvaluable("intersect", "line of sight parallel to orbital plane")
    rho = -pw / uw
    r = s.p + rho[:, None] * s.u
    x = r @ v1
    y = r @ v2

    m = collocation_matrix(x, y)
    minv = _inverse_checked(m)
    th = -minv.sum(axis=1)
    a, b, cc, d, ee = th
    F = np.array([ee * ee - 4.0 * b - d * d + 4.0 * a, d * ee - 2.0 * cc])
    if not np.all(np.isfinite(F)):
        raise NonEvaluable("focus", "non-finite residual")

    J = None
    if jacobian:
        # d rho_i = (-p_i.dw - rho_i u_i.dw) / u_i.w
        drho = (-(s.p @ dw) - rho[:, None] * (s.u @ dw)) / uw[:, None]
        # d r_i = u_i drho_i ; d x_i = d r_i . v1 + r_i . d v1
        dx = (s.u @ v1)[:, None] * drho + r @ dv1
        dy = (s.u @ v2)[:, None] * drho + r @ dv2
        sx = 2.0 * a * x + cc * y + d
        sy = 2.0 * b * y + cc * x + ee
        dth = -minv @ (sx[:, None] * dx + sy[:, None] * dy)
        da, db, dcc, dd, dee = dth
        J = np.array([
            2.0 * ee * dee - 4.0 * db - 2.0 * d * dd + 4.0 * da,
            dd * ee + d * dee - 2.0 * dcc,
        ])
        if not np.all(np.isfinite(J)):
            raise NonEvaluable("focus", "non-finite Jacobian")

    pts = PlanarPoints(x, y, rho, r)
    return Evaluation(z, w, Frame(w, v1, v2), pts, ConicCoeffs(*th), F, J)


def eval_F(s: Scenario, t: Triangle, z) -> np.ndarray:
    return evaluate(s, local_frame(t), z, jacobian=False).F


def eval_J(s: Scenario, t: Triangle, z) -> np.ndarray:
    return evaluate(s, local_frame(t), z).J


def residual_at_normal(s: Scenario, w) -> np.ndarray:
    """Master residual at a normal direction, independent of any triangle."""
    f = build_frame(normalize(w), s.u[0])
    return focus_residual(fit_conic(intersect_plane(f, s)))


@dataclass
class TriangleMap:
    """The master function restricted to one triangle, with a call counter.

    Evaluations are cached by local point, so oracles that probe the same
    vertex share one linear solve.  ``solves`` counts 5x5 solves actually
    performed.  ``hints`` carries results computed ahead of time for a whole
    batch of triangles, keyed by oracle name.
    """

    scenario: Scenario
    triangle: Triangle
    frame: LocalFrame = field(init=False)
    solves: int = 0
    hints: dict = field(default_factory=dict, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.frame = local_frame(self.triangle)

    def at(self, z) -> Evaluation:
        key = (float(z[0]), float(z[1]))
        hit = self._cache.get(key)
        if hit is None:
            try:
                hit = evaluate(self.scenario, self.frame, key)
            except NonEvaluable as exc:
                hit = exc
            if not (isinstance(hit, NonEvaluable) and hit.stage in ("normalize", "frame", "intersect")):
                self.solves += 1
            self._cache[key] = hit
        if isinstance(hit, NonEvaluable):
            raise hit
        return hit

    def F(self, z) -> np.ndarray:
        return self.at(z).F

    def J(self, z) -> np.ndarray:
        return self.at(z).J

    def intersections(self, z) -> PlanarPoints:
        """Piercing points at ``z`` without fitting a conic."""
        w = normalize(self.frame(z))
        return intersect_plane(build_frame(w, self.scenario.u[0]), self.scenario)
