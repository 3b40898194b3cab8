"""Interval enclosures of the master function and Krawczyk certification.

Intervals are numpy arrays of lower and upper endpoints, so a whole batch
of boxes can be pushed through the pipeline at once.  The platform gives
no control over the rounding mode, so every elementary operation rounds
to nearest and then decides the direction of the error with an error-free
transformation (TwoSum, Dekker's product).  Results that are exact stay
exact; otherwise the bound is moved one ulp outward on the side where the
true value lies.  When the transformation is not valid (overflow, deep
underflow) both bounds move one ulp, which is always safe because a
correctly rounded result is within half an ulp.

Certification works in local triangle coordinates: the box
``[-0.5, 1] x [-0.5, 0.5]`` covers the reference triangle.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .mastermap import NonEvaluable, Scenario, evaluate
from .oracles import Verdict
from .pplane import Label, Triangle, exact_local_frame, local_frame

_INF = np.inf
_SPLITTER = 134217729.0  # 2**27 + 1
_SPLIT_MAX = 2.0**995
_PROD_MIN = 2.0**-900


def _down(x):
    return np.nextafter(x, -_INF)


def _up(x):
    return np.nextafter(x, _INF)


def _directed(s, err):
    """Bounds for ``s + err`` where only the sign of ``err`` is trusted;
    NaN means unknown."""
    with np.errstate(invalid="ignore"):
        lo = np.where(err >= 0, s, _down(s))
        hi = np.where(err <= 0, s, _up(s))
    return lo, hi


def _two_sum_err(a, b, s):
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod_err(a, b, p):
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    ok = (np.abs(a) <= _SPLIT_MAX) & (np.abs(b) <= _SPLIT_MAX) & (
        (np.abs(p) >= _PROD_MIN) | (a == 0) | (b == 0)
    )
    return np.where(ok, err, np.nan)


def add_rounded(a, b):
    with np.errstate(invalid="ignore", over="ignore"):
        s = a + b
        return _directed(s, _two_sum_err(a, b, s))


def mul_rounded(a, b):
    with np.errstate(invalid="ignore", over="ignore", under="ignore"):
        p = a * b
        return _directed(p, _two_prod_err(a, b, p))


def div_rounded(a, b):
    with np.errstate(invalid="ignore", over="ignore", under="ignore", divide="ignore"):
        q = a / b
        e = _two_prod_err(q, b, q * b)
        # a - q*b is exact when q*b is within a factor two of a
        r = (a - q * b) - e
        return _directed(q, r * np.sign(b))


def sqrt_rounded(a):
    with np.errstate(invalid="ignore", over="ignore", under="ignore"):
        s = np.sqrt(a)
        e = _two_prod_err(s, s, s * s)
        return _directed(s, (a - s * s) - e)


def fraction_interval(q: Fraction) -> tuple[float, float]:
    """Tightest float bounds of a rational."""
    f = float(q)
    exact = Fraction(f)
    if exact == q:
        return f, f
    if exact < q:
        return f, float(_up(f))
    return float(_down(f)), f


class Interval:
    """Array of closed intervals ``[lo, hi]`` with outward rounding.

    Plain numbers and arrays mix in as zero-width intervals and are taken
    to be exact.
    """

    __slots__ = ("lo", "hi")
    __array_priority__ = 1000

    def __init__(self, lo, hi=None):
        lo = np.asarray(lo, dtype=float)
        hi = lo if hi is None else np.asarray(hi, dtype=float)
        lo, hi = np.broadcast_arrays(lo, hi)
        lo = np.where(np.isnan(lo), -_INF, lo)
        hi = np.where(np.isnan(hi), _INF, hi)
        if np.any(lo > hi):
            raise ValueError("interval with lo > hi")
        self.lo = lo
        self.hi = hi

    @classmethod
    def from_fractions(cls, values) -> "Interval":
        arr = np.asarray(values, dtype=object)
        lo = np.empty(arr.shape)
        hi = np.empty(arr.shape)
        for idx, q in np.ndenumerate(arr):
            lo[idx], hi[idx] = fraction_interval(Fraction(q))
        return cls(lo, hi)

    @classmethod
    def full(cls, shape) -> "Interval":
        return cls(np.full(shape, -_INF), np.full(shape, _INF))

    # -- array protocol ------------------------------------------------
    @property
    def shape(self):
        return self.lo.shape

    def __len__(self):
        return len(self.lo)

    def __getitem__(self, key) -> "Interval":
        return Interval(self.lo[key], self.hi[key])

    def __repr__(self):
        if self.lo.ndim == 0:
            return f"Interval([{self.lo!r}, {self.hi!r}])"
        return f"Interval(lo={self.lo!r}, hi={self.hi!r})"

    # -- measures --------------------------------------------------------
    def mid(self) -> np.ndarray:
        return 0.5 * self.lo + 0.5 * self.hi

    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def mag(self) -> np.ndarray:
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def is_finite(self) -> np.ndarray:
        return np.isfinite(self.lo) & np.isfinite(self.hi)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (self.lo <= x) & (x <= self.hi)

    def contains_zero(self) -> np.ndarray:
        return (self.lo <= 0.0) & (0.0 <= self.hi)

    def strictly_inside(self, other: "Interval") -> np.ndarray:
        return (other.lo < self.lo) & (self.hi < other.hi)

    def subset(self, other: "Interval") -> np.ndarray:
        return (other.lo <= self.lo) & (self.hi <= other.hi)

    def intersect(self, other: "Interval") -> "Interval":
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        # empty intersections cannot happen for enclosures of the same set;
        # keep the first operand if rounding makes them cross
        bad = lo > hi
        return Interval(np.where(bad, self.lo, lo), np.where(bad, self.hi, hi))

    # -- arithmetic ------------------------------------------------------
    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __add__(self, other):
        o = as_interval(other)
        return Interval(add_rounded(self.lo, o.lo)[0], add_rounded(self.hi, o.hi)[1])

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-as_interval(other))

    def __rsub__(self, other):
        return as_interval(other) + (-self)

    def __mul__(self, other):
        o = as_interval(other)
        los, his = [], []
        for x in (self.lo, self.hi):
            for y in (o.lo, o.hi):
                lo, hi = mul_rounded(x, y)
                los.append(lo)
                his.append(hi)
        return Interval(np.minimum.reduce(los), np.maximum.reduce(his))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = as_interval(other)
        if np.any(o.contains_zero()):
            raise NonEvaluable("interval", "division by an interval containing zero")
        return divide(self, o)

    def __rtruediv__(self, other):
        return as_interval(other) / self

    def sqr(self) -> "Interval":
        lo2 = mul_rounded(self.lo, self.lo)
        hi2 = mul_rounded(self.hi, self.hi)
        pos = self.lo >= 0
        neg = self.hi <= 0
        lo = np.where(pos, lo2[0], np.where(neg, hi2[0], 0.0))
        hi = np.where(pos, hi2[1], np.where(neg, lo2[1], np.maximum(lo2[1], hi2[1])))
        return Interval(lo, hi)

    def sqrt(self) -> "Interval":
        """Square root on the non-negative part; an interval entirely
        below zero becomes the full line."""
        lo = sqrt_rounded(np.maximum(self.lo, 0.0))[0]
        hi = sqrt_rounded(self.hi)[1]
        lo = np.where(self.hi < 0, -_INF, np.maximum(lo, 0.0))
        hi = np.where(self.hi < 0, _INF, hi)
        return Interval(lo, hi)

    def sum(self, axis: int = -1) -> "Interval":
        lo = np.moveaxis(self.lo, axis, 0)
        hi = np.moveaxis(self.hi, axis, 0)
        acc_lo, acc_hi = lo[0], hi[0]
        for k in range(1, lo.shape[0]):
            acc_lo = add_rounded(acc_lo, lo[k])[0]
            acc_hi = add_rounded(acc_hi, hi[k])[1]
        return Interval(acc_lo, acc_hi)


def as_interval(x) -> Interval:
    return x if isinstance(x, Interval) else Interval(x)


def divide(a: Interval, b: Interval) -> Interval:
    """Quotient without the zero check: entries whose denominator contains
    zero become the full line."""
    a, b = as_interval(a), as_interval(b)
    los, his = [], []
    for x in (a.lo, a.hi):
        for y in (b.lo, b.hi):
            lo, hi = div_rounded(x, y)
            los.append(lo)
            his.append(hi)
    with np.errstate(invalid="ignore"):
        lo = np.minimum.reduce(los)
        hi = np.maximum.reduce(his)
    bad = b.contains_zero()
    return Interval(np.where(bad, -_INF, lo), np.where(bad, _INF, hi))


def stack(items: Sequence[Interval], axis: int = -1) -> Interval:
    items = [as_interval(i) for i in items]
    return Interval(np.stack([i.lo for i in items], axis), np.stack([i.hi for i in items], axis))


def dot(a, b) -> Interval:
    return (as_interval(a) * b).sum(-1)


def cross(a: Interval, b) -> Interval:
    b = as_interval(b)
    return stack([
        a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
        a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
        a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
    ])


def norm(a: Interval) -> Interval:
    return a.sqr().sum(-1).sqrt()


def matvec(m, x) -> Interval:
    """``m @ x`` over the last axes: m (..., n, k), x (..., k)."""
    return (as_interval(m) * as_interval(x)[..., None, :]).sum(-1)


def matmul(a, b) -> Interval:
    """``a @ b`` over the last two axes."""
    a, b = as_interval(a), as_interval(b)
    return (a[..., :, :, None] * b[..., None, :, :]).sum(-2)


def interval_matrix_norm(m) -> float:
    """Largest row sum of entry magnitudes: the operator infinity-norm
    maximized over the interval matrix."""
    mag = as_interval(m).mag()
    if mag.size == 0:
        return 0.0
    # row sums rounded upward
    acc = mag[..., 0]
    for k in range(1, mag.shape[-1]):
        acc = add_rounded(acc, mag[..., k])[1]
    return float(np.max(acc))


# ---------------------------------------------------------------------------
# verified linear solve


def _safe_inverse(mid: np.ndarray) -> np.ndarray:
    """Batched inverse; singular or non-finite entries give zero."""
    finite = np.all(np.isfinite(mid), axis=(-2, -1))
    clean = np.where(finite[..., None, None], mid, np.eye(mid.shape[-1]))
    try:
        out = np.linalg.inv(clean)
    except np.linalg.LinAlgError:
        out = np.zeros_like(clean)
        for idx in np.ndindex(clean.shape[:-2]):
            try:
                out[idx] = np.linalg.inv(clean[idx])
            except np.linalg.LinAlgError:
                pass
    out[~finite] = 0.0
    out[~np.all(np.isfinite(out), axis=(-2, -1))] = 0.0
    return out


class PreconditionedSystem:
    """Interval matrix ``[M]`` preconditioned by the inverse of its midpoint.

    With ``C = mid(M)^-1`` and ``G = I - C[M]``, a row-sum bound
    ``|G|_inf < 1`` makes every ``C M`` strictly diagonally dominant, hence
    every ``M`` in ``[M]`` invertible, and gives the a priori bound
    ``|x - x~| <= |C(b - [M] x~)| / (1 - |G|)``.  The bound is tightened by a
    few Gauss-Seidel sweeps on the residual equation.
    """

    sweeps = 3

    def __init__(self, m: Interval):
        n = m.shape[-1]
        with np.errstate(all="ignore"):
            self.c = _safe_inverse(m.mid())
        self.m = m
        self.g = Interval(np.eye(n)) - matmul(self.c, m)
        mag = self.g.mag()
        rows = mag[..., 0]
        for k in range(1, n):
            rows = add_rounded(rows, mag[..., k])[1]
        beta = np.max(rows, axis=-1)
        self.beta = beta
        self.ok = np.isfinite(beta) & (beta < 1.0)

    def solve(self, b: Interval) -> Interval:
        """Enclosure of ``M^-1 b`` for all ``M`` in ``[M]`` and ``b`` in
        ``[b]``; b has shape (..., n, k).  Entries where the system is not
        certified come back as the full line."""
        b = as_interval(b)
        with np.errstate(all="ignore"):
            xt = np.einsum("...ij,...jk->...ik", self.c, b.mid())
            xt = np.where(np.isfinite(xt), xt, 0.0)
            r = matmul(self.c, b - matmul(self.m, xt))
            rmag = np.max(r.mag(), axis=-2)  # per right-hand side
            one_minus = add_rounded(np.ones_like(self.beta), -self.beta)[0]
            delta = div_rounded(rmag, one_minus[..., None])[1]
            delta = np.where(self.ok[..., None] & (delta >= 0), delta, _INF)
        e = Interval(-delta[..., None, :], delta[..., None, :])
        e = Interval(np.broadcast_to(e.lo, r.shape), np.broadcast_to(e.hi, r.shape))
        n = r.shape[-2]
        for _ in range(self.sweeps):
            for i in range(n):
                # e_i <- r_i + sum_j G_ij e_j, using the newest e_j
                upd = r[..., i, :] + (self.g[..., i, :, None] * e).sum(-2)
                row = e[..., i, :].intersect(upd)
                lo, hi = e.lo.copy(), e.hi.copy()
                lo[..., i, :], hi[..., i, :] = row.lo, row.hi
                e = Interval(lo, hi)
        x = xt + e
        bad = ~(self.ok & np.all(np.isfinite(delta), axis=-1))
        bad = np.broadcast_to(bad[..., None, None], x.shape)
        return Interval(np.where(bad, -_INF, x.lo), np.where(bad, _INF, x.hi))


# ---------------------------------------------------------------------------
# enclosures of the master function


def reference_box() -> Interval:
    """Smallest axis-aligned box around the reference triangle."""
    return Interval([-0.5, -0.5], [1.0, 0.5])


def box(lo, hi) -> Interval:
    return Interval(lo, hi)


def frame_intervals(triangles) -> tuple[Interval, Interval]:
    """Tight enclosures of the exact local frame: origin (..., 3) and basis
    (..., 3, 2); a single triangle or a sequence of them."""
    if isinstance(triangles, Triangle):
        origin, basis = exact_local_frame(triangles)
        return Interval.from_fractions(origin), Interval.from_fractions(basis)
    pairs = [frame_intervals(t) for t in triangles]
    return stack([o for o, _ in pairs], axis=0), stack([b for _, b in pairs], axis=0)


def _unit(v: Interval, dv: Optional[list]):
    n = norm(v)
    q = divide(v, n[..., None])
    if dv is None:
        return q, None
    dq = [divide(d - q * dot(q, d)[..., None], n[..., None]) for d in dv]
    return q, dq


def _points(s: Scenario, frame, z: Interval, jacobian: bool):
    """Planar coordinates of the piercing points (..., 5) and, optionally,
    their derivatives along the two local axes."""
    origin, basis = frame
    b0, b1 = basis[..., 0], basis[..., 1]
    wr = origin + b0 * z[..., 0, None] + b1 * z[..., 1, None]
    dwr = [b0, b1]
    p = Interval(s.p)
    u = Interval(s.u)
    u1 = u[0]

    c = cross(wr, u1)
    dc = [cross(d, u1) for d in dwr] if jacobian else None
    v2, dv2 = _unit(c, dc)
    e = cross(v2, wr)
    de = [cross(d2, wr) + cross(v2, dw) for d2, dw in zip(dv2, dwr)] if jacobian else None
    v1, dv1 = _unit(e, de)

    wr5 = wr[..., None, :]
    uw = dot(u, wr5)
    rho = -divide(dot(p, wr5), uw)
    r = p + rho[..., None] * u
    x = dot(r, v1[..., None, :])
    y = dot(r, v2[..., None, :])
    if not jacobian:
        return x, y, None, None

    uv1 = dot(u, v1[..., None, :])
    uv2 = dot(u, v2[..., None, :])
    dx, dy = [], []
    for k in range(2):
        dk = dwr[k][..., None, :]
        drho = divide(-dot(p, dk) - rho * dot(u, dk), uw)
        dx.append(uv1 * drho + dot(r, dv1[k][..., None, :]))
        dy.append(uv2 * drho + dot(r, dv2[k][..., None, :]))
    return x, y, dx, dy


def _conic(x: Interval, y: Interval, dx=None, dy=None):
    """Focus residual (..., 2) and, given point derivatives, its Jacobian."""
    m = stack([x.sqr(), y.sqr(), x * y, x, y])
    system = PreconditionedSystem(m)
    theta = system.solve(Interval(-np.ones(m.shape[:-1] + (1,))))[..., 0]
    a, bb, cc, d, ee = (theta[..., k] for k in range(5))
    f = stack([ee.sqr() - 4.0 * bb - d.sqr() + 4.0 * a, d * ee - 2.0 * cc])
    if dx is None:
        return f, None
    sx = 2.0 * a[..., None] * x + cc[..., None] * y + d[..., None]
    sy = 2.0 * bb[..., None] * y + cc[..., None] * x + ee[..., None]
    dtheta = system.solve(stack([-(sx * dx[k] + sy * dy[k]) for k in range(2)]))
    da, db, dcc, dd, dee = (dtheta[..., k, :] for k in range(5))
    j = stack([
        2.0 * ee[..., None] * dee - 4.0 * db - 2.0 * d[..., None] * dd + 4.0 * da,
        dd * ee[..., None] + d[..., None] * dee - 2.0 * dcc,
    ], axis=-2)
    return f, j


def enclose(s: Scenario, t: Triangle, z: Interval):
    """Enclosures of F (..., 2) and J (..., 2, 2) over boxes ``z`` (..., 2)
    in local coordinates of ``t``.

    The projective point is not normalized: every later stage is invariant
    under positive scaling of the normal, so the raw affine image gives the
    same values with less overestimation.  The planar points and F are
    each intersected with their mean-value form around the box midpoint,
    which removes most of the dependency blow-up on small boxes.  Entries
    that could not be enclosed (a denominator straddling zero, an
    uncertified linear solve) are the full line.
    """
    return _enclose(s, frame_intervals(t), as_interval(z))


def enclose_many(s: Scenario, triangles: Sequence[Triangle], z: Optional[Interval] = None):
    """:func:`enclose` for many triangles at once, one box per triangle
    (default: each reference box)."""
    frame = frame_intervals(list(triangles))
    if z is None:
        ref = reference_box()
        z = Interval(np.tile(ref.lo, (len(triangles), 1)), np.tile(ref.hi, (len(triangles), 1)))
    return _enclose(s, frame, as_interval(z))


def _enclose(s: Scenario, frame, z: Interval):
    zm = z.mid()
    zm = np.where(np.isfinite(zm), zm, 0.0)
    dz = z - zm

    x, y, dx, dy = _points(s, frame, z, True)
    xm, ym, _, _ = _points(s, frame, Interval(zm), False)
    x = x.intersect(xm + dx[0] * dz[..., 0, None] + dx[1] * dz[..., 1, None])
    y = y.intersect(ym + dy[0] * dz[..., 0, None] + dy[1] * dz[..., 1, None])

    f, j = _conic(x, y, dx, dy)
    fm, _ = _conic(xm, ym)
    f = f.intersect(fm + matvec(j, dz))
    return f, j


def _require_finite(iv: Interval, what: str) -> Interval:
    if not np.all(iv.is_finite()):
        raise NonEvaluable("interval", f"{what} could not be enclosed")
    return iv


def box_F(s: Scenario, t: Triangle, z: Interval) -> Interval:
    """Enclosure of F over the box ``z`` in local coordinates of ``t``."""
    f, _ = enclose(s, t, z)
    return _require_finite(f, "F")


def box_J(s: Scenario, t: Triangle, z: Interval) -> Interval:
    """Enclosure of the Jacobian over the box ``z``."""
    _, j = enclose(s, t, z)
    return _require_finite(j, "J")


def box_FJ(s: Scenario, t: Triangle, z: Interval) -> tuple[Interval, Interval]:
    f, j = enclose(s, t, z)
    return _require_finite(f, "F"), _require_finite(j, "J")


# ---------------------------------------------------------------------------
# Krawczyk operator and certified oracles


def krawczyk_operator(f0, jz, z: Interval, x0, y) -> tuple[Interval, Interval]:
    """``K = x0 - Y f0 + (1 - Y jz) (z - x0)`` from enclosures ``f0`` of F(x0)
    and ``jz`` of the Jacobian over ``z``; also returns ``1 - Y jz``."""
    x0 = np.asarray(x0, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x0.shape[-1]
    g = Interval(np.eye(n)) - matmul(y, as_interval(jz))
    k = x0 - matvec(y, as_interval(f0)) + matvec(g, z - x0)
    return k, g


def krawczyk(s: Scenario, t: Triangle, z: Interval, x0, y) -> tuple[Interval, Interval]:
    """Krawczyk image of the box ``z`` for the master function on ``t``."""
    x0 = np.asarray(x0, dtype=float)
    return krawczyk_operator(box_F(s, t, Interval(x0)), box_J(s, t, z), z, x0, y)


def krawczyk_test(s: Scenario, t: Triangle, z: Optional[Interval] = None) -> tuple[bool, bool]:
    """``(exists, unique)`` for the box ``z`` (default: the reference box).

    Existence needs the Krawczyk image strictly inside the box; uniqueness
    additionally needs ``|1 - Y J(I)| < 1``.
    """
    z = reference_box() if z is None else z
    x0 = z.mid()
    try:
        jm = evaluate(s, local_frame(t), x0).J
        y = np.linalg.inv(jm)
        if not np.all(np.isfinite(y)):
            return False, False
        k, g = krawczyk(s, t, z, x0, y)
    except (NonEvaluable, np.linalg.LinAlgError):
        return False, False
    exists = bool(np.all(k.strictly_inside(z)))
    return exists, exists and interval_matrix_norm(g) < 1.0


NONZERO_CHUNK = 2048


def nonzero_excludes(s: Scenario, triangles: Sequence[Triangle]) -> np.ndarray:
    """For each triangle, whether the enclosure of F over its reference box
    certainly excludes zero."""
    out = np.zeros(len(triangles), dtype=bool)
    for start in range(0, len(triangles), NONZERO_CHUNK):
        chunk = triangles[start:start + NONZERO_CHUNK]
        f, _ = enclose_many(s, chunk)
        excl = f.is_finite() & ~f.contains_zero()
        out[start:start + len(chunk)] = np.any(excl, axis=-1) & np.all(f.is_finite(), axis=-1)
    return out


def _nonzero(tm, cfg=None) -> Verdict:
    tm.solves += 1
    excluded = tm.hints.get("nonzero_certified")
    if excluded is None:
        excluded = bool(nonzero_excludes(tm.scenario, [tm.triangle])[0])
    if excluded:
        return Verdict(Label.REJECT, "nonzero_certified")
    return Verdict(Label.PASS)


def _krawczyk(tm, cfg=None) -> Verdict:
    tm.solves += 2
    ok, _ = krawczyk_test(tm.scenario, tm.triangle)
    return Verdict(Label.ACCEPT, "krawczyk_certified") if ok else Verdict(Label.PASS)


def omega_nonzero_certified(tm, cfg=None) -> Verdict:
    """Reject when the enclosure of F over the triangle's box excludes zero."""
    return _nonzero(tm, cfg)


def omega_krawczyk_certified(tm, cfg=None) -> Verdict:
    """Accept when the Krawczyk image of the triangle's box lies strictly
    inside it, proving a zero in the box."""
    return _krawczyk(tm, cfg)


CERTIFIED_ORACLES = {
    "nonzero_certified": omega_nonzero_certified,
    "krawczyk_certified": omega_krawczyk_certified,
}
