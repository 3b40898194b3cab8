"""Planar predicates in local triangle coordinates.

Orientation uses a static floating-point error filter: a sign is reported
only when it is certain, otherwise 0.  Containment and disjointness are
built on certain signs, so an uncertain case is never "contained" and
never "disjoint".
"""
from __future__ import annotations

import numpy as np

# Shewchuk's ccwerrboundA: (3 + 16 eps) eps with eps = 2**-53
_CCW_ERRBOUND = (3.0 + 16.0 * 2.0**-53) * 2.0**-53


def orient2d(a, b, c) -> int:
    """+1 if ``a, b, c`` turn left, -1 if right, 0 if collinear or uncertain."""
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    bound = _CCW_ERRBOUND * (abs(detleft) + abs(detright))
    if det > bound:
        return 1
    if -det > bound:
        return -1
    return 0


def polygon_area(poly) -> float:
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def convex_hull(points) -> np.ndarray:
    """Counter-clockwise hull by monotone chain; collinear points are dropped."""
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) <= 2:
        return np.array(pts, dtype=float).reshape(-1, 2)

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and orient2d(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return np.array(lower[:-1] + upper[:-1], dtype=float)


def _ccw(tri):
    tri = [tuple(map(float, v)) for v in tri]
    s = orient2d(*tri)
    if s < 0:
        tri = [tri[0], tri[2], tri[1]]
    return tri, s


def polygon_in_triangle(points, tri) -> bool:
    """True only if every point is certainly in the open triangle."""
    tri, s = _ccw(tri)
    if s == 0:
        return False
    for p in points:
        for i in range(3):
            if orient2d(tri[i], tri[(i + 1) % 3], p) <= 0:
                return False
    return True


def triangles_disjoint(t1, t2) -> bool:
    """True only if some edge line certainly separates the two triangles."""
    t1 = [tuple(map(float, v)) for v in t1]
    t2 = [tuple(map(float, v)) for v in t2]
    for own, other in ((t1, t2), (t2, t1)):
        for i in range(3):
            a, b, c = own[i], own[(i + 1) % 3], own[(i + 2) % 3]
            sides = [orient2d(a, b, q) for q in other]
            sc = orient2d(a, b, c)
            if sc > 0 and all(s < 0 for s in sides):
                return True
            if sc < 0 and all(s > 0 for s in sides):
                return True
    return False


def ray_exit(origin, direction, tri) -> np.ndarray | None:
    """First point where the ray ``origin + t*direction`` (t > 0) meets the
    boundary of ``tri``."""
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    best = None
    for i in range(3):
        a = np.asarray(tri[i], dtype=float)
        e = np.asarray(tri[(i + 1) % 3], dtype=float) - a
        m = np.array([[d[0], -e[0]], [d[1], -e[1]]])
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if det == 0.0:
            continue
        rhs = a - o
        t = (rhs[0] * m[1, 1] - m[0, 1] * rhs[1]) / det
        s = (m[0, 0] * rhs[1] - rhs[0] * m[1, 0]) / det
        if t > 0.0 and -1e-12 <= s <= 1.0 + 1e-12 and (best is None or t < best):
            best = t
    return None if best is None else o + best * d
