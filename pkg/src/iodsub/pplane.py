"""Exact triangulations of the real projective plane.

The projective plane of orbital-plane normals is modelled by the four
upper faces of the octahedron ``|x| + |y| + |z| = 1``, ``z >= 0``.  Antipodal
points on the equator are identified only when solutions are reported.

Vertices are dyadic rationals: three integer numerators sharing one
power-of-two denominator.  Midpoints of such points are again dyadic, so
any sequence of regular or bisecting subdivisions stays exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np

SQRT3 = math.sqrt(3.0)

# Reference triangle of the local parametrization; its vertex centroid is 0.
REF_P = np.array([-0.5, -0.5])
REF_Q = np.array([1.0, 0.0])
REF_R = np.array([-0.5, 0.5])
REF_VERTICES = np.array([REF_P, REF_Q, REF_R])
REF_AREA = 0.75

# Sign patterns (sx, sy) of the four upper faces, in face_id order.
FACE_SIGNS = ((1, 1), (-1, 1), (-1, -1), (1, -1))


@dataclass(frozen=True, order=True)
class DyadicPoint:
    """The point ``(x, y, z) / 2**exp`` with integer numerators."""

    x: int
    y: int
    z: int
    exp: int = 0

    def __post_init__(self):
        if self.exp < 0:
            raise ValueError("denominator exponent must be non-negative")
        if abs(self.x) + abs(self.y) + abs(self.z) != 1 << self.exp:
            raise ValueError(f"{self!r} is not on the octahedron")
        if self.z < 0:
            raise ValueError(f"{self!r} is below the equator")

    @classmethod
    def reduced(cls, x: int, y: int, z: int, exp: int) -> "DyadicPoint":
        while exp > 0 and not (x & 1 or y & 1 or z & 1):
            x >>= 1
            y >>= 1
            z >>= 1
            exp -= 1
        return cls(x, y, z, exp)

    def as_fractions(self) -> tuple[Fraction, Fraction, Fraction]:
        d = 1 << self.exp
        return Fraction(self.x, d), Fraction(self.y, d), Fraction(self.z, d)

    def to_array(self) -> np.ndarray:
        # exact as long as numerators fit in 53 bits, true well past depth 50
        return np.array([self.x, self.y, self.z], dtype=float) / float(1 << self.exp)

    def __repr__(self):
        return f"DyadicPoint({self.x}, {self.y}, {self.z}, exp={self.exp})"


E1 = DyadicPoint(1, 0, 0)
E2 = DyadicPoint(0, 1, 0)
E3 = DyadicPoint(0, 0, 1)


def midpoint(a: DyadicPoint, b: DyadicPoint) -> DyadicPoint:
    """Exact midpoint of two points on a common face."""
    k = max(a.exp, b.exp)
    sa, sb = k - a.exp, k - b.exp
    return DyadicPoint.reduced(
        (a.x << sa) + (b.x << sb),
        (a.y << sa) + (b.y << sb),
        (a.z << sa) + (b.z << sb),
        k + 1,
    )


def face_of(p: DyadicPoint) -> Optional[set[int]]:
    """Indices of the upper faces that contain ``p``."""
    return {
        i for i, (sx, sy) in enumerate(FACE_SIGNS) if p.x * sx >= 0 and p.y * sy >= 0
    }


def _xy_det2(v1: DyadicPoint, v2: DyadicPoint, v3: DyadicPoint) -> Fraction:
    """Twice the signed area of the top-view (x, y) projection, exactly."""
    (x1, y1, _), (x2, y2, _), (x3, y3, _) = (
        v1.as_fractions(),
        v2.as_fractions(),
        v3.as_fractions(),
    )
    return (x2 - x1) * (y3 - y1) - (y2 - y1) * (x3 - x1)


@dataclass(frozen=True)
class Triangle:
    v1: DyadicPoint
    v2: DyadicPoint
    v3: DyadicPoint
    face_id: int
    generation: int = 0

    def __post_init__(self):
        sx, sy = FACE_SIGNS[self.face_id]
        for v in self.vertices:
            if v.x * sx < 0 or v.y * sy < 0:
                raise ValueError(f"{v!r} is not on face {self.face_id}")

    @property
    def vertices(self) -> tuple[DyadicPoint, DyadicPoint, DyadicPoint]:
        return (self.v1, self.v2, self.v3)

    @property
    def key(self) -> tuple:
        """Stable sort key: face, then exact vertex coordinates."""
        return (self.face_id, self.v1.as_fractions(), self.v2.as_fractions(), self.v3.as_fractions())

    def exact_xy_area(self) -> Fraction:
        """Area of the top-view projection; the face area is this times sqrt(3)."""
        return abs(_xy_det2(*self.vertices)) / 2

    def vertex_array(self) -> np.ndarray:
        return np.array([v.to_array() for v in self.vertices])

    def centroid(self) -> np.ndarray:
        return self.vertex_array().mean(axis=0)

    def circumradius(self) -> float:
        a, b, c = self.vertex_array()
        la, lb, lc = np.linalg.norm(b - c), np.linalg.norm(c - a), np.linalg.norm(a - b)
        area = triangle_area(self)
        if area == 0.0:
            return math.inf
        return la * lb * lc / (4.0 * area)

    def barycentric_of(self, w) -> Optional[np.ndarray]:
        """Barycentric coordinates of the radial projection of ``w`` (or
        ``-w``) onto this triangle's face, or None if neither reaches it."""
        w = np.asarray(w, dtype=float)
        sx, sy = FACE_SIGNS[self.face_id]
        best = None
        for cand in (w, -w):
            denom = sx * cand[0] + sy * cand[1] + cand[2]
            if denom <= 0:
                continue
            q = cand / denom
            lam = barycentric(self.vertex_array(), q)
            if lam is not None and (best is None or lam.min() > best.min()):
                best = lam
        return best

    def contains(self, w, tol: float = 0.0) -> bool:
        """Whether the ray through ``w`` (or ``-w``) meets this triangle.

        ``w`` is projected radially onto the octahedron first.  ``tol`` is
        a barycentric slack.
        """
        lam = self.barycentric_of(w)
        return lam is not None and bool(np.all(lam >= -tol))


def barycentric(tri: np.ndarray, q: np.ndarray) -> Optional[np.ndarray]:
    a, b, c = tri
    m = np.column_stack([b - a, c - a])
    sol, *_ = np.linalg.lstsq(m, q - a, rcond=None)
    if np.linalg.norm(m @ sol - (q - a)) > 1e-9:
        return None
    return np.array([1.0 - sol.sum(), sol[0], sol[1]])


def triangle_area(t: Triangle) -> float:
    """Flat area of ``t`` within its face."""
    a, b, c = t.vertex_array()
    return 0.5 * float(np.linalg.norm(np.cross(b - a, c - a)))


@dataclass(frozen=True)
class LocalFrame:
    """Affine map ``z -> origin + basis @ z`` from local coordinates to R^3.

    The reference vertices P, Q, R land on ``v1, v2, v3`` and the local
    origin lands on the vertex centroid.
    """

    origin: np.ndarray
    basis: np.ndarray  # 3x2

    def __call__(self, z) -> np.ndarray:
        return self.origin + self.basis @ np.asarray(z, dtype=float)

    def inverse(self, x) -> np.ndarray:
        sol, *_ = np.linalg.lstsq(self.basis, np.asarray(x, dtype=float) - self.origin, rcond=None)
        return sol


def local_frame(t: Triangle) -> LocalFrame:
    v1, v2, v3 = t.vertex_array()
    d21, d31 = v2 - v1, v3 - v1
    if np.linalg.norm(np.cross(d21, d31)) == 0.0:
        raise ValueError("degenerate triangle has no local frame")
    # Q - P = (1.5, 0.5) -> v2 - v1 and R - P = (0, 1) -> v3 - v1
    col1 = d31
    col0 = (d21 - 0.5 * d31) / 1.5
    return LocalFrame(origin=(v1 + v2 + v3) / 3.0, basis=np.column_stack([col0, col1]))


def exact_local_frame(t: Triangle) -> tuple[list[Fraction], list[list[Fraction]]]:
    """Origin and basis of :func:`local_frame` as exact rationals."""
    v1, v2, v3 = (v.as_fractions() for v in t.vertices)
    origin = [(v1[k] + v2[k] + v3[k]) / 3 for k in range(3)]
    col1 = [v3[k] - v1[k] for k in range(3)]
    col0 = [((v2[k] - v1[k]) - Fraction(1, 2) * col1[k]) * Fraction(2, 3) for k in range(3)]
    return origin, [[col0[k], col1[k]] for k in range(3)]


def regular_subdivide(t: Triangle) -> list[Triangle]:
    """Split ``t`` into four congruent children through its edge midpoints."""
    a, b, c = t.vertices
    mab, mbc, mca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
    g = t.generation + 1
    f = t.face_id
    return [
        Triangle(a, mab, mca, f, g),
        Triangle(mab, b, mbc, f, g),
        Triangle(mca, mbc, c, f, g),
        Triangle(mbc, mca, mab, f, g),
    ]


def bisect(t: Triangle, side: int) -> list[Triangle]:
    """Split ``t`` in two through the midpoint of ``side``.

    Sides are numbered 1: (v1, v2), 2: (v2, v3), 3: (v3, v1).
    """
    a, b, c = t.vertices
    g, f = t.generation + 1, t.face_id
    if side == 1:
        m = midpoint(a, b)
        return [Triangle(a, m, c, f, g), Triangle(m, b, c, f, g)]
    if side == 2:
        m = midpoint(b, c)
        return [Triangle(a, b, m, f, g), Triangle(a, m, c, f, g)]
    if side == 3:
        m = midpoint(c, a)
        return [Triangle(a, b, m, f, g), Triangle(m, b, c, f, g)]
    raise ValueError(f"side must be 1, 2 or 3, got {side}")


class Label(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    PASS = "pass"
    UNRESOLVED = "unresolved"


@dataclass
class Node:
    triangle: Triangle
    label: Label = Label.PASS
    oracle: Optional[str] = None
    parent: Optional[int] = None
    children: list[int] = field(default_factory=list)


class Triangulation:
    """Subdivision history of the four upper octahedron faces.

    Nodes are stored in creation order; leaves are nodes without children.
    """

    def __init__(self, roots: list[Triangle]):
        self.nodes: list[Node] = [Node(t) for t in roots]

    def __len__(self):
        return len(self.nodes)

    def refine(self, index: int, children: list[Triangle]) -> list[int]:
        start = len(self.nodes)
        self.nodes.extend(Node(c, parent=index) for c in children)
        ids = list(range(start, len(self.nodes)))
        self.nodes[index].children = ids
        return ids

    def leaves(self) -> Iterator[Node]:
        return (n for n in self.nodes if not n.children)

    def leaf_ids(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if not n.children]

    def exact_leaf_xy_area(self) -> Fraction:
        return sum((n.triangle.exact_xy_area() for n in self.leaves()), Fraction(0))

    def total_area(self) -> float:
        """Sum of leaf areas; ``2 * sqrt(3)`` for any valid tiling."""
        return float(self.exact_leaf_xy_area()) * SQRT3


def initial_triangulation() -> Triangulation:
    faces = []
    for i, (sx, sy) in enumerate(FACE_SIGNS):
        faces.append(Triangle(DyadicPoint(sx, 0, 0), DyadicPoint(0, sy, 0), E3, i, 0))
    return Triangulation(faces)


def canonical_normal(w) -> np.ndarray:
    """Unit representative of ``w`` under ``w ~ -w``: z > 0, or on the
    equator, first nonzero coordinate positive."""
    w = np.asarray(w, dtype=float)
    w = w / np.linalg.norm(w)
    for c in (w[2], w[0], w[1]):
        if c != 0.0:
            return w if c > 0 else -w
    return w


def to_octahedron(w) -> np.ndarray:
    """Radial projection of the canonical representative onto ``|x|+|y|+|z|=1``."""
    w = canonical_normal(w)
    return w / np.abs(w).sum()
