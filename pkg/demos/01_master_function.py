"""Walk through the master function at one point.

Five lines of sight and a candidate plane normal w give five piercing
points; a conic through them has its focus at the origin exactly when w
is an orbital-plane normal.  F measures the failure of the two focus
conditions.
"""
import numpy as np

from iodsub import fixtures
from iodsub.engine import TriangleMap, polish
from iodsub.mastermap import build_frame, evaluate, fit_conic, focus_residual, intersect_plane
from iodsub.pplane import initial_triangulation, local_frame, regular_subdivide

np.set_printoptions(precision=6, suppress=True)

s = fixtures.single_observer()
w_star = s.known_solutions[0]
print("observer positions p (km):\n", s.p)
print("unit lines of sight u:\n", s.u)
print("published normal w* =", w_star)

# the plane through the origin with normal w*, in its own frame
frame = build_frame(w_star / np.linalg.norm(w_star), s.u[0])
pts = intersect_plane(frame, s)
print("\npiercing points in the plane (x, y):")
for x, y in zip(pts.x, pts.y):
    print(f"  ({x:10.3f}, {y:10.3f})")

theta = fit_conic(pts)
print("conic a x^2 + b y^2 + c xy + d x + e y + 1 = 0:", theta.as_array())
print("focus residual F =", focus_residual(theta), "(w* has six digits, so not exactly zero)")

# the same map seen from a triangle of the subdivision
t = next(n.triangle for n in initial_triangulation().nodes if n.triangle.contains(w_star))
for _ in range(5):
    t = next(c for c in regular_subdivide(t) if c.contains(w_star))
tm = TriangleMap(s, t)
print(f"\ntriangle at generation {t.generation} containing w*, area {t.exact_xy_area() * 3**0.5:.3e}")
sol = polish(tm)
print(f"Newton from its centre: {sol.iterations} steps, |F| = {sol.residual:.1e}")
print("polished normal  =", sol.w)
print("published normal =", w_star / np.linalg.norm(w_star))

# closed-form Jacobian against central differences
z = local_frame(t).inverse(sol.w / np.abs(sol.w).sum())
ev = evaluate(s, local_frame(t), z)
h = 1e-6
fd = np.column_stack([
    (evaluate(s, local_frame(t), z + e, False).F - evaluate(s, local_frame(t), z - e, False).F) / (2 * h)
    for e in (np.array([h, 0.0]), np.array([0.0, h]))
])
print("\nJacobian at the zero:\n", ev.J)
print("central differences:\n", fd)
print("singular values:", np.linalg.svd(ev.J)[1])
