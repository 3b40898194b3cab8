"""Subdivision driver.

The frontier is processed one generation at a time: every frontier
triangle is labeled (possibly in parallel), then the whole generation is
subdivided in a fixed order.  Triangles larger than ``max_area_to_label``
are split regularly without being labeled.  A triangle that passes is
split by the combination rule; once it is smaller than
``min_area_to_stop`` it is frozen as unresolved instead.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .mastermap import ConicCoeffs, Frame, NonEvaluable, Scenario, TriangleMap
from .oracles import DEFAULT_SEQUENCE, OracleConfig, Verdict, label_map, resolve
from .pplane import (
    REF_VERTICES,
    SQRT3,
    Label,
    Triangle,
    Triangulation,
    bisect,
    canonical_normal,
    initial_triangulation,
    regular_subdivide,
    triangle_area,
)

log = logging.getLogger(__name__)

THREADS_ENV = "IODSUB_THREADS"


@dataclass(frozen=True)
class EngineConfig:
    sequence: tuple = DEFAULT_SEQUENCE
    oracle: OracleConfig = field(default_factory=OracleConfig)
    max_area_to_label: float = 0.05
    min_area_to_stop: float = 1e-3
    subdivision_ratio: float = 4.0
    certify: bool = False
    certify_refine_area: float = 1e-19
    audit_rejections: bool = False
    max_generations: int = 64
    threads: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "sequence", tuple(self.sequence))
        resolve(self.sequence)
        if not 0 < self.min_area_to_stop < self.max_area_to_label:
            raise ValueError("need 0 < min_area_to_stop < max_area_to_label")
        if not self.subdivision_ratio > 2:
            raise ValueError("subdivision_ratio must exceed 2")
        if not self.certify_refine_area > 0:
            raise ValueError("certify_refine_area must be positive")
        if self.max_generations < 1:
            raise ValueError("max_generations must be at least 1")

    def worker_count(self) -> int:
        if self.threads is not None:
            return max(1, int(self.threads))
        return max(1, int(os.environ.get(THREADS_ENV, "1")))


@dataclass
class RunStats:
    area_accepted: float = 0.0
    area_passed: float = 0.0
    area_rejected: dict = field(default_factory=dict)
    bottleneck_calls: int = 0
    triangles_labeled: int = 0
    generations: int = 0
    hit_generation_cap: bool = False
    certified_rejections: Optional[int] = None

    @property
    def total_rejected(self) -> float:
        return sum(self.area_rejected.values())

    @property
    def total_area(self) -> float:
        return self.area_accepted + self.area_passed + self.total_rejected

    @property
    def ratio(self) -> float:
        """(accepted + passed) / rejected area."""
        rej = self.total_rejected
        return math.inf if rej == 0 else (self.area_accepted + self.area_passed) / rej


@dataclass
class Solution:
    w: np.ndarray
    frame: Optional[Frame]
    theta: Optional[ConicCoeffs]
    residual: float
    triangle: int
    converged: bool
    iterations: int = 0
    certified: bool = False
    unique: bool = False
    certified_triangle: Optional[Triangle] = None  # sub-triangle whose box passed Krawczyk


@dataclass
class RunResult:
    scenario: Scenario
    config: EngineConfig
    triangulation: Triangulation
    solutions: list
    stats: RunStats

    @property
    def accepted(self) -> list[int]:
        return [i for i, n in enumerate(self.triangulation.nodes)
                if not n.children and n.label is Label.ACCEPT]

    def distinct_solutions(self, tol: float = 1e-8) -> list[Solution]:
        out: list[Solution] = []
        for sol in self.solutions:
            if not sol.converged:
                continue
            if all(angular_distance(sol.w, o.w) > tol for o in out):
                out.append(sol)
        return out


def angular_distance(a, b) -> float:
    """Angle between two directions modulo ``w ~ -w``."""
    a = np.asarray(a, dtype=float) / np.linalg.norm(a)
    b = np.asarray(b, dtype=float) / np.linalg.norm(b)
    c = min(1.0, abs(float(a @ b)))
    # sin form keeps precision for tiny angles
    s = float(np.linalg.norm(np.cross(a, b)))
    return math.atan2(s, c)


def side_variation(tm) -> np.ndarray:
    """``(d/2) |J(m_i) t_i|`` for sides P->Q, Q->R, R->P in local coordinates;
    infinite where the Jacobian is not available."""
    deltas = np.empty(3)
    for i in range(3):
        a, b = REF_VERTICES[i], REF_VERTICES[(i + 1) % 3]
        d = float(np.linalg.norm(b - a))
        try:
            deltas[i] = 0.5 * d * float(np.linalg.norm(tm.J(0.5 * (a + b)) @ ((b - a) / d)))
        except NonEvaluable:
            deltas[i] = math.inf
    return deltas


def choose_subdivision(deltas, ratio: float) -> Optional[int]:
    """Side (1-based) to bisect, or ``None`` for a regular split."""
    deltas = np.asarray(deltas, dtype=float)
    if not np.any(np.isfinite(deltas)):
        return None
    dmax, dmin = deltas.max(), deltas.min()
    if dmax >= ratio * dmin:
        return int(np.argmax(deltas)) + 1
    return None


def polish(tm, max_iter: int = 50, tol: float = 1e-9) -> Solution:
    """Damped Newton from the triangle center toward a zero of F.

    Iterates until the step stalls at rounding level; the result counts as
    converged if the final residual is at most ``tol`` and the iterate has
    not drifted beyond twice the circumradius from the triangle.
    """
    frame, tri = tm.frame, tm.triangle
    center, reach = tri.centroid(), 2.0 * tri.circumradius()
    z = np.zeros(2)
    it = 0
    converged = False
    try:
        f = tm.F(z)
        fn = float(np.linalg.norm(f))
        while fn > 0.0 and it < max_iter:
            step = np.linalg.solve(tm.J(z), f)
            lam = 1.0
            while True:
                cand = z - lam * step
                try:
                    fc = tm.F(cand)
                    fcn = float(np.linalg.norm(fc))
                except NonEvaluable:
                    fcn = math.inf
                if fcn < fn or lam < 2.0**-10:
                    break
                lam *= 0.5
            it += 1
            if not fcn < fn:
                break
            z, f, fn = cand, fc, fcn
            if np.linalg.norm(lam * step) <= 1e-14 * max(1.0, float(np.linalg.norm(z))):
                break
        converged = fn <= tol
    except (NonEvaluable, np.linalg.LinAlgError):
        converged = False
    if np.linalg.norm(frame(z) - center) > reach:
        converged = False
    try:
        ev = tm.at(z)
    except NonEvaluable:
        return Solution(canonical_normal(frame(z)), None, None, math.inf, -1, False, it)
    return Solution(canonical_normal(ev.w), ev.frame, ev.theta,
                    float(np.linalg.norm(ev.F)), -1, converged, it)


def _process(args):
    s, t, sequence, cfg, label_it, ratio, hints = args
    tm = TriangleMap(s, t, hints=hints)
    verdict = label_map(tm, sequence, cfg) if label_it else None
    side = None
    if verdict is None or verdict.label is Label.PASS:
        side = choose_subdivision(side_variation(tm), ratio) if label_it else None
    return verdict, side, tm.solves


def _prefetch(s, triangles, areas, cfg, sequence) -> list[dict]:
    """Batch the certified nonzero test over a generation; it is far cheaper
    vectorized than triangle by triangle."""
    hints = [{} for _ in triangles]
    if not any(name == "nonzero_certified" for name, _ in sequence):
        return hints
    from .intervals import nonzero_excludes

    idx = [k for k, a in enumerate(areas) if a <= cfg.max_area_to_label]
    if idx:
        flags = nonzero_excludes(s, [triangles[k] for k in idx])
        for k, flag in zip(idx, flags):
            hints[k]["nonzero_certified"] = bool(flag)
    return hints


def run(s: Scenario, cfg: EngineConfig = EngineConfig()) -> RunResult:
    sequence = resolve(cfg.sequence)
    tri = initial_triangulation()
    stats = RunStats(area_rejected={})
    exact_rej: dict[str, Fraction] = {}
    exact_acc = Fraction(0)
    exact_pass = Fraction(0)
    frontier = list(range(len(tri)))
    workers = cfg.worker_count()
    pool = ThreadPoolExecutor(workers) if workers > 1 else None

    try:
        gen = 0
        while frontier:
            if gen >= cfg.max_generations:
                stats.hit_generation_cap = True
                for i in frontier:
                    tri.nodes[i].label = Label.UNRESOLVED
                    exact_pass += tri.nodes[i].triangle.exact_xy_area()
                break
            areas = [triangle_area(tri.nodes[i].triangle) for i in frontier]
            hints = _prefetch(s, [tri.nodes[i].triangle for i in frontier], areas, cfg, sequence)
            jobs = [
                (s, tri.nodes[i].triangle, sequence, cfg.oracle, a <= cfg.max_area_to_label,
                 cfg.subdivision_ratio, h)
                for i, a, h in zip(frontier, areas, hints)
            ]
            results = list(pool.map(_process, jobs)) if pool else [_process(j) for j in jobs]

            nxt: list[int] = []
            for i, a, (verdict, side, solves) in zip(frontier, areas, results):
                node = tri.nodes[i]
                t = node.triangle
                stats.bottleneck_calls += solves
                if verdict is None:
                    nxt.extend(tri.refine(i, regular_subdivide(t)))
                    continue
                stats.triangles_labeled += 1
                if verdict.label is Label.ACCEPT:
                    node.label, node.oracle = Label.ACCEPT, verdict.oracle
                    exact_acc += t.exact_xy_area()
                elif verdict.label is Label.REJECT:
                    node.label, node.oracle = Label.REJECT, verdict.oracle
                    exact_rej[verdict.oracle] = exact_rej.get(verdict.oracle, Fraction(0)) + t.exact_xy_area()
                elif a < cfg.min_area_to_stop:
                    node.label = Label.UNRESOLVED
                    exact_pass += t.exact_xy_area()
                else:
                    children = regular_subdivide(t) if side is None else bisect(t, side)
                    nxt.extend(tri.refine(i, children))
            frontier = nxt
            gen += 1
            log.debug("generation %d: %d triangles in frontier", gen, len(frontier))
        stats.generations = gen
    finally:
        if pool:
            pool.shutdown()

    stats.area_accepted = float(exact_acc) * SQRT3
    stats.area_passed = float(exact_pass) * SQRT3
    stats.area_rejected = {k: float(v) * SQRT3 for k, v in sorted(exact_rej.items())}

    solutions = []
    for i, node in enumerate(tri.nodes):
        if node.children or node.label is not Label.ACCEPT:
            continue
        tm = TriangleMap(s, node.triangle)
        sol = polish(tm)
        sol.triangle = i
        stats.bottleneck_calls += tm.solves
        solutions.append(sol)

    result = RunResult(s, cfg, tri, solutions, stats)
    if cfg.certify:
        certify_pass(result)
    return result


def certify_pass(result: RunResult) -> RunResult:
    """Certify polished solutions with the Krawczyk test on small sub-triangles.

    Each accepted triangle is refined toward its polished solution and the
    Krawczyk test is tried on the box of the containing child at every
    level, down to ``certify_refine_area``.
    """
    from .intervals import krawczyk_test, omega_nonzero_certified

    cfg = result.config
    s = result.scenario
    tri = result.triangulation
    for sol in result.solutions:
        if not sol.converged:
            continue
        t = tri.nodes[sol.triangle].triangle
        found = _certify_near(s, t, sol.w, cfg.certify_refine_area, krawczyk_test)
        if found is not None:
            sol.certified_triangle, sol.unique = found
            sol.certified = True

    if cfg.audit_rejections:
        count = 0
        for node in tri.nodes:
            if not node.children and node.label is Label.REJECT:
                v = omega_nonzero_certified(TriangleMap(s, node.triangle), cfg.oracle)
                count += v.label is Label.REJECT
        result.stats.certified_rejections = count
    return result


def _certify_near(s, t: Triangle, w, min_area: float, test):
    current = t
    while True:
        ok, unique = test(s, current)
        if ok:
            return current, unique
        if triangle_area(current) <= min_area:
            return None
        current = _deepest_child(regular_subdivide(current), w)
        if current is None:
            return None


def _deepest_child(children, w):
    """Child whose barycentric coordinates of ``w`` have the largest minimum."""
    best, score = None, -1e-6
    for c in children:
        lam = c.barycentric_of(w)
        if lam is not None and lam.min() >= score:
            best, score = c, lam.min()
    return best
