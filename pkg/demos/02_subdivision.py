"""Label and subdivide the octahedron for the three published scenarios.

Prints the area statistics next to the published ones and writes one SVG
per scenario into demos/out/.
"""
import math
import time
from pathlib import Path

from iodsub import fileio
from iodsub.engine import run
from iodsub.render import render_result

DATA = Path(__file__).resolve().parent.parent / "data"
OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

published = {
    "single_observer": (0.003382, 0.500670, 1.253791, 1.706256, 6444),
    "two_solutions": (0.014060, 0.755763, 0.184262, 2.451659, 28253),
    "nearly_circular": (0.000422, 3.117353, 0.240926, 0.100641, 6583),
}

for name, ref in published.items():
    s = fileio.read_scenario(DATA / f"{name}.json")
    cfg = fileio.read_config(DATA / f"{name}.config.json")
    t0 = time.perf_counter()
    res = run(s, cfg)
    secs = time.perf_counter() - t0
    st = res.stats
    rej = st.area_rejected
    print(f"\n{name}  ({secs:.1f} s, {st.generations} generations, {st.triangles_labeled} triangles labeled)")
    print(f"  {'':24s}{'ours':>12s}{'published':>12s}")
    rows = [
        ("area accepted", st.area_accepted, ref[0]),
        ("rejected: intersection", rej.get("intersection", 0.0), ref[1]),
        ("rejected: GD disjoint", rej.get("gd_disjoint", 0.0), ref[2]),
        ("rejected: linear approx", rej.get("linear_approximation", 0.0), ref[3]),
        ("5x5 solves", st.bottleneck_calls, ref[4]),
    ]
    for label, ours, theirs in rows:
        print(f"  {label:24s}{ours:12.6g}{theirs:12.6g}")
    print(f"  unresolved area {st.area_passed:.6f}, ratio {st.ratio:.4f}, "
          f"total - 2 sqrt 3 = {st.total_area - 2 * math.sqrt(3):.1e}")
    for sol in res.distinct_solutions():
        print(f"  solution w = {sol.w}, |F| = {sol.residual:.1e}")
    (OUT / f"{name}.svg").write_text(render_result(res, name))
    print(f"  wrote {OUT / (name + '.svg')}")
