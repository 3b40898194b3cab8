"""Command line: ``iodsub solve | generate | render``.

Exit codes: 0 success, 1 bad input, 2 no solution found (solve only).
The thread count for labeling comes from ``--threads`` or the
``IODSUB_THREADS`` environment variable.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import fileio, synthgen
from .engine import THREADS_ENV, EngineConfig, run
from .render import render_result, render_svg

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_SOLUTION = 2

log = logging.getLogger("iodsub")


def cmd_solve(args) -> int:
    s = fileio.read_scenario(args.scenario)
    cfg = fileio.read_config(args.config) if args.config else EngineConfig()
    changes = {}
    if args.certify:
        changes["certify"] = True
    if args.threads is not None:
        changes["threads"] = args.threads
    if changes:
        cfg = dataclasses.replace(cfg, **changes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    title = Path(args.scenario).stem
    result = run(s, cfg)
    (out / "solutions.json").write_text(fileio.dumps(fileio.solutions_to_dict(result)))
    (out / "stats.json").write_text(fileio.dumps(fileio.stats_to_dict(result.stats)))
    (out / "run.json").write_text(fileio.dumps(fileio.run_to_dict(result, title)))
    if args.svg:
        (out / "triangulation.svg").write_text(render_result(result, title))

    found = result.distinct_solutions()
    st = result.stats
    print(f"accepted area {st.area_accepted:.6g}, unresolved {st.area_passed:.6g}, "
          f"rejected {st.total_rejected:.6g}, 5x5 solves {st.bottleneck_calls}")
    for sol in found:
        tag = " certified" if sol.certified else ""
        print(f"w = ({sol.w[0]:.9f}, {sol.w[1]:.9f}, {sol.w[2]:.9f})  |F| = {sol.residual:.2e}{tag}")
    if not found:
        print("no solution found")
        return EXIT_NO_SOLUTION
    return EXIT_OK


def cmd_generate(args) -> int:
    s = synthgen.generate(args.kind, args.seed)
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True)
    fileio.write_scenario(out, s)
    print(f"wrote {out} with {len(s.known_solutions)} known solution(s)")
    return EXIT_OK


def cmd_render(args) -> int:
    doc = fileio.read_run(args.run)
    leaves = fileio.leaves_from_dict(doc)
    svg = render_svg(leaves, doc.get("solutions", []), doc.get("known_solutions", []),
                     doc.get("title", ""))
    Path(args.out).write_text(svg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iodsub",
        description="Find orbital-plane normals by labeled subdivision of the projective plane.",
        epilog=f"Set {THREADS_ENV}=N to label triangles on N threads; results do not depend on N.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the subdivision on a scenario file")
    p.add_argument("--scenario", required=True, help="scenario JSON (fields p, u, known_solutions)")
    p.add_argument("--config", help="config JSON (oracle sequence, constants, area bounds)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--certify", action="store_true", help="certify polished solutions with the Krawczyk test")
    p.add_argument("--svg", action=argparse.BooleanOptionalAction, default=True,
                   help="write triangulation.svg (default: yes)")
    p.add_argument("--threads", type=int, help=f"labeling threads (overrides {THREADS_ENV})")
    p.set_defaults(func=cmd_solve)

    g = sub.add_parser("generate", help="write a synthetic scenario with known solutions")
    g.add_argument("--kind", choices=("single", "two"), required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="scenario JSON to write")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("render", help="re-render the SVG of a saved run")
    r.add_argument("--run", required=True, help="run.json written by solve")
    r.add_argument("--out", required=True, help="SVG file to write")
    r.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except fileio.FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
