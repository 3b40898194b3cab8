from __future__ import annotations

import re

from iodsub import fixtures
from iodsub.engine import EngineConfig, run
from iodsub.pplane import Label, initial_triangulation
from iodsub.render import render_result, render_svg


def test_initial_diamond():
    leaves = [(n.triangle, Label.PASS) for n in initial_triangulation().nodes]
    svg = render_svg(leaves)
    polys = re.findall(r'points="([^"]+)"', svg)
    assert len(polys) == 4
    corners = {p for poly in polys for p in poly.split()}
    # four diamond tips plus the shared centre
    assert len(corners) == 5
    assert "300,300" in corners


def test_one_red_polygon_per_accepted_triangle():
    res = run(fixtures.single_observer(), EngineConfig())
    svg = render_result(res)
    assert svg.count('class="accept"') == len(res.accepted) > 0
    assert 'class="known"' in svg


def test_svg_deterministic():
    cfg = EngineConfig(min_area_to_stop=1e-2)
    a = render_result(run(fixtures.two_solutions(), cfg), "two")
    b = render_result(run(fixtures.two_solutions(), cfg), "two")
    assert a == b
