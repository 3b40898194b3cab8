"""JSON documents for scenarios, configs, solutions, stats and saved runs.

Reals are written with ``repr``, which is the shortest decimal that reads
back to the same double, so every document round-trips exactly.  Matrices
are stored as five 3-vectors, one per line of sight (the columns of the
printed matrices).
"""
from __future__ import annotations

import json
import math
import re
from pathlib import Path
from typing import Any

import numpy as np

from .engine import EngineConfig, RunResult, RunStats, Solution
from .mastermap import Scenario
from .oracles import OracleConfig
from .pplane import DyadicPoint, Label, Triangle

FORMAT_VERSION = 1


class FormatError(ValueError):
    """A document could not be read; the message names the file and field."""


def _read_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from None
    if not text.strip():
        raise FormatError(f"{path}: empty document")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


_FLAT_LIST = re.compile(r"\[\s+([^\[\]{}\"]*?)\s+\]")


def dumps(doc) -> str:
    """Indented JSON with innermost numeric arrays kept on one line."""
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False)
    text = _FLAT_LIST.sub(lambda m: "[" + ", ".join(x.strip() for x in m.group(1).split(",")) + "]", text)
    return text + "\n"


def _write_json(path, doc) -> None:
    Path(path).write_text(dumps(doc))


def _real(x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("non-finite real")
    return x


def _vectors(value, field: str, count=None) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise FormatError(f"field {field!r}: expected a list of 3-vectors of reals") from None
    if arr.ndim != 2 or arr.shape[1] != 3 or (count is not None and arr.shape[0] != count):
        want = f"{count} columns" if count is not None else "a list"
        raise FormatError(f"field {field!r}: expected {want} of 3 reals, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"field {field!r}: non-finite value")
    return arr


# -- scenarios ---------------------------------------------------------------


def scenario_to_dict(s: Scenario) -> dict:
    doc = {
        "p": [[_real(x) for x in row] for row in s.p],
        "u": [[_real(x) for x in row] for row in s.u_raw],
        "known_solutions": [[_real(x) for x in w] for w in s.known_solutions],
    }
    if s.length_unit is not None:
        doc["length_unit"] = s.length_unit
    return doc


def scenario_from_dict(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise FormatError("scenario: expected an object with fields 'p' and 'u'")
    unknown = set(doc) - {"p", "u", "known_solutions", "length_unit"}
    if unknown:
        raise FormatError(f"scenario: unknown field(s) {sorted(unknown)}")
    for key in ("p", "u"):
        if key not in doc:
            raise FormatError(f"scenario: missing field {key!r}")
    p = _vectors(doc["p"], "p", 5)
    u = _vectors(doc["u"], "u", 5)
    known = doc.get("known_solutions", [])
    known = _vectors(known, "known_solutions") if len(known) else np.zeros((0, 3))
    unit = doc.get("length_unit")
    if unit is not None and not isinstance(unit, str):
        raise FormatError("field 'length_unit': expected a string")
    try:
        return Scenario(p, u, known_solutions=tuple(known), length_unit=unit)
    except ValueError as exc:
        raise FormatError(f"scenario: {exc}") from None


def read_scenario(path) -> Scenario:
    try:
        return scenario_from_dict(_read_json(path))
    except FormatError as exc:
        if str(exc).startswith(str(path)):
            raise
        raise FormatError(f"{path}: {exc}") from None


def write_scenario(path, s: Scenario) -> None:
    _write_json(path, scenario_to_dict(s))


# -- configs -----------------------------------------------------------------

_ORACLE_KEYS = ("c_max_int_norm", "c_safety", "c_area_scaling", "newton_variant", "jacobian_norm")
_ENGINE_KEYS = ("max_area_to_label", "min_area_to_stop", "subdivision_ratio", "certify",
                "certify_refine_area", "audit_rejections", "max_generations", "threads")


def config_to_dict(cfg: EngineConfig) -> dict:
    doc = {"sequence": [name if isinstance(name, str) else name[0] for name in cfg.sequence]}
    for k in _ORACLE_KEYS:
        doc[k] = getattr(cfg.oracle, k)
    for k in _ENGINE_KEYS:
        v = getattr(cfg, k)
        if v is not None:
            doc[k] = v
    return doc


def config_from_dict(doc) -> EngineConfig:
    if not isinstance(doc, dict):
        raise FormatError("config: expected an object")
    unknown = set(doc) - set(_ORACLE_KEYS) - set(_ENGINE_KEYS) - {"sequence", "seed"}
    if unknown:
        raise FormatError(f"config: unknown field(s) {sorted(unknown)}")
    oracle = {k: doc[k] for k in _ORACLE_KEYS if k in doc}
    engine = {k: doc[k] for k in _ENGINE_KEYS if k in doc}
    if "sequence" in doc:
        seq = doc["sequence"]
        if not isinstance(seq, list) or not all(isinstance(x, str) for x in seq):
            raise FormatError("field 'sequence': expected a list of oracle names")
        engine["sequence"] = tuple(seq)
    try:
        return EngineConfig(oracle=OracleConfig(**oracle), **engine)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"config: {exc}") from None


def read_config(path) -> EngineConfig:
    try:
        return config_from_dict(_read_json(path))
    except FormatError as exc:
        if str(exc).startswith(str(path)):
            raise
        raise FormatError(f"{path}: {exc}") from None


def write_config(path, cfg: EngineConfig) -> None:
    _write_json(path, config_to_dict(cfg))


# -- results -----------------------------------------------------------------


def stats_to_dict(st: RunStats) -> dict:
    doc = {
        "area_accepted": st.area_accepted,
        "area_passed": st.area_passed,
        "area_rejected": dict(st.area_rejected),
        "area_total": st.total_area,
        "ratio": st.ratio if math.isfinite(st.ratio) else None,
        "bottleneck_calls": st.bottleneck_calls,
        "triangles_labeled": st.triangles_labeled,
        "generations": st.generations,
        "hit_generation_cap": st.hit_generation_cap,
    }
    if st.certified_rejections is not None:
        doc["certified_rejections"] = st.certified_rejections
    return doc


def solution_to_dict(sol: Solution) -> dict:
    doc = {
        "w": [_real(x) for x in sol.w],
        "residual": _real(sol.residual) if math.isfinite(sol.residual) else None,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "certified": sol.certified,
        "unique": sol.unique,
        "triangle": sol.triangle,
    }
    if sol.theta is not None:
        doc["theta"] = dict(zip("abcde", (_real(x) for x in sol.theta.as_array())))
    return doc


def solutions_to_dict(result: RunResult) -> dict:
    distinct = result.distinct_solutions()
    return {
        "solutions": [solution_to_dict(s) for s in distinct],
        "polished": [solution_to_dict(s) for s in result.solutions],
    }


def _triangle_doc(t: Triangle, label: Label, oracle) -> dict:
    return {
        "face": t.face_id,
        "generation": t.generation,
        "vertices": [[v.x, v.y, v.z, v.exp] for v in t.vertices],
        "label": label.value,
        "oracle": oracle,
    }


def run_to_dict(result: RunResult, title: str = "") -> dict:
    """Leaves of the final triangulation plus what the picture needs."""
    leaves = [
        _triangle_doc(n.triangle, n.label, n.oracle)
        for n in result.triangulation.nodes
        if not n.children
    ]
    return {
        "format": FORMAT_VERSION,
        "title": title,
        "leaves": leaves,
        "solutions": [[_real(x) for x in s.w] for s in result.distinct_solutions()],
        "known_solutions": [[_real(x) for x in w] for w in result.scenario.known_solutions],
    }


def leaves_from_dict(doc) -> list[tuple[Triangle, Label]]:
    try:
        out = []
        for item in doc["leaves"]:
            verts = [DyadicPoint(*v) for v in item["vertices"]]
            out.append((Triangle(*verts, item["face"], item["generation"]), Label(item["label"])))
        return out
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"saved run: malformed leaves ({exc})") from None


def read_run(path) -> dict:
    doc = _read_json(path)
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_VERSION:
        raise FormatError(f"{path}: not a saved run (format {FORMAT_VERSION})")
    return doc
