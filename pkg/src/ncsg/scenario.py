"""Scenario files: parsing, validation and the per-suite verification runners."""
from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import TracialAlgebra, lp_norm, random_element
from .calculus import BUILTINS, imaginary_power
from .dilation import build_path_space, check_chain_semigroup, verify_dilation_identity
from .ergodic import contour_Tz, decomposition_check, mean_ergodic_bound, witness_projection
from .maximal import angle_hypothesis, maximal_inequality_harness, sector_grid
from .multiplier import imaginary_power_growth
from .semigroup import (
    build_generator,
    eigendecompose,
    fixed_point_projection,
    generator_from_json,
)
from .squarefn import equivalence_tracker, square_function_norms

SUITES = ("dilation", "ergodic", "maximal", "multiplier", "squarefn")
GENERATORS = {
    "depolarizing": "rate: positive real",
    "markov_chain": "Q: symmetric-in-weights rate matrix on a diagonal algebra",
    "schur": "vectors: one real vector b_i per matrix index",
    "tensor_sum": "left, right: generators; left_algebra, right_algebra: algebras",
}


class ScenarioError(ValueError):
    """A scenario file that does not parse or validate."""


@dataclass
class GridShape:
    n_radial: int = 16
    n_angular: int = 4
    r_min: float = 1e-2
    r_max: float = 1e2


@dataclass
class SuiteParams:
    p_list: list = field(default_factory=lambda: [1.5, 2.0, 3.0])
    psi: object = "auto"
    u_grid: list = field(default_factory=lambda: [-2.0, -1.0, 1.0, 2.0])
    grid: GridShape = field(default_factory=GridShape)
    seeds: int = 3
    restarts: int = 4
    ergodic_budget: float = 4.0
    equivalence_window: list = field(default_factory=lambda: [1e-3, 1e3])
    decomposition_tol: float = 1e-10
    contour_tol: float = 1e-6
    dilation_tol: float = 1e-12
    witness_epsilon: float = 0.1

    def psi_for(self, p: float) -> float:
        if self.psi == "auto":
            return 0.5 * (0.5 - abs(1 / p - 0.5)) * math.pi
        return float(self.psi)


@dataclass
class System:
    name: str
    algebra: TracialAlgebra
    generator: object


@dataclass
class Scenario:
    name: str
    seed: int
    suites: list
    systems: list
    params: SuiteParams
    chain: dict | None = None
    source: str = ""

    @property
    def digest(self) -> str:
        doc = json.loads(self.source) if self.source else {}
        doc["seed"] = self.seed
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def _line_of(text: str, key: str) -> int:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def _fail(text, key, msg):
    raise ScenarioError(f"line {_line_of(text, key)}: {msg}")


def builtin_scenario(name: str) -> str:
    path = resources.files("ncsg") / "scenarios" / f"{name}.json"
    if not path.is_file():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return path.read_text()


def load_text(path_or_name: str) -> str:
    p = Path(path_or_name)
    if p.is_file():
        return p.read_text()
    return builtin_scenario(path_or_name)


def parse_scenario(text: str, seed_override: int | None = None) -> Scenario:
    """Parse and validate; every error names the offending line."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioError(f"line {err.lineno}, column {err.colno}: {err.msg}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("line 1: a scenario is a JSON object")

    suites = doc.get("suites", [])
    if suites == "all":
        suites = list(SUITES)
    if not isinstance(suites, list) or any(s not in SUITES for s in suites):
        _fail(text, "suites", f"suites must be 'all' or a list drawn from {list(SUITES)}")

    raw = dict(doc.get("params", {}))
    grid = GridShape(**raw.pop("grid", {})) if isinstance(raw.get("grid", {}), dict) else None
    if grid is None:
        _fail(text, "grid", "grid must be an object")
    try:
        params = SuiteParams(grid=grid, **raw)
    except TypeError as err:
        _fail(text, "params", f"unknown parameter ({err})")
    _validate_params(text, params, suites)

    systems = []
    for k, sdoc in enumerate(doc.get("systems", [])):
        try:
            alg = TracialAlgebra.from_json(sdoc["algebra"])
            spec = generator_from_json(sdoc["generator"])
            build_generator(spec, alg)
        except (KeyError, ValueError, TypeError) as err:
            _fail(text, "systems", f"system {k}: {err}")
        systems.append(System(sdoc.get("name", f"system{k}"), alg, spec))
    needs_system = [s for s in suites if s != "dilation"]
    if needs_system and not systems:
        _fail(text, "systems", f"suites {needs_system} need at least one system")

    chain = doc.get("chain")
    if "dilation" in suites:
        if chain is None:
            _fail(text, "suites", "the dilation suite needs a 'chain' section {P, w?, T}")
        try:
            build_path_space(chain["P"], chain.get("w"), chain.get("T", 3))
        except (KeyError, ValueError) as err:
            _fail(text, "chain", str(err))

    seed = int(doc.get("seed", 0)) if seed_override is None else int(seed_override)
    return Scenario(doc.get("name", "scenario"), seed, suites, systems, params, chain, text)


def _validate_params(text, params: SuiteParams, suites):
    ps = params.p_list
    if not isinstance(ps, list) or not ps or any(not isinstance(p, (int, float)) for p in ps):
        _fail(text, "p_list", "p_list must be a nonempty list of numbers")
    if any(s in suites for s in ("multiplier", "maximal", "squarefn")):
        bad = [p for p in ps if not 1 < p < math.inf]
        if bad:
            _fail(text, "p_list", f"these suites need 1 < p < inf, got {bad}")
    if params.psi != "auto" and not isinstance(params.psi, (int, float)):
        _fail(text, "psi", "psi is 'auto' or an angle in radians")
    if "maximal" in suites:
        for p in ps:
            psi = params.psi_for(p)
            if not angle_hypothesis(p, psi):
                _fail(text, "psi", f"sector angle hypothesis violated for p={p}: need "
                                   f"0 <= psi/pi < 1/2 - |1/p - 1/2|, got psi/pi={psi / math.pi:.4f}")
    if params.seeds < 1:
        _fail(text, "seeds", "seeds must be a positive count")
    if not 0 < params.witness_epsilon < 1:
        _fail(text, "witness_epsilon", "witness_epsilon must lie in (0, 1)")


# -- suite runners ---------------------------------------------------------------

def _check(name, passed, **values):
    return {"name": name, "passed": bool(passed), **values}


def _systems(sc: Scenario):
    for s in sc.systems:
        L = build_generator(s.generator, s.algebra)
        yield s, L, eigendecompose(L)


def run_multiplier(sc: Scenario) -> dict:
    checks, series = [], []
    for s, L, dec in _systems(sc):
        rng = np.random.default_rng(sc.seed)
        worst = 0.0
        for _ in range(sc.params.seeds):
            x = random_element(s.algebra, rng)
            x = x - fixed_point_projection(dec, x)
            for u in sc.params.u_grid:
                worst = max(worst, abs(lp_norm(imaginary_power(dec, u, x), 2) - lp_norm(x, 2)) / lp_norm(x, 2))
        checks.append(_check(f"{s.name}/imaginary_power_isometry_l2", worst <= 1e-10, residual=worst))
        for p in sc.params.p_list:
            g = imaginary_power_growth(dec, p, sc.params.u_grid, sc.params.restarts, sc.seed)
            checks.append(_check(f"{s.name}/envelope_p{p:g}", g["dominated"],
                                 fitted_constant=g["fitted_constant"],
                                 fitted_interpolated_constant=g["fitted_interpolated_constant"]))
            series += [{"system": s.name, **r} for r in g["rows"]]
    return {"checks": checks, "series": {"imaginary_powers": series}}


def run_maximal(sc: Scenario) -> dict:
    checks, series = [], []
    g = sc.params.grid
    for s, L, dec in _systems(sc):
        rng = np.random.default_rng(sc.seed)
        xs = [random_element(s.algebra, rng) for _ in range(sc.params.seeds)]
        for p in sc.params.p_list:
            psi = sc.params.psi_for(p)
            zs = sector_grid(psi, g.n_radial, g.n_angular, g.r_min, g.r_max)
            rep = maximal_inequality_harness(dec, p, psi, zs, xs, sc.params.ergodic_budget, pieces=False)
            checks.append(_check(f"{s.name}/maximal_p{p:g}", rep["passed"], ratio_min=rep["ratio_min"],
                                 ratio_max=rep["ratio_max"], budget=rep["budget"]))
            if s.algebra.is_commutative:
                dev = max(abs(r["ratio"] - r["classical_ratio"]) for r in rep["rows"])
                checks.append(_check(f"{s.name}/maximal_classical_p{p:g}", p != 2 or dev <= 1e-6, deviation=dev))
            series += [{"system": s.name, "p": p, "psi": psi, **r} for r in rep["rows"]]
    return {"checks": checks, "series": {"maximal_ratios": series}}


def run_squarefn(sc: Scenario) -> dict:
    checks, series = [], []
    lo, hi = sc.params.equivalence_window
    for s, L, dec in _systems(sc):
        rng = np.random.default_rng(sc.seed)
        x = random_element(s.algebra, rng)
        v = square_function_norms(dec, x, 2)
        target = lp_norm(x - fixed_point_projection(dec, x), 2) / 2
        checks.append(_check(f"{s.name}/p2_identity", abs(v.column_value - target) <= 1e-10,
                             residual=abs(v.column_value - target)))
        seeds = [sc.seed + k for k in range(sc.params.seeds)]
        for p in sc.params.p_list:
            rep = equivalence_tracker(dec, p, seeds, (lo, hi))
            checks.append(_check(f"{s.name}/equivalence_p{p:g}", rep.passed,
                                 min_ratio=rep.min_ratio, max_ratio=rep.max_ratio))
            series += [{"system": s.name, "p": p, "seed": a, "ratio": r} for a, r in zip(rep.seeds, rep.ratios)]
    return {"checks": checks, "series": {"square_function_ratios": series}}


def run_ergodic(sc: Scenario) -> dict:
    checks, series = [], []
    prm = sc.params
    for s, L, dec in _systems(sc):
        rng = np.random.default_rng(sc.seed)
        worst = 0.0
        for _ in range(prm.seeds * 10):
            x = random_element(s.algebra, rng)
            t = float(10 ** rng.uniform(-2, 2))
            th = float(rng.uniform(-0.45, 0.45) * math.pi)
            worst = max(worst, decomposition_check(dec, x, t, th))
        checks.append(_check(f"{s.name}/decomposition", worst <= prm.decomposition_tol, residual=worst))
        x = random_element(s.algebra, rng)
        xr = x - fixed_point_projection(dec, x)
        dev = max(contour_Tz(dec, z, xr).deviation for z in (1.0, 2 * np.exp(1j * math.pi / 8)))
        checks.append(_check(f"{s.name}/contour", dev <= prm.contour_tol, deviation=dev))
        excess = max(a - b for a, b in (mean_ergodic_bound(dec, x, t) for t in (0.5, 5.0, 50.0)))
        checks.append(_check(f"{s.name}/mean_ergodic_rate", excess <= 1e-10, excess=excess))
        grid = list(np.logspace(-9, 0, 19))
        w = witness_projection(dec, x, prm.witness_epsilon, grid)
        ok = w.tau_complement < prm.witness_epsilon and w.monotone and w.final <= 1e-6
        checks.append(_check(f"{s.name}/witness", ok, tau_complement=w.tau_complement, final=w.final))
        series += [{"system": s.name, "abs_z": a, "arg_z": b, "value": v} for a, b, v in w.table]
    return {"checks": checks, "series": {"witness_table": series}}


def run_dilation(sc: Scenario) -> dict:
    ch = sc.chain
    ps = build_path_space(ch["P"], ch.get("w"), ch.get("T", 3))
    rng = np.random.default_rng(sc.seed)
    worst, series = 0.0, []
    for _ in range(sc.params.seeds):
        f = rng.standard_normal(ps.states)
        for t in range(ps.horizon + 1):
            for s in range(t + 1):
                r = verify_dilation_identity(ps, f, s, t)
                worst = max(worst, r)
                series.append({"s": s, "t": t, "residual": r})
    report = check_chain_semigroup(ps.P, ps.w)
    checks = [_check("dilation_identity", worst <= sc.params.dilation_tol, residual=worst),
              _check("chain_standard_semigroup", report.passed, failed=report.failed())]
    return {"checks": checks, "series": {"dilation_residuals": series}}


RUNNERS = {"dilation": run_dilation, "ergodic": run_ergodic, "maximal": run_maximal,
           "multiplier": run_multiplier, "squarefn": run_squarefn}


def run_suite(text: str, seed: int, suite: str) -> dict:
    """Entry point for worker processes: reparse and run one suite."""
    sc = parse_scenario(text, seed)
    try:
        out = RUNNERS[suite](sc)
    except Exception as err:  # recorded in the report; the run still flushes
        out = {"checks": [_check("error", False, message=f"{type(err).__name__}: {err}")], "series": {}}
    out["suite"] = suite
    out["passed"] = all(c["passed"] for c in out["checks"])
    return out


def clean(obj, digits: int = 10):
    """JSON-ready copy with floats printed at fixed precision (non-finite as strings)."""
    if isinstance(obj, dict):
        return {str(k): clean(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v, digits) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return str(v)
        return float(f"{v:.{digits}g}")
    if isinstance(obj, complex):
        return [clean(obj.real, digits), clean(obj.imag, digits)]
    return obj


def report_header(sc: Scenario) -> dict:
    return {"tool": "ncsg", "version": __version__, "scenario": sc.name,
            "scenario_hash": sc.digest, "seed": sc.seed, "suites": list(sc.suites)}


def catalogue() -> dict:
    return {"generators": {k: GENERATORS[k] for k in sorted(GENERATORS)},
            "sector_functions": {k: BUILTINS[k][1] for k in sorted(BUILTINS)},
            "suites": sorted(SUITES)}
