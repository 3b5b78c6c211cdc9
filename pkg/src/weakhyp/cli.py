"""Scenario orchestration and the command-line interface.

Verbs:

    weakhyp run <scenario.json> [...]   execute scenario files
    weakhyp table --sigma-min ... --sigma-max ... --step ... --nu N
    weakhyp audit <symbols|metric|quantizer>
    weakhyp cjs --k K --xi-ladder 16,32,...

Scenario files are JSON with a "kind", an "output_dir" and a "config"
section; unknown config keys are rejected (exit 2) since a silently
ignored sigma or c would invalidate a run.  Exit codes: 0 all embedded
assertions passed, 1 an assertion failed (failures.json written),
2 the scenario did not validate.  The WEAKHYP_WORKERS environment
variable bounds the pool used when several scenario files are given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

from . import audits, cjs
from .constraints import constraint_table, minimal_feasible_sigma
from .reporting import write_csv, write_json
from .solver import NonlinearityF, RunConfig, measure_tau_threshold, run_with_energy
from .symbols import CoefficientField, PhaseMetric, SymbolB

__all__ = ["Scenario", "load_scenario", "run_scenario", "main"]

SCENARIO_KINDS = (
    "energy_estimate",
    "symbol_audit",
    "metric_audit",
    "quantizer_audit",
    "cjs_sweep",
    "constraint_table",
)

TRACE_COLUMNS = ("t", "tau", "E", "E1", "E2", "E3", "E4", "r2", "r3", "r4")


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    kind: str
    config: dict
    output_dir: str

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ScenarioError(
                f"unknown scenario kind {self.kind!r}; "
                f"expected one of {', '.join(SCENARIO_KINDS)}"
            )


def _check_keys(section: dict, allowed, where: str) -> None:
    unknown = set(section) - set(allowed)
    if unknown:
        raise ScenarioError(
            f"unknown keys in {where}: {', '.join(sorted(unknown))}"
        )


def load_scenario(path: str) -> Scenario:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ScenarioError(f"cannot read scenario {path}: {err}") from err
    _check_keys(raw, {"kind", "config", "output_dir"}, path)
    for key in ("kind", "output_dir"):
        if key not in raw:
            raise ScenarioError(f"scenario {path} is missing {key!r}")
    return Scenario(kind=raw["kind"], config=raw.get("config", {}),
                    output_dir=raw["output_dir"])


def _coeff_from_config(section: Optional[dict]) -> CoefficientField:
    if not section:
        return CoefficientField()
    allowed = {"x0", "r", "r_outer", "T", "T_outer", "sigma_coeff", "radius_R"}
    _check_keys(section, allowed, "config.coeff")
    return CoefficientField(**section)


ENERGY_KEYS = {
    "n", "length", "sigma", "c", "tau0", "taudot", "taudot_factor",
    "nonlinear", "f21_zero", "packet_xi", "packet_width",
    "packet_component", "sample_stride", "horizon", "seed", "coeff",
    "assert_max_ratio",
}


def _run_energy_estimate(cfg_raw: dict, out: str) -> list:
    _check_keys(cfg_raw, ENERGY_KEYS, "config")
    coeff = _coeff_from_config(cfg_raw.get("coeff"))
    kwargs = {k: cfg_raw[k] for k in
              ("n", "length", "sigma", "c", "tau0", "packet_xi",
               "packet_width", "packet_component", "sample_stride",
               "horizon", "seed", "f21_zero") if k in cfg_raw}
    kwargs["coeff"] = coeff
    if not cfg_raw.get("nonlinear", True):
        kwargs["nonlinearity"] = NonlinearityF.zero()
    try:
        cfg = RunConfig(**kwargs)
    except ValueError as err:
        raise ScenarioError(str(err)) from err

    taudot = cfg_raw.get("taudot")
    threshold = None
    if taudot is None or taudot == "auto":
        threshold = measure_tau_threshold(cfg)
        taudot = cfg_raw.get("taudot_factor", 2.0) * threshold
    cfg = replace(cfg, taudot=float(taudot))

    trace = run_with_energy(cfg)
    write_csv(os.path.join(out, "trace.csv"), trace.rows(), TRACE_COLUMNS)
    summary = {
        "max_ratio": trace.max_ratio(),
        "threshold": threshold,
        "taudot": cfg.taudot,
        "horizon": cfg.t_end(),
        "aborted": trace.aborted,
        "config_hash": cfg.content_hash(),
        "config": cfg.describe(),
    }
    write_json(os.path.join(out, "summary.json"), summary)
    failures = []
    if trace.aborted:
        failures.append({"check": "run_completed", "detail": trace.abort_reason})
    cap = cfg_raw.get("assert_max_ratio")
    if cap is not None and trace.max_ratio() > cap:
        failures.append({"check": "max_ratio", "detail":
                         f"max_ratio {trace.max_ratio()} > cap {cap}"})
    return failures


def _run_symbol_audit(cfg_raw: dict, out: str) -> list:
    _check_keys(cfg_raw, {"c", "t", "orders", "coeff"}, "config")
    coeff = _coeff_from_config(cfg_raw.get("coeff"))
    try:
        sb = SymbolB(coeff, c=cfg_raw.get("c", 1.0))
    except ValueError as err:
        raise ScenarioError(str(err)) from err
    t = cfg_raw.get("t", 0.0)
    orders = [tuple(o) for o in cfg_raw.get("orders",
                                            [[0, 0], [1, 0], [0, 1], [2, 0],
                                             [1, 1], [0, 2], [2, 1], [1, 2]])]
    reports = [audits.glaeser_audit_a(coeff),
               audits.faa_di_bruno_check()]
    for alpha, beta in orders:
        reports.append(audits.derivative_bound_audit(sb, alpha, beta, t=t))
    write_json(os.path.join(out, "audit.json"),
               {"records": [r.as_dict() for r in reports]})
    return [{"check": r.check, "detail": "failed"}
            for r in reports if not r.passed]


def _run_metric_audit(cfg_raw: dict, out: str) -> list:
    _check_keys(cfg_raw, {"c", "t", "n_pairs", "xi_max", "seed", "coeff"},
                "config")
    coeff = _coeff_from_config(cfg_raw.get("coeff"))
    try:
        sb = SymbolB(coeff, c=cfg_raw.get("c", 1.0))
    except ValueError as err:
        raise ScenarioError(str(err)) from err
    pm = PhaseMetric(sb)
    kwargs = {k: cfg_raw[k] for k in ("t", "n_pairs", "xi_max", "seed")
              if k in cfg_raw}
    reports = audits.metric_admissibility_audit(pm, **kwargs)
    weight = audits.weight_admissibility_audit(
        pm, **{k: v for k, v in kwargs.items() if k != "seed"})
    records = [r.as_dict() for r in reports.values()] + [weight.as_dict()]
    write_json(os.path.join(out, "metric.json"), {"records": records})
    return [{"check": r["check"], "detail": "failed"}
            for r in records if not r["pass"]]


def _run_quantizer_audit(cfg_raw: dict, out: str) -> list:
    from .quantize import (SymbolField, invert_b, operator_norm, quantize,
                           sample_symbol_b)
    from .spectral import Grid

    _check_keys(cfg_raw, {"c", "t", "sizes", "coeff", "dump_matrices"},
                "config")
    coeff = _coeff_from_config(cfg_raw.get("coeff"))
    c = cfg_raw.get("c", 0.5)
    try:
        sb = SymbolB(coeff, c=c)
    except ValueError as err:
        raise ScenarioError(str(err)) from err
    t = cfg_raw.get("t", 0.0)
    sizes = cfg_raw.get("sizes", [128, 256])
    dump = bool(cfg_raw.get("dump_matrices", False))
    records = []
    failures = []

    comp_norms = []
    for n in sizes:
        grid = Grid(n, 1.0, coeff.x0)
        bf = sample_symbol_b(sb, grid, t)
        B = quantize(bf)
        if dump:
            # raw row-major complex doubles, little-endian
            B.matrix.astype("<c16").tofile(os.path.join(out, f"op_b_n{n}.bin"))
        herm = B.hermiticity_defect()
        records.append({"check": f"hermiticity_n{n}", "constant": herm,
                        "pass": herm <= 1e-10})
        R = B.matrix @ B.matrix - quantize(
            SymbolField(grid, bf.samples**2, time=t, label="b^2")).matrix
        comp_norms.append(operator_norm(R))
        records.append({"check": f"compose_norm_n{n}",
                        "constant": comp_norms[-1], "pass": True})
    for lo, hi in zip(comp_norms, comp_norms[1:]):
        records.append({"check": "compose_norm_decreases",
                        "constant": hi / lo, "pass": hi < lo})

    grid = Grid(sizes[-1], 1.0, coeff.x0)
    _, defects = invert_b(sb, 2, t, grid)
    records.append({"check": "invert_defects", "constant": defects[-1],
                    "pass": defects[0] >= defects[1] >= defects[2],
                    "defects": defects})
    write_json(os.path.join(out, "quantizer.json"), {"records": records})
    failures.extend({"check": r["check"], "detail": "failed"}
                    for r in records if not r["pass"])
    return failures


def _run_cjs_sweep(cfg_raw: dict, out: str) -> list:
    _check_keys(cfg_raw, {"profile", "k", "xi_ladder", "t_final"}, "config")
    profile = cfg_raw.get("profile", "linear")
    makers = {"linear": cjs.coefficient_linear,
              "parabola": cjs.coefficient_parabola,
              "constant": cjs.coefficient_constant}
    if profile not in makers:
        raise ScenarioError(f"unknown cjs profile {profile!r}")
    tc = makers[profile]()
    ladder = cfg_raw.get("xi_ladder", [2**j for j in range(4, 11)])
    if len(ladder) < 6:
        raise ScenarioError("xi_ladder needs at least 6 frequencies")
    T = cfg_raw.get("t_final", 1.0)
    fit = cjs.growth_exponent_fit(tc, ladder, T, k=cfg_raw.get("k"))
    budget = 2.0 / (fit["k"] + 2.0) + 0.05
    passed = fit["no_growth"] or fit["slope"] <= budget
    write_csv(os.path.join(out, "cjs.csv"),
              ({"xi": r["xi"], "eps": r["eps"], "G": r["G"],
                "steps": r["steps"]} for r in fit["rows"]),
              ("xi", "eps", "G", "steps"))
    write_json(os.path.join(out, "summary.json"),
               {"k": fit["k"], "slope": fit["slope"],
                "intercept": fit["intercept"], "residual": fit["residual"],
                "budget": budget, "pass": passed,
                "no_growth": fit["no_growth"], "profile": profile})
    if not passed:
        return [{"check": "growth_exponent",
                 "detail": f"slope {fit['slope']} > budget {budget}"}]
    return []


def _run_constraint_table(cfg_raw: dict, out: str) -> list:
    _check_keys(cfg_raw, {"sigma_min", "sigma_max", "step", "nu", "f21_zero"},
                "config")
    try:
        records = constraint_table(
            str(cfg_raw.get("sigma_min", "0.3")),
            str(cfg_raw.get("sigma_max", "0.99")),
            str(cfg_raw.get("step", "0.001")),
            nu=cfg_raw.get("nu", 4),
            f21_zero=cfg_raw.get("f21_zero", False),
        )
    except ValueError as err:
        raise ScenarioError(str(err)) from err
    rows = [r.as_dict() for r in records]
    fields = list(rows[0].keys())
    write_csv(os.path.join(out, "table.csv"), rows, fields)
    minimal = minimal_feasible_sigma(records)
    write_json(os.path.join(out, "summary.json"),
               {"min_feasible_sigma":
                float(minimal) if minimal is not None else None,
                "n_rows": len(rows)})
    return []


_RUNNERS = {
    "energy_estimate": _run_energy_estimate,
    "symbol_audit": _run_symbol_audit,
    "metric_audit": _run_metric_audit,
    "quantizer_audit": _run_quantizer_audit,
    "cjs_sweep": _run_cjs_sweep,
    "constraint_table": _run_constraint_table,
}


def run_scenario(scenario: Scenario) -> int:
    """Execute one scenario. 0 = pass, 1 = failed checks, 2 = invalid."""
    try:
        os.makedirs(scenario.output_dir, exist_ok=True)
        failures = _RUNNERS[scenario.kind](scenario.config,
                                           scenario.output_dir)
    except ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if failures:
        write_json(os.path.join(scenario.output_dir, "failures.json"),
                   {"failures": failures})
        return 1
    return 0


def _cmd_run(args) -> int:
    try:
        scenarios = [load_scenario(p) for p in args.scenario]
        dirs = [os.path.abspath(s.output_dir) for s in scenarios]
        if len(set(dirs)) != len(dirs):
            raise ScenarioError(
                "scenario jobs must own their output directories exclusively; "
                "duplicate output_dir found"
            )
    except ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    workers = int(os.environ.get("WEAKHYP_WORKERS", "1"))
    if workers > 1 and len(scenarios) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            codes = list(pool.map(run_scenario, scenarios))
    else:
        codes = [run_scenario(s) for s in scenarios]
    return max(codes)


def _cmd_table(args) -> int:
    scenario = Scenario(
        kind="constraint_table",
        config={"sigma_min": args.sigma_min, "sigma_max": args.sigma_max,
                "step": args.step, "nu": args.nu,
                "f21_zero": args.f21_zero},
        output_dir=args.out,
    )
    return run_scenario(scenario)


def _cmd_audit(args) -> int:
    kind = {"symbols": "symbol_audit", "metric": "metric_audit",
            "quantizer": "quantizer_audit"}[args.target]
    config = {}
    if args.c is not None:
        config["c"] = args.c
    if args.dump_matrices and kind == "quantizer_audit":
        config["dump_matrices"] = True
    scenario = Scenario(kind=kind, config=config, output_dir=args.out)
    return run_scenario(scenario)


def _cmd_cjs(args) -> int:
    config = {"profile": args.profile, "t_final": args.t_final}
    if args.k is not None:
        config["k"] = args.k
    if args.xi_ladder:
        config["xi_ladder"] = [float(v) for v in args.xi_ladder.split(",")]
    scenario = Scenario(kind="cjs_sweep", config=config, output_dir=args.out)
    return run_scenario(scenario)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="weakhyp",
        description="spectral experiments for the weakly hyperbolic model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute scenario files")
    p_run.add_argument("scenario", nargs="+")
    p_run.set_defaults(fn=_cmd_run)

    p_table = sub.add_parser("table", help="constraint feasibility table")
    p_table.add_argument("--sigma-min", default="0.3")
    p_table.add_argument("--sigma-max", default="0.99")
    p_table.add_argument("--step", default="0.001")
    p_table.add_argument("--nu", type=int, default=4)
    p_table.add_argument("--f21-zero", action="store_true")
    p_table.add_argument("--out", default="out/table")
    p_table.set_defaults(fn=_cmd_table)

    p_audit = sub.add_parser("audit", help="run an audit bundle")
    p_audit.add_argument("target", choices=["symbols", "metric", "quantizer"])
    p_audit.add_argument("--c", type=float, default=None)
    p_audit.add_argument("--dump-matrices", action="store_true",
                         help="write assembled operators as raw complex128")
    p_audit.add_argument("--out", default="out/audit")
    p_audit.set_defaults(fn=_cmd_audit)

    p_cjs = sub.add_parser("cjs", help="scalar-mode growth sweep")
    p_cjs.add_argument("--k", type=int, default=None)
    p_cjs.add_argument("--xi-ladder", default="")
    p_cjs.add_argument("--profile", default="linear",
                       choices=["linear", "parabola", "constant"])
    p_cjs.add_argument("--t-final", type=float, default=1.0)
    p_cjs.add_argument("--out", default="out/cjs")
    p_cjs.set_defaults(fn=_cmd_cjs)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
