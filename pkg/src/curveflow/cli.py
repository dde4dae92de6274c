"""Command-line front end.

Subcommands:

* ``curveflow run <cfg> [--out DIR] [--strict] [--dump-fields]``
* ``curveflow reproduce <id> [--method 1|2|3] [--out DIR] [--strict] [--parallel]``
* ``curveflow validate <cfg>``
* ``curveflow list-scenarios``

``reproduce`` executes the bundled scenario configurations (fig2..fig10,
s1..s3) and prints the conservation drift of each variant against its
expected law (constant cell number, or exp(-A t) under depletion).  Runs
always exit 0 on completion; ``--strict`` turns a violated drift bound
into a nonzero exit status.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from curveflow.config import SimConfig, echo_config, materialise_shape, parse_config
from curveflow.driver import run as run_driver
from curveflow.errors import CurveflowError


@dataclass(frozen=True)
class Scenario:
    cfg_file: str
    description: str
    # (variant label, config-key overrides)
    variants: tuple[tuple[str, dict], ...]
    drift_bound: float  # |N_ratio - expected| bound used by --strict


SCENARIOS: dict[str, Scenario] = {
    "fig2": Scenario(
        "fig2_circle.cfg",
        "circular pore infilling at three lateral diffusivities",
        (("D1e-4", {"D": "0.0001"}), ("D1e-2", {"D": "0.01"}), ("D1", {"D": "1.0"})),
        0.05,
    ),
    "fig3": Scenario(
        "fig3_hexagon.cfg",
        "hexagonal pore infilling at three lateral diffusivities",
        (("D1e-4", {"D": "0.0001"}), ("D1e-2", {"D": "0.01"}), ("D1", {"D": "1.0"})),
        0.10,
    ),
    "fig4": Scenario(
        "fig4_square.cfg",
        "square pore infilling at three lateral diffusivities",
        (("D1e-4", {"D": "0.0001"}), ("D1e-2", {"D": "0.01"}), ("D1", {"D": "1.0"})),
        0.10,
    ),
    "fig5": Scenario(
        "fig5_spicule.cfg",
        "bone apposition on a single spicule, methods 2 vs 3",
        (("method2", {"method": "2"}), ("method3", {"method": "3"})),
        0.05,
    ),
    "fig6": Scenario(
        "fig6_two_struts.cfg",
        "fusion of two struts, then resorption (time irreversibility)",
        (("D1e-2", {}),),
        0.25,
    ),
    "fig7": Scenario(
        "fig7_spicule_field.cfg",
        "spicule field: fusion under apposition, fragmentation under resorption",
        (("formation", {}), ("resorption", {"phases": "2.3:-1"})),
        0.25,
    ),
    "fig8": Scenario(
        "fig8_bioscaffold.cfg",
        "four-pore scaffold, curvature-gated growth with cell depletion",
        (("gated", {}),),
        0.05,
    ),
    "fig9": Scenario(
        "fig9_spheroid.cfg",
        "3D spheroid growth and shrinkage (P = A)",
        (
            ("growth", {}),
            ("shrinkage", {"v0": "-0.016", "t_end": "10.0", "extent": "2.3"}),
        ),
        0.05,
    ),
    "fig10": Scenario(
        "fig10_spheroid_sweep.cfg",
        "3D spheroid at higher diffusivities",
        (("D1e-2", {"D": "0.01"}), ("D1e-1", {"D": "0.1"})),
        0.05,
    ),
    "s1": Scenario(
        "fig6_two_struts.cfg",
        "cell-number history of the strut fusion/resorption run",
        (("D1e-2", {}),),
        0.25,
    ),
    "s2": Scenario(
        "fig7_spicule_field.cfg",
        "cell-number history of the spicule-field runs",
        (("formation", {}), ("resorption", {"phases": "2.3:-1"})),
        0.25,
    ),
    "s3": Scenario(
        "fig8_bioscaffold.cfg",
        "cell-number decay of the gated scaffold against exp(-A t)",
        (("gated", {}),),
        0.05,
    ),
}


def load_scenario_text(cfg_file: str) -> str:
    return (resources.files("curveflow.scenarios") / cfg_file).read_text()


def apply_overrides(text: str, overrides: dict[str, str]) -> str:
    """Replace or append `key = value` lines."""
    lines = text.splitlines()
    seen = set()
    for i, line in enumerate(lines):
        stripped = line.split("#", 1)[0].strip()
        if "=" not in stripped:
            continue
        key = stripped.partition("=")[0].strip()
        if key in overrides:
            lines[i] = f"{key} = {overrides[key]}"
            seen.add(key)
    for key, val in overrides.items():
        if key not in seen:
            lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


def _drift_of(result, depletion: float) -> float:
    return max(
        abs(rec.N_ratio - np.exp(-depletion * rec.t)) for rec in result.diagnostics
    )


def execute(cfg: SimConfig, run_dir: Path, dump_fields: bool = False):
    run_dir.mkdir(parents=True, exist_ok=True)
    shape = materialise_shape(cfg, run_dir)
    echo_config(cfg, run_dir / "config_resolved.cfg")
    for w in cfg.warnings:
        print(f"warning: {w}")
    result = run_driver(
        cfg.plan,
        shape,
        cfg.grid,
        run_dir=run_dir,
        dump_fields=dump_fields or cfg.dump_fields,
        field_format=cfg.field_format,
    )
    return result


def cmd_run(args) -> int:
    path = Path(args.config)
    if not path.exists():
        print(f"error: config file not found: {path}", file=sys.stderr)
        return 1
    try:
        cfg = parse_config(path.read_text(), base_dir=path.parent)
    except CurveflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    run_dir = Path(args.out or cfg.out_dir or path.stem + "_out")
    try:
        result = execute(cfg, run_dir, dump_fields=args.dump_fields)
    except CurveflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    drift = _drift_of(result, cfg.plan.params.depletion)
    print(
        f"run {path.stem}: status={result.status} t={result.summary['final_time_days']:g} "
        f"days, max |N_ratio - expected| = {drift:.4f}, wrote {run_dir}"
    )
    if args.strict and result.status not in ("completed", "closed"):
        return 1
    return 0


def _run_variant(task):
    scenario_id, label, text, out_root, dump = task
    cfg = parse_config(text)
    run_dir = Path(out_root) / f"{scenario_id}_{label}"
    result = execute(cfg, run_dir, dump_fields=dump)
    drift = _drift_of(result, cfg.plan.params.depletion)
    return label, result.status, drift, str(run_dir)


def cmd_reproduce(args) -> int:
    if args.scenario not in SCENARIOS:
        print(
            f"error: unknown scenario {args.scenario!r}; try list-scenarios",
            file=sys.stderr,
        )
        return 2
    scenario = SCENARIOS[args.scenario]
    base = load_scenario_text(scenario.cfg_file)
    out_root = Path(args.out or f"reproduce_{args.scenario}")
    tasks = []
    for label, overrides in scenario.variants:
        overrides = dict(overrides)
        if args.method is not None:
            overrides["method"] = str(args.method)
        tasks.append(
            (args.scenario, label, apply_overrides(base, overrides), out_root,
             args.dump_fields)
        )
    if args.parallel and len(tasks) > 1:
        import multiprocessing as mp

        with mp.Pool(min(len(tasks), mp.cpu_count())) as pool:
            outcomes = pool.map(_run_variant, tasks)
    else:
        outcomes = [_run_variant(t) for t in tasks]
    worst = 0.0
    for label, status, drift, run_dir in outcomes:
        worst = max(worst, drift)
        print(
            f"{args.scenario}/{label}: status={status} "
            f"max |N_ratio - expected| = {drift:.4f} -> {run_dir}"
        )
    print(f"{args.scenario}: worst conservation drift {worst:.4f} "
          f"(expectation <= {scenario.drift_bound:g})")
    if args.strict and worst > scenario.drift_bound:
        return 1
    return 0


def cmd_validate(args) -> int:
    path = Path(args.config)
    if not path.exists():
        print(f"error: config file not found: {path}", file=sys.stderr)
        return 1
    try:
        cfg = parse_config(path.read_text(), base_dir=path.parent)
    except CurveflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for w in cfg.warnings:
        print(f"warning: {w}")
    for key, val in cfg.resolved.items():
        print(f"{key} = {val}")
    return 0


def cmd_list(_args) -> int:
    for name, sc in SCENARIOS.items():
        variants = ", ".join(label for label, _ in sc.variants)
        print(f"{name:7s} {sc.description} [{variants}]")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="curveflow",
        description="level-set engine for curvature-controlled tissue growth",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one configuration file")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--strict", action="store_true")
    p_run.add_argument("--dump-fields", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("reproduce", help="run a bundled scenario")
    p_rep.add_argument("scenario")
    p_rep.add_argument("--method", type=int, choices=(1, 2, 3), default=None)
    p_rep.add_argument("--out", default=None)
    p_rep.add_argument("--strict", action="store_true")
    p_rep.add_argument("--parallel", action="store_true")
    p_rep.add_argument("--dump-fields", action="store_true")
    p_rep.set_defaults(func=cmd_reproduce)

    p_val = sub.add_parser("validate", help="parse a config and echo the result")
    p_val.add_argument("config")
    p_val.set_defaults(func=cmd_validate)

    p_list = sub.add_parser("list-scenarios", help="show bundled scenarios")
    p_list.set_defaults(func=cmd_list)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
