"""Command line interface: generation, metrics, instance building, solving
and the full experiment pipeline.

Exit codes: 0 success, 1 usage or configuration error, 2 network
validation failure, 3 solver failure (time limit or iteration cap).

The default generator config path can be set with the TRAFFNET_CONFIG
environment variable; explicit --config wins. All outputs are
byte-identical across runs for fixed seeds and configs (solver wall times
are kept out of the files for that reason).
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import io as tio
from .attacker import (IterationCapError, evaluate_plan, interdiction_counts,
                       make_interdiction_plan, solve_mfnip, solve_mfnip_r)
from .defender import SolverTimeout, solve_defender
from .generator import ConfigError, GeneratorConfig, generate_network
from .instance import CostSchedule, InstanceError, build_instance, default_schedule
from .metrics import centrality_report
from .model import validate_network, victim_social_subgraph
from .oracle import OracleSizeError, oracle_mfnip, oracle_mfnip_r

ENV_CONFIG = "TRAFFNET_CONFIG"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_SOLVER = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class ExperimentSpec:
    """Declarative description of a full sweep run."""

    num_networks: int = 5
    num_operations: int = 5
    generator_config: str = ""
    schedule_config: str = ""
    budgets: list[int] = field(default_factory=lambda: [8, 12, 16, 20, 24, 28, 32, 36, 40])
    seeds: list[int] = field(default_factory=list)
    out_dir: str = "results"
    time_limit: float = 7200.0
    workers: int = 1

    def validate(self):
        if self.num_networks < 1:
            raise CliError("num_networks must be >= 1")
        if not self.budgets or any(b < 0 for b in self.budgets):
            raise CliError("budgets must be non-empty and non-negative")
        if not self.seeds:
            self.seeds = list(range(1, self.num_networks + 1))
        if len(self.seeds) != self.num_networks:
            raise CliError("seeds must match num_networks")
        if len(set(self.seeds)) != len(self.seeds):
            raise CliError("seeds must be distinct")
        if self.workers < 1:
            raise CliError("workers must be >= 1")


_SPEC_FIELDS = {
    "num_networks": "int", "num_operations": "int",
    "generator_config": "str", "schedule_config": "str",
    "budgets": "int_list", "seeds": "int_list",
    "out_dir": "str", "time_limit": "float", "workers": "int",
}


def _load_spec(path: str) -> ExperimentSpec:
    raw = tio.parse_kv_text(Path(path).read_text(), "experiment spec")
    values = tio._parse_typed(raw, _SPEC_FIELDS, "experiment spec")
    spec = ExperimentSpec(**values)
    spec.validate()
    return spec


def _load_config(path: str | None) -> GeneratorConfig:
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    if path is None:
        cfg = GeneratorConfig()
        cfg.validate()
        return cfg
    return tio.load_generator_config_text(Path(path).read_text())


def _load_schedule(path: str | None) -> CostSchedule:
    if path is None:
        return default_schedule()
    return tio.load_schedule_text(Path(path).read_text())


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _metrics_csv(net, include_bottom: bool) -> str:
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["operation", "n", "arc_density",
                     "degree_centralization", "betweenness_centralization"])
    for op in net.operations:
        g = victim_social_subgraph(net, op, include_bottom=include_bottom)
        if g.n < 2:
            writer.writerow([op.index, g.n, "na", "na", "na"])
            continue
        rep = centrality_report(g)
        writer.writerow([
            op.index, rep.n, f"{rep.arc_density:.6f}",
            "na" if rep.degree_centralization is None
            else f"{rep.degree_centralization:.6f}",
            "na" if rep.betweenness_centralization is None
            else f"{rep.betweenness_centralization:.6f}",
        ])
    return buf.getvalue()


# --------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    cfg = _load_config(args.config)
    net = generate_network(args.count, cfg, seed=args.seed)
    out = Path(args.out)
    violations = validate_network(net)
    _write(out / "network.json", tio.dumps_canonical(tio.network_to_dict(net)))
    report = "ok\n" if not violations else "".join(v + "\n" for v in violations)
    _write(out / "validation.txt", report)
    _write(out / "metrics.csv", _metrics_csv(net, args.include_bottom))
    if violations:
        print(f"validation failed with {len(violations)} violations "
              f"(see {out / 'validation.txt'})", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"wrote {out / 'network.json'} "
          f"({len(net.persons)} nodes, {len(net.operations)} operations)")
    return EXIT_OK


def cmd_metrics(args) -> int:
    net = tio.network_from_dict(json.loads(Path(args.network).read_text()))
    text = _metrics_csv(net, args.include_bottom)
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_build_instance(args) -> int:
    net = tio.network_from_dict(json.loads(Path(args.network).read_text()))
    sched = _load_schedule(args.schedule)
    violations = validate_network(net)
    if violations:
        print("network fails validation:\n" + "\n".join(violations), file=sys.stderr)
        return EXIT_VALIDATION
    inst = build_instance(net, sched, random.Random(args.seed))
    _write(Path(args.out), tio.dumps_canonical(tio.instance_to_dict(inst)))
    print(f"wrote {args.out} ({len(inst.nodes)} nodes, "
          f"{len(inst.restruct_arcs)} restructure-able arcs, "
          f"base flow {inst.base_flow()})")
    return EXIT_OK


def _parse_ids(text: str) -> list[int]:
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise CliError(f"bad id list {text!r}") from exc


def cmd_solve(args) -> int:
    inst = tio.instance_from_dict(json.loads(Path(args.instance).read_text()))
    if args.mode == "defender":
        ids = _parse_ids(args.interdict or "")
        response = solve_defender(inst, ids, args.time_limit)
        doc = tio.defender_report_to_dict(inst, ids, response)
    else:
        if args.budget is None:
            raise CliError("--budget is required for mfnip/mfnip-r")
        solver = solve_mfnip if args.mode == "mfnip" else solve_mfnip_r
        report = solver(inst, args.budget, args.time_limit)
        doc = tio.report_to_dict(inst, report)
    text = tio.dumps_canonical(doc)
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = tio.instance_from_dict(json.loads(Path(args.instance).read_text()))
    fn = oracle_mfnip if args.mode == "mfnip" else oracle_mfnip_r
    result = fn(inst, args.budget)
    doc = {
        "schema_version": tio.SCHEMA_VERSION,
        "kind": "oracle_result",
        "mode": args.mode,
        "budget": args.budget,
        "optimum": result.optimum,
        "enumerated": result.enumerated,
        "optimal_interdictions": [
            {"interdicted": list(y), "optimal_plans": [p.items() for p in plans]}
            for (y, plans) in result.optimal_plans
        ],
    }
    text = tio.dumps_canonical(doc)
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------
# experiment pipeline


def _solve_cell(payload: tuple) -> dict:
    instance_dict, budget, time_limit = payload
    inst = tio.instance_from_dict(instance_dict)
    try:
        mfnip = solve_mfnip(inst, budget, time_limit)
        restructured = evaluate_plan(inst, mfnip.plan.interdicted, time_limit)
        mfnip_r = solve_mfnip_r(inst, budget, time_limit)
    except (SolverTimeout, IterationCapError) as exc:
        return {"budget": budget, "status": f"error: {exc}"}
    mc = interdiction_counts(inst, mfnip.plan.interdicted)
    rc = interdiction_counts(inst, mfnip_r.plan.interdicted)
    return {
        "budget": budget,
        "status": "ok",
        "total_flow": inst.base_flow(),
        "mfnip_value": mfnip.objective,
        "restructured_value": restructured.value,
        "mfnip_r_value": mfnip_r.objective,
        "mfnip_counts": mc,
        "mfnip_r_counts": rc,
    }


RESULT_COLUMNS = [
    "network", "seed", "budget", "total_flow", "mfnip_value",
    "restructured_value", "mfnip_r_value",
    "mfnip_int_traffickers", "mfnip_int_bottoms", "mfnip_int_victims",
    "mfnip_r_int_traffickers", "mfnip_r_int_bottoms", "mfnip_r_int_victims",
    "status",
]


def cmd_experiment(args) -> int:
    spec = _load_spec(args.spec)
    cfg = _load_config(spec.generator_config or None)
    sched = _load_schedule(spec.schedule_config or None)
    out = Path(spec.out_dir)

    instances = []
    for i, seed in enumerate(spec.seeds):
        net = generate_network(spec.num_operations, cfg, seed=seed)
        violations = validate_network(net)
        if violations:
            print(f"network {i} (seed {seed}) fails validation", file=sys.stderr)
            return EXIT_VALIDATION
        # Builder draws (eligibility, promotables) use the network seed too.
        inst = build_instance(net, sched, random.Random(seed))
        _write(out / f"network_{i}.json",
               tio.dumps_canonical(tio.network_to_dict(net)))
        _write(out / f"instance_{i}.json",
               tio.dumps_canonical(tio.instance_to_dict(inst)))
        instances.append(tio.instance_to_dict(inst))

    cells = [(i, budget) for i in range(len(instances)) for budget in spec.budgets]
    payloads = [(instances[i], budget, spec.time_limit) for (i, budget) in cells]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(_solve_cell, payloads))
    else:
        outcomes = [_solve_cell(p) for p in payloads]

    rows = []
    for (i, budget), res in zip(cells, outcomes):
        row = {"network": i, "seed": spec.seeds[i], "budget": budget,
               "status": res["status"]}
        if res["status"] == "ok":
            row.update({
                "total_flow": res["total_flow"],
                "mfnip_value": res["mfnip_value"],
                "restructured_value": res["restructured_value"],
                "mfnip_r_value": res["mfnip_r_value"],
                "mfnip_int_traffickers": res["mfnip_counts"][0],
                "mfnip_int_bottoms": res["mfnip_counts"][1],
                "mfnip_int_victims": res["mfnip_counts"][2],
                "mfnip_r_int_traffickers": res["mfnip_r_counts"][0],
                "mfnip_r_int_bottoms": res["mfnip_r_counts"][1],
                "mfnip_r_int_victims": res["mfnip_r_counts"][2],
            })
        rows.append(row)

    buf = _stdio.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RESULT_COLUMNS, lineterminator="\n",
                            restval="")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    _write(out / "results.csv", buf.getvalue())

    for i in range(len(instances)):
        buf = _stdio.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["budget", "total_flow", "mfnip_value",
                         "restructured_value", "mfnip_r_value"])
        for row in rows:
            if row["network"] == i and row["status"] == "ok":
                writer.writerow([row["budget"], row["total_flow"],
                                 row["mfnip_value"], row["restructured_value"],
                                 row["mfnip_r_value"]])
        _write(out / f"plot_network_{i}.csv", buf.getvalue())

    ok_rows = [r for r in rows if r["status"] == "ok"]
    mfnip_bottoms = sum(r["mfnip_int_bottoms"] for r in ok_rows)
    mfnip_r_bottoms = sum(r["mfnip_r_int_bottoms"] for r in ok_rows)
    summary = {
        "schema_version": tio.SCHEMA_VERSION,
        "kind": "experiment_summary",
        "cells_total": len(rows),
        "cells_ok": len(ok_rows),
        "mfnip_bottoms_interdicted_total": mfnip_bottoms,
        "mfnip_r_bottoms_interdicted_total": mfnip_r_bottoms,
        "bottom_tendency_holds": mfnip_bottoms >= mfnip_r_bottoms,
    }
    _write(out / "summary.json", tio.dumps_canonical(summary))
    print(f"wrote {out / 'results.csv'} ({len(ok_rows)}/{len(rows)} cells ok)")
    return EXIT_OK if len(ok_rows) == len(rows) else EXIT_SOLVER


# --------------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="traffnet",
                     description="Synthetic operation networks and exact "
                                 "interdiction solvers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a network")
    p.add_argument("--config", default=None, help="generator config file")
    p.add_argument("--count", type=int, required=True, help="number of operations")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--include-bottom", action="store_true",
                   help="include the bottom in per-operation metrics")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("metrics", help="per-operation centrality CSV")
    p.add_argument("network")
    p.add_argument("--include-bottom", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("build-instance", help="network -> interdiction instance")
    p.add_argument("network")
    p.add_argument("--schedule", default=None, help="cost schedule file")
    p.add_argument("--seed", type=int, default=0, help="builder random seed")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_build_instance)

    p = sub.add_parser("solve", help="run a solver on an instance")
    p.add_argument("mode", choices=["mfnip", "mfnip-r", "defender"])
    p.add_argument("instance")
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--interdict", default=None,
                   help="comma-separated node ids (defender mode)")
    p.add_argument("--time-limit", type=float, default=7200.0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("oracle", help="exhaustive enumeration on micro instances")
    p.add_argument("instance")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--mode", choices=["mfnip", "mfnip-r"], default="mfnip-r")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("experiment", help="full sweep from a spec file")
    p.add_argument("spec")
    p.set_defaults(fn=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (CliError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, tio.SchemaError, InstanceError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OracleSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverTimeout, IterationCapError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
