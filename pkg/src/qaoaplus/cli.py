"""Command line entry point (``qaoaplus``).

Exit codes: 0 success, 1 input error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .ansatz import build_ma_qaoa, build_qaoa_plus, build_standard_qaoa, two_qubit_gate_count
from .errors import InputError, QaoaPlusError
from .experiments import (
    ExperimentConfig,
    ExperimentRecord,
    Runner,
    emit_results,
    grid_to_csv,
    run_grid,
    run_sweep,
    run_table1,
    run_threshold,
    thresholds_to_csv,
)
from .graphs import collect_nonisomorphic, load_graphs, save_graphs

log = logging.getLogger("qaoaplus")

EXPERIMENT_DEFAULTS = {
    "table1": {"nodes": [8, 10, 12, 14], "degrees": [3, 4, 5]},
    "sweep": {"nodes": [8], "degrees": [3]},
    "grid": {"nodes": [8], "degrees": [3]},
    "threshold": {"nodes": [8, 10], "degrees": [3, 4, 5]},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser, experiment: bool = True) -> None:
    p.add_argument("--config", type=Path, help="JSON file whose keys override the flags")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--no-warm-start", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    if experiment:
        p.add_argument("--nodes", type=_int_list, help="comma-separated node counts")
        p.add_argument("--degrees", type=_int_list, help="comma-separated degrees")
        p.add_argument("--graphs-per-family", type=int, default=10)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qaoaplus", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-graphs", help="sample non-isomorphic connected d-regular graphs")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="graph JSON file")

    p = sub.add_parser("optimize", help="optimize one ansatz on every graph of a file")
    p.add_argument("--graphs", type=Path, required=True)
    p.add_argument("--ansatz", choices=["standard", "qaoa-plus", "ma-qaoa"], required=True)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--n-gamma", type=int, help="cost-layer (ma-QAOA) or ZZ-line (QAOA+) parameters")
    p.add_argument("--n-beta", type=int, help="mixer (ma-QAOA) or second-mixer (QAOA+) parameters")
    _add_common(p, experiment=False)

    for name in ("table1", "sweep", "grid", "threshold"):
        _add_common(sub.add_parser(name, help=f"run the {name} experiment"))
    return parser


def _config(args, kind: str) -> ExperimentConfig:
    fields = {
        "kind": kind,
        "out": args.out,
        "format": args.format,
        "seed": args.seed,
        "restarts": args.restarts,
        "warm_start": not args.no_warm_start,
        "workers": args.workers,
    }
    if kind in EXPERIMENT_DEFAULTS:
        fields.update(EXPERIMENT_DEFAULTS[kind])
        if args.nodes:
            fields["nodes"] = args.nodes
        if args.degrees:
            fields["degrees"] = args.degrees
        fields["graphs_per_family"] = args.graphs_per_family
    if args.config:
        try:
            overrides = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(overrides, dict):
            raise InputError("config file must hold a JSON object")
        fields.update(overrides)
        fields["kind"] = kind
    return ExperimentConfig.from_dict(fields)


def _cmd_gen_graphs(args) -> None:
    graphs = collect_nonisomorphic(args.n, args.d, args.count, args.seed)
    save_graphs(graphs, args.out)
    log.info("wrote %d graphs to %s", len(graphs), args.out)


def _cmd_optimize(args) -> None:
    cfg = _config(args, "single")
    graphs = load_graphs(args.graphs)
    if not graphs:
        raise InputError(f"{args.graphs} holds no graphs")

    def build(g):
        if args.ansatz == "standard":
            return build_standard_qaoa(g, args.p)
        if args.ansatz == "qaoa-plus":
            return build_qaoa_plus(g, args.n_gamma or g.n - 1, args.n_beta or g.n)
        return build_ma_qaoa(g, args.n_gamma or g.num_edges, args.n_beta or g.n)

    specs = [build(g) for g in graphs]
    runner = Runner(cfg)
    results = runner.solve(zip(specs, graphs))
    labels = sorted({s.label for s in specs})
    degrees = sorted({deg for g in graphs for deg in g.degrees})
    record = ExperimentRecord.from_ars(
        graphs[0].n if len({g.n for g in graphs}) == 1 else 0,
        degrees[0] if len(degrees) == 1 else 0,
        labels[0] if len(labels) == 1 else "mixed",
        specs[0].param_count,
        two_qubit_gate_count(specs[0]),
        [r.approximation_ratio for r in results],
        cfg.seed,
        [g.id for g in graphs],
    )
    emit_results([record], cfg.format, cfg.out, config=cfg, runner=runner)
    detail = [
        {"graph": g.to_dict(), "ansatz_spec": s.to_dict(), "result": r.to_dict()}
        for g, s, r in zip(graphs, specs, results)
    ]
    (Path(cfg.out) / "opt_results.json").write_text(json.dumps(detail, indent=1) + "\n")
    print(f"mean AR {record.mean_ar:.6f} over {record.n_graphs} graphs")


def _save_ensembles(runner: Runner, out: Path) -> None:
    for (n, d), graphs in sorted(runner.ensembles.items()):
        save_graphs(graphs, out / f"graphs_n{n}_d{d}.json")


def _cmd_experiment(args) -> None:
    cfg = _config(args, args.command)
    runner = Runner(cfg)
    out = Path(cfg.out)
    if args.command == "table1":
        records = run_table1(cfg, runner)
    elif args.command == "sweep":
        records = run_sweep(cfg, runner)
    elif args.command == "grid":
        grid = run_grid(cfg, runner)
        records = grid.records
        out.mkdir(parents=True, exist_ok=True)
        (out / "grid_ma_qaoa.csv").write_text(grid_to_csv(grid.ma_qaoa, "n_gamma", "n_beta"))
        (out / "grid_qaoa_plus.csv").write_text(grid_to_csv(grid.qaoa_plus, "n_zz", "n_mix2"))
    else:
        thresholds, records = run_threshold(cfg, runner)
        out.mkdir(parents=True, exist_ok=True)
        (out / "thresholds.csv").write_text(thresholds_to_csv(thresholds))
    emit_results(records, cfg.format, out, config=cfg, runner=runner)
    _save_ensembles(runner, out)
    for check in runner.checks:
        print(f"{'PASS' if check.passed else 'WARN'} {check.name}: {check.detail}")
    for failure in runner.failures:
        print(f"FAIL {failure}")
    if runner.failures:
        raise QaoaPlusError(f"{len(runner.failures)} families failed")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(asctime)s %(levelname)s %(message)s",
        )
        if args.command == "gen-graphs":
            _cmd_gen_graphs(args)
        elif args.command == "optimize":
            _cmd_optimize(args)
        else:
            _cmd_experiment(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (QaoaPlusError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
