"""Experiment drivers: ensembles, ansatz sweeps and result files.

All randomness is derived from the master seed through :func:`derive_seed`,
keyed by what is being computed (family, graph id, ansatz label), so a given
(graph, ansatz) pair gets the same optimization whichever experiment asks for
it and whatever the worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import product
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .ansatz import (
    STANDARD,
    AnsatzSpec,
    build_ma_qaoa,
    build_qaoa_plus,
    build_standard_qaoa,
    embed_params,
    enumerate_split_pairs,
    threshold_split,
    two_qubit_gate_count,
)
from .errors import InputError, QaoaPlusError
from .graphs import Graph, collect_nonisomorphic, max_cut_bruteforce
from .optimizer import FD_STEP, GRAD_TOL, MAX_ITER, OptResult, multistart_optimize

log = logging.getLogger(__name__)

KINDS = ("table1", "sweep", "grid", "threshold", "single")
CSV_COLUMNS = ["n", "d", "ansatz", "param_count", "two_qubit_gates", "n_graphs", "mean_ar", "ar_list", "seed"]
ORDER_SLACK = 1e-9


def derive_seed(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


@dataclass
class ExperimentConfig:
    kind: str = "single"
    nodes: list[int] = field(default_factory=lambda: [8])
    degrees: list[int] = field(default_factory=lambda: [3])
    graphs_per_family: int = 10
    restarts: int = 10
    seed: int = 0
    out: str = "results"
    warm_start: bool = True
    workers: int = 1
    format: str = "csv"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InputError(f"unknown experiment kind {self.kind!r}")
        if self.format not in ("csv", "json"):
            raise InputError(f"unknown format {self.format!r}")
        if not self.nodes or not self.degrees:
            raise InputError("at least one node count and one degree are required")
        for name in ("graphs_per_family", "restarts", "workers"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be positive")
        for n, d in self.families():
            if n < 1 or d < 1:
                raise InputError(f"node count and degree must be positive, got n={n}, d={d}")
            if (n * d) % 2:
                raise InputError(f"n*d must be even for every family, got n={n}, d={d}")
            if d >= n:
                raise InputError(f"degree must be below node count, got n={n}, d={d}")

    def families(self) -> list[tuple[int, int]]:
        return list(product(self.nodes, self.degrees))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)


@dataclass
class ExperimentRecord:
    n: int
    d: int
    ansatz: str
    param_count: int
    two_qubit_gates: int
    ar_list: list[float]
    mean_ar: float
    n_graphs: int
    seed: int
    graph_ids: list[str] = field(default_factory=list)

    @classmethod
    def from_ars(cls, n, d, ansatz, param_count, gates, ars, seed, graph_ids) -> "ExperimentRecord":
        ars = [float(a) for a in ars]
        mean = float(np.mean(ars)) if ars else math.nan
        return cls(n, d, ansatz, param_count, gates, ars, mean, len(ars), seed, list(graph_ids))

    def csv_row(self) -> list[str]:
        return [
            str(self.n),
            str(self.d),
            self.ansatz,
            str(self.param_count),
            str(self.two_qubit_gates),
            str(self.n_graphs),
            repr(self.mean_ar),
            ";".join(repr(a) for a in self.ar_list),
            str(self.seed),
        ]


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


def _solve_item(args) -> OptResult:
    spec, g, restarts, seed, initial, warm_start, cmax = args
    return multistart_optimize(
        spec, g, restarts=restarts, seed=seed, initial=initial, warm_start=warm_start, cmax=cmax
    )


class Runner:
    """Owns graph ensembles and a cache of optimization results for one run."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.ensembles: dict[tuple[int, int], list[Graph]] = {}
        self.cmax: dict[str, int] = {}
        self.results: dict[tuple[str, str], OptResult] = {}
        self.checks: list[Check] = []
        self.failures: list[str] = []

    def ensemble(self, n: int, d: int) -> list[Graph]:
        if (n, d) not in self.ensembles:
            graphs = collect_nonisomorphic(
                n, d, self.cfg.graphs_per_family, derive_seed(self.cfg.seed, "graphs", n, d)
            )
            log.info("family n=%d d=%d: %d non-isomorphic graphs", n, d, len(graphs))
            self.ensembles[(n, d)] = graphs
        return self.ensembles[(n, d)]

    def set_ensemble(self, n: int, d: int, graphs: Sequence[Graph]) -> None:
        self.ensembles[(n, d)] = list(graphs)

    def _cmax(self, g: Graph) -> int:
        if g.id not in self.cmax:
            self.cmax[g.id] = max_cut_bruteforce(g).cmax
        return self.cmax[g.id]

    def _job(self, spec: AnsatzSpec, g: Graph):
        initial = None
        if self.cfg.warm_start and not (spec.kind == STANDARD and spec.p == 1):
            base = build_standard_qaoa(g, 1)
            initial = embed_params(base, self.results[(g.id, base.label)].best_params, spec)
        seed = derive_seed(self.cfg.seed, g.id, spec.label)
        return (spec, g, self.cfg.restarts, seed, initial, self.cfg.warm_start, self._cmax(g))

    def _run_batch(self, items: list[tuple[AnsatzSpec, Graph]]) -> None:
        jobs = [self._job(spec, g) for spec, g in items]
        if self.cfg.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(self.cfg.workers) as pool:
                outs = list(pool.map(_solve_item, jobs, chunksize=max(1, len(jobs) // (4 * self.cfg.workers))))
        else:
            outs = [_solve_item(job) for job in jobs]
        for (spec, g), res in zip(items, outs):
            self.results[(g.id, spec.label)] = res

    def solve(self, items: Iterable[tuple[AnsatzSpec, Graph]]) -> list[OptResult]:
        """Optimize every (spec, graph) pair, reusing cached results.

        Standard p=1 runs go first since they seed the warm starts of the rest.
        """
        items = list(items)
        todo = []
        seen = set()
        for spec, g in items:
            key = (g.id, spec.label)
            if key not in self.results and key not in seen:
                seen.add(key)
                todo.append((spec, g))
        if self.cfg.warm_start:
            base = {}
            for _, g in todo:
                spec = build_standard_qaoa(g, 1)
                if (g.id, spec.label) not in self.results:
                    base[g.id] = (spec, g)
            self._run_batch(list(base.values()))
            todo = [(s, g) for s, g in todo if (g.id, s.label) not in self.results]
        self._run_batch(todo)
        return [self.results[(g.id, spec.label)] for spec, g in items]

    def mean_record(self, n, d, label, param_count, gates, specs_per_graph, graphs) -> ExperimentRecord:
        """Record whose per-graph AR averages over that graph's list of specs."""
        flat = [(s, g) for specs, g in zip(specs_per_graph, graphs) for s in specs]
        self.solve(flat)
        ars = [
            float(np.mean([self.results[(g.id, s.label)].approximation_ratio for s in specs]))
            for specs, g in zip(specs_per_graph, graphs)
        ]
        return ExperimentRecord.from_ars(n, d, label, param_count, gates, ars, self.cfg.seed, [g.id for g in graphs])

    def spec_record(self, n, d, build, graphs) -> ExperimentRecord:
        specs = [build(g) for g in graphs]
        first = specs[0]
        return self.mean_record(
            n, d, first.label, first.param_count, two_qubit_gate_count(first), [[s] for s in specs], graphs
        )

    def check(self, name: str, passed: bool, detail: str) -> None:
        self.checks.append(Check(name, bool(passed), detail))
        if passed:
            log.info("PASS %s: %s", name, detail)
        else:
            log.warning("WARN %s: %s", name, detail)


def _qaoa_plus_full(g: Graph) -> AnsatzSpec:
    return build_qaoa_plus(g, g.n - 1, g.n)


def run_table1(cfg: ExperimentConfig, runner: Runner | None = None) -> list[ExperimentRecord]:
    runner = runner or Runner(cfg)
    records = []
    for n, d in cfg.families():
        try:
            graphs = runner.ensemble(n, d)
            fam = [
                runner.spec_record(n, d, lambda g: build_standard_qaoa(g, 1), graphs),
                runner.spec_record(n, d, _qaoa_plus_full, graphs),
                runner.spec_record(n, d, lambda g: build_standard_qaoa(g, 2), graphs),
            ]
        except QaoaPlusError as exc:
            runner.failures.append(f"table1 n={n} d={d}: {exc}")
            log.error("table1 n=%d d=%d failed: %s", n, d, exc)
            continue
        p1, plus, p2 = (r.mean_ar for r in fam)
        runner.check(
            f"table1 n={n} d={d} ordering",
            p1 <= plus + ORDER_SLACK and plus <= p2 + ORDER_SLACK,
            f"p=1 {p1:.4f} <= QAOA+ {plus:.4f} <= p=2 {p2:.4f}",
        )
        records += fam
    return records


def _family(cfg: ExperimentConfig) -> tuple[int, int]:
    return cfg.nodes[0], cfg.degrees[0]


def _ma_total_record(runner: Runner, n, d, graphs, total) -> ExperimentRecord:
    m = graphs[0].num_edges
    splits = enumerate_split_pairs(total, m, n)
    return runner.mean_record(
        n, d, f"ma-qaoa[t={total}]", total, m,
        [[build_ma_qaoa(g, a, b) for a, b in splits] for g in graphs], graphs,
    )


def _plus_total_record(runner: Runner, n, d, graphs, total) -> ExperimentRecord:
    m = graphs[0].num_edges
    splits = enumerate_split_pairs(total - 2, n - 1, n) if total >= 4 else []
    return runner.mean_record(
        n, d, f"qaoa-plus[t={total}]", total, m + n - 1,
        [[build_qaoa_plus(g, a, b) for a, b in splits] for g in graphs], graphs,
    )


def run_sweep(cfg: ExperimentConfig, runner: Runner | None = None) -> list[ExperimentRecord]:
    """Mean AR against total parameter count, averaged over all layer splits."""
    runner = runner or Runner(cfg)
    n, d = _family(cfg)
    graphs = runner.ensemble(n, d)
    m = graphs[0].num_edges
    records = [
        runner.spec_record(n, d, lambda g: build_standard_qaoa(g, 1), graphs),
        runner.spec_record(n, d, lambda g: build_standard_qaoa(g, 2), graphs),
    ]
    ma = {t: _ma_total_record(runner, n, d, graphs, t) for t in range(2, m + n + 1)}
    plus = {t: _plus_total_record(runner, n, d, graphs, t) for t in range(4, 2 * n + 2)}
    records += list(ma.values()) + list(plus.values())

    for t in sorted(set(ma) & set(plus)):
        runner.check(
            f"sweep n={n} d={d} t={t} QAOA+ >= ma-QAOA",
            plus[t].mean_ar >= ma[t].mean_ar,
            f"QAOA+ {plus[t].mean_ar:.4f} vs ma-QAOA {ma[t].mean_ar:.4f}",
        )
    full_ma, full_plus = ma[m + n], plus[2 * n + 1]
    runner.check(
        f"sweep n={n} d={d} full ma-QAOA > full QAOA+",
        full_ma.mean_ar > full_plus.mean_ar,
        f"ma-QAOA({m + n}) {full_ma.mean_ar:.4f} vs QAOA+({2 * n + 1}) {full_plus.mean_ar:.4f}",
    )
    return records


@dataclass
class GridResult:
    ma_qaoa: np.ndarray
    qaoa_plus: np.ndarray
    records: list[ExperimentRecord]


def run_grid(cfg: ExperimentConfig, runner: Runner | None = None) -> GridResult:
    """Mean AR for every per-layer parameter split.

    ``ma_qaoa[i, j]`` holds ``i + 1`` cost-layer and ``j + 1`` mixer parameters;
    ``qaoa_plus[i, j]`` holds ``i + 1`` ZZ-line and ``j + 1`` second-mixer
    parameters on top of the shared p=1 pair.
    """
    runner = runner or Runner(cfg)
    n, d = _family(cfg)
    graphs = runner.ensemble(n, d)
    m = graphs[0].num_edges
    ma = np.zeros((m, n))
    plus = np.zeros((n - 1, n))
    records = []
    for a, b in product(range(1, m + 1), range(1, n + 1)):
        rec = runner.spec_record(n, d, lambda g: build_ma_qaoa(g, a, b), graphs)
        ma[a - 1, b - 1] = rec.mean_ar
        records.append(rec)
    for a, b in product(range(1, n), range(1, n + 1)):
        rec = runner.spec_record(n, d, lambda g: build_qaoa_plus(g, a, b), graphs)
        plus[a - 1, b - 1] = rec.mean_ar
        records.append(rec)
    return GridResult(ma, plus, records)


@dataclass
class ThresholdResult:
    n: int
    d: int
    threshold: int | None
    qaoa_plus4_ar: float
    ma_ars: dict[int, float]


def run_threshold(
    cfg: ExperimentConfig, runner: Runner | None = None
) -> tuple[list[ThresholdResult], list[ExperimentRecord]]:
    """Smallest ma-QAOA parameter count whose mean AR beats QAOA+(4)."""
    runner = runner or Runner(cfg)
    results, records = [], []
    for n, d in cfg.families():
        try:
            graphs = runner.ensemble(n, d)
            m = graphs[0].num_edges
            plus4 = runner.spec_record(n, d, lambda g: build_qaoa_plus(g, 1, 1), graphs)
            records.append(plus4)
            ma_ars, threshold = {}, None
            for t in range(2, m + n + 1):
                a, b = threshold_split(t, m, n)
                rec = runner.spec_record(n, d, lambda g: build_ma_qaoa(g, a, b), graphs)
                records.append(rec)
                ma_ars[t] = rec.mean_ar
                if rec.mean_ar > plus4.mean_ar:
                    threshold = t
                    break
        except QaoaPlusError as exc:
            runner.failures.append(f"threshold n={n} d={d}: {exc}")
            log.error("threshold n=%d d=%d failed: %s", n, d, exc)
            continue
        log.info("threshold n=%d d=%d: %s", n, d, threshold)
        results.append(ThresholdResult(n, d, threshold, plus4.mean_ar, ma_ars))

    by_family = {(r.n, r.d): r for r in results}
    for (n, d), r in sorted(by_family.items()):
        for (n2, d2), r2 in sorted(by_family.items()):
            if d2 == d and n2 > n:
                lo = r.threshold if r.threshold is not None else math.inf
                hi = r2.threshold if r2.threshold is not None else math.inf
                runner.check(
                    f"threshold d={d} rises from n={n} to n={n2}",
                    hi >= lo,
                    f"{r.threshold} -> {r2.threshold}",
                )
    return results, records


def records_to_csv(records: Sequence[ExperimentRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(rec.csv_row())
    return buf.getvalue()


def records_from_json(text: str) -> list[ExperimentRecord]:
    return [ExperimentRecord(**r) for r in json.loads(text)["records"]]


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_results(
    records: Sequence[ExperimentRecord],
    fmt: str,
    path: str | Path,
    name: str = "results",
    config: ExperimentConfig | None = None,
    runner: Runner | None = None,
) -> list[Path]:
    """Write ``<name>.csv`` or ``<name>.json`` plus ``manifest.json`` into ``path``."""
    if fmt not in ("csv", "json"):
        raise InputError(f"unknown format {fmt!r}")
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    target = out / f"{name}.{fmt}"
    if fmt == "csv":
        _write(target, records_to_csv(records))
    else:
        payload = {
            "config": config.to_dict() if config else None,
            "records": [asdict(r) for r in records],
        }
        _write(target, json.dumps(payload, indent=1) + "\n")
    manifest = {
        "software": "qaoaplus",
        "version": __version__,
        "master_seed": config.seed if config else None,
        "config": config.to_dict() if config else None,
        "tolerances": {
            "grad_tol": GRAD_TOL,
            "max_iter": MAX_ITER,
            "fd_step": FD_STEP,
            "order_slack": ORDER_SLACK,
            "init_range": [0.0, 2 * math.pi],
        },
        "checks": [asdict(c) for c in runner.checks] if runner else [],
        "failures": list(runner.failures) if runner else [],
    }
    manifest_path = out / "manifest.json"
    _write(manifest_path, json.dumps(manifest, indent=1) + "\n")
    return [target, manifest_path]


def grid_to_csv(matrix: np.ndarray, row_name: str, col_name: str) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"{row_name}\\{col_name}"] + [str(j + 1) for j in range(matrix.shape[1])])
    for i, row in enumerate(matrix):
        writer.writerow([str(i + 1)] + [repr(float(v)) for v in row])
    return buf.getvalue()


def thresholds_to_csv(results: Sequence[ThresholdResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "d", "threshold", "qaoa_plus4_mean_ar"])
    for r in results:
        writer.writerow([r.n, r.d, "" if r.threshold is None else r.threshold, repr(r.qaoa_plus4_ar)])
    return buf.getvalue()
