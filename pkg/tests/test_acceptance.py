"""Acceptance gate: one test per criterion, each reporting PASS, WARN or FAIL.

The status lines are printed in the "acceptance criteria" section of the
pytest terminal summary.  Hard criteria also assert; pass/warn criteria only
fail the test when their hard-fail margin is crossed.

Set ``QAOAPLUS_LONG=1`` to include the optional 12- and 14-node table1
columns.
"""

import math
import os

import numpy as np
import pytest

from conftest import K2, random_graph
from oracles import dense_expectation, gates_for
from qaoaplus.ansatz import (
    CompiledAnsatz,
    build_ma_qaoa,
    build_qaoa_plus,
    build_standard_qaoa,
    evaluate,
    two_qubit_gate_count,
)
from qaoaplus.experiments import ExperimentConfig, Runner, records_to_csv, run_sweep, run_table1, run_threshold
from qaoaplus.graphs import collect_nonisomorphic
from qaoaplus.optimizer import finite_difference_gradient, multistart_optimize
from qaoaplus.simulator import apply_edge_phase, apply_rx, uniform_superposition

TABLE1 = {
    # (n, d): ((p1, qaoa+, p2), tolerances)
    (8, 3): ((0.783, 0.838, 0.870), (0.010, 0.015, 0.010)),
    (10, 3): ((0.793, 0.833, 0.868), (0.02, 0.02, 0.02)),
}
LONG_RUNS = os.environ.get("QAOAPLUS_LONG") == "1"
SWEEP_HARD_MARGIN = 0.01


def report(log, criterion, status, detail):
    line = f"{status} criterion {criterion}: {detail}"
    log.append(line)
    print(line)


@pytest.fixture(scope="session")
def config():
    return ExperimentConfig(
        kind="table1", nodes=[8, 10], degrees=[3], graphs_per_family=10, restarts=10, seed=0, warm_start=True
    )


@pytest.fixture(scope="session")
def runner(config):
    return Runner(config)


@pytest.fixture(scope="session")
def table1(config, runner):
    return {(r.n, r.d, r.ansatz.split("(")[0]): r for r in run_table1(config, runner)}


def check_table1_family(table1, log, criterion, n, d, expected, tolerances):
    names = ("standard-p1", "qaoa-plus", "standard-p2")
    got = [table1[(n, d, name)].mean_ar for name in names]
    ok = all(abs(g - e) <= t for g, e, t in zip(got, expected, tolerances))
    detail = ", ".join(f"{name} {g:.4f} (target {e} +/- {t})" for name, g, e, t in zip(names, got, expected, tolerances))
    report(log, criterion, "PASS" if ok else "FAIL", f"n={n} d={d}: {detail}")
    assert ok, detail


def test_criterion_01_table1_eight_nodes(table1, acceptance_log):
    assert table1[(8, 3, "standard-p1")].n_graphs == 5
    check_table1_family(table1, acceptance_log, 1, 8, 3, *TABLE1[(8, 3)])


def test_criterion_02_table1_ten_nodes(table1, acceptance_log):
    assert table1[(10, 3, "standard-p1")].n_graphs == 10
    check_table1_family(table1, acceptance_log, 2, 10, 3, *TABLE1[(10, 3)])


@pytest.mark.slow
@pytest.mark.skipif(not LONG_RUNS, reason="set QAOAPLUS_LONG=1 for the 12/14-node columns")
@pytest.mark.parametrize("n,expected", [(12, (0.768, 0.800, 0.840)), (14, (0.782, 0.815, 0.856))])
def test_criterion_02_table1_long_columns(runner, acceptance_log, n, expected):
    cfg = ExperimentConfig(kind="table1", nodes=[n], degrees=[3], graphs_per_family=10, restarts=10, seed=0)
    records = {(r.n, r.d, r.ansatz.split("(")[0]): r for r in run_table1(cfg, runner)}
    check_table1_family(records, acceptance_log, "2 (long)", n, 3, expected, (0.02, 0.02, 0.02))


def test_criterion_03_parameter_counts(acceptance_log):
    for g in collect_nonisomorphic(8, 3, 10, 0):
        plus = build_qaoa_plus(g, g.n - 1, g.n).param_count
        ma = build_ma_qaoa(g, g.num_edges, g.n).param_count
        ok = plus == 17 and ma == 20
        if not ok:
            break
    report(acceptance_log, 3, "PASS" if ok else "FAIL", f"QAOA+ full {plus} (17), ma-QAOA full {ma} (20)")
    assert ok


def test_criterion_04_gate_counts(acceptance_log):
    counts = set()
    for g in collect_nonisomorphic(8, 3, 10, 0):
        counts.add(
            tuple(
                two_qubit_gate_count(s)
                for s in (build_standard_qaoa(g, 1), build_qaoa_plus(g, g.n - 1, g.n), build_standard_qaoa(g, 2))
            )
        )
    ok = counts == {(12, 19, 24)}
    report(acceptance_log, 4, "PASS" if ok else "FAIL", f"(p=1, QAOA+, p=2) two-qubit gates {sorted(counts)}")
    assert ok


def test_criterion_05_equal_parameter_dominance(config, runner, acceptance_log):
    records = {r.ansatz: r.mean_ar for r in run_sweep(config, runner)}
    deficits = {t: records[f"ma-qaoa[t={t}]"] - records[f"qaoa-plus[t={t}]"] for t in range(4, 18)}
    losses = {t: v for t, v in deficits.items() if v > 0}
    plus4, ma14 = records["qaoa-plus[t=4]"], records["ma-qaoa[t=14]"]
    hard = {t: v for t, v in losses.items() if v > SWEEP_HARD_MARGIN}
    parts = [
        "QAOA+ >= ma-QAOA at every t in 4..17"
        if not losses
        else "QAOA+ behind at " + ", ".join(f"t={t} by {v:.4f}" for t, v in sorted(losses.items())),
        f"QAOA+(4) {plus4:.4f} vs ma-QAOA(14) {ma14:.4f}",
    ]
    if hard:
        status = "FAIL"
    elif losses or not plus4 > ma14:
        status = "WARN"
    else:
        status = "PASS"
    report(acceptance_log, 5, status, "; ".join(parts))
    assert not hard, f"QAOA+ loses by more than {SWEEP_HARD_MARGIN}: {hard}"


def test_criterion_06_oracle_equivalence(acceptance_log):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 5))
        g = random_graph(rng, n)
        for spec in (
            build_standard_qaoa(g, 1),
            build_standard_qaoa(g, 2),
            build_qaoa_plus(g, int(rng.integers(1, n)), int(rng.integers(1, n + 1))),
            build_ma_qaoa(g, int(rng.integers(1, g.num_edges + 1)), int(rng.integers(1, n + 1))),
        ):
            x = rng.uniform(0, 2 * math.pi, spec.param_count)
            worst = max(worst, abs(evaluate(spec, g, x) - dense_expectation(n, g.edges, gates_for(spec, x))))
    ok = worst <= 1e-10
    report(acceptance_log, 6, "PASS" if ok else "FAIL", f"max |evaluate - dense| = {worst:.2e} over 20 graphs")
    assert ok


def test_criterion_07_single_edge(acceptance_log):
    res = multistart_optimize(build_standard_qaoa(K2, 1), K2, restarts=10, seed=0)
    ok = abs(res.approximation_ratio - 1.0) <= 1e-6
    report(acceptance_log, 7, "PASS" if ok else "FAIL", f"K2 p=1 AR = {res.approximation_ratio:.12f}")
    assert ok


def test_criterion_08_embedding_guarantee(config, runner, table1, acceptance_log):
    worst = math.inf
    for n, d in config.families():
        graphs = runner.ensemble(n, d)
        specs = [(build_standard_qaoa(g, 1), build_qaoa_plus(g, n - 1, n), build_ma_qaoa(g, g.num_edges, n), g) for g in graphs]
        runner.solve([(s, g) for *ss, g in specs for s in ss])
        for p1, plus, ma, g in specs:
            base = runner.results[(g.id, p1.label)].approximation_ratio
            for s in (plus, ma):
                worst = min(worst, runner.results[(g.id, s.label)].approximation_ratio - base)
    ok = worst >= -1e-9
    report(acceptance_log, 8, "PASS" if ok else "FAIL", f"min AR gain over p=1 across (8,3),(10,3) graphs = {worst:.2e}")
    assert ok


def test_criterion_09_nonisomorphic_enumeration(acceptance_log):
    count = len(collect_nonisomorphic(8, 3, 10, 0))
    ok = count == 5
    report(acceptance_log, 9, "PASS" if ok else "FAIL", f"collect_nonisomorphic(8, 3, 10) -> {count} graphs")
    assert ok


def test_criterion_10_property_suites(acceptance_log):
    rng = np.random.default_rng(10)

    # norm after 100 random gates
    worst_norm = 0.0
    for n in (2, 5, 8):
        s = uniform_superposition(n)
        for _ in range(100):
            if rng.random() < 0.5:
                j, k = rng.choice(n, size=2, replace=False)
                s = apply_edge_phase(s, int(j), int(k), rng.uniform(-7, 7))
            else:
                s = apply_rx(s, int(rng.integers(n)), rng.uniform(-7, 7))
        worst_norm = max(worst_norm, abs(s.norm() - 1))

    # analytic gradient against finite differences of the dense oracle
    worst_grad = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        g = random_graph(rng, n)
        spec = build_qaoa_plus(g, int(rng.integers(1, n)), int(rng.integers(1, n + 1)))
        x = rng.uniform(0, 2 * math.pi, spec.param_count)
        _, grad = CompiledAnsatz(spec, g).value_and_grad(x)
        fd = finite_difference_gradient(lambda y: dense_expectation(n, g.edges, gates_for(spec, y)), x)
        worst_grad = max(worst_grad, float(np.max(np.abs(grad - fd))))

    # byte-identical output at different worker counts
    outputs = []
    for workers in (1, 2):
        cfg = ExperimentConfig(kind="table1", nodes=[8], degrees=[3], graphs_per_family=10, restarts=2, seed=7, workers=workers)
        outputs.append(records_to_csv(run_table1(cfg, Runner(cfg))))
    identical = outputs[0] == outputs[1]

    ok = worst_norm < 1e-10 and worst_grad < 1e-6 and identical
    detail = f"norm drift {worst_norm:.1e}, gradient vs oracle FD {worst_grad:.1e}, workers 1 vs 2 identical: {identical}"
    report(acceptance_log, 10, "PASS" if ok else "FAIL", detail)
    assert ok


def test_criterion_11_thresholds_rise(runner, acceptance_log):
    cfg = ExperimentConfig(kind="threshold", nodes=[8, 10], degrees=[3, 4, 5], graphs_per_family=10, restarts=10, seed=0)
    results, _ = run_threshold(cfg, runner)
    by_family = {(r.n, r.d): r.threshold for r in results}
    assert len(by_family) == 6, runner.failures
    rising = []
    for d in (3, 4, 5):
        lo, hi = by_family[(8, d)], by_family[(10, d)]
        rising.append((lo if lo is not None else math.inf) <= (hi if hi is not None else math.inf))
    detail = ", ".join(f"d={d}: {by_family[(8, d)]} -> {by_family[(10, d)]}" for d in (3, 4, 5))
    report(acceptance_log, 11, "PASS" if all(rising) else "WARN", f"thresholds n=8 -> n=10, {detail}")
