"""Multistart BFGS maximization of the expected cut."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize

from .ansatz import AnsatzSpec, CompiledAnsatz
from .errors import InputError, NumericalSanityError, OptimizationError
from .graphs import Graph, max_cut_bruteforce

GRAD_TOL = 1e-6
MAX_ITER = 500
FD_STEP = 1e-6
AR_SLACK = 1e-9


class BFGSResult(NamedTuple):
    x: np.ndarray
    fun: float
    converged: bool
    nit: int


class _NonFinite(Exception):
    pass


def bfgs_minimize(
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray] | None,
    x0: Sequence[float],
    grad_tol: float = GRAD_TOL,
    max_iter: int = MAX_ITER,
) -> BFGSResult:
    """BFGS with a strong-Wolfe line search (c1=1e-4, c2=0.9).

    ``gradient`` may be None when ``objective`` returns ``(value, gradient)``.
    Stops once the infinity norm of the gradient drops below ``grad_tol``.
    Raises :class:`NumericalSanityError` on a non-finite value or gradient.
    """
    x0 = np.asarray(x0, dtype=float)

    def fun(x):
        if gradient is None:
            f, g = objective(x)
        else:
            f, g = objective(x), gradient(x)
        g = np.asarray(g, dtype=float)
        if not (math.isfinite(f) and np.all(np.isfinite(g))):
            raise _NonFinite(x.copy())
        return f, g

    try:
        with warnings.catch_warnings():
            # precision-loss exits are reported through the converged flag
            warnings.simplefilter("ignore")
            res = minimize(
                fun,
                x0,
                jac=True,
                method="BFGS",
                options={"gtol": grad_tol, "maxiter": max_iter, "norm": np.inf, "c1": 1e-4, "c2": 0.9},
            )
    except _NonFinite as exc:
        raise NumericalSanityError(f"non-finite objective or gradient at {exc.args[0]}") from None
    converged = bool(np.max(np.abs(res.jac), initial=0.0) < grad_tol)
    return BFGSResult(np.asarray(res.x), float(res.fun), converged, int(res.nit))


def finite_difference_gradient(
    objective: Callable[[np.ndarray], float], x: Sequence[float], h: float = FD_STEP
) -> np.ndarray:
    if h <= 0:
        raise InputError(f"step must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(len(x)):
        step = np.zeros_like(x)
        step[i] = h
        grad[i] = (objective(x + step) - objective(x - step)) / (2 * h)
    return grad


def approximation_ratio(expectation: float, cmax: int) -> float:
    if cmax < 1:
        raise InputError(f"cmax must be at least 1, got {cmax}")
    if not (-AR_SLACK <= expectation <= cmax + AR_SLACK):
        raise NumericalSanityError(f"expectation {expectation} outside [0, {cmax}]")
    return min(1.0, max(0.0, expectation / cmax))


@dataclass
class RestartRecord:
    seed: int
    value: float
    iterations: int
    converged: bool
    failed: bool = False


@dataclass
class OptResult:
    best_params: list[float]
    best_expectation: float
    approximation_ratio: float
    cmax: int
    graph_id: str
    ansatz: str
    param_count: int
    restarts: list[RestartRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "OptResult":
        obj = dict(obj)
        obj["restarts"] = [RestartRecord(**r) for r in obj["restarts"]]
        return cls(**obj)


def random_start(seed: int, size: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, 2 * math.pi, size)


def multistart_optimize(
    spec: AnsatzSpec,
    g: Graph,
    restarts: int = 10,
    seed: int = 0,
    initial: Sequence[float] | None = None,
    warm_start: bool = True,
    cmax: int | None = None,
    gradient: str = "adjoint",
    grad_tol: float = GRAD_TOL,
    max_iter: int = MAX_ITER,
) -> OptResult:
    """Best of ``restarts`` BFGS runs maximizing the expected cut.

    Restart ``i`` starts from a point drawn uniformly from ``[0, 2pi)`` per
    coordinate with seed ``seed ^ i``.  With ``warm_start`` the first restart
    instead starts from ``initial`` (all zeros when not given).
    """
    if restarts < 1:
        raise InputError(f"restarts must be at least 1, got {restarts}")
    if gradient not in ("adjoint", "fd"):
        raise InputError(f"unknown gradient method {gradient!r}")
    circuit = CompiledAnsatz(spec, g)
    if cmax is None:
        cmax = max_cut_bruteforce(g).cmax
    size = spec.param_count

    if gradient == "adjoint":
        def objective(x):
            v, gr = circuit.value_and_grad(x)
            return -v, -gr
    else:
        def objective(x):
            v = circuit.value(x)
            return -v, -finite_difference_gradient(circuit.value, x)

    records: list[RestartRecord] = []
    best_x, best_v = None, -math.inf
    for i in range(restarts):
        rseed = seed ^ i
        if warm_start and i == 0:
            x0 = np.zeros(size) if initial is None else np.asarray(initial, dtype=float)
            if x0.shape != (size,):
                raise InputError(f"initial point has shape {x0.shape}, expected ({size},)")
        else:
            x0 = random_start(rseed, size)
        try:
            res = bfgs_minimize(objective, None, x0, grad_tol, max_iter)
        except NumericalSanityError:
            records.append(RestartRecord(rseed, math.nan, 0, False, failed=True))
            continue
        value = -res.fun
        records.append(RestartRecord(rseed, value, res.nit, res.converged))
        if value > best_v:
            best_x, best_v = res.x, value
    if best_x is None:
        raise OptimizationError(f"all {restarts} restarts failed for {spec.label} on graph {g.id}")
    return OptResult(
        best_params=[float(v) for v in best_x],
        best_expectation=float(best_v),
        approximation_ratio=approximation_ratio(best_v, cmax),
        cmax=cmax,
        graph_id=g.id,
        ansatz=spec.label,
        param_count=size,
        restarts=records,
    )
