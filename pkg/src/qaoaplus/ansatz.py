"""Parameterized circuit descriptions for QAOA, QAOA+ and multi-angle QAOA.

An :class:`AnsatzSpec` is an ordered list of layers.  Every layer has a slot
per gate (one per edge, per line pair, or per qubit) and a partition of those
slots into contiguous groups; each group is bound to one optimization
parameter.  The parameter vector is laid out layer by layer, group by group.

Serialized form (``AnsatzSpec.to_dict``)::

    {
      "kind": "standard" | "qaoa_plus" | "ma_qaoa",
      "p": int,
      "graph_id": str,
      "n": int,
      "param_count": int,
      "layers": [
        {"type": "cost" | "line_zz" | "mixer",
         "pairs": [[u, v], ...],        # empty for mixers
         "size": int,                   # number of slots
         "groups": [[start, stop], ...]}
      ]
    }

The full JSON Schema is ``ANSATZ_SCHEMA``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import jsonschema
import numpy as np

from .errors import InputError
from .graphs import Graph, cut_table, pairs_table
from .simulator import _diag_overlaps, _mixer_kernel, _phase_kernel, _x_overlaps

COST, LINE_ZZ, MIXER = "cost", "line_zz", "mixer"
STANDARD, QAOA_PLUS, MA_QAOA = "standard", "qaoa_plus", "ma_qaoa"

ANSATZ_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["kind", "p", "graph_id", "n", "param_count", "layers"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": [STANDARD, QAOA_PLUS, MA_QAOA]},
        "p": {"type": "integer", "minimum": 1},
        "graph_id": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "param_count": {"type": "integer", "minimum": 1},
        "layers": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["type", "pairs", "size", "groups"],
                "additionalProperties": False,
                "properties": {
                    "type": {"enum": [COST, LINE_ZZ, MIXER]},
                    "pairs": {
                        "type": "array",
                        "items": {
                            "type": "array",
                            "items": {"type": "integer", "minimum": 0},
                            "minItems": 2,
                            "maxItems": 2,
                        },
                    },
                    "size": {"type": "integer", "minimum": 1},
                    "groups": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "array",
                            "items": {"type": "integer", "minimum": 0},
                            "minItems": 2,
                            "maxItems": 2,
                        },
                    },
                },
            },
        },
    },
}


def balanced_groups(size: int, count: int) -> tuple[tuple[int, int], ...]:
    """Split ``range(size)`` into ``count`` contiguous blocks, larger blocks first."""
    if not 1 <= count <= size:
        raise InputError(f"cannot split {size} slots into {count} groups")
    q, r = divmod(size, count)
    bounds = []
    start = 0
    for i in range(count):
        stop = start + q + (1 if i < r else 0)
        bounds.append((start, stop))
        start = stop
    return tuple(bounds)


@dataclass(frozen=True)
class Layer:
    type: str
    pairs: tuple[tuple[int, int], ...]
    size: int
    groups: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.type not in (COST, LINE_ZZ, MIXER):
            raise InputError(f"unknown layer type {self.type!r}")
        if self.type != MIXER and len(self.pairs) != self.size:
            raise InputError("two-qubit layer needs one slot per pair")
        if self.type == MIXER and self.pairs:
            raise InputError("mixer layers carry no pairs")
        pos = 0
        for start, stop in self.groups:
            if start != pos or stop <= start:
                raise InputError(f"groups {self.groups} are not contiguous non-empty blocks")
            pos = stop
        if pos != self.size or not self.groups:
            raise InputError(f"groups {self.groups} do not cover {self.size} slots")

    @property
    def n_params(self) -> int:
        return len(self.groups)

    def slot_group(self) -> np.ndarray:
        out = np.empty(self.size, dtype=np.int64)
        for i, (start, stop) in enumerate(self.groups):
            out[start:stop] = i
        return out


@dataclass(frozen=True)
class AnsatzSpec:
    kind: str
    p: int
    graph_id: str
    n: int
    layers: tuple[Layer, ...]

    @property
    def param_count(self) -> int:
        return sum(layer.n_params for layer in self.layers)

    @property
    def label(self) -> str:
        if self.kind == STANDARD:
            return f"standard-p{self.p}"
        counts = [layer.n_params for layer in self.layers]
        if self.kind == QAOA_PLUS:
            return f"qaoa-plus({counts[2]},{counts[3]})"
        return f"ma-qaoa({counts[0]},{counts[1]})"

    def param_slices(self) -> list[slice]:
        out, pos = [], 0
        for layer in self.layers:
            out.append(slice(pos, pos + layer.n_params))
            pos += layer.n_params
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "p": self.p,
            "graph_id": self.graph_id,
            "n": self.n,
            "param_count": self.param_count,
            "layers": [
                {
                    "type": layer.type,
                    "pairs": [list(e) for e in layer.pairs],
                    "size": layer.size,
                    "groups": [list(b) for b in layer.groups],
                }
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "AnsatzSpec":
        try:
            jsonschema.validate(obj, ANSATZ_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise InputError(f"invalid ansatz description: {exc.message}") from exc
        layers = tuple(
            Layer(
                d["type"],
                tuple((u, v) for u, v in d["pairs"]),
                d["size"],
                tuple((a, b) for a, b in d["groups"]),
            )
            for d in obj["layers"]
        )
        spec = cls(obj["kind"], obj["p"], obj["graph_id"], obj["n"], layers)
        if spec.param_count != obj["param_count"]:
            raise InputError("param_count does not match the layer groupings")
        return spec


def _require_edges(g: Graph) -> None:
    if not g.edges:
        raise InputError("ansatz construction needs a graph with at least one edge")


def _cost_layer(g: Graph, count: int) -> Layer:
    return Layer(COST, g.edges, g.num_edges, balanced_groups(g.num_edges, count))


def _mixer_layer(n: int, count: int) -> Layer:
    return Layer(MIXER, (), n, balanced_groups(n, count))


def build_standard_qaoa(g: Graph, p: int = 1) -> AnsatzSpec:
    if p not in (1, 2):
        raise InputError(f"standard QAOA depth must be 1 or 2, got p={p}")
    _require_edges(g)
    layers = []
    for _ in range(p):
        layers += [_cost_layer(g, 1), _mixer_layer(g.n, 1)]
    return AnsatzSpec(STANDARD, p, g.id, g.n, tuple(layers))


def build_qaoa_plus(g: Graph, n_zz_params: int, n_mix2_params: int) -> AnsatzSpec:
    """p=1 QAOA followed by a ZZ line over qubits 0-1, 1-2, ... and a second mixer."""
    _require_edges(g)
    if not 1 <= n_zz_params <= g.n - 1:
        raise InputError(f"n_zz_params must be in [1, {g.n - 1}], got {n_zz_params}")
    if not 1 <= n_mix2_params <= g.n:
        raise InputError(f"n_mix2_params must be in [1, {g.n}], got {n_mix2_params}")
    line = tuple((i, i + 1) for i in range(g.n - 1))
    layers = (
        _cost_layer(g, 1),
        _mixer_layer(g.n, 1),
        Layer(LINE_ZZ, line, len(line), balanced_groups(len(line), n_zz_params)),
        _mixer_layer(g.n, n_mix2_params),
    )
    return AnsatzSpec(QAOA_PLUS, 1, g.id, g.n, layers)


def build_ma_qaoa(g: Graph, n_gamma_params: int, n_beta_params: int) -> AnsatzSpec:
    _require_edges(g)
    if not 1 <= n_gamma_params <= g.num_edges:
        raise InputError(f"n_gamma_params must be in [1, {g.num_edges}], got {n_gamma_params}")
    if not 1 <= n_beta_params <= g.n:
        raise InputError(f"n_beta_params must be in [1, {g.n}], got {n_beta_params}")
    layers = (_cost_layer(g, n_gamma_params), _mixer_layer(g.n, n_beta_params))
    return AnsatzSpec(MA_QAOA, 1, g.id, g.n, layers)


def enumerate_split_pairs(total: int, max_a: int, max_b: int) -> list[tuple[int, int]]:
    if total < 2:
        raise InputError(f"total must be at least 2, got {total}")
    return [(a, total - a) for a in range(1, max_a + 1) if 1 <= total - a <= max_b]


def threshold_split(total: int, max_gamma: int, max_beta: int) -> tuple[int, int]:
    """Even totals split equally, odd totals give the cost layer the extra one.

    A component above its layer maximum is clamped and the excess moved to the
    other layer.
    """
    if total < 2:
        raise InputError(f"total must be at least 2, got {total}")
    if total > max_gamma + max_beta:
        raise InputError(f"total {total} exceeds the maximum of {max_gamma + max_beta} parameters")
    gamma, beta = (total + 1) // 2, total // 2
    if gamma > max_gamma:
        beta, gamma = beta + gamma - max_gamma, max_gamma
    if beta > max_beta:
        gamma, beta = gamma + beta - max_beta, max_beta
    return gamma, beta


def two_qubit_gate_count(spec: AnsatzSpec) -> int:
    return sum(layer.size for layer in spec.layers if layer.type != MIXER)


def slot_angles(spec: AnsatzSpec, params: Sequence[float]) -> list[np.ndarray]:
    """Per-layer gate angles obtained by broadcasting each group's parameter."""
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.param_count,):
        raise InputError(f"expected {spec.param_count} parameters, got shape {params.shape}")
    return [params[sl][layer.slot_group()] for layer, sl in zip(spec.layers, spec.param_slices())]


def embed_params(source: AnsatzSpec, params: Sequence[float], target: AnsatzSpec) -> np.ndarray:
    """Parameters for ``target`` that realize the same circuit as ``source``.

    ``target`` must start with the layers of ``source`` (same gates, groupings
    at least as fine); its extra layers are set to zero angle, i.e. identity.
    """
    if len(target.layers) < len(source.layers):
        raise InputError("target ansatz has fewer layers than the source")
    out = np.zeros(target.param_count)
    angles = slot_angles(source, params)
    for k, (sl, tl, sl_params) in enumerate(zip(source.layers, target.layers, target.param_slices())):
        if (sl.type, sl.pairs, sl.size) != (tl.type, tl.pairs, tl.size):
            raise InputError(f"layer {k} differs between source and target ansatz")
        vals = angles[k]
        for i, (start, stop) in enumerate(tl.groups):
            block = vals[start:stop]
            if np.any(block != block[0]):
                raise InputError(f"layer {k}: target grouping is not a refinement of the source")
            out[sl_params][i] = block[0]
    return out


class CompiledAnsatz:
    """An :class:`AnsatzSpec` bound to its graph with precomputed phase tables.

    ``value`` runs the circuit and returns the expected cut.  ``value_and_grad``
    adds the exact gradient by reverse (adjoint) propagation: every layer is a
    product of commuting rotations ``exp(-i theta G)``, so the derivative for a
    group is ``2 Im <lambda|G_group|psi>`` taken at the layer output.
    """

    def __init__(self, spec: AnsatzSpec, g: Graph):
        if spec.graph_id != g.id or spec.n != g.n:
            raise InputError(f"ansatz was built for graph {spec.graph_id}, got {g.id}")
        self.spec = spec
        self.n = g.n
        self.dim = 1 << g.n
        self.param_count = spec.param_count
        self.cost = cut_table(g).astype(float)
        self.slices = spec.param_slices()
        self._plan = []
        for layer in spec.layers:
            if layer.type == MIXER:
                self._plan.append((MIXER, layer.slot_group()))
            else:
                tables = np.stack(
                    [pairs_table(g.n, layer.pairs[a:b]) for a, b in layer.groups]
                ).astype(float)
                self._plan.append((COST, tables))
        self._psi0 = np.full(self.dim, 2.0 ** (-self.n / 2), dtype=np.complex128)

    def _check(self, params) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.param_count,):
            raise InputError(f"expected {self.param_count} parameters, got shape {params.shape}")
        return params

    def _forward(self, params: np.ndarray) -> np.ndarray:
        psi = self._psi0.copy()
        rows = psi.reshape(1, -1)
        for (kind, data), sl in zip(self._plan, self.slices):
            theta = params[sl]
            if kind == MIXER:
                _mixer_kernel(rows, theta[data])
            else:
                _phase_kernel(rows, theta, data)
        return psi

    def state(self, params) -> np.ndarray:
        return self._forward(self._check(params))

    def value(self, params) -> float:
        psi = self._forward(self._check(params))
        return float(np.dot(psi.real**2 + psi.imag**2, self.cost))

    def value_and_grad(self, params) -> tuple[float, np.ndarray]:
        params = self._check(params)
        psi = self._forward(params)
        # rows: psi and lambda = C psi, both pulled back layer by layer
        pair = np.stack([psi, self.cost * psi])
        value = float(np.dot(psi.real**2 + psi.imag**2, self.cost))
        grad = np.zeros(self.param_count)
        for (kind, data), sl in zip(reversed(self._plan), reversed(self.slices)):
            theta = params[sl]
            if kind == MIXER:
                per_qubit = _x_overlaps(pair[0], pair[1], self.n)
                grad[sl] = np.bincount(data, weights=per_qubit, minlength=len(theta))
                _mixer_kernel(pair, -theta[data])
            else:
                grad[sl] = _diag_overlaps(pair[0], pair[1], data)
                _phase_kernel(pair, -theta, data)
        return value, grad


def evaluate(spec: AnsatzSpec, g: Graph, params: Sequence[float]) -> float:
    return CompiledAnsatz(spec, g).value(params)
