"""Small undirected graphs, random regular sampling and exact MaxCut.

Bit convention used throughout the package: in a basis index ``x`` the bit
``(x >> j) & 1`` is the side of vertex ``j``.  Assignment strings put vertex
``j`` at character ``j``.
"""

from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, GenerationError, InputError

MAX_QUBITS = 24
MAX_SAMPLE_ATTEMPTS = 10_000
MAX_DRAWS = 100_000
# Consecutive draws without a new isomorphism class before the ensemble is
# declared exhausted (see collect_nonisomorphic).
DEFAULT_PATIENCE = 5_000


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n-1``.

    ``edges`` must already be canonical: pairs ``(u, v)`` with ``u < v``,
    sorted, without duplicates.  Use :meth:`from_edges` to canonicalize an
    arbitrary edge collection.
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise InputError(f"node count must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            if u == v:
                raise InputError(f"self-loop at vertex {u}")
            if not (0 <= u < v < self.n):
                raise InputError(f"edge ({u}, {v}) is not of the form 0 <= u < v < n={self.n}")
        for a, b in zip(edges, edges[1:]):
            if a == b:
                raise InputError(f"duplicate edge {a}")
            if a > b:
                raise InputError("edges must be sorted lexicographically")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        pairs = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise InputError(f"self-loop at vertex {u}")
            pair = (min(u, v), max(u, v))
            if pair in pairs:
                raise InputError(f"duplicate edge {pair}")
            pairs.add(pair)
        return cls(n, tuple(sorted(pairs)))

    @cached_property
    def id(self) -> str:
        payload = json.dumps({"n": self.n, "edges": [list(e) for e in self.edges]})
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        deg = [0] * self.n
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return tuple(deg)

    @cached_property
    def neighbors(self) -> tuple[frozenset[int], ...]:
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(a) for a in adj)

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            for w in self.neighbors[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n

    def is_regular(self, d: int) -> bool:
        return all(k == d for k in self.degrees)

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, obj) -> "Graph":
        if not isinstance(obj, dict) or set(obj) != {"n", "edges"}:
            raise InputError("graph object must have exactly the keys 'n' and 'edges'")
        n, edges = obj["n"], obj["edges"]
        if isinstance(n, bool) or not isinstance(n, int):
            raise InputError(f"'n' must be an integer, got {n!r}")
        if not isinstance(edges, list):
            raise InputError("'edges' must be a list")
        pairs = []
        for e in edges:
            if (
                not isinstance(e, list)
                or len(e) != 2
                or any(isinstance(x, bool) or not isinstance(x, int) for x in e)
            ):
                raise InputError(f"edge {e!r} is not a pair of integers")
            pairs.append((e[0], e[1]))
        return cls(n, tuple(pairs))


def save_graphs(graphs: Sequence[Graph], path: str | Path) -> None:
    path = Path(path)
    try:
        path.write_text(json.dumps([g.to_dict() for g in graphs]) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write graphs to {path}: {exc}") from exc


def load_graphs(path: str | Path) -> list[Graph]:
    """Read a single graph object or an array of them."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"cannot read graph file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise InputError(f"{path}: expected a graph object or an array of graph objects")
    return [Graph.from_dict(obj) for obj in data]


@dataclass(frozen=True)
class CutSolution:
    cmax: int
    witness: str


def _check_capacity(n: int) -> None:
    if n > MAX_QUBITS:
        raise CapacityError(f"n={n} exceeds the limit of {MAX_QUBITS} vertices")


def cut_value(g: Graph, assignment: str | Sequence[int]) -> int:
    bits = [int(b) for b in assignment]
    if len(bits) != g.n:
        raise InputError(f"assignment has {len(bits)} bits, graph has {g.n} vertices")
    if any(b not in (0, 1) for b in bits):
        raise InputError("assignment bits must be 0 or 1")
    return sum(1 for u, v in g.edges if bits[u] != bits[v])


def pairs_table(n: int, pairs: Iterable[tuple[int, int]]) -> np.ndarray:
    """Number of ``pairs`` whose endpoints differ, for every basis index."""
    _check_capacity(n)
    x = np.arange(1 << n, dtype=np.int64)
    table = np.zeros(1 << n, dtype=np.int64)
    for u, v in pairs:
        table += ((x >> u) ^ (x >> v)) & 1
    return table


def cut_table(g: Graph) -> np.ndarray:
    return pairs_table(g.n, g.edges)


def max_cut_bruteforce(g: Graph) -> CutSolution:
    _check_capacity(g.n)
    # The top vertex is pinned to side 0; the flipped half is a mirror image.
    half = pairs_table(g.n, g.edges)[: 1 << (g.n - 1)]
    x = int(np.argmax(half))
    witness = "".join(str((x >> j) & 1) for j in range(g.n))
    return CutSolution(int(half[x]), witness)


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _sample_pairing(n: int, d: int, rng: np.random.Generator) -> set[tuple[int, int]] | None:
    """One pairing-model draw; None when it is not a simple graph."""
    perm = rng.permutation(np.repeat(np.arange(n), d)).tolist()
    edges = set()
    for i in range(0, len(perm), 2):
        u, v = perm[i], perm[i + 1]
        if u == v:
            return None
        if u > v:
            u, v = v, u
        if (u, v) in edges:
            return None
        edges.add((u, v))
    return edges


def sample_regular_graph(n: int, d: int, rng=None) -> Graph:
    """Uniform connected simple d-regular graph from the pairing model.

    Whole pairings are rejected on any self-loop or repeated edge and the
    resulting simple graph is rejected when disconnected.  For dense degrees
    the complementary degree ``n - 1 - d`` is paired instead and the result
    complemented; complementation is a bijection between the two labelled
    families, so the output distribution is unchanged.
    """
    if n < 1 or d < 0:
        raise InputError(f"need n >= 1 and d >= 0, got n={n}, d={d}")
    if (n * d) % 2:
        raise InputError(f"n*d must be even, got n={n}, d={d}")
    if d >= n:
        raise InputError(f"need d < n, got n={n}, d={d}")
    _check_capacity(n)
    rng = _as_rng(rng)
    co_degree = n - 1 - d
    complement = co_degree < d
    for _ in range(MAX_SAMPLE_ATTEMPTS):
        edges = _sample_pairing(n, co_degree if complement else d, rng)
        if edges is None:
            continue
        if complement:
            edges = {(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in edges}
        g = Graph(n, tuple(sorted(edges)))
        if g.is_connected():
            return g
    raise GenerationError(
        f"no connected simple {d}-regular graph on {n} nodes after {MAX_SAMPLE_ATTEMPTS} attempts"
    )


def _refine_colors(graphs: Sequence[Graph]) -> list[list[int]] | None:
    """Joint colour refinement; returns None when the graphs are told apart."""
    colors = [list(g.degrees) for g in graphs]
    n_classes = -1
    while True:
        palette: dict[tuple, int] = {}
        new = []
        for g, col in zip(graphs, colors):
            sig = [(col[v], tuple(sorted(col[w] for w in g.neighbors[v]))) for v in range(g.n)]
            new.append([palette.setdefault(s, len(palette)) for s in sig])
        hists = [sorted(c) for c in new]
        if any(h != hists[0] for h in hists[1:]):
            return None
        colors = new
        if len(palette) == n_classes:
            return colors
        n_classes = len(palette)


def are_isomorphic(g1: Graph, g2: Graph) -> bool:
    """Exact isomorphism test by backtracking over colour-compatible vertices."""
    if g1.n != g2.n or g1.num_edges != g2.num_edges:
        return False
    if sorted(g1.degrees) != sorted(g2.degrees):
        return False
    colors = _refine_colors([g1, g2])
    if colors is None:
        return False
    c1, c2 = colors
    n = g1.n
    class_size: dict[int, int] = defaultdict(int)
    for c in c1:
        class_size[c] += 1

    # Visit order: each next vertex has as many already-placed neighbours as
    # possible, so adjacency checks prune early.
    order: list[int] = []
    placed_nbrs = [0] * n
    remaining = set(range(n))
    while remaining:
        v = max(remaining, key=lambda u: (placed_nbrs[u], -class_size[c1[u]], -u))
        order.append(v)
        remaining.discard(v)
        for w in g1.neighbors[v]:
            placed_nbrs[w] += 1

    adj1, adj2 = g1.neighbors, g2.neighbors
    candidates = [[w for w in range(n) if c2[w] == c1[v]] for v in order]
    mapping = [-1] * n
    used = [False] * n

    def extend(depth: int) -> bool:
        if depth == n:
            return True
        v = order[depth]
        for w in candidates[depth]:
            if used[w]:
                continue
            ok = True
            for u in order[:depth]:
                if (u in adj1[v]) != (mapping[u] in adj2[w]):
                    ok = False
                    break
            if not ok:
                continue
            mapping[v] = w
            used[w] = True
            if extend(depth + 1):
                return True
            mapping[v] = -1
            used[w] = False
        return False

    return extend(0)


def _invariant_key(g: Graph) -> tuple:
    # Sorted closed-walk counts per vertex for lengths 2..6.  Integer-exact,
    # so isomorphic graphs always share a bucket.
    a = np.zeros((g.n, g.n), dtype=np.int64)
    for u, v in g.edges:
        a[u, v] = a[v, u] = 1
    key = []
    power = a
    for _ in range(5):
        power = power @ a
        key.append(tuple(sorted(np.diag(power).tolist())))
    return tuple(key)


def collect_nonisomorphic(
    n: int,
    d: int,
    max_count: int,
    rng=None,
    max_draws: int = MAX_DRAWS,
    patience: int | None = DEFAULT_PATIENCE,
) -> list[Graph]:
    """Sample connected d-regular graphs, keeping one per isomorphism class.

    Stops at ``max_count`` graphs, after ``max_draws`` samples, or after
    ``patience`` consecutive samples that all fell into known classes (the
    family is then treated as exhausted).  ``patience=None`` disables that
    early stop.
    """
    if max_count < 1:
        raise InputError(f"max_count must be positive, got {max_count}")
    rng = _as_rng(rng)
    kept: list[Graph] = []
    buckets: dict[tuple, list[Graph]] = defaultdict(list)
    stale = 0
    for _ in range(max_draws):
        g = sample_regular_graph(n, d, rng)
        key = _invariant_key(g)
        if any(are_isomorphic(g, h) for h in buckets[key]):
            stale += 1
            if patience is not None and stale >= patience:
                break
            continue
        stale = 0
        buckets[key].append(g)
        kept.append(g)
        if len(kept) >= max_count:
            break
    return kept
