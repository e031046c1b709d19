"""Directed acyclic graphs: representation, random generation, topological
utilities, and structural accuracy metrics (SHD, SID, precision/recall/F1).

Variables are labeled 1..d throughout; an edge (j, i) means X_j -> X_i.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DimensionMismatch
from .util import as_rng

Edge = tuple[int, int]

# Conventions baked into the metrics below; echoed into metric dumps so that
# numbers can be compared across tools that pick different ones.
METRIC_CONVENTIONS = {
    "shd_reversal_cost": 1,
    "precision_when_no_predicted_edges": 1.0,
    "recall_when_no_true_edges": 1.0,
    "f1_when_precision_plus_recall_zero": 0.0,
}


@dataclass(frozen=True)
class Dag:
    """Labeled DAG on variables 1..num_vars, stored as a set of (tail, head)
    edges. Acyclicity and label range are checked at construction."""

    num_vars: int
    edges: frozenset[Edge]

    def __init__(self, num_vars: int, edges=()):
        if num_vars < 1:
            raise ValueError(f"num_vars must be >= 1, got {num_vars}")
        norm = frozenset((int(j), int(i)) for j, i in edges)
        for j, i in norm:
            if j == i:
                raise ValueError(f"self-loop at variable {j}")
            if not (1 <= j <= num_vars and 1 <= i <= num_vars):
                raise ValueError(f"edge ({j},{i}) outside [1,{num_vars}]")
        object.__setattr__(self, "num_vars", int(num_vars))
        object.__setattr__(self, "edges", norm)
        # raises if no topological order exists
        self.topological_order()

    # -- adjacency ---------------------------------------------------------

    def parents(self, i: int) -> set[int]:
        return {j for j, k in self.edges if k == i}

    def children(self, j: int) -> set[int]:
        return {i for k, i in self.edges if k == j}

    def _child_lists(self) -> dict[int, list[int]]:
        ch: dict[int, list[int]] = {v: [] for v in range(1, self.num_vars + 1)}
        for j, i in self.edges:
            ch[j].append(i)
        return ch

    def _parent_lists(self) -> dict[int, list[int]]:
        pa: dict[int, list[int]] = {v: [] for v in range(1, self.num_vars + 1)}
        for j, i in self.edges:
            pa[i].append(j)
        return pa

    def descendants(self, v: int) -> set[int]:
        """Strict descendants (v itself excluded)."""
        ch = self._child_lists()
        seen: set[int] = set()
        stack = list(ch[v])
        while stack:
            u = stack.pop()
            if u not in seen:
                seen.add(u)
                stack.extend(ch[u])
        return seen

    def ancestors(self, v: int) -> set[int]:
        pa = self._parent_lists()
        seen: set[int] = set()
        stack = list(pa[v])
        while stack:
            u = stack.pop()
            if u not in seen:
                seen.add(u)
                stack.extend(pa[u])
        return seen

    def topological_order(self) -> "TopologicalOrder":
        """Kahn's algorithm with smallest-index tie-breaking (canonical)."""
        d = self.num_vars
        indeg = {v: 0 for v in range(1, d + 1)}
        ch = self._child_lists()
        for _, i in self.edges:
            indeg[i] += 1
        ready = [v for v in range(1, d + 1) if indeg[v] == 0]
        heapq.heapify(ready)
        perm: list[int] = []
        while ready:
            v = heapq.heappop(ready)
            perm.append(v)
            for u in ch[v]:
                indeg[u] -= 1
                if indeg[u] == 0:
                    heapq.heappush(ready, u)
        if len(perm) != d:
            raise ValueError("graph contains a cycle")
        return TopologicalOrder(tuple(perm))


@dataclass(frozen=True)
class TopologicalOrder:
    """Permutation of 1..d listing variables from roots to leaves."""

    perm: tuple[int, ...]

    def __init__(self, perm):
        p = tuple(int(v) for v in perm)
        d = len(p)
        if sorted(p) != list(range(1, d + 1)):
            raise ValueError(f"not a permutation of 1..{d}: {p}")
        object.__setattr__(self, "perm", p)

    @property
    def num_vars(self) -> int:
        return len(self.perm)

    def position(self, var: int) -> int:
        return self.perm.index(var)

    def candidate_parents(self, var: int) -> tuple[int, ...]:
        """Variables preceding `var` in the order."""
        return self.perm[: self.position(var)]

    def consistent_with(self, g: Dag) -> bool:
        if g.num_vars != self.num_vars:
            raise DimensionMismatch(
                f"order on {self.num_vars} vars vs DAG on {g.num_vars}"
            )
        pos = {v: k for k, v in enumerate(self.perm)}
        return all(pos[j] < pos[i] for j, i in g.edges)


@dataclass(frozen=True)
class GraphMetrics:
    shd: int
    sid: int
    precision: float
    recall: float
    f1: float
    num_edges_true: int
    num_edges_est: int

    def to_dict(self) -> dict:
        return {
            "shd": self.shd,
            "sid": self.sid,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "num_edges_true": self.num_edges_true,
            "num_edges_est": self.num_edges_est,
            "conventions": dict(METRIC_CONVENTIONS),
        }


# -- random generation -----------------------------------------------------


def gen_erdos_renyi(d: int, avg_edges: int, seed: int | np.random.Generator) -> Dag:
    """Random DAG with expected edge count `avg_edges`.

    A uniformly random permutation orients the variables; each forward pair
    is included independently with probability avg_edges / C(d, 2).
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    max_edges = d * (d - 1) // 2
    if not (0 <= avg_edges <= max_edges):
        raise ValueError(f"avg_edges must be in [0, {max_edges}], got {avg_edges}")
    rng = as_rng(seed)
    perm = rng.permutation(d) + 1
    p = avg_edges / max_edges if max_edges > 0 else 0.0
    edges = []
    for a in range(d):
        for b in range(a + 1, d):
            if rng.random() < p:
                edges.append((int(perm[a]), int(perm[b])))
    return Dag(d, edges)


def gen_scale_free(d: int, m: int, seed: int | np.random.Generator) -> Dag:
    """Preferential-attachment DAG: node t receives min(m, t-1) edges from
    earlier nodes drawn without replacement with weight (degree + 1)."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if d > 1 and m >= d:
        raise ValueError(f"m must be < d, got m={m}, d={d}")
    rng = as_rng(seed)
    degree = np.zeros(d + 1, dtype=np.int64)  # 1-based
    edges: list[Edge] = []
    for t in range(2, d + 1):
        k = min(m, t - 1)
        candidates = list(range(1, t))
        weights = degree[1:t].astype(float) + 1.0
        for _ in range(k):
            w = weights / weights.sum()
            pick = int(rng.choice(len(candidates), p=w))
            src = candidates.pop(pick)
            weights = np.delete(weights, pick)
            edges.append((src, t))
            degree[src] += 1
            degree[t] += 1
    return Dag(d, edges)


def full_dag_from_order(order: TopologicalOrder) -> Dag:
    """Fully connected DAG induced by an order: every earlier -> later edge."""
    p = order.perm
    edges = [(p[a], p[b]) for a in range(len(p)) for b in range(a + 1, len(p))]
    return Dag(len(p), edges)


# -- metrics ----------------------------------------------------------------


def _require_same_d(truth: Dag, est: Dag) -> None:
    if truth.num_vars != est.num_vars:
        raise DimensionMismatch(
            f"true DAG has d={truth.num_vars}, estimate has d={est.num_vars}"
        )


def _pair_status(g: Dag, a: int, b: int) -> int:
    """0 = no edge, 1 = a->b, 2 = b->a, for the unordered pair {a, b}."""
    if (a, b) in g.edges:
        return 1
    if (b, a) in g.edges:
        return 2
    return 0


def shd(truth: Dag, est: Dag) -> int:
    """Structural Hamming distance; a reversed edge costs 1."""
    _require_same_d(truth, est)
    d = truth.num_vars
    total = 0
    for a in range(1, d + 1):
        for b in range(a + 1, d + 1):
            if _pair_status(truth, a, b) != _pair_status(est, a, b):
                total += 1
    return total


def edge_prf(truth: Dag, est: Dag) -> tuple[float, float, float]:
    """Directed-edge precision, recall, F1 (see METRIC_CONVENTIONS)."""
    _require_same_d(truth, est)
    tp = len(truth.edges & est.edges)
    precision = tp / len(est.edges) if est.edges else 1.0
    recall = tp / len(truth.edges) if truth.edges else 1.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return precision, recall, f1


def d_separated(g: Dag, a: int, b: int, z: set[int] | frozenset[int]) -> bool:
    """True iff every path between a and b is blocked by z (standard rules:
    a chain/fork is blocked when its middle node is in z; a collider is
    blocked unless the collider or one of its descendants is in z)."""
    z = frozenset(int(v) for v in z)
    if a == b:
        raise ValueError("a and b must differ")
    if a in z or b in z:
        raise ValueError("conditioning set must not contain a or b")
    for v in (a, b, *z):
        if not (1 <= v <= g.num_vars):
            raise ValueError(f"variable {v} outside [1,{g.num_vars}]")
    return _d_separated_impl(g, a, b, z, frozenset())


def _d_separated_impl(
    g: Dag, a: int, b: int, z: frozenset[int], removed: frozenset[Edge]
) -> bool:
    """Active-trail reachability with an optional set of deleted edges."""
    pa = {v: [] for v in range(1, g.num_vars + 1)}
    ch = {v: [] for v in range(1, g.num_vars + 1)}
    for e in g.edges:
        if e in removed:
            continue
        j, i = e
        ch[j].append(i)
        pa[i].append(j)

    # ancestors of z (in the pruned graph), needed for collider activation
    anc_z = set(z)
    stack = [p for v in z for p in pa[v]]
    while stack:
        u = stack.pop()
        if u not in anc_z:
            anc_z.add(u)
            stack.extend(pa[u])

    # states: (node, came_from_child?) -- True means the trail arrived at the
    # node moving against an edge (from one of its children)
    UP, DOWN = True, False
    visited: set[tuple[int, bool]] = set()
    stack2 = [(a, UP)]
    while stack2:
        node, direction = stack2.pop()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node == b and node not in z:
            return False
        if direction == UP and node not in z:
            for p in pa[node]:
                stack2.append((p, UP))
            for c in ch[node]:
                stack2.append((c, DOWN))
        elif direction == DOWN:
            if node not in z:
                for c in ch[node]:
                    stack2.append((c, DOWN))
            if node in anc_z:
                for p in pa[node]:
                    stack2.append((p, UP))
    return True


def intervention_correct(
    truth: Dag,
    i: int,
    j: int,
    z: frozenset[int],
    desc: dict[int, set[int]] | None = None,
) -> bool:
    """Is the effect of X_i on X_j correctly predicted by adjusting for z?

    When j in z the prediction is a null effect, correct iff j is not a
    descendant of i in `truth`. Otherwise z must satisfy the adjustment
    criterion in `truth`:

      * z avoids the forbidden set, i.e. descendants (inclusive) of any node
        on a directed path from i to j, and
      * z d-separates i and j once the first edge of every directed i->..->j
        path is deleted (so only non-causal paths are tested).
    """
    if desc is None:
        desc = {v: truth.descendants(v) for v in range(1, truth.num_vars + 1)}
    de_i = desc[i]
    if j in z:
        return j not in de_i
    # nodes (other than i) lying on some directed path i -> .. -> j
    causal = {w for w in de_i if w == j or j in desc[w]}
    forbidden = set(causal)
    for w in causal:
        forbidden |= desc[w]
    if z & forbidden:
        return False
    removed = frozenset((i, w) for w in causal if (i, w) in truth.edges)
    return _d_separated_impl(truth, i, j, z, removed)


def sid(truth: Dag, est: Dag) -> int:
    """Structural intervention distance: the number of ordered pairs (i, j)
    whose intervention effect is falsely predicted when adjusting for the
    estimated parents pa_est(i) in the true graph (see
    `intervention_correct` for the per-pair rule)."""
    _require_same_d(truth, est)
    d = truth.num_vars
    desc = {v: truth.descendants(v) for v in range(1, d + 1)}
    total = 0
    for i in range(1, d + 1):
        z = frozenset(est.parents(i))
        for j in range(1, d + 1):
            if i != j and not intervention_correct(truth, i, j, z, desc):
                total += 1
    return total


def evaluate(truth: Dag, est: Dag) -> GraphMetrics:
    """All metrics at once."""
    precision, recall, f1 = edge_prf(truth, est)
    return GraphMetrics(
        shd=shd(truth, est),
        sid=sid(truth, est),
        precision=precision,
        recall=recall,
        f1=f1,
        num_edges_true=len(truth.edges),
        num_edges_est=len(est.edges),
    )


# -- file formats ------------------------------------------------------------


def write_dag(g: Dag, path: str | Path) -> None:
    """Plain-text edge list: header line `d=<num_vars>`, then one `j,i` line
    per edge in lexicographic order."""
    lines = [f"d={g.num_vars}"]
    lines += [f"{j},{i}" for j, i in sorted(g.edges)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_dag(path: str | Path) -> Dag:
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read: {exc}") from exc
    lines = raw.splitlines()
    if not lines or not lines[0].startswith("d="):
        raise DataFormatError(f"{path}:1: expected header 'd=<num_vars>'")
    try:
        d = int(lines[0][2:])
    except ValueError as exc:
        raise DataFormatError(f"{path}:1: bad variable count {lines[0][2:]!r}") from exc
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DataFormatError(f"{path}:{lineno}: expected 'j,i', got {line!r}")
        try:
            j, i = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise DataFormatError(
                f"{path}:{lineno}: non-integer endpoint in {line!r}"
            ) from exc
        edges.append((j, i))
    try:
        return Dag(d, edges)
    except ValueError as exc:
        raise DataFormatError(f"{path}: invalid DAG: {exc}") from exc


def write_order(order: TopologicalOrder, path: str | Path) -> None:
    Path(path).write_text(",".join(str(v) for v in order.perm) + "\n")


def read_order(path: str | Path) -> TopologicalOrder:
    path = Path(path)
    try:
        raw = path.read_text().strip()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read: {exc}") from exc
    if not raw:
        raise DataFormatError(f"{path}:1: empty order file")
    try:
        perm = [int(tok) for tok in raw.split(",")]
    except ValueError as exc:
        raise DataFormatError(f"{path}:1: non-integer entry in order") from exc
    try:
        return TopologicalOrder(perm)
    except ValueError as exc:
        raise DataFormatError(f"{path}: invalid order: {exc}") from exc
