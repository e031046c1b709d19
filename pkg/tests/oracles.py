"""Brute-force reference implementations used only by the test suite.

Everything in here is deliberately written from first principles (path
enumeration, exhaustive search, plain gradient methods) and shares no code
with the package internals it checks.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from sartre.graph import Dag

# -- exhaustive DAG enumeration ----------------------------------------------


def all_dags(d: int) -> list[Dag]:
    """Every labeled DAG on d nodes (1 for d=1, 3 for d=2, 25, 543...)."""
    pairs = [(j, i) for j in range(1, d + 1) for i in range(1, d + 1) if j != i]
    out = []
    for mask in range(1 << len(pairs)):
        edges = [pairs[k] for k in range(len(pairs)) if mask >> k & 1]
        eset = set(edges)
        if any((i, j) in eset for j, i in edges):
            continue
        if _is_acyclic(d, edges):
            out.append(Dag(d, edges))
    return out


def _is_acyclic(d: int, edges) -> bool:
    ch = {v: [] for v in range(1, d + 1)}
    indeg = {v: 0 for v in range(1, d + 1)}
    for j, i in edges:
        ch[j].append(i)
        indeg[i] += 1
    ready = [v for v in indeg if indeg[v] == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for u in ch[v]:
            indeg[u] -= 1
            if indeg[u] == 0:
                ready.append(u)
    return seen == d


# -- path-based d-separation and the adjustment criterion ---------------------


def descendants_bf(edges: set, v: int) -> set[int]:
    """Strict descendants by repeated edge relaxation."""
    out: set[int] = set()
    frontier = {i for j, i in edges if j == v}
    while frontier:
        out |= frontier
        frontier = {i for j, i in edges if j in frontier} - out
    return out


def all_paths(d: int, edges: set, a: int, b: int) -> list[list[int]]:
    """All simple paths between a and b walking edges in either direction."""
    nbrs = {v: set() for v in range(1, d + 1)}
    for j, i in edges:
        nbrs[j].add(i)
        nbrs[i].add(j)
    paths = []

    def extend(path):
        tail = path[-1]
        if tail == b:
            paths.append(list(path))
            return
        for nxt in sorted(nbrs[tail]):
            if nxt not in path:
                path.append(nxt)
                extend(path)
                path.pop()

    extend([a])
    return paths


def path_is_causal(edges: set, path: list[int]) -> bool:
    return all((path[k], path[k + 1]) in edges for k in range(len(path) - 1))


def path_blocked(edges: set, path: list[int], z: set[int]) -> bool:
    """Standard per-path blocking rules applied literally."""
    for k in range(1, len(path) - 1):
        prev, node, nxt = path[k - 1], path[k], path[k + 1]
        incoming_prev = (prev, node) in edges
        incoming_next = (nxt, node) in edges
        if incoming_prev and incoming_next:  # collider
            if node not in z and not (descendants_bf(edges, node) & z):
                return True
        else:  # chain or fork
            if node in z:
                return True
    return False


def dsep_bf(g: Dag, a: int, b: int, z: set[int]) -> bool:
    edges = set(g.edges)
    return all(
        path_blocked(edges, p, set(z)) for p in all_paths(g.num_vars, edges, a, b)
    )


def intervention_correct_bf(truth: Dag, i: int, j: int, z: frozenset[int]) -> bool:
    """Adjustment-criterion oracle by literal path enumeration.

    j in z: the claim is a null effect, correct iff j is not a descendant
    of i. Otherwise z is valid iff it avoids descendants of causal-path
    nodes and blocks every non-causal path between i and j.
    """
    edges = set(truth.edges)
    if j in z:
        return j not in descendants_bf(edges, i)
    paths = all_paths(truth.num_vars, edges, i, j)
    causal_nodes: set[int] = set()
    noncausal = []
    for p in paths:
        if path_is_causal(edges, p):
            causal_nodes |= set(p[1:])
        else:
            noncausal.append(p)
    forbidden = set(causal_nodes)
    for w in causal_nodes:
        forbidden |= descendants_bf(edges, w)
    if z & forbidden:
        return False
    return all(path_blocked(edges, p, set(z)) for p in noncausal)


def sid_bf(truth: Dag, est: Dag) -> int:
    total = 0
    for i in range(1, truth.num_vars + 1):
        z = frozenset(est.parents(i))
        for j in range(1, truth.num_vars + 1):
            if i != j and not intervention_correct_bf(truth, i, j, z):
                total += 1
    return total


def all_condition_sets(d: int, exclude: tuple[int, ...]) -> list[frozenset[int]]:
    rest = [v for v in range(1, d + 1) if v not in exclude]
    out = []
    for r in range(len(rest) + 1):
        out.extend(frozenset(c) for c in combinations(rest, r))
    return out


# -- group lasso reference minimizer ------------------------------------------


def reference_group_lasso(
    X: np.ndarray,
    y: np.ndarray,
    groups: list[tuple[int, int]],
    lam: float,
    loss_scale: str = "mean",
    iters: int = 1_000_000,
) -> np.ndarray:
    """Plain proximal-gradient reference for
    (c/2)||y_c - X b||^2 + lam * sum_g ||b_g||, c = 1/n ("mean") or 2 ("sum").

    Slow on purpose; used to freeze reference objective values.
    """
    n, p = X.shape
    c = 1.0 / n if loss_scale == "mean" else 2.0
    yc = y - y.mean()
    G = X.T @ X
    q = X.T @ yc
    lip = c * float(np.linalg.eigvalsh(G)[-1])
    step = 1.0 / lip
    b = np.zeros(p)
    for _ in range(iters):
        u = b - step * c * (G @ b - q)
        for s, length in groups:
            blk = u[s : s + length]
            nrm = float(np.linalg.norm(blk))
            if nrm <= step * lam:
                blk[:] = 0.0
            else:
                blk *= 1.0 - step * lam / nrm
        b = u
    return b


def group_lasso_objective(
    X: np.ndarray,
    y: np.ndarray,
    groups: list[tuple[int, int]],
    lam: float,
    b: np.ndarray,
    loss_scale: str = "mean",
) -> float:
    n = X.shape[0]
    c = 1.0 / n if loss_scale == "mean" else 2.0
    yc = y - y.mean()
    r = yc - X @ b
    pen = sum(float(np.linalg.norm(b[s : s + L])) for s, L in groups)
    return 0.5 * c * float(r @ r) + lam * pen
