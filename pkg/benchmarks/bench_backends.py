"""Benchmark the compiled BCD kernel against the numpy fallback.

Builds pruning-shaped problems (binary tree embeddings, 40 columns per
candidate parent) and times solve_group_lasso under each backend.

    python benchmarks/bench_backends.py
"""

import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

import numpy as np

from sartre.embed import TreeConfig, embed_column, fit_randomized_trees
from sartre.grouplasso import (
    GroupedDesign,
    available_backends,
    lambda_max,
    solve_group_lasso,
)


def build_instance(num_parents: int, n: int, seed: int):
    rng = np.random.default_rng(seed)
    blocks = []
    for v in range(1, num_parents + 1):
        col = rng.standard_normal(n)
        rset = fit_randomized_trees(col, TreeConfig(seed=seed + v), var=v)
        blocks.append((v, embed_column(col, rset)))
    design = GroupedDesign.from_blocks(blocks)
    y = (
        np.sin(2.0 * design.block(0)[:, :1].sum(axis=1))
        + rng.standard_normal(n) * 0.5
    )
    return design, y


def time_solve(design, y, lam, backend, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        _, report = solve_group_lasso(design, y, lam, tol=1e-6, backend=backend)
        best = min(best, time.perf_counter() - t0)
        assert report.converged
    return best


def main() -> None:
    backends = available_backends()
    print(f"available backends: {', '.join(backends)}")
    if "cython" not in backends:
        print("compiled kernel not built; run `python setup.py build_ext --inplace`")
    print(f"{'parents':>8} {'n':>6} {'p':>6} {'lam/lmax':>9}",
          *(f"{b:>12}" for b in backends),
          f"{'speedup':>9}" if len(backends) > 1 else "")
    cases = (
        (5, 1000, 0.3),
        (10, 2000, 0.3),
        (20, 2000, 0.3),
        (49, 2000, 0.3),
        # low regularization: many active groups, inner iterations dominate
        (20, 2000, 0.05),
        (20, 2000, 0.01),
    )
    for num_parents, n, frac in cases:
        design, y = build_instance(num_parents, n, seed=7)
        lam = frac * lambda_max(design, y)
        times = [time_solve(design, y, lam, b) for b in backends]
        row = f"{num_parents:>8} {n:>6} {design.p:>6} {frac:>9}"
        for t in times:
            row += f" {t * 1000:>10.1f}ms"
        if len(times) > 1:
            row += f" {times[1] / times[0]:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
