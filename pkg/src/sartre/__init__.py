"""Order-based causal structure learning: score-matching topological
ordering plus edge pruning via randomized tree embeddings and group lasso.
"""

from .graph import (
    Dag,
    GraphMetrics,
    TopologicalOrder,
    d_separated,
    edge_prf,
    evaluate,
    full_dag_from_order,
    gen_erdos_renyi,
    gen_scale_free,
    shd,
    sid,
)
from .synthgen import (
    AnmSpec,
    Dataset,
    ingest_csv,
    make_anm_spec,
    make_mixed_spec,
    sample_anm,
)
from .embed import IntervalSet, TreeConfig, embed, embed_dataset, fit_randomized_trees
from .grouplasso import (
    GroupedCoefficients,
    GroupedDesign,
    SolveReport,
    lambda_max,
    solve_group_lasso,
)
from .ordering import SteinConfig, estimate_order, leaf_statistics, stein_score
from .prune import SartreConfig, fit_sartre, flatten_shape, sartre_prune

__version__ = "0.1.0"
