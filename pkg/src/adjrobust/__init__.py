"""Robustness checks for covariate adjustment in linear SEMs.

Given a candidate causal DAG and a treatment/outcome pair, every valid
adjustment set identifies the same total effect if the graph is right.
This package enumerates such sets, tests the implied over-identifying
constraint on data, and ships a simulation harness for calibration and
power studies.
"""

from .adjustment import (
    AdjustmentCollection,
    Strategy,
    enumerate_all_valid,
    enumerate_minimal_valid,
    min_plus_collection,
    prune_distinct,
)
from .graph import (
    Dag,
    ancestors,
    build_dag,
    causal_nodes,
    children,
    d_separated,
    descendants,
    forbidden_nodes,
    format_graph,
    is_valid_adjustment_set,
    non_forbidden_nodes,
    parents,
    parse_graph,
    proper_backdoor_graph,
)
from .harness import (
    CellResult,
    HypothesisClass,
    SimConfig,
    auc_pp,
    classify_hypothesis,
    rejection_table,
    run_experiment,
)
from .inference import (
    CoefficientStack,
    ContrastSpec,
    TestReport,
    coefficient_stack,
    contrast_matrix,
    estimate_rank_pseudo_mdf,
    mp_inverse_rank_r,
    ols_fit,
    run_test,
    sigma_hat,
    test_statistic,
)
from .sem import (
    Dataset,
    ErrorFamily,
    SemModel,
    derive_seed,
    format_sem,
    load_dataset,
    parse_sem,
    perturb_graph,
    population_beta,
    population_covariance,
    population_sigma_gaussian,
    random_dag,
    random_sem,
    sample_data,
    sample_xy_pair,
    save_dataset,
    total_effect,
)

__version__ = "0.1.0"

__all__ = [
    "AdjustmentCollection",
    "CellResult",
    "CoefficientStack",
    "ContrastSpec",
    "Dag",
    "Dataset",
    "ErrorFamily",
    "HypothesisClass",
    "SemModel",
    "SimConfig",
    "Strategy",
    "TestReport",
    "ancestors",
    "auc_pp",
    "build_dag",
    "causal_nodes",
    "children",
    "classify_hypothesis",
    "coefficient_stack",
    "contrast_matrix",
    "d_separated",
    "derive_seed",
    "descendants",
    "enumerate_all_valid",
    "enumerate_minimal_valid",
    "estimate_rank_pseudo_mdf",
    "forbidden_nodes",
    "format_graph",
    "format_sem",
    "is_valid_adjustment_set",
    "load_dataset",
    "min_plus_collection",
    "mp_inverse_rank_r",
    "non_forbidden_nodes",
    "ols_fit",
    "parents",
    "parse_graph",
    "parse_sem",
    "perturb_graph",
    "population_beta",
    "population_covariance",
    "population_sigma_gaussian",
    "proper_backdoor_graph",
    "prune_distinct",
    "random_dag",
    "random_sem",
    "rejection_table",
    "run_experiment",
    "run_test",
    "sample_data",
    "sample_xy_pair",
    "save_dataset",
    "sigma_hat",
    "test_statistic",
    "total_effect",
]
