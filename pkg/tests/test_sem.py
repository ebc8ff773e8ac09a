import math

import numpy as np
import pytest
from hypothesis import given

import oracles
from adjrobust import (
    Dag,
    Dataset,
    ErrorFamily,
    SemModel,
    build_dag,
    derive_seed,
    descendants,
    enumerate_all_valid,
    format_sem,
    parse_sem,
    perturb_graph,
    population_beta,
    population_covariance,
    population_sigma_gaussian,
    random_dag,
    random_sem,
    sample_data,
    sample_xy_pair,
    total_effect,
)
from adjrobust.errors import (
    NoEligiblePair,
    ParseError,
    SingularSystem,
    UnknownNode,
    UnsupportedFamily,
)
from adjrobust.sem import dataset_from_csv, dataset_to_csv
from conftest import small_dags
from demo_models import (
    BIASED_AGREEING_SETS,
    NESTED_COLLECTION,
    NESTED_SIGMA,
    demo_graph,
    demo_graph_missing_edge,
    demo_sem,
)


def unit_chain(alphas=(1.0,)):
    labels = [f"C{i}" for i in range(len(alphas) + 1)]
    edges = list(zip(labels, labels[1:]))
    coeffs = dict(zip(edges, alphas))
    return SemModel(
        Dag(labels, edges), coeffs, {v: 1.0 for v in labels}
    )


class TestModelValidation:
    def test_coefficients_must_match_edges(self):
        g = build_dag(["X", "Y"], [("X", "Y")])
        with pytest.raises(ParseError):
            SemModel(g, {}, {"X": 1.0, "Y": 1.0})

    def test_variances_positive(self):
        g = build_dag(["X", "Y"], [("X", "Y")])
        with pytest.raises(ParseError):
            SemModel(g, {("X", "Y"): 1.0}, {"X": 1.0, "Y": 0.0})


class TestPopulationCovariance:
    def test_single_edge(self):
        m = unit_chain()
        cov = population_covariance(m)
        assert np.allclose(cov, [[1.0, 1.0], [1.0, 2.0]], atol=1e-12)

    def test_no_edges_gives_diagonal(self):
        g = build_dag(["A", "B"], [])
        m = SemModel(g, {}, {"A": 2.0, "B": 3.0})
        assert np.allclose(population_covariance(m), np.diag([2.0, 3.0]))

    def test_demo_treatment_variance(self):
        # X = A1 + B1 + V + e with Var(B1) = 2, rest 1
        m = demo_sem()
        cov = population_covariance(m)
        i = m.graph.nodes.index("X")
        assert abs(cov[i, i] - 5.0) < 1e-12

    def test_matches_monte_carlo_every_family(self):
        g = random_dag(5, 3, seed=11)
        base = random_sem(g, seed=12)
        n = 1_000_000
        for family in ErrorFamily:
            m = SemModel(g, base.coefficients, base.error_variances, family)
            cov = population_covariance(m)
            data = sample_data(m, n, seed=13)
            vals = data.values - data.values.mean(axis=0)
            sample_cov = vals.T @ vals / n
            # entrywise 5 standard errors, SE taken from the products
            for i in range(5):
                for j in range(5):
                    prods = vals[:, i] * vals[:, j]
                    se = prods.std() / math.sqrt(n)
                    assert abs(sample_cov[i, j] - cov[i, j]) < 5 * se + 1e-12


class TestTotalEffect:
    def test_demo_is_one(self):
        assert abs(total_effect(demo_sem(), "X", "Y") - 1.0) < 1e-12

    def test_chain_products(self):
        m = unit_chain((2.0, 3.0))
        assert abs(total_effect(m, "C0", "C2") - 6.0) < 1e-12

    def test_zero_when_not_descendant(self):
        assert total_effect(demo_sem(), "F", "X") == 0.0

    def test_unknown_node(self):
        with pytest.raises(UnknownNode):
            total_effect(demo_sem(), "X", "Q")

    @given(small_dags(max_nodes=7))
    def test_matches_path_tracing(self, g):
        m = random_sem(g, seed=5)
        nodes = sorted(g.nodes)
        x, y = nodes[0], nodes[-1]
        assert abs(
            total_effect(m, x, y) - oracles.wright_total_effect(m, x, y)
        ) < 1e-9


class TestPopulationBeta:
    def test_biased_agreeing_sets(self):
        m = demo_sem()
        for z in BIASED_AGREEING_SETS:
            assert abs(population_beta(m, "Y", "X", z) - 1.25) < 1e-9

    def test_instrument_only(self):
        assert abs(population_beta(demo_sem(), "Y", "X", {"V"}) - 1.5) < 1e-9

    def test_valid_set_recovers_total_effect(self):
        m = demo_sem()
        for z in enumerate_all_valid(m.graph, "X", "Y"):
            assert abs(population_beta(m, "Y", "X", z) - 1.0) < 1e-9

    def test_collinear_covariates_rejected(self):
        g = build_dag(["X", "Y", "W"], [("X", "Y"), ("X", "W")])
        m = SemModel(
            g,
            {("X", "Y"): 1.0, ("X", "W"): 1.0},
            {"X": 1.0, "Y": 1.0, "W": 1e-14},
        )
        with pytest.raises(SingularSystem):
            population_beta(m, "Y", "X", {"W"})


class TestSigmaGaussian:
    def test_nested_collection_matrix(self):
        sig = population_sigma_gaussian(demo_sem(), "X", "Y", NESTED_COLLECTION)
        assert np.abs(sig - NESTED_SIGMA).max() < 1e-9

    def test_single_valid_set_is_variance_ratio(self):
        m = demo_sem()
        z = frozenset({"A1", "B1"})
        sig = population_sigma_gaussian(m, "X", "Y", [z])
        # residual of X on {A1,B1} is V + e_x; residual of Y on (X,{A1,B1})
        # has variance Sigma_11 * Var(delta_x)
        assert sig.shape == (1, 1)
        assert abs(sig[0, 0] - NESTED_SIGMA[0, 0]) < 1e-9

    def test_duplicate_sets_rank_deficient(self):
        z = frozenset({"A1", "B1"})
        sig = population_sigma_gaussian(demo_sem(), "X", "Y", [z, z])
        assert abs(sig[0, 0] - sig[0, 1]) < 1e-12
        assert abs(np.linalg.eigvalsh(sig)[0]) < 1e-12

    def test_non_gaussian_rejected(self):
        m = demo_sem()
        heavy = SemModel(
            m.graph, m.coefficients, m.error_variances, ErrorFamily.STUDENT_T5
        )
        with pytest.raises(UnsupportedFamily):
            population_sigma_gaussian(heavy, "X", "Y", NESTED_COLLECTION)

    def test_symmetric_psd(self):
        sig = population_sigma_gaussian(demo_sem(), "X", "Y", NESTED_COLLECTION)
        assert np.allclose(sig, sig.T)
        assert np.linalg.eigvalsh(sig).min() > -1e-9


class TestSampling:
    def test_zero_rows_rejected(self):
        with pytest.raises(ValueError):
            sample_data(demo_sem(), 0, seed=1)

    def test_one_row(self):
        assert sample_data(demo_sem(), 1, seed=1).values.shape == (1, 10)

    def test_seed_reproducibility(self):
        a = sample_data(demo_sem(), 50, seed=42)
        b = sample_data(demo_sem(), 50, seed=42)
        assert np.array_equal(a.values, b.values)
        assert a.columns == b.columns

    def test_outcome_variance_of_single_edge_model(self):
        m = unit_chain()
        data = sample_data(m, 1_000_000, seed=7)
        assert abs(np.var(data.column("C1")) - 2.0) < 0.02

    def test_family_variances_match_request(self):
        g = build_dag(["A"], [])
        for family in ErrorFamily:
            m = SemModel(g, {}, {"A": 0.9}, family)
            data = sample_data(m, 400_000, seed=3)
            assert abs(np.var(data.column("A")) - 0.9) < 0.02


class TestRandomGeneration:
    def test_two_nodes_always_connected(self):
        for seed in range(10):
            assert len(random_dag(2, 1, seed=seed).edges) == 1

    def test_mean_edge_count(self):
        counts = [len(random_dag(10, 4, seed=s).edges) for s in range(10_000)]
        assert abs(float(np.mean(counts)) - 20.0) < 1.0

    def test_random_dag_deterministic(self):
        assert random_dag(8, 3, seed=9) == random_dag(8, 3, seed=9)

    def test_coefficients_in_band(self):
        g = random_dag(10, 4, seed=21)
        m = random_sem(g, seed=22)
        for a in m.coefficients.values():
            assert 0.1 <= abs(a) <= 2.0

    def test_variance_envelope(self):
        for seed in range(40):
            m = random_sem(random_dag(6, 3, seed=seed), seed=seed)
            for v in m.error_variances.values():
                assert 0.3 <= v <= 1.7

    def test_random_sem_deterministic(self):
        g = random_dag(6, 3, seed=1)
        m1, m2 = random_sem(g, seed=2), random_sem(g, seed=2)
        assert m1.coefficients == m2.coefficients
        assert m1.error_variances == m2.error_variances
        assert m1.error_family == m2.error_family


class TestPairSampling:
    def test_fork_with_spare_leaf(self):
        # only V1 has proper descendants, so it is always the treatment
        g = build_dag(["V1", "V2", "V3"], [("V1", "V2"), ("V1", "V3")])
        for seed in range(10):
            x, y = sample_xy_pair(g, seed=seed)
            assert x == "V1"
            assert y in {"V2", "V3"}

    def test_demo_pair_is_eligible(self):
        g = demo_graph()
        for seed in range(5):
            x, y = sample_xy_pair(g, seed=seed)
            assert y in descendants(g, x) - {x}
            assert len(enumerate_all_valid(g, x, y)) >= 2

    def test_rejects_when_no_second_set_exists(self):
        g = build_dag(["X", "Y"], [("X", "Y")])
        with pytest.raises(NoEligiblePair):
            sample_xy_pair(g, seed=0)

    def test_rejects_edgeless_graph(self):
        g = build_dag(["A", "B"], [])
        with pytest.raises(NoEligiblePair):
            sample_xy_pair(g, seed=0)


class TestPerturbation:
    def test_zero_ops_identity(self):
        g = demo_graph()
        assert perturb_graph(g, 0, seed=1) == g

    def test_single_deletion_reaches_missing_edge_variant(self):
        g = demo_graph()
        edges = set(g.edges) - {("B2", "B1")}
        assert Dag(g.nodes, edges) == demo_graph_missing_edge()

    def test_output_always_acyclic(self):
        g = demo_graph()
        for seed in range(25):
            perturbed = perturb_graph(g, 3, seed=seed)  # Dag() validates
            assert set(perturbed.nodes) == set(g.nodes)

    def test_deterministic(self):
        g = demo_graph()
        assert perturb_graph(g, 2, seed=5) == perturb_graph(g, 2, seed=5)


class TestSeedDerivation:
    def test_stable(self):
        assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)

    def test_distinct_paths_differ(self):
        seeds = {derive_seed(1, i) for i in range(100)}
        assert len(seeds) == 100


class TestTextFormats:
    def test_sem_round_trip(self):
        m = demo_sem()
        back = parse_sem(format_sem(m))
        assert back.graph == m.graph
        assert back.coefficients == m.coefficients
        assert back.error_variances == m.error_variances
        assert back.error_family == m.error_family

    def test_sem_round_trip_random_families(self):
        for seed in range(8):
            m = random_sem(random_dag(6, 3, seed=seed), seed=seed)
            back = parse_sem(format_sem(m))
            assert back.coefficients == m.coefficients
            assert back.error_family == m.error_family

    def test_sem_parse_errors(self):
        with pytest.raises(ParseError):
            parse_sem("node A : var=abc\n")
        with pytest.raises(ParseError):
            parse_sem("A -> B : 1.0\n")  # nodes lack var declarations
        with pytest.raises(ParseError):
            parse_sem(
                "node A : var=1.0 dist=normal\nnode B : var=1.0 dist=uniform\n"
            )

    def test_dataset_csv_round_trip_is_exact(self):
        data = sample_data(demo_sem(), 20, seed=5)
        back = dataset_from_csv(dataset_to_csv(data))
        assert back.columns == data.columns
        assert np.array_equal(back.values, data.values)

    def test_dataset_missing_value_rejected(self):
        with pytest.raises(ParseError):
            dataset_from_csv("a,b\n1.0,\n")

    def test_dataset_requires_rows(self):
        with pytest.raises(ParseError):
            dataset_from_csv("a,b\n")

    def test_dataset_unique_columns(self):
        with pytest.raises(ParseError):
            Dataset(("a", "a"), np.zeros((2, 2)))
