"""Desk-scale simulation harness: calibration and power of the test.

The double scheme mirrors how the procedure is used: draw a true DAG and
a compatible SEM, pick a treatment/outcome pair, derive plausible wrong
candidate graphs by random edits (tagged high accuracy for one edit, low
for three), then for every candidate, strategy and sample size run the
test on many fresh datasets. Each (candidate, strategy, n) cell reports
its p-values, the area under the p-p curve against the uniform, and the
rejection rate at the 5% level, alongside the population-level hypothesis
class computed from the true SEM.
"""

from __future__ import annotations

import configparser
import csv
import io
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .adjustment import AdjustmentCollection, Strategy, as_set_list
from .errors import CapExceeded, ConfigError, EmptyInput, NoEligiblePair, OutOfRange
from .graph import Dag, descendants
from .inference import run_test
from .sem import (
    SemModel,
    derive_seed,
    perturb_graph,
    population_beta,
    random_dag,
    random_sem,
    sample_data,
    sample_xy_pair,
    total_effect,
)

_EDITS = {"high": 1, "low": 3}
_MODEL_ATTEMPTS = 25
_BETA_TOL = 1e-9


class HypothesisClass(str, Enum):
    H0_STAR = "h0_star"  # all adjusted coefficients equal the total effect
    H0_NOT_H0_STAR = "h0_not_h0_star"  # mutually equal but biased
    NOT_H0 = "not_h0"  # coefficients disagree


def classify_hypothesis(
    true_sem: SemModel,
    zc: AdjustmentCollection | Sequence[Iterable[str]],
    x: str,
    y: str,
) -> HypothesisClass:
    """Population-level status of a collection under the true model."""
    sets = as_set_list(zc)
    if not sets:
        raise EmptyInput("empty collection")
    betas = [population_beta(true_sem, y, x, s) for s in sets]
    tau = total_effect(true_sem, x, y)
    all_equal = all(abs(b - betas[0]) <= _BETA_TOL for b in betas)
    if all_equal and all(abs(b - tau) <= _BETA_TOL for b in betas):
        return HypothesisClass.H0_STAR
    if all_equal:
        return HypothesisClass.H0_NOT_H0_STAR
    return HypothesisClass.NOT_H0


def auc_pp(p_values: Sequence[float]) -> float:
    """Area under the p-p curve of the sample against the uniform.

    The sorted p-values are plotted against the empirical distribution
    function, with (0, 0) prepended and (1, 1) appended; the area is
    trapezoidal. Near 0.5 for uniform p-values, near 1 for p-values
    concentrated at zero.
    """
    if len(p_values) < 2:
        raise EmptyInput("need at least two p-values")
    ps = np.sort(np.asarray(p_values, dtype=float))
    if ps[0] < 0.0 or ps[-1] > 1.0:
        raise OutOfRange("p-values must lie in [0, 1]")
    r = len(ps)
    xs = np.concatenate(([0.0], ps, [1.0]))
    ys = np.concatenate(([0.0], np.arange(1, r + 1) / r, [1.0]))
    return float(np.trapezoid(ys, xs))


@dataclass(frozen=True)
class SimConfig:
    """Grid for the experiment; see ``configs/`` for ready-made files."""

    graph_sizes: tuple[int, ...] = (10,)
    neighborhood_sizes: tuple[int, ...] = (2, 3, 4, 5)
    n_models: int = 2
    n_candidates_per_model: int = 4
    test_sample_sizes: tuple[int, ...] = (100, 400)
    replications_per_cell: int = 20
    strategies: tuple[Strategy, ...] = (Strategy.MIN_PLUS,)
    base_seed: int = 7
    discard_rank1: bool = False

    def __post_init__(self):
        if not self.graph_sizes or min(self.graph_sizes) < 2:
            raise ConfigError("graph_sizes must all be >= 2")
        if not self.neighborhood_sizes or min(self.neighborhood_sizes) < 1:
            raise ConfigError("neighborhood_sizes must all be >= 1")
        for name in ("n_models", "n_candidates_per_model"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not self.test_sample_sizes or min(self.test_sample_sizes) < 10:
            raise ConfigError("test_sample_sizes must all be >= 10")
        if self.replications_per_cell < 20:
            raise ConfigError("replications_per_cell must be >= 20 for AUC cells")
        if not self.strategies:
            raise ConfigError("at least one strategy required")


@dataclass(frozen=True)
class CellResult:
    """Outcome of one (model, candidate, strategy, n) cell."""

    graph_size: int
    neighborhood: int
    model_index: int
    candidate_index: int
    accuracy: str
    strategy: str
    n: int
    k: int
    hypothesis_class: str
    p_values: tuple[float, ...]
    auc: float
    rejection_rate_05: float


@dataclass
class ExperimentResult:
    cells: list[CellResult] = field(default_factory=list)
    untestable: int = 0
    discarded_rank1: int = 0


def _high_or_low(candidate_index: int) -> str:
    return "high" if candidate_index % 2 == 0 else "low"


def _draw_model(cfg: SimConfig, graph_size: int, model_index: int):
    """True DAG, SEM and pair; retried until a testable pair exists."""
    for attempt in range(_MODEL_ATTEMPTS):
        seed = derive_seed(cfg.base_seed, 1, graph_size, model_index, attempt)
        rng = np.random.default_rng(seed)
        neighborhood = int(
            cfg.neighborhood_sizes[rng.integers(len(cfg.neighborhood_sizes))]
        )
        dag = random_dag(graph_size, neighborhood, derive_seed(seed, 2))
        sem = random_sem(dag, derive_seed(seed, 3))
        try:
            x, y = sample_xy_pair(dag, derive_seed(seed, 4))
        except (NoEligiblePair, CapExceeded):
            continue
        return dag, sem, x, y, neighborhood
    raise NoEligiblePair(
        f"no usable model of size {graph_size} in {_MODEL_ATTEMPTS} attempts"
    )


def run_experiment(cfg: SimConfig) -> ExperimentResult:
    """Run the full grid; deterministic given the config (incl. base_seed)."""
    result = ExperimentResult()
    for graph_size in cfg.graph_sizes:
        for model_index in range(cfg.n_models):
            dag, sem, x, y, neighborhood = _draw_model(cfg, graph_size, model_index)
            for candidate_index in range(cfg.n_candidates_per_model):
                accuracy = _high_or_low(candidate_index)
                cand_seed = derive_seed(
                    cfg.base_seed, 5, graph_size, model_index, candidate_index
                )
                candidate = perturb_graph(dag, _EDITS[accuracy], cand_seed)
                for strategy in cfg.strategies:
                    _candidate_cells(
                        cfg,
                        result,
                        sem,
                        candidate,
                        x,
                        y,
                        strategy,
                        graph_size,
                        neighborhood,
                        model_index,
                        candidate_index,
                        accuracy,
                    )
    return result


def _candidate_cells(
    cfg: SimConfig,
    result: ExperimentResult,
    sem: SemModel,
    candidate: Dag,
    x: str,
    y: str,
    strategy: Strategy,
    graph_size: int,
    neighborhood: int,
    model_index: int,
    candidate_index: int,
    accuracy: str,
) -> None:
    from .inference import build_collection

    if y not in descendants(candidate, x):
        result.untestable += 1
        return
    try:
        zc, fallback = build_collection(candidate, x, y, strategy)
    except CapExceeded:
        result.untestable += 1
        return
    if fallback:
        # the harness studies strategies separately, no silent fallback
        result.untestable += 1
        return
    if len(zc) < 2:
        result.untestable += 1
        return
    hclass = classify_hypothesis(sem, zc, x, y)
    strat_tag = 0 if strategy is Strategy.MIN_PLUS else 1
    for n in cfg.test_sample_sizes:
        p_values = []
        for rep in range(cfg.replications_per_cell):
            data_seed = derive_seed(
                cfg.base_seed,
                6,
                graph_size,
                model_index,
                candidate_index,
                strat_tag,
                n,
                rep,
            )
            data = sample_data(sem, n, data_seed)
            report = run_test(
                candidate, x, y, data, strategy=strategy, collection=zc
            )
            if not report.tested:
                continue
            if (
                cfg.discard_rank1
                and strategy is Strategy.ALL
                and report.rank_used == 1
            ):
                result.discarded_rank1 += 1
                continue
            p_values.append(report.p_value)
        if len(p_values) < 2:
            result.untestable += 1
            continue
        result.cells.append(
            CellResult(
                graph_size=graph_size,
                neighborhood=neighborhood,
                model_index=model_index,
                candidate_index=candidate_index,
                accuracy=accuracy,
                strategy=strategy.value,
                n=n,
                k=len(zc),
                hypothesis_class=hclass.value,
                p_values=tuple(p_values),
                auc=auc_pp(p_values),
                rejection_rate_05=float(np.mean(np.asarray(p_values) < 0.05)),
            )
        )


TableKey = tuple[str, int, str, str]  # accuracy, n, strategy, hypothesis class


def rejection_table(cells: Iterable[CellResult]) -> dict[TableKey, float]:
    """Rejection proportions keyed by (accuracy, n, strategy, class).

    Cells are combined by a mean weighted with their number of p-values.
    """
    sums: dict[TableKey, float] = {}
    weights: dict[TableKey, float] = {}
    for cell in cells:
        key = (cell.accuracy, cell.n, cell.strategy, cell.hypothesis_class)
        w = len(cell.p_values)
        sums[key] = sums.get(key, 0.0) + cell.rejection_rate_05 * w
        weights[key] = weights.get(key, 0.0) + w
    return {key: sums[key] / weights[key] for key in sums}


def format_rejection_table(table: dict[TableKey, float]) -> str:
    """Readable rendering, one line per table entry."""
    lines = ["accuracy  n     strategy  class            rejection"]
    for key in sorted(table):
        accuracy, n, strategy, hclass = key
        lines.append(
            f"{accuracy:<9} {n:<5} {strategy:<9} {hclass:<16} {table[key]:.4f}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# config files and result serialization
# ---------------------------------------------------------------------------


def _int_list(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in raw.split())
    except ValueError as exc:
        raise ConfigError(f"expected integers, got {raw!r}") from exc


def load_config(path: str) -> SimConfig:
    """Read a SimConfig from an INI file with an [experiment] section."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    if not parser.has_section("experiment"):
        raise ConfigError("config needs an [experiment] section")
    section = parser["experiment"]
    known = {
        "graph_sizes",
        "neighborhood_sizes",
        "n_models",
        "n_candidates_per_model",
        "test_sample_sizes",
        "replications_per_cell",
        "strategies",
        "base_seed",
        "discard_rank1",
    }
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    kwargs = {}
    for key in ("graph_sizes", "neighborhood_sizes", "test_sample_sizes"):
        if key in section:
            kwargs[key] = _int_list(section[key])
    for key in ("n_models", "n_candidates_per_model", "replications_per_cell", "base_seed"):
        if key in section:
            try:
                kwargs[key] = section.getint(key)
            except ValueError as exc:
                raise ConfigError(f"{key} must be an integer") from exc
    if "strategies" in section:
        try:
            kwargs["strategies"] = tuple(
                Strategy(tok) for tok in section["strategies"].split()
            )
        except ValueError as exc:
            raise ConfigError(f"bad strategy: {exc}") from exc
        if any(s is Strategy.USER for s in kwargs["strategies"]):
            raise ConfigError("strategies must be 'all' or 'minplus'")
    if "discard_rank1" in section:
        try:
            kwargs["discard_rank1"] = section.getboolean("discard_rank1")
        except ValueError as exc:
            raise ConfigError("discard_rank1 must be a boolean") from exc
    return SimConfig(**kwargs)


_CSV_FIELDS = [
    "graph_size",
    "neighborhood",
    "model_index",
    "candidate_index",
    "accuracy",
    "strategy",
    "n",
    "k",
    "hypothesis_class",
    "n_p_values",
    "auc",
    "rejection_rate_05",
]


def cells_to_csv(cells: Iterable[CellResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(_CSV_FIELDS)
    for cell in cells:
        writer.writerow(
            [
                cell.graph_size,
                cell.neighborhood,
                cell.model_index,
                cell.candidate_index,
                cell.accuracy,
                cell.strategy,
                cell.n,
                cell.k,
                cell.hypothesis_class,
                len(cell.p_values),
                repr(cell.auc),
                repr(cell.rejection_rate_05),
            ]
        )
    return buf.getvalue()


def experiment_summary(cfg: SimConfig, result: ExperimentResult) -> dict:
    table = rejection_table(result.cells)
    return {
        "config": {
            "graph_sizes": list(cfg.graph_sizes),
            "neighborhood_sizes": list(cfg.neighborhood_sizes),
            "n_models": cfg.n_models,
            "n_candidates_per_model": cfg.n_candidates_per_model,
            "test_sample_sizes": list(cfg.test_sample_sizes),
            "replications_per_cell": cfg.replications_per_cell,
            "strategies": [s.value for s in cfg.strategies],
            "base_seed": cfg.base_seed,
            "discard_rank1": cfg.discard_rank1,
        },
        "n_cells": len(result.cells),
        "untestable": result.untestable,
        "discarded_rank1": result.discarded_rank1,
        "rejection_table": [
            {
                "accuracy": key[0],
                "n": key[1],
                "strategy": key[2],
                "hypothesis_class": key[3],
                "rate": table[key],
            }
            for key in sorted(table)
        ],
    }


def pp_data(cells: Iterable[CellResult]) -> dict:
    """Sorted p-values per cell, keyed for external plotting."""
    out = {}
    for cell in cells:
        key = (
            f"size{cell.graph_size}-m{cell.model_index}-c{cell.candidate_index}"
            f"-{cell.accuracy}-{cell.strategy}-n{cell.n}"
        )
        out[key] = sorted(cell.p_values)
    return out
