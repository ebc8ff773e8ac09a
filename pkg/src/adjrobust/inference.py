"""Over-identification test for total effects estimated by adjustment.

Given a candidate graph, a treatment/outcome pair and data, the test fits
the adjusted regression for every set in a collection of valid adjustment
sets, estimates the joint asymptotic covariance of the stacked
coefficients from regression residuals, contrasts successive coefficients,
and compares the resulting Wald-type statistic against a chi-square whose
degrees of freedom equal the (estimated or fixed) rank of the contrasted
covariance.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc

from .adjustment import (
    AdjustmentCollection,
    Strategy,
    as_set_list,
    enumerate_all_valid,
    min_plus_collection,
    x_connected_remainder,
)
from .errors import (
    CapExceeded,
    ColumnMismatch,
    DegenerateResiduals,
    InsufficientSamples,
    KTooSmall,
    NearZeroLeadingEigenvalue,
    RankDeficientDesign,
    RankExceedsDim,
)
from .graph import Dag, descendants
from .sem import Dataset

EIGENVALUE_FLOOR = 1e-12  # relative to the largest eigenvalue
_RESIDUAL_FLOOR = 1e-18  # mean squared residual below this is degenerate

UNTESTABLE_NOT_DESCENDANT = "outcome-not-descendant"
UNTESTABLE_TOO_FEW_SETS = "fewer-than-two-adjustment-sets"
UNTESTABLE_DEGENERATE_RESIDUALS = "degenerate-residuals"
UNTESTABLE_DEGENERATE_COVARIANCE = "degenerate-covariance"
UNTESTABLE_BAD_DESIGN = "rank-deficient-design"
UNTESTABLE_TOO_FEW_SAMPLES = "insufficient-samples"


def ols_fit(
    data: Dataset, target: str, covariates: Sequence[str]
) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares fit of ``target`` on ``covariates`` with an intercept.

    Returns the coefficients in covariate order (intercept excluded) and
    the residual vector, which is mean zero by construction.
    """
    covariates = list(covariates)
    n = data.n
    if n <= len(covariates) + 2:
        raise InsufficientSamples(
            f"n={n} rows for {len(covariates)} covariates"
        )
    design = np.empty((n, len(covariates) + 1))
    design[:, 0] = 1.0
    for j, c in enumerate(covariates):
        design[:, j + 1] = data.column(c)
    yvec = data.column(target)
    coef, _, rank, _ = np.linalg.lstsq(design, yvec, rcond=None)
    if rank < design.shape[1]:
        raise RankDeficientDesign(
            f"design for {target} on {covariates} has rank {rank}"
        )
    residuals = yvec - design @ coef
    return coef[1:], residuals


@dataclass
class CoefficientStack:
    """Per-set adjusted coefficients and the residuals behind them."""

    betas: np.ndarray  # length k
    residuals_x: list[np.ndarray]  # x regressed on Z_i
    residuals_y: list[np.ndarray]  # y regressed on (x, Z_i)
    n: int

    @property
    def k(self) -> int:
        return len(self.betas)


def coefficient_stack(
    data: Dataset,
    x: str,
    y: str,
    zc: AdjustmentCollection | Sequence[Iterable[str]],
) -> CoefficientStack:
    """Fit every adjusted regression in the collection."""
    sets = as_set_list(zc)
    betas = np.empty(len(sets))
    res_x: list[np.ndarray] = []
    res_y: list[np.ndarray] = []
    for i, s in enumerate(sets):
        if x in s or y in s:
            raise ColumnMismatch(f"set {sorted(s)} contains {x} or {y}")
        z = sorted(s)
        coef_y, r_y = ols_fit(data, y, [x, *z])
        _, r_x = ols_fit(data, x, z)
        betas[i] = coef_y[0]
        res_x.append(r_x)
        res_y.append(r_y)
    return CoefficientStack(betas, res_x, res_y, data.n)


def sigma_hat(stack: CoefficientStack) -> np.ndarray:
    """Plug-in estimate of the asymptotic covariance of the stacked betas."""
    if stack.n <= 4:
        raise InsufficientSamples("need more than 4 rows")
    rx = np.vstack(stack.residuals_x)
    ry = np.vstack(stack.residuals_y)
    norms = np.einsum("ij,ij->i", rx, rx)
    if norms.min() < _RESIDUAL_FLOOR * stack.n:
        raise DegenerateResiduals("treatment residual is numerically zero")
    products = rx * ry
    gram = products @ products.T
    return stack.n * gram / np.outer(norms, norms)


@dataclass(frozen=True)
class ContrastSpec:
    """Successive-difference contrast matrix for k stacked coefficients."""

    k: int
    matrix: np.ndarray


def contrast_matrix(k: int) -> ContrastSpec:
    """(k-1) x k matrix with rows e_j - e_{j+1}."""
    if k < 2:
        raise KTooSmall("need at least two adjustment sets")
    gamma = np.zeros((k - 1, k))
    for j in range(k - 1):
        gamma[j, j] = 1.0
        gamma[j, j + 1] = -1.0
    return ContrastSpec(k, gamma)


def mp_inverse_rank_r(delta: np.ndarray, r: int) -> np.ndarray:
    """Rank-``r`` Moore-Penrose inverse of a symmetric PSD matrix.

    The input is symmetrized, eigenvalues are sorted in decreasing order
    and only the top ``r`` are inverted. Raises when the r-th eigenvalue
    falls below ``EIGENVALUE_FLOOR`` times the largest.
    """
    delta = np.asarray(delta, dtype=float)
    dim = delta.shape[0]
    if delta.shape != (dim, dim):
        raise RankExceedsDim("matrix must be square")
    if not 1 <= r <= dim:
        raise RankExceedsDim(f"rank {r} outside 1..{dim}")
    sym = 0.5 * (delta + delta.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    eigvals = eigvals[::-1]
    eigvecs = eigvecs[:, ::-1]
    if eigvals[0] <= 0 or eigvals[r - 1] < EIGENVALUE_FLOOR * eigvals[0]:
        raise NearZeroLeadingEigenvalue(
            f"eigenvalue {r} of {dim} is below the relative floor"
        )
    inv = np.zeros(dim)
    inv[:r] = 1.0 / eigvals[:r]
    return (eigvecs * inv) @ eigvecs.T


def _vech_sq_norm(mat: np.ndarray) -> float:
    """Squared norm of the half-vectorization (lower triangle incl. diagonal)."""
    lower = np.tril(mat)
    return float(np.sum(lower * lower))


def estimate_rank_pseudo_mdf(delta_hat: np.ndarray, n: int) -> int:
    """Penalized rank selection for the contrasted covariance estimate.

    Minimizes n * ||vech(D - D_r)||^2 + log(n) * r * (k-1-(r-1)/2) over
    r = 1..k-1, where D_r keeps the top-r eigenpairs. Ties break toward
    the smaller rank.
    """
    delta_hat = np.asarray(delta_hat, dtype=float)
    dim = delta_hat.shape[0]
    if dim < 1 or delta_hat.shape != (dim, dim):
        raise KTooSmall("contrasted covariance must be at least 1 x 1")
    sym = 0.5 * (delta_hat + delta_hat.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    eigvals = eigvals[::-1]
    eigvecs = eigvecs[:, ::-1]
    log_n = math.log(n)
    best_r, best_loss = 1, math.inf
    for r in range(1, dim + 1):
        tail = (eigvecs[:, r:] * eigvals[r:]) @ eigvecs[:, r:].T
        loss = n * _vech_sq_norm(tail) + log_n * r * (dim - (r - 1) / 2.0)
        if loss < best_loss:
            best_r, best_loss = r, loss
    return best_r


def chi2_sf(t: float, df: int) -> float:
    """Upper tail of the chi-square via the regularized incomplete gamma."""
    if t <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, t / 2.0))


def test_statistic(
    stack: CoefficientStack, spec: ContrastSpec, rank: int
) -> tuple[float, float]:
    """Wald statistic n (G b)' pinv_r(G S G') (G b) and its chi-square p-value."""
    sigma = sigma_hat(stack)
    gamma = spec.matrix
    delta = gamma @ sigma @ gamma.T
    pinv = mp_inverse_rank_r(delta, rank)
    gb = gamma @ stack.betas
    t2 = float(stack.n * gb @ pinv @ gb)
    t2 = max(t2, 0.0)
    return t2, chi2_sf(t2, rank)


@dataclass
class TestReport:
    """Everything the testing procedure produced for one invocation."""

    status: str  # "tested" | "untestable"
    strategy: Strategy
    x: str
    y: str
    n: int
    reason: str | None = None
    sets: tuple[frozenset[str], ...] | None = None
    statistic: float | None = None
    rank_used: int | None = None
    p_value: float | None = None
    betas: np.ndarray | None = None
    sigma_hat: np.ndarray | None = None
    delta_hat: np.ndarray | None = None
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def tested(self) -> bool:
        return self.status == "tested"

    @property
    def k(self) -> int | None:
        return len(self.sets) if self.sets is not None else None

    def to_json_dict(self, verbose: bool = False) -> dict:
        payload = {
            "statistic": self.statistic,
            "rank": self.rank_used,
            "p_value": self.p_value,
            "strategy": self.strategy.value,
            "status": self.status,
            "reason": self.reason,
            "k": self.k,
            "n": self.n,
            "sets": [sorted(s) for s in self.sets] if self.sets is not None else None,
            "warnings": list(self.warnings),
        }
        if verbose:
            payload["x"] = self.x
            payload["y"] = self.y
            payload["betas"] = _matrix_list(self.betas)
            payload["sigma_hat"] = _matrix_list(self.sigma_hat)
            payload["delta_hat"] = _matrix_list(self.delta_hat)
        return payload

    def to_json(self, verbose: bool = False) -> str:
        return json.dumps(self.to_json_dict(verbose=verbose), sort_keys=True)


def _matrix_list(arr: np.ndarray | None):
    return None if arr is None else np.asarray(arr).tolist()


def build_collection(
    g: Dag, x: str, y: str, strategy: Strategy, cap: int = 10_000
) -> tuple[AdjustmentCollection, list[str]]:
    """Collection for the requested strategy, falling back all -> minplus on cap."""
    warnings: list[str] = []
    if strategy is Strategy.ALL:
        try:
            return enumerate_all_valid(g, x, y, cap=cap), warnings
        except CapExceeded:
            warnings.append("all-strategy cap exceeded, fell back to minplus")
            strategy = Strategy.MIN_PLUS
    if strategy is Strategy.MIN_PLUS:
        return min_plus_collection(g, x, y), warnings
    raise ValueError(f"cannot build sets for strategy {strategy}")


def run_test(
    g: Dag,
    x: str,
    y: str,
    data: Dataset,
    strategy: Strategy = Strategy.MIN_PLUS,
    cap: int = 10_000,
    collection: AdjustmentCollection | None = None,
) -> TestReport:
    """Full testing procedure: build sets, fit, estimate rank, test.

    Statistical failure modes (outcome not downstream of the treatment,
    fewer than two sets, degenerate residuals or covariance) come back as
    an untestable report instead of an exception; genuine input errors
    such as missing columns still raise.
    """
    strategy = Strategy(strategy)
    warnings: list[str] = []
    n = data.n

    def untestable(reason: str, sets=None) -> TestReport:
        return TestReport(
            status="untestable",
            strategy=strategy,
            x=x,
            y=y,
            n=n,
            reason=reason,
            sets=sets,
            warnings=tuple(warnings),
        )

    if y not in descendants(g, x):
        return untestable(UNTESTABLE_NOT_DESCENDANT)

    if collection is None:
        zc, fallback_warnings = build_collection(g, x, y, strategy, cap=cap)
        warnings.extend(fallback_warnings)
        if fallback_warnings:
            strategy = Strategy.MIN_PLUS
    else:
        zc = collection

    if len(zc) < 2:
        return untestable(UNTESTABLE_TOO_FEW_SETS, sets=zc.sets)

    needed = {x, y}.union(*zc.sets)
    missing = sorted(needed - set(data.columns))
    if missing:
        raise ColumnMismatch(f"dataset lacks columns {missing}")

    if strategy is Strategy.MIN_PLUS and not x_connected_remainder(g, x, y, zc):
        warnings.append(
            "full-rank heuristic not satisfied, contrasted covariance may be singular"
        )

    try:
        stack = coefficient_stack(data, x, y, zc)
        sigma = sigma_hat(stack)
    except InsufficientSamples:
        return untestable(UNTESTABLE_TOO_FEW_SAMPLES, sets=zc.sets)
    except RankDeficientDesign:
        return untestable(UNTESTABLE_BAD_DESIGN, sets=zc.sets)
    except DegenerateResiduals:
        return untestable(UNTESTABLE_DEGENERATE_RESIDUALS, sets=zc.sets)

    k = len(zc)
    spec = contrast_matrix(k)
    delta = spec.matrix @ sigma @ spec.matrix.T

    if strategy is Strategy.ALL:
        rank = estimate_rank_pseudo_mdf(delta, n)
    else:
        rank = k - 1

    pinv = None
    while rank >= 1:
        try:
            pinv = mp_inverse_rank_r(delta, rank)
            break
        except NearZeroLeadingEigenvalue:
            warnings.append(
                f"eigenvalue {rank} below floor, reduced rank to {rank - 1}"
            )
            rank -= 1
    if pinv is None:
        return untestable(UNTESTABLE_DEGENERATE_COVARIANCE, sets=zc.sets)

    gb = spec.matrix @ stack.betas
    t2 = max(float(n * gb @ pinv @ gb), 0.0)
    return TestReport(
        status="tested",
        strategy=strategy,
        x=x,
        y=y,
        n=n,
        sets=zc.sets,
        statistic=t2,
        rank_used=rank,
        p_value=chi2_sf(t2, rank),
        betas=stack.betas,
        sigma_hat=sigma,
        delta_hat=delta,
        warnings=tuple(warnings),
    )
