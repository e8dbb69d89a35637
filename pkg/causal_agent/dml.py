"""Cross-fitted double machine learning with a linear final stage.

Nuisance models regress the outcome and the treatment on ``[1, X]`` with ridge
least squares (intercept unpenalized). The final stage regresses outcome
residuals on ``[T_res, T_res * X]``, giving a constant effect ``theta0`` and
linear heterogeneity coefficients ``theta_x``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .tabular import DataTable, TableError

logger = logging.getLogger(__name__)

DEFAULT_FOLDS = 2
DEFAULT_RIDGE = 1e-6
DEFAULT_SEED = 0


class DmlError(ValueError):
    """Raised when an effect cannot be estimated."""


@dataclass(frozen=True)
class DmlConfig:
    """Which variables play which role, and the treatment contrast.

    Attributes:
        outcome: Outcome column (Y)
        treatment: Treatment column (T)
        covariates: Covariate columns (X); empty means no adjustment
        t0: Reference treatment value
        t1: Target treatment value
        folds: Number of cross-fitting folds, at least 2
        ridge: Nonnegative ridge penalty of the nuisance fits
        seed: Seed of the fold assignment
    """

    outcome: str
    treatment: str
    covariates: tuple[str, ...] = field(default_factory=tuple)
    t0: float = 0.0
    t1: float = 1.0
    folds: int = DEFAULT_FOLDS
    ridge: float = DEFAULT_RIDGE
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if self.outcome == self.treatment:
            raise DmlError("outcome and treatment must be different variables")
        if self.outcome in self.covariates or self.treatment in self.covariates:
            raise DmlError("covariates cannot include the outcome or the treatment")
        if len(set(self.covariates)) != len(self.covariates):
            raise DmlError("covariates contain duplicates")
        if self.folds < 2:
            raise DmlError(f"folds must be at least 2, got {self.folds}")
        if self.ridge < 0:
            raise DmlError(f"ridge must be nonnegative, got {self.ridge}")
        if not (np.isfinite(self.t0) and np.isfinite(self.t1)):
            raise DmlError("t0 and t1 must be finite numbers")


@dataclass(frozen=True)
class AteEstimate:
    ate: float
    theta0: float
    theta_x: tuple[float, ...]
    n_used: int
    covariates: tuple[str, ...] = ()
    t0: float = 0.0
    t1: float = 1.0

    def coefficient(self, covariate: str) -> float:
        """Heterogeneity coefficient of one covariate."""
        try:
            return self.theta_x[self.covariates.index(covariate)]
        except ValueError:
            raise DmlError(f"'{covariate}' is not a covariate of this estimate") from None


@dataclass(frozen=True, eq=False)
class LinearDmlFit:
    """Fitted final stage; contrast-independent."""

    theta0: float
    theta_x: np.ndarray
    covariates: tuple[str, ...]
    features: np.ndarray = field(repr=False)

    def const_marginal_effect(self, features: np.ndarray | None = None) -> np.ndarray:
        """Per-row marginal effect ``theta0 + theta_x . x`` (the CATE under linear treatment)."""
        x = self.features if features is None else np.asarray(features, dtype=float)
        if x.shape[1] == 0:
            return np.full(x.shape[0], self.theta0)
        return self.theta0 + x @ self.theta_x

    def effect(self, t0: float, t1: float) -> float:
        """Average effect of moving the treatment from t0 to t1."""
        if t0 == t1:
            return 0.0
        return float((t1 - t0) * self.const_marginal_effect().mean())

    def estimate(self, t0: float, t1: float) -> AteEstimate:
        return AteEstimate(
            ate=self.effect(t0, t1),
            theta0=float(self.theta0),
            theta_x=tuple(float(v) for v in self.theta_x),
            n_used=int(self.features.shape[0]),
            covariates=self.covariates,
            t0=float(t0),
            t1=float(t1),
        )


def _ridge_fit(design: np.ndarray, target: np.ndarray, ridge: float) -> np.ndarray:
    penalty = ridge * np.eye(design.shape[1])
    penalty[0, 0] = 0.0
    gram = design.T @ design + penalty
    try:
        return np.linalg.solve(gram, design.T @ target)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(gram, design.T @ target, rcond=None)[0]


def _fold_ids(n: int, folds: int, seed: int) -> np.ndarray:
    order = np.random.default_rng(seed).permutation(n)
    ids = np.empty(n, dtype=int)
    for k, chunk in enumerate(np.array_split(order, folds)):
        ids[chunk] = k
    return ids


def fit_linear_dml(table: DataTable, cfg: DmlConfig) -> LinearDmlFit:
    """Cross-fit nuisances and solve the linear final stage.

    Raises:
        DmlError: On unknown columns, too few rows or a rank-deficient final stage
    """
    try:
        y = table.column(cfg.outcome)
        t = table.column(cfg.treatment)
        x = table.select(cfg.covariates).values if cfg.covariates else np.empty((table.n, 0))
    except TableError as e:
        raise DmlError(str(e)) from None

    n, p = table.n, len(cfg.covariates)
    required = 10 * (p + 2)
    if n < required:
        raise DmlError(f"insufficient rows: n={n}, need at least {required} for {p} covariates")
    if cfg.folds > n:
        raise DmlError(f"folds ({cfg.folds}) cannot exceed the row count ({n})")

    design = np.column_stack([np.ones(n), x])
    y_res = np.empty(n)
    t_res = np.empty(n)
    ids = _fold_ids(n, cfg.folds, cfg.seed)
    for k in range(cfg.folds):
        held = ids == k
        train = ~held
        y_coef = _ridge_fit(design[train], y[train], cfg.ridge)
        t_coef = _ridge_fit(design[train], t[train], cfg.ridge)
        y_res[held] = y[held] - design[held] @ y_coef
        t_res[held] = t[held] - design[held] @ t_coef

    final = np.column_stack([t_res, t_res[:, None] * x]) if p else t_res[:, None]
    rank = np.linalg.matrix_rank(final)
    if rank < final.shape[1]:
        raise DmlError(
            f"rank-deficient final stage (rank {rank} < {final.shape[1]}): "
            f"treatment '{cfg.treatment}' has no variation left after adjusting for the covariates"
        )
    coef = np.linalg.lstsq(final, y_res, rcond=None)[0]
    logger.debug("DML %s -> %s: theta0=%.6g theta_x=%s", cfg.treatment, cfg.outcome, coef[0], coef[1:])
    return LinearDmlFit(float(coef[0]), coef[1:].copy(), cfg.covariates, x.copy())


def estimate_ate(table: DataTable, cfg: DmlConfig) -> AteEstimate:
    """Average treatment effect of moving ``cfg.treatment`` from ``cfg.t0`` to ``cfg.t1``."""
    return fit_linear_dml(table, cfg).estimate(cfg.t0, cfg.t1)
