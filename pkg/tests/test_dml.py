"""Tests for cross-fitted linear DML."""

import numpy as np
import pytest

from causal_agent.dml import DmlConfig, DmlError, estimate_ate, fit_linear_dml
from causal_agent.tabular import DataTable


def constant_effect(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    t = 0.8 * x + rng.standard_normal(n)
    y = 2.0 * t + 1.5 * x + rng.standard_normal(n)
    return DataTable("c.csv", ("X", "T", "Y"), np.column_stack([x, t, y]))


def heterogeneous_effect(n, seed):
    """Effect of T is 1 + X with X centred, so the ATE per unit of T is 1."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    t = 0.5 * x + rng.standard_normal(n)
    y = t * (1.0 + x) + x + rng.standard_normal(n)
    return DataTable("h.csv", ("X", "T", "Y"), np.column_stack([x, t, y]))


def interventional_mean_difference(effect_of, n, seed):
    x = np.random.default_rng(seed).standard_normal(n)
    return float(np.mean(effect_of(x)))


def test_constant_effect_is_recovered():
    estimate = estimate_ate(constant_effect(5000, 0), DmlConfig("Y", "T", ("X",), 0.0, 1.0))
    assert estimate.ate == pytest.approx(2.0, rel=0.075)
    assert estimate.n_used == 5000


def test_confounding_biases_the_unadjusted_estimate():
    table = constant_effect(5000, 1)
    adjusted = estimate_ate(table, DmlConfig("Y", "T", ("X",)))
    naive = estimate_ate(table, DmlConfig("Y", "T"))
    assert abs(adjusted.ate - 2.0) < abs(naive.ate - 2.0)


@pytest.mark.slow
@pytest.mark.parametrize("make, oracle", [
    (constant_effect, lambda x: np.full_like(x, 2.0)),
    (heterogeneous_effect, lambda x: 1.0 + x),
])
def test_estimates_match_interventional_oracle_in_most_seeds(make, oracle):
    truth = interventional_mean_difference(oracle, 200_000, 99)
    hits = 0
    for seed in range(20):
        ate = estimate_ate(make(5000, seed), DmlConfig("Y", "T", ("X",))).ate
        hits += abs(ate - truth) <= 0.075 * abs(truth)
    assert hits >= 18


def test_heterogeneity_coefficient():
    fit = fit_linear_dml(heterogeneous_effect(5000, 3), DmlConfig("Y", "T", ("X",)))
    assert fit.theta0 == pytest.approx(1.0, abs=0.1)
    assert fit.theta_x[0] == pytest.approx(1.0, abs=0.1)
    cate = fit.const_marginal_effect(np.array([[0.0], [1.0]]))
    assert cate[1] - cate[0] == pytest.approx(fit.theta_x[0])


def test_effect_scales_with_contrast():
    fit = fit_linear_dml(constant_effect(2000, 4), DmlConfig("Y", "T", ("X",)))
    assert fit.effect(0.0, 2.0) == pytest.approx(2 * fit.effect(0.0, 1.0))
    assert fit.effect(1.5, 1.5) == 0.0


def test_equal_contrast_is_exactly_zero():
    estimate = estimate_ate(constant_effect(500, 5), DmlConfig("Y", "T", ("X",), 3.0, 3.0))
    assert estimate.ate == 0.0


def test_same_seed_same_estimate():
    table = constant_effect(1000, 6)
    cfg = DmlConfig("Y", "T", ("X",), seed=7)
    assert estimate_ate(table, cfg) == estimate_ate(table, cfg)


@pytest.mark.parametrize("kwargs, message", [
    ({"outcome": "Y", "treatment": "Y"}, "different"),
    ({"outcome": "Y", "treatment": "T", "covariates": ("T",)}, "covariates cannot include"),
    ({"outcome": "Y", "treatment": "T", "folds": 1}, "folds"),
    ({"outcome": "Y", "treatment": "T", "t1": float("inf")}, "finite"),
])
def test_invalid_configs(kwargs, message):
    with pytest.raises(DmlError, match=message):
        DmlConfig(**kwargs)


def test_too_few_rows():
    with pytest.raises(DmlError, match="insufficient rows"):
        estimate_ate(constant_effect(20, 0), DmlConfig("Y", "T", ("X",)))


def test_unknown_column():
    with pytest.raises(DmlError, match="unknown variable"):
        estimate_ate(constant_effect(100, 0), DmlConfig("Y", "Q"))

