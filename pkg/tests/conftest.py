"""Shared fixtures."""

import numpy as np
import pytest

from causal_agent.tabular import DataTable, write_csv


def smoking_table(n: int = 2000, seed: int = 0) -> DataTable:
    """yellow fingers <- smoking -> lung cancer, linear Gaussian.

    The cancer noise is projected off the intercept, smoking and the fingers
    noise, so the sample partial correlation of fingers and cancer given
    smoking is zero.
    """
    rng = np.random.default_rng(seed)
    smoking = rng.standard_normal(n)
    fingers_noise = rng.standard_normal(n)
    basis = np.column_stack([np.ones(n), smoking, fingers_noise])
    cancer_noise = rng.standard_normal(n)
    cancer_noise -= basis @ np.linalg.lstsq(basis, cancer_noise, rcond=None)[0]
    cancer_noise /= cancer_noise.std()
    fingers = 0.8 * smoking + 0.6 * fingers_noise
    cancer = 0.8 * smoking + 0.6 * cancer_noise
    return DataTable("data.csv", ("smoking", "yellow fingers", "lung cancer"), np.column_stack([smoking, fingers, cancer]))


@pytest.fixture
def smoking_data():
    return smoking_table()


@pytest.fixture
def smoking_csv(tmp_path, smoking_data):
    return write_csv(smoking_data, tmp_path / "data.csv")
