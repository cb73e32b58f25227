"""
Shared test fixtures for the curvednet test suite.
"""

import numpy as np
import pytest

from curvednet import data
from curvednet.config import RunConfig


@pytest.fixture(autouse=True)
def log_dir(tmp_path, monkeypatch):
    """Route any log file a test creates into its own temporary directory."""
    path = tmp_path / "logs"
    monkeypatch.setenv("CURVEDNET_LOG_DIR", str(path))
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_gaussians():
    """The separable sanity set: d=2, centres at -3 and +3, std 0.5."""
    return data.gen_two_gaussians(n=200, dim=2, separation=3.0, std=0.5, seed=0)


@pytest.fixture
def small_spec():
    return data.HierarchySpec(
        n_super=2, n_sub_per_super=2, dim=4, super_spread=6.0, sub_spread=2.0,
        noise_std=0.3, samples_per_leaf=20, ood_leaves=1,
    )


@pytest.fixture
def small_run_config():
    """A run configuration that trains in well under a second."""
    return RunConfig(
        architecture="hio", embed_dim=4, hidden_dims=(8,), epochs=3, batch_size=16,
        n_super=2, n_sub_per_super=2, data_dim=4, super_spread=6.0, sub_spread=2.0,
        noise_std=0.3, samples_per_leaf=20, ood_leaves=1,
        compare_seeds=(0, 1), compare_architectures=("baseline", "hio"),
    )


@pytest.fixture
def config_file(tmp_path):
    """Write ``key = value`` text to a config file and return its path."""
    def _write(text, name="run.cfg"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write
