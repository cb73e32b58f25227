"""
Tests for the end-to-end pipeline and the multi-seed comparison.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from curvednet import experiment
from curvednet.config import RunConfig
from curvednet.errors import ModelDataDimMismatch


class TestPipeline:
    """generate → fit → score_splits → score_set."""

    def test_generate_uses_config(self, small_run_config):
        splits = experiment.generate(small_run_config)
        assert splits.train.dim == 4
        assert len(splits.test_ood) == 20
        assert len(splits.train) + len(splits.test_id) == 60

    def test_auto_extractor(self, small_run_config):
        assert experiment.model_config(small_run_config, 4, 3).extractor == "mlp"
        embedded = replace(small_run_config, data_source="embeddings")
        assert experiment.model_config(embedded, 4, 3).extractor == "identity"

    def test_fit_and_score(self, small_run_config):
        splits = experiment.generate(small_run_config)
        model, report, tc = experiment.fit(small_run_config, splits.train)
        assert model.config.n_classes == 3
        assert len(report.epoch_losses) == small_run_config.epochs
        assert tc.seed == small_run_config.seed

        rows = experiment.score_splits(model, splits)
        assert len(rows) == len(splits.test_id) + len(splits.test_ood)
        assert [r[1] for r in rows[:1]] == ["test_id"]
        assert rows[-1][1] == "test_ood"
        s = experiment.score_set(rows)
        assert (s.n_id, s.n_ood) == (len(splits.test_id), len(splits.test_ood))
        np.testing.assert_array_equal(s.scores, [r[3] for r in rows])

    def test_dim_mismatch(self, small_run_config):
        splits = experiment.generate(small_run_config)
        model, _, _ = experiment.fit(small_run_config, splits.train)
        other = experiment.generate(replace(small_run_config, data_dim=5))
        with pytest.raises(ModelDataDimMismatch):
            experiment.score_splits(model, other)

    @pytest.mark.parametrize("k", [-0.01, -0.005])
    def test_hio_at_small_curvature(self, small_run_config, k):
        cfg = replace(small_run_config, curvature_h=k)
        splits = experiment.generate(cfg)
        model, report, _ = experiment.fit(cfg, splits.train)
        assert all(math.isfinite(v) for v in report.epoch_losses)
        rows = experiment.score_splits(model, splits)
        assert all(0.0 < r[3] <= 1.0 for r in rows)

    def test_deterministic_scores(self, small_run_config):
        def run():
            splits = experiment.generate(small_run_config)
            model, _, _ = experiment.fit(small_run_config, splits.train)
            return experiment.score_splits(model, splits)

        assert run() == run()


class TestComparison:
    """Structure of the comparison and the curvature sweep."""

    def test_runs_and_summary(self, small_run_config):
        result = experiment.run_comparison(small_run_config)
        assert len(result.runs) == 4
        assert result.architectures() == ["baseline", "hio"]
        summary = result.summary()
        assert [row["architecture"] for row in summary] == ["baseline", "hio"]
        assert "non_inferior" not in summary[0]
        assert summary[1]["strict_wins"].endswith("/2")
        for run in result.runs:
            assert 0.0 <= run["auroc"] <= 1.0

    def test_strict_wins_counting(self):
        result = experiment.ComparisonResult(runs=[
            {"seed": 0, "architecture": "baseline", "auroc": 0.7},
            {"seed": 0, "architecture": "hio", "auroc": 0.8},
            {"seed": 1, "architecture": "baseline", "auroc": 0.9},
            {"seed": 1, "architecture": "hio", "auroc": 0.9},
        ])
        assert result.strict_wins("hio") == 1
        assert result.mean("hio") == pytest.approx(0.85, abs=1e-15)

    def test_curvature_sweep_labels(self, small_run_config):
        result = experiment.run_curvature_sweep(small_run_config, curvatures=(-1e-2, -1.0), seeds=(0,))
        assert result.architectures() == ["hio@-0.01", "hio@-1.0"]
        assert [run["curvature_h"] for run in result.runs] == [-1e-2, -1.0]


class TestDefaultBenchmark:
    """HiO against the MSP baseline on the default benchmark, seeds 0-4."""

    @pytest.mark.xfail(
        reason="HiO mean AUROC sits below the baseline: most ball embeddings saturate at the clip radius",
        strict=False,
    )
    def test_hio_not_worse_than_baseline(self):
        result = experiment.run_comparison(RunConfig(), seeds=(0, 1, 2, 3, 4), architectures=("baseline", "hio"))
        hio = {row["architecture"]: row for row in result.summary()}["hio"]
        assert hio["non_inferior"], (
            f"hio {result.mean('hio'):.4f} vs baseline {result.mean('baseline'):.4f}, "
            f"strict wins {hio['strict_wins']}"
        )
