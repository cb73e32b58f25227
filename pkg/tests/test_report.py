"""
Unit tests for the score density report.
"""

import csv

import numpy as np
import pytest

from curvednet.report import density_report, write_density
from curvednet.errors import EmptyScores


ROWS = [
    ("test_id", 2.0, 0.04), ("test_id", 1.5, 0.1), ("test_id", 1.0, 0.24),
    ("test_ood", 0.2, 0.8), ("test_ood", 0.0, 1.0),
]


class TestDensityReport:
    """Tests for the per-split histogram."""

    def test_counts_cover_every_score(self):
        report = density_report(ROWS, bins=4)
        assert int(report.count_id.sum()) == 3
        assert int(report.count_ood.sum()) == 2
        assert len(report.edges) == 5

    def test_edges_span_the_scores(self):
        report = density_report(ROWS, bins=4)
        assert report.edges[0] == 0.04
        assert report.edges[-1] == 1.0

    def test_quantity_z(self):
        report = density_report(ROWS, bins=2, quantity="z")
        assert (report.edges[0], report.edges[-1]) == (0.0, 2.0)
        assert report.count_ood.tolist() == [2, 0]

    def test_quantity_tanh(self):
        report = density_report(ROWS, bins=3, quantity="tanh")
        assert report.edges[-1] == pytest.approx(np.tanh(2.0), abs=1e-15)

    def test_empty(self):
        with pytest.raises(EmptyScores):
            density_report([])

    def test_unknown_quantity(self):
        with pytest.raises(ValueError):
            density_report(ROWS, quantity="log")


class TestWriteDensity:
    """Tests for the CSV output."""

    def test_csv(self, tmp_path):
        path = tmp_path / "density.csv"
        write_density(density_report(ROWS, bins=4), str(path))
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["bin_lo", "bin_hi", "count_id", "count_ood"]
        assert len(rows) == 5
        assert sum(int(r[2]) + int(r[3]) for r in rows[1:]) == 5
        assert float(rows[1][0]) == 0.04

    def test_creates_missing_directory(self, tmp_path):
        path = tmp_path / "reports" / "run1" / "density.csv"
        write_density(density_report(ROWS, bins=2), str(path))
        assert path.exists()
