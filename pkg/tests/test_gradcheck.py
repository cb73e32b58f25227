"""
Tests for the finite-difference gradient check suite.
"""

import math

import numpy as np
import pytest

from curvednet import gradcheck
from curvednet.errors import GradCheckFailed


class TestCases:
    """Every case stays within tolerance at seeded points."""

    @pytest.mark.parametrize("name", sorted(gradcheck.CASES))
    def test_case_within_tolerance(self, name):
        assert gradcheck.check_case(name, seed=0) <= 1e-4

    def test_run_gradcheck_reports_every_case(self):
        errors = gradcheck.run_gradcheck(seed=1)
        assert set(errors) == set(gradcheck.CASES)
        assert all(math.isfinite(e) and e <= 1e-4 for e in errors.values())

    def test_points_are_deterministic(self):
        a = gradcheck.check_case("hyperbolic_mlr_loss", seed=2, points=2)
        b = gradcheck.check_case("hyperbolic_mlr_loss", seed=2, points=2)
        assert a == b


class TestFailures:
    """The suite reports failure instead of passing silently."""

    def test_zero_tolerance_fails(self):
        with pytest.raises(GradCheckFailed) as exc:
            gradcheck.run_gradcheck(seed=0, tol=0.0)
        assert set(exc.value.errors) == set(gradcheck.CASES)
        assert exc.value.exit_code == 5

    def test_unreachable_margin(self, monkeypatch):
        monkeypatch.setattr(gradcheck, "GRADCHECK_MARGIN", np.inf)
        monkeypatch.setattr(gradcheck, "MAX_REDRAWS", 3)
        with pytest.raises(GradCheckFailed):
            gradcheck.check_case("geodesic", seed=0, points=1)
