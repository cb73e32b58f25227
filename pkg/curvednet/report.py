"""
Score Densities
===============
Histogram of anomaly scores per split over equal-width bins, written as
CSV for external plotting.
"""

import os
import csv
import logging
from dataclasses import dataclass

import numpy as np

from curvednet.config import DENSITY_BINS, DENSITY_HEADER, DENSITY_QUANTITIES
from curvednet.errors import EmptyScores

logger = logging.getLogger(__name__)


@dataclass
class DensityReport:
    edges: np.ndarray
    count_id: np.ndarray
    count_ood: np.ndarray
    quantity: str = "as"

    def rows(self):
        for lo, hi, a, b in zip(self.edges[:-1], self.edges[1:], self.count_id, self.count_ood):
            yield float(lo), float(hi), int(a), int(b)


def density_report(rows, bins=DENSITY_BINS, quantity="as"):
    """
    ``rows`` are (split, z, as) triples. ``quantity`` selects the plotted
    value: the anomaly score, z, or tanh(z).
    """
    if quantity not in DENSITY_QUANTITIES:
        raise ValueError(f"quantity must be one of {DENSITY_QUANTITIES}")
    rows = list(rows)
    if not rows:
        raise EmptyScores("no scores to summarise")

    splits = np.array([r[0] for r in rows])
    z = np.array([r[1] for r in rows], dtype=np.float64)
    values = {"as": np.array([r[2] for r in rows], dtype=np.float64), "z": z, "tanh": np.tanh(z)}[quantity]

    edges = np.histogram_bin_edges(values, bins=bins)
    count_id, _ = np.histogram(values[splits != "test_ood"], bins=edges)
    count_ood, _ = np.histogram(values[splits == "test_ood"], bins=edges)
    logger.debug("Density over %d scores, range [%g, %g]", len(values), edges[0], edges[-1])
    return DensityReport(edges, count_id, count_ood, quantity)


def write_density(report, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(DENSITY_HEADER)
        for lo, hi, a, b in report.rows():
            writer.writerow([repr(lo), repr(hi), a, b])
    logger.info("Density report written to %s", path)
