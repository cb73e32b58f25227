"""
OOD Metrics
===========
AUROC, FPR at a target TPR, detection error and AUPR for a set of anomaly
scores. Anomalies (OOD) are the positives and a higher score means more
anomalous; a sample is flagged when its score is >= the threshold.
Thresholds are every distinct score plus +inf.

All metrics are rank-based, so spherical anomaly scores above 1 (negative
z_S) need no re-normalisation.
"""

import math
import logging
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.stats import rankdata

from curvednet.config import TARGET_TPR, DETECTION_ERROR_MODES, AUPR_POSITIVES
from curvednet.errors import OneClassOnly

logger = logging.getLogger(__name__)


@dataclass
class ScoreSet:
    scores: np.ndarray
    is_ood: np.ndarray
    ids: list = field(default_factory=list)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.is_ood = np.asarray(self.is_ood, dtype=bool)
        if self.scores.shape != self.is_ood.shape or self.scores.ndim != 1:
            raise ValueError("scores and is_ood must be 1-D and of equal length")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("scores must be finite")
        if not self.ids:
            self.ids = [str(i) for i in range(len(self.scores))]

    @classmethod
    def from_scores(cls, id_scores, ood_scores):
        id_scores = np.asarray(id_scores, dtype=np.float64)
        ood_scores = np.asarray(ood_scores, dtype=np.float64)
        return cls(
            np.concatenate([id_scores, ood_scores]),
            np.concatenate([np.zeros(len(id_scores), bool), np.ones(len(ood_scores), bool)]),
        )

    @property
    def n_id(self):
        return int(np.sum(~self.is_ood))

    @property
    def n_ood(self):
        return int(np.sum(self.is_ood))

    def require_both(self):
        if self.n_id == 0 or self.n_ood == 0:
            raise OneClassOnly(f"need both ID and OOD samples, got {self.n_id} ID / {self.n_ood} OOD")


@dataclass
class MetricsReport:
    auroc: float
    fpr_at_95_tpr: float
    detection_error: float
    aupr: float
    aupr_in: float
    aupr_out: float
    positive_class: str
    detection_error_mode: str
    n_id: int
    n_ood: int

    def as_dict(self):
        return asdict(self)


# ── Operating points ─────────────────────────────────────


def _operating_points(s):
    """
    TPR and FPR at each threshold, thresholds ascending (+inf last).

    Counts of scores >= tau come from sorted arrays via searchsorted.
    """
    s.require_both()
    ood = np.sort(s.scores[s.is_ood])
    ind = np.sort(s.scores[~s.is_ood])
    taus = np.append(np.unique(s.scores), np.inf)
    tp = len(ood) - np.searchsorted(ood, taus, side="left")
    fp = len(ind) - np.searchsorted(ind, taus, side="left")
    return tp / len(ood), fp / len(ind)


def auroc(s):
    """Mann-Whitney statistic from average ranks (ties count one half)."""
    s.require_both()
    ranks = rankdata(s.scores, method="average")
    n_ood, n_id = s.n_ood, s.n_id
    u = np.sum(ranks[s.is_ood]) - n_ood * (n_ood + 1) / 2.0
    return float(u / (n_ood * n_id))


def fpr_at_tpr(s, target_tpr=TARGET_TPR):
    tpr, fpr = _operating_points(s)
    return float(np.min(fpr[tpr >= target_tpr]))


def detection_error(s, mode="min", target_tpr=TARGET_TPR):
    """
    ``min``: minimum over thresholds of 0.5 (1 - TPR) + 0.5 FPR.
    ``at_tpr``: the same expression at the FPR@target operating point.
    """
    if mode == "at_tpr":
        return 0.5 * (1.0 - target_tpr) + 0.5 * fpr_at_tpr(s, target_tpr)
    if mode != "min":
        raise ValueError(f"detection error mode must be one of {DETECTION_ERROR_MODES}")
    tpr, fpr = _operating_points(s)
    return float(np.min(0.5 * (1.0 - tpr) + 0.5 * fpr))


def aupr(s, positive="ood"):
    """
    Step-wise area under the precision-recall curve, sweeping distinct
    scores downwards; ``positive="id"`` swaps labels and negates scores.
    """
    s.require_both()
    if positive not in AUPR_POSITIVES:
        raise ValueError(f"positive must be one of {AUPR_POSITIVES}")
    scores, flags = s.scores, s.is_ood
    if positive == "id":
        scores, flags = -scores, ~flags

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    tp_cum = np.cumsum(flags[order])
    fp_cum = np.cumsum(~flags[order])
    # last index of every run of tied scores
    ends = np.flatnonzero(np.append(sorted_scores[1:] != sorted_scores[:-1], True))
    tp = tp_cum[ends]
    fp = fp_cum[ends]
    n_pos = int(np.sum(flags))
    prev = np.concatenate([[0], tp[:-1]])
    terms = ((tp - prev) / n_pos) * (tp / (tp + fp))
    return math.fsum(terms.tolist())


def evaluate(s, detection_error_mode="min", aupr_positive="ood", target_tpr=TARGET_TPR):
    """All four metrics for one ScoreSet."""
    s.require_both()
    aupr_out = aupr(s, "ood")
    aupr_in = aupr(s, "id")
    report = MetricsReport(
        auroc=auroc(s),
        fpr_at_95_tpr=fpr_at_tpr(s, target_tpr),
        detection_error=detection_error(s, detection_error_mode, target_tpr),
        aupr=aupr_out if aupr_positive == "ood" else aupr_in,
        aupr_in=aupr_in,
        aupr_out=aupr_out,
        positive_class=aupr_positive,
        detection_error_mode=detection_error_mode,
        n_id=s.n_id,
        n_ood=s.n_ood,
    )
    logger.info(
        "AUROC %.4f  FPR@95 %.4f  DE %.4f  AUPR(%s) %.4f",
        report.auroc, report.fpr_at_95_tpr, report.detection_error, aupr_positive, report.aupr,
    )
    return report
