"""
Anomaly Scoring
===============
Geometric scores and their conversion into anomaly scores.

    z_E   max(c_E)                         Euclidean MSP
    z_S   max_j <e_S, w_j>                 spherical head
    z_H   d(e_H, 0)                        hyperbolic embedding norm
    z_M   sqrt(sum z_i^2)                  GiO on a product manifold
    z_ES / z_EH  KL(softmax(e_E) || softmax(e_G))   GiT
    z_EM  sqrt(sum z_EG,i^2)               GiT on a product manifold

Geometric models report AS = 1 - tanh(z), evaluated as 2 expit(-2z); the baseline reports
AS = 1 - max(c_E). Larger AS means more anomalous.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, rel_entr

from curvednet import autodiff as ad
from curvednet import heads, manifold
from curvednet.config import PROB_FLOOR, DEGENERATE_FRACTION
from curvednet.errors import DimMismatch, EmptyComponents, LengthMismatch, ConfigError
from curvednet.models import forward

logger = logging.getLogger(__name__)

SCORE_KINDS = ("z_E", "z_S", "z_H", "z_M", "z_ES", "z_EH", "z_EM")


@dataclass(frozen=True)
class GeometricScore:
    value: float
    kind: str

    def __post_init__(self):
        if self.kind not in SCORE_KINDS:
            raise ValueError(f"unknown score kind '{self.kind}'")


@dataclass(frozen=True)
class AnomalyScore:
    value: float


def _coords(x):
    return np.asarray(getattr(x, "coords", x), dtype=np.float64)


# ── Geometric scores ─────────────────────────────────────


def score_spherical(e_S, head):
    return GeometricScore(float(np.max(heads.angular_logits(e_S, head))), "z_S")


def score_hyperbolic(e_H):
    return GeometricScore(float(manifold.origin_distance(e_H.coords, e_H.curvature)[0]), "z_H")


def _root_sum_square(values):
    if len(values) == 0:
        raise EmptyComponents("need at least one component score")
    return float(np.sqrt(np.sum(np.square(values))))


def score_product(components):
    values = [c.value if isinstance(c, GeometricScore) else float(c) for c in components]
    return GeometricScore(_root_sum_square(values), "z_M")


def score_git_mixed(z_components):
    values = [c.value if isinstance(c, GeometricScore) else float(c) for c in z_components]
    return GeometricScore(_root_sum_square(values), "z_EM")


def kl_divergence(p, q):
    """sum p_i log(p_i / q_i), with q floored at 1e-300 and 0 log 0 = 0."""
    p = np.asarray(getattr(p, "probs", p), dtype=np.float64)
    q = np.asarray(getattr(q, "probs", q), dtype=np.float64)
    if p.shape != q.shape:
        raise LengthMismatch(f"probability vectors differ in length: {p.shape} vs {q.shape}")
    return float(np.sum(rel_entr(p, np.maximum(q, PROB_FLOOR))))


def kl_rows(P, Q):
    """Row-wise KL divergence for two B x n probability matrices."""
    return np.sum(rel_entr(P, np.maximum(Q, PROB_FLOOR)), axis=-1)


def score_git(e_E, e_G):
    """z_EG = KL(softmax(e_E) || softmax(e_G)) over raw coordinates."""
    a, b = _coords(e_E), _coords(e_G)
    if a.shape != b.shape:
        raise DimMismatch(f"e_E has shape {a.shape} but e_G has shape {b.shape}")
    kind = "z_EH" if isinstance(e_G, manifold.BallPoint) else "z_ES"
    return GeometricScore(kl_divergence(ad.softmax(a), ad.softmax(b)), kind)


def _tanh_complement(z):
    # 1 - tanh(z) == 2 / (1 + e^{2z}); stays positive where 1 - tanh rounds to 0
    return 2.0 * expit(-2.0 * np.asarray(z, dtype=np.float64))


def anomaly_score(z):
    value = z.value if isinstance(z, GeometricScore) else float(z)
    return AnomalyScore(float(_tanh_complement(value)))


def msp_anomaly_score(c_E):
    probs = np.asarray(getattr(c_E, "probs", c_E), dtype=np.float64)
    return AnomalyScore(1.0 - float(np.max(probs)))


# ── Model scoring ────────────────────────────────────────


def _gio_scores(model, result, kinds):
    parts = []
    for kind in kinds:
        if kind == "euclidean":
            parts.append(np.max(result.confidences[kind], axis=1))
        elif kind == "spherical":
            parts.append(np.max(result.logits[kind], axis=1))
        else:
            e_H = result.embeddings[kind]
            parts.append(manifold.origin_distance(e_H, model.config.curvature_h)[:, 0])
    if len(parts) == 1:
        return parts[0]
    return np.sqrt(np.sum(np.square(parts), axis=0))


def _git_scores(result, kinds):
    p_E = ad.softmax(result.e_E)
    parts = [kl_rows(p_E, ad.softmax(result.transformed[kind])) for kind in kinds]
    if len(parts) == 1:
        return parts[0]
    return np.sqrt(np.sum(np.square(parts), axis=0))


def score_model(model, X, mode="default"):
    """
    Score a batch; returns (z, as) arrays.

    ``mode``:
      default    the architecture's own score
      euclidean  MSP of the Euclidean branch (z = max c_E, as = 1 - z)
      geometric  GiO-style score of the curved branches of a GiT model
    """
    result = forward(model, X)
    family = model.config.family
    curved = [t.kind for t in model.branches if t.kind != "euclidean"]

    if mode == "euclidean" or (mode == "default" and family == "baseline"):
        if not model.has_euclidean_branch():
            raise ConfigError(f"{model.architecture} has no Euclidean branch to score")
        z = np.max(result.confidences["euclidean"], axis=1)
        return z, 1.0 - z

    if family == "baseline":
        raise ConfigError("the baseline has no curved branch to score")
    if mode == "geometric" or family == "gio":
        kinds = [t.kind for t in model.branches] if family == "gio" else curved
        z = _gio_scores(model, result, kinds)
    else:
        z = _git_scores(result, curved)
    return z, _tanh_complement(z)


def is_degenerate(z, fraction=DEGENERATE_FRACTION):
    """True when more than ``fraction`` of the scores are exactly zero."""
    z = np.asarray(z)
    return bool(z.size) and float(np.mean(z == 0.0)) > fraction
