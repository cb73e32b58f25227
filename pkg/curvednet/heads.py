"""
Classifier Heads
================
Euclidean linear head, spherical angular head and hyperbolic MLR head,
together with the softmax / cross-entropy family every branch trains on.

The ``*_scores`` kernels take a batch of embeddings (B x n) and raw
parameter arrays or tape variables and return B x C logits. The typed
``*_logits`` functions wrap them for a head object and a single point or
a batch.
"""

import math
import logging
from dataclasses import dataclass

import numpy as np

from curvednet import autodiff as ad
from curvednet import manifold
from curvednet.config import XI_DEFAULT, MIN_NORMAL_NORM, SINGULARITY_TOL, PROB_FLOOR
from curvednet.errors import (
    BadLabel, CurvatureMismatch, DimMismatch, Singularity, ManifoldViolation,
)

logger = logging.getLogger(__name__)


# ── Kernels ──────────────────────────────────────────────


def linear_scores(x, weight, bias):
    """x W^T + b."""
    return ad.matmul(x, ad.transpose(weight)) + bias


def angular_scores(x, prototypes):
    """Inner products of sphere points (rows) with prototype columns."""
    return ad.matmul(x, prototypes)


def mlr_scores(x, offsets, normals, k):
    """
    Hyperbolic MLR logits for rows ``x`` against C gyroplanes.

    ``offsets`` and ``normals`` are C x n. Rows and offsets are first
    clipped into the chart of the conformal factor. The batch is lifted to
    B x 1 x n so that z = (-p_j) (+) x is formed for every pair at once.
    """
    c = abs(k)
    root = math.sqrt(c)
    normal_norm = ad.norm(normals)  # C x 1
    if np.any(ad.value(normal_norm) < MIN_NORMAL_NORM):
        raise Singularity("an MLR normal vector has vanished")

    x = manifold.chart_map(x, k)
    offsets = manifold.chart_map(offsets, k)
    B, n = ad.value(x).shape
    C = ad.value(offsets).shape[0]
    lam = manifold.conformal(x, k)  # B x 1
    z = manifold.mobius_sum(-offsets, ad.reshape(x, (B, 1, n)), k)  # B x C x n
    zw = ad.sum(z * normals, axis=-1)
    z2 = ad.sum(z * z, axis=-1)
    wn = ad.reshape(normal_norm, (1, C))
    den = (1.0 - c * z2) * wn
    if np.any(np.abs(ad.value(den)) < SINGULARITY_TOL):
        raise Singularity("MLR hyperplane denominator vanished")
    return lam * wn / root * ad.asinh(2.0 * root * zw / den)


def softmax_cross_entropy(logits, labels):
    """Mean over the batch of -log softmax(logits)[label]."""
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = ad.value(logits).shape[-1]
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise BadLabel(f"labels must lie in [0, {n_classes}), got range [{labels.min()}, {labels.max()}]")
    picked = ad.select(ad.log_softmax(logits), labels)
    return -ad.mean(picked)


# ── Heads ────────────────────────────────────────────────


@dataclass
class EuclideanHead:
    weight: np.ndarray  # C x n
    bias: np.ndarray  # C

    @classmethod
    def init(cls, dim, n_classes, rng):
        bound = 1.0 / math.sqrt(dim)
        return cls(rng.uniform(-bound, bound, (n_classes, dim)), np.zeros(n_classes))

    def check(self):
        if not (np.all(np.isfinite(self.weight)) and np.all(np.isfinite(self.bias))):
            raise ManifoldViolation("Euclidean head has non-finite entries")


@dataclass
class AngularHead:
    """Class prototypes stored as columns, each on the sphere of curvature k."""

    prototypes: np.ndarray  # n x C
    curvature: float = 1.0

    @classmethod
    def init(cls, dim, n_classes, rng, curvature=1.0):
        raw = rng.standard_normal((dim, n_classes))
        return cls(manifold.sphere_map(raw, curvature, axis=0), curvature)

    def project(self):
        self.prototypes = manifold.sphere_map(self.prototypes, self.curvature, axis=0)

    def check(self):
        sq = np.sum(self.prototypes ** 2, axis=0) * self.curvature
        if np.any(np.abs(sq - 1.0) > 1e-9):
            raise ManifoldViolation("angular prototype left the sphere")


@dataclass
class HyperbolicMLRHead:
    offsets: np.ndarray  # C x n, ball points
    normals: np.ndarray  # C x n
    curvature: float = -1.0
    xi: float = XI_DEFAULT

    @classmethod
    def init(cls, dim, n_classes, rng, curvature=-1.0, xi=XI_DEFAULT):
        bound = 1.0 / math.sqrt(dim)
        normals = rng.uniform(-bound, bound, (n_classes, dim))
        return cls(np.zeros((n_classes, dim)), normals, curvature, xi)

    def project(self):
        self.offsets = manifold.chart_map(self.offsets, self.curvature, self.xi)

    def check(self):
        radius = manifold.ball_radius(self.curvature)
        if np.any(np.linalg.norm(self.offsets, axis=1) > radius * (1.0 + 1e-12)):
            raise ManifoldViolation("MLR offset left the ball")
        if np.any(np.linalg.norm(self.normals, axis=1) < MIN_NORMAL_NORM):
            raise ManifoldViolation("MLR normal vector has vanished")


@dataclass(frozen=True)
class ConfidenceVec:
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or np.any(probs < 0.0) or np.any(probs > 1.0):
            raise ValueError("confidences must be a vector of values in [0, 1]")
        if abs(math.fsum(probs) - 1.0) > 1e-9:
            raise ValueError(f"confidences sum to {math.fsum(probs)!r}, not 1")
        object.__setattr__(self, "probs", probs)

    def __len__(self):
        return len(self.probs)


# ── Typed logits ─────────────────────────────────────────


def _batch(x):
    coords = getattr(x, "coords", x)
    arr = np.asarray(coords, dtype=np.float64)
    return np.atleast_2d(arr), arr.ndim == 1


def _check_dim(rows, dim, what):
    if rows.shape[1] != dim:
        raise DimMismatch(f"{what} expects dim {dim}, got {rows.shape[1]}")


def angular_logits(x, head):
    rows, single = _batch(x)
    _check_dim(rows, head.prototypes.shape[0], "angular head")
    k = getattr(x, "curvature", head.curvature)
    if k != head.curvature:
        raise CurvatureMismatch(f"point curvature {k} differs from head curvature {head.curvature}")
    out = angular_scores(rows, head.prototypes)
    return out[0] if single else out


def hyperbolic_mlr_logits(x, head):
    rows, single = _batch(x)
    _check_dim(rows, head.offsets.shape[1], "MLR head")
    out = mlr_scores(rows, head.offsets, head.normals, head.curvature)
    return out[0] if single else out


def euclidean_logits(x, head):
    rows, single = _batch(x)
    _check_dim(rows, head.weight.shape[1], "Euclidean head")
    out = linear_scores(rows, head.weight, head.bias)
    return out[0] if single else out


# ── Softmax & losses ─────────────────────────────────────


def softmax(logits):
    return ConfidenceVec(ad.softmax(np.asarray(logits, dtype=np.float64)))


def cross_entropy(conf, label):
    probs = conf.probs if isinstance(conf, ConfidenceVec) else np.asarray(conf, dtype=np.float64)
    if not 0 <= int(label) < len(probs):
        raise BadLabel(f"label {label} outside [0, {len(probs)})")
    return -math.log(max(float(probs[int(label)]), PROB_FLOOR))


def angular_loss(logits_batch, labels):
    return softmax_cross_entropy(logits_batch, labels)
