"""
Boundary Guards
===============
Validates embeddings against their manifold, enforces training-split
purity, and sanitises sample ids read from user files.
"""

import re
import logging

import numpy as np

from curvednet.config import OOD_LABEL, MAX_ID_LENGTH, SPHERE_RTOL, BALL_SLACK
from curvednet.errors import TrainPurityError

logger = logging.getLogger(__name__)


def validate_embeddings(kind, e, curvature=None):
    """
    Check a batch of embeddings (rows) against the invariant of ``kind``.

      1. Finiteness: every coordinate finite
      2. Sphere: ||e||^2 * k = 1 within 1e-9 (relative)
      3. Ball: ||e|| <= 1/|k|

    Returns (is_valid: bool, reason: str)
    """
    e = np.atleast_2d(np.asarray(e, dtype=np.float64))
    if not np.all(np.isfinite(e)):
        logger.warning("%s embeddings contain non-finite values", kind)
        return False, f"{kind} embedding has non-finite coordinates"

    if kind == "spherical":
        err = np.abs(np.sum(e * e, axis=1) * curvature - 1.0)
        if np.any(err > SPHERE_RTOL):
            return False, f"spherical embedding off the sphere (max error {err.max():.3g})"
    elif kind == "hyperbolic":
        radius = 1.0 / abs(curvature)
        norms = np.linalg.norm(e, axis=1)
        if np.any(norms > radius * (1.0 + BALL_SLACK)):
            return False, f"hyperbolic embedding outside the ball (max norm {norms.max():.6g} > {radius:.6g})"

    return True, "OK"


def check_train_purity(labels):
    """Raise TrainPurityError when an OOD sentinel label reaches training."""
    labels = np.asarray(labels)
    bad = int(np.sum(labels == OOD_LABEL))
    if bad:
        logger.error("Training batch contains %d OOD sample(s)", bad)
        raise TrainPurityError(f"{bad} OOD sample(s) reached the training split")


def sanitize_sample_id(text):
    """
    Clean a sample id before it is echoed into output files.

    - Removes control characters and commas
    - Strips leading/trailing whitespace
    - Truncates to MAX_ID_LENGTH
    """
    if not text:
        return ""

    cleaned = re.sub(r"[\x00-\x1f\x7f,]", "", text).strip()

    if len(cleaned) > MAX_ID_LENGTH:
        logger.info("Sample id truncated from %d to %d characters", len(cleaned), MAX_ID_LENGTH)
        cleaned = cleaned[:MAX_ID_LENGTH]

    return cleaned
