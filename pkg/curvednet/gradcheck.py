"""
Gradient Check Suite
====================
Seeded finite-difference checks of the reverse-mode gradients of every
loss and geometric composite the models train through.

Each case draws a parameter point, builds its loss on a fresh tape and
compares against central differences. Points whose tape records a
clamp or clip input closer than GRADCHECK_MARGIN to its kink are
re-drawn.
"""

import logging

import numpy as np

from curvednet import autodiff as ad
from curvednet import heads, manifold
from curvednet.config import GRADCHECK_TOL, GRADCHECK_POINTS, GRADCHECK_COORDS, GRADCHECK_MARGIN
from curvednet.errors import GradCheckFailed

logger = logging.getLogger(__name__)

B, N, C = 8, 5, 4
MAX_REDRAWS = 100


def _ball_rows(rng, rows, dim, max_norm):
    x = rng.standard_normal((rows, dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x * rng.uniform(0.1, max_norm, (rows, 1))


def _labels(rng):
    return rng.integers(0, C, B)


# ── Cases ────────────────────────────────────────────────
# each returns (ParamSet, loss_fn(tape, bound))


def angular_case(rng, k=1.0):
    params = ad.ParamSet()
    params.add("embeddings", rng.standard_normal((B, N)))
    params.add("prototypes", manifold.sphere_map(rng.standard_normal((N, C)), k, axis=0))
    labels = _labels(rng)

    def loss_fn(tape, p):
        e_S = manifold.sphere_map(p["embeddings"], k)
        return heads.angular_loss(heads.angular_scores(e_S, p["prototypes"]), labels)

    return params, loss_fn


def mlr_case(rng, k=-1.0):
    params = ad.ParamSet()
    params.add("embeddings", _ball_rows(rng, B, N, 0.7))
    params.add("offsets", _ball_rows(rng, C, N, 0.3))
    params.add("normals", rng.uniform(-1.0, 1.0, (C, N)))
    labels = _labels(rng)

    def loss_fn(tape, p):
        e_H = manifold.ball_map(p["embeddings"], k)
        logits = heads.mlr_scores(e_H, p["offsets"], p["normals"], k)
        return heads.softmax_cross_entropy(logits, labels)

    return params, loss_fn


def euclidean_case(rng):
    params = ad.ParamSet()
    params.add("embeddings", rng.standard_normal((B, N)))
    params.add("weight", rng.uniform(-1.0, 1.0, (C, N)))
    params.add("bias", rng.uniform(-0.5, 0.5, C))
    labels = _labels(rng)

    def loss_fn(tape, p):
        logits = heads.linear_scores(p["embeddings"], p["weight"], p["bias"])
        return heads.softmax_cross_entropy(logits, labels)

    return params, loss_fn


def matvec_case(rng, k=-1.0):
    params = ad.ParamSet()
    params.add("W", np.eye(N) + rng.uniform(-0.3, 0.3, (N, N)))
    params.add("x", _ball_rows(rng, B, N, 0.5))
    target = _ball_rows(rng, B, N, 0.5)

    def loss_fn(tape, p):
        moved = manifold.matvec(p["W"], p["x"], k)
        return ad.mean(manifold.geodesic(moved, target, k))

    return params, loss_fn


def geodesic_case(rng, k=-1.0):
    params = ad.ParamSet()
    params.add("x", _ball_rows(rng, B, N, 0.6))
    params.add("y", _ball_rows(rng, B, N, 0.6))

    def loss_fn(tape, p):
        return ad.mean(manifold.geodesic(p["x"], p["y"], k) * manifold.conformal(p["x"], k))

    return params, loss_fn


CASES = {
    "angular_loss": angular_case,
    "hyperbolic_mlr_loss": mlr_case,
    "euclidean_loss": euclidean_case,
    "mobius_matvec": matvec_case,
    "geodesic": geodesic_case,
}


def _margin(params, loss_fn):
    tape = ad.Tape()
    loss_fn(tape, params.attach(tape))
    return tape.kink_margin


def check_case(name, seed=0, points=GRADCHECK_POINTS, n_coords=GRADCHECK_COORDS):
    """Maximum relative error of case ``name`` over ``points`` seeded draws."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for point in range(points):
        for _ in range(MAX_REDRAWS):
            params, loss_fn = CASES[name](rng)
            if _margin(params, loss_fn) >= GRADCHECK_MARGIN:
                break
        else:
            raise GradCheckFailed(f"{name}: no draw cleared the kink margin")
        err = ad.grad_check(loss_fn, params, seed=seed + point, n_coords=n_coords)
        worst = max(worst, err)
    logger.info("gradcheck %-20s max relative error %.3g", name, worst)
    return worst


def run_gradcheck(seed=0, tol=GRADCHECK_TOL):
    """
    Run every case; returns {name: max relative error}.

    Raises GradCheckFailed naming the failing cases when any error exceeds
    ``tol``; the full result dict is attached as ``errors``.
    """
    errors = {name: check_case(name, seed) for name in CASES}
    failed = {name: err for name, err in errors.items() if err > tol}
    if failed:
        exc = GradCheckFailed(
            "gradient check failed: " + ", ".join(f"{n}={e:.3g}" for n, e in failed.items())
        )
        exc.errors = errors
        raise exc
    return errors
