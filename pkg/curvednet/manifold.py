"""
Curved-Space Geometry
=====================
Projections onto the sphere and the Poincaré ball, Möbius addition,
geodesic distance, the hyperbolic linear map and the conformal factor.

Two layers live here:

  - batch kernels (``sphere_map``, ``ball_map``, ``mobius_sum``,
    ``geodesic``, ``matvec``, ``conformal``) acting on the last axis of
    plain arrays or tape variables; training and inference share them;
  - the typed point API (``sphere_project``, ``ball_clip``, ``mobius_add``,
    ``geodesic_dist``, ``mobius_matvec``, ``conformal_factor``) over
    validated SpherePoint / BallPoint values.

The ball has radius 1/|k| and the conformal factor is 1/(1 + k||x||^2),
both taken literally; see DESIGN.md for the comparison with the more
common 1/sqrt(|k|) convention.
"""

import math
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from curvednet import autodiff as ad
from curvednet.config import (
    XI_DEFAULT, ATANH_LIMIT, ZERO_NORM, SINGULARITY_TOL, SPHERE_RTOL, BALL_SLACK,
)
from curvednet.errors import (
    BadCurvature, ZeroVector, CurvatureMismatch, Singularity,
    ManifoldViolation, DimMismatch, DegenerateMap,
)

logger = logging.getLogger(__name__)


def check_curvature(k, kind):
    """Return ``k`` as a float after checking its sign for ``kind``."""
    k = float(k)
    if not math.isfinite(k):
        raise BadCurvature(f"{kind} curvature must be finite, got {k}")
    if kind == "spherical" and k <= 0:
        raise BadCurvature(f"spherical curvature must be > 0, got {k}")
    if kind == "hyperbolic" and k >= 0:
        raise BadCurvature(f"hyperbolic curvature must be < 0, got {k}")
    return k


def ball_radius(k):
    return 1.0 / abs(k)


def chart_radius(k):
    """
    Largest norm at which 1 + k||x||^2 stays positive, capped by the ball
    radius. Smaller than the ball radius whenever |k| < 1.
    """
    return min(ball_radius(k), 1.0 / math.sqrt(abs(k)))


# ── Batch kernels ────────────────────────────────────────


def sphere_map(x, k, axis=-1):
    """x / (sqrt(k) ||x||) along ``axis``."""
    n = ad.norm(x, axis=axis)
    if np.any(ad.value(n) < ZERO_NORM):
        raise ZeroVector("cannot project a zero vector onto the sphere")
    return x / (math.sqrt(k) * n)


def _radial_clip(x, radius, xi):
    n = ad.norm(x)
    inside = ad.value(n) <= radius
    ad.note_kink(n, radius)
    if np.all(inside):
        return x
    safe = ad.where(inside, 1.0, n)
    scaled = x * ((1.0 - xi) * radius) / safe
    return ad.where(inside, x, scaled)


def ball_map(x, k, xi=XI_DEFAULT):
    """
    Clip rows into the ball: unchanged when ||x|| <= 1/|k|, otherwise
    rescaled to norm (1 - xi)/|k|. At the boundary the unclipped branch
    is used.
    """
    return _radial_clip(x, ball_radius(k), xi)


def chart_map(x, k, xi=XI_DEFAULT):
    """
    Same clip against chart_radius(k). The MLR head and its offsets go
    through this so the conformal factor and the hyperplane denominator
    stay finite; it coincides with ball_map when |k| >= 1.
    """
    return _radial_clip(x, chart_radius(k), xi)


def mobius_sum(x, y, k):
    """Möbius addition x (+) y over the last axis (broadcasting)."""
    c = abs(k)
    xy = ad.inner(x, y)
    x2 = ad.inner(x, x)
    y2 = ad.inner(y, y)
    num = (1.0 + 2.0 * c * xy + c * y2) * x + (1.0 - c * x2) * y
    den = 1.0 + 2.0 * c * xy + (c * c) * x2 * y2
    return num / den


def geodesic(x, y, k):
    """Geodesic distance per row, keeping a trailing axis of size 1."""
    c = abs(k)
    root = math.sqrt(c)
    arg = ad.clip(root * ad.norm(mobius_sum(-x, y, k)), hi=ATANH_LIMIT)
    return (2.0 / root) * ad.atanh(arg)


def origin_distance(x, k):
    """Geodesic distance to the origin; (-0) (+) x is x itself."""
    root = math.sqrt(abs(k))
    arg = ad.clip(root * ad.norm(x), hi=ATANH_LIMIT)
    return (2.0 / root) * ad.atanh(arg)


def matvec(W, x, k, xi=XI_DEFAULT):
    """
    Hyperbolic linear map of rows ``x`` (B x n) by ``W`` (m x n).

    Rows with x = 0 map to the origin. Rows with x != 0 but Wx = 0 also
    map to the origin and raise a DegenerateMap warning.
    """
    c = abs(k)
    root = math.sqrt(c)
    wx = ad.matmul(x, ad.transpose(W))
    xn = ad.norm(x)
    wxn = ad.norm(wx)
    x_zero = ad.value(xn) < ZERO_NORM
    wx_zero = ad.value(wxn) < ZERO_NORM
    degenerate = wx_zero & ~x_zero
    if np.any(degenerate):
        warnings.warn(
            f"hyperbolic linear map sent {int(degenerate.sum())} non-zero point(s) to Wx = 0",
            DegenerateMap,
            stacklevel=2,
        )
    to_origin = x_zero | wx_zero
    safe_xn = ad.where(to_origin, 1.0, xn)
    safe_wxn = ad.where(to_origin, 1.0, wxn)
    arg = ad.clip(root * safe_xn, hi=ATANH_LIMIT)
    scale = ad.tanh(safe_wxn / safe_xn * ad.atanh(arg)) / root
    out = ad.where(to_origin, 0.0, scale * wx / safe_wxn)
    return ball_map(out, k, xi)


def conformal(x, k):
    """1 / (1 + k ||x||^2) per row, trailing axis kept."""
    den = 1.0 + k * ad.inner(x, x)
    if np.any(ad.value(den) <= SINGULARITY_TOL):
        raise Singularity("conformal factor denominator vanished at the ball boundary")
    return 1.0 / den


# ── Typed points ─────────────────────────────────────────


def _coords(values):
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimMismatch(f"a point needs a 1-D coordinate vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ManifoldViolation("point coordinates must be finite")
    return arr


@dataclass(frozen=True)
class EuclideanVec:
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _coords(self.coords))

    @property
    def dim(self):
        return self.coords.shape[0]


@dataclass(frozen=True)
class SpherePoint:
    """Point with ||x||^2 = 1/k."""

    coords: np.ndarray
    curvature: float

    def __post_init__(self):
        k = check_curvature(self.curvature, "spherical")
        coords = _coords(self.coords)
        sq = float(coords @ coords)
        if abs(sq * k - 1.0) > SPHERE_RTOL:
            raise ManifoldViolation(f"||x||^2 = {sq!r} but the sphere needs {1.0 / k!r}")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "curvature", k)

    @property
    def dim(self):
        return self.coords.shape[0]


@dataclass(frozen=True)
class BallPoint:
    """Point of the Poincaré ball of radius 1/|k|."""

    coords: np.ndarray
    curvature: float

    def __post_init__(self):
        k = check_curvature(self.curvature, "hyperbolic")
        coords = _coords(self.coords)
        norm = float(np.linalg.norm(coords))
        if norm > ball_radius(k) * (1.0 + BALL_SLACK):
            raise ManifoldViolation(f"||x|| = {norm!r} lies outside the ball of radius {ball_radius(k)!r}")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "curvature", k)

    @property
    def dim(self):
        return self.coords.shape[0]


@dataclass(frozen=True)
class ProductPoint:
    """Tagged components of a point on a product manifold."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ManifoldViolation("a product point needs at least one component")
        for comp in comps:
            if not isinstance(comp, (EuclideanVec, SpherePoint, BallPoint)):
                raise ManifoldViolation(f"unsupported product component {type(comp).__name__}")
        object.__setattr__(self, "components", comps)


def _same_ball(x, y):
    if x.curvature != y.curvature:
        raise CurvatureMismatch(f"curvatures differ: {x.curvature} vs {y.curvature}")
    if x.dim != y.dim:
        raise DimMismatch(f"dimensions differ: {x.dim} vs {y.dim}")


def _raw(x):
    if isinstance(x, (EuclideanVec, SpherePoint, BallPoint)):
        return x.coords
    return _coords(x)


# ── Typed operations ────────────────────────────────────


def origin(dim, k=-1.0):
    return BallPoint(np.zeros(dim), k)


def sphere_project(x, k):
    k = check_curvature(k, "spherical")
    return SpherePoint(sphere_map(_raw(x), k), k)


def ball_clip(x, k, xi=XI_DEFAULT):
    k = check_curvature(k, "hyperbolic")
    if not 0.0 < xi < 1.0:
        raise ValueError(f"xi must lie in (0, 1), got {xi}")
    return BallPoint(ball_map(_raw(x), k, xi), k)


def mobius_add(x, y, xi=XI_DEFAULT):
    _same_ball(x, y)
    k = x.curvature
    return BallPoint(ball_map(mobius_sum(x.coords, y.coords, k), k, xi), k)


def geodesic_dist(x, y):
    _same_ball(x, y)
    return float(geodesic(x.coords, y.coords, x.curvature)[0])


def mobius_matvec(W, x, xi=XI_DEFAULT):
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    if W.shape[1] != x.dim:
        raise DimMismatch(f"W has {W.shape[1]} columns but the point has dim {x.dim}")
    out = matvec(W, x.coords[None, :], x.curvature, xi)[0]
    return BallPoint(out, x.curvature)


def conformal_factor(x):
    return float(conformal(x.coords, x.curvature)[0])
