"""
Reference Oracles
=================
Brute-force implementations written straight from the definitions,
used to cross-check the fast code paths. Nothing here imports from the
modules it checks; inputs are anything exposing ``scores`` and
``is_ood`` sequences (a metrics.ScoreSet or a plain namespace).

The finite-difference helper is also used by the gradient checker.
"""

import math

from curvednet.errors import OneClassOnly


def _split(s):
    scores = [float(v) for v in s.scores]
    flags = [bool(v) for v in s.is_ood]
    ood = [v for v, f in zip(scores, flags) if f]
    ind = [v for v, f in zip(scores, flags) if not f]
    if not ood or not ind:
        raise OneClassOnly(
            f"need both ID and OOD samples, got {len(ind)} ID / {len(ood)} OOD"
        )
    return scores, flags, ind, ood


# ── Ranking metrics ──────────────────────────────────────


def auroc_bruteforce(s):
    """Pair counting: P(ood > id) + 0.5 * P(ood == id)."""
    _, _, ind, ood = _split(s)
    if len(ind) + len(ood) > 10000:
        raise ValueError("auroc_bruteforce is limited to 10000 samples")
    wins = 0.0
    for o in ood:
        for i in ind:
            if o > i:
                wins += 1.0
            elif o == i:
                wins += 0.5
    return wins / (len(ood) * len(ind))


def threshold_scan(s):
    """
    Full operating-point table as (tau, tpr, fpr) rows, ascending in tau.

    One row per distinct score plus a final row at +inf. A sample counts
    as flagged when its score is >= tau; anomalies are the positives.
    """
    _, _, ind, ood = _split(s)
    rows = []
    for tau in sorted(set(ind) | set(ood)) + [math.inf]:
        tp = sum(1 for v in ood if v >= tau)
        fp = sum(1 for v in ind if v >= tau)
        rows.append((tau, tp / len(ood), fp / len(ind)))
    return rows


def fpr_at_tpr_scan(s, target_tpr=0.95):
    return min(fpr for _, tpr, fpr in threshold_scan(s) if tpr >= target_tpr)


def detection_error_scan(s):
    return min(0.5 * (1.0 - tpr) + 0.5 * fpr for _, tpr, fpr in threshold_scan(s))


def aupr_sweep(s, positive="ood"):
    """
    Average precision by a descending sweep over distinct scores.

    Each threshold contributes (recall gain) * precision; with
    ``positive="id"`` the labels are swapped and scores negated.
    """
    scores, flags, _, _ = _split(s)
    if positive == "id":
        scores = [-v for v in scores]
        flags = [not f for f in flags]
    n_pos = sum(flags)
    terms = []
    prev_tp = 0
    for tau in sorted(set(scores), reverse=True):
        tp = sum(1 for v, f in zip(scores, flags) if f and v >= tau)
        fp = sum(1 for v, f in zip(scores, flags) if not f and v >= tau)
        delta = (tp - prev_tp) / n_pos
        precision = tp / (tp + fp)
        terms.append(delta * precision)
        prev_tp = tp
    return math.fsum(terms)


# ── Geometry ─────────────────────────────────────────────


def mobius_1d_reference(a, b, curvature):
    """Relativistic addition on a line: (a + b) / (1 + |k| a b)."""
    c = abs(curvature)
    return (a + b) / (1.0 + c * a * b)


# ── Derivatives ──────────────────────────────────────────


def central_difference(f, array, index, eps=1e-5):
    """(f(p + eps) - f(p - eps)) / 2 eps along flat coordinate ``index``."""
    plus = array.copy()
    minus = array.copy()
    plus.flat[index] += eps
    minus.flat[index] -= eps
    return (f(plus) - f(minus)) / (2.0 * eps)
