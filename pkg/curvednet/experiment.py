"""
Experiments
===========
The generate → train → score → evaluate pipeline shared by the CLI, and
the desk-scale comparison built on it: several architectures over
several seeds of the hierarchical benchmark, plus a sweep over
hyperbolic curvatures.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from curvednet import data, metrics, models, scoring
from curvednet.errors import ModelDataDimMismatch

logger = logging.getLogger(__name__)


# ── Pipeline pieces ─────────────────────────────────────


def hierarchy_spec(cfg):
    return data.HierarchySpec(
        n_super=cfg.n_super, n_sub_per_super=cfg.n_sub_per_super, dim=cfg.data_dim,
        super_spread=cfg.super_spread, sub_spread=cfg.sub_spread, noise_std=cfg.noise_std,
        samples_per_leaf=cfg.samples_per_leaf, ood_leaves=cfg.ood_leaves,
    )


def generate(cfg, seed=None):
    seed = cfg.seed if seed is None else seed
    return data.gen_hierarchical(hierarchy_spec(cfg), seed, cfg.train_fraction)


def model_config(cfg, input_dim, n_classes, architecture=None):
    extractor = cfg.extractor
    if extractor == "auto":
        extractor = "identity" if cfg.data_source == "embeddings" else "mlp"
    return models.ModelConfig(
        architecture=architecture or cfg.architecture,
        input_dim=input_dim,
        n_classes=n_classes,
        embed_dim=cfg.embed_dim,
        hidden_dims=cfg.hidden_dims,
        extractor=extractor,
        curvature_s=cfg.curvature_s,
        curvature_h=cfg.curvature_h,
        mixed_components=cfg.mixed_components,
        hyperbolic_linear=cfg.hyperbolic_linear,
        xi=cfg.xi,
    )


def train_config(cfg, seed=None):
    return models.TrainConfig(
        epochs=cfg.epochs, lr=cfg.lr, batch_size=cfg.batch_size,
        seed=cfg.seed if seed is None else seed, grad_clip=cfg.grad_clip,
    )


def fit(cfg, train_split, seed=None, architecture=None):
    """Build and train one model; returns (model, TrainReport, TrainConfig)."""
    n_classes = int(train_split.labels.max()) + 1
    mc = model_config(cfg, train_split.dim, n_classes, architecture)
    tc = train_config(cfg, seed)
    model = models.build_model(mc, tc.seed)
    model, report = models.train(model, train_split, tc)
    return model, report, tc


def score_splits(model, splits, mode="default"):
    """Score test_id then test_ood; returns a list of (id, split, z, as) rows."""
    rows = []
    for ds in (splits.test_id, splits.test_ood):
        if ds.dim != model.config.input_dim:
            raise ModelDataDimMismatch(
                f"model expects {model.config.input_dim} features, {ds.split} has {ds.dim}"
            )
        z, anomaly = scoring.score_model(model, ds.features, mode)
        rows.extend(zip(ds.ids, [ds.split] * len(ds), z.tolist(), anomaly.tolist()))
    return rows


def score_set(rows):
    return metrics.ScoreSet(
        [r[3] for r in rows], [r[1] == "test_ood" for r in rows], [r[0] for r in rows],
    )


# ── Comparison ───────────────────────────────────────────


@dataclass
class ComparisonResult:
    runs: list = field(default_factory=list)  # dicts: seed, architecture, curvature, metrics
    baseline: str = "baseline"

    def mean(self, architecture, key="auroc"):
        vals = [r[key] for r in self.runs if r["architecture"] == architecture]
        return float(np.mean(vals)) if vals else float("nan")

    def architectures(self):
        return list(dict.fromkeys(r["architecture"] for r in self.runs))

    def strict_wins(self, candidate, key="auroc"):
        """Seeds on which ``candidate`` beats the baseline strictly."""
        base = {r["seed"]: r[key] for r in self.runs if r["architecture"] == self.baseline}
        return sum(
            1 for r in self.runs
            if r["architecture"] == candidate and r["seed"] in base and r[key] > base[r["seed"]]
        )

    def summary(self):
        rows = []
        n_seeds = len({r["seed"] for r in self.runs})
        for arch in self.architectures():
            row = {
                "architecture": arch,
                "auroc": self.mean(arch, "auroc"),
                "fpr_at_95_tpr": self.mean(arch, "fpr_at_95_tpr"),
                "detection_error": self.mean(arch, "detection_error"),
                "aupr": self.mean(arch, "aupr"),
            }
            if arch != self.baseline and self.baseline in self.architectures():
                row["non_inferior"] = row["auroc"] >= self.mean(self.baseline)
                row["strict_wins"] = f"{self.strict_wins(arch)}/{n_seeds}"
            rows.append(row)
        return rows


def _run_one(cfg, seed, architecture, splits):
    model, report, _ = fit(cfg, splits.train, seed, architecture)
    rows = score_splits(model, splits, cfg.score_mode if architecture != "baseline" else "default")
    result = metrics.evaluate(score_set(rows), cfg.detection_error_mode, cfg.aupr_positive)
    run = {"seed": seed, "architecture": architecture, "curvature_h": cfg.curvature_h,
           "train_accuracy": report.accuracy}
    run.update(result.as_dict())
    logger.info("seed %d %-8s AUROC %.4f", seed, architecture, result.auroc)
    return run


def run_comparison(cfg, seeds=None, architectures=None):
    """
    Train and evaluate each architecture on each seed of the benchmark.

    The first architecture named ``baseline`` is the reference for the
    non-inferiority gate and the strict-win count. Nothing is asserted
    here; the caller reads the summary.
    """
    seeds = tuple(cfg.compare_seeds if seeds is None else seeds)
    architectures = tuple(cfg.compare_architectures if architectures is None else architectures)
    result = ComparisonResult()
    for seed in seeds:
        splits = generate(cfg, seed)
        for arch in architectures:
            result.runs.append(_run_one(cfg, seed, arch, splits))
    for row in result.summary():
        if "non_inferior" in row and not row["non_inferior"]:
            logger.warning("%s mean AUROC is below the baseline", row["architecture"])
    return result


def run_curvature_sweep(cfg, curvatures=None, seeds=None):
    """
    Repeat the comparison for each hyperbolic curvature; run entries are
    labelled ``<architecture>@<curvature>``.
    """
    curvatures = tuple(cfg.sweep_curvatures or (-1e-4, -1e-2, -1.0)) if curvatures is None else tuple(curvatures)
    seeds = tuple(cfg.compare_seeds if seeds is None else seeds)
    result = ComparisonResult(baseline=None)
    for seed in seeds:
        splits = generate(cfg, seed)
        for k in curvatures:
            run = _run_one(replace(cfg, curvature_h=k), seed, cfg.architecture, splits)
            run["architecture"] = f"{cfg.architecture}@{k!r}"
            result.runs.append(run)
    return result
