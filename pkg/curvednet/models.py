"""
Models & Training
=================
Builds the Euclidean baseline, the Geometric-in-One (single curved
classifier) and Geometric-in-Two (Euclidean plus curved classifiers)
networks over a small rectifier feature extractor, trains them with
plain SGD on the summed branch cross-entropies, and saves / loads them.

Architectures:
    baseline  Euclidean head only
    sio, hio  one spherical or hyperbolic head (GiO)
    mio       one head per mixed component (GiO on a product manifold)
    sit, hit  Euclidean head + one curved head (GiT)
    mit       Euclidean head + one head per mixed component
"""

import json
import math
import time
import logging
from dataclasses import dataclass, field, asdict

import numpy as np

from curvednet import autodiff as ad
from curvednet import heads, manifold
from curvednet.config import (
    MODEL_MAGIC, XI_DEFAULT, ARCHITECTURES, DEFAULT_CURVATURE_S, DEFAULT_CURVATURE_H,
)
from curvednet.errors import (
    DimMismatch, EmptyDataset, NonFiniteLoss, ModelFormatError, ManifoldViolation, BadLabel,
    Singularity,
)
from curvednet.guards import check_train_purity, validate_embeddings

logger = logging.getLogger(__name__)

FAMILIES = {
    "baseline": "baseline",
    "sio": "gio", "hio": "gio", "mio": "gio",
    "sit": "git", "hit": "git", "mit": "git",
}


@dataclass(frozen=True)
class GeometryTag:
    kind: str  # euclidean | spherical | hyperbolic
    curvature: float = 0.0

    def __post_init__(self):
        if self.kind == "euclidean":
            return
        if self.kind not in ("spherical", "hyperbolic"):
            raise ValueError(f"unknown geometry '{self.kind}'")
        object.__setattr__(self, "curvature", manifold.check_curvature(self.curvature, self.kind))


@dataclass
class ModelConfig:
    architecture: str
    input_dim: int
    n_classes: int
    embed_dim: int = 8
    hidden_dims: tuple = (64, 64)
    extractor: str = "mlp"  # mlp | identity
    curvature_s: float = DEFAULT_CURVATURE_S
    curvature_h: float = DEFAULT_CURVATURE_H
    mixed_components: tuple = ("spherical", "hyperbolic")
    hyperbolic_linear: bool = False
    xi: float = XI_DEFAULT

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"architecture must be one of {ARCHITECTURES}, got '{self.architecture}'")
        if self.n_classes < 2:
            raise ValueError("a classifier needs at least 2 classes")
        if self.extractor == "identity":
            self.embed_dim = self.input_dim
        self.hidden_dims = tuple(int(h) for h in self.hidden_dims)
        self.mixed_components = tuple(self.mixed_components)

    @property
    def family(self):
        return FAMILIES[self.architecture]

    def tag(self, kind):
        if kind == "spherical":
            return GeometryTag(kind, self.curvature_s)
        if kind == "hyperbolic":
            return GeometryTag(kind, self.curvature_h)
        return GeometryTag("euclidean")

    def branches(self):
        """Ordered geometry tags, one per classifier branch."""
        arch = self.architecture
        if arch == "baseline":
            kinds = ["euclidean"]
        elif arch in ("sio", "sit"):
            kinds = ["spherical"]
        elif arch in ("hio", "hit"):
            kinds = ["hyperbolic"]
        else:
            kinds = list(self.mixed_components)
        if self.family == "git":
            kinds = ["euclidean"] + [k for k in kinds if k != "euclidean"]
        return [self.tag(k) for k in kinds]


@dataclass
class TrainConfig:
    epochs: int = 50
    lr: float = 0.05
    batch_size: int = 64
    seed: int = 0
    grad_clip: float = 5.0


@dataclass
class TrainReport:
    epoch_losses: list = field(default_factory=list)
    branch_losses: dict = field(default_factory=dict)
    initial_loss: float = float("nan")
    accuracy: float = float("nan")
    seed: int = 0
    wall_clock: float = 0.0

    def as_dict(self):
        return asdict(self)


class Model:
    """Configuration, named parameters and input standardization."""

    def __init__(self, config, params, input_mean=None, input_scale=None):
        self.config = config
        self.params = params
        dim = config.input_dim
        self.input_mean = np.zeros(dim) if input_mean is None else np.asarray(input_mean, dtype=np.float64)
        self.input_scale = np.ones(dim) if input_scale is None else np.asarray(input_scale, dtype=np.float64)

    @property
    def architecture(self):
        return self.config.architecture

    @property
    def branches(self):
        return self.config.branches()

    def has_euclidean_branch(self):
        return any(tag.kind == "euclidean" for tag in self.branches)

    def fit_standardizer(self, X):
        if self.config.extractor != "mlp":
            return
        self.input_mean = X.mean(axis=0)
        scale = X.std(axis=0)
        self.input_scale = np.where(scale > 1e-12, scale, 1.0)

    def head(self, kind):
        """Typed head object for one branch (inference only)."""
        p = self.params
        if kind == "euclidean":
            return heads.EuclideanHead(p["euclidean.weight"], p["euclidean.bias"])
        if kind == "spherical":
            return heads.AngularHead(p["spherical.prototypes"], self.config.curvature_s)
        return heads.HyperbolicMLRHead(
            p["hyperbolic.offsets"], p["hyperbolic.normals"], self.config.curvature_h, self.config.xi,
        )


# ── Construction ─────────────────────────────────────────


def build_model(config, seed=0):
    """Initialise every parameter from a generator seeded with ``seed``."""
    rng = np.random.default_rng(seed)
    params = ad.ParamSet()
    n, C = config.embed_dim, config.n_classes

    if config.extractor == "mlp":
        dims = [config.input_dim, *config.hidden_dims, n]
        for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
            bound = 1.0 / math.sqrt(fan_in)
            params.add(f"extractor.W{i}", rng.uniform(-bound, bound, (fan_out, fan_in)))
            params.add(f"extractor.b{i}", np.zeros(fan_out))

    for tag in config.branches():
        if tag.kind == "euclidean":
            head = heads.EuclideanHead.init(n, C, rng)
            params.add("euclidean.weight", head.weight)
            params.add("euclidean.bias", head.bias)
        elif tag.kind == "spherical":
            head = heads.AngularHead.init(n, C, rng, tag.curvature)
            params.add("spherical.prototypes", head.prototypes,
                       lambda P, k=tag.curvature: manifold.sphere_map(P, k, axis=0))
        else:
            head = heads.HyperbolicMLRHead.init(n, C, rng, tag.curvature, config.xi)
            params.add("hyperbolic.offsets", head.offsets,
                       lambda P, k=tag.curvature, xi=config.xi: manifold.chart_map(P, k, xi))
            params.add("hyperbolic.normals", head.normals)
            if config.hyperbolic_linear:
                params.add("hyperbolic.linear", np.eye(n) + rng.uniform(-0.01, 0.01, (n, n)))

    logger.debug("Built %s model with %d parameters", config.architecture, params.size())
    return Model(config, params)


# ── Forward pass ─────────────────────────────────────────


@dataclass
class ForwardResult:
    e_E: object
    transformed: dict  # kind -> Γ(e_E)
    embeddings: dict  # kind -> head input
    logits: dict
    confidences: dict


def _extract(model, X, P):
    cfg = model.config
    if cfg.extractor != "mlp":
        return X
    h = (X - model.input_mean) / model.input_scale
    n_layers = len(cfg.hidden_dims) + 1
    for i in range(n_layers):
        h = ad.matmul(h, ad.transpose(P[f"extractor.W{i}"])) + P[f"extractor.b{i}"]
        if i < n_layers - 1:
            h = ad.relu(h)
    return h


def _forward(model, X, P):
    e_E = _extract(model, X, P)
    cfg = model.config
    transformed, embeddings, logits, confidences = {}, {}, {}, {}
    for tag in model.branches:
        if tag.kind == "euclidean":
            e = e_E
            out = heads.linear_scores(e, P["euclidean.weight"], P["euclidean.bias"])
        elif tag.kind == "spherical":
            e = transformed[tag.kind] = manifold.sphere_map(e_E, tag.curvature)
            out = heads.angular_scores(e, P["spherical.prototypes"])
        else:
            e = transformed[tag.kind] = manifold.ball_map(e_E, tag.curvature, cfg.xi)
            if cfg.hyperbolic_linear:
                e = manifold.matvec(P["hyperbolic.linear"], e, tag.curvature, cfg.xi)
            e = manifold.chart_map(e, tag.curvature, cfg.xi)
            out = heads.mlr_scores(e, P["hyperbolic.offsets"], P["hyperbolic.normals"], tag.curvature)
        embeddings[tag.kind] = e
        logits[tag.kind] = out
        confidences[tag.kind] = ad.softmax(out)
    return ForwardResult(e_E, transformed, embeddings, logits, confidences)


def _check_input(model, X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.config.input_dim:
        raise DimMismatch(f"model expects {model.config.input_dim} input features, got {X.shape[1]}")
    return X


def forward(model, X):
    """
    Inference pass over a batch. Every curved embedding is checked
    against its manifold before it is returned.
    """
    X = _check_input(model, X)
    result = _forward(model, X, model.params.values)
    for tag in model.branches:
        if tag.kind == "euclidean":
            continue
        ok, reason = validate_embeddings(tag.kind, result.embeddings[tag.kind], tag.curvature)
        if not ok:
            raise ManifoldViolation(reason)
    return result


def branch_losses(model, X, labels, P=None):
    """Cross-entropy of every branch, keyed by geometry kind."""
    X = _check_input(model, X)
    labels = np.asarray(labels, dtype=np.int64)
    if np.any(labels < 0) or np.any(labels >= model.config.n_classes):
        raise BadLabel(f"labels must lie in [0, {model.config.n_classes})")
    result = _forward(model, X, model.params.values if P is None else P)
    return {kind: heads.softmax_cross_entropy(out, labels) for kind, out in result.logits.items()}


def _sum_losses(losses):
    total = 0.0
    for loss in losses.values():
        total = total + loss
    return total


def training_loss(model, X, labels, P=None):
    """Sum of the branch losses (a Var when ``P`` holds tape variables)."""
    return _sum_losses(branch_losses(model, X, labels, P))


def predict(model, X):
    """Arg-max of the mean confidence vector over branches."""
    result = forward(model, X)
    mean_conf = np.mean([result.confidences[t.kind] for t in model.branches], axis=0)
    return np.argmax(mean_conf, axis=1)


# ── Training ─────────────────────────────────────────────


def _diverge_on_singularity(model, X, labels, P, epoch, batch):
    try:
        return branch_losses(model, X, labels, P)
    except Singularity as e:
        logger.error("Singular forward pass at epoch %d batch %s: %s", epoch, batch, e)
        raise NonFiniteLoss(f"{e} at epoch {epoch}, batch {batch}", epoch=epoch, batch=batch) from e


def train(model, dataset, config):
    """
    Mini-batch SGD on the summed branch losses.

    Deterministic for a given ``config.seed``: one generator drives the
    per-epoch shuffle. Constrained parameters are re-projected after every
    step. Returns (model, TrainReport).
    """
    X = _check_input(model, dataset.features) if len(dataset) else None
    if X is None or len(X) == 0:
        raise EmptyDataset("training set is empty")
    labels = np.asarray(dataset.labels, dtype=np.int64)
    check_train_purity(labels)
    if len(np.unique(labels)) < 2:
        raise EmptyDataset("training needs samples from at least two classes")

    start = time.perf_counter()
    model.fit_standardizer(X)
    report = TrainReport(seed=config.seed)
    report.initial_loss = float(_sum_losses(_diverge_on_singularity(model, X, labels, None, 0, None)))
    report.branch_losses = {tag.kind: [] for tag in model.branches}
    rng = np.random.default_rng(config.seed)
    n = len(X)

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_total = 0.0
        epoch_branch = dict.fromkeys(report.branch_losses, 0.0)
        for b, lo in enumerate(range(0, n, config.batch_size)):
            idx = order[lo:lo + config.batch_size]
            check_train_purity(labels[idx])

            tape = ad.Tape()
            bound = model.params.attach(tape)
            losses = _diverge_on_singularity(model, X[idx], labels[idx], bound, epoch, b)
            loss = _sum_losses(losses)
            loss_value = float(ad.value(loss))
            values = {k: float(ad.value(v)) for k, v in losses.items()}
            if not math.isfinite(loss_value):
                logger.error("Non-finite loss at epoch %d batch %d: %s", epoch, b, values)
                raise NonFiniteLoss(
                    f"loss became {loss_value} at epoch {epoch}, batch {b}",
                    epoch=epoch, batch=b, branch_losses=values,
                )

            adjoints = ad.backward(tape, loss)
            model.params.accumulate(adjoints, bound)
            ad.sgd_step(model.params, config.lr, config.grad_clip or None)

            epoch_total += loss_value * len(idx)
            for k, v in values.items():
                epoch_branch[k] += v * len(idx)
            logger.debug("epoch %d batch %d loss %.6f", epoch, b, loss_value)

        report.epoch_losses.append(epoch_total / n)
        for k, v in epoch_branch.items():
            report.branch_losses[k].append(v / n)
        logger.info("Epoch %d/%d  loss %.6f", epoch + 1, config.epochs, epoch_total / n)

    report.accuracy = float(np.mean(predict(model, X) == labels))
    report.wall_clock = time.perf_counter() - start
    logger.info(
        "Trained %s: accuracy %.4f in %.2fs", model.architecture, report.accuracy, report.wall_clock
    )
    return model, report


# ── Serialization ───────────────────────────────────────


def save_model(model, path, train_config=None):
    """Write the magic line then a JSON body; floats round-trip exactly."""
    body = {
        "config": asdict(model.config),
        "geometry": [asdict(tag) for tag in model.branches],
        "params": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in model.params.values.items()
        },
        "input_mean": model.input_mean.tolist(),
        "input_scale": model.input_scale.tolist(),
        "train_config": asdict(train_config) if train_config is not None else None,
    }
    with open(path, "w", encoding="utf-8") as f:
        f.write(MODEL_MAGIC + "\n")
        json.dump(body, f, sort_keys=True, indent=1)
        f.write("\n")
    logger.info("Saved %s model to %s", model.architecture, path)


def load_model(path):
    """Read a model file written by save_model; raises ModelFormatError."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != MODEL_MAGIC:
            raise ModelFormatError(f"{path}: expected header '{MODEL_MAGIC}', got '{header[:40]}'")
        try:
            body = json.load(f)
            cfg = body["config"]
            cfg["hidden_dims"] = tuple(cfg["hidden_dims"])
            cfg["mixed_components"] = tuple(cfg["mixed_components"])
            config = ModelConfig(**cfg)
            reference = build_model(config)
            params = reference.params
            for name, entry in body["params"].items():
                if name not in params:
                    raise ModelFormatError(f"{path}: unexpected parameter '{name}'")
                arr = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
                if arr.shape != params[name].shape:
                    raise ModelFormatError(f"{path}: parameter '{name}' has shape {arr.shape}")
                params.values[name] = arr
            missing = set(params.names()) - set(body["params"])
            if missing:
                raise ModelFormatError(f"{path}: missing parameters {sorted(missing)}")
            model = Model(config, params, body["input_mean"], body["input_scale"])
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ModelFormatError):
                raise
            raise ModelFormatError(f"{path}: malformed model body ({e})") from e
    logger.info("Loaded %s model from %s", model.architecture, path)
    return model
