"""Defect classification: dense softmax networks, source-to-target transfer,
cross-speed evaluation grids, binary relaxation, and the tuning sweep."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import augment, modelio, report
from .core import (
    ConfusionMatrix,
    ContractError,
    SplitMode,
    SplitSpec,
    confusion_matrix,
    make_rng,
    split_arrays,
)
from .features import FeatureEncoder, fit_encoder
from .nn import Mlp, sgd_epochs

DEFAULT_HIDDEN = (50, 50)
DEFAULT_CLASS_NAMES = ("normal", "near_failure", "failure")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 50
    learning_rate: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ContractError("train config values must be positive")


@dataclass
class ClassifierModel:
    net: Mlp
    class_names: tuple
    training_loss: List[float]
    provenance: dict = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return self.net.layer_sizes[-1]

    @property
    def input_width(self) -> int:
        return self.net.layer_sizes[0]


def train_classifier(
    features,
    labels,
    hidden_sizes: Sequence[int] = DEFAULT_HIDDEN,
    cfg: TrainConfig = TrainConfig(),
    class_names: Optional[Sequence[str]] = None,
    init_net: Optional[Mlp] = None,
    freeze_hidden: bool = False,
) -> ClassifierModel:
    """Mini-batch SGD on softmax cross-entropy; deterministic given the seed.
    `init_net` warm-starts from existing weights (the transfer path)."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if features.ndim != 2 or features.shape[0] != labels.size:
        raise ContractError("features must be 2-d and row-parallel with labels")
    n_classes = int(labels.max()) + 1 if class_names is None else len(class_names)
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ContractError("labels out of range for the class count")
    if class_names is None:
        class_names = DEFAULT_CLASS_NAMES[:n_classes] if n_classes <= 3 else tuple(
            f"class_{i}" for i in range(n_classes)
        )
    rng = make_rng(cfg.seed)
    if init_net is None:
        net = Mlp([features.shape[1], *hidden_sizes, n_classes], loss="ce", rng=rng)
    else:
        net = init_net.clone()
        if net.layer_sizes[0] != features.shape[1]:
            raise ContractError(
                f"warm-start width {net.layer_sizes[0]} does not match features {features.shape[1]}"
            )
    losses: List[float] = []
    if cfg.epochs > 0:
        if freeze_hidden:
            losses = _train_frozen(net, features, labels, cfg, rng)
        else:
            losses = sgd_epochs(net, features, labels, cfg.epochs, cfg.batch_size,
                                cfg.learning_rate, rng)
    return ClassifierModel(net=net, class_names=tuple(class_names), training_loss=losses)


def _train_frozen(net: Mlp, x, y, cfg: TrainConfig, rng) -> List[float]:
    """SGD updating only the output layer (frozen feature extractor)."""
    n = x.shape[0]
    losses = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        batch_losses = []
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            loss, grads = net.loss_and_grad(x[idx], y[idx])
            if not np.isfinite(loss):
                raise ContractError(f"non-finite training loss at epoch {epoch}")
            net.weights[-1] -= cfg.learning_rate * grads[-2]
            net.biases[-1] -= cfg.learning_rate * grads[-1]
            batch_losses.append(loss)
        losses.append(float(np.mean(batch_losses)))
    return losses


def predict_proba(model: ClassifierModel, features) -> np.ndarray:
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if features.shape[1] != model.input_width:
        raise ContractError(
            f"expected feature width {model.input_width}, got {features.shape[1]}"
        )
    return model.net.predict(features)


def predict_labels(model: ClassifierModel, features) -> np.ndarray:
    # np.argmax breaks ties at the lowest class index
    return np.argmax(predict_proba(model, features), axis=1)


def evaluate(model: ClassifierModel, features, labels) -> Tuple[float, ConfusionMatrix]:
    labels = np.asarray(labels, dtype=np.int64).ravel()
    preds = predict_labels(model, features)
    cm = confusion_matrix(labels, preds, model.class_names)
    return cm.accuracy(), cm


@dataclass
class TransferBundle:
    """Everything that crosses the transfer boundary: source network weights,
    the fitted feature encoder, and provenance."""

    model: ClassifierModel
    encoder: FeatureEncoder
    source_id: str
    config_fingerprint: str

    def __post_init__(self):
        if self.encoder.n_selected != self.model.input_width:
            raise ContractError(
                f"encoder emits {self.encoder.n_selected} features but the model "
                f"expects {self.model.input_width}"
            )


def make_bundle(model: ClassifierModel, encoder: FeatureEncoder, source_id: str,
                cfg: TrainConfig) -> TransferBundle:
    fingerprint = report.config_fingerprint(
        {"epochs": cfg.epochs, "batch_size": cfg.batch_size,
         "learning_rate": cfg.learning_rate, "seed": cfg.seed, "source": source_id}
    )
    return TransferBundle(model, encoder, source_id, fingerprint)


def train_transfer(
    bundle: TransferBundle,
    target_features_raw,
    target_labels,
    cfg: TrainConfig,
    fine_tune_lr_scale: float = 0.1,
    freeze_hidden: bool = False,
) -> ClassifierModel:
    """Fine-tune the source network on encoder-transformed target data.

    All layers stay trainable at fine_tune_lr_scale times the configured rate
    unless freeze_hidden keeps everything but the output layer fixed. Zero
    epochs returns the source weights untouched.
    """
    transformed = bundle.encoder.transform(target_features_raw)
    tuned_cfg = replace(cfg, learning_rate=cfg.learning_rate * fine_tune_lr_scale) \
        if cfg.epochs > 0 else cfg
    model = train_classifier(
        transformed,
        target_labels,
        cfg=tuned_cfg,
        class_names=bundle.model.class_names,
        init_net=bundle.model.net,
        freeze_hidden=freeze_hidden,
    )
    model.provenance = {
        "source": bundle.source_id,
        "source_config_fingerprint": bundle.config_fingerprint,
        "fine_tune_lr_scale": fine_tune_lr_scale,
        "freeze_hidden": freeze_hidden,
    }
    return model


def binary_relax(labels) -> np.ndarray:
    """Normal stays 0; near-failure and failure collapse to 1 (not-normal)."""
    labels = np.asarray(labels, dtype=np.int64)
    return (labels != 0).astype(np.int64)


def cross_rpm_matrix(
    per_rpm: Dict[int, Tuple[np.ndarray, np.ndarray]],
    hidden_sizes: Sequence[int] = DEFAULT_HIDDEN,
    cfg: TrainConfig = TrainConfig(),
    train_fraction: float = 0.7,
    augment_n_per_rpm: int = 0,
    class_names: Optional[Sequence[str]] = None,
) -> dict:
    """Train one model per speed and test on every speed, plus an
    augmented-data row trained on all speeds' training splits (and optional
    interpolants). Cells are accuracies; rows carry their averages."""
    rpms = sorted(per_rpm)
    if len(rpms) < 2:
        raise ContractError("cross-rpm grid needs >= 2 rpm datasets")
    splits = {}
    for i, rpm in enumerate(rpms):
        features, labels = per_rpm[rpm]
        spec = SplitSpec(train_fraction, SplitMode.STRATIFIED_SHUFFLE, seed=cfg.seed)
        splits[rpm] = split_arrays(features, labels, spec)
    grid: Dict[str, dict] = {}
    for i, train_rpm in enumerate(rpms):
        (ftr, ltr), _ = splits[train_rpm]
        row_cfg = replace(cfg, seed=cfg.seed + i)
        model = train_classifier(ftr, ltr, hidden_sizes, row_cfg, class_names=class_names)
        row = {}
        for test_rpm in rpms:
            _, (fte, lte) = splits[test_rpm]
            acc, _ = evaluate(model, fte, lte)
            row[str(test_rpm)] = acc
        row["average"] = float(np.mean([row[str(r)] for r in rpms]))
        grid[str(train_rpm)] = row
    # augmented row: the same per-rpm training splits pooled, plus interpolants,
    # so the single-rpm test splits stay untouched
    feats = [splits[rpm][0][0] for rpm in rpms]
    labs = [splits[rpm][0][1] for rpm in rpms]
    prov = [np.full(len(splits[rpm][0][1]), rpm, dtype=np.int64) for rpm in rpms]
    if augment_n_per_rpm > 0:
        for rpm in rpms:
            (ftr, ltr), _ = splits[rpm]
            f_new, l_new = augment.interpolate_within_rpm(
                ftr, ltr, augment_n_per_rpm, seed=cfg.seed + rpm
            )
            feats.append(f_new)
            labs.append(l_new)
            prov.append(np.full(augment_n_per_rpm, rpm, dtype=np.int64))
    combined = augment.LabeledSet(
        np.concatenate(feats), np.concatenate(labs), np.concatenate(prov)
    )
    aug_model = train_classifier(
        combined.features, combined.labels, hidden_sizes,
        replace(cfg, seed=cfg.seed + len(rpms)), class_names=class_names,
    )
    row = {}
    for test_rpm in rpms:
        _, (fte, lte) = splits[test_rpm]
        acc, _ = evaluate(aug_model, fte, lte)
        row[str(test_rpm)] = acc
    row["average"] = float(np.mean([row[str(r)] for r in rpms]))
    grid["augmented"] = row
    return {"rpms": rpms, "grid": grid, "train_fraction": train_fraction,
            "augment_n_per_rpm": augment_n_per_rpm, "seed": cfg.seed}


@dataclass(frozen=True)
class TuningStep:
    """One cumulative tuning-ledger entry; unset fields inherit the current state."""

    name: str
    select_mask: Optional[tuple] = None
    normalize: Optional[bool] = None
    hidden_sizes: Optional[tuple] = None
    epochs: Optional[int] = None
    batch_size: Optional[int] = None


def tuning_sweep(
    features,
    labels,
    steps: Sequence[TuningStep],
    base_hidden: Sequence[int] = DEFAULT_HIDDEN,
    base_cfg: TrainConfig = TrainConfig(),
    split: Optional[SplitSpec] = None,
    mode: str = "cumulative",
    class_names: Optional[Sequence[str]] = None,
) -> List[dict]:
    """Accuracy after the baseline and after each tuning step.

    Cumulative mode applies steps in ledger order; independent mode applies
    each step alone against the baseline.
    """
    if mode not in ("cumulative", "independent"):
        raise ContractError("mode must be 'cumulative' or 'independent'")
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if split is None:
        split = SplitSpec(0.7, SplitMode.STRATIFIED_SHUFFLE, seed=base_cfg.seed)
    (ftr, ltr), (fte, lte) = split_arrays(features, labels, split)

    def run(state: dict) -> float:
        x_train, x_test = ftr, fte
        if state["select_mask"] is not None:
            mask = np.asarray(state["select_mask"], dtype=bool)
            x_train, x_test = x_train[:, mask], x_test[:, mask]
        if state["normalize"]:
            names = tuple(f"f{i}" for i in range(x_train.shape[1]))
            enc = fit_encoder(x_train, names)
            x_train, x_test = enc.transform(x_train), enc.transform(x_test)
        cfg = replace(base_cfg, epochs=state["epochs"], batch_size=state["batch_size"])
        model = train_classifier(x_train, ltr, state["hidden_sizes"], cfg,
                                 class_names=class_names)
        acc, _ = evaluate(model, x_test, lte)
        return acc

    baseline = {
        "select_mask": None,
        "normalize": False,
        "hidden_sizes": tuple(base_hidden),
        "epochs": base_cfg.epochs,
        "batch_size": base_cfg.batch_size,
    }
    results = [{"step": "baseline", "accuracy": run(baseline)}]
    state = dict(baseline)
    for step in steps:
        target = state if mode == "cumulative" else dict(baseline)
        for key in ("select_mask", "normalize", "hidden_sizes", "epochs", "batch_size"):
            value = getattr(step, key)
            if value is not None:
                target[key] = value
        results.append({"step": step.name, "accuracy": run(target)})
        if mode == "cumulative":
            state = target
    return results


def save_classifier(model: ClassifierModel, path) -> None:
    payload = {
        "layer_sizes": list(model.net.layer_sizes),
        "weights": [w.copy() for w in model.net.weights],
        "biases": [b.copy() for b in model.net.biases],
        "class_names": list(model.class_names),
        "training_loss": list(model.training_loss),
        "provenance": model.provenance,
    }
    modelio.save_model("classifier", payload, path)


def load_classifier(path) -> ClassifierModel:
    _, payload = modelio.load_model(path, expected_kind="classifier")
    net = Mlp(payload["layer_sizes"], loss="ce", rng=make_rng(0))
    net.weights = [np.asarray(w) for w in payload["weights"]]
    net.biases = [np.asarray(b) for b in payload["biases"]]
    return ClassifierModel(
        net=net,
        class_names=tuple(payload["class_names"]),
        training_loss=list(payload["training_loss"]),
        provenance=payload.get("provenance", {}),
    )
