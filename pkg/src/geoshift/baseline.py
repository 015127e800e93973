"""Per-pixel softmax-regression stand-in classifier.

An 8-class multinomial logistic model over the 10 band values of each pixel
(inputs divided by 10000). It reuses the reference training recipe:
categorical cross-entropy, Adam, initial learning rate 1e-4, mini-batches of
4 patches, reduce-on-plateau scheduling, and early stopping on validation
loss. Deliberately tiny; it exists so cross-group experiments run at desk
scale.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from geoshift import kernels
from geoshift.dataset import Patch
from geoshift.errors import DivergenceError, EmptyInputError
from geoshift.scheme import NUM_BANDS, NUM_CLASSES

FEATURE_SCALE = 10000.0

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 4  # patches per mini-batch
    loss: str = "categorical_cross_entropy"
    optimizer: str = "adam"
    plateau_factor: float = 0.5
    plateau_patience: int = 3
    min_learning_rate: float = 1e-6
    max_epochs: int = 50
    early_stopping_patience: int = 10
    pixel_stride: int = 1  # train on every stride-th pixel of each patch
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.pixel_stride < 1:
            raise ValueError(f"pixel_stride must be >= 1, got {self.pixel_stride}")
        if self.loss != "categorical_cross_entropy":
            raise ValueError(f"unsupported loss: {self.loss!r}")
        if self.optimizer != "adam":
            raise ValueError(f"unsupported optimizer: {self.optimizer!r}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    learning_rate: float


@dataclass(frozen=True)
class BaselineModel:
    weights: np.ndarray  # (8, 10)
    biases: np.ndarray  # (8,)
    config: TrainConfig
    training_log: tuple[EpochRecord, ...] = ()
    feature_scale: float = FEATURE_SCALE

    def __post_init__(self):
        self.weights.setflags(write=False)
        self.biases.setflags(write=False)

    @property
    def final_val_loss(self) -> float | None:
        return self.training_log[-1].val_loss if self.training_log else None


def new_model(config: TrainConfig | None = None) -> BaselineModel:
    """Zero-initialized model: uniform 1/8 probabilities everywhere."""
    return BaselineModel(
        weights=np.zeros((NUM_CLASSES, NUM_BANDS)),
        biases=np.zeros(NUM_CLASSES),
        config=config or TrainConfig(),
    )


def patch_pixels(patch: Patch, pixel_stride: int = 1):
    """Scaled per-pixel features and labels: X (n, 10) float, y (n,) int."""
    flat = patch.image.reshape(NUM_BANDS, -1)[:, ::pixel_stride]
    x = (flat.T / FEATURE_SCALE).astype(np.float64)
    y = patch.labels.reshape(-1)[::pixel_stride].astype(np.int64)
    return np.ascontiguousarray(x), y


def loss_and_grad(weights, biases, x, y):
    """Mean cross-entropy and its gradient for one batch."""
    n = x.shape[0]
    loss_sum, gw, gb = kernels.softmax_loss_grad(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.int64),
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(biases, dtype=np.float64),
    )
    return loss_sum / n, gw / n, gb / n


def mean_loss(weights, biases, x, y) -> float:
    """Mean cross-entropy without gradients."""
    p = kernels.softmax_probabilities(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(biases, dtype=np.float64),
    )
    picked = np.maximum(p[np.arange(x.shape[0]), y], 1e-300)
    return -float(np.log(picked).mean())


def train_baseline(
    train_patches: Iterable[Patch],
    val_patches: Iterable[Patch],
    config: TrainConfig | None = None,
) -> BaselineModel:
    """Mini-batch Adam training of the softmax model.

    Patch order is reshuffled each epoch from the config seed; the plateau
    schedule and early stopping watch the validation loss (the training loss
    when no validation patches are given). Raises DivergenceError naming the
    epoch if the loss goes non-finite.
    """
    config = config or TrainConfig()
    train = [patch_pixels(p, config.pixel_stride) for p in train_patches]
    if not train:
        raise EmptyInputError("train_baseline: empty training stream")
    val = [patch_pixels(p, config.pixel_stride) for p in val_patches]

    rng = np.random.default_rng(config.seed)
    weights = np.zeros((NUM_CLASSES, NUM_BANDS))
    biases = np.zeros(NUM_CLASSES)
    m_w = np.zeros_like(weights)
    v_w = np.zeros_like(weights)
    m_b = np.zeros_like(biases)
    v_b = np.zeros_like(biases)
    step = 0

    lr = config.learning_rate
    best_val = math.inf
    epochs_since_best = 0
    plateau_wait = 0
    log: list[EpochRecord] = []

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(train))
        loss_weighted = 0.0
        pixels_seen = 0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            x = np.concatenate([train[i][0] for i in batch])
            y = np.concatenate([train[i][1] for i in batch])
            loss, gw, gb = loss_and_grad(weights, biases, x, y)
            if not math.isfinite(loss) or not np.isfinite(gw).all():
                raise DivergenceError(f"non-finite loss at epoch {epoch}")
            loss_weighted += loss * x.shape[0]
            pixels_seen += x.shape[0]

            step += 1
            m_w = ADAM_BETA1 * m_w + (1 - ADAM_BETA1) * gw
            v_w = ADAM_BETA2 * v_w + (1 - ADAM_BETA2) * gw * gw
            m_b = ADAM_BETA1 * m_b + (1 - ADAM_BETA1) * gb
            v_b = ADAM_BETA2 * v_b + (1 - ADAM_BETA2) * gb * gb
            corr1 = 1 - ADAM_BETA1**step
            corr2 = 1 - ADAM_BETA2**step
            weights -= lr * (m_w / corr1) / (np.sqrt(v_w / corr2) + ADAM_EPS)
            biases -= lr * (m_b / corr1) / (np.sqrt(v_b / corr2) + ADAM_EPS)

        train_loss = loss_weighted / pixels_seen
        if val:
            val_loss = _pooled_loss(weights, biases, val)
        else:
            val_loss = train_loss
        if not math.isfinite(val_loss):
            raise DivergenceError(f"non-finite validation loss at epoch {epoch}")
        log.append(EpochRecord(epoch, train_loss, val_loss, lr))

        if val_loss < best_val:
            best_val = val_loss
            epochs_since_best = 0
            plateau_wait = 0
        else:
            epochs_since_best += 1
            plateau_wait += 1
            if plateau_wait >= config.plateau_patience:
                lr = max(lr * config.plateau_factor, config.min_learning_rate)
                plateau_wait = 0
        if epochs_since_best >= config.early_stopping_patience:
            break

    return BaselineModel(
        weights=weights, biases=biases, config=config, training_log=tuple(log)
    )


def _pooled_loss(weights, biases, pixel_sets) -> float:
    total = 0.0
    count = 0
    for x, y in pixel_sets:
        total += mean_loss(weights, biases, x, y) * x.shape[0]
        count += x.shape[0]
    return total / count


def predict_baseline(model: BaselineModel, patch: Patch):
    """Per-pixel class grid (argmax, ties to the lowest class) and the
    256 x 256 x 8 probability field."""
    x, _ = patch_pixels(patch)
    probs = kernels.softmax_probabilities(
        x,
        np.ascontiguousarray(model.weights, dtype=np.float64),
        np.ascontiguousarray(model.biases, dtype=np.float64),
    )
    classes = kernels.argmax_rows(probs)
    side = patch.labels.shape[0]
    return classes.reshape(side, side), probs.reshape(side, side, NUM_CLASSES)


def model_to_json(model: BaselineModel) -> str:
    payload = {
        "weights": [[float(v) for v in row] for row in model.weights],
        "biases": [float(v) for v in model.biases],
        "feature_scale": model.feature_scale,
        "config": {
            "learning_rate": model.config.learning_rate,
            "batch_size": model.config.batch_size,
            "loss": model.config.loss,
            "optimizer": model.config.optimizer,
            "plateau_factor": model.config.plateau_factor,
            "plateau_patience": model.config.plateau_patience,
            "min_learning_rate": model.config.min_learning_rate,
            "max_epochs": model.config.max_epochs,
            "early_stopping_patience": model.config.early_stopping_patience,
            "pixel_stride": model.config.pixel_stride,
            "seed": model.config.seed,
        },
        "final_val_loss": model.final_val_loss,
        "training_log": [
            {
                "epoch": r.epoch,
                "train_loss": r.train_loss,
                "val_loss": r.val_loss,
                "learning_rate": r.learning_rate,
            }
            for r in model.training_log
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def model_from_json(text: str) -> BaselineModel:
    raw = json.loads(text)
    config = TrainConfig(**raw["config"])
    log = tuple(
        EpochRecord(r["epoch"], r["train_loss"], r["val_loss"], r["learning_rate"])
        for r in raw.get("training_log", [])
    )
    return BaselineModel(
        weights=np.asarray(raw["weights"], dtype=np.float64),
        biases=np.asarray(raw["biases"], dtype=np.float64),
        config=config,
        training_log=log,
        feature_scale=float(raw.get("feature_scale", FEATURE_SCALE)),
    )


def with_seed(config: TrainConfig, seed: int) -> TrainConfig:
    return replace(config, seed=seed)
