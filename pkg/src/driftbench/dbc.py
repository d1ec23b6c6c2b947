"""Distillation-based classification over a stream.

The loop: seed the distilled reservoir with real images from the stream
head, train the classifier on it once, then per batch distill the batch
into the reservoir and retrain the classifier; validate on a fixed
cadence, checkpoint whenever validation accuracy sets a new maximum,
and evaluate that best checkpoint on the test set when the stream ends.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .distill import ReservoirBuilder, distill_step, export_distilled, init_distilled, matcher_reinit
from .errors import ConfigError
from .metrics import RunMetrics, WallClock
from .nn.checkpoint import ModelCheckpoint
from .nn.model import COMPACT_NET, SIMPLE_CNN, build_model, canonical_arch
from .nn.optim import make_optimizer
from .reservoir import _resolve_val_interval
from .seeding import derive_seed
from .training import predict_logits, train_model_on_reservoir, validate
from .validation import check_image_batch, check_labels, resolve_classes

# train_model_on_reservoir is re-exported here because both stream
# methods share it; see training.py for the implementation.
__all__ = [
    "DbcConfig",
    "TrainingTrace",
    "DistillationClassifier",
    "run_dbc",
    "train_model_on_reservoir",
    "validate",
]


@dataclass
class DbcConfig:
    """Hyperparameters of one DBC run."""

    reservoir_size: int = 100
    model_arch: str = COMPACT_NET
    model_lr: float = 1e-3
    matcher_arch: str = SIMPLE_CNN
    matcher_lr: float = 1e-4
    optimizer: str = "adam"
    epochs_per_batch: int = 10
    val_interval: int = None  # None -> ceil(total_batches / 20)
    matcher_reinit: int = 0  # period in batches; 0 = never
    eta_images: float = 0.1
    image_update_sign: float = -1.0
    seed: int = 0
    export_dir: str = None

    def check(self, n_classes):
        canonical_arch(self.model_arch)
        canonical_arch(self.matcher_arch)
        if self.reservoir_size < n_classes:
            raise ConfigError(
                f"reservoir size {self.reservoir_size} cannot cover {n_classes} classes"
            )
        if self.epochs_per_batch < 1:
            raise ConfigError("epochs_per_batch must be >= 1")
        if self.val_interval is not None and self.val_interval < 1:
            raise ConfigError("val_interval must be >= 1")


@dataclass
class TrainingTrace:
    """Per-epoch and per-validation history of one run."""

    train_epochs: list = field(default_factory=list)  # (batch, loss, acc)
    validations: list = field(default_factory=list)  # (batch, v_acc, v_loss)
    max_acc_val: float = math.nan

    def record_epochs(self, batch, epoch_trace):
        for loss, acc in epoch_trace:
            self.train_epochs.append((batch, loss, acc))

    def record_validation(self, batch, v_acc, v_loss):
        self.validations.append((batch, v_acc, v_loss))
        if math.isnan(self.max_acc_val) or v_acc > self.max_acc_val:
            self.max_acc_val = v_acc


def run_dbc(
    train_batches,
    n_classes,
    test_images,
    test_labels,
    config,
    clock=None,
    config_id="dbc",
    val_data=None,
    total_batches=None,
):
    """Full DBC pipeline over a batch iterable; returns RunMetrics.

    `train_batches` may be a list or a one-shot iterator (pass
    `total_batches` for the latter). `val_data=(images, labels)` uses a
    held-out set for validation instead of the current reservoir.
    """
    clock = (clock or WallClock()).start()
    if total_batches is None:
        total_batches = len(train_batches)
    if total_batches < 1:
        raise ConfigError("stream has no batches; reservoir never initialized")
    config.check(n_classes)
    val_interval = _resolve_val_interval(config.val_interval, total_batches)

    batches = iter(train_batches)
    reservoir, consumed = init_distilled(batches, config.reservoir_size, n_classes)
    image_shape = reservoir.image_shape

    model = build_model(
        config.model_arch, image_shape, n_classes, seed=derive_seed(config.seed, "model")
    )
    model_opt = make_optimizer(config.optimizer, model.parameters(), config.model_lr)
    matcher = build_model(
        config.matcher_arch, image_shape, seed=derive_seed(config.seed, "matcher")
    )
    matcher_opt = make_optimizer(config.optimizer, matcher.parameters(), config.matcher_lr)

    metrics = RunMetrics(method="DBC", config_id=config_id, seed=config.seed)
    trace = TrainingTrace()
    best = None

    def train_and_log(batch_number):
        images, labels = reservoir.contents()
        epochs = train_model_on_reservoir(
            model, images, labels, model_opt, config.epochs_per_batch
        )
        trace.record_epochs(batch_number, epochs)
        t_loss, t_acc = epochs[-1]
        metrics.add("train", batch_number, t_acc, t_loss, clock)

    def validate_and_checkpoint(batch_number):
        nonlocal best
        v_images, v_labels = val_data if val_data is not None else reservoir.contents()
        v_acc, v_loss = validate(model, v_images, v_labels)
        trace.record_validation(batch_number, v_acc, v_loss)
        metrics.add("validate", batch_number, v_acc, v_loss, clock)
        if best is None or v_acc > best.val_acc:
            best = ModelCheckpoint.capture(model, v_acc)

    train_and_log(consumed)
    batch_number = consumed
    for batch in batches:
        batch_number += 1
        fresh = matcher_reinit(matcher, config.matcher_reinit, batch_number, config.seed)
        if fresh is not matcher:
            matcher = fresh
            matcher_opt = make_optimizer(
                config.optimizer, matcher.parameters(), config.matcher_lr
            )
        step = distill_step(
            reservoir,
            batch.images,
            batch.labels,
            matcher,
            matcher_opt,
            config.eta_images,
            config.image_update_sign,
        )
        if config.export_dir:
            export_distilled(reservoir, config.export_dir, batch_number)
        train_and_log(batch_number)
        if batch_number % val_interval == 0:
            validate_and_checkpoint(batch_number)
        del step  # reports are per-step observability; the run keeps none

    if best is None:
        warnings.warn("run finished with zero validations; testing the final model")
        best = ModelCheckpoint.capture(model, math.nan)
    best.restore(model)
    test_acc, test_loss = validate(model, test_images, test_labels)
    metrics.add("test", batch_number, test_acc, test_loss, clock)
    metrics.attachments["trace"] = trace
    metrics.attachments["checkpoint"] = best
    metrics.attachments["model"] = model
    metrics.attachments["reservoir"] = reservoir
    return metrics


class DistillationClassifier(BaseEstimator, ClassifierMixin):
    """Estimator facade over the distillation loop.

    Each partial_fit call is one stream batch. Batches first feed the
    reservoir's uniform init phase; once every class is covered the
    model trains on the reservoir, and subsequent batches are distilled
    in before each retraining. Checkpoint/validation scheduling belongs
    to run_dbc, not this facade.
    """

    def __init__(
        self,
        reservoir_size=100,
        model_arch=COMPACT_NET,
        model_lr=1e-3,
        matcher_arch=SIMPLE_CNN,
        matcher_lr=1e-4,
        optimizer="adam",
        epochs_per_batch=10,
        matcher_reinit=0,
        eta_images=0.1,
        seed=0,
    ):
        self.reservoir_size = reservoir_size
        self.model_arch = model_arch
        self.model_lr = model_lr
        self.matcher_arch = matcher_arch
        self.matcher_lr = matcher_lr
        self.optimizer = optimizer
        self.epochs_per_batch = epochs_per_batch
        self.matcher_reinit = matcher_reinit
        self.eta_images = eta_images
        self.seed = seed

    def _ensure_init(self, classes):
        if hasattr(self, "builder_"):
            return
        n_classes = resolve_classes(classes, None)
        if n_classes is None:
            raise NotFittedError("class count unknown; pass classes on the first partial_fit")
        self.n_classes_ = int(n_classes)
        self.classes_ = np.arange(self.n_classes_)
        self.builder_ = ReservoirBuilder(self.reservoir_size, self.n_classes_)
        self.reservoir_ = None
        self.batch_number_ = 0

    def _start_models(self, image_shape):
        self.model_ = build_model(
            self.model_arch, image_shape, self.n_classes_, seed=derive_seed(self.seed, "model")
        )
        self.model_opt_ = make_optimizer(
            self.optimizer, self.model_.parameters(), self.model_lr
        )
        self.matcher_ = build_model(
            self.matcher_arch, image_shape, seed=derive_seed(self.seed, "matcher")
        )
        self.matcher_opt_ = make_optimizer(
            self.optimizer, self.matcher_.parameters(), self.matcher_lr
        )

    def _train(self):
        images, labels = self.reservoir_.contents()
        train_model_on_reservoir(
            self.model_, images, labels, self.model_opt_, self.epochs_per_batch
        )

    def partial_fit(self, X, y, classes=None):
        X = check_image_batch(X)
        self._ensure_init(classes if classes is not None else getattr(self, "n_classes_", None))
        y = check_labels(y, len(X), self.n_classes_)
        self.batch_number_ += 1
        if self.reservoir_ is None:
            self.reservoir_ = self.builder_.offer(X, y)
            if self.reservoir_ is None:
                return self
            self._start_models(self.reservoir_.image_shape)
            self._train()
            return self
        fresh = matcher_reinit(self.matcher_, self.matcher_reinit, self.batch_number_, self.seed)
        if fresh is not self.matcher_:
            self.matcher_ = fresh
            self.matcher_opt_ = make_optimizer(
                self.optimizer, self.matcher_.parameters(), self.matcher_lr
            )
        distill_step(
            self.reservoir_, X, y, self.matcher_, self.matcher_opt_, self.eta_images
        )
        self._train()
        return self

    def predict_proba(self, X):
        if not hasattr(self, "model_"):
            raise NotFittedError("reservoir not initialized yet; keep feeding batches")
        X = check_image_batch(X)
        logits = predict_logits(self.model_, X)
        z = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.predict_proba(X).argmax(axis=1)
