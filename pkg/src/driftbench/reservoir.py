"""Stratified reservoir sampling and the reservoir-based classifier loop.

Each class gets its own fixed-capacity reservoir updated with the
classic algorithm: the first k items fill the slots, after which item
number i replaces a uniformly drawn slot j in {1..i} when j <= k and is
discarded otherwise. This keeps every item seen so far equally likely
to be retained.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .errors import ConfigError
from .metrics import RunMetrics, WallClock
from .nn.checkpoint import ModelCheckpoint
from .nn.model import COMPACT_NET, build_model
from .nn.optim import make_optimizer
from .seeding import derive_seed
from .training import predict_logits, train_model_on_reservoir, validate
from .validation import check_image_batch, check_labels, resolve_classes


def split_capacity(total, n_classes):
    """Per-class slot counts: floor split with the remainder going to the
    lowest class indices."""
    if n_classes < 1:
        raise ConfigError(f"need at least one class, got {n_classes}")
    if total < n_classes:
        raise ConfigError(f"reservoir of {total} cannot cover {n_classes} classes")
    base, extra = divmod(int(total), int(n_classes))
    return np.array([base + (1 if c < extra else 0) for c in range(n_classes)], dtype=np.int64)


class ClassReservoir:
    """Fixed-capacity uniform sample of one class's stream.

    Slots are 1-based in the classic formulation; `store` uses 0-based
    rows, so stream item i lands at row i-1 during the fill phase and a
    drawn j replaces row j-1 afterwards.
    """

    def __init__(self, capacity):
        self.capacity = int(capacity)
        self.store = None
        self.count = 0
        self.seen = 0

    def _ensure_store(self, item):
        if self.store is None:
            self.store = np.zeros((self.capacity,) + np.asarray(item).shape, dtype=np.asarray(item).dtype)

    def insert(self, item, rng):
        """Offer one item; Table-style single-item update."""
        item = np.asarray(item)
        self._ensure_store(item)
        self.seen += 1
        i = self.seen
        if i <= self.capacity:
            self.store[i - 1] = item
            self.count += 1
        else:
            j = int(rng.integers(1, i + 1))
            if j <= self.capacity:
                self.store[j - 1] = item

    def insert_batch(self, items, rng):
        """Offer several items in stream order.

        Distributionally identical to repeated insert(); the overflow
        draws are generated in one vectorized call, which is the
        canonical rng consumption order for reservoir updates.
        """
        items = np.asarray(items)
        n = len(items)
        if n == 0:
            return
        self._ensure_store(items[0])
        numbers = np.arange(self.seen + 1, self.seen + n + 1)
        n_fill = int((numbers <= self.capacity).sum())
        for t in range(n_fill):
            self.store[self.count] = items[t]
            self.count += 1
        rest = numbers[n_fill:]
        if len(rest):
            js = rng.integers(1, rest + 1)
            for t, j in enumerate(js):
                if j <= self.capacity:
                    self.store[j - 1] = items[n_fill + t]
        self.seen += n

    def contents(self):
        if self.store is None:
            return np.empty((0,))
        return self.store[: self.count]


class StratifiedReservoir:
    """Per-class reservoirs sharing one total slot budget."""

    def __init__(self, total, n_classes):
        self.total = int(total)
        self.n_classes = int(n_classes)
        self.capacities = split_capacity(total, n_classes)
        self.strata = [ClassReservoir(k) for k in self.capacities]

    def update(self, images, labels, rng):
        """Route one batch into the class strata (counters advance once each)."""
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise ValueError("label out of range for the reservoir's class count")
        for c in range(self.n_classes):
            take = np.nonzero(labels == c)[0]
            if len(take):
                self.strata[c].insert_batch(np.asarray(images)[take], rng)

    def contents(self):
        """(images, labels) of everything currently stored, grouped by class."""
        filled = [(c, s.contents()) for c, s in enumerate(self.strata) if s.count]
        if not filled:
            raise ValueError("reservoir is empty")
        images = np.concatenate([p for _, p in filled])
        labels = np.concatenate([np.full(len(p), c, dtype=np.int64) for c, p in filled])
        return images, labels

    @property
    def counts(self):
        return np.array([s.count for s in self.strata], dtype=np.int64)

    @property
    def stored(self):
        return int(self.counts.sum())


@dataclass
class RbcConfig:
    """Knobs for the reservoir-based classification run."""

    reservoir_size: int = 100
    model_arch: str = COMPACT_NET
    model_lr: float = 1e-4
    optimizer: str = "adam"
    epochs_per_batch: int = 10
    val_interval: int = None  # None -> ceil(total_batches / 20)
    from_scratch: bool = False
    seed: int = 0


def _resolve_val_interval(val_interval, total_batches):
    if val_interval is None:
        val_interval = max(1, math.ceil(total_batches / 20))
    if val_interval < 1:
        raise ConfigError(f"validation interval must be >= 1, got {val_interval}")
    return val_interval


def run_rbc(
    train_batches,
    n_classes,
    test_images,
    test_labels,
    config,
    clock=None,
    config_id="rbc",
    val_data=None,
    total_batches=None,
):
    """Stream -> stratified reservoir -> periodic retraining -> best-model test.

    `train_batches` may be any iterable of StreamBatch; pass
    `total_batches` when it has no len(). `val_data=(images, labels)`
    switches validation from the current reservoir to a held-out set.
    """
    clock = (clock or WallClock()).start()
    if total_batches is None:
        total_batches = len(train_batches)
    if total_batches < 1:
        raise ConfigError("stream has no batches; reservoir never initialized")
    val_interval = _resolve_val_interval(config.val_interval, total_batches)

    rng = np.random.default_rng(derive_seed(config.seed, "reservoir"))
    reservoir = StratifiedReservoir(config.reservoir_size, n_classes)
    model = None
    optimizer = None
    metrics = RunMetrics(method="RBC", config_id=config_id, seed=config.seed)
    best = None

    def fresh_model(batch_index, image_shape):
        m = build_model(
            config.model_arch,
            image_shape,
            n_classes,
            seed=derive_seed(config.seed, "model", batch_index),
        )
        return m, make_optimizer(config.optimizer, m.parameters(), config.model_lr)

    batch_number = 0
    for batch in train_batches:
        batch_number += 1
        reservoir.update(batch.images, batch.labels, rng)
        if model is None or config.from_scratch:
            model, optimizer = fresh_model(0 if not config.from_scratch else batch_number,
                                           tuple(np.asarray(batch.images).shape[1:]))
        images, labels = reservoir.contents()
        trace = train_model_on_reservoir(
            model, images, labels, optimizer, config.epochs_per_batch
        )
        t_loss, t_acc = trace[-1]
        metrics.add("train", batch_number, t_acc, t_loss, clock)
        if batch_number % val_interval == 0:
            v_images, v_labels = val_data if val_data is not None else (images, labels)
            v_acc, v_loss = validate(model, v_images, v_labels)
            metrics.add("validate", batch_number, v_acc, v_loss, clock)
            if best is None or v_acc > best.val_acc:
                best = ModelCheckpoint.capture(model, v_acc)

    if model is None:
        raise ConfigError("stream has no batches; reservoir never initialized")
    if best is None:
        warnings.warn("run finished with zero validations; testing the final model")
        best = ModelCheckpoint.capture(model, math.nan)
    best.restore(model)
    test_acc, test_loss = validate(model, test_images, test_labels)
    metrics.add("test", batch_number, test_acc, test_loss, clock)
    metrics.attachments["checkpoint"] = best
    metrics.attachments["model"] = model
    metrics.attachments["reservoir_counts"] = reservoir.counts
    return metrics


class ReservoirSamplingClassifier(BaseEstimator, ClassifierMixin):
    """Estimator facade over the reservoir + periodic retraining loop.

    Each partial_fit call is treated as one stream batch: the reservoir
    absorbs it, then the persistent model retrains on the reservoir.
    """

    def __init__(
        self,
        reservoir_size=100,
        model_arch=COMPACT_NET,
        model_lr=1e-4,
        optimizer="adam",
        epochs_per_batch=10,
        seed=0,
    ):
        self.reservoir_size = reservoir_size
        self.model_arch = model_arch
        self.model_lr = model_lr
        self.optimizer = optimizer
        self.epochs_per_batch = epochs_per_batch
        self.seed = seed

    def _ensure_init(self, image_shape, classes):
        if hasattr(self, "model_"):
            return
        n_classes = resolve_classes(classes, None)
        if n_classes is None:
            raise NotFittedError("class count unknown; pass classes on the first partial_fit")
        self.n_classes_ = int(n_classes)
        self.classes_ = np.arange(self.n_classes_)
        self.reservoir_ = StratifiedReservoir(self.reservoir_size, self.n_classes_)
        self.rng_ = np.random.default_rng(derive_seed(self.seed, "reservoir"))
        self.model_ = build_model(
            self.model_arch, image_shape, self.n_classes_, seed=derive_seed(self.seed, "model")
        )
        self.optimizer_ = make_optimizer(self.optimizer, self.model_.parameters(), self.model_lr)

    def partial_fit(self, X, y, classes=None):
        X = check_image_batch(X)
        self._ensure_init(X.shape[1:], classes if classes is not None else getattr(self, "n_classes_", None))
        y = check_labels(y, len(X), self.n_classes_)
        self.reservoir_.update(X, y, self.rng_)
        images, labels = self.reservoir_.contents()
        train_model_on_reservoir(
            self.model_, images, labels, self.optimizer_, self.epochs_per_batch
        )
        return self

    def predict_proba(self, X):
        if not hasattr(self, "model_"):
            raise NotFittedError("call partial_fit before predict")
        X = check_image_batch(X)
        logits = predict_logits(self.model_, X)
        z = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.predict_proba(X).argmax(axis=1)
