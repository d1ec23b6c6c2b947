"""Per-batch dataset distillation against a matcher network.

The distilled reservoir holds a fixed number of synthetic images per
class. For every class present in an incoming batch, the matcher runs
over the class's distilled slots and its batch examples in one forward
pass; the loss is the MSE between the two per-class mean output
vectors. One backward pass yields both the matcher's parameter
gradients (the optimizer then advances) and the image gradients (the
slots then take a clamped gradient-descent step).
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InitializationError
from .nn.losses import mse
from .nn.model import COMPACT_NET, build_model
from .reservoir import split_capacity
from .seeding import derive_seed


class DistilledReservoir:
    """Fixed per-class slots of synthetic images, always inside [0,1]."""

    def __init__(self, images_per_class):
        self.images = [
            np.clip(np.asarray(im, dtype=np.float64), 0.0, 1.0) for im in images_per_class
        ]
        shapes = {im.shape[1:] for im in self.images}
        if len(shapes) != 1:
            raise ValueError("all classes must share one image shape")

    @property
    def n_classes(self):
        return len(self.images)

    @property
    def capacities(self):
        return np.array([len(im) for im in self.images], dtype=np.int64)

    @property
    def total(self):
        return int(self.capacities.sum())

    @property
    def image_shape(self):
        return tuple(self.images[0].shape[1:])

    def contents(self):
        """(images, labels) over all classes, grouped by class index."""
        labels = np.concatenate(
            [np.full(len(im), c, dtype=np.int64) for c, im in enumerate(self.images)]
        )
        return np.concatenate(self.images), labels


class ReservoirBuilder:
    """Accumulates real images from stream batches until every class's
    quota is met, then yields the initial distilled reservoir."""

    def __init__(self, total, n_classes):
        self.capacities = split_capacity(total, n_classes)
        self.slots = [[] for _ in range(n_classes)]

    @property
    def missing(self):
        return [c for c, s in enumerate(self.slots) if len(s) < self.capacities[c]]

    def offer(self, images, labels):
        """Feed one batch; returns the reservoir once complete, else None."""
        labels = np.asarray(labels, dtype=np.int64)
        images = np.asarray(images, dtype=np.float64)
        for c in range(len(self.slots)):
            need = self.capacities[c] - len(self.slots[c])
            if need > 0:
                self.slots[c].extend(images[labels == c][:need])
        if not self.missing:
            return DistilledReservoir([np.stack(s) for s in self.slots])
        return None


def init_distilled(batch_iter, total, n_classes):
    """Fill the reservoir with real images taken from the stream head.

    Consumes whole batches from `batch_iter` (an iterator) until every
    class has its quota; the caller's iterator then resumes after the
    consumed batches. Returns (reservoir, batches_consumed).
    """
    builder = ReservoirBuilder(total, n_classes)
    consumed = 0
    for batch in batch_iter:
        consumed += 1
        reservoir = builder.offer(batch.images, batch.labels)
        if reservoir is not None:
            return reservoir, consumed
    raise InitializationError(
        f"stream exhausted after {consumed} batches with classes {builder.missing} still unfilled"
    )


@dataclass
class DistillStepReport:
    """Observability of one distill step."""

    losses_before: dict = field(default_factory=dict)
    losses_after: dict = field(default_factory=dict)
    matcher_update_norm: float = 0.0
    image_grad_norm: float = 0.0


def _class_loss(matcher, res_images, batch_images):
    out = matcher.forward(np.concatenate([res_images, batch_images]))
    k = len(res_images)
    return mse(out[:k].mean(axis=0), out[k:].mean(axis=0))[0]


def distill_step(reservoir, batch_images, batch_labels, matcher, optimizer, eta_images, sign=-1.0):
    """One Table-style distillation pass over the classes in the batch.

    Mutates `reservoir` (and the matcher, unless `optimizer` is None,
    which freezes it) and returns a DistillStepReport. `sign` scales the
    image step direction; the default -1 descends the matching loss.
    """
    batch_images = np.asarray(batch_images, dtype=np.float64)
    batch_labels = np.asarray(batch_labels, dtype=np.int64)
    if batch_labels.size and batch_labels.max() >= reservoir.n_classes:
        raise ValueError("batch label out of range for the reservoir")
    report = DistillStepReport()
    update_sq = 0.0
    grad_sq = 0.0
    for c in np.unique(batch_labels):
        c = int(c)
        res_c = reservoir.images[c]
        if len(res_c) == 0:
            raise ValueError(f"class {c} has no distilled slots; initialize the reservoir first")
        batch_c = batch_images[batch_labels == c]
        k, m = len(res_c), len(batch_c)

        out = matcher.forward(np.concatenate([res_c, batch_c]))
        loss, d_mean_res, d_mean_batch = mse(out[:k].mean(axis=0), out[k:].mean(axis=0))
        report.losses_before[c] = float(loss)

        d_out = np.concatenate(
            [np.repeat(d_mean_res[None, :] / k, k, axis=0),
             np.repeat(d_mean_batch[None, :] / m, m, axis=0)]
        )
        matcher.zero_grad()
        d_in = matcher.backward(d_out, need_input_grad=True)
        image_grads = d_in[:k]
        grad_sq += float((image_grads**2).sum())

        if optimizer is not None:
            before = matcher.state_copy()
            optimizer.step()
            update_sq += float(
                sum(((a - b) ** 2).sum() for a, b in zip(matcher.state_copy(), before))
            )
        reservoir.images[c] = np.clip(res_c + sign * eta_images * image_grads, 0.0, 1.0)
        report.losses_after[c] = float(_class_loss(matcher, reservoir.images[c], batch_c))
    report.matcher_update_norm = float(np.sqrt(update_sq))
    report.image_grad_norm = float(np.sqrt(grad_sq))
    return report


def matcher_reinit(matcher, schedule, batch_index, seed):
    """Re-draw matcher parameters on schedule; otherwise return it unchanged.

    `schedule` is an integer period in batches (0 = never). When batch
    `i` is a multiple of the period, a fresh matcher is built with the
    seed derived from (run seed, batch index), so the operation is
    reproducible from the run seed alone.
    """
    schedule = int(schedule)
    if schedule < 0:
        raise ValueError(f"reinit schedule must be >= 0, got {schedule}")
    if schedule == 0 or batch_index % schedule != 0:
        return matcher
    out_dim = matcher.output_dim if matcher.arch == COMPACT_NET else None
    return build_model(
        matcher.arch,
        matcher.input_shape,
        out_dim,
        seed=derive_seed(seed, "reinit", batch_index),
    )


def export_distilled(reservoir, out_dir, batch_index):
    """Dump each class's slots as raw planar u8 (clamped, x255) for inspection."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for c, images in enumerate(reservoir.images):
        raw = np.rint(np.clip(images, 0.0, 1.0) * 255.0).astype(np.uint8)
        path = os.path.join(out_dir, f"rd_batch{batch_index}_class{c}.bin")
        with open(path, "wb") as fh:
            fh.write(raw.tobytes())
        paths.append(path)
    return paths
