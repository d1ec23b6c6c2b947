"""Model training on a (distilled or sampled) reservoir, plus validation.

Both reservoir-based methods retrain the same persistent classifier on
the current reservoir after every stream batch, so the routine lives
here and is shared. Training stops early once the epoch-mean loss has
strictly increased three epochs in a row.
"""

import numpy as np

from .nn.losses import cross_entropy

MINIBATCH = 32


class RisingLossStop:
    """Stop after `patience` consecutive strict loss increases.

    The counter resets to zero on any epoch whose loss does not exceed
    the previous epoch's.
    """

    def __init__(self, patience=3):
        self.patience = patience
        self.prev = None
        self.streak = 0

    def update(self, loss):
        """Record one epoch loss; returns True when training should stop."""
        if self.prev is not None and loss > self.prev:
            self.streak += 1
        else:
            self.streak = 0
        self.prev = loss
        return self.streak >= self.patience


def interleaved_order(labels):
    """Deterministic example order cycling through the classes.

    Round-robin over classes keeps every size-32 slice close to
    class-balanced without consuming any randomness.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) == 0:
        return np.empty(0, dtype=np.int64)
    by_class = np.argsort(labels, kind="stable")
    rank = np.empty(len(labels), dtype=np.int64)
    start = 0
    for count in np.bincount(labels):
        rank[by_class[start : start + count]] = np.arange(count)
        start += count
    return np.lexsort((labels, rank))


def train_model_on_reservoir(model, images, labels, optimizer, max_epochs, minibatch=MINIBATCH):
    """Up to `max_epochs` passes of cross-entropy training over the reservoir.

    Returns the per-epoch trace [(loss, acc), ...]; its length reveals
    whether the rising-loss rule cut training short.
    """
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(images) == 0:
        raise ValueError("cannot train on an empty reservoir")
    order = interleaved_order(labels)
    stop = RisingLossStop()
    trace = []
    for _ in range(max_epochs):
        loss_sum = 0.0
        hits = 0
        for start in range(0, len(order), minibatch):
            take = order[start : start + minibatch]
            logits = model.forward(images[take])
            loss, d_logits = cross_entropy(logits, labels[take])
            model.zero_grad()
            model.backward(d_logits)
            optimizer.step()
            loss_sum += loss * len(take)
            hits += int((logits.argmax(axis=1) == labels[take]).sum())
        epoch_loss = loss_sum / len(order)
        trace.append((epoch_loss, hits / len(order)))
        if stop.update(epoch_loss):
            break
    return trace


def predict_logits(model, images, chunk=256):
    """Forward pass in evaluation-sized chunks (no gradient bookkeeping kept)."""
    images = np.asarray(images, dtype=np.float64)
    outs = [model.forward(images[s : s + chunk]) for s in range(0, len(images), chunk)]
    model._tape = None
    return np.concatenate(outs) if outs else np.empty((0, model.output_dim))


def validate(model, images, labels):
    """(accuracy, mean cross-entropy) of the model on a labeled set."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) == 0:
        raise ValueError("validation set is empty")
    logits = predict_logits(model, images)
    loss, _ = cross_entropy(logits, labels)
    acc = float((logits.argmax(axis=1) == labels).mean())
    return acc, float(loss)
