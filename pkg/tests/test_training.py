import math

import numpy as np
import pytest
from conftest import tiny_image_classes

from driftbench.nn import Adam, build_model
from driftbench.training import (
    RisingLossStop,
    interleaved_order,
    predict_logits,
    train_model_on_reservoir,
    validate,
)


def stop_epoch(losses, patience=3):
    stop = RisingLossStop(patience)
    for epoch, loss in enumerate(losses, start=1):
        if stop.update(loss):
            return epoch
    return None


# --------------------------------------------------------------- early stop


def test_three_straight_increases_stop():
    assert stop_epoch([1.0, 1.1, 1.2, 1.3]) == 4


def test_dip_resets_the_streak():
    assert stop_epoch([1.0, 1.1, 0.9, 1.0, 1.1, 1.2]) == 6


def test_monotone_decrease_never_stops():
    assert stop_epoch([1.0, 0.9, 0.8, 0.7, 0.6]) is None


def test_plateau_does_not_count_as_increase():
    assert stop_epoch([1.0, 1.0, 1.0, 1.0, 1.0]) is None
    assert stop_epoch([1.0, 1.1, 1.1, 1.2, 1.3, 1.4]) == 6


# -------------------------------------------------------------- batch order


def test_interleaved_order_round_robin():
    labels = np.array([0, 0, 0, 1, 1, 2])
    order = interleaved_order(labels)
    assert np.array_equal(labels[order], [0, 1, 2, 0, 1, 0])
    assert np.array_equal(np.sort(order), np.arange(6))


def test_interleaved_order_deterministic_and_empty():
    labels = np.random.default_rng(0).integers(0, 3, size=40)
    assert np.array_equal(interleaved_order(labels), interleaved_order(labels))
    assert interleaved_order(np.empty(0, dtype=np.int64)).size == 0


# ----------------------------------------------------------------- training


def test_training_learns_tiny_problem():
    images, labels = tiny_image_classes(16, n_classes=2, seed=0)
    model = build_model("CompactNet", (1, 8, 8), output_dim=2, seed=1)
    optimizer = Adam(model.parameters(), lr=1e-3)
    trace = train_model_on_reservoir(model, images, labels, optimizer, max_epochs=15)
    assert 1 <= len(trace) <= 15
    losses = [l for l, _ in trace]
    accs = [a for _, a in trace]
    assert losses[-1] < losses[0]
    assert accs[-1] == 1.0
    acc, loss = validate(model, images, labels)
    assert acc == 1.0 and loss < losses[0]


def test_training_empty_reservoir_rejected():
    model = build_model("CompactNet", (1, 8, 8), output_dim=2, seed=0)
    with pytest.raises(ValueError):
        train_model_on_reservoir(model, np.zeros((0, 1, 8, 8)), np.zeros(0), None, 3)


def test_trace_is_loss_acc_pairs():
    images, labels = tiny_image_classes(4, n_classes=2, seed=2)
    model = build_model("CompactNet", (1, 8, 8), output_dim=2, seed=3)
    trace = train_model_on_reservoir(model, images, labels, Adam(model.parameters(), 1e-3), 2, minibatch=4)
    for loss, acc in trace:
        assert loss >= 0 and 0.0 <= acc <= 1.0


# --------------------------------------------------------------- validation


class FakeModel:
    def __init__(self, logits):
        self.logits = np.asarray(logits, dtype=np.float64)
        self.output_dim = self.logits.shape[1]
        self._tape = None

    def forward(self, x):
        return self.logits[: len(x)]


def test_validate_three_of_four():
    logits = [[2.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 0.0]]
    acc, loss = validate(FakeModel(logits), np.zeros((4, 1)), np.array([0, 0, 1, 1]))
    assert acc == 0.75
    assert loss > 0


def test_validate_uniform_logits_loss_ln10():
    acc, loss = validate(FakeModel(np.zeros((5, 10))), np.zeros((5, 1)), np.array([0, 0, 1, 2, 3]))
    assert loss == pytest.approx(math.log(10), abs=1e-12)
    assert acc == pytest.approx(0.4)  # argmax ties resolve to class 0


def test_validate_perfect():
    logits = np.array([[50.0, 0.0], [0.0, 50.0]])
    acc, loss = validate(FakeModel(logits), np.zeros((2, 1)), np.array([0, 1]))
    assert acc == 1.0 and loss == pytest.approx(0.0, abs=1e-12)


def test_validate_empty_rejected():
    with pytest.raises(ValueError):
        validate(FakeModel(np.zeros((1, 2))), np.zeros((0, 1)), np.zeros(0, dtype=np.int64))


def test_predict_logits_chunking_matches_single_pass():
    images, labels = tiny_image_classes(30, n_classes=2, seed=4)
    model = build_model("CompactNet", (1, 8, 8), output_dim=2, seed=5)
    full = model.forward(images)
    model._tape = None
    chunked = predict_logits(model, images, chunk=7)
    assert np.allclose(full, chunked, atol=0)
    assert model._tape is None
