"""Shared oracles and fixtures.

The gradient oracle below is deliberately independent of the layer
implementations: central finite differences on a scalar readout,
compared with a floored relative error so that coordinates near zero
don't blow the ratio up on FD noise.
"""

import numpy as np
import pytest

FD_STEP = 1e-3
REL_TOL = 1e-4


def fd_coord(f, arr, idx, h=FD_STEP):
    """Central-difference derivative of scalar f() w.r.t. arr[idx] in place."""
    orig = arr[idx]
    arr[idx] = orig + h
    fp = f()
    arr[idx] = orig - h
    fm = f()
    arr[idx] = orig
    return (fp - fm) / (2.0 * h)


def fd_kink_free(f, arr, idx, h=1e-5):
    """fd_coord plus a half-step consistency probe.

    Returns (derivative, trustworthy). Piecewise-linear nets (relu,
    maxpool) have slope changes; when one falls inside the probe
    interval the two step sizes disagree by O(slope jump) instead of
    O(h^2), and the coordinate is flagged rather than reported wrong.
    """
    d1 = fd_coord(f, arr, idx, h)
    d2 = fd_coord(f, arr, idx, h / 2)
    scale = max(abs(d1), abs(d2), 1e-3)
    return d2, abs(d1 - d2) <= 1e-4 * scale


def rel_err(analytic, numeric):
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    denom = np.maximum(np.abs(a) + np.abs(n), 1e-3)
    return float(np.max(np.abs(a - n) / denom))


def sample_coords(shape, count, rng):
    """Up to `count` distinct flat indices into an array of `shape`."""
    size = int(np.prod(shape))
    take = rng.choice(size, size=min(count, size), replace=False)
    return [np.unravel_index(int(i), shape) for i in take]


def check_model_gradients(model, x, rng, coords_per_tensor=8, input_coords=16,
                          kink_aware=False):
    """Max relative FD error over sampled parameter and input coordinates.

    The scalar readout is sum(output * R) for a fixed random R, so the
    analytic upstream gradient is exactly R.

    With ``kink_aware=True`` each coordinate is probed at h and h/2 first
    (see fd_kink_free); coordinates whose FD reading straddles a
    ReLU/MaxPool slope change are excluded, and the return value becomes
    ``(worst, checked, skipped)``.
    """
    x = np.asarray(x, dtype=np.float64)
    readout = rng.standard_normal(model.forward(x).shape)

    def loss():
        return float((model.forward(x) * readout).sum())

    loss()  # build the tape
    model.zero_grad()
    d_in = model.backward(readout.copy(), need_input_grad=True)

    worst = 0.0
    checked = skipped = 0
    targets = [(p.value, p.grad, coords_per_tensor) for p in model.parameters()]
    targets.append((x, d_in, input_coords))
    for arr, grad, n_coords in targets:
        for idx in sample_coords(arr.shape, n_coords, rng):
            if kink_aware:
                num, clean = fd_kink_free(loss, arr, idx, h=FD_STEP)
                if not clean:
                    skipped += 1
                    continue
            else:
                num = fd_coord(loss, arr, idx)
            checked += 1
            worst = max(worst, rel_err(grad[idx], num))
    if kink_aware:
        return worst, checked, skipped
    return worst


def two_class_stream(n, dim=8, seed=0, margin=0.1):
    """Noiseless axis-aligned stream: feature 0 alone decides the class.

    Class 0 draws feature 0 from [0, 0.5-margin/2), class 1 from
    (0.5+margin/2, 1]; the other features are uniform noise.
    """
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=n).astype(np.int64)
    X = rng.uniform(0.0, 1.0, size=(n, dim))
    lo = 0.5 - margin / 2.0
    hi = 0.5 + margin / 2.0
    X[:, 0] = np.where(labels == 0, X[:, 0] * lo, hi + X[:, 0] * (1.0 - hi))
    return X, labels


def tiny_image_classes(n_per_class, n_classes=2, size=8, seed=0, jitter=0.8):
    """Small blob images, one blob position per class, for distill tests."""
    rng = np.random.default_rng(seed)
    centers = np.linspace(size * 0.25, size * 0.75, n_classes)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    images = []
    labels = []
    for c in range(n_classes):
        cy = centers[c] + rng.normal(0, jitter, n_per_class)
        cx = centers[n_classes - 1 - c] + rng.normal(0, jitter, n_per_class)
        d2 = (yy[None] - cy[:, None, None]) ** 2 + (xx[None] - cx[:, None, None]) ** 2
        images.append(np.exp(-d2 / 4.0)[:, None, :, :])
        labels.append(np.full(n_per_class, c, dtype=np.int64))
    return np.clip(np.concatenate(images), 0, 1), np.concatenate(labels)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
