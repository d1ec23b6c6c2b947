"""Loss functions returning (value, gradient) pairs."""

import numpy as np


def cross_entropy(logits, labels):
    """Softmax + negative log-likelihood, averaged over the batch.

    Returns (loss, d_logits).
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2 or logits.shape[0] != labels.shape[0]:
        raise ValueError(f"logits {logits.shape} do not match {labels.shape[0]} labels")
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    loss = -log_probs[np.arange(n), labels].mean()
    d_logits = np.exp(log_probs)
    d_logits[np.arange(n), labels] -= 1.0
    return loss, d_logits / n


def mse(a, b):
    """Mean squared elementwise difference.

    Returns (loss, d_a, d_b).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    loss = float(np.mean(diff * diff))
    d_a = 2.0 * diff / diff.size
    return loss, d_a, -d_a
