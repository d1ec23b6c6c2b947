"""Deterministic synthetic image streams for desk-scale experiments.

Each class is a Gaussian intensity blob with a class-specific center;
examples jitter the center and optionally add pixel noise. An optional
abrupt drift point swaps two classes' generators mid-stream.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..data import ImageDataset
from ..errors import ConfigError


@dataclass
class SyntheticSpec:
    """Recipe for one synthetic labeled image set."""

    n_classes: int = 3
    image_size: int = 16
    channels: int = 1
    count: int = 3000
    blob_width: float = 2.5  # spatial stddev of the intensity blob
    jitter: float = 1.5  # stddev of the per-example center offset
    pixel_noise: float = 0.0  # stddev of additive pixel noise
    centers: list = None  # per-class (row, col); default: ring placement
    drift_at: int = None  # example index where two generators swap
    drift_swap: tuple = (0, 1)

    def resolved_centers(self):
        if self.centers is not None:
            if len(self.centers) != self.n_classes:
                raise ConfigError("need one center per class")
            return np.asarray(self.centers, dtype=np.float64)
        mid = (self.image_size - 1) / 2.0
        radius = self.image_size / 4.0
        angles = 2.0 * math.pi * np.arange(self.n_classes) / self.n_classes
        return np.stack([mid + radius * np.sin(angles), mid + radius * np.cos(angles)], axis=1)

    @classmethod
    def from_dict(cls, obj):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown synthetic spec fields: {sorted(unknown)}")
        spec = cls(**obj)
        if spec.drift_swap is not None:
            spec.drift_swap = tuple(spec.drift_swap)
        return spec


def make_synthetic_stream(spec, seed):
    """Generate the labeled image set described by `spec`, deterministically."""
    if spec.n_classes < 2:
        raise ConfigError(f"need at least 2 classes, got {spec.n_classes}")
    if spec.count < 1:
        raise ConfigError(f"need a positive example count, got {spec.count}")
    rng = np.random.default_rng(seed)
    size = spec.image_size
    centers = spec.resolved_centers()

    labels = rng.integers(0, spec.n_classes, size=spec.count).astype(np.int64)
    gen_ids = labels.copy()
    if spec.drift_at is not None:
        a, b = spec.drift_swap
        after = np.arange(spec.count) >= spec.drift_at
        gen_ids[after & (labels == a)] = b
        gen_ids[after & (labels == b)] = a

    offsets = rng.normal(0.0, spec.jitter, size=(spec.count, 2)) if spec.jitter > 0 else np.zeros((spec.count, 2))
    cy = centers[gen_ids, 0] + offsets[:, 0]
    cx = centers[gen_ids, 1] + offsets[:, 1]

    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    d2 = (yy[None] - cy[:, None, None]) ** 2 + (xx[None] - cx[:, None, None]) ** 2
    blobs = np.exp(-d2 / (2.0 * spec.blob_width**2))
    if spec.pixel_noise > 0:
        blobs = blobs + rng.normal(0.0, spec.pixel_noise, size=blobs.shape)
    images = np.repeat(blobs[:, None, :, :], spec.channels, axis=1)
    images = np.clip(images, 0.0, 1.0).astype(np.float32)
    return ImageDataset(images=images, labels=labels, num_classes=spec.n_classes)
