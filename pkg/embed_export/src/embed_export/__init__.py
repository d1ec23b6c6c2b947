"""Offline embedding export: ResNet-34 features for CIFAR-10 binary files.

Reads a dataset in the CIFAR-10 binary layout, runs an ImageNet-trained
ResNet-34 over it once, and writes the penultimate global-pooled
features (512 per image) as an SDE1 embedding file. The export is an
external producer for stream-learning tools that consume SDE1; it shares
no code with them, only the byte formats.
"""

from .export import (
    CIFAR_RECORD_BYTES,
    EMBED_DIM,
    ExportError,
    ExportManifest,
    export_embeddings,
    load_backbone,
    read_cifar10,
)

__all__ = [
    "CIFAR_RECORD_BYTES",
    "EMBED_DIM",
    "ExportError",
    "ExportManifest",
    "export_embeddings",
    "load_backbone",
    "read_cifar10",
]
