"""Core export path: CIFAR-10 binary in, SDE1 embeddings out."""

import dataclasses
import json
import os
import struct
import tempfile

import numpy as np
import torch
import torch.nn.functional as F
from torchvision.models import resnet34

CIFAR_RECORD_BYTES = 3073  # 1 label byte + 3 * 32 * 32 pixels
CIFAR_NUM_CLASSES = 10
EMBED_DIM = 512  # ResNet-34 global-pooled penultimate width

_INPUT_SIZE = 224
_IMAGENET_MEAN = (0.485, 0.456, 0.406)
_IMAGENET_STD = (0.229, 0.224, 0.225)
_MAGIC = b"SDE1"


class ExportError(RuntimeError):
    """Anything that should stop the export before bytes hit disk."""


@dataclasses.dataclass
class ExportManifest:
    """One export job; `weights=None` means the torchvision hub checkpoint."""

    dataset: str
    out: str
    weights: str = None
    backbone: str = "resnet34"
    dim: int = EMBED_DIM
    batch: int = 256
    threads: int = 1


def read_cifar10(path):
    """(images, labels) from one CIFAR-10 binary file.

    Images come back float32, (n, 3, 32, 32), scaled to [0, 1]; record
    order is preserved.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    n, trailing = divmod(len(raw), CIFAR_RECORD_BYTES)
    if trailing != 0:
        raise ExportError(
            f"{path}: not a CIFAR-10 binary file "
            f"(length {len(raw)} is not a multiple of {CIFAR_RECORD_BYTES})"
        )
    if n == 0:
        raise ExportError(f"{path}: dataset is empty")
    records = np.frombuffer(raw, dtype=np.uint8).reshape(n, CIFAR_RECORD_BYTES)
    labels = records[:, 0]
    if labels.max() >= CIFAR_NUM_CLASSES:
        bad = int(np.argmax(labels >= CIFAR_NUM_CLASSES))
        raise ExportError(
            f"{path}: label byte {labels[bad]} >= {CIFAR_NUM_CLASSES} in record {bad}"
        )
    images = records[:, 1:].reshape(n, 3, 32, 32).astype(np.float32) / 255.0
    return images, labels.copy()


def load_backbone(weights_path=None):
    """ResNet-34 with the classifier head removed, in eval mode.

    `weights_path` loads a locally saved state dict; without it the
    torchvision ImageNet checkpoint is used (downloaded or cached by
    torchvision itself).
    """
    model = resnet34(weights=None)
    if weights_path is not None:
        try:
            state = torch.load(weights_path, map_location="cpu", weights_only=True)
        except FileNotFoundError:
            raise ExportError(
                f"weights file not found: {weights_path}. Save one on a connected "
                "machine with torch.save(resnet34(weights='IMAGENET1K_V1')"
                ".state_dict(), path) and point --weights at it."
            ) from None
        except Exception as e:
            raise ExportError(f"{weights_path}: cannot load state dict ({e})") from e
        try:
            model.load_state_dict(state)
        except RuntimeError as e:
            raise ExportError(f"{weights_path}: not a ResNet-34 state dict ({e})") from e
    else:
        try:
            from torchvision.models import ResNet34_Weights

            model = resnet34(weights=ResNet34_Weights.IMAGENET1K_V1)
        except Exception as e:
            raise ExportError(
                f"ImageNet weights unavailable ({e}). Either let torchvision reach "
                "its download mirror once, or pass --weights with a locally saved "
                "resnet34 state dict."
            ) from e
    model.fc = torch.nn.Identity()  # tap the global-pooled 512-d features
    model.eval()
    return model


def _embed_all(model, images, batch):
    mean = torch.tensor(_IMAGENET_MEAN).view(1, 3, 1, 1)
    std = torch.tensor(_IMAGENET_STD).view(1, 3, 1, 1)
    chunks = []
    with torch.inference_mode():
        for start in range(0, len(images), batch):
            x = torch.from_numpy(images[start : start + batch])
            x = F.interpolate(x, size=_INPUT_SIZE, mode="bilinear", align_corners=False)
            x = (x - mean) / std
            chunks.append(model(x).numpy().astype("<f4"))
    return np.concatenate(chunks)


def export_embeddings(manifest):
    """Run the backbone over the dataset and write the SDE1 file.

    The output is written atomically (temp file + rename), so a failed
    export never leaves a partial file at `manifest.out`.
    """
    if manifest.dim != EMBED_DIM:
        raise ExportError(f"declared dim {manifest.dim} != backbone dim {EMBED_DIM}")
    if manifest.batch < 1:
        raise ExportError("batch must be >= 1")
    torch.set_num_threads(max(1, manifest.threads))

    images, labels = read_cifar10(manifest.dataset)
    model = load_backbone(manifest.weights)
    vectors = _embed_all(model, images, manifest.batch)
    if not np.isfinite(vectors).all():
        raise ExportError("backbone produced non-finite values; refusing to write")

    comment = json.dumps(
        {
            "tool": "embed-export",
            "backbone": manifest.backbone,
            "weights": manifest.weights or "torchvision:IMAGENET1K_V1",
            "dataset": os.path.basename(manifest.dataset),
            "count": len(labels),
            "dim": EMBED_DIM,
            "resize": f"bilinear 32->{_INPUT_SIZE}",
            "normalize": {"mean": list(_IMAGENET_MEAN), "std": list(_IMAGENET_STD)},
        },
        sort_keys=True,
    ).encode()

    blob = bytearray()
    blob += _MAGIC
    blob += struct.pack("<II", len(labels), EMBED_DIM)
    for label, row in zip(labels, vectors):
        blob += struct.pack("B", int(label))
        blob += row.tobytes()
    blob += comment

    out_dir = os.path.dirname(os.path.abspath(manifest.out)) or "."
    fd, tmp = tempfile.mkstemp(dir=out_dir, suffix=".sde1.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, manifest.out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return manifest.out
