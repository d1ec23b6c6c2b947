"""Best-model snapshots and their on-disk format.

Checkpoint file layout (all integers little-endian):

    bytes 0-3   magic "DBM1"
    byte  4     arch code (1 = SimpleCNN, 2 = IntermediateCNN, 3 = CompactNet)
    bytes 5-12  u64 seed used to build the model
    byte  13    u8 rank of the input shape (always 3 here)
    next        u32 per input dimension (channels, height, width)
    next        u32 output dim (0 = architecture default)
    next        f32 validation accuracy captured with the snapshot
    next        u32 parameter count
    rest        f32 parameter values, layer order, weight before bias
"""

import struct
from dataclasses import dataclass

import numpy as np

from ..errors import FormatError
from .model import COMPACT_NET, INTERMEDIATE_CNN, SIMPLE_CNN, build_model

_MAGIC = b"DBM1"
_ARCH_CODES = {SIMPLE_CNN: 1, INTERMEDIATE_CNN: 2, COMPACT_NET: 3}
_CODE_ARCHS = {v: k for k, v in _ARCH_CODES.items()}


@dataclass(frozen=True)
class ModelCheckpoint:
    """Immutable copy of a model's parameters plus the accuracy behind it."""

    state: tuple
    val_acc: float

    @classmethod
    def capture(cls, model, val_acc):
        return cls(state=tuple(model.state_copy()), val_acc=float(val_acc))

    def restore(self, model):
        model.load_state(list(self.state))


def save_checkpoint(path, model, val_acc=0.0):
    flat = np.concatenate([p.value.ravel() for p in model.parameters()]).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("B", _ARCH_CODES[model.arch]))
        fh.write(struct.pack("<Q", int(model.seed)))
        fh.write(struct.pack("B", len(model.input_shape)))
        for dim in model.input_shape:
            fh.write(struct.pack("<I", dim))
        out_dim = 0 if model.arch in (SIMPLE_CNN, INTERMEDIATE_CNN) else model.output_dim
        fh.write(struct.pack("<I", out_dim))
        fh.write(struct.pack("<f", float(val_acc)))
        fh.write(struct.pack("<I", flat.size))
        fh.write(flat.tobytes())


def load_checkpoint(path):
    """Rebuild the model a checkpoint describes. Returns (model, val_acc)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise FormatError(f"{path}: bad checkpoint magic at byte offset 0")
    try:
        arch = _CODE_ARCHS[raw[4]]
        (seed,) = struct.unpack_from("<Q", raw, 5)
        rank = raw[13]
        off = 14
        shape = []
        for _ in range(rank):
            (dim,) = struct.unpack_from("<I", raw, off)
            shape.append(dim)
            off += 4
        (out_dim,) = struct.unpack_from("<I", raw, off)
        (val_acc,) = struct.unpack_from("<f", raw, off + 4)
        (count,) = struct.unpack_from("<I", raw, off + 8)
        flat = np.frombuffer(raw, dtype="<f4", count=count, offset=off + 12).astype(np.float64)
    except (struct.error, IndexError) as exc:
        raise FormatError(f"{path}: truncated checkpoint ({exc})") from exc
    model = build_model(arch, tuple(shape), out_dim or None, seed=int(seed))
    if count != model.num_params:
        raise FormatError(f"{path}: parameter count {count} does not match {model.arch}")
    state = []
    pos = 0
    for p in model.parameters():
        state.append(flat[pos : pos + p.value.size].reshape(p.value.shape))
        pos += p.value.size
    model.load_state(state)
    return model, float(val_acc)
