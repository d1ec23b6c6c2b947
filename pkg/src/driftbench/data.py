"""Dataset ingestion, stream batching, and image-to-embedding adaptation.

Two binary formats live here and are bit-exact contracts:

* CIFAR-10 binary: 3073-byte records, 1 label byte then 3x32x32 pixel
  bytes (channel-planar R, G, B; row-major within a plane).
* "SDE1" embedding files: magic ``SDE1``, little-endian u32 count ``n``
  and u32 dim ``d``, then ``n`` records of (u8 label, ``d`` little-endian
  f32 values). Record ``i`` belongs to dataset example ``i`` in canonical
  file order. Any bytes after the last record form an opaque comment
  block that writers may use for provenance notes; readers ignore it.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FormatError, MissingEmbeddingError

CIFAR_RECORD_BYTES = 3073
CIFAR_IMAGE_SHAPE = (3, 32, 32)
CIFAR_NUM_CLASSES = 10

EMBEDDING_MAGIC = b"SDE1"


@dataclass
class ImageDataset:
    """Labeled images in canonical order.

    images: float32 (N, C, H, W) with values in [0, 1].
    labels: int64 (N,), each < num_classes.
    ids:    int64 (N,) canonical example indices (row i of an embedding
            file corresponds to the example with id i).
    """

    images: np.ndarray
    labels: np.ndarray
    num_classes: int
    ids: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.ids is None:
            self.ids = np.arange(len(self.labels), dtype=np.int64)
        if len(self.images) != len(self.labels) or len(self.labels) != len(self.ids):
            raise ValueError("images, labels and ids must have equal length")
        if self.labels.size and int(self.labels.max()) >= self.num_classes:
            raise ValueError("label out of range for declared class count")

    def __len__(self):
        return len(self.labels)

    @property
    def image_shape(self):
        return tuple(self.images.shape[1:])


@dataclass
class StreamBatch:
    """One unit of the stream: an ordered group of labeled examples."""

    images: np.ndarray
    labels: np.ndarray
    ids: np.ndarray
    index: int

    def __len__(self):
        return len(self.labels)


def load_cifar10_binary(path):
    """Load one CIFAR-10 binary batch file.

    Pixels are divided by 255.0; record order is preserved.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    n_full, trailing = divmod(len(raw), CIFAR_RECORD_BYTES)
    if trailing != 0:
        raise FormatError(
            f"{path}: truncated record at byte offset {n_full * CIFAR_RECORD_BYTES} "
            f"(file length {len(raw)} is not a multiple of {CIFAR_RECORD_BYTES})"
        )
    records = np.frombuffer(raw, dtype=np.uint8).reshape(n_full, CIFAR_RECORD_BYTES)
    labels = records[:, 0].astype(np.int64)
    bad = np.nonzero(labels >= CIFAR_NUM_CLASSES)[0]
    if bad.size:
        offset = int(bad[0]) * CIFAR_RECORD_BYTES
        raise FormatError(
            f"{path}: label byte {labels[bad[0]]} >= {CIFAR_NUM_CLASSES} at byte offset {offset}"
        )
    images = records[:, 1:].reshape((n_full,) + CIFAR_IMAGE_SHAPE)
    images = images.astype(np.float32) / 255.0
    return ImageDataset(images=images, labels=labels, num_classes=CIFAR_NUM_CLASSES)


def concat_datasets(datasets):
    """Concatenate datasets (e.g. the five CIFAR train batch files) in order."""
    if not datasets:
        raise ValueError("need at least one dataset")
    num_classes = datasets[0].num_classes
    if any(d.num_classes != num_classes for d in datasets):
        raise ValueError("datasets disagree on class count")
    images = np.concatenate([d.images for d in datasets])
    labels = np.concatenate([d.labels for d in datasets])
    return ImageDataset(images=images, labels=labels, num_classes=num_classes)


def stream_batches(dataset, batch_size, seed):
    """Split a seeded permutation of the dataset into consecutive batches.

    Batches partition the permuted dataset; only the final batch may be
    smaller than `batch_size`. The same (dataset, seed) always yields the
    identical sequence.
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    if len(dataset) == 0:
        raise ConfigError("cannot stream an empty dataset")
    perm = np.random.default_rng(seed).permutation(len(dataset))
    batches = []
    for index, start in enumerate(range(0, len(dataset), batch_size)):
        take = perm[start : start + batch_size]
        batches.append(
            StreamBatch(
                images=dataset.images[take],
                labels=dataset.labels[take],
                ids=dataset.ids[take],
                index=index,
            )
        )
    return batches


class RandomProjectionEmbedder:
    """Seeded random linear projection from flattened images to features.

    The projection matrix is sampled once from a unit Gaussian and scaled
    by 1/sqrt(input_dim), so embed(x) = W @ x.ravel() is deterministic
    given the seed and linear in the image.
    """

    def __init__(self, input_shape, dim=64, seed=0):
        self.input_shape = tuple(input_shape)
        self.dim = int(dim)
        self.seed = seed
        input_dim = int(np.prod(self.input_shape))
        rng = np.random.default_rng(seed)
        self.matrix = rng.standard_normal((self.dim, input_dim)) / np.sqrt(input_dim)

    def embed(self, image, example_id=None):
        image = np.asarray(image, dtype=np.float64)
        if image.shape != self.input_shape:
            raise ValueError(f"expected image shape {self.input_shape}, got {image.shape}")
        return self.matrix @ image.ravel()

    def embed_batch(self, images, ids=None):
        images = np.asarray(images, dtype=np.float64)
        return images.reshape(len(images), -1) @ self.matrix.T


class LookupEmbedder:
    """Serves precomputed embeddings keyed by canonical example id."""

    def __init__(self, table):
        self.table = table
        self.dim = table.dim

    def embed(self, image, example_id=None):
        if example_id is None:
            raise MissingEmbeddingError("lookup embedder requires an example id")
        return self.table.row(example_id)

    def embed_batch(self, images, ids=None):
        if ids is None:
            raise MissingEmbeddingError("lookup embedder requires example ids")
        return np.stack([self.table.row(i) for i in np.asarray(ids)])


@dataclass
class EmbeddingTable:
    """Embeddings for a dataset, row i = canonical example i."""

    vectors: np.ndarray  # float32 (n, dim)
    labels: np.ndarray  # int64 (n,)

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.labels)

    def row(self, example_id):
        i = int(example_id)
        if i < 0 or i >= len(self.labels):
            raise MissingEmbeddingError(f"no embedding stored for example {i}")
        return self.vectors[i].astype(np.float64)


def load_embeddings(path):
    """Load an SDE1 embedding file into an EmbeddingTable."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 12 or raw[:4] != EMBEDDING_MAGIC:
        raise FormatError(f"{path}: bad magic at byte offset 0 (expected {EMBEDDING_MAGIC!r})")
    n, dim = struct.unpack_from("<II", raw, 4)
    record_bytes = 1 + 4 * dim
    expected = 12 + n * record_bytes
    if len(raw) < expected:
        raise FormatError(
            f"{path}: length mismatch at byte offset {len(raw)} "
            f"(header declares {n} records of {record_bytes} bytes, file has {len(raw)} bytes)"
        )
    records = np.frombuffer(raw, dtype=np.uint8, count=n * record_bytes, offset=12)
    records = records.reshape(n, record_bytes)
    labels = records[:, 0].astype(np.int64)
    vectors = np.ascontiguousarray(records[:, 1:]).view("<f4").astype(np.float32)
    finite = np.isfinite(vectors)
    if not finite.all():
        i, j = np.argwhere(~finite)[0]
        offset = 12 + int(i) * record_bytes + 1 + 4 * int(j)
        raise FormatError(f"{path}: non-finite value at byte offset {offset}")
    return EmbeddingTable(vectors=vectors, labels=labels)


def write_embeddings(path, vectors, labels, comment=b""):
    """Write an SDE1 embedding file. Round-trips bit-exactly via load_embeddings.

    `comment` (bytes) is appended after the records as the opaque trailing
    block; loaders skip it.
    """
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    labels = np.asarray(labels)
    if vectors.ndim != 2 or len(vectors) != len(labels):
        raise ValueError("need (n, dim) vectors and n labels")
    if not np.all(np.isfinite(vectors)):
        raise ValueError("refusing to write non-finite embedding values")
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise ValueError("labels must fit in one byte")
    n, dim = vectors.shape
    with open(path, "wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<II", n, dim))
        for i in range(n):
            fh.write(struct.pack("B", int(labels[i])))
            fh.write(vectors[i].tobytes())
        if comment:
            fh.write(bytes(comment))
