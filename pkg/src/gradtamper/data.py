"""Dataset ingestion: seeded synthetic blobs and the IDX binary format.

The blob generator stands in for image datasets at desk scale; it exercises
the identical softmax/gradient path.  IDX files (the MNIST container format)
are parsed bit-exactly: big-endian u32 header words, magic 0x00000803 for
3-D uint8 image tensors and 0x00000801 for 1-D uint8 label vectors.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "IMAGE_MAGIC",
    "LABEL_MAGIC",
    "Dataset",
    "IdxFormatError",
    "synth_blobs",
    "read_idx_images",
    "read_idx_labels",
    "write_idx_images",
    "write_idx_labels",
    "load_idx",
]

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Malformed IDX file; messages carry the offending byte offset."""


@dataclass
class Dataset:
    """Immutable N x D feature matrix with integer labels in [0, C)."""

    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int
    split: str = "train"

    def __post_init__(self) -> None:
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 2 or self.inputs.shape[0] < 1:
            raise ValueError(f"inputs must be a non-empty N x D matrix, got {self.inputs.shape}")
        if self.labels.shape != (self.inputs.shape[0],):
            raise ValueError("labels length does not match input rows")
        if not np.all(np.isfinite(self.inputs)):
            raise ValueError("inputs contain NaN or Inf")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValueError(f"labels outside [0, {self.num_classes})")

    def __len__(self) -> int:
        return self.inputs.shape[0]


def synth_blobs(
    num_classes: int,
    per_class: int,
    num_features: int,
    spread: float,
    seed: int,
) -> tuple[Dataset, Dataset]:
    """Gaussian clusters at seeded random unit-scale centers, split 80/20.

    The split is stratified: each class contributes the same train/test
    counts (at least one test point per class).  Deterministic in ``seed``.
    """
    if num_classes < 2 or per_class < 2 or num_features < 1:
        raise ValueError(
            f"need num_classes >= 2, per_class >= 2, num_features >= 1; "
            f"got {num_classes}, {per_class}, {num_features}"
        )
    if not spread > 0.0:
        raise ValueError(f"spread must be positive, got {spread!r}")
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, 1.0, size=(num_classes, num_features))
    n_train = min(per_class - 1, max(1, round(0.8 * per_class)))

    tr_x, tr_y, te_x, te_y = [], [], [], []
    for c in range(num_classes):
        pts = centers[c] + spread * rng.normal(0.0, 1.0, size=(per_class, num_features))
        tr_x.append(pts[:n_train])
        te_x.append(pts[n_train:])
        tr_y.append(np.full(n_train, c))
        te_y.append(np.full(per_class - n_train, c))
    train = Dataset(np.concatenate(tr_x), np.concatenate(tr_y), num_classes, "train")
    test = Dataset(np.concatenate(te_x), np.concatenate(te_y), num_classes, "test")
    return train, test


def _read_u32s(blob: bytes, path, count: int, what: str) -> tuple[int, ...]:
    need = 4 * count
    if len(blob) < need:
        raise IdxFormatError(
            f"{path}: truncated {what}: need {need} header bytes, file has {len(blob)}"
        )
    return struct.unpack(f">{count}I", blob[:need])


def read_idx_images(path) -> np.ndarray:
    """Raw N x rows x cols uint8 pixel tensor from an IDX image file."""
    with open(path, "rb") as fh:
        blob = fh.read()
    magic, count, rows, cols = _read_u32s(blob, path, 4, "image header")
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(
            f"{path}: bad magic 0x{magic:08x} at byte 0, expected 0x{IMAGE_MAGIC:08x}"
        )
    expected = count * rows * cols
    payload = len(blob) - 16
    if payload != expected:
        raise IdxFormatError(
            f"{path}: payload from byte 16 holds {payload} bytes, "
            f"header promises {count} x {rows} x {cols} = {expected}"
        )
    return np.frombuffer(blob, dtype=np.uint8, offset=16).reshape(count, rows, cols).copy()


def read_idx_labels(path) -> np.ndarray:
    """Raw length-N uint8 label vector from an IDX label file."""
    with open(path, "rb") as fh:
        blob = fh.read()
    magic, count = _read_u32s(blob, path, 2, "label header")
    if magic != LABEL_MAGIC:
        raise IdxFormatError(
            f"{path}: bad magic 0x{magic:08x} at byte 0, expected 0x{LABEL_MAGIC:08x}"
        )
    payload = len(blob) - 8
    if payload != count:
        raise IdxFormatError(
            f"{path}: payload from byte 8 holds {payload} bytes, header promises {count}"
        )
    return np.frombuffer(blob, dtype=np.uint8, offset=8).copy()


def write_idx_images(path, images: np.ndarray) -> None:
    """Inverse of ``read_idx_images``; byte-exact for uint8 input."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError(f"expected N x rows x cols uint8 array, got shape {images.shape}")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">4I", IMAGE_MAGIC, *images.shape))
        fh.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    """Inverse of ``read_idx_labels``."""
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    if labels.ndim != 1:
        raise ValueError(f"expected a 1-D label vector, got shape {labels.shape}")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">2I", LABEL_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


def load_idx(images_path, labels_path, split: str = "train") -> Dataset:
    """Parse an IDX image/label pair into a Dataset.

    Pixels are scaled to [0, 1] and flattened to rows * cols features; the
    class count is taken from the largest label present.
    """
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(
            f"count mismatch: {images_path} has {images.shape[0]} images, "
            f"{labels_path} has {labels.shape[0]} labels"
        )
    flat = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return Dataset(flat, labels.astype(np.int64), int(labels.max()) + 1, split)
