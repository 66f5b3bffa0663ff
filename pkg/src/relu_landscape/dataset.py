"""Datasets in canonical bias-augmented form.

Every dataset holds N samples of dimension D = d + 1 whose last coordinate is
exactly 1, and labels in {+1, -1}.  Loaders exist for synthetic two-class
Gaussians, MNIST IDX files and CIFAR-10 binary batches.
"""
from __future__ import annotations

import csv
import gzip
import math
import os
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

IDX_UBYTE = 0x08
IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

CIFAR_RECORD = 3073
CIFAR_PLANE = 1024
LUMA = (0.299, 0.587, 0.114)


class DatasetError(ValueError):
    """Raised when a dataset cannot be built from the given inputs."""


class IdxError(ValueError):
    """Base class for malformed IDX input."""


class IdxTruncatedError(IdxError):
    pass


class IdxTypeError(IdxError):
    pass


class IdxSizeError(IdxError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    samples: np.ndarray
    labels: np.ndarray
    image_derived: bool = False

    def __post_init__(self):
        X = np.asarray(self.samples, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 2:
            raise DatasetError(f"samples must be an (N, d+1) array with N, d >= 1, got {X.shape}")
        if y.shape != (X.shape[0],):
            raise DatasetError(f"{y.shape[0] if y.ndim else 0} labels for {X.shape[0]} samples")
        if not np.all(X[:, -1] == 1.0):
            raise DatasetError("bias coordinate must equal 1 for every sample")
        if not np.all(np.abs(y) == 1.0):
            raise DatasetError("labels must be +1 or -1")
        if not np.all(np.isfinite(X)):
            raise DatasetError("samples contain non-finite values")
        if self.image_derived:
            raw = X[:, :-1]
            if raw.min() < 0.0 or raw.max() > 1.0:
                raise DatasetError("image features must lie in [0, 1]")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "samples", X)
        object.__setattr__(self, "labels", y)

    @classmethod
    def from_raw(cls, features, labels, image_derived=False):
        """Append the bias coordinate to ``(N, d)`` raw features."""
        F = np.asarray(features, dtype=float)
        if F.ndim != 2:
            raise DatasetError("raw features must be two-dimensional")
        X = np.hstack([F, np.ones((F.shape[0], 1))])
        return cls(X, np.asarray(labels, dtype=float), image_derived=image_derived)

    @property
    def N(self) -> int:
        return self.samples.shape[0]

    @property
    def D(self) -> int:
        return self.samples.shape[1]

    @property
    def d(self) -> int:
        return self.samples.shape[1] - 1

    @property
    def raw(self) -> np.ndarray:
        return self.samples[:, :-1]

    def subset(self, index) -> "Dataset":
        return Dataset(self.samples[index], self.labels[index], self.image_derived)


def generate_gaussian_dataset(d: int, n_per_class: int, seed: int) -> Dataset:
    """Two unit-covariance Gaussian classes with means (+1, 0, ..., 0) and (-1, 0, ..., 0).

    Positive samples come first.  The result is a pure function of the
    arguments.
    """
    if d < 1 or n_per_class < 1:
        raise DatasetError("need d >= 1 and n_per_class >= 1")
    rng = np.random.default_rng(seed)
    pos = rng.standard_normal((n_per_class, d))
    neg = rng.standard_normal((n_per_class, d))
    pos[:, 0] += 1.0
    neg[:, 0] -= 1.0
    labels = np.concatenate([np.ones(n_per_class), -np.ones(n_per_class)])
    return Dataset.from_raw(np.vstack([pos, neg]), labels)


# --- IDX -------------------------------------------------------------------

def encode_idx(array) -> bytes:
    a = np.asarray(array)
    if a.dtype != np.uint8:
        raise IdxTypeError(f"only unsigned byte tensors are supported, got {a.dtype}")
    if a.ndim < 1 or a.ndim > 255:
        raise IdxSizeError("IDX tensors need between 1 and 255 dimensions")
    header = bytes([0, 0, IDX_UBYTE, a.ndim]) + struct.pack(f">{a.ndim}I", *a.shape)
    return header + np.ascontiguousarray(a).tobytes()


def parse_idx(data: bytes) -> np.ndarray:
    """Decode an IDX byte string into a ``uint8`` array of the declared shape."""
    data = bytes(data)
    if len(data) < 4:
        raise IdxTruncatedError("file shorter than the 4-byte magic")
    if data[0] != 0 or data[1] != 0:
        raise IdxError("IDX magic must start with two zero bytes")
    if data[2] != IDX_UBYTE:
        raise IdxTypeError(f"unsupported IDX type code 0x{data[2]:02x}")
    ndim = data[3]
    if ndim == 0:
        raise IdxSizeError("IDX file declares zero dimensions")
    end = 4 + 4 * ndim
    if len(data) < end:
        raise IdxTruncatedError(
            f"header declares {ndim} dimensions but only {(len(data) - 4) // 4} sizes are present")
    shape = struct.unpack(f">{ndim}I", data[4:end])
    expected = math.prod(shape)
    if len(data) - end != expected:
        raise IdxSizeError(f"dimensions {shape} need {expected} bytes, found {len(data) - end}")
    return np.frombuffer(data, dtype=np.uint8, offset=end).reshape(shape)


def _read(source) -> bytes:
    if isinstance(source, (bytes, bytearray, memoryview)):
        raw = bytes(source)
    else:
        with open(os.fspath(source), "rb") as fh:
            raw = fh.read()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _first_of_each(classes: np.ndarray, class_a, class_b, per_class: int) -> tuple[np.ndarray, np.ndarray]:
    if per_class < 1:
        raise DatasetError("per_class must be at least 1 (empty dataset requested)")
    if class_a == class_b:
        raise DatasetError("the two classes must differ")
    idx_a = np.flatnonzero(classes == class_a)[:per_class]
    idx_b = np.flatnonzero(classes == class_b)[:per_class]
    for cls, idx in ((class_a, idx_a), (class_b, idx_b)):
        if idx.size < per_class:
            raise DatasetError(f"class {cls} has only {idx.size} samples, {per_class} requested")
    return idx_a, idx_b


def load_mnist_binary_subset(image_file, label_file, class_a: int, class_b: int, per_class: int) -> Dataset:
    """First ``per_class`` images of two digits (file order), pixels scaled to [0, 1].

    ``class_a`` is labelled +1 and ``class_b`` -1.  Files may be paths, raw
    bytes, or gzip-compressed.
    """
    images = parse_idx(_read(image_file))
    labels = parse_idx(_read(label_file))
    if images.ndim < 2 or labels.ndim != 1:
        raise DatasetError("expected an image tensor and a one-dimensional label vector")
    if images.shape[0] != labels.shape[0]:
        raise DatasetError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    idx_a, idx_b = _first_of_each(labels, class_a, class_b, per_class)
    flat = images.reshape(images.shape[0], -1)
    feats = np.vstack([flat[idx_a], flat[idx_b]]).astype(float) / 255.0
    y = np.concatenate([np.ones(per_class), -np.ones(per_class)])
    return Dataset.from_raw(feats, y, image_derived=True)


def load_cifar10_binary_subset(batch_files: Sequence, class_a: int, class_b: int, per_class: int) -> Dataset:
    """Grayscale CIFAR-10 subset with luminance weights, scaled to [0, 1]."""
    if isinstance(batch_files, (str, os.PathLike, bytes, bytearray)):
        batch_files = [batch_files]
    chunks = []
    for src in batch_files:
        raw = _read(src)
        if len(raw) % CIFAR_RECORD:
            raise DatasetError(f"CIFAR batch length {len(raw)} is not a multiple of {CIFAR_RECORD}")
        chunks.append(np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD))
    records = np.vstack(chunks) if chunks else np.zeros((0, CIFAR_RECORD), np.uint8)
    idx_a, idx_b = _first_of_each(records[:, 0], class_a, class_b, per_class)
    pix = records[np.concatenate([idx_a, idx_b]), 1:].astype(float)
    r, g, b = (pix[:, k * CIFAR_PLANE:(k + 1) * CIFAR_PLANE] for k in range(3))
    gray = (LUMA[0] * r + LUMA[1] * g + LUMA[2] * b) / 255.0
    # luminance weights sum to 1 only up to rounding
    np.clip(gray, 0.0, 1.0, out=gray)
    y = np.concatenate([np.ones(per_class), -np.ones(per_class)])
    return Dataset.from_raw(gray, y, image_derived=True)


# --- CSV -------------------------------------------------------------------

def save_csv(data: Dataset, path) -> None:
    """One row per sample: d raw features then the label."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow([f"x{k + 1}" for k in range(data.d)] + ["label"])
        for row, lab in zip(data.raw, data.labels):
            out.writerow([repr(float(v)) for v in row] + [int(lab)])


def load_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        rows: Iterable[list[str]] = csv.reader(fh)
        rows = [r for r in rows if r]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    if not rows:
        raise DatasetError(f"{path}: no samples")
    table = np.array([[float(v) for v in r] for r in rows])
    return Dataset.from_raw(table[:, :-1], table[:, -1])


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True
