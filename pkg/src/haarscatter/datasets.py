"""Dataset ingestion: IDX files, CSV tables, scrambling, synthetic digits.

Images are flattened to nonnegative vectors whose length is a power of
two; 28x28 inputs are zero-padded to 32x32 with the digit centered.  The
grid geometry (padded height/width) travels with the dataset until a
scramble drops it.
"""

from __future__ import annotations

import csv
import gzip
import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw, ImageFilter, ImageFont

from .core import is_power_of_two
from .errors import BadMagicError, DimensionMismatchError, TruncatedFileError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    """Flattened nonnegative images with labels and optional grid geometry."""

    images: np.ndarray          # (n, dim) floats in [0, 1]
    labels: np.ndarray          # (n,) ints
    geometry: tuple | None      # ("grid", height, width) or None

    @property
    def dim(self) -> int:
        return self.images.shape[1]

    def __len__(self) -> int:
        return self.images.shape[0]

    def subset(self, index) -> "Dataset":
        return Dataset(images=self.images[index], labels=self.labels[index], geometry=self.geometry)


def _open_maybe_gzip(path):
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(fh, count: int, path) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise TruncatedFileError(f"{path}: expected {count} more bytes, got {len(data)}")
    return data


def load_idx_images(path) -> np.ndarray:
    """IDX image file -> (n, rows, cols) uint8 array."""
    with _open_maybe_gzip(path) as fh:
        magic, n, rows, cols = struct.unpack(">IIII", _read_exact(fh, 16, path))
        if magic != IMAGES_MAGIC:
            raise BadMagicError(f"{path}: magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}")
        payload = _read_exact(fh, n * rows * cols, path)
    return np.frombuffer(payload, dtype=np.uint8).reshape(n, rows, cols)


def load_idx_labels(path) -> np.ndarray:
    """IDX label file -> (n,) uint8 array."""
    with _open_maybe_gzip(path) as fh:
        magic, n = struct.unpack(">II", _read_exact(fh, 8, path))
        if magic != LABELS_MAGIC:
            raise BadMagicError(f"{path}: magic {magic:#010x}, expected {LABELS_MAGIC:#010x}")
        payload = _read_exact(fh, n, path)
    return np.frombuffer(payload, dtype=np.uint8).copy()


def save_idx_images(path, images: np.ndarray) -> None:
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGES_MAGIC, n, rows, cols))
        fh.write(images.tobytes())


def save_idx_labels(path, labels: np.ndarray) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", LABELS_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


def _next_power_of_two(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def pad_images_to_pow2(images: np.ndarray) -> np.ndarray:
    """Zero-pad (n, h, w) images so both sides are powers of two, centered."""
    n, h, w = images.shape
    th, tw = _next_power_of_two(h), _next_power_of_two(w)
    if (th, tw) == (h, w):
        return images
    top = (th - h) // 2
    left = (tw - w) // 2
    out = np.zeros((n, th, tw), dtype=images.dtype)
    out[:, top : top + h, left : left + w] = images
    return out


def load_dataset(images_path, labels_path) -> Dataset:
    """IDX image/label pair -> scaled, padded, flattened dataset with grid geometry."""
    raw = load_idx_images(images_path)
    labels = load_idx_labels(labels_path).astype(int)
    if raw.shape[0] != labels.shape[0]:
        raise DimensionMismatchError(
            f"{raw.shape[0]} images but {labels.shape[0]} labels"
        )
    padded = pad_images_to_pow2(raw)
    n, h, w = padded.shape
    images = padded.reshape(n, h * w).astype(float) / 255.0
    return Dataset(images=images, labels=labels, geometry=("grid", h, w))


def load_csv_dataset(path) -> Dataset:
    """CSV with feature columns and a final ``label`` column; zero-pads to a power of two."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    if header[-1] != "label":
        raise BadMagicError(f"{path}: last CSV column must be 'label', got {header[-1]!r}")
    data = np.asarray(rows, dtype=float)
    images, labels = data[:, :-1], data[:, -1].astype(int)
    dim = images.shape[1]
    target = _next_power_of_two(max(dim, 2))
    if target != dim:
        images = np.hstack([images, np.zeros((images.shape[0], target - dim))])
    return Dataset(images=images, labels=labels, geometry=None)


def scramble_permutation(dim: int, seed) -> np.ndarray:
    """The pixel permutation a given seed applies to every image."""
    return np.random.default_rng(seed).permutation(dim)


def scramble(ds: Dataset, seed) -> Dataset:
    """Apply one seeded pixel permutation to all images; geometry is dropped.

    New pixel i holds old pixel perm[i], with perm from
    :func:`scramble_permutation`; applying argsort(perm) columnwise undoes it.
    """
    perm = scramble_permutation(ds.dim, seed)
    return Dataset(images=ds.images[:, perm], labels=ds.labels.copy(), geometry=None)


def make_digit_dataset(n_samples: int, seed, image_size: int = 28) -> tuple[np.ndarray, np.ndarray]:
    """Procedurally rendered digit glyphs with random pose, as uint8 images.

    A stand-in for handwritten digits at desk scale: each sample draws one
    digit with jittered size, rotation and position, lightly blurred so
    strokes have smooth gray profiles.  Background stays exactly zero.
    """
    rng = np.random.default_rng(seed)
    images = np.zeros((n_samples, image_size, image_size), dtype=np.uint8)
    labels = rng.integers(0, 10, size=n_samples)
    fonts = {s: ImageFont.load_default(size=s) for s in range(15, 24)}
    for i in range(n_samples):
        digit = str(labels[i])
        font = fonts[int(rng.integers(15, 24))]
        canvas = Image.new("L", (image_size, image_size), 0)
        draw = ImageDraw.Draw(canvas)
        left, top, right, bottom = draw.textbbox((0, 0), digit, font=font, stroke_width=1)
        cx = (image_size - (right - left)) // 2 - left + int(rng.integers(-2, 3))
        cy = (image_size - (bottom - top)) // 2 - top + int(rng.integers(-2, 3))
        draw.text((cx, cy), digit, fill=255, font=font, stroke_width=1, stroke_fill=255)
        angle = float(rng.uniform(-10.0, 10.0))
        canvas = canvas.rotate(angle, resample=Image.BILINEAR, fillcolor=0)
        canvas = canvas.filter(ImageFilter.GaussianBlur(radius=float(rng.uniform(0.6, 1.1))))
        images[i] = np.asarray(canvas, dtype=np.uint8)
    return images, labels.astype(int)


def write_digit_idx(directory, n_train: int, n_test: int, seed) -> dict[str, str]:
    """Write synthetic train/test IDX files; returns the four file paths."""
    import os

    rng = np.random.default_rng(seed)
    paths = {}
    for split, count in (("train", n_train), ("test", n_test)):
        images, labels = make_digit_dataset(count, rng.integers(0, 2**32))
        img_path = os.path.join(directory, f"{split}-images.idx")
        lbl_path = os.path.join(directory, f"{split}-labels.idx")
        save_idx_images(img_path, images)
        save_idx_labels(lbl_path, labels)
        paths[f"{split}_images"] = img_path
        paths[f"{split}_labels"] = lbl_path
    return paths
