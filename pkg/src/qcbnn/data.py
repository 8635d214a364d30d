"""Dataset container, loaders, normalization, splits, and a synthetic
image generator for desk-scale experiments.

Images are grayscale H x W grids stored as floats in [0, 1] with an
underlying 0..255 byte quantization, so the binary container round-trips
losslessly.  Labels are binary; class 1 is the positive (malignant-like)
class throughout the package.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from .seeding import stream

DATASET_MAGIC = b"QBNNDATA"
DATASET_VERSION = 1

SPLIT_TAGS = ("train", "validation", "test")


@dataclass
class Dataset:
    """Images (N, H, W) in [0, 1], binary labels (N,), optional split tags."""

    images: np.ndarray
    labels: np.ndarray
    tags: np.ndarray | None = None

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 3:
            raise ValueError("images must be (N, H, W)")
        if len(self.labels) != len(self.images):
            raise ValueError("image count != label count")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        if self.images.size and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise ValueError("pixels must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.images)

    def subset(self, tag: str) -> "Dataset":
        if self.tags is None:
            raise ValueError("dataset has no split tags")
        mask = self.tags == tag
        return Dataset(self.images[mask], self.labels[mask])


# --- binary container / CSV ----------------------------------------------------


def save_dataset(path, dataset: Dataset):
    """Write the binary container: magic, version, count, H, W, labels,
    then raw 0..255 pixel bytes."""
    n, h, w = dataset.images.shape
    pixels = np.rint(dataset.images * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(struct.pack("<IIII", DATASET_VERSION, n, h, w))
        fh.write(dataset.labels.astype(np.uint8).tobytes())
        fh.write(pixels.tobytes())


def _load_container(path) -> Dataset:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 24:
        raise ValueError("truncated container")
    if blob[:8] != DATASET_MAGIC:
        raise ValueError("bad dataset magic")
    version, n, h, w = struct.unpack_from("<IIII", blob, 8)
    if version != DATASET_VERSION:
        raise ValueError(f"unsupported dataset version {version}")
    need = 24 + n + n * h * w
    if len(blob) < need:
        raise ValueError("truncated container")
    labels = np.frombuffer(blob, dtype=np.uint8, count=n, offset=24)
    if labels.size and labels.max() > 1:
        raise ValueError("label outside {0, 1}")
    pixels = np.frombuffer(blob, dtype=np.uint8, count=n * h * w, offset=24 + n)
    images = pixels.reshape(n, h, w).astype(np.float64) / 255.0
    return Dataset(images, labels.astype(np.int64))


def _load_csv(path) -> Dataset:
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("truncated container") from None
        if not header or header[0] != "label":
            raise ValueError("header mismatch at column 'label'")
        n_pix = len(header) - 1
        for i, name in enumerate(header[1:]):
            if name != f"p{i}":
                raise ValueError(f"header mismatch at column {name!r}")
        side = int(math.isqrt(n_pix))
        if side * side != n_pix:
            raise ValueError(f"pixel count {n_pix} is not a square image")
        labels, rows = [], []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != n_pix + 1:
                raise ValueError(f"row {line_no} has {len(row)} fields, expected {n_pix + 1}")
            labels.append(int(row[0]))
            rows.append([int(v) for v in row[1:]])
    labels_arr = np.array(labels, dtype=np.int64)
    if labels_arr.size and not np.isin(labels_arr, (0, 1)).all():
        raise ValueError("label outside {0, 1}")
    pixels = np.array(rows, dtype=np.float64) / 255.0
    return Dataset(pixels.reshape(-1, side, side), labels_arr)


def load_dataset(path, format: str = "binary") -> Dataset:
    """Load a dataset from the binary container or the CSV alternative."""
    if format == "binary":
        return _load_container(path)
    if format == "csv":
        return _load_csv(path)
    raise ValueError(f"unknown dataset format {format!r}")


def save_dataset_csv(path, dataset: Dataset):
    n, h, w = dataset.images.shape
    pixels = np.rint(dataset.images * 255.0).astype(np.int64).reshape(n, h * w)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label"] + [f"p{i}" for i in range(h * w)])
        for label, row in zip(dataset.labels, pixels):
            writer.writerow([int(label)] + row.tolist())


def convert_breastmnist_npz(npz_path, out_dir):
    """Convert the public breast-ultrasound npz archive (not bundled) into
    one binary container per split.  Returns the written paths."""
    import os

    archive = np.load(npz_path)
    written = {}
    for tag, img_key, lab_key in (
        ("train", "train_images", "train_labels"),
        ("validation", "val_images", "val_labels"),
        ("test", "test_images", "test_labels"),
    ):
        images = np.asarray(archive[img_key], dtype=np.float64) / 255.0
        labels = np.asarray(archive[lab_key]).reshape(-1)
        path = os.path.join(out_dir, f"{tag}.qbnn")
        save_dataset(path, Dataset(images, labels))
        written[tag] = path
    return written


# --- normalization ---------------------------------------------------------------


def normalize(dataset: Dataset, per_image: bool = True) -> Dataset:
    """Min-max scale pixels to [0, 1]; constant images map to all zeros.

    ``per_image=False`` scales with the global min/max of the whole set.
    """
    images = dataset.images
    if per_image:
        lo = images.min(axis=(1, 2), keepdims=True)
        hi = images.max(axis=(1, 2), keepdims=True)
    else:
        lo = images.min()
        hi = images.max()
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    scaled = np.where(hi - lo > 0, (images - lo) / span, 0.0)
    return replace(dataset, images=scaled)


# --- synthetic data ----------------------------------------------------------------


@dataclass(frozen=True)
class SynthSpec:
    """Synthetic two-class image set with tunable class overlap.

    Class 0 is a centered Gaussian blob, class 1 the same blob with a
    diagonal stripe pattern on top.  The noise model has two parts:
    i.i.d. pixel noise and a faint stripe texture whose amplitude range
    (``texture_amp``) overlaps the weak end of the positive-class stripe
    amplitudes (``stripe_amp``), so the task has a controlled Bayes
    error instead of being trivially separable.
    """

    n_samples: int = 250
    height: int = 28
    width: int = 28
    imbalance: float = 0.27  # fraction of stripe (positive) samples
    noise_scale: float = 0.12
    blob_amp: tuple[float, float] = (0.45, 0.85)
    stripe_amp: tuple[float, float] = (0.12, 0.7)
    texture_amp: tuple[float, float] = (0.0, 0.18)
    seed: int = 0

    def __post_init__(self):
        n_pos = int(round(self.n_samples * self.imbalance))
        if self.n_samples < 2 or n_pos < 1 or n_pos >= self.n_samples:
            raise ValueError("degenerate synthetic spec: need both classes present")


def synth_generate(spec: SynthSpec) -> Dataset:
    """Deterministic synthetic dataset; pixels quantized to 0..255 levels."""
    rng = stream(spec.seed, "synth")
    n_pos = int(round(spec.n_samples * spec.imbalance))
    labels = np.zeros(spec.n_samples, dtype=np.int64)
    labels[:n_pos] = 1
    rng.shuffle(labels)

    yy, xx = np.mgrid[0 : spec.height, 0 : spec.width]
    cy, cx = (spec.height - 1) / 2.0, (spec.width - 1) / 2.0
    images = np.empty((spec.n_samples, spec.height, spec.width))
    for i, label in enumerate(labels):
        sigma = rng.uniform(0.16, 0.26) * spec.height
        blob = rng.uniform(*spec.blob_amp) * np.exp(
            -((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2)
        )
        period = rng.uniform(3.5, 6.0)
        phase = rng.uniform(0, 2 * math.pi)
        stripes = np.sin(2 * math.pi * (yy + xx) / period + phase) / 2.0
        amp_range = spec.stripe_amp if label == 1 else spec.texture_amp
        img = blob + rng.uniform(*amp_range) * stripes
        img = img + rng.normal(0.0, spec.noise_scale, size=img.shape)
        images[i] = np.clip(img, 0.0, 1.0)
    images = np.rint(images * 255.0) / 255.0
    return Dataset(images, labels)


# --- splits ----------------------------------------------------------------------


def split(dataset: Dataset, fractions, seed: int) -> Dataset:
    """Deterministic shuffled partition into train/validation/test tags.

    ``fractions`` has two entries (train, test) or three (train,
    validation, test) and must sum to 1; boundaries are placed by
    cumulative rounding so sizes match the fractions within rounding.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) not in (2, 3):
        raise ValueError("need 2 or 3 split fractions")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    names = ("train", "test") if len(fractions) == 2 else SPLIT_TAGS
    n = len(dataset)
    bounds = [int(round(sum(fractions[: i + 1]) * n)) for i in range(len(fractions))]
    sizes = np.diff([0] + bounds)
    if (sizes == 0).any():
        raise ValueError("empty partition")
    order = stream(seed, "split").permutation(n)
    tags = np.empty(n, dtype=object)
    start = 0
    for name, size in zip(names, sizes):
        tags[order[start : start + size]] = name
        start += size
    return replace(dataset, tags=tags.astype(str))


# --- learnability oracle -----------------------------------------------------------

_FEATURE_KERNELS = np.array(
    [
        [[0.25, 0.25], [0.25, 0.25]],  # local mean
        [[0.5, 0.5], [-0.5, -0.5]],  # horizontal edge
        [[0.5, -0.5], [0.5, -0.5]],  # vertical edge
        [[0.5, -0.5], [-0.5, 0.5]],  # checkerboard / diagonal texture
    ]
)


def patch_features(images: np.ndarray) -> np.ndarray:
    """Four fixed 2x2 patch statistics per image: mean response magnitude
    of a mean, horizontal-edge, vertical-edge and checkerboard kernel."""
    single = images.ndim == 2
    x = images[None] if single else images
    windows = np.lib.stride_tricks.sliding_window_view(x, (2, 2), axis=(1, 2))[:, ::2, ::2]
    responses = np.einsum("bxykl,fkl->bfxy", windows, _FEATURE_KERNELS)
    feats = np.abs(responses).mean(axis=(2, 3))
    return feats[0] if single else feats


def reference_classifier_accuracy(dataset: Dataset, epochs: int = 50, seed: int = 0,
                                  lr: float = 0.05) -> float:
    """Train accuracy of a tiny fixed-feature 4 -> 8 -> 2 classifier.

    Serves as the learnability check for generated datasets: if this
    model cannot fit the training set, the convolutional models have no
    chance either.
    """
    feats = patch_features(dataset.images)
    feats = (feats - feats.mean(axis=0)) / (feats.std(axis=0) + 1e-9)
    labels = dataset.labels
    rng = stream(seed, "reference")
    w1 = ad.Tensor(rng.normal(0, 0.5, size=(8, 4)), requires_grad=True)
    b1 = ad.Tensor(np.zeros(8), requires_grad=True)
    w2 = ad.Tensor(rng.normal(0, 0.5, size=(2, 8)), requires_grad=True)
    b2 = ad.Tensor(np.zeros(2), requires_grad=True)
    opt = ad.Adam([w1, b1, w2, b2], lr=lr)
    for _ in range(epochs):
        hidden = ad.tanh(ad.dense(ad.Tensor(feats), w1, b1))
        loss = ad.mean(ad.softmax_cross_entropy(ad.dense(hidden, w2, b2), labels))
        opt.zero_grad()
        loss.backward()
        opt.step()
    hidden = np.tanh(feats @ w1.data.T + b1.data)
    logits = hidden @ w2.data.T + b2.data
    return float((logits.argmax(axis=1) == labels).mean())
