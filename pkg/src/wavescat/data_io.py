"""Dataset loading and the on-disk feature / model formats.

Two container formats are defined here, both little-endian with a trailing
CRC32 over every preceding byte (see ``docs/formats.md`` for the byte-exact
layout):

* ``SCT1`` stores a feature matrix as float32 plus labels and the transform
  configuration that produced it.
* ``SCM1`` stores a trained classifier (per-class means, eigenvalues, and
  principal directions) as float64 plus its configuration echo.

Both embed a free-form JSON manifest so callers can record input hashes and
seeds; nothing in the manifest affects how the payload is interpreted.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import struct
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .classifier import AffineClassModel, TrainedClassifier
from .scattering import ScatteringLayout, enumerate_paths, sampling_interval

__all__ = [
    "FormatError",
    "DataError",
    "LabeledDataset",
    "load_idx",
    "load_usps_text",
    "load_texture_dir",
    "subsample_train",
    "file_sha256",
    "save_features",
    "load_features",
    "save_model",
    "load_model",
    "config_mismatch",
]


class FormatError(ValueError):
    """A file does not conform to its declared format."""


class DataError(ValueError):
    """A file parsed fine but its content violates a data contract."""


@dataclass(frozen=True)
class LabeledDataset:
    """An image stack with integer labels and provenance notes."""

    images: np.ndarray
    labels: np.ndarray
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        images = np.asarray(self.images, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if images.ndim != 3:
            raise ValueError(f"images must be (N, H, W), got shape {images.shape}")
        if labels.shape != (images.shape[0],):
            raise ValueError(
                f"{images.shape[0]} images but {labels.shape} labels"
            )
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.images.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self) else 0

    def class_counts(self) -> dict[int, int]:
        ids, counts = np.unique(self.labels, return_counts=True)
        return {int(i): int(c) for i, c in zip(ids, counts)}


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def _pad_to_pow2(images: np.ndarray) -> np.ndarray:
    n, h, w = images.shape
    ph, pw = _next_pow2(h), _next_pow2(w)
    if (ph, pw) == (h, w):
        return images
    out = np.zeros((n, ph, pw), dtype=images.dtype)
    top, left = (ph - h) // 2, (pw - w) // 2
    out[:, top : top + h, left : left + w] = images
    return out


_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801


def load_idx(images_path, labels_path) -> LabeledDataset:
    """Load an IDX image/label file pair (plain or gzipped).

    Pixel bytes are scaled to [0, 1] and each image is zero-padded, centered,
    up to the next power of two per axis (28x28 becomes 32x32).
    """
    raw = _read_bytes(images_path)
    if len(raw) < 16:
        raise FormatError(f"{images_path}: truncated IDX header ({len(raw)} bytes)")
    magic, n, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != _IDX_IMAGES_MAGIC:
        raise FormatError(
            f"{images_path}: bad magic {magic:#010x}, expected {_IDX_IMAGES_MAGIC:#010x}"
        )
    need = 16 + n * rows * cols
    if len(raw) < need:
        raise FormatError(
            f"{images_path}: expected {need} bytes for {n} images, got {len(raw)}"
        )
    images = (
        np.frombuffer(raw, dtype=np.uint8, count=n * rows * cols, offset=16)
        .reshape(n, rows, cols)
        .astype(np.float64)
        / 255.0
    )

    raw_l = _read_bytes(labels_path)
    if len(raw_l) < 8:
        raise FormatError(f"{labels_path}: truncated IDX header ({len(raw_l)} bytes)")
    magic_l, n_l = struct.unpack(">II", raw_l[:8])
    if magic_l != _IDX_LABELS_MAGIC:
        raise FormatError(
            f"{labels_path}: bad magic {magic_l:#010x}, expected {_IDX_LABELS_MAGIC:#010x}"
        )
    if len(raw_l) < 8 + n_l:
        raise FormatError(
            f"{labels_path}: expected {8 + n_l} bytes for {n_l} labels, got {len(raw_l)}"
        )
    if n_l != n:
        raise DataError(f"{n} images but {n_l} labels")
    labels = np.frombuffer(raw_l, dtype=np.uint8, count=n_l, offset=8).astype(np.int64)
    return LabeledDataset(
        images=_pad_to_pow2(images),
        labels=labels,
        provenance={
            "source": f"idx:{images_path}",
            "images_sha256": hashlib.sha256(raw).hexdigest(),
            "labels_sha256": hashlib.sha256(raw_l).hexdigest(),
        },
    )


def load_usps_text(path) -> LabeledDataset:
    """Load the 16x16 handwritten-digit text format (plain or gzipped).

    Each line holds a label followed by 256 grayscale values in [-1, 1];
    values are rescaled to [0, 1].
    """
    raw = _read_bytes(path).decode("ascii")
    labels: list[int] = []
    rows: list[np.ndarray] = []
    for ln, line in enumerate(raw.splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 257:
            raise FormatError(f"{path}:{ln}: expected 257 fields, got {len(parts)}")
        labels.append(int(float(parts[0])))
        rows.append(np.asarray([float(x) for x in parts[1:]]))
    if not rows:
        raise FormatError(f"{path}: no samples found")
    images = (np.stack(rows).reshape(-1, 16, 16) + 1.0) / 2.0
    return LabeledDataset(
        images=images,
        labels=np.asarray(labels, dtype=np.int64),
        provenance={"source": f"usps:{path}"},
    )


_IMAGE_SUFFIXES = {".png", ".pgm", ".ppm", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp"}


def load_texture_dir(root, crop: int = 128) -> LabeledDataset:
    """Load a class-per-subdirectory grayscale texture tree.

    Subdirectories in sorted order become class ids 0..C-1.  Every image is
    converted to grayscale, center-cropped to ``crop`` x ``crop``, and
    standardized to zero mean, unit variance.  Constant images are rejected.
    """
    from PIL import Image

    root = Path(root)
    if not root.is_dir():
        raise DataError(f"{root}: not a directory")
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not class_dirs:
        raise DataError(f"{root}: no class subdirectories")
    images: list[np.ndarray] = []
    labels: list[int] = []
    for cid, cdir in enumerate(class_dirs):
        files = sorted(
            f for f in cdir.iterdir() if f.suffix.lower() in _IMAGE_SUFFIXES
        )
        if not files:
            raise DataError(f"{cdir}: no image files")
        for f in files:
            with Image.open(f) as img:
                arr = np.asarray(img.convert("F"), dtype=np.float64)
            h, w = arr.shape
            if h < crop or w < crop:
                raise DataError(f"{f}: image {h}x{w} smaller than crop {crop}")
            top, left = (h - crop) // 2, (w - crop) // 2
            arr = arr[top : top + crop, left : left + crop]
            std = arr.std()
            if std == 0.0:
                raise DataError(f"{f}: zero variance after cropping")
            images.append((arr - arr.mean()) / std)
            labels.append(cid)
    return LabeledDataset(
        images=np.stack(images),
        labels=np.asarray(labels, dtype=np.int64),
        provenance={
            "source": f"texture:{root}",
            "classes": [d.name for d in class_dirs],
            "crop": crop,
        },
    )


def subsample_train(
    dataset: LabeledDataset,
    total: int | None = None,
    per_class: int | None = None,
    seed: int = 0,
) -> LabeledDataset:
    """Stratified subsample: either ``total`` split evenly or ``per_class``.

    With ``total``, each class receives ``total // n_classes`` samples and
    the remainder goes to the lowest class ids.  Selection is without
    replacement via the seeded generator; chosen indices are emitted in
    ascending order so the result is stable.
    """
    if (total is None) == (per_class is None):
        raise ValueError("specify exactly one of total / per_class")
    ids = np.unique(dataset.labels)
    quotas: dict[int, int] = {}
    if per_class is not None:
        quotas = {int(c): per_class for c in ids}
    else:
        base, extra = divmod(int(total), ids.size)
        for rank, c in enumerate(sorted(int(c) for c in ids)):
            quotas[c] = base + (1 if rank < extra else 0)
    rng = np.random.default_rng(seed)
    chosen: list[np.ndarray] = []
    for c in sorted(quotas):
        idx = np.flatnonzero(dataset.labels == c)
        if quotas[c] > idx.size:
            raise DataError(
                f"class {c} has {idx.size} samples, cannot draw {quotas[c]}"
            )
        pick = rng.choice(idx, size=quotas[c], replace=False)
        chosen.append(np.sort(pick))
    sel = np.concatenate(chosen)
    prov = dict(dataset.provenance)
    prov["subsample"] = {"total": total, "per_class": per_class, "seed": seed}
    return LabeledDataset(
        images=dataset.images[sel], labels=dataset.labels[sel], provenance=prov
    )


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


# --------------------------------------------------------------------------
# SCT1 / SCM1 containers
# --------------------------------------------------------------------------

_FEATURES_MAGIC = b"SCT1"
_MODEL_MAGIC = b"SCM1"


def _pack_container(magic: bytes, header: dict, payload: bytes) -> bytes:
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = magic + struct.pack("<II", 1, len(head)) + head + payload
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def _unpack_container(raw: bytes, magic: bytes, path) -> tuple[dict, bytes]:
    if len(raw) < 16:
        raise FormatError(f"{path}: file too short ({len(raw)} bytes)")
    if raw[:4] != magic:
        raise FormatError(
            f"{path}: bad magic {raw[:4]!r}, expected {magic!r}"
        )
    (stored,) = struct.unpack("<I", raw[-4:])
    actual = zlib.crc32(raw[:-4]) & 0xFFFFFFFF
    if stored != actual:
        raise FormatError(
            f"{path}: CRC32 mismatch (stored {stored:08x}, computed {actual:08x})"
        )
    version, head_len = struct.unpack("<II", raw[4:12])
    if version != 1:
        raise FormatError(f"{path}: unsupported container version {version}")
    if 12 + head_len > len(raw) - 4:
        raise FormatError(f"{path}: header length {head_len} overruns file")
    try:
        header = json.loads(raw[12 : 12 + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: malformed header JSON ({exc})") from exc
    return header, raw[12 + head_len : -4]


def save_features(
    path,
    layout: ScatteringLayout,
    features: np.ndarray,
    labels: np.ndarray,
    manifest: dict | None = None,
) -> None:
    """Write a feature matrix and its layout to an SCT1 container."""
    features = np.asarray(features)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or labels.shape != (features.shape[0],):
        raise ValueError(
            f"features {features.shape} and labels {labels.shape} do not line up"
        )
    if features.shape[1] != layout.n_features:
        raise ValueError(
            f"feature dim {features.shape[1]} does not match layout "
            f"({layout.n_features})"
        )
    header = {
        "J": layout.J,
        "m0": layout.m0,
        "n_orientations": layout.n_orientations,
        "delta": str(layout.delta),
        "in_shape": list(layout.in_shape),
        "out_shape": list(layout.out_shape),
        "n_paths": len(layout.paths),
        "paths": [
            {
                "steps": [[j, g] for j, g in path],
                "offset": layout.index[path][0],
                "length": layout.index[path][1],
            }
            for path in layout.paths
        ],
        "n_samples": int(features.shape[0]),
        "n_features": int(features.shape[1]),
        "manifest": manifest or {},
    }
    payload = labels.astype("<i8").tobytes() + np.ascontiguousarray(
        features, dtype="<f4"
    ).tobytes()
    Path(path).write_bytes(_pack_container(_FEATURES_MAGIC, header, payload))


def _layout_from_header(header: dict, path) -> ScatteringLayout:
    try:
        layout = ScatteringLayout(
            J=int(header["J"]),
            m0=int(header["m0"]),
            n_orientations=int(header["n_orientations"]),
            delta=Fraction(header["delta"]),
            in_shape=tuple(header["in_shape"]),
            out_shape=tuple(header["out_shape"]),
            paths=tuple(
                enumerate_paths(
                    int(header["J"]), int(header["n_orientations"]), int(header["m0"])
                )
            ),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"{path}: incomplete header ({exc})") from exc
    if len(layout.paths) != int(header["n_paths"]):
        raise FormatError(
            f"{path}: header claims {header['n_paths']} paths but configuration "
            f"implies {len(layout.paths)}"
        )
    try:
        entries = [
            (tuple(tuple(step) for step in e["steps"]), e["offset"], e["length"])
            for e in header["paths"]
        ]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed path table ({exc})") from exc
    expected = [(p, *layout.index[p]) for p in layout.paths]
    if entries != expected:
        raise FormatError(
            f"{path}: path table disagrees with the canonical layout"
        )
    t = sampling_interval(layout.delta, layout.J)
    expect_out = (layout.in_shape[0] // t, layout.in_shape[1] // t)
    if layout.out_shape != expect_out:
        raise FormatError(
            f"{path}: out_shape {layout.out_shape} inconsistent with configuration "
            f"(expected {expect_out})"
        )
    return layout


def load_features(path) -> tuple[ScatteringLayout, np.ndarray, np.ndarray, dict]:
    """Read an SCT1 container: (layout, float32 features, labels, manifest)."""
    header, payload = _unpack_container(_read_bytes(path), _FEATURES_MAGIC, path)
    layout = _layout_from_header(header, path)
    n = int(header["n_samples"])
    d = int(header["n_features"])
    if d != layout.n_features:
        raise FormatError(
            f"{path}: n_features {d} does not match layout ({layout.n_features})"
        )
    need = 8 * n + 4 * n * d
    if len(payload) != need:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {need}"
        )
    labels = np.frombuffer(payload, dtype="<i8", count=n).astype(np.int64)
    features = (
        np.frombuffer(payload, dtype="<f4", count=n * d, offset=8 * n)
        .reshape(n, d)
        .astype(np.float32)
    )
    return layout, features, labels, header.get("manifest", {})


def save_model(path, clf: TrainedClassifier, manifest: dict | None = None) -> None:
    """Write a trained classifier to an SCM1 container (float64 payload)."""
    header = {
        "J": clf.J,
        "m0": clf.m0,
        "n_orientations": clf.n_orientations,
        "delta": str(clf.delta),
        "beta": clf.beta,
        "n_components": clf.n_components,
        "n_features": clf.n_features,
        "classes": [
            {"class_id": m.class_id, "k": m.n_components, "n_train": m.n_train}
            for m in clf.models
        ],
        "manifest": manifest or {},
    }
    chunks: list[bytes] = []
    for m in clf.models:
        chunks.append(np.ascontiguousarray(m.mean, dtype="<f8").tobytes())
        chunks.append(np.ascontiguousarray(m.eigvals, dtype="<f8").tobytes())
        chunks.append(np.ascontiguousarray(m.eigvecs, dtype="<f8").tobytes())
    Path(path).write_bytes(_pack_container(_MODEL_MAGIC, header, b"".join(chunks)))


def load_model(path) -> tuple[TrainedClassifier, dict]:
    """Read an SCM1 container back into a :class:`TrainedClassifier`."""
    header, payload = _unpack_container(_read_bytes(path), _MODEL_MAGIC, path)
    try:
        d = int(header["n_features"])
        classes = header["classes"]
        beta = float(header["beta"])
        n_components = int(header["n_components"])
        delta = Fraction(header["delta"])
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"{path}: incomplete header ({exc})") from exc
    models: list[AffineClassModel] = []
    off = 0
    total_need = sum(8 * (d + int(c["k"]) + int(c["k"]) * d) for c in classes)
    if len(payload) != total_need:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {total_need}"
        )
    for c in classes:
        k = int(c["k"])
        mean = np.frombuffer(payload, dtype="<f8", count=d, offset=off).astype(np.float64)
        off += 8 * d
        eigvals = np.frombuffer(payload, dtype="<f8", count=k, offset=off).astype(np.float64)
        off += 8 * k
        eigvecs = (
            np.frombuffer(payload, dtype="<f8", count=k * d, offset=off)
            .reshape(k, d)
            .astype(np.float64)
        )
        off += 8 * k * d
        models.append(
            AffineClassModel(
                class_id=int(c["class_id"]),
                mean=mean,
                eigvals=eigvals,
                eigvecs=eigvecs,
                n_train=int(c["n_train"]),
            )
        )
    clf = TrainedClassifier(
        models=tuple(models),
        beta=beta,
        n_components=n_components,
        J=int(header["J"]),
        m0=int(header["m0"]),
        n_orientations=int(header["n_orientations"]),
        delta=delta,
    )
    return clf, header.get("manifest", {})


def config_mismatch(layout: ScatteringLayout, clf: TrainedClassifier) -> list[str]:
    """Differences between a feature layout and a classifier's config echo.

    Empty means compatible.  Used to reject evaluating features against a
    model trained under a different transform configuration.
    """
    diffs = []
    for name, a, b in [
        ("J", layout.J, clf.J),
        ("m0", layout.m0, clf.m0),
        ("n_orientations", layout.n_orientations, clf.n_orientations),
        ("delta", layout.delta, clf.delta),
        ("n_features", layout.n_features, clf.n_features),
    ]:
        if a != b:
            diffs.append(f"{name}: features have {a}, model has {b}")
    return diffs
