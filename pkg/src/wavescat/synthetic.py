"""Seeded synthetic image sources for tests and benchmarks.

Everything here is generated from ``numpy.random.default_rng`` seeds only,
so datasets are reproducible byte for byte.  Three families are provided:

* ten stationary texture classes built from spectrally or pointwise shaped
  noise (circular constructions, so stationarity holds on the torus);
* ten deformable glyph classes, small binary-ish shapes rendered with a
  soft profile and perturbed by random shifts, warps, and pixel noise;
* generic helpers: power-law noise fields and smooth periodic deformation
  fields with a prescribed gradient norm.
"""

from __future__ import annotations

import numpy as np

from .data_io import LabeledDataset
from .scattering import DeformationField

__all__ = [
    "pink_noise",
    "harmonic_field",
    "texture_image",
    "texture_benchmark",
    "glyph_image",
    "glyph_benchmark",
    "N_TEXTURE_CLASSES",
    "N_GLYPH_CLASSES",
]

N_TEXTURE_CLASSES = 10
N_GLYPH_CLASSES = 10


def _standardize(img: np.ndarray) -> np.ndarray:
    std = img.std()
    if std == 0.0:
        raise ValueError("degenerate synthetic image: zero variance")
    return (img - img.mean()) / std


def _radial_grid(size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    fr = np.fft.fftfreq(size)[:, None]
    fc = np.fft.fftfreq(size)[None, :]
    return np.sqrt(fr**2 + fc**2), fr, fc


def _filtered_noise(size: int, transfer: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal((size, size))
    return np.fft.ifft2(np.fft.fft2(noise) * transfer).real


def pink_noise(size: int, rng: np.random.Generator, slope: float = 1.0) -> np.ndarray:
    """Standardized noise with a ``1/|f|**slope`` amplitude spectrum."""
    rad, _, _ = _radial_grid(size)
    transfer = np.zeros_like(rad)
    nz = rad > 0
    transfer[nz] = rad[nz] ** (-slope)
    return _standardize(_filtered_noise(size, transfer, rng))


def harmonic_field(
    shape: tuple[int, int],
    gradient_sup: float,
    n_modes: int = 3,
    seed: int = 0,
) -> DeformationField:
    """Random smooth periodic displacement field with a set gradient norm.

    Superposes a few low-frequency Fourier modes per component and rescales
    so the Jacobian's sup spectral norm equals ``gradient_sup`` (required
    below 1 by the warp operator).
    """
    h, w = shape
    rng = np.random.default_rng(seed)
    rows = np.arange(h)[:, None] / h
    cols = np.arange(w)[None, :] / w
    tau = np.zeros((h, w, 2))
    for comp in range(2):
        for _ in range(n_modes):
            kr, kc = int(rng.integers(-2, 3)), int(rng.integers(-2, 3))
            phase = rng.uniform(0, 2 * np.pi)
            amp = rng.uniform(0.5, 1.0)
            tau[..., comp] += amp * np.sin(
                2 * np.pi * (kr * rows + kc * cols) + phase
            )
    field = DeformationField(tau)
    if field.gradient_sup == 0.0:
        raise ValueError("degenerate field: all sampled modes were constant")
    return DeformationField(tau * (gradient_sup / field.gradient_sup))


def _oriented_band(size: int, theta: float, freq: float, width: float) -> np.ndarray:
    """Symmetric transfer selecting a frequency bump along one orientation."""
    _, fr, fc = _radial_grid(size)
    u = np.cos(theta) * fr + np.sin(theta) * fc
    v = -np.sin(theta) * fr + np.cos(theta) * fc
    bump = np.exp(-((np.abs(u) - freq) ** 2) / (2 * width**2) - v**2 / (2 * width**2))
    return bump


def texture_image(class_id: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """One standardized sample of the given stationary texture class."""
    rad, fr, fc = _radial_grid(size)
    if class_id == 0:  # smooth blobs: low-pass Gaussian spectrum
        return _standardize(_filtered_noise(size, np.exp(-(rad**2) / (2 * 0.03**2)), rng))
    if class_id == 1:  # isotropic ring: mid-frequency annulus
        return _standardize(
            _filtered_noise(size, np.exp(-((rad - 0.22) ** 2) / (2 * 0.03**2)), rng)
        )
    if class_id == 2:  # horizontal grain
        return _standardize(_filtered_noise(size, _oriented_band(size, 0.0, 0.2, 0.04), rng))
    if class_id == 3:  # oblique grain at 60 degrees
        return _standardize(
            _filtered_noise(size, _oriented_band(size, np.pi / 3, 0.2, 0.04), rng)
        )
    if class_id == 4:  # scale-free roughness
        return pink_noise(size, rng, slope=1.2)
    if class_id == 5:  # binary cells: thresholded smooth field
        field = _filtered_noise(size, np.exp(-(rad**2) / (2 * 0.05**2)), rng)
        return _standardize(np.sign(field))
    if class_id == 6:  # sparse bright spots on smooth background
        field = _filtered_noise(size, np.exp(-(rad**2) / (2 * 0.08**2)), rng)
        return _standardize(np.exp(1.2 * _standardize(field)))
    if class_id == 7:  # wavy stripes: modulated carrier
        rows = np.arange(size)[:, None]
        cols = np.arange(size)[None, :]
        phase = 4.0 * _filtered_noise(size, np.exp(-(rad**2) / (2 * 0.02**2)), rng)
        carrier = np.sin(2 * np.pi * (rows * 0.12 + cols * 0.05) + phase)
        return _standardize(carrier)
    if class_id == 8:  # fine checkered weave with random registration
        rows = np.arange(size)[:, None]
        cols = np.arange(size)[None, :]
        dr, dc = rng.integers(0, size, size=2)
        weave = np.sign(
            np.sin(2 * np.pi * (rows + dr) * 0.25) * np.sin(2 * np.pi * (cols + dc) * 0.25)
        )
        field = _filtered_noise(size, np.exp(-(rad**2) / (2 * 0.05**2)), rng)
        return _standardize(weave + 0.5 * field)
    if class_id == 9:  # shot noise: impulses spread by a small disc
        impulses = (rng.random((size, size)) < 0.01).astype(np.float64)
        kernel_hat = np.exp(-(rad**2) / (2 * 0.06**2))
        return _standardize(np.fft.ifft2(np.fft.fft2(impulses) * kernel_hat).real)
    raise ValueError(f"texture class_id must be 0..{N_TEXTURE_CLASSES - 1}, got {class_id}")


def texture_benchmark(
    n_train: int = 20,
    n_test: int = 20,
    size: int = 128,
    seed: int = 0,
) -> tuple[LabeledDataset, LabeledDataset]:
    """Disjointly seeded train/test splits over the ten texture classes."""
    rng = np.random.default_rng(seed)
    def draw(n: int) -> tuple[np.ndarray, np.ndarray]:
        images, labels = [], []
        for cid in range(N_TEXTURE_CLASSES):
            for _ in range(n):
                images.append(texture_image(cid, size, rng))
                labels.append(cid)
        return np.stack(images), np.asarray(labels, dtype=np.int64)

    train_x, train_y = draw(n_train)
    test_x, test_y = draw(n_test)
    prov = {"source": "synthetic-textures", "seed": seed, "size": size}
    return (
        LabeledDataset(train_x, train_y, dict(prov, split="train")),
        LabeledDataset(test_x, test_y, dict(prov, split="test")),
    )


def _soft_stroke(dist: np.ndarray, width: float) -> np.ndarray:
    return np.exp(-((dist / width) ** 2))


def _segment_dist(size: int, a: tuple[float, float], b: tuple[float, float]) -> np.ndarray:
    """Distance from each pixel to the segment a-b (coords in [0,1])."""
    rows = np.arange(size)[:, None] / size
    cols = np.arange(size)[None, :] / size
    ar, ac = a
    br, bc = b
    dr, dc = br - ar, bc - ac
    den = dr * dr + dc * dc
    if den == 0.0:
        return np.hypot(rows - ar, cols - ac)
    t = np.clip(((rows - ar) * dr + (cols - ac) * dc) / den, 0.0, 1.0)
    return np.hypot(rows - (ar + t * dr), cols - (ac + t * dc))


def _ring_dist(size: int, center: tuple[float, float], radius: float) -> np.ndarray:
    rows = np.arange(size)[:, None] / size
    cols = np.arange(size)[None, :] / size
    return np.abs(np.hypot(rows - center[0], cols - center[1]) - radius)


def glyph_image(
    class_id: int,
    size: int,
    rng: np.random.Generator,
    warp: float = 0.25,
    noise: float = 0.04,
) -> np.ndarray:
    """One sample of a deformable glyph class on a ``size`` x ``size`` grid.

    The base shape is drawn with a soft pen, then randomly shifted by a few
    pixels, warped by a smooth field with gradient norm up to ``warp``, and
    corrupted by white pixel noise.
    """
    from .scattering import apply_deformation

    c = (0.5, 0.5)
    w = 0.045
    if class_id == 0:
        base = _soft_stroke(_ring_dist(size, c, 0.26), w)
    elif class_id == 1:
        base = _soft_stroke(_segment_dist(size, (0.2, 0.5), (0.8, 0.5)), w)
    elif class_id == 2:
        base = _soft_stroke(_segment_dist(size, (0.5, 0.2), (0.5, 0.8)), w)
    elif class_id == 3:
        base = np.maximum(
            _soft_stroke(_segment_dist(size, (0.2, 0.5), (0.8, 0.5)), w),
            _soft_stroke(_segment_dist(size, (0.5, 0.2), (0.5, 0.8)), w),
        )
    elif class_id == 4:
        base = np.maximum(
            _soft_stroke(_segment_dist(size, (0.2, 0.2), (0.8, 0.8)), w),
            _soft_stroke(_segment_dist(size, (0.2, 0.8), (0.8, 0.2)), w),
        )
    elif class_id == 5:
        ring = _soft_stroke(_ring_dist(size, c, 0.26), w)
        cols = np.arange(size)[None, :] / size
        base = ring * (cols <= 0.5)
    elif class_id == 6:
        base = np.maximum(
            _soft_stroke(_ring_dist(size, (0.32, 0.5), 0.02), 2 * w),
            _soft_stroke(_ring_dist(size, (0.68, 0.5), 0.02), 2 * w),
        )
    elif class_id == 7:
        base = _soft_stroke(_segment_dist(size, (0.2, 0.2), (0.8, 0.8)), w)
    elif class_id == 8:
        base = np.maximum(
            _soft_stroke(_ring_dist(size, c, 0.26), w),
            _soft_stroke(_segment_dist(size, (0.2, 0.5), (0.8, 0.5)), w),
        )
    elif class_id == 9:
        base = np.maximum.reduce(
            [
                _soft_stroke(_segment_dist(size, (0.3, 0.3), (0.3, 0.7)), w),
                _soft_stroke(_segment_dist(size, (0.7, 0.3), (0.7, 0.7)), w),
                _soft_stroke(_segment_dist(size, (0.3, 0.3), (0.7, 0.3)), w),
                _soft_stroke(_segment_dist(size, (0.3, 0.7), (0.7, 0.7)), w),
            ]
        )
    else:
        raise ValueError(
            f"glyph class_id must be 0..{N_GLYPH_CLASSES - 1}, got {class_id}"
        )
    if warp > 0.0:
        field = harmonic_field(
            (size, size), rng.uniform(0.3, 1.0) * warp, seed=int(rng.integers(2**31))
        )
        base = apply_deformation(base, field)
    shift = rng.integers(-size // 10, size // 10 + 1, size=2)
    base = np.roll(base, tuple(shift), axis=(0, 1))
    return base + noise * rng.standard_normal((size, size))


def glyph_benchmark(
    n_train: int = 30,
    n_test: int = 30,
    size: int = 32,
    seed: int = 0,
    warp: float = 0.25,
    noise: float = 0.04,
) -> tuple[LabeledDataset, LabeledDataset]:
    """Disjointly seeded train/test splits over the ten glyph classes."""
    rng = np.random.default_rng(seed)

    def draw(n: int) -> tuple[np.ndarray, np.ndarray]:
        images, labels = [], []
        for cid in range(N_GLYPH_CLASSES):
            for _ in range(n):
                images.append(glyph_image(cid, size, rng, warp=warp, noise=noise))
                labels.append(cid)
        return np.stack(images), np.asarray(labels, dtype=np.int64)

    train_x, train_y = draw(n_train)
    test_x, test_y = draw(n_test)
    prov = {"source": "synthetic-glyphs", "seed": seed, "size": size}
    return (
        LabeledDataset(train_x, train_y, dict(prov, split="train")),
        LabeledDataset(test_x, test_y, dict(prov, split="test")),
    )
