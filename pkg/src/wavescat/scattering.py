"""Windowed scattering transform built on the Gabor bank.

A scattering path is a tuple of ``(scale, orientation)`` pairs with strictly
increasing scales.  The transform iterates the wavelet-modulus propagator
breadth first: layer ``m`` holds ``U[p]f = | |f * psi_1| * ... * psi_m |``
for every length-``m`` path ``p``, each stored at sampling interval
``max(1, delta * 2**j_m)``, and every layer emits its low-pass average
``U[p]f * phi_J`` decimated to the common output interval
``max(1, delta * 2**J)``.  ``delta`` is the oversampling control: 1/2 keeps
one extra octave of bandwidth at every stage, 1 samples at the critical
rate.

All intermediate convolutions run at the reduced grid size of their input,
using the filter copy periodized to that resolution; this is exactly
equivalent to convolving at full resolution and decimating, which the test
suite checks against a dense oracle.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import dsp
from .filterbank import FilterBank

__all__ = [
    "ScatteringPath",
    "ScatteringLayout",
    "ScatteringVector",
    "enumerate_paths",
    "propagate",
    "scatter",
    "scatter_dataset",
    "scattering_distance",
    "scattering_norm",
    "layer_energy",
    "rolled_vector",
    "DeformationField",
    "apply_deformation",
]

ScatteringPath = tuple[tuple[int, int], ...]

_VALID_DELTAS = (Fraction(1, 2), Fraction(1))


def as_delta(value) -> Fraction:
    """Coerce an oversampling setting to one of the supported Fractions."""
    delta = Fraction(value) if not isinstance(value, Fraction) else value
    if delta not in _VALID_DELTAS:
        raise ValueError(f"delta must be 1/2 or 1, got {value!r}")
    return delta


def sampling_interval(delta: Fraction, j: int) -> int:
    """Sampling interval ``max(1, delta * 2**j)`` enforced after scale j."""
    t = delta * (1 << j)
    return 1 if t < 1 else int(t)


def enumerate_paths(J: int, n_orientations: int, m0: int) -> list[ScatteringPath]:
    """All paths of length <= m0 with strictly increasing scales below J.

    Ordered by length, then lexicographically; the transform emits its
    coefficients in exactly this order.
    """
    if J < 1 or n_orientations < 1 or m0 < 0:
        raise ValueError("J and n_orientations must be >= 1 and m0 >= 0")
    paths: list[ScatteringPath] = [()]
    layer: list[ScatteringPath] = [()]
    for _ in range(m0):
        nxt: list[ScatteringPath] = []
        for p in layer:
            j_prev = p[-1][0] if p else -1
            for j in range(j_prev + 1, J):
                for g in range(n_orientations):
                    nxt.append(p + ((j, g),))
        paths.extend(nxt)
        layer = nxt
    return paths


@dataclass(frozen=True)
class ScatteringLayout:
    """Static description of one transform configuration's output.

    Knows the path list, the common output grid, and where each path's
    flattened grid sits inside a feature vector.  Shared by every vector a
    given configuration produces.
    """

    J: int
    m0: int
    n_orientations: int
    delta: Fraction
    in_shape: tuple[int, int]
    out_shape: tuple[int, int]
    paths: tuple[ScatteringPath, ...]

    @cached_property
    def index(self) -> dict[ScatteringPath, tuple[int, int]]:
        """Map path -> (offset, length) into the flat coefficient vector."""
        size = self.out_shape[0] * self.out_shape[1]
        return {p: (i * size, size) for i, p in enumerate(self.paths)}

    @property
    def n_features(self) -> int:
        return len(self.paths) * self.out_shape[0] * self.out_shape[1]

    @property
    def output_interval(self) -> int:
        return sampling_interval(self.delta, self.J)

    @property
    def quadrature_weight(self) -> float:
        """Cell area of the output grid; weights discrete sums of squares."""
        return float(self.output_interval) ** 2


def make_layout(bank: FilterBank, m0: int, delta: Fraction) -> ScatteringLayout:
    delta = as_delta(delta)
    t_out = sampling_interval(delta, bank.params.J)
    return ScatteringLayout(
        J=bank.params.J,
        m0=m0,
        n_orientations=bank.params.n_orientations,
        delta=delta,
        in_shape=(bank.height, bank.width),
        out_shape=(bank.height // t_out, bank.width // t_out),
        paths=tuple(enumerate_paths(bank.params.J, bank.params.n_orientations, m0)),
    )


@dataclass(frozen=True)
class ScatteringVector:
    """One image's scattering coefficients plus the layout describing them."""

    layout: ScatteringLayout
    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.shape != (self.layout.n_features,):
            raise ValueError(
                f"data length {self.data.shape} does not match layout "
                f"({self.layout.n_features} features)"
            )

    @property
    def J(self) -> int:
        return self.layout.J

    @property
    def m0(self) -> int:
        return self.layout.m0

    @property
    def n_orientations(self) -> int:
        return self.layout.n_orientations

    @property
    def paths(self) -> tuple[ScatteringPath, ...]:
        return self.layout.paths

    @property
    def index(self) -> dict[ScatteringPath, tuple[int, int]]:
        return self.layout.index

    def grid(self, path: ScatteringPath) -> np.ndarray:
        """The coefficients of one path, reshaped to the output grid."""
        off, length = self.layout.index[path]
        return self.data[off : off + length].reshape(self.layout.out_shape)


def _resolution(bank: FilterBank, grid_shape: tuple[int, int]) -> int:
    h, w = grid_shape
    if h < 1 or bank.height % h or bank.width % w:
        raise ValueError(f"grid {grid_shape} is not a dyadic reduction of "
                         f"({bank.height}, {bank.width})")
    t_h, t_w = bank.height // h, bank.width // w
    if t_h != t_w or t_h & (t_h - 1):
        raise ValueError(f"grid {grid_shape} is not a dyadic reduction of "
                         f"({bank.height}, {bank.width})")
    return t_h.bit_length() - 1


def propagate(
    signal: np.ndarray,
    bank: FilterBank,
    j_prev: int,
    delta: Fraction = Fraction(1, 2),
) -> tuple[dict[tuple[int, int], np.ndarray], np.ndarray]:
    """One step of the wavelet-modulus propagator.

    ``signal`` is a real grid sampled at a dyadic reduction of the bank's
    base grid (its shape encodes the reduction).  Returns the dict of
    ``|signal * psi_{j,g}|`` for every ``j`` in ``(j_prev, J)`` decimated to
    interval ``max(1, delta*2**j)``, together with ``signal * phi_J``
    decimated to the output interval.
    """
    delta = as_delta(delta)
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 2:
        raise ValueError(f"expected a 2-D grid, got shape {signal.shape}")
    r = _resolution(bank, signal.shape)
    t_in = 1 << r
    J = bank.params.J
    if not -1 <= j_prev < J:
        raise ValueError(f"j_prev must be in [-1, {J - 1}], got {j_prev}")
    spectrum = dsp.fft2(signal)
    children: dict[tuple[int, int], np.ndarray] = {}
    for j in range(j_prev + 1, J):
        t_j = sampling_interval(delta, j)
        if t_j % t_in:
            raise ValueError(
                f"signal at interval {t_in} is too coarse for scale {j} "
                f"(needs interval dividing {t_j})"
            )
        step = t_j // t_in
        for g in range(bank.params.n_orientations):
            out = dsp.ifft2(dsp.fold_spectrum(spectrum * bank.psi(j, g, r), step))
            children[(j, g)] = np.abs(out)
    t_out = sampling_interval(delta, J)
    if t_out % t_in:
        raise ValueError(f"signal interval {t_in} does not divide output interval {t_out}")
    lowpass = dsp.ifft2(dsp.fold_spectrum(spectrum * bank.phi(r), t_out // t_in)).real
    return children, lowpass


def _cascade(batch: np.ndarray, bank: FilterBank, m0: int, delta: Fraction) -> np.ndarray:
    """Run the breadth-first cascade on a ``(B, H, W)`` stack.

    Returns features ``(B, n_paths * out_len)`` in canonical path order.
    The frontier carries each layer's modulus spectra so every path costs
    one inverse transform, one modulus, and one forward transform.
    """
    B, H, W = batch.shape
    J = bank.params.J
    n_orient = bank.params.n_orientations
    t_out = sampling_interval(delta, J)
    blocks: list[np.ndarray] = []
    spectra = np.fft.fft2(batch, axes=(-2, -1))
    frontier: list[tuple[ScatteringPath, np.ndarray, int]] = [((), spectra, 1)]
    for depth in range(m0 + 1):
        nxt: list[tuple[ScatteringPath, np.ndarray, int]] = []
        for path, u_hat, t_in in frontier:
            r = t_in.bit_length() - 1
            low = np.fft.ifft2(
                dsp.fold_spectrum(u_hat * bank.phi(r), t_out // t_in), axes=(-2, -1)
            ).real
            if path:
                low = np.maximum(low, 0.0)
            blocks.append(low.reshape(B, -1))
            if depth == m0:
                continue
            j_prev = path[-1][0] if path else -1
            for j in range(j_prev + 1, J):
                t_j = sampling_interval(delta, j)
                step = t_j // t_in
                for g in range(n_orient):
                    z = np.fft.ifft2(
                        dsp.fold_spectrum(u_hat * bank.psi(j, g, r), step),
                        axes=(-2, -1),
                    )
                    u = np.abs(z)
                    nxt.append((path + ((j, g),), np.fft.fft2(u, axes=(-2, -1)), t_j))
        frontier = nxt
    return np.concatenate(blocks, axis=1)


def scatter(
    f: np.ndarray,
    bank: FilterBank,
    m0: int = 2,
    delta: Fraction = Fraction(1, 2),
) -> ScatteringVector:
    """Scattering coefficients of a single image against a built bank."""
    delta = as_delta(delta)
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {f.shape}")
    if f.shape != (bank.height, bank.width):
        raise ValueError(f"image shape {f.shape} does not match bank grid "
                         f"({bank.height}, {bank.width})")
    if m0 < 0:
        raise ValueError(f"m0 must be >= 0, got {m0}")
    layout = make_layout(bank, m0, delta)
    data = _cascade(f[None], bank, m0, delta)[0]
    return ScatteringVector(layout=layout, data=data)


_WORKER_STATE: tuple | None = None


def _chunk_worker_init(bank: FilterBank, m0: int, delta: Fraction) -> None:
    global _WORKER_STATE
    _WORKER_STATE = (bank, m0, delta)


def _chunk_worker(chunk: np.ndarray) -> np.ndarray:
    bank, m0, delta = _WORKER_STATE  # type: ignore[misc]
    return _cascade(chunk, bank, m0, delta)


def _default_chunk(bank: FilterBank) -> int:
    pixels = bank.height * bank.width
    fanout = max(1, bank.params.J * bank.params.n_orientations)
    return max(8, min(512, (1 << 24) // (pixels * fanout)))


def scatter_dataset(
    images: np.ndarray,
    bank: FilterBank,
    m0: int = 2,
    delta: Fraction = Fraction(1, 2),
    jobs: int = 1,
    chunk_size: int | None = None,
) -> tuple[ScatteringLayout, np.ndarray]:
    """Scattering features for a stack of images.

    Processes the stack in fixed-size chunks (optionally across worker
    processes) and concatenates the results in input order, so the output is
    identical for any ``jobs``/``chunk_size`` choice.  Returns the shared
    layout and a ``(N, n_features)`` float64 matrix.
    """
    delta = as_delta(delta)
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 3:
        raise ValueError(f"expected (N, H, W) images, got shape {images.shape}")
    if images.shape[1:] != (bank.height, bank.width):
        raise ValueError(f"image grid {images.shape[1:]} does not match bank grid "
                         f"({bank.height}, {bank.width})")
    layout = make_layout(bank, m0, delta)
    n = images.shape[0]
    if n == 0:
        return layout, np.empty((0, layout.n_features))
    size = chunk_size or _default_chunk(bank)
    chunks = [images[i : i + size] for i in range(0, n, size)]
    if jobs <= 1 or len(chunks) == 1:
        parts = [_cascade(c, bank, m0, delta) for c in chunks]
    else:
        with ProcessPoolExecutor(
            max_workers=min(jobs, len(chunks)),
            initializer=_chunk_worker_init,
            initargs=(bank, m0, delta),
        ) as pool:
            parts = list(pool.map(_chunk_worker, chunks))
    return layout, np.concatenate(parts, axis=0)


def _check_same_layout(a: ScatteringVector, b: ScatteringVector) -> None:
    if a.layout != b.layout:
        raise ValueError("scattering vectors come from different configurations")


def scattering_norm(v: ScatteringVector) -> float:
    """Discrete L2 norm of the coefficients, weighted by output cell area."""
    return float(np.sqrt(v.layout.quadrature_weight) * np.linalg.norm(v.data))


def scattering_distance(a: ScatteringVector, b: ScatteringVector) -> float:
    """Weighted L2 distance between two transforms of the same layout."""
    _check_same_layout(a, b)
    return float(np.sqrt(a.layout.quadrature_weight) * np.linalg.norm(a.data - b.data))


def layer_energy(v: ScatteringVector) -> np.ndarray:
    """Weighted squared norm of the coefficients, split by path length."""
    out = np.zeros(v.m0 + 1)
    w = v.layout.quadrature_weight
    for p in v.paths:
        off, length = v.layout.index[p]
        seg = v.data[off : off + length]
        out[len(p)] += w * float(seg @ seg)
    return out


def rolled_vector(v: ScatteringVector, shift: tuple[int, int]) -> ScatteringVector:
    """Circularly shift every path's output grid by ``shift`` cells.

    Shifting an input image by ``output_interval * shift`` pixels must yield
    exactly this vector; that covariance is part of the test contract.
    """
    rolled = np.empty_like(v.data)
    h, w = v.layout.out_shape
    for p in v.paths:
        off, length = v.layout.index[p]
        grid = v.data[off : off + length].reshape(h, w)
        rolled[off : off + length] = np.roll(grid, shift, axis=(0, 1)).ravel()
    return ScatteringVector(layout=v.layout, data=rolled)


@dataclass(frozen=True)
class DeformationField:
    """Pixel displacement field ``tau`` of shape ``(H, W, 2)``.

    ``tau[..., 0]`` displaces along rows, ``tau[..., 1]`` along columns.
    Warping samples the image periodically, but the Jacobian is differenced
    without wraparound (one-sided at the boundary) so affine fields such as
    ``tau(x) = eps * x`` report their analytic gradient exactly.
    """

    tau: np.ndarray

    def __post_init__(self) -> None:
        tau = np.asarray(self.tau, dtype=np.float64)
        if tau.ndim != 3 or tau.shape[2] != 2:
            raise ValueError(f"tau must have shape (H, W, 2), got {tau.shape}")
        object.__setattr__(self, "tau", tau)

    @cached_property
    def amplitude(self) -> float:
        """Largest displacement magnitude, in pixels."""
        return float(np.sqrt((self.tau**2).sum(axis=2)).max())

    @cached_property
    def gradient_sup(self) -> float:
        """Sup over pixels of the Jacobian's spectral norm."""
        d_row = np.gradient(self.tau, axis=0)
        d_col = np.gradient(self.tau, axis=1)
        jac = np.stack([d_row, d_col], axis=-1)  # (H, W, 2, 2)
        svals = np.linalg.svd(jac, compute_uv=False)
        return float(svals.max())


def _bilinear_periodic(f: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    h, w = f.shape
    r0 = np.floor(rows).astype(np.int64)
    c0 = np.floor(cols).astype(np.int64)
    fr = rows - r0
    fc = cols - c0
    r0 %= h
    c0 %= w
    r1 = (r0 + 1) % h
    c1 = (c0 + 1) % w
    return (
        f[r0, c0] * (1 - fr) * (1 - fc)
        + f[r1, c0] * fr * (1 - fc)
        + f[r0, c1] * (1 - fr) * fc
        + f[r1, c1] * fr * fc
    )


def apply_deformation(f: np.ndarray, tau: DeformationField | np.ndarray) -> np.ndarray:
    """Warp ``f`` to ``x -> f(x - tau(x))`` with periodic bilinear sampling.

    Requires ``sup |grad tau| < 1`` so the warp cannot fold over itself.
    """
    field = tau if isinstance(tau, DeformationField) else DeformationField(np.asarray(tau))
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {f.shape}")
    if field.tau.shape[:2] != f.shape:
        raise ValueError(
            f"field grid {field.tau.shape[:2]} does not match image {f.shape}"
        )
    if field.gradient_sup >= 1.0:
        raise ValueError(
            f"deformation too strong: sup|grad tau| = {field.gradient_sup:.3f} >= 1"
        )
    rows = np.arange(f.shape[0])[:, None] - field.tau[..., 0]
    cols = np.arange(f.shape[1])[None, :] - field.tau[..., 1]
    return _bilinear_periodic(f, rows, cols)
