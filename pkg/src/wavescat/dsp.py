"""Low-level spectral kernels for periodic 2-D signals.

All routines operate on the trailing two axes of their inputs, so stacks of
images ``(..., H, W)`` work everywhere a single image does.  Spatial
dimensions must be powers of two; convolutions are circular.

The forward transform is the plain unnormalized DFT and the inverse carries
the ``1/(H*W)`` factor, matching :func:`numpy.fft.fft2`.  Under this
convention Parseval reads ``||fft2(g)||^2 == H*W*||g||^2``.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "fft2",
    "ifft2",
    "fold_spectrum",
    "convolve_subsample",
    "modulus",
    "require_pow2",
]


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def require_pow2(shape: tuple[int, ...]) -> None:
    """Raise ``ValueError`` unless the trailing two dims are powers of two."""
    if len(shape) < 2:
        raise ValueError(f"expected at least 2 dimensions, got shape {shape}")
    h, w = shape[-2], shape[-1]
    if not (_is_pow2(h) and _is_pow2(w)):
        raise ValueError(f"grid dimensions must be powers of two, got {h}x{w}")


def fft2(g: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2-D DFT over the trailing two axes."""
    g = np.asarray(g)
    require_pow2(g.shape)
    return np.fft.fft2(g, axes=(-2, -1))


def ifft2(g_hat: np.ndarray) -> np.ndarray:
    """Inverse 2-D DFT (with the ``1/(H*W)`` factor) over the trailing axes."""
    g_hat = np.asarray(g_hat)
    require_pow2(g_hat.shape)
    return np.fft.ifft2(g_hat, axes=(-2, -1))


def fold_spectrum(spec: np.ndarray, step: int) -> np.ndarray:
    """Alias a spectrum onto a grid ``step`` times smaller along each axis.

    Averaging the ``step**2`` overlapping frequency tiles is the exact
    spectral counterpart of keeping every ``step``-th spatial sample:
    ``ifft2(fold_spectrum(fft2(y), s)) == y[..., ::s, ::s]``.
    """
    if step == 1:
        return spec
    h, w = spec.shape[-2], spec.shape[-1]
    lead = spec.shape[:-2]
    folded = spec.reshape(lead + (step, h // step, step, w // step))
    return folded.mean(axis=(-4, -2))


def convolve_subsample(g: np.ndarray, filter_hat: np.ndarray, step: int = 1) -> np.ndarray:
    """Circular convolution with a frequency-domain filter, then decimation.

    ``filter_hat`` is the DFT of the (periodized) filter on the same grid as
    ``g``.  The product spectrum is folded by ``step`` before the inverse
    transform, which equals computing the full convolution and keeping every
    ``step``-th sample along both axes.  Returns a complex array; take the
    real part or modulus as appropriate for the filter in use.
    """
    g = np.asarray(g)
    require_pow2(g.shape)
    filter_hat = np.asarray(filter_hat)
    if filter_hat.shape != g.shape[-2:]:
        raise ValueError(
            f"filter grid {filter_hat.shape} does not match signal grid {g.shape[-2:]}"
        )
    if step < 1 or not _is_pow2(step):
        raise ValueError(f"step must be a positive power of two, got {step}")
    if g.shape[-2] % step or g.shape[-1] % step:
        raise ValueError(f"step {step} does not divide grid {g.shape[-2:]}")
    y_hat = np.fft.fft2(g, axes=(-2, -1)) * filter_hat
    return np.fft.ifft2(fold_spectrum(y_hat, step), axes=(-2, -1))


def modulus(g: np.ndarray) -> np.ndarray:
    """Pointwise complex magnitude, returned as a real array."""
    return np.abs(np.asarray(g))
