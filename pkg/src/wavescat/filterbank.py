"""Frequency-domain Gabor wavelet bank with a Gaussian low-pass.

Band-pass atoms are modulated Gaussians rotated to ``n_orientations`` angles
spread over the half circle and dilated over dyadic scales ``2**j`` for
``j = 0..J-1``; the low-pass is an isotropic Gaussian at scale ``2**J``.
Filters are sampled directly in the frequency domain by summing the analytic
spectrum over 2-pi translates, so every stored grid is the exact DFT of the
corresponding periodized spatial filter.  Each band-pass atom has a small
multiple of its envelope subtracted so its DC response is exactly zero, and
the whole band-pass family is rescaled so that the energy tiling

    |phi_hat(w)|^2 + 0.5 * sum_{j,g} (|psi_hat_{j,g}(w)|^2 + |psi_hat_{j,g}(-w)|^2)

peaks at exactly 1 over the nonzero frequencies of the base grid.  That cap
makes the wavelet-modulus cascade built on top of the bank non-expansive.

Every filter is additionally stored at the dyadic resolutions a multi-scale
cascade needs: the resolution-``r`` copy is the 2-pi-periodization of the
resolution-0 spectrum folded onto a grid ``2**r`` times smaller per axis,
i.e. the exact spectrum of the same periodized filter on the coarser grid.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .dsp import require_pow2

__all__ = [
    "GaborParams",
    "FilterBank",
    "build_bank",
    "littlewood_paley_profile",
    "negate_frequencies",
    "dump_bank",
]


@dataclass(frozen=True)
class GaborParams:
    """Shape parameters of the Gabor wavelet family.

    ``xi`` is the modulation frequency of the mother wavelet (radians per
    pixel along the first axis before rotation), ``sigma`` the spatial width
    of its Gaussian envelope, ``sigma_phi`` the width multiplier of the
    low-pass Gaussian, and ``slant`` the envelope aspect ratio (1 gives an
    isotropic envelope; smaller values elongate it across the oscillation).
    """

    J: int
    n_orientations: int = 6
    xi: float = 3.0 * math.pi / 4.0
    sigma: float = 1.0
    sigma_phi: float = 2.0 / 3.0
    slant: float = 1.0

    def __post_init__(self) -> None:
        if self.J < 1:
            raise ValueError(f"J must be >= 1, got {self.J}")
        if self.n_orientations < 1:
            raise ValueError(f"n_orientations must be >= 1, got {self.n_orientations}")
        if not 0.0 < self.xi < 2.0 * math.pi:
            raise ValueError(f"xi must lie in (0, 2*pi), got {self.xi}")
        if self.sigma <= 0.0 or self.sigma_phi <= 0.0:
            raise ValueError("sigma and sigma_phi must be positive")
        if self.slant <= 0.0:
            raise ValueError(f"slant must be positive, got {self.slant}")

    def angles(self) -> np.ndarray:
        """Orientation angles ``pi*g/n_orientations`` for ``g = 0..n-1``."""
        n = self.n_orientations
        return np.arange(n) * (math.pi / n)


@dataclass(frozen=True)
class FilterBank:
    """Sampled filter spectra at every dyadic resolution the cascade uses.

    ``psi_hat[(j, g, r)]`` is the spectrum of the scale-``j``,
    orientation-``g`` wavelet on the grid ``(height/2**r, width/2**r)`` for
    ``r = 0..j``, and ``phi_hat[r]`` the low-pass spectrum for ``r = 0..J``.
    The arrays are real (the atoms have even real spectra) and frozen
    read-only, so a bank can be shared across worker processes freely.
    """

    params: GaborParams
    height: int
    width: int
    psi_hat: dict[tuple[int, int, int], np.ndarray] = field(repr=False)
    phi_hat: dict[int, np.ndarray] = field(repr=False)
    littlewood_profile: tuple[float, float]

    def psi(self, j: int, g: int, r: int = 0) -> np.ndarray:
        return self.psi_hat[(j, g, r)]

    def phi(self, r: int = 0) -> np.ndarray:
        return self.phi_hat[r]

    @property
    def delta_slack(self) -> float:
        """Frame looseness ``1 - min_sum``; bounds energy lost per layer."""
        return 1.0 - self.littlewood_profile[0]


def _freq_axes(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    wr = 2.0 * np.pi * np.fft.fftfreq(h)[:, None]
    wc = 2.0 * np.pi * np.fft.fftfreq(w)[None, :]
    return wr, wc


def _n_tiles(params: GaborParams) -> int:
    # The widest spectrum in the family is the scale-0 band-pass: a Gaussian
    # bump of frequency std 1/sigma (1/(sigma*slant) across the oscillation)
    # centered at radius xi.  Summing translates out to where the envelope
    # argument exceeds ~8 standard deviations bounds the truncation error
    # near the 1e-14 level.
    reach = params.xi + 8.0 / (params.sigma * min(1.0, params.slant))
    return min(6, max(2, math.ceil(reach / (2.0 * math.pi))))


def _gabor_pair(
    h: int,
    w: int,
    scale: int,
    theta: float,
    params: GaborParams,
    n_tiles: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Periodized modulated Gaussian and its unmodulated envelope at
    frequency coordinates ``2**scale * R_theta * omega``."""
    wr, wc = _freq_axes(h, w)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    dil = float(1 << scale)
    a1 = params.sigma
    a2 = params.sigma / params.slant
    gabor = np.zeros((h, w))
    envelope = np.zeros((h, w))
    for a in range(-n_tiles, n_tiles + 1):
        vr = wr + 2.0 * np.pi * a
        for b in range(-n_tiles, n_tiles + 1):
            vc = wc + 2.0 * np.pi * b
            u1 = dil * (cos_t * vr + sin_t * vc)
            u2 = dil * (-sin_t * vr + cos_t * vc)
            envelope += np.exp(-0.5 * ((a1 * u1) ** 2 + (a2 * u2) ** 2))
            gabor += np.exp(-0.5 * ((a1 * (u1 - params.xi)) ** 2 + (a2 * u2) ** 2))
    return gabor, envelope


def _gauss_lowpass(h: int, w: int, scale: int, sigma_phi: float, n_tiles: int) -> np.ndarray:
    wr, wc = _freq_axes(h, w)
    width = sigma_phi * float(1 << scale)
    out = np.zeros((h, w))
    for a in range(-n_tiles, n_tiles + 1):
        vr = wr + 2.0 * np.pi * a
        for b in range(-n_tiles, n_tiles + 1):
            vc = wc + 2.0 * np.pi * b
            out += np.exp(-0.5 * width**2 * (vr**2 + vc**2))
    return out / out[0, 0]


def _fold_sum(spec: np.ndarray, step: int) -> np.ndarray:
    """Sum the ``step**2`` frequency tiles: the filter-periodization fold.

    For a filter spectrum this yields the DFT of the very same periodized
    spatial filter sampled on the ``step``-times-coarser grid.
    """
    if step == 1:
        return spec
    h, w = spec.shape
    return spec.reshape(step, h // step, step, w // step).sum(axis=(0, 2))


def negate_frequencies(spec: np.ndarray) -> np.ndarray:
    """Reindex a spectrum grid from ``omega`` to ``-omega`` (mod 2-pi)."""
    return np.roll(spec[..., ::-1, ::-1], (1, 1), axis=(-2, -1))


def energy_tiling(
    psi0: dict[tuple[int, int], np.ndarray], phi0: np.ndarray
) -> np.ndarray:
    """Frequency-domain frame sum |phi|^2 + (1/2) sum (|psi|^2 + |psi(-w)|^2).

    Accepts the resolution-0 band-pass spectra keyed by (scale, orientation)
    and the resolution-0 low-pass spectrum; an empty band-pass dict yields the
    low-pass energy alone.
    """
    total = np.abs(phi0) ** 2
    for spec in psi0.values():
        total += 0.5 * (np.abs(spec) ** 2 + np.abs(negate_frequencies(spec)) ** 2)
    return total


def build_bank(params: GaborParams, shape: tuple[int, int]) -> FilterBank:
    """Sample the full filter family for base grids of the given shape.

    Dimensions must be powers of two with ``2**J <= min(shape)``.  The
    band-pass atoms are DC-corrected exactly and the family is rescaled so
    the Littlewood-Paley sum tops out at exactly 1 away from frequency zero.
    """
    h, w = shape
    require_pow2((h, w))
    if (1 << params.J) > min(h, w):
        raise ValueError(
            f"2**J = {1 << params.J} exceeds the grid extent {min(h, w)}"
        )
    tiles = _n_tiles(params)
    psi0: dict[tuple[int, int], np.ndarray] = {}
    for j in range(params.J):
        for g, theta in enumerate(params.angles()):
            gabor, envelope = _gabor_pair(h, w, j, float(theta), params, tiles)
            kappa = gabor[0, 0] / envelope[0, 0]
            psi0[(j, g)] = gabor - kappa * envelope
    phi0 = _gauss_lowpass(h, w, params.J, params.sigma_phi, tiles)

    # One-step exact renormalization: scale the band-pass family by the
    # largest constant that keeps the tiling at or below 1 everywhere off DC.
    lowpass_energy = np.abs(phi0) ** 2
    bandpass_energy = energy_tiling(psi0, phi0) - lowpass_energy
    mask = np.ones((h, w), dtype=bool)
    mask[0, 0] = False
    mask &= bandpass_energy > 0.0
    if not mask.any():
        raise ValueError("degenerate bank: band-pass energy vanishes off DC")
    c2 = np.min((1.0 - lowpass_energy[mask]) / bandpass_energy[mask])
    if c2 <= 0.0:
        raise ValueError("low-pass alone exceeds unit energy; reduce sigma_phi")
    c = math.sqrt(c2)
    psi0 = {key: c * spec for key, spec in psi0.items()}

    tiling = energy_tiling(psi0, phi0)
    offdc = _offdc_mask(h, w)
    profile = (float(tiling[offdc].min()), float(tiling[offdc].max()))

    psi_hat: dict[tuple[int, int, int], np.ndarray] = {}
    for (j, g), spec in psi0.items():
        for r in range(j + 1):
            arr = _fold_sum(spec, 1 << r)
            arr.setflags(write=False)
            psi_hat[(j, g, r)] = arr
    phi_hat: dict[int, np.ndarray] = {}
    for r in range(params.J + 1):
        arr = _fold_sum(phi0, 1 << r)
        arr.setflags(write=False)
        phi_hat[r] = arr
    return FilterBank(
        params=params,
        height=h,
        width=w,
        psi_hat=psi_hat,
        phi_hat=phi_hat,
        littlewood_profile=profile,
    )


def _offdc_mask(h: int, w: int) -> np.ndarray:
    mask = np.ones((h, w), dtype=bool)
    mask[0, 0] = False
    return mask


def littlewood_paley_profile(bank: FilterBank) -> tuple[float, float]:
    """Recompute ``(min, max)`` of the energy tiling over nonzero frequencies.

    Uses the stored resolution-0 spectra, so it independently certifies the
    profile recorded at build time.
    """
    psi0 = {
        (j, g): bank.psi(j, g, 0)
        for j in range(bank.params.J)
        for g in range(bank.params.n_orientations)
    }
    tiling = energy_tiling(psi0, bank.phi(0))
    mask = _offdc_mask(bank.height, bank.width)
    return float(tiling[mask].min()), float(tiling[mask].max())


def dump_bank(bank: FilterBank, outdir) -> list[str]:
    """Write every filter magnitude as a flat float64 binary grid.

    Emits one ``.f64`` file per stored spectrum (row-major, little-endian)
    plus ``manifest.txt`` listing file name, grid shape, CRC32 of the bytes,
    and the frame profile.  Returns the written file names.
    """
    from pathlib import Path

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    lines: list[str] = []
    p = bank.params
    lines.append(
        f"gabor J={p.J} n_orientations={p.n_orientations} xi={p.xi:.10g} "
        f"sigma={p.sigma:.10g} sigma_phi={p.sigma_phi:.10g} slant={p.slant:.10g}"
    )
    lines.append(f"grid {bank.height}x{bank.width}")
    lo, hi = bank.littlewood_profile
    lines.append(f"littlewood_min {lo:.12g}")
    lines.append(f"littlewood_max {hi:.12g}")

    def emit(name: str, arr: np.ndarray) -> None:
        payload = np.ascontiguousarray(np.abs(arr), dtype="<f8").tobytes()
        (out / name).write_bytes(payload)
        crc = zlib.crc32(payload) & 0xFFFFFFFF
        lines.append(f"file {name} shape {arr.shape[0]}x{arr.shape[1]} crc32 {crc:08x}")
        written.append(name)

    for (j, g, r), arr in sorted(bank.psi_hat.items()):
        emit(f"psi_j{j}_g{g}_r{r}.f64", arr)
    for r, arr in sorted(bank.phi_hat.items()):
        emit(f"phi_r{r}.f64", arr)
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")
    written.append("manifest.txt")
    return written
