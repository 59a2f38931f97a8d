"""Run configuration: one dataclass, a key=value file parser, flag overrides.

A config file is plain text, one ``key = value`` per line, ``#`` comments
allowed.  Command-line flags override file values, which override defaults.
``delta`` accepts ``1`` or ``1/2``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction
from pathlib import Path

from .filterbank import GaborParams
from .scattering import as_delta

__all__ = ["RunConfig", "parse_config_file"]


@dataclass(frozen=True)
class RunConfig:
    """Every knob of the transform + classifier pipeline in one place."""

    J: int = 3
    n_orientations: int = 6
    xi: float = 3.0 * math.pi / 4.0
    sigma: float = 1.0
    sigma_phi: float = 2.0 / 3.0
    slant: float = 1.0
    m0: int = 2
    delta: Fraction = Fraction(1, 2)
    n_components: int = 200
    beta: float | None = None
    seed: int = 0
    jobs: int = 1

    def gabor(self, J: int | None = None) -> GaborParams:
        return GaborParams(
            J=self.J if J is None else J,
            n_orientations=self.n_orientations,
            xi=self.xi,
            sigma=self.sigma,
            sigma_phi=self.sigma_phi,
            slant=self.slant,
        )

    def describe(self) -> dict:
        """JSON-ready echo of the configuration (delta as a string)."""
        d = asdict(self)
        d["delta"] = str(self.delta)
        return d


def _coerce(name: str, text: str):
    text = text.strip()
    converters = {
        "J": int,
        "n_orientations": int,
        "m0": int,
        "n_components": int,
        "seed": int,
        "jobs": int,
        "xi": float,
        "sigma": float,
        "sigma_phi": float,
        "slant": float,
        "beta": float,
        "delta": lambda s: as_delta(Fraction(s)),
    }
    if name not in converters:
        raise ValueError(f"unknown config key {name!r}")
    try:
        return converters[name](text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad value for {name!r}: {text!r} ({exc})") from exc


def parse_config_file(path) -> dict:
    """Parse a key=value config file into typed overrides."""
    out: dict = {}
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{ln}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        try:
            out[key] = _coerce(key, value)
        except ValueError as exc:
            raise ValueError(f"{path}:{ln}: {exc}") from exc
    return out


def build_config(config_path=None, **overrides) -> RunConfig:
    """Defaults, then config file, then non-None keyword overrides."""
    cfg = RunConfig()
    if config_path is not None:
        cfg = replace(cfg, **parse_config_file(config_path))
    clean = {}
    valid = {f.name for f in fields(RunConfig)}
    for key, value in overrides.items():
        if key not in valid:
            raise ValueError(f"unknown config key {key!r}")
        if value is None:
            continue
        clean[key] = _coerce(key, str(value)) if isinstance(value, str) else value
    if "delta" in clean:
        clean["delta"] = as_delta(clean["delta"])
    return replace(cfg, **clean)
