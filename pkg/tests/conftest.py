"""Shared fixtures.  Filter banks are immutable and costly, so they are
built once per session; tests must not mutate them (the arrays are frozen
read-only anyway)."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from wavescat.filterbank import GaborParams, build_bank


#: One line per acceptance check, filled in by tests/test_acceptance.py and
#: echoed in a summary section at the end of the run so every headline
#: property's outcome is visible at a glance.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance summary")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def bank32():
    """Default configuration on a 32x32 grid: J=3, six orientations."""
    return build_bank(GaborParams(J=3, n_orientations=6), (32, 32))


@pytest.fixture(scope="session")
def bank16():
    """Small, cheap configuration for plumbing tests: J=2, three orientations."""
    return build_bank(GaborParams(J=2, n_orientations=3), (16, 16))


@pytest.fixture(scope="session")
def naive32():
    from oracles import NaiveBank

    return NaiveBank(GaborParams(J=3, n_orientations=6), (32, 32))


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


def mnist_paths() -> dict[str, Path] | None:
    """Locate the four MNIST IDX files, gzipped or plain, if present.

    Looks under ``$WAVESCAT_MNIST_DIR``, then ``data/mnist`` beside the repo
    root.  Returns None when any file is missing (tests that need the real
    dataset skip with that explanation).
    """
    roots = []
    env = os.environ.get("WAVESCAT_MNIST_DIR")
    if env:
        roots.append(Path(env))
    roots.append(Path(__file__).resolve().parent.parent / "data" / "mnist")
    names = {
        "train_images": "train-images-idx3-ubyte",
        "train_labels": "train-labels-idx1-ubyte",
        "test_images": "t10k-images-idx3-ubyte",
        "test_labels": "t10k-labels-idx1-ubyte",
    }
    for root in roots:
        found: dict[str, Path] = {}
        for key, stem in names.items():
            for cand in (root / stem, root / (stem + ".gz")):
                if cand.is_file():
                    found[key] = cand
                    break
        if len(found) == len(names):
            return found
    return None


def usps_paths() -> dict[str, Path] | None:
    """Locate the USPS train/test text files, gzipped or plain, if present."""
    roots = []
    env = os.environ.get("WAVESCAT_USPS_DIR")
    if env:
        roots.append(Path(env))
    roots.append(Path(__file__).resolve().parent.parent / "data" / "usps")
    for root in roots:
        found: dict[str, Path] = {}
        for key, stem in (("train", "zip.train"), ("test", "zip.test")):
            for cand in (root / stem, root / (stem + ".gz")):
                if cand.is_file():
                    found[key] = cand
                    break
        if len(found) == 2:
            return found
    return None
