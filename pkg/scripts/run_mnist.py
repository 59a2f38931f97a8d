#!/usr/bin/env python3
"""Run the MNIST small-training-set experiment.

Needs the four standard IDX files (train/t10k images and labels, gzipped or
plain) in one directory; pass it with --data-dir or set WAVESCAT_MNIST_DIR.
Images are zero-padded from 28x28 to 32x32 at ingestion.

For each requested training-set size the script draws a stratified,
seeded subsample, selects beta on a held-out fifth of it (and optionally J
with --j-grid), refits on the whole subsample, and reports the error on
the full 10k test set together with the mean selected model dimension.

Example:
    python scripts/run_mnist.py --data-dir data/mnist
    python scripts/run_mnist.py --sizes 300,1000,5000 --j-grid 2,3,4
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

from wavescat.classifier import cross_validate, evaluate, fit_classifier
from wavescat.data_io import load_idx, subsample_train
from wavescat.filterbank import GaborParams, build_bank
from wavescat.scattering import scatter_dataset


def locate(data_dir: str | None) -> dict[str, Path]:
    root = Path(data_dir or os.environ.get("WAVESCAT_MNIST_DIR", "data/mnist"))
    names = {
        "train_images": "train-images-idx3-ubyte",
        "train_labels": "train-labels-idx1-ubyte",
        "test_images": "t10k-images-idx3-ubyte",
        "test_labels": "t10k-labels-idx1-ubyte",
    }
    found: dict[str, Path] = {}
    for key, stem in names.items():
        for cand in (root / stem, root / (stem + ".gz")):
            if cand.is_file():
                found[key] = cand
                break
        else:
            raise SystemExit(f"missing {stem}[.gz] under {root}")
    return found


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data-dir", help="directory holding the four IDX files")
    ap.add_argument("--sizes", default="300,1000",
                    help="comma-separated training-set sizes")
    ap.add_argument("--j-grid", default="3",
                    help="comma-separated J values to cross-validate over")
    ap.add_argument("--n-orientations", type=int, default=6)
    ap.add_argument("--n-components", type=int, default=140, help="model dimension cap")
    ap.add_argument("--seed", type=int, default=0, help="subsample and split seed")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for the transform")
    args = ap.parse_args(argv)

    paths = locate(args.data_dir)
    train = load_idx(paths["train_images"], paths["train_labels"])
    test = load_idx(paths["test_images"], paths["test_labels"])
    print(f"loaded {len(train.labels)} train / {len(test.labels)} test images, "
          f"padded to {train.images.shape[1]}x{train.images.shape[2]}")

    sizes = [int(s) for s in args.sizes.split(",") if s]
    j_grid = sorted(int(s) for s in args.j_grid.split(",") if s)
    template = GaborParams(J=j_grid[0], n_orientations=args.n_orientations)

    test_features: dict[int, tuple] = {}  # J -> (layout, features), computed lazily
    for n_train in sizes:
        t0 = time.perf_counter()
        sub = subsample_train(train, total=n_train, seed=args.seed)
        sel = cross_validate(
            sub, template, J_grid=j_grid,
            n_components=args.n_components, seed=args.seed, jobs=args.jobs,
        )
        params = GaborParams(J=sel.J, n_orientations=args.n_orientations)
        bank = build_bank(params, train.images.shape[1:])
        _, x_tr = scatter_dataset(sub.images, bank, jobs=args.jobs)
        if sel.J not in test_features:
            test_features[sel.J] = scatter_dataset(test.images, bank, jobs=args.jobs)
        _, x_te = test_features[sel.J]
        clf = fit_classifier(
            x_tr, sub.labels,
            n_components=args.n_components, beta=sel.beta,
            J=sel.J, m0=2, n_orientations=args.n_orientations, delta=Fraction(1, 2),
        )
        res = evaluate(clf, x_te, test.labels)
        print(f"n_train={n_train}: error {res.error_rate:.2%} "
              f"(J={sel.J}, beta={sel.beta:.3g}, mean dimension {res.k_bar:.1f}, "
              f"{time.perf_counter() - t0:.0f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
