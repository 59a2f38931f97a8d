"""Command-line front end.

Subcommands cover the full pipeline: dump a filter bank, compute features,
train and apply the classifier, cross-validate the scale and penalty, and
run the analysis reports.  All outputs (CSV, JSON, binary containers) are
deterministic functions of the inputs, configuration, and seed; floats are
formatted with ``%.10g`` and JSON keys are sorted.

Errors exit with a category code: 2 config, 3 io, 4 data, 5 numeric.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import classifier as clf_mod
from . import data_io, filterbank, scattering
from .config import RunConfig, build_config

EXIT_CODES = {"config": 2, "io": 3, "data": 4, "numeric": 5}


class CliError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{x:.10g}"
    return str(x)


def _write_csv(path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(x) for x in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _add_transform_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--J", type=int, dest="J")
    p.add_argument("--n-orientations", type=int, dest="n_orientations")
    p.add_argument("--xi", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--sigma-phi", type=float, dest="sigma_phi")
    p.add_argument("--slant", type=float)
    p.add_argument("--m0", type=int)
    p.add_argument("--delta", choices=["1", "1/2"])
    p.add_argument("--n-components", type=int, dest="n_components")
    p.add_argument("--beta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)


_CONFIG_KEYS = (
    "J", "n_orientations", "xi", "sigma", "sigma_phi", "slant",
    "m0", "delta", "n_components", "beta", "seed", "jobs",
)


def _config_from_args(args) -> RunConfig:
    overrides = {
        k: getattr(args, k) for k in _CONFIG_KEYS if getattr(args, k, None) is not None
    }
    try:
        return build_config(args.config, **overrides)
    except (ValueError, OSError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise CliError("io", f"config file not found: {args.config}") from exc
        raise CliError("config", str(exc)) from exc


def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--images", help="IDX image file (optionally .gz)")
    p.add_argument("--labels", help="IDX label file (optionally .gz)")
    p.add_argument("--usps", help="text digit file: label + 256 values per line")
    p.add_argument("--texture-dir", help="directory with one subdirectory per class")
    p.add_argument("--crop", type=int, default=128, help="texture center-crop size")
    p.add_argument("--subset", type=int, help="stratified subsample: total size")
    p.add_argument("--per-class", type=int, help="stratified subsample: per class")


def _load_dataset(args, cfg: RunConfig) -> data_io.LabeledDataset:
    sources = [bool(args.images or args.labels), bool(args.usps), bool(args.texture_dir)]
    if sum(sources) != 1:
        raise CliError(
            "config",
            "specify exactly one input: --images/--labels, --usps, or --texture-dir",
        )
    if args.images or args.labels:
        if not (args.images and args.labels):
            raise CliError("config", "--images and --labels must be given together")
        ds = data_io.load_idx(args.images, args.labels)
    elif args.usps:
        ds = data_io.load_usps_text(args.usps)
    else:
        ds = data_io.load_texture_dir(args.texture_dir, crop=args.crop)
    if args.subset is not None or args.per_class is not None:
        try:
            ds = data_io.subsample_train(
                ds, total=args.subset, per_class=args.per_class, seed=cfg.seed
            )
        except ValueError as exc:
            if isinstance(exc, data_io.DataError):
                raise
            raise CliError("config", str(exc)) from exc
    return ds


def _parse_size(text: str) -> tuple[int, int]:
    if "x" in text:
        h, _, w = text.partition("x")
        return int(h), int(w)
    n = int(text)
    return n, n


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_filters(args) -> int:
    cfg = _config_from_args(args)
    try:
        shape = _parse_size(args.size)
    except ValueError as exc:
        raise CliError("config", f"bad --size {args.size!r}") from exc
    try:
        bank = filterbank.build_bank(cfg.gabor(), shape)
    except ValueError as exc:
        raise CliError("config", str(exc)) from exc
    written = filterbank.dump_bank(bank, args.out)
    lo, hi = bank.littlewood_profile
    print(f"wrote {len(written)} files to {args.out}")
    print(f"littlewood min {lo:.10g} max {hi:.10g} slack {1 - lo:.10g}")
    return 0


def _scatter_features(ds, cfg: RunConfig):
    try:
        bank = filterbank.build_bank(cfg.gabor(), ds.images.shape[1:])
    except ValueError as exc:
        raise CliError("config", str(exc)) from exc
    return scattering.scatter_dataset(
        ds.images, bank, m0=cfg.m0, delta=cfg.delta, jobs=cfg.jobs
    )


def cmd_scatter(args) -> int:
    cfg = _config_from_args(args)
    ds = _load_dataset(args, cfg)
    layout, feats = _scatter_features(ds, cfg)
    manifest = {"config": cfg.describe(), "provenance": ds.provenance}
    data_io.save_features(args.out, layout, feats.astype(np.float32), ds.labels, manifest)
    print(
        f"scattered {len(ds)} images: {len(layout.paths)} paths, "
        f"{layout.n_features} features each -> {args.out}"
    )
    return 0


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    if cfg.beta is None:
        raise CliError("config", "train requires --beta (or beta= in the config file)")
    layout, feats, labels, manifest = data_io.load_features(args.features)
    clf = clf_mod.fit_classifier(
        feats.astype(np.float64),
        labels,
        n_components=cfg.n_components,
        beta=cfg.beta,
        J=layout.J,
        m0=layout.m0,
        n_orientations=layout.n_orientations,
        delta=layout.delta,
    )
    data_io.save_model(
        args.out,
        clf,
        {
            "features_file": str(args.features),
            "features_sha256": data_io.file_sha256(args.features),
            "config": cfg.describe(),
            "features_manifest": manifest,
        },
    )
    ks = ", ".join(f"{m.class_id}:{m.n_components}" for m in clf.models)
    print(f"trained {len(clf.models)} class models (k by class: {ks}) -> {args.out}")
    return 0


def _check_compatible(layout, clf) -> None:
    diffs = data_io.config_mismatch(layout, clf)
    if diffs:
        raise CliError("data", "feature/model configuration mismatch: " + "; ".join(diffs))


def cmd_predict(args) -> int:
    layout, feats, labels, _ = data_io.load_features(args.features)
    clf, _ = data_io.load_model(args.model)
    _check_compatible(layout, clf)
    pred, k_sel, _ = clf_mod.classify_batch(feats.astype(np.float64), clf)
    rows = [
        [i, int(labels[i]), int(pred[i]), int(k_sel[i])] for i in range(len(pred))
    ]
    _write_csv(args.out, ["index", "label", "predicted", "k_selected"], rows)
    err = float((pred != labels).mean()) if len(pred) else 0.0
    print(f"predicted {len(pred)} samples, error {100 * err:.10g}% -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    layout, feats, labels, _ = data_io.load_features(args.features)
    clf, _ = data_io.load_model(args.model)
    _check_compatible(layout, clf)
    result = clf_mod.evaluate(clf, feats.astype(np.float64), labels)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    n = result.confusion.shape[0]
    _write_csv(
        outdir / "confusion.csv",
        ["true\\pred"] + [str(i) for i in range(n)],
        [[i] + [int(x) for x in result.confusion[i]] for i in range(n)],
    )
    _write_json(
        outdir / "summary.json",
        {
            "error_percent": round(result.percent_error, 10),
            "k_bar": round(result.k_bar, 10),
            "n_samples": result.n_samples,
            "beta": clf.beta,
            "J": clf.J,
            "m0": clf.m0,
            "n_orientations": clf.n_orientations,
            "delta": str(clf.delta),
        },
    )
    print(
        f"error {result.percent_error:.10g}% on {result.n_samples} samples, "
        f"mean selected order {result.k_bar:.10g}"
    )
    return 0


def cmd_crossval(args) -> int:
    cfg = _config_from_args(args)
    ds = _load_dataset(args, cfg)
    try:
        j_grid = [int(x) for x in args.j_grid.split(",") if x.strip()]
    except ValueError as exc:
        raise CliError("config", f"bad --j-grid {args.j_grid!r}") from exc
    if not j_grid:
        raise CliError("config", "--j-grid is empty")
    result = clf_mod.cross_validate(
        ds,
        cfg.gabor(),
        j_grid,
        m0=cfg.m0,
        delta=cfg.delta,
        n_components=cfg.n_components,
        n_beta=args.n_beta,
        val_fraction=args.val_fraction,
        seed=cfg.seed,
        jobs=cfg.jobs,
    )
    rows = [[r["J"], r["beta"], r["val_error"]] for r in result.table]
    _write_csv(args.out, ["J", "beta", "val_error"], rows)
    print(
        f"selected J={result.J} beta={result.beta:.10g} "
        f"(validation error {100 * result.val_error:.10g}%)"
    )
    return 0


def cmd_analyze_inout(args) -> int:
    layout, feats, labels, _ = data_io.load_features(args.features)
    clf, _ = data_io.load_model(args.model)
    _check_compatible(layout, clf)
    feats64 = feats.astype(np.float64)
    by_class = {int(c): feats64[labels == c] for c in np.unique(labels)}
    rows = []
    for model in clf.models:
        if model.class_id not in by_class:
            continue
        k_max = min(args.k_max, model.n_components)
        intra, outer = clf_mod.intra_outer_curves(model, by_class, k_max)
        for k in range(k_max + 1):
            rows.append([model.class_id, k, intra[k], outer[k]])
    _write_csv(args.out, ["class_id", "k", "intra", "outer"], rows)
    print(f"wrote projection-error curves for {len(clf.models)} classes -> {args.out}")
    return 0


def cmd_analyze_vardecay(args) -> int:
    cfg = _config_from_args(args)
    if bool(args.texture_dir) == bool(args.white_noise):
        raise CliError("config", "specify exactly one of --texture-dir / --white-noise")
    if args.texture_dir:
        ds = data_io.load_texture_dir(args.texture_dir, crop=args.crop)
        images = ds.images
    else:
        rng = np.random.default_rng(cfg.seed)
        images = rng.standard_normal((args.white_noise, args.size, args.size))
    j_values = list(range(args.j_min, args.j_max + 1))
    if not j_values:
        raise CliError("config", f"empty J range {args.j_min}..{args.j_max}")
    sigma2 = clf_mod.variance_decay(
        images, cfg.gabor(), j_values, m0=cfg.m0, delta=cfg.delta, jobs=cfg.jobs
    )
    _write_csv(args.out, ["J", "sigma2"], [[j, s] for j, s in zip(j_values, sigma2)])
    print("variance by J: " + ", ".join(f"{j}:{s:.6g}" for j, s in zip(j_values, sigma2)))
    return 0


def cmd_analyze_layers(args) -> int:
    layout, feats, _, _ = data_io.load_features(args.features)
    sums = np.zeros(layout.m0 + 1)
    feats64 = feats.astype(np.float64)
    for row in feats64:
        v = scattering.ScatteringVector(layout=layout, data=row)
        sums += scattering.layer_energy(v)
    means = sums / max(1, feats64.shape[0])
    total = means.sum()
    rows = [
        [m, means[m], means[m] / total if total > 0 else 0.0]
        for m in range(layout.m0 + 1)
    ]
    _write_csv(args.out, ["order", "mean_energy", "fraction"], rows)
    print(
        "mean layer energy fractions: "
        + ", ".join(f"m={m}: {r[2]:.6g}" for m, r in enumerate(rows))
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavescat",
        description="Gabor scattering features and the affine-space classifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filters", help="dump the filter bank as binary grids")
    _add_transform_flags(p)
    p.add_argument("--size", default="32", help="grid size, N or HxW")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filters)

    p = sub.add_parser("scatter", help="compute scattering features for a dataset")
    _add_transform_flags(p)
    _add_dataset_flags(p)
    p.add_argument("--out", required=True, help="output .sct file")
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("train", help="fit per-class affine models from features")
    _add_transform_flags(p)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="output .scm file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("crossval", help="select J and beta on a held-out split")
    _add_transform_flags(p)
    _add_dataset_flags(p)
    p.add_argument("--j-grid", required=True, help="comma-separated J values")
    p.add_argument("--n-beta", type=int, default=30)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--out", required=True, help="output CSV of (J, beta, error)")
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("predict", help="label feature vectors with a trained model")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="output CSV of per-sample predictions")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="confusion matrix and error on features")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="analysis reports")
    asub = p.add_subparsers(dest="analysis", required=True)

    q = asub.add_parser("inout", help="intra/outer projection-error curves")
    q.add_argument("--features", required=True)
    q.add_argument("--model", required=True)
    q.add_argument("--k-max", type=int, default=40)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_analyze_inout)

    q = asub.add_parser("vardecay", help="feature variance versus averaging scale")
    _add_transform_flags(q)
    q.add_argument("--texture-dir")
    q.add_argument("--crop", type=int, default=128)
    q.add_argument("--white-noise", type=int, help="number of white-noise images")
    q.add_argument("--size", type=int, default=64, help="white-noise image size")
    q.add_argument("--j-min", type=int, default=1)
    q.add_argument("--j-max", type=int, default=5)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_analyze_vardecay)

    q = asub.add_parser("layers", help="mean energy by scattering order")
    q.add_argument("--features", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_analyze_layers)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error [{exc.category}]: {exc}", file=sys.stderr)
        return EXIT_CODES[exc.category]
    except (data_io.FormatError, data_io.DataError) as exc:
        print(f"error [data]: {exc}", file=sys.stderr)
        return EXIT_CODES["data"]
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return EXIT_CODES["io"]
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return EXIT_CODES["io"]
    except (np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"error [numeric]: {exc}", file=sys.stderr)
        return EXIT_CODES["numeric"]


if __name__ == "__main__":
    sys.exit(main())
