"""Affine-subspace models per class and the penalized projection classifier.

Each class is summarized by its feature mean plus the leading principal
directions of its training features (thin SVD of the centered data matrix;
covariance uses the 1/T convention).  A test vector is scored against class
``i`` by the squared distance to the affine space spanned by the first ``k``
directions, plus a penalty ``beta * k``; the classifier minimizes that loss
jointly over ``k`` and over classes.  Letting ``k`` vary at test time keeps
a single trained model usable across a wide range of model complexities,
with ``beta`` trading variance for bias.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "AffineClassModel",
    "TrainedClassifier",
    "ClassificationResult",
    "EvaluationResult",
    "CrossValResult",
    "fit_class_model",
    "fit_classifier",
    "projection_error",
    "classify",
    "classify_batch",
    "evaluate",
    "default_beta_grid",
    "cross_validate",
    "intra_outer_curves",
    "variance_decay",
]


@dataclass(frozen=True)
class AffineClassModel:
    """Mean and leading principal directions of one class's features.

    ``eigvecs`` rows are orthonormal, ordered by decreasing ``eigvals``
    (training covariance eigenvalues).  The sign of each row is fixed by
    making its largest-magnitude entry positive, so refits are bitwise
    reproducible.
    """

    class_id: int
    mean: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    n_train: int

    @property
    def n_components(self) -> int:
        return int(self.eigvals.shape[0])


def _canonical_signs(vecs: np.ndarray) -> np.ndarray:
    if vecs.shape[0] == 0:
        return vecs
    idx = np.argmax(np.abs(vecs), axis=1)
    signs = np.sign(vecs[np.arange(vecs.shape[0]), idx])
    signs[signs == 0.0] = 1.0
    return vecs * signs[:, None]


def fit_class_model(features: np.ndarray, n_components: int, class_id: int = 0) -> AffineClassModel:
    """Fit one class model from a ``(T, D)`` feature matrix.

    Requires ``T >= 2``.  At most ``min(n_components, T - 1, D)`` directions
    are kept (the centered matrix has rank at most ``T - 1``); requesting
    more emits a warning and truncates.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"features must be (T, D), got shape {X.shape}")
    T, D = X.shape
    if T < 2:
        raise ValueError(f"need at least 2 training vectors, got {T}")
    if n_components < 0:
        raise ValueError(f"n_components must be >= 0, got {n_components}")
    mean = X.mean(axis=0)
    centered = X - mean
    k_eff = min(n_components, T - 1, D)
    if k_eff < n_components:
        warnings.warn(
            f"class {class_id}: {n_components} components requested but only "
            f"{k_eff} supported by {T} samples in dimension {D}",
            stacklevel=2,
        )
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    eigvals = (svals[:k_eff] ** 2) / T
    eigvecs = _canonical_signs(np.ascontiguousarray(vt[:k_eff]))
    return AffineClassModel(
        class_id=class_id,
        mean=mean,
        eigvals=eigvals,
        eigvecs=eigvecs,
        n_train=T,
    )


def _mean_only_model(features: np.ndarray, class_id: int) -> AffineClassModel:
    X = np.asarray(features, dtype=np.float64)
    return AffineClassModel(
        class_id=class_id,
        mean=X.mean(axis=0),
        eigvals=np.zeros(0),
        eigvecs=np.zeros((0, X.shape[1])),
        n_train=X.shape[0],
    )


def error_curves(X: np.ndarray, model: AffineClassModel) -> np.ndarray:
    """Squared distances to the class's affine spaces of every order.

    Returns ``(n, K+1)``: column ``k`` is the squared residual after
    projecting onto the span of the first ``k`` directions (column 0 is the
    plain squared distance to the mean).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    d = X - model.mean
    total = np.einsum("nd,nd->n", d, d)
    if model.n_components == 0:
        return total[:, None]
    coef = d @ model.eigvecs.T
    drop = np.cumsum(coef**2, axis=1)
    curves = np.empty((X.shape[0], model.n_components + 1))
    curves[:, 0] = total
    curves[:, 1:] = total[:, None] - drop
    return np.maximum(curves, 0.0)


def projection_error(v: np.ndarray, model: AffineClassModel, k: int) -> float:
    """Squared distance from ``v`` to the order-``k`` affine model."""
    if not 0 <= k <= model.n_components:
        raise ValueError(
            f"k must be in [0, {model.n_components}], got {k}"
        )
    return float(error_curves(v[None], model)[0, k])


@dataclass(frozen=True)
class TrainedClassifier:
    """All class models plus the complexity penalty and config echo."""

    models: tuple[AffineClassModel, ...]
    beta: float
    n_components: int
    J: int = 0
    m0: int = 0
    n_orientations: int = 0
    delta: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        if not self.models:
            raise ValueError("classifier needs at least one class model")
        ids = [m.class_id for m in self.models]
        if sorted(ids) != ids or len(set(ids)) != len(ids):
            raise ValueError("class models must be sorted by distinct class_id")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")

    @property
    def class_ids(self) -> tuple[int, ...]:
        return tuple(m.class_id for m in self.models)

    @property
    def n_features(self) -> int:
        return int(self.models[0].mean.shape[0])


def fit_classifier(
    features: np.ndarray,
    labels: np.ndarray,
    n_components: int = 200,
    beta: float = 0.0,
    *,
    J: int = 0,
    m0: int = 0,
    n_orientations: int = 0,
    delta: Fraction = Fraction(1),
) -> TrainedClassifier:
    """Fit one affine model per label present in the training set.

    A label with a single sample gets a mean-only model (no directions);
    anything else goes through :func:`fit_class_model` with the shared
    component budget.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(
            f"features {X.shape} and labels {y.shape} do not line up"
        )
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    models = []
    for cid in np.unique(y):
        rows = X[y == cid]
        if rows.shape[0] == 1:
            models.append(_mean_only_model(rows, int(cid)))
        else:
            models.append(fit_class_model(rows, n_components, int(cid)))
    return TrainedClassifier(
        models=tuple(models),
        beta=float(beta),
        n_components=n_components,
        J=J,
        m0=m0,
        n_orientations=n_orientations,
        delta=delta,
    )


@dataclass(frozen=True)
class ClassificationResult:
    label: int
    k_selected: int
    losses: np.ndarray
    k_by_class: np.ndarray


def _batch_losses(
    X: np.ndarray, clf: TrainedClassifier
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class penalized losses and minimizing orders for each row."""
    n = X.shape[0]
    n_cls = len(clf.models)
    losses = np.empty((n, n_cls))
    k_best = np.empty((n, n_cls), dtype=np.int64)
    for col, model in enumerate(clf.models):
        curves = error_curves(X, model)
        penal = curves + clf.beta * np.arange(curves.shape[1])
        k = np.argmin(penal, axis=1)
        k_best[:, col] = k
        losses[:, col] = penal[np.arange(n), k]
    return losses, k_best


def classify_batch(
    X: np.ndarray, clf: TrainedClassifier
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Labels, selected orders, and loss matrix for a feature matrix.

    Ties in the class loss go to the earliest class in the model list;
    ties in ``k`` go to the smallest order.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != clf.n_features:
        raise ValueError(
            f"feature dimension {X.shape[1]} does not match classifier "
            f"({clf.n_features})"
        )
    losses, k_best = _batch_losses(X, clf)
    winner_col = np.argmin(losses, axis=1)
    ids = np.asarray(clf.class_ids)
    labels = ids[winner_col]
    k_sel = k_best[np.arange(X.shape[0]), winner_col]
    return labels, k_sel, losses


def classify(v: np.ndarray, clf: TrainedClassifier) -> ClassificationResult:
    """Classify one feature vector; see :func:`classify_batch`."""
    X = np.atleast_2d(np.asarray(v, dtype=np.float64))
    if X.shape[1] != clf.n_features:
        raise ValueError(
            f"feature dimension {X.shape[1]} does not match classifier "
            f"({clf.n_features})"
        )
    losses, k_best = _batch_losses(X, clf)
    col = int(np.argmin(losses[0]))
    return ClassificationResult(
        label=int(clf.class_ids[col]),
        k_selected=int(k_best[0, col]),
        losses=losses[0],
        k_by_class=k_best[0],
    )


@dataclass(frozen=True)
class EvaluationResult:
    error_rate: float
    confusion: np.ndarray
    k_bar: float
    n_samples: int

    @property
    def percent_error(self) -> float:
        return 100.0 * self.error_rate


def evaluate(clf: TrainedClassifier, X: np.ndarray, y: np.ndarray) -> EvaluationResult:
    """Error rate, confusion matrix, and mean selected order on a test set."""
    y = np.asarray(y)
    labels, k_sel, _ = classify_batch(X, clf)
    if y.shape != labels.shape:
        raise ValueError(f"labels shape {y.shape} does not match {labels.shape}")
    n_cls = int(max(int(y.max()), int(labels.max()))) + 1 if y.size else 0
    confusion = np.zeros((n_cls, n_cls), dtype=np.int64)
    for t, p in zip(y, labels):
        confusion[int(t), int(p)] += 1
    errors = int((labels != y).sum())
    return EvaluationResult(
        error_rate=errors / y.size if y.size else 0.0,
        confusion=confusion,
        k_bar=float(k_sel.mean()) if y.size else 0.0,
        n_samples=int(y.size),
    )


def default_beta_grid(
    clf_models: Sequence[AffineClassModel],
    features: np.ndarray,
    labels: np.ndarray,
    n_beta: int = 30,
) -> np.ndarray:
    """Log-spaced penalty grid spanning the observed first-direction energies.

    Pools, over all training samples, the squared coefficient of the
    centered sample on its own class's leading direction, then spans the
    1st-to-99th percentile range with ``n_beta`` log-spaced points.  That
    range brackets the regime where the penalty meaningfully competes with
    one captured variance direction.
    """
    y = np.asarray(labels)
    sq: list[np.ndarray] = []
    for model in clf_models:
        if model.n_components == 0:
            continue
        rows = np.asarray(features, dtype=np.float64)[y == model.class_id]
        if rows.size == 0:
            continue
        coef = (rows - model.mean) @ model.eigvecs[0]
        sq.append(coef**2)
    if not sq:
        return np.geomspace(1e-6, 1.0, n_beta)
    pooled = np.concatenate(sq)
    hi = float(np.quantile(pooled, 0.99))
    lo = float(np.quantile(pooled, 0.01))
    if hi <= 0.0:
        return np.geomspace(1e-6, 1.0, n_beta)
    lo = max(lo, hi * 1e-9)
    return np.geomspace(lo, hi, n_beta)


@dataclass(frozen=True)
class CrossValResult:
    J: int
    beta: float
    val_error: float
    table: tuple[dict, ...]  # one row per (J, beta) pair tried


def _stratified_split(
    labels: np.ndarray, val_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    train_idx: list[np.ndarray] = []
    val_idx: list[np.ndarray] = []
    for cid in np.unique(labels):
        idx = np.flatnonzero(labels == cid)
        perm = idx[rng.permutation(idx.size)]
        n_val = int(round(val_fraction * idx.size))
        n_val = min(max(n_val, 1), idx.size - 1) if idx.size > 1 else 0
        val_idx.append(perm[:n_val])
        train_idx.append(perm[n_val:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(val_idx))


def cross_validate(
    dataset,
    params_template,
    J_grid: Iterable[int],
    *,
    m0: int = 2,
    delta: Fraction = Fraction(1, 2),
    n_components: int = 200,
    beta_grid: np.ndarray | None = None,
    n_beta: int = 30,
    val_fraction: float = 0.2,
    seed: int = 0,
    jobs: int = 1,
) -> CrossValResult:
    """Select ``(J, beta)`` on one stratified held-out split.

    ``dataset`` provides ``.images`` and ``.labels``.  Features are computed
    once per candidate ``J``; every ``beta`` then reuses the per-class error
    curves, so the sweep costs one transform pass per scale.  Ties are
    broken toward smaller ``J``, then larger ``beta`` (cheaper features and
    stronger regularization win).
    """
    from dataclasses import replace as dc_replace

    from .filterbank import build_bank
    from .scattering import scatter_dataset

    images = np.asarray(dataset.images, dtype=np.float64)
    labels = np.asarray(dataset.labels)
    if not 0.0 < val_fraction <= 0.5:
        raise ValueError(f"val_fraction must be in (0, 0.5], got {val_fraction}")
    train_idx, val_idx = _stratified_split(labels, val_fraction, seed)
    if val_idx.size == 0:
        raise ValueError("validation split is empty; need classes with >= 2 samples")
    rows: list[dict] = []
    best: tuple[float, int, float] | None = None  # (error, J, beta)
    for J in sorted(J_grid):
        params = dc_replace(params_template, J=J)
        bank = build_bank(params, images.shape[1:])
        _, feats = scatter_dataset(images, bank, m0=m0, delta=delta, jobs=jobs)
        clf0 = fit_classifier(
            feats[train_idx],
            labels[train_idx],
            n_components=n_components,
            beta=0.0,
            J=J,
            m0=m0,
            n_orientations=params.n_orientations,
            delta=delta,
        )
        grid = (
            np.asarray(beta_grid, dtype=np.float64)
            if beta_grid is not None
            else default_beta_grid(clf0.models, feats[train_idx], labels[train_idx], n_beta)
        )
        curves = [error_curves(feats[val_idx], m) for m in clf0.models]
        ids = np.asarray(clf0.class_ids)
        y_val = labels[val_idx]
        for beta in sorted(grid, reverse=True):
            losses = np.stack(
                [
                    np.min(c + beta * np.arange(c.shape[1]), axis=1)
                    for c in curves
                ],
                axis=1,
            )
            pred = ids[np.argmin(losses, axis=1)]
            err = float((pred != y_val).mean())
            rows.append({"J": J, "beta": float(beta), "val_error": err})
            if best is None or err < best[0]:
                best = (err, J, float(beta))
    assert best is not None
    return CrossValResult(J=best[1], beta=best[2], val_error=best[0], table=tuple(rows))


def intra_outer_curves(
    model: AffineClassModel,
    features_by_class: Mapping[int, np.ndarray],
    k_max: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized projection-error curves inside and outside one class.

    Entry ``k`` of the first curve is ``E||x - P_k x||^2 / E||x||^2`` over
    the model's own class samples, where ``P_k`` projects on the order-``k``
    affine space; the second curve pools every other class.  A model that
    captures its class's variability while excluding impostors shows the
    first curve falling much faster than the second.
    """
    if not 0 <= k_max <= model.n_components:
        raise ValueError(f"k_max must be in [0, {model.n_components}], got {k_max}")
    own = np.asarray(features_by_class[model.class_id], dtype=np.float64)
    others_list = [
        np.asarray(v, dtype=np.float64)
        for cid, v in sorted(features_by_class.items())
        if cid != model.class_id
    ]
    if own.size == 0 or not others_list:
        raise ValueError("need samples both inside and outside the model's class")
    others = np.vstack(others_list)

    def normalized(rows: np.ndarray) -> np.ndarray:
        curves = error_curves(rows, model)[:, : k_max + 1]
        return curves.mean(axis=0) / np.einsum("nd,nd->n", rows, rows).mean()

    return normalized(own), normalized(others)


def variance_decay(
    images: np.ndarray,
    params_template,
    J_values: Iterable[int],
    *,
    m0: int = 2,
    delta: Fraction = Fraction(1, 2),
    jobs: int = 1,
) -> np.ndarray:
    """Total per-path variance of the transform at each averaging scale.

    For every ``J``, computes the features of all images and sums, over
    paths, the variance of that path's coefficients across samples and
    positions.  For a stationary ergodic source this decays as ``J`` grows,
    since longer averaging shrinks the fluctuation of every coefficient.
    """
    from dataclasses import replace as dc_replace

    from .filterbank import build_bank
    from .scattering import scatter_dataset

    images = np.asarray(images, dtype=np.float64)
    out = []
    for J in J_values:
        params = dc_replace(params_template, J=J)
        bank = build_bank(params, images.shape[1:])
        layout, feats = scatter_dataset(images, bank, m0=m0, delta=delta, jobs=jobs)
        total = 0.0
        for p in layout.paths:
            off, length = layout.index[p]
            block = feats[:, off : off + length]
            total += float(block.var())
        out.append(total)
    return np.asarray(out)
