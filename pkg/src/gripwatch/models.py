"""Linear classifiers (logistic regression, linear SVM) over feature vectors.

Training is deterministic: zero initialization, full-batch descent, fixed
schedules. Feature columns follow features.FEATURE_NAMES; a boolean mask
selects the active subset (the moving-average column is masked off by
default).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    EmptyDataset,
    InvariantViolation,
    NonFiniteFeature,
    ParseError,
    SingleClassDataset,
    VersionMismatch,
    WrongModelKind,
)
from .features import FEATURE_NAMES, FeatureVector

MODEL_FORMAT = "gripwatch-model"
MODEL_VERSION = 1

# Default mask drops the moving-average column (redundant with fa).
DEFAULT_MASK = (True, True, True, True, False, True)
FULL_MASK = (True,) * 6


def mask_from_names(names) -> tuple:
    unknown = set(names) - set(FEATURE_NAMES)
    if unknown:
        raise InvariantViolation(f"unknown feature names {sorted(unknown)}")
    return tuple(name in set(names) for name in FEATURE_NAMES)


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "means", np.asarray(self.means, dtype=float))
        object.__setattr__(self, "stds", np.asarray(self.stds, dtype=float))
        if np.any(self.stds <= 0):
            raise InvariantViolation("standardizer stds must be positive")

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.means) / self.stds


@dataclass(frozen=True)
class TrainConfig:
    kind: str = "logreg"  # logreg | svm
    l2_lambda: float = 1e-4
    max_iters: int = 500
    tolerance: float = 1e-8
    seed: int = 0
    svm_step: float = 0.1  # base step for the 1/sqrt(t) subgradient schedule
    hyper_grid: tuple | None = None
    cv_folds: int = 5

    def __post_init__(self):
        if self.kind not in ("logreg", "svm"):
            raise InvariantViolation(f"unknown model kind {self.kind!r}")
        if self.l2_lambda < 0 or self.max_iters < 1:
            raise InvariantViolation("l2_lambda must be >= 0 and max_iters >= 1")


@dataclass(frozen=True)
class LinearModel:
    kind: str
    weights: np.ndarray
    bias: float
    standardizer: Standardizer
    feature_mask: tuple
    train_config: TrainConfig

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if len(self.weights) != sum(self.feature_mask):
            raise InvariantViolation(
                f"{len(self.weights)} weights for {sum(self.feature_mask)} unmasked features"
            )


def _as_matrix(features) -> tuple[np.ndarray, np.ndarray | None]:
    if isinstance(features, np.ndarray):
        return features, None
    features = list(features)
    if not features:
        return np.empty((0, len(FEATURE_NAMES))), None
    X = np.stack([phi.as_array() for phi in features])
    labels = [phi.label for phi in features]
    y = None if any(l is None for l in labels) else np.asarray(labels, dtype=int)
    return X, y


def fit_standardizer(features, mask=FULL_MASK) -> Standardizer:
    """Per-column mean and population std over the masked feature matrix."""
    X, _ = _as_matrix(features) if not isinstance(features, np.ndarray) else (features, None)
    if len(X) == 0:
        raise EmptyDataset("cannot standardize an empty feature set")
    cols = X[:, np.asarray(mask, dtype=bool)] if X.shape[1] == len(mask) else X
    means = cols.mean(axis=0)
    stds = cols.std(axis=0)
    zero = stds == 0
    if np.any(zero):
        warnings.warn(
            f"zero-variance feature columns {np.flatnonzero(zero).tolist()}; std clamped to 1",
            stacklevel=2,
        )
        stds = np.where(zero, 1.0, stds)
    return Standardizer(means, stds)


def logreg_loss_grad(theta: np.ndarray, X: np.ndarray, y: np.ndarray, l2_lambda: float):
    """Mean negative log-likelihood plus L2 on the weights (bias excluded).

    ``theta`` packs [w..., b]. Returns (loss, grad) with grad matching theta.
    """
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2_lambda * w @ w)
    p = _sigmoid(z)
    residual = (p - y) / len(y)
    grad = np.concatenate([X.T @ residual + l2_lambda * w, [residual.sum()]])
    return loss, grad


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _train_logreg(X, y, config: TrainConfig):
    theta = np.zeros(X.shape[1] + 1)
    loss, grad = logreg_loss_grad(theta, X, y, config.l2_lambda)
    for _ in range(config.max_iters):
        gnorm2 = grad @ grad
        if np.sqrt(gnorm2) <= config.tolerance:
            break
        step = 1.0
        for _ in range(60):  # Armijo backtracking
            candidate = theta - step * grad
            new_loss, new_grad = logreg_loss_grad(candidate, X, y, config.l2_lambda)
            if new_loss <= loss - 0.5 * step * gnorm2:
                break
            step *= 0.5
        theta, loss, grad = candidate, new_loss, new_grad
    return theta[:-1], float(theta[-1])


def _train_svm(X, y, config: TrainConfig):
    """Subgradient descent on mean hinge loss with averaged second-half iterates."""
    s = np.where(y == 1, 1.0, -1.0)
    w = np.zeros(X.shape[1])
    b = 0.0
    half = config.max_iters // 2
    w_sum = np.zeros_like(w)
    b_sum = 0.0
    averaged = 0
    for t in range(config.max_iters):
        margins = s * (X @ w + b)
        violating = margins < 1.0
        if np.any(violating):
            coeff = -(s[violating] / len(s))
            grad_w = X[violating].T @ coeff + config.l2_lambda * w
            grad_b = coeff.sum()
        else:
            grad_w = config.l2_lambda * w
            grad_b = 0.0
        step = config.svm_step / np.sqrt(t + 1.0)
        w = w - step * grad_w
        b = b - step * grad_b
        if t >= half:
            w_sum += w
            b_sum += b
            averaged += 1
    return w_sum / averaged, float(b_sum / averaged)


def train(features, config: TrainConfig, mask=DEFAULT_MASK) -> LinearModel:
    """Fit a standardizer and a linear model on labeled features.

    ``features`` is either a list of labeled FeatureVector or a raw (X, y)
    pair with X in the 6-column layout.
    """
    if isinstance(features, tuple):
        X_full, y = features
        X_full = np.asarray(X_full, dtype=float)
        y = np.asarray(y, dtype=int)
    else:
        X_full, y = _as_matrix(features)
        if y is None:
            raise EmptyDataset("unlabeled features")
    if len(X_full) == 0:
        raise EmptyDataset("no training examples")
    if not np.all(np.isfinite(X_full)):
        raise NonFiniteFeature("training features contain NaN/Inf")
    classes = np.unique(y)
    if len(classes) < 2:
        raise SingleClassDataset(f"need both classes, got only {classes.tolist()}")
    mask = tuple(bool(m) for m in mask)
    if sum(mask) == 0:
        raise InvariantViolation("mask keeps no features")

    if config.hyper_grid:
        config = replace(
            config, l2_lambda=_grid_search(X_full, y, config, mask), hyper_grid=None
        )

    standardizer = fit_standardizer(X_full, mask)
    Xs = standardizer.transform(X_full[:, np.asarray(mask, dtype=bool)])
    if config.kind == "logreg":
        w, b = _train_logreg(Xs, y, config)
    else:
        w, b = _train_svm(Xs, y, config)
    return LinearModel(config.kind, w, b, standardizer, mask, config)


def _grid_search(X, y, config: TrainConfig, mask) -> float:
    """Deterministic k-fold CV over the lambda grid; ties go to the smaller lambda."""
    order = np.random.default_rng(config.seed).permutation(len(y))
    folds = np.array_split(order, config.cv_folds)
    best_lambda, best_acc = None, -1.0
    for lam in sorted(config.hyper_grid):
        accs = []
        for k in range(config.cv_folds):
            val_idx = folds[k]
            train_idx = np.concatenate([folds[j] for j in range(config.cv_folds) if j != k])
            if len(np.unique(y[train_idx])) < 2 or len(val_idx) == 0:
                continue
            fold_cfg = replace(config, l2_lambda=lam, hyper_grid=None)
            model = train((X[train_idx], y[train_idx]), fold_cfg, mask)
            preds = predict_label_batch(model, X[val_idx])
            accs.append(float(np.mean(preds == y[val_idx])))
        mean_acc = float(np.mean(accs)) if accs else -1.0
        if mean_acc > best_acc:
            best_lambda, best_acc = lam, mean_acc
    return best_lambda if best_lambda is not None else config.l2_lambda


def _feature_row(model: LinearModel, phi) -> np.ndarray:
    row = phi.as_array() if isinstance(phi, FeatureVector) else np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(row)):
        raise NonFiniteFeature("feature vector contains NaN/Inf")
    return row[np.asarray(model.feature_mask, dtype=bool)]


def predict_score(model: LinearModel, phi) -> float:
    """Linear decision value w.standardize(phi) + b."""
    z = model.standardizer.transform(_feature_row(model, phi))
    return float(model.weights @ z + model.bias)


def predict_proba(model: LinearModel, phi) -> float:
    """Probability of the stable class; logistic regression only."""
    if model.kind != "logreg":
        raise WrongModelKind(f"predict_proba needs a logreg model, got {model.kind!r}")
    return float(_sigmoid(predict_score(model, phi)))


def predict_label(model: LinearModel, phi) -> int:
    """1 = stable, 0 = unstable; a tie (score exactly 0) predicts unstable."""
    return int(predict_score(model, phi) > 0.0)


def predict_score_batch(model: LinearModel, X: np.ndarray) -> np.ndarray:
    cols = np.asarray(X, dtype=float)[:, np.asarray(model.feature_mask, dtype=bool)]
    if not np.all(np.isfinite(cols)):
        raise NonFiniteFeature("feature matrix contains NaN/Inf")
    return model.standardizer.transform(cols) @ model.weights + model.bias


def predict_label_batch(model: LinearModel, X: np.ndarray) -> np.ndarray:
    return (predict_score_batch(model, X) > 0.0).astype(int)


# --- persistence ---


def save_model(model: LinearModel, path) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "mask": list(model.feature_mask),
        "means": model.standardizer.means.tolist(),
        "stds": model.standardizer.stds.tolist(),
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "train_config": {
            "kind": model.train_config.kind,
            "l2_lambda": model.train_config.l2_lambda,
            "max_iters": model.train_config.max_iters,
            "tolerance": model.train_config.tolerance,
            "seed": model.train_config.seed,
            "svm_step": model.train_config.svm_step,
            "hyper_grid": list(model.train_config.hyper_grid)
            if model.train_config.hyper_grid
            else None,
            "cv_folds": model.train_config.cv_folds,
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_model(path) -> LinearModel:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except (json.JSONDecodeError, OSError) as exc:
        raise ParseError(f"cannot read model file: {exc}") from exc
    if payload.get("format") != MODEL_FORMAT:
        raise ParseError(f"not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise VersionMismatch(f"unsupported model version {payload.get('version')!r}")
    try:
        tc = dict(payload["train_config"])
        if tc.get("hyper_grid"):
            tc["hyper_grid"] = tuple(tc["hyper_grid"])
        config = TrainConfig(**tc)
        model = LinearModel(
            kind=payload["kind"],
            weights=np.array(payload["weights"], dtype=float),
            bias=float(payload["bias"]),
            standardizer=Standardizer(
                np.array(payload["means"], dtype=float),
                np.array(payload["stds"], dtype=float),
            ),
            feature_mask=tuple(bool(m) for m in payload["mask"]),
            train_config=config,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed model file: {exc}") from exc
    if len(model.feature_mask) != len(FEATURE_NAMES):
        raise InvariantViolation(
            f"mask must have {len(FEATURE_NAMES)} entries, got {len(model.feature_mask)}"
        )
    return model
