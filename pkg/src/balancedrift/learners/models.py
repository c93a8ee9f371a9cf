from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from ..data.dataset import Dataset
from ..seeding import derive_seed, rng_from
from .logistic import _linear, fit_logistic
from .trees import build_gini_tree, build_newton_tree, predict_ensemble

FAMILIES = ("logistic", "random_forest", "gradient_boosting")

DEFAULT_HYPERPARAMETERS = {
    "logistic": {"l2": 1e-4, "max_iter": 1000, "tol": 1e-6},
    "random_forest": {
        "n_trees": 100,
        "max_depth": None,
        "min_samples_split": 2,
        "max_features": "sqrt",
        "bootstrap": True,
    },
    "gradient_boosting": {
        "n_rounds": 100,
        "max_depth": 3,
        "learning_rate": 0.1,
        "reg_lambda": 1.0,
        "min_samples_split": 2,
    },
}


class TrainingError(ValueError):
    pass


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LearnerSpec:
    family: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown learner family {self.family!r}; expected one of {FAMILIES}")
        defaults = DEFAULT_HYPERPARAMETERS[self.family]
        unknown = set(self.hyperparameters) - set(defaults)
        if unknown:
            raise ValueError(f"unknown hyperparameter(s) for {self.family}: {sorted(unknown)}")
        object.__setattr__(self, "hyperparameters", MappingProxyType({**defaults, **self.hyperparameters}))

    def with_seed(self, seed: int) -> LearnerSpec:
        return LearnerSpec(self.family, dict(self.hyperparameters), seed)

    def to_json(self) -> dict:
        return {"family": self.family, "hyperparameters": dict(self.hyperparameters), "seed": self.seed}


def _sigmoid(s: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * s))


@dataclass(frozen=True, eq=False)
class TrainedModel:
    """A fitted classifier. ``state`` holds the family-specific arrays."""

    spec: LearnerSpec
    feature_names: tuple[str, ...]
    train_summary: dict
    state: dict
    model_id: str

    def _check(self, rows) -> np.ndarray:
        X = np.asarray(rows, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise ValueError(
                f"expected {len(self.feature_names)} columns, got array of shape {np.shape(rows)}"
            )
        return X

    def raw_score(self, rows) -> np.ndarray:
        """Log-odds for logistic/boosting, class-1 vote share for forests."""
        X = self._check(rows)
        st = self.state
        if self.spec.family == "logistic":
            Z = (X - st["mean"]) / st["scale"]
            return _linear(Z, st["coef"], float(st["intercept"][0]))
        trees = (st["offsets"], st["feature"], st["threshold"], st["left"], st["right"], st["value"])
        total = predict_ensemble(np.ascontiguousarray(X), *trees)
        if self.spec.family == "random_forest":
            return total / (len(st["offsets"]) - 1)
        return float(st["init"][0]) + total

    def predict_proba(self, rows) -> np.ndarray:
        s = self.raw_score(rows)
        if self.spec.family == "random_forest":
            return np.clip(s, 0.0, 1.0)
        return _sigmoid(s)

    def predict_label(self, rows, threshold: float = 0.5) -> np.ndarray:
        return predict_label(self, rows, threshold)


def predict_proba(model, rows) -> np.ndarray:
    return model.predict_proba(rows)


def predict_label(model, rows, threshold: float = 0.5) -> np.ndarray:
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    return (model.predict_proba(rows) >= threshold).astype(np.int64)


def _model_id(spec: LearnerSpec, d: Dataset) -> str:
    h = hashlib.sha256(json.dumps(spec.to_json(), sort_keys=True).encode())
    h.update(d.checksum().encode())
    return f"{spec.family}-{h.hexdigest()[:12]}"


def _stack_trees(trees) -> dict:
    sizes = [len(t[0]) for t in trees]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    names = ("feature", "threshold", "left", "right", "value")
    if not trees:
        return {"offsets": offsets, **{k: np.zeros(0, dtype=np.int64 if k in ("feature", "left", "right") else np.float64) for k in names}}
    return {"offsets": offsets, **{k: np.concatenate([t[i] for t in trees]) for i, k in enumerate(names)}}


def _log_loss(y, F) -> float:
    return float(np.mean(np.logaddexp(0.0, F) - y * F))


def train(spec: LearnerSpec, d: Dataset) -> TrainedModel:
    """Fit ``spec`` on ``d``; deterministic given ``spec.seed`` and the data bytes."""
    counts = d.class_counts()
    if counts.min() < 2:
        raise TrainingError(f"need >= 2 rows per class, got class counts {counts.tolist()}")
    hp = spec.hyperparameters
    X, y = d.features, d.target.astype(np.float64)
    summary = {"n_rows": d.n_rows, "class_counts": counts.tolist(), "loss_trace": [], "warnings": []}

    if spec.family == "logistic":
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        w, trace, converged = fit_logistic((X - mean) / scale, y, hp["l2"], hp["max_iter"], hp["tol"])
        if not converged:
            msg = f"logistic regression did not converge in {hp['max_iter']} iterations"
            summary["warnings"].append(msg)
            warnings.warn(msg, ConvergenceWarning, stacklevel=2)
        summary["loss_trace"] = trace
        summary["converged"] = converged
        state = {"mean": mean, "scale": scale, "coef": w[1:].copy(), "intercept": w[:1].copy()}

    elif spec.family == "random_forest":
        m = X.shape[1]
        mf = hp["max_features"]
        max_features = math.ceil(math.sqrt(m)) if mf == "sqrt" else (m if mf is None else int(mf))
        max_depth = -1 if hp["max_depth"] is None else int(hp["max_depth"])
        Xc = np.ascontiguousarray(X)
        trees = []
        for t in range(hp["n_trees"]):
            if hp["bootstrap"]:
                rows = rng_from(derive_seed(spec.seed, "bootstrap", t)).integers(0, d.n_rows, d.n_rows)
            else:
                rows = np.arange(d.n_rows)
            trees.append(
                build_gini_tree(
                    Xc, y, rows.astype(np.int64), max(1, min(max_features, m)),
                    int(hp["min_samples_split"]), max_depth, derive_seed(spec.seed, "splits", t),
                )
            )
        state = _stack_trees(trees)

    else:
        Xc = np.ascontiguousarray(X)
        prevalence = y.mean()
        init = math.log(prevalence / (1.0 - prevalence))
        F = np.full(d.n_rows, init)
        trace = [_log_loss(y, F)]
        lr = float(hp["learning_rate"])
        trees = []
        for _ in range(hp["n_rounds"]):
            p = _sigmoid(F)
            feat, thr, left, right, value = build_newton_tree(
                Xc, p - y, p * (1.0 - p), int(hp["max_depth"]), float(hp["reg_lambda"]),
                int(hp["min_samples_split"]),
            )
            value = value * lr
            tree = (feat, thr, left, right, value)
            trees.append(tree)
            one = _stack_trees([tree])
            F = F + predict_ensemble(Xc, one["offsets"], feat, thr, left, right, value)
            trace.append(_log_loss(y, F))
        summary["loss_trace"] = trace
        state = {**_stack_trees(trees), "init": np.array([init])}

    return TrainedModel(
        spec=spec,
        feature_names=d.feature_names,
        train_summary=summary,
        state=state,
        model_id=_model_id(spec, d),
    )
