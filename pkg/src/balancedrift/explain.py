"""Model-agnostic explanations over a fixed background dataset.

``pdp`` averages predictions with one column forced to each grid value.
``ale`` accumulates mean prediction differences across quantile bins and
centers the curve so it averages to zero over the background rows.
``permutation_importance`` reports the AUC lost when a column is shuffled.

Estimators accept any object with ``predict_proba(rows)``; ``response="raw"``
switches to ``raw_score(rows)``, which is only meant for closed-form tests.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data.dataset import Dataset
from .metrics import roc_auc
from .seeding import rng_from

DEFAULT_GRID_K = 101
DEFAULT_ALE_BINS = 20
DEFAULT_VI_REPEATS = 10

# cap on rows per prediction batch
_BATCH_ROWS = 262_144


class ExplainWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Grid:
    variable: str
    points: np.ndarray
    construction: str

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if self.construction == "degenerate":
            if pts.size != 1:
                raise ValueError("a degenerate grid holds exactly one point")
        else:
            if pts.size < 2:
                raise ValueError(f"grid needs k >= 2 points, got {pts.size}")
            if np.any(np.diff(pts) <= 0):
                raise ValueError("grid points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def k(self) -> int:
        return self.points.size

    def same_points(self, other: Grid) -> bool:
        return self.points.shape == other.points.shape and bool(
            np.all(self.points.view(np.uint64) == other.points.view(np.uint64))
        )


@dataclass(frozen=True, eq=False)
class Profile:
    kind: str
    variable: str
    grid: Grid
    values: np.ndarray
    model_id: str = ""
    background_id: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if self.kind not in ("pdp", "ale"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if vals.shape != self.grid.points.shape:
            raise ValueError("profile values must align with the grid")
        if not np.all(np.isfinite(vals)):
            raise ValueError("profile values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class ImportanceVector:
    variables: tuple[str, ...]
    raw: np.ndarray
    base_loss: float
    model_id: str = ""

    @property
    def repeats(self) -> int:
        return self.raw.shape[0]

    @property
    def per_variable(self) -> dict[str, float]:
        means = self.raw.mean(axis=0)
        return {v: float(means[j]) for j, v in enumerate(self.variables)}

    def means(self) -> np.ndarray:
        return self.raw.mean(axis=0)


def _predictor(model, response: str):
    if response == "proba":
        return model.predict_proba
    if response == "raw":
        return model.raw_score
    raise ValueError(f"response must be 'proba' or 'raw', got {response!r}")


def _model_id(model) -> str:
    return str(getattr(model, "model_id", type(model).__name__))


def make_grid(background: Dataset, variable: str, k: int = DEFAULT_GRID_K, construction: str = "uniform") -> Grid:
    """Evaluation points for one variable.

    ``uniform``: ``k`` equally spaced points from the column min to max.
    ``quantile``: empirical quantiles at ``i/(k-1)`` with linear interpolation
    between order statistics, duplicates removed (so fewer than ``k`` points
    may come back).
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    col = background.column(variable)
    lo, hi = float(col.min()), float(col.max())
    if construction == "uniform":
        if lo == hi:
            raise ValueError(f"variable {variable!r} is constant; a uniform grid is undefined")
        return Grid(variable, np.linspace(lo, hi, k), "uniform")
    if construction == "quantile":
        pts = np.unique(np.quantile(col, np.arange(k) / (k - 1)))
        if pts.size < 2:
            raise ValueError(f"variable {variable!r} is constant; a quantile grid is undefined")
        return Grid(variable, pts, "quantile")
    raise ValueError(f"unknown grid construction {construction!r}")


def _forced_predictions(predict, X: np.ndarray, j: int, values: np.ndarray) -> np.ndarray:
    """Predictions with column ``j`` set to each of ``values``; shape (len(values), n)."""
    n = X.shape[0]
    out = np.empty((values.size, n))
    per_batch = max(1, _BATCH_ROWS // max(n, 1))
    for start in range(0, values.size, per_batch):
        chunk = values[start:start + per_batch]
        block = np.tile(X, (chunk.size, 1))
        block[:, j] = np.repeat(chunk, n)
        out[start:start + chunk.size] = np.asarray(predict(block), dtype=np.float64).reshape(chunk.size, n)
    return out


def pdp(model, background: Dataset, grid: Grid, response: str = "proba") -> Profile:
    predict = _predictor(model, response)
    j = background.column_index(grid.variable)
    preds = _forced_predictions(predict, background.features, j, grid.points)
    # reduce each grid point's 1-D row separately so results match a per-point loop
    values = np.array([np.mean(preds[t]) for t in range(grid.k)])
    return Profile("pdp", grid.variable, grid, values, _model_id(model), background.name)


def ale_bins(column: np.ndarray, n_bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Quantile bin edges and each value's bin index.

    Bin ``b`` covers ``(edges[b], edges[b+1]]``; the first bin also takes the
    column minimum. Duplicate quantiles collapse, leaving fewer bins.
    """
    edges = np.unique(np.quantile(column, np.linspace(0.0, 1.0, n_bins + 1)))
    idx = np.clip(np.searchsorted(edges, column, side="left") - 1, 0, edges.size - 2)
    return edges, idx


def ale(model, background: Dataset, variable: str, n_bins: int = DEFAULT_ALE_BINS, response: str = "proba") -> Profile:
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    predict = _predictor(model, response)
    j = background.column_index(variable)
    X = background.features
    col = X[:, j]
    meta = {"n_bins_requested": n_bins}
    if col.min() == col.max():
        msg = f"variable {variable!r} is constant in the background; ALE is flat zero"
        warnings.warn(msg, ExplainWarning, stacklevel=2)
        meta.update(n_bins=0, warning=msg)
        grid = Grid(variable, np.array([col[0]]), "degenerate")
        return Profile("ale", variable, grid, np.zeros(1), _model_id(model), background.name, meta)

    edges, bin_of = ale_bins(col, n_bins)
    n_eff = edges.size - 1
    meta["n_bins"] = n_eff
    if n_eff < n_bins:
        meta["warning"] = f"{n_bins} quantile bins collapsed to {n_eff} (tied values)"

    hi = X.copy()
    hi[:, j] = edges[bin_of + 1]
    lo = X.copy()
    lo[:, j] = edges[bin_of]
    diffs = np.asarray(predict(hi), dtype=np.float64) - np.asarray(predict(lo), dtype=np.float64)
    counts = np.bincount(bin_of, minlength=n_eff)
    sums = np.bincount(bin_of, weights=diffs, minlength=n_eff)
    local = np.divide(sums, counts, out=np.zeros(n_eff), where=counts > 0)
    uncentered = np.concatenate([[0.0], np.cumsum(local)])
    # shift so the curve, linearly interpolated at every background row, averages to zero
    offset = np.mean(np.interp(col, edges, uncentered))
    values = uncentered - offset
    grid = Grid(variable, edges, "quantile")
    return Profile("ale", variable, grid, values, _model_id(model), background.name, meta)


def interpolate_profile(profile: Profile, x) -> np.ndarray:
    return np.interp(np.asarray(x, dtype=np.float64), profile.grid.points, profile.values)


def _canonical_order(background: Dataset) -> np.ndarray:
    keys = np.column_stack([background.features, background.target]).T
    return np.lexsort(keys[::-1])


def permutation_importance(
    model,
    background: Dataset,
    B: int = DEFAULT_VI_REPEATS,
    seed: int = 0,
    response: str = "proba",
) -> ImportanceVector:
    """Mean increase of ``1 - AUC`` over ``B`` shuffles of each column.

    Rows are put into a canonical (lexicographic) order first, so reordering
    the background rows does not change the result.
    """
    if B < 1:
        raise ValueError(f"B must be >= 1, got {B}")
    order = _canonical_order(background)
    X = background.features[order]
    y = background.target[order]
    if y.min() == y.max():
        raise ValueError("permutation importance needs both classes in the background")
    predict = _predictor(model, response)
    n, m = X.shape
    base_loss = 1.0 - roc_auc(y, predict(X))
    rng = rng_from(seed)
    raw = np.empty((B, m))
    for b in range(B):
        perms = [rng.permutation(n) for _ in range(m)]
        block = np.tile(X, (m, 1))
        for j in range(m):
            block[j * n:(j + 1) * n, j] = X[perms[j], j]
        preds = np.asarray(predict(block), dtype=np.float64).reshape(m, n)
        for j in range(m):
            raw[b, j] = (1.0 - roc_auc(y, preds[j])) - base_loss
    return ImportanceVector(background.feature_names, raw, base_loss, _model_id(model))


def explain_all(model, background: Dataset, grids: dict[str, Grid], n_bins: int = DEFAULT_ALE_BINS):
    """PDP and ALE profiles for every variable, keyed by variable name."""
    pdps = {v: pdp(model, background, grids[v]) for v in background.feature_names if v in grids}
    ales = {v: ale(model, background, v, n_bins) for v in background.feature_names}
    return pdps, ales


def write_profiles_csv(profiles, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "model_id", "variable", "grid_point", "value"])
        for p in profiles:
            for z, v in zip(p.grid.points, p.values):
                w.writerow([p.kind, p.model_id, p.variable, repr(float(z)), repr(float(v))])
    return path


def write_importance_csv(vectors, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model_id", "variable", "repeat", "loss_increase"])
        for vi in vectors:
            for b in range(vi.repeats):
                for j, v in enumerate(vi.variables):
                    w.writerow([vi.model_id, v, b, repr(float(vi.raw[b, j]))])
    return path
