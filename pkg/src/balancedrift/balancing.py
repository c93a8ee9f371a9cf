"""Resampling methods that equalize class counts before training.

Undersampling: random, NearMiss-1. Oversampling: random, SMOTE,
Borderline-SMOTE (variant 1). Hybrid: SMOTE followed by Tomek-link removal.

All methods act on whichever class is the minority in the input (an exact
tie designates class 1) and share one brute-force Euclidean k-NN routine whose
ties resolve to the lower row index.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .data.dataset import Dataset, minority_class
from .seeding import rng_from

METHODS = ("random_under", "near_miss", "random_over", "smote", "borderline_smote", "smote_tomek")

_CHUNK = 512


class BalancingError(ValueError):
    """A method's precondition does not hold for the given data."""


class BalancingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class BalancerSpec:
    method: str
    k_neighbors: int = 5
    m_neighbors: int = 10
    near_miss_k: int = 3
    seed: int = 0
    standardize: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown balancing method {self.method!r}; expected one of {METHODS}")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.near_miss_k < 1:
            raise ValueError("near_miss_k must be >= 1")
        if self.method == "borderline_smote" and self.m_neighbors < self.k_neighbors:
            raise ValueError("m_neighbors must be >= k_neighbors for borderline_smote")


@dataclass(frozen=True, eq=False)
class BalancedDataset:
    """Resampled data plus per-row provenance.

    ``row_origin[i]`` is the input row that output row ``i`` copies, or -1 for
    a synthesized row; ``parents`` holds (base, neighbor) input indices and
    ``gaps`` the interpolation weights for synthesized rows, in output order.
    """

    data: Dataset
    origin: str
    spec: BalancerSpec
    synthetic_mask: np.ndarray
    row_origin: np.ndarray
    parents: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))
    gaps: np.ndarray = field(default_factory=lambda: np.empty(0))
    links_removed: int = 0
    warnings: tuple[str, ...] = ()


# --------------------------------------------------------------------------
# nearest neighbours


def _sq_distances(queries: np.ndarray, pool: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distances, accumulated column by column."""
    out = np.zeros((queries.shape[0], pool.shape[0]))
    for j in range(pool.shape[1]):
        diff = queries[:, j][:, None] - pool[:, j][None, :]
        out += diff * diff
    return out


def _smallest_k(d2: np.ndarray, k: int) -> np.ndarray:
    # argmin and stable argsort both return the lowest index among ties
    if k > 16:
        return np.argsort(d2, axis=1, kind="stable")[:, :k]
    work = d2.copy() if k > 1 else d2
    out = np.empty((d2.shape[0], k), dtype=np.int64)
    rows = np.arange(d2.shape[0])
    for t in range(k):
        out[:, t] = np.argmin(work, axis=1)
        if t + 1 < k:
            work[rows, out[:, t]] = np.inf
    return out


def knn_indices(queries, pool, k: int, exclude=None) -> tuple[np.ndarray, np.ndarray]:
    """k nearest pool rows per query, ascending distance, ties to lower index.

    ``exclude`` optionally gives, per query, a pool index to skip (self match).
    Returns ``(indices, distances)`` each of shape ``(n_queries, k)``.
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    pool = np.asarray(pool, dtype=np.float64)
    available = pool.shape[0] - (1 if exclude is not None else 0)
    if k > available:
        raise ValueError(f"k={k} exceeds the {available} available pool rows")
    idx = np.empty((queries.shape[0], k), dtype=np.int64)
    dist = np.empty((queries.shape[0], k))
    for start in range(0, queries.shape[0], _CHUNK):
        stop = min(start + _CHUNK, queries.shape[0])
        d2 = _sq_distances(queries[start:stop], pool)
        if exclude is not None:
            d2[np.arange(stop - start), np.asarray(exclude)[start:stop]] = np.inf
        nn = _smallest_k(d2, k)
        idx[start:stop] = nn
        dist[start:stop] = np.sqrt(np.take_along_axis(d2, nn, axis=1))
    return idx, dist


def knn(query, pool, k: int, exclude_self: bool = False, self_index: int | None = None):
    """Single-query k-NN returning a list of ``(row index, distance)``.

    With ``exclude_self`` the pool row ``self_index`` (or, when omitted, the
    first pool row identical to ``query``) is skipped.
    """
    query = np.asarray(query, dtype=np.float64).reshape(1, -1)
    pool = np.asarray(pool, dtype=np.float64)
    if pool.ndim == 1:
        pool = pool[:, None]
    exclude = None
    if exclude_self:
        if self_index is None:
            hits = np.flatnonzero(np.all(pool == query, axis=1))
            if hits.size == 0:
                raise ValueError("exclude_self requested but query is not in the pool")
            self_index = int(hits[0])
        exclude = [self_index]
    idx, dist = knn_indices(query, pool, k, exclude)
    return [(int(i), float(d)) for i, d in zip(idx[0], dist[0])]


# --------------------------------------------------------------------------
# helpers


def _scaled(d: Dataset, spec: BalancerSpec) -> np.ndarray:
    X = d.features
    if not spec.standardize:
        return X
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return (X - X.mean(axis=0)) / sd


def _classes(d: Dataset):
    minority = minority_class(d.target)
    min_idx = np.flatnonzero(d.target == minority)
    maj_idx = np.flatnonzero(d.target != minority)
    return minority, min_idx, maj_idx


def _subset(d: Dataset, spec: BalancerSpec, keep: np.ndarray, notes=()) -> BalancedDataset:
    keep = np.sort(keep)
    return BalancedDataset(
        data=d.take(keep, name=f"{d.name}+{spec.method}"),
        origin=d.name,
        spec=spec,
        synthetic_mask=np.zeros(keep.size, dtype=bool),
        row_origin=keep.astype(np.int64),
        warnings=tuple(notes),
    )


def _warn(notes: list, message: str) -> None:
    notes.append(message)
    warnings.warn(message, BalancingWarning, stacklevel=3)


# --------------------------------------------------------------------------
# undersampling


def random_under(d: Dataset, seed: int = 0, spec: BalancerSpec | None = None) -> BalancedDataset:
    spec = spec or BalancerSpec("random_under", seed=seed)
    _, min_idx, maj_idx = _classes(d)
    rng = rng_from(spec.seed)
    chosen = rng.choice(maj_idx, size=min_idx.size, replace=False)
    return _subset(d, spec, np.concatenate([min_idx, chosen]))


def near_miss(d: Dataset, spec: BalancerSpec | None = None) -> BalancedDataset:
    """NearMiss-1: keep the majority rows closest (on average) to their
    ``near_miss_k`` nearest minority rows."""
    spec = spec or BalancerSpec("near_miss")
    _, min_idx, maj_idx = _classes(d)
    if min_idx.size < spec.near_miss_k:
        raise BalancingError(
            f"near_miss needs at least near_miss_k={spec.near_miss_k} minority rows, got {min_idx.size}"
        )
    X = _scaled(d, spec)
    _, dist = knn_indices(X[maj_idx], X[min_idx], spec.near_miss_k)
    mean_dist = dist.mean(axis=1)
    order = np.lexsort((maj_idx, mean_dist))
    return _subset(d, spec, np.concatenate([min_idx, maj_idx[order[: min_idx.size]]]))


# --------------------------------------------------------------------------
# oversampling


def random_over(d: Dataset, seed: int = 0, spec: BalancerSpec | None = None) -> BalancedDataset:
    spec = spec or BalancerSpec("random_over", seed=seed)
    minority, min_idx, maj_idx = _classes(d)
    rng = rng_from(spec.seed)
    extra = rng.choice(min_idx, size=maj_idx.size - min_idx.size, replace=True)
    rows = np.concatenate([np.arange(d.n_rows), extra])
    return BalancedDataset(
        data=d.take(rows, name=f"{d.name}+{spec.method}"),
        origin=d.name,
        spec=spec,
        synthetic_mask=np.zeros(rows.size, dtype=bool),
        row_origin=rows.astype(np.int64),
    )


def _effective_k(n_minority: int, k: int, notes: list) -> int:
    if n_minority < 2:
        raise BalancingError(f"SMOTE needs at least 2 minority rows, got {n_minority}")
    if n_minority - 1 < k:
        _warn(notes, f"k_neighbors reduced from {k} to {n_minority - 1} (minority has {n_minority} rows)")
        return n_minority - 1
    return k


def _interpolate(
    d: Dataset,
    spec: BalancerSpec,
    bases: np.ndarray,
    min_idx: np.ndarray,
    k: int,
    notes: list,
    gap: float | None,
) -> BalancedDataset:
    """Append ``maj - min`` rows interpolated from ``bases`` toward minority neighbours.

    Draw order per call: base rows, then neighbour slots, then gaps.
    """
    minority = minority_class(d.target)
    n_new = d.n_rows - 2 * min_idx.size
    X = d.features
    Xs = _scaled(d, spec)
    # neighbours among minority rows, self excluded
    pos = np.searchsorted(min_idx, bases)
    nn, _ = knn_indices(Xs[bases], Xs[min_idx], k, exclude=pos)
    rng = rng_from(spec.seed)
    base_pick = rng.integers(0, bases.size, size=n_new)
    slot_pick = rng.integers(0, k, size=n_new)
    u = rng.random(n_new) if gap is None else np.full(n_new, float(gap))
    base_rows = bases[base_pick]
    nbr_rows = min_idx[nn[base_pick, slot_pick]]
    synth = X[base_rows] + u[:, None] * (X[nbr_rows] - X[base_rows])
    features = np.vstack([X, synth])
    target = np.concatenate([d.target, np.full(n_new, minority)])
    return BalancedDataset(
        data=d.with_data(features, target, name=f"{d.name}+{spec.method}"),
        origin=d.name,
        spec=spec,
        synthetic_mask=np.concatenate([np.zeros(d.n_rows, bool), np.ones(n_new, bool)]),
        row_origin=np.concatenate([np.arange(d.n_rows), np.full(n_new, -1)]).astype(np.int64),
        parents=np.column_stack([base_rows, nbr_rows]).astype(np.int64),
        gaps=u,
        warnings=tuple(notes),
    )


def smote(d: Dataset, spec: BalancerSpec | None = None, gap: float | None = None) -> BalancedDataset:
    """SMOTE. ``gap`` pins every interpolation weight (testing only)."""
    spec = spec or BalancerSpec("smote")
    _, min_idx, _ = _classes(d)
    notes: list[str] = []
    k = _effective_k(min_idx.size, spec.k_neighbors, notes)
    return _interpolate(d, spec, min_idx, min_idx, k, notes, gap)


def danger_mask(d: Dataset, m_neighbors: int, spec: BalancerSpec | None = None):
    """Classify each minority row as SAFE/DANGER/NOISE from its m nearest rows.

    Returns ``(min_idx, labels)`` with labels in {"safe", "danger", "noise"}.
    """
    spec = spec or BalancerSpec("borderline_smote", m_neighbors=m_neighbors)
    minority, min_idx, _ = _classes(d)
    Xs = _scaled(d, spec)
    m = min(m_neighbors, d.n_rows - 1)
    nn, _ = knn_indices(Xs[min_idx], Xs, m, exclude=min_idx)
    n_major = (d.target[nn] != minority).sum(axis=1)
    labels = np.where(n_major == m, "noise", np.where(2 * n_major >= m, "danger", "safe"))
    return min_idx, labels


def borderline_smote(d: Dataset, spec: BalancerSpec | None = None, gap: float | None = None) -> BalancedDataset:
    spec = spec or BalancerSpec("borderline_smote")
    _, min_idx, _ = _classes(d)
    notes: list[str] = []
    k = _effective_k(min_idx.size, spec.k_neighbors, notes)
    _, labels = danger_mask(d, spec.m_neighbors, spec)
    bases = min_idx[labels == "danger"]
    if bases.size == 0:
        _warn(notes, "borderline_smote found no DANGER rows; fell back to plain SMOTE")
        bases = min_idx
    return _interpolate(d, spec, bases, min_idx, k, notes, gap)


# --------------------------------------------------------------------------
# hybrid


def tomek_links(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pairs ``(i, j)``, ``i < j``, of opposite-class mutual nearest neighbours."""
    nn, _ = knn_indices(X, X, 1, exclude=np.arange(X.shape[0]))
    nn = nn[:, 0]
    i = np.arange(X.shape[0])
    linked = (nn[nn] == i) & (y[nn] != y) & (i < nn)
    return np.column_stack([i[linked], nn[linked]])


def smote_tomek(d: Dataset, spec: BalancerSpec | None = None, gap: float | None = None) -> BalancedDataset:
    spec = spec or BalancerSpec("smote_tomek")
    over = smote(d, replace(spec, method="smote"), gap=gap)
    Xs = _scaled(over.data, spec)
    links = tomek_links(Xs, over.data.target)
    drop = np.zeros(over.data.n_rows, dtype=bool)
    drop[links.ravel()] = True
    keep = np.flatnonzero(~drop)
    synth_positions = np.cumsum(over.synthetic_mask) - 1
    kept_synth = over.synthetic_mask[keep]
    return BalancedDataset(
        data=over.data.take(keep, name=f"{d.name}+{spec.method}"),
        origin=d.name,
        spec=spec,
        synthetic_mask=kept_synth,
        row_origin=over.row_origin[keep],
        parents=over.parents[synth_positions[keep][kept_synth]],
        gaps=over.gaps[synth_positions[keep][kept_synth]],
        links_removed=int(links.shape[0]),
        warnings=over.warnings,
    )


def balance(d: Dataset, spec: BalancerSpec) -> BalancedDataset:
    """Dispatch on ``spec.method``."""
    if spec.method == "random_under":
        return random_under(d, spec=spec)
    if spec.method == "near_miss":
        return near_miss(d, spec)
    if spec.method == "random_over":
        return random_over(d, spec=spec)
    if spec.method == "smote":
        return smote(d, spec)
    if spec.method == "borderline_smote":
        return borderline_smote(d, spec)
    return smote_tomek(d, spec)
