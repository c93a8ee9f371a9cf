from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SOURCES = ("csv", "openml", "simulated", "derived")


class DatasetError(ValueError):
    """Raised when a dataset violates its construction invariants."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Continuous feature matrix with a binary target.

    Arrays are copied and frozen on construction, so a ``Dataset`` can be
    shared freely between estimators without defensive copies.
    """

    name: str
    features: np.ndarray
    feature_names: tuple[str, ...]
    target: np.ndarray
    source: str = "derived"
    target_name: str = "target"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, copy=True)
        if X.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {X.shape}")
        y = np.asarray(self.target)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DatasetError(
                f"target length {y.shape[0] if y.ndim else 0} does not match {X.shape[0]} rows"
            )
        if not np.all(np.isin(y, (0, 1))):
            raise DatasetError("target must only contain 0 and 1")
        y = y.astype(np.int64, copy=True)
        names = tuple(str(n) for n in self.feature_names)
        if len(names) != X.shape[1]:
            raise DatasetError(f"{len(names)} feature names for {X.shape[1]} columns")
        if len(set(names)) != len(names):
            raise DatasetError("feature names must be unique")
        if self.target_name in names:
            raise DatasetError(f"target name {self.target_name!r} clashes with a feature name")
        if not np.all(np.isfinite(X)):
            bad = np.argwhere(~np.isfinite(X))[0]
            raise DatasetError(f"missing or non-finite value at row {bad[0]}, column {names[bad[1]]!r}")
        counts = np.bincount(y, minlength=2)
        if counts.min() == 0:
            raise DatasetError(f"dataset {self.name!r} has a single class")
        if self.source not in SOURCES:
            raise DatasetError(f"unknown source {self.source!r}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "target", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_cols(self) -> int:
        return self.features.shape[1]

    def column(self, variable: str) -> np.ndarray:
        return self.features[:, self.column_index(variable)]

    def column_index(self, variable: str) -> int:
        try:
            return self.feature_names.index(variable)
        except ValueError:
            raise KeyError(f"no variable {variable!r} in dataset {self.name!r}") from None

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.target, minlength=2)

    def take(self, rows, name: str | None = None, source: str = "derived") -> Dataset:
        rows = np.asarray(rows)
        return Dataset(
            name=name or self.name,
            features=self.features[rows],
            feature_names=self.feature_names,
            target=self.target[rows],
            source=source,
            target_name=self.target_name,
        )

    def with_data(self, features, target, name: str | None = None, source: str = "derived") -> Dataset:
        return Dataset(
            name=name or self.name,
            features=features,
            feature_names=self.feature_names,
            target=target,
            source=source,
            target_name=self.target_name,
        )

    def checksum(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.features).tobytes())
        h.update(np.ascontiguousarray(self.target).tobytes())
        h.update("\x1f".join(self.feature_names).encode())
        return h.hexdigest()

    def same_data(self, other: Dataset) -> bool:
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.target, other.target)
        )


@dataclass(frozen=True)
class ImbalanceSummary:
    n_rows: int
    n_cols: int
    minority_class: int
    imbalance_ratio: float
    class_counts: tuple[int, int]


def minority_class(target: np.ndarray) -> int:
    """Label of the smaller class; an exact tie designates class 1."""
    c0, c1 = np.bincount(np.asarray(target), minlength=2)[:2]
    return 0 if c0 < c1 else 1


def summarize(d: Dataset) -> ImbalanceSummary:
    c0, c1 = (int(c) for c in d.class_counts())
    return ImbalanceSummary(
        n_rows=d.n_rows,
        n_cols=d.n_cols,
        minority_class=minority_class(d.target),
        imbalance_ratio=max(c0, c1) / min(c0, c1),
        class_counts=(c0, c1),
    )
