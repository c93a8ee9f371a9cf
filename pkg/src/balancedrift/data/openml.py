"""Minimal OpenML download client with an on-disk cache.

Cache layout: ``<cache_dir>/<openml_id>/data.csv`` and ``meta.json``. A
registry cross-check (rows, columns, imbalance ratio) runs on every load so a
silently changed upstream dataset is reported instead of used.
"""

from __future__ import annotations

import io
import json
import logging
import urllib.request
from pathlib import Path

import numpy as np
from filelock import FileLock

from .csvio import load_csv, write_csv
from .dataset import Dataset, DatasetError, summarize
from .registry import MIN_IR, MIN_ROWS, RegistryEntry

log = logging.getLogger(__name__)

API_ROOT = "https://api.openml.org/api/v1/json"
IR_TOLERANCE = 0.05
TARGET = "target"


class FetchError(RuntimeError):
    pass


class RegistryMismatch(DatasetError):
    """Downloaded data no longer matches the registry entry."""


def _http_get(url: str, timeout: float = 60.0) -> bytes:
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        return resp.read()


def cross_check(d: Dataset, entry: RegistryEntry) -> None:
    s = summarize(d)
    problems = []
    if s.n_rows != entry.expected_rows:
        problems.append(f"rows {s.n_rows} != {entry.expected_rows}")
    if s.n_cols != entry.expected_cols:
        problems.append(f"columns {s.n_cols} != {entry.expected_cols}")
    if abs(s.imbalance_ratio - entry.expected_ir) > IR_TOLERANCE:
        problems.append(f"IR {s.imbalance_ratio:.3f} != {entry.expected_ir}")
    if s.n_rows < MIN_ROWS or s.imbalance_ratio < MIN_IR:
        problems.append("fails the benchmark curation predicate")
    if problems:
        raise RegistryMismatch(f"{entry.name}: " + "; ".join(problems))


def _is_integer_coded(col: np.ndarray) -> bool:
    return bool(np.all(col == np.round(col)))


def parse_arff(payload: bytes, target_attribute: str, ignore=()) -> tuple[np.ndarray, list[str], np.ndarray]:
    """Parse an ARFF payload into (features, names, 0/1 target).

    Only real-valued, non-integer-coded columns are kept: nominal attributes and
    integer-coded columns are treated as categorical/ordinal and dropped. Rows
    with missing values are dropped. The minority label becomes class 1.
    """
    from scipy.io import arff

    data, meta = arff.loadarff(io.StringIO(payload.decode("utf-8")))
    names = list(meta.names())
    if target_attribute not in names:
        raise FetchError(f"target attribute {target_attribute!r} missing from ARFF")
    raw_target = data[target_attribute]
    if raw_target.dtype.kind in "SO":
        raw_target = np.array([v.decode() if isinstance(v, bytes) else str(v) for v in raw_target])
    else:
        raw_target = raw_target.astype(str)
    kept, cols = [], []
    for name in names:
        if name == target_attribute or name in ignore:
            continue
        if meta[name][0] != "numeric":
            continue
        col = np.asarray(data[name], dtype=np.float64)
        kept.append(name)
        cols.append(col)
    X = np.column_stack(cols) if cols else np.empty((len(raw_target), 0))
    present = np.all(np.isfinite(X), axis=1) & (raw_target != "?")
    X, raw_target = X[present], raw_target[present]
    keep = [i for i in range(X.shape[1]) if not _is_integer_coded(X[:, i])]
    X = X[:, keep]
    kept = [kept[i] for i in keep]
    labels, counts = np.unique(raw_target, return_counts=True)
    if len(labels) != 2:
        raise FetchError(f"expected a binary target, found {len(labels)} labels")
    minority = labels[0] if counts[0] < counts[1] else labels[1]
    y = (raw_target == minority).astype(np.int64)
    return X, kept, y


def fetch_openml(entry: RegistryEntry, cache_dir, http_get=_http_get) -> Dataset:
    """Return the dataset for ``entry``, downloading it on a cold cache."""
    if entry.openml_id is None:
        raise FetchError(f"{entry.name} has no OpenML source ({', '.join(entry.source_tags)})")
    root = Path(cache_dir)
    root.mkdir(parents=True, exist_ok=True)
    slot = root / str(entry.openml_id)
    with FileLock(str(root / f"{entry.openml_id}.lock")):
        data_path = slot / "data.csv"
        if not data_path.exists():
            _download(entry, slot, http_get)
        d = load_csv(data_path, TARGET, name=entry.name)
    d = Dataset(
        name=entry.name,
        features=d.features,
        feature_names=d.feature_names,
        target=d.target,
        source="openml",
        meta={"openml_id": entry.openml_id},
    )
    cross_check(d, entry)
    return d


def _download(entry: RegistryEntry, slot: Path, http_get) -> None:
    log.info("downloading OpenML dataset %s (id %s)", entry.name, entry.openml_id)
    try:
        desc = json.loads(http_get(f"{API_ROOT}/data/{entry.openml_id}"))["data_set_description"]
        payload = http_get(desc["url"])
    except Exception as exc:  # network, HTTP and JSON errors all mean "unavailable"
        raise FetchError(f"cannot download {entry.name} and no cached copy: {exc}") from exc
    ignore = set()
    for key in ("row_id_attribute", "ignore_attribute"):
        value = desc.get(key)
        if isinstance(value, str):
            ignore.add(value)
        elif isinstance(value, list):
            ignore.update(value)
    X, names, y = parse_arff(payload, desc["default_target_attribute"], ignore)
    d = Dataset(entry.name, X, names, y, source="openml", target_name=TARGET)
    cross_check(d, entry)
    slot.mkdir(parents=True, exist_ok=True)
    tmp = slot / "data.csv.part"
    write_csv(d, tmp)
    s = summarize(d)
    (slot / "meta.json").write_text(
        json.dumps(
            {
                "name": entry.name,
                "openml_id": entry.openml_id,
                "rows": s.n_rows,
                "columns": s.n_cols,
                "imbalance_ratio": s.imbalance_ratio,
                "feature_names": list(names),
            },
            indent=2,
        )
    )
    tmp.replace(slot / "data.csv")
