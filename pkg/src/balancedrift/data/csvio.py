"""CSV ingestion and export for :class:`Dataset`."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .dataset import Dataset, DatasetError


class CsvFormatError(DatasetError):
    pass


def _map_labels(raw: list[str]) -> tuple[np.ndarray, dict[str, int]]:
    labels = sorted(set(raw))
    if len(labels) == 1:
        raise CsvFormatError(f"target has a single class ({labels[0]!r})")
    if len(labels) > 2:
        raise CsvFormatError(f"target has {len(labels)} distinct labels, expected 2")
    if set(labels) == {"0", "1"}:
        mapping = {"0": 0, "1": 1}
    else:
        a, b = labels  # lexicographic order: b is the larger label
        na, nb = raw.count(a), raw.count(b)
        # minority -> 1; on a tie the lexicographically larger label -> 1
        mapping = {a: 1, b: 0} if na < nb else {a: 0, b: 1}
    return np.array([mapping[v] for v in raw], dtype=np.int64), mapping


def _canonical_label(cell: str) -> str:
    # accept "1.0"/"0.0" style numeric labels as 0/1
    try:
        value = float(cell)
    except ValueError:
        return cell
    if value == 0.0:
        return "0"
    if value == 1.0:
        return "1"
    return cell


def load_csv(path, target_column: str = "target", name: str | None = None) -> Dataset:
    """Read a header-first, comma separated file into a Dataset.

    Every non-target cell must parse as a float. The target may be 0/1 or any
    two labels; with arbitrary labels the minority label becomes class 1.
    The label mapping is stored in ``meta["label_mapping"]``.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such CSV file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        if target_column not in header:
            raise CsvFormatError(f"{path}: target column {target_column!r} not in header")
        t_idx = header.index(target_column)
        f_idx = [i for i in range(len(header)) if i != t_idx]
        rows, labels = [], []
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise CsvFormatError(
                    f"{path}: line {line_no} has {len(record)} cells, expected {len(header)}"
                )
            values = []
            for i in f_idx:
                cell = record[i].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise CsvFormatError(
                        f"{path}: unparsable cell {cell!r} at line {line_no}, column {header[i]!r}"
                    ) from None
                if not np.isfinite(v):
                    raise CsvFormatError(
                        f"{path}: non-finite cell {cell!r} at line {line_no}, column {header[i]!r}"
                    )
                values.append(v)
            label = record[t_idx].strip()
            if label == "":
                raise CsvFormatError(
                    f"{path}: empty cell at line {line_no}, column {target_column!r}"
                )
            rows.append(values)
            labels.append(_canonical_label(label))
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    y, mapping = _map_labels(labels)
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(f_idx))
    return Dataset(
        name=name or path.stem,
        features=X,
        feature_names=tuple(header[i] for i in f_idx),
        target=y,
        source="csv",
        target_name=target_column,
        meta={"label_mapping": mapping},
    )


def write_csv(d: Dataset, path, extra_columns: dict[str, np.ndarray] | None = None) -> Path:
    """Write ``d`` with floats in shortest round-trip form (``repr``)."""
    path = Path(path)
    extra_columns = extra_columns or {}
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*d.feature_names, d.target_name, *extra_columns])
        extras = [np.asarray(v) for v in extra_columns.values()]
        for i in range(d.n_rows):
            writer.writerow(
                [repr(float(v)) for v in d.features[i]]
                + [int(d.target[i])]
                + [e[i].item() for e in extras]
            )
    return path
