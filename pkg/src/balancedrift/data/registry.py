"""Static benchmark registry: 21 binary, continuous-only imbalanced datasets."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass


@dataclass(frozen=True)
class RegistryEntry:
    name: str
    expected_ir: float
    expected_rows: int
    expected_cols: int
    source_tags: tuple[str, ...]
    openml_id: int | None = None


_OML100 = "OpenML-100"
_CC18 = "OpenML-CC18"
_IMB = "imblearn"

# (name, IR, rows, columns, sources, OpenML dataset id)
_TABLE = [
    ("spambase", 1.54, 4601, 55, (_OML100, _CC18), 44),
    ("MagicTelescope", 1.84, 19020, 10, (_OML100,), 1120),
    ("steel-plates-fault", 1.88, 1941, 13, (_OML100, _CC18), 1504),
    ("qsar-biodeg", 1.96, 1055, 17, (_OML100, _CC18), 1494),
    ("phoneme", 2.41, 5404, 5, (_OML100,), 1489),
    ("jm1", 4.17, 10880, 17, (_OML100, _CC18), 1053),
    ("SpeedDating", 4.63, 1048, 18, (_OML100,), 40536),
    ("kc1", 5.47, 2109, 17, (_OML100, _CC18), 1067),
    ("churn", 6.07, 5000, 8, (_CC18,), 40701),
    ("pc4", 7.19, 1458, 12, (_OML100, _CC18), 1049),
    ("pc3", 8.77, 1563, 14, (_OML100, _CC18), 1050),
    ("abalone", 9.68, 4177, 7, (_IMB,), None),
    ("us_crime", 12.29, 1994, 100, (_IMB,), None),
    ("yeast_ml8", 12.58, 2417, 103, (_IMB,), None),
    ("pc1", 13.40, 1109, 17, (_OML100, _CC18), 1068),
    ("ozone-level-8hr", 14.84, 2534, 72, (_IMB, _OML100, _CC18), 1487),
    ("wilt", 17.54, 4839, 5, (_OML100, _CC18), 40983),
    ("wine_quality", 25.77, 4898, 11, (_IMB,), None),
    ("yeast_me2", 28.10, 1484, 8, (_IMB,), None),
    ("mammography", 42.01, 11183, 6, (_IMB,), None),
    ("abalone_19", 129.53, 4177, 7, (_IMB,), None),
]

REGISTRY: dict[str, RegistryEntry] = {
    row[0]: RegistryEntry(*row[:4], source_tags=row[4], openml_id=row[5]) for row in _TABLE
}

# curation predicate applied to every benchmark member
MIN_ROWS = 1000
MIN_IR = 1.5


def get_entry(name: str) -> RegistryEntry:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown registry dataset {name!r}; see `registry --list`") from None


def registry_csv() -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "IR", "Rows", "Columns", "Source", "openml_id"])
    for e in REGISTRY.values():
        writer.writerow(
            [
                e.name,
                f"{e.expected_ir:.2f}",
                e.expected_rows,
                e.expected_cols,
                ", ".join(e.source_tags),
                "" if e.openml_id is None else e.openml_id,
            ]
        )
    return buf.getvalue()
