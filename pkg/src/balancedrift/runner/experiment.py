"""Run the (dataset x balancer x learner) grid and persist its results.

Per dataset the data is split once; the test split is the background for
every explanation, so all models of a dataset share rows and grids. Each
cell's randomness derives from ``(master_seed, dataset, method, family)``,
which makes a cell's numbers independent of list order and worker count.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from ..balancing import balance
from ..compare import SddResult, ViTestResult, adjust_vi_tests, asdd, balanced_accuracy, compare_vi
from ..data.csvio import load_csv
from ..data.dataset import Dataset
from ..data.openml import fetch_openml
from ..data.registry import get_entry
from ..data.simulate import scenario_grid
from ..data.split import stratified_split
from ..explain import ale, make_grid, pdp, permutation_importance
from ..learners import predict_label, train
from ..seeding import derive_seed
from .config import BASELINE, ConfigError, ExperimentConfig
from .plot import performance_gain_table, render_gain_plot

log = logging.getLogger(__name__)

CACHE_VERSION = 1
RESULTS_FILE = "results.csv"
SDD_FILE = "sdd.csv"
META_FILE = "run_meta.json"

RESULT_COLUMNS = [
    "dataset", "model", "method", "asdd_pdp", "asdd_ale", "ba_base", "ba_balanced",
    "vi_p", "vi_p_adjusted", "vi_rejected", "gain", "failed", "warnings",
]
SDD_COLUMNS = ["dataset", "model", "method", "kind", "variable", "sdd"]


@dataclass(frozen=True)
class GridCellResult:
    dataset: str
    method: str
    family: str
    ba_base: float | None = None
    ba_balanced: float | None = None
    gain: float | None = None
    asdd_pdp: float | None = None
    asdd_ale: float | None = None
    vi_test: ViTestResult | None = None
    warnings: tuple[str, ...] = ()
    timings: dict = field(default_factory=dict, compare=False)
    failed: bool = False
    sdd: tuple[SddResult, ...] = ()

    @property
    def is_baseline(self) -> bool:
        return self.method == BASELINE

    def to_json(self) -> dict:
        d = asdict(self)
        d["warnings"] = list(self.warnings)
        d["sdd"] = [asdict(s) for s in self.sdd]
        return d

    @classmethod
    def from_json(cls, d: dict) -> GridCellResult:
        d = dict(d)
        d["warnings"] = tuple(d["warnings"])
        d["sdd"] = tuple(SddResult(**s) for s in d["sdd"])
        d["vi_test"] = ViTestResult(**d["vi_test"]) if d["vi_test"] else None
        return cls(**d)


@dataclass(frozen=True)
class RunSummary:
    cells: list
    output_dir: Path
    n_failed: int
    n_cells: int

    @property
    def exit_code(self) -> int:
        if self.n_failed == 0:
            return 0
        return 2 if self.n_failed == self.n_cells else 3


# --------------------------------------------------------------------------
# dataset resolution


def resolve_datasets(config: ExperimentConfig) -> list[Dataset]:
    out: list[Dataset] = []
    for req in config.datasets:
        if req.kind == "simulation":
            seed = config.master_seed if req.seed is None else req.seed
            out.extend(d for _, d in scenario_grid(req.n_samples, seed))
        elif req.kind == "csv":
            out.append(load_csv(req.path, req.target, name=req.name))
        else:
            cache = config.cache_dir or os.path.join(os.path.expanduser("~"), ".cache", "balancedrift", "openml")
            out.append(fetch_openml(get_entry(req.name), cache))
    names = [d.name for d in out]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ConfigError(f"duplicate dataset names: {dupes}")
    return out


# --------------------------------------------------------------------------
# per-cell work


def _explain(model, background: Dataset, grids: dict, ale_bins: int, vi_repeats: int, vi_seed: int):
    pdps = {v: pdp(model, background, g) for v, g in grids.items()}
    ales = {v: ale(model, background, v, ale_bins) for v in background.feature_names}
    vi = permutation_importance(model, background, vi_repeats, vi_seed)
    ba = balanced_accuracy(background.target, predict_label(model, background.features))
    return {"pdp": pdps, "ale": ales, "vi": vi, "ba": ba}


def _dedupe(messages) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for m in messages:
        seen.setdefault(str(m), None)
    return tuple(seen)


def _cell_key(job: dict, method_json: dict) -> str:
    payload = {
        "version": CACHE_VERSION,
        "train": job["train"].checksum(),
        "test": job["test"].checksum(),
        "dataset": job["label"],
        "method": method_json,
        "learner": job["learner"].to_json(),
        "master_seed": job["master_seed"],
        "repeat": job["repeat"],
        "explain": job["explain"],
        "vi_pairing": job["vi_pairing"],
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:32]


def _cache_load(cache_root, key):
    if cache_root is None:
        return None
    path = Path(cache_root) / f"{key}.json"
    if not path.exists():
        return None
    return GridCellResult.from_json(json.loads(path.read_text()))


def _cache_store(cache_root, key, cell: GridCellResult) -> None:
    if cache_root is None:
        return
    path = Path(cache_root) / f"{key}.json"
    tmp = path.with_suffix(".part")
    tmp.write_text(json.dumps(cell.to_json(), sort_keys=True))
    tmp.replace(path)


def _comparison(label, family, method, base, other, vi_pairing, extra_warnings=()):
    a_pdp = asdd(base["pdp"], other["pdp"]) if base["pdp"] else None
    a_ale = asdd(base["ale"], other["ale"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vi_test = compare_vi(base["vi"], other["vi"], pairing=vi_pairing)
    notes = list(extra_warnings)
    if vi_test.low_power:
        notes.append(f"VI test on {vi_test.n_pairs} pairs is low-power")
    sdds = (a_pdp.per_variable if a_pdp else ()) + a_ale.per_variable
    return GridCellResult(
        dataset=label,
        method=method,
        family=family,
        ba_base=base["ba"],
        ba_balanced=other["ba"],
        gain=other["ba"] - base["ba"],
        asdd_pdp=a_pdp.asdd if a_pdp else float("nan"),
        asdd_ale=a_ale.asdd,
        vi_test=vi_test,
        warnings=_dedupe(notes),
        sdd=sdds,
    )


def run_group(job: dict) -> list[GridCellResult]:
    """All cells of one (dataset, learner family): baseline plus each balancer."""
    label, learner = job["label"], job["learner"]
    family = learner.family
    train_split, test = job["train"], job["test"]
    grids = job["grids"]
    ex = job["explain"]
    cache_root = job["cache_root"]
    cells: list[GridCellResult] = []
    base = None
    base_error = None
    base_notes: tuple[str, ...] = ()

    def baseline():
        nonlocal base, base_error, base_notes
        if base is not None or base_error is not None:
            return
        seed = derive_seed(job["master_seed"], label, BASELINE, family, job["repeat"])
        t0 = time.perf_counter()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                model = train(learner.with_seed(derive_seed(seed, "train")), train_split)
                base = _explain(model, test, grids, ex["ale_bins"], ex["vi_repeats"], derive_seed(seed, "vi"))
            except Exception as exc:  # recorded on every cell of the group
                base_error = f"baseline failed: {type(exc).__name__}: {exc}"
        base_notes = _dedupe(str(w.message) for w in caught)
        log.debug("%s/%s baseline in %.1fs", label, family, time.perf_counter() - t0)

    methods = [(BASELINE, None)] + [(b.method, b) for b in job["balancers"]]
    for method, spec in methods:
        method_json = {"method": method} if spec is None else {
            "method": spec.method, "k_neighbors": spec.k_neighbors, "m_neighbors": spec.m_neighbors,
            "near_miss_k": spec.near_miss_k, "standardize": spec.standardize,
        }
        key = _cell_key(job, method_json)
        cached = _cache_load(cache_root, key)
        if cached is not None:
            cells.append(cached)
            continue
        t_start = time.perf_counter()
        baseline()
        if base_error is not None:
            cell = GridCellResult(label, method, family, warnings=(base_error, *base_notes), failed=True)
            cells.append(cell)
            continue
        if spec is None:
            cell = _comparison(label, family, method, base, base, job["vi_pairing"], base_notes)
            cell = replace(cell, timings={"total": time.perf_counter() - t_start})
        else:
            seed = derive_seed(job["master_seed"], label, method, family, job["repeat"])
            timings = {}
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                try:
                    t0 = time.perf_counter()
                    balanced = balance(train_split, replace(spec, seed=derive_seed(seed, "balance")))
                    timings["balance"] = time.perf_counter() - t0
                    t0 = time.perf_counter()
                    model = train(learner.with_seed(derive_seed(seed, "train")), balanced.data)
                    timings["train"] = time.perf_counter() - t0
                    t0 = time.perf_counter()
                    other = _explain(model, test, grids, ex["ale_bins"], ex["vi_repeats"], derive_seed(seed, "vi"))
                    timings["explain"] = time.perf_counter() - t0
                    error = None
                except Exception as exc:  # per-cell failure isolation
                    error = f"{type(exc).__name__}: {exc}"
            notes = [str(w.message) for w in caught]
            if error is not None:
                cell = GridCellResult(
                    label, method, family, ba_base=base["ba"], warnings=_dedupe([error, *notes]),
                    failed=True, timings=timings,
                )
            else:
                notes.extend(balanced.warnings)
                cell = _comparison(label, family, method, base, other, job["vi_pairing"], notes)
                cell = replace(cell, timings=timings)
        if not cell.failed or base_error is None:
            _cache_store(cache_root, key, cell)
        cells.append(cell)
        log.info("cell %s / %s / %s done%s", label, family, method, " (failed)" if cell.failed else "")
    return cells


# --------------------------------------------------------------------------
# orchestration


def _grids_for(test: Dataset, grid_k: int):
    grids, notes = {}, []
    for v in test.feature_names:
        try:
            grids[v] = make_grid(test, v, grid_k, "uniform")
        except ValueError as exc:
            notes.append(f"PDP skipped: {exc}")
    return grids, notes


def grid_checksum(grids: dict, test: Dataset, ale_bins: int) -> str:
    from ..explain import ale_bins as _edges

    h = hashlib.sha256()
    for v in test.feature_names:
        h.update(v.encode())
        if v in grids:
            h.update(grids[v].points.tobytes())
        col = test.column(v)
        if col.min() < col.max():
            h.update(_edges(col, ale_bins)[0].tobytes())
    return h.hexdigest()


def build_jobs(config: ExperimentConfig, datasets: list[Dataset]):
    jobs, meta = [], {}
    ex = {"grid_k": config.explain.grid_k, "ale_bins": config.explain.ale_bins, "vi_repeats": config.explain.vi_repeats}
    cache_root = Path(config.output_dir) / "cache"
    for d in datasets:
        for r in range(config.repeats):
            label = d.name if config.repeats == 1 else f"{d.name}#r{r}"
            split = stratified_split(d, config.test_fraction, derive_seed(config.master_seed, "split", d.name, r))
            grids, notes = _grids_for(split.test, config.explain.grid_k)
            meta[label] = {
                "rows": d.n_rows,
                "train_rows": split.train.n_rows,
                "test_rows": split.test.n_rows,
                "grid_checksum": grid_checksum(grids, split.test, config.explain.ale_bins),
                "notes": notes,
            }
            for learner in config.learners:
                jobs.append({
                    "label": label,
                    "learner": learner,
                    "train": split.train,
                    "test": split.test,
                    "grids": grids,
                    "balancers": list(config.balancers),
                    "explain": ex,
                    "master_seed": config.master_seed,
                    "repeat": r,
                    "vi_pairing": config.vi_pairing,
                    "cache_root": str(cache_root),
                })
    return jobs, meta


def run(config: ExperimentConfig, datasets: list[Dataset] | None = None) -> RunSummary:
    """Execute every cell, FDR-adjust the VI tests and write all outputs."""
    if datasets is None:
        datasets = resolve_datasets(config)
    out = Path(config.output_dir)
    (out / "cache").mkdir(parents=True, exist_ok=True)
    jobs, meta = build_jobs(config, datasets)
    t0 = time.perf_counter()
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            groups = list(pool.map(run_group, jobs))
    else:
        groups = [run_group(job) for job in jobs]
    cells = [c for g in groups for c in g]
    cells = finalize(cells, config.alpha)
    write_results(cells, out)
    for kind in ("pdp", "ale"):
        table = performance_gain_table(cells, kind)
        if table:
            render_gain_plot(table, "model", out / f"gain_{kind}.svg", kind=kind)
    n_failed = sum(c.failed for c in cells)
    (out / META_FILE).write_text(json.dumps({
        "config": config.to_json(),
        "datasets": meta,
        "n_cells": len(cells),
        "n_failed": n_failed,
        "elapsed_seconds": time.perf_counter() - t0,
        "timings": [{"dataset": c.dataset, "model": c.family, "method": c.method, **c.timings} for c in cells],
    }, indent=2))
    return RunSummary(cells, out, n_failed, len(cells))


def finalize(cells, alpha: float) -> list[GridCellResult]:
    """Benjamini-Hochberg across all non-baseline, non-failed VI tests of the run."""
    idx = [i for i, c in enumerate(cells) if not c.failed and not c.is_baseline and c.vi_test is not None]
    adjusted = adjust_vi_tests([cells[i].vi_test for i in idx], alpha)
    out = list(cells)
    for i, t in zip(idx, adjusted):
        out[i] = replace(cells[i], vi_test=t)
    for i, c in enumerate(out):
        if c.is_baseline and c.vi_test is not None:
            out[i] = replace(c, vi_test=replace(c.vi_test, adjusted_p=c.vi_test.p_value, rejected=False))
    return out


# --------------------------------------------------------------------------
# persistence


def _num(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def write_results(cells, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / RESULTS_FILE
    tmp = path.with_suffix(".part")
    with tmp.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for c in cells:
            t = c.vi_test
            w.writerow([
                c.dataset, c.family, c.method, _num(c.asdd_pdp), _num(c.asdd_ale), _num(c.ba_base),
                _num(c.ba_balanced), _num(t.p_value if t else None), _num(t.adjusted_p if t else None),
                "" if t is None else int(t.rejected), _num(c.gain), int(c.failed), " | ".join(c.warnings),
            ])
    tmp.replace(path)
    sdd_path = out_dir / SDD_FILE
    tmp = sdd_path.with_suffix(".part")
    with tmp.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SDD_COLUMNS)
        for c in cells:
            for s in c.sdd:
                w.writerow([c.dataset, c.family, c.method, s.kind, s.variable, _num(s.sdd)])
    tmp.replace(sdd_path)
    return path


def _opt(v: str):
    return None if v == "" else float(v)


def read_results_csv(path) -> list[GridCellResult]:
    cells = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RESULT_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing result columns {sorted(missing)}")
        for row in reader:
            vi = None
            if row["vi_p"] != "":
                vi = ViTestResult(
                    statistic=float("nan"), p_value=float(row["vi_p"]), adjusted_p=float(row["vi_p_adjusted"]),
                    rejected=bool(int(row["vi_rejected"])), n_pairs=0,
                )
            cells.append(GridCellResult(
                dataset=row["dataset"], method=row["method"], family=row["model"],
                ba_base=_opt(row["ba_base"]), ba_balanced=_opt(row["ba_balanced"]), gain=_opt(row["gain"]),
                asdd_pdp=_opt(row["asdd_pdp"]), asdd_ale=_opt(row["asdd_ale"]), vi_test=vi,
                warnings=tuple(w for w in row["warnings"].split(" | ") if w), failed=bool(int(row["failed"])),
            ))
    return cells
