"""Experiment configuration: a JSON document mirroring :class:`ExperimentConfig`."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..balancing import METHODS, BalancerSpec
from ..data.registry import REGISTRY
from ..explain import DEFAULT_ALE_BINS, DEFAULT_GRID_K, DEFAULT_VI_REPEATS
from ..learners import FAMILIES, LearnerSpec

BASELINE = "none"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetRequest:
    """One entry of ``datasets``: exactly one of registry / csv / simulation."""

    kind: str  # "registry" | "csv" | "simulation"
    name: str | None = None
    path: str | None = None
    target: str = "target"
    n_samples: int = 10_000
    seed: int | None = None

    def to_json(self) -> dict:
        if self.kind == "registry":
            return {"registry": self.name}
        if self.kind == "csv":
            return {"csv": self.path, "target": self.target, "name": self.name}
        return {"simulation": {"n_samples": self.n_samples, "seed": self.seed}}


@dataclass(frozen=True)
class ExplainSettings:
    grid_k: int = DEFAULT_GRID_K
    ale_bins: int = DEFAULT_ALE_BINS
    vi_repeats: int = DEFAULT_VI_REPEATS


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[DatasetRequest, ...]
    balancers: tuple[BalancerSpec, ...]
    learners: tuple[LearnerSpec, ...]
    test_fraction: float = 0.2
    explain: ExplainSettings = field(default_factory=ExplainSettings)
    alpha: float = 0.05
    master_seed: int = 0
    output_dir: str = "results"
    repeats: int = 1
    workers: int = 1
    cache_dir: str | None = None
    vi_pairing: str = "variables"

    def __post_init__(self):
        if not self.datasets:
            raise ConfigError("at least one dataset is required")
        if not self.learners:
            raise ConfigError("at least one learner is required")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.repeats < 1 or self.workers < 1:
            raise ConfigError("repeats and workers must be >= 1")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be a non-negative integer")
        if self.vi_pairing not in ("variables", "repeats"):
            raise ConfigError("vi_pairing must be 'variables' or 'repeats'")
        methods = [b.method for b in self.balancers]
        if len(set(methods)) != len(methods):
            raise ConfigError(f"duplicate balancing methods in {methods}")
        families = [lr.family for lr in self.learners]
        if len(set(families)) != len(families):
            raise ConfigError(f"duplicate learner families in {families}")

    @property
    def methods(self) -> tuple[str, ...]:
        """Baseline first, then the configured balancers."""
        return (BASELINE, *(b.method for b in self.balancers))

    def to_json(self) -> dict:
        return {
            "datasets": [d.to_json() for d in self.datasets],
            "balancers": [
                {"method": b.method, "k_neighbors": b.k_neighbors, "m_neighbors": b.m_neighbors,
                 "near_miss_k": b.near_miss_k, "standardize": b.standardize}
                for b in self.balancers
            ],
            "learners": [{"family": lr.family, "hyperparameters": dict(lr.hyperparameters)} for lr in self.learners],
            "test_fraction": self.test_fraction,
            "explain": {"grid_k": self.explain.grid_k, "ale_bins": self.explain.ale_bins,
                        "vi_repeats": self.explain.vi_repeats},
            "alpha": self.alpha,
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
            "repeats": self.repeats,
            "workers": self.workers,
            "cache_dir": self.cache_dir,
            "vi_pairing": self.vi_pairing,
        }


_TOP_KEYS = {
    "datasets", "balancers", "learners", "test_fraction", "explain", "alpha", "master_seed",
    "output_dir", "repeats", "workers", "cache_dir", "vi_pairing",
}


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _dataset(entry) -> DatasetRequest:
    if isinstance(entry, str):
        entry = {"registry": entry}
    if not isinstance(entry, dict):
        raise ConfigError(f"dataset entry must be a string or object, got {entry!r}")
    kinds = [k for k in ("registry", "csv", "simulation") if k in entry]
    if len(kinds) != 1:
        raise ConfigError(f"dataset entry needs exactly one of registry/csv/simulation: {entry!r}")
    kind = kinds[0]
    if kind == "registry":
        _reject_unknown(entry, {"registry"}, "dataset")
        if entry["registry"] not in REGISTRY:
            raise ConfigError(f"unknown registry dataset {entry['registry']!r}")
        return DatasetRequest("registry", name=entry["registry"])
    if kind == "csv":
        _reject_unknown(entry, {"csv", "target", "name"}, "dataset")
        return DatasetRequest(
            "csv", name=entry.get("name") or Path(entry["csv"]).stem, path=entry["csv"],
            target=entry.get("target", "target"),
        )
    sim = entry["simulation"]
    _reject_unknown(entry, {"simulation"}, "dataset")
    if sim is True:
        sim = {}
    if not isinstance(sim, dict):
        raise ConfigError("simulation must be an object or true")
    _reject_unknown(sim, {"n_samples", "seed"}, "simulation")
    return DatasetRequest("simulation", n_samples=int(sim.get("n_samples", 10_000)), seed=sim.get("seed"))


def _balancer(entry) -> BalancerSpec | None:
    if isinstance(entry, str):
        entry = {"method": entry}
    _reject_unknown(entry, {"method", "k_neighbors", "m_neighbors", "near_miss_k", "standardize"}, "balancer")
    if entry.get("method") == BASELINE:
        return None
    if entry.get("method") not in METHODS:
        raise ConfigError(f"unknown balancing method {entry.get('method')!r}")
    try:
        return BalancerSpec(**entry)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _learner(entry) -> LearnerSpec:
    if isinstance(entry, str):
        entry = {"family": entry}
    _reject_unknown(entry, {"family", "hyperparameters"}, "learner")
    if entry.get("family") not in FAMILIES:
        raise ConfigError(f"unknown learner family {entry.get('family')!r}")
    try:
        return LearnerSpec(entry["family"], dict(entry.get("hyperparameters", {})))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(doc: dict, base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "config")
    for key in ("datasets", "learners"):
        if key not in doc:
            raise ConfigError(f"missing required key {key!r}")
    datasets = [_dataset(e) for e in doc["datasets"]]
    if base_dir is not None:
        datasets = [
            DatasetRequest(d.kind, d.name, str((base_dir / d.path).resolve()), d.target) if d.kind == "csv" else d
            for d in datasets
        ]
    balancers = [b for b in (_balancer(e) for e in doc.get("balancers", [])) if b is not None]
    explain = doc.get("explain", {})
    _reject_unknown(explain, {"grid_k", "ale_bins", "vi_repeats"}, "explain")
    output_dir = doc.get("output_dir", "results")
    cache_dir = doc.get("cache_dir")
    if cache_dir is not None:
        cache_dir = os.path.expanduser(cache_dir)
    if base_dir is not None:
        output_dir = str((base_dir / output_dir).resolve())
        if cache_dir is not None:
            cache_dir = str((base_dir / cache_dir).resolve())
    return ExperimentConfig(
        datasets=tuple(datasets),
        balancers=tuple(balancers),
        learners=tuple(_learner(e) for e in doc["learners"]),
        test_fraction=float(doc.get("test_fraction", 0.2)),
        explain=ExplainSettings(**explain),
        alpha=float(doc.get("alpha", 0.05)),
        master_seed=int(doc.get("master_seed", 0)),
        output_dir=output_dir,
        repeats=int(doc.get("repeats", 1)),
        workers=int(doc.get("workers", 1)),
        cache_dir=cache_dir,
        vi_pairing=doc.get("vi_pairing", "variables"),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(doc, base_dir=path.parent)
