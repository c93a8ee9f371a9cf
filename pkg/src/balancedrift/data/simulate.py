"""Logistic simulator with controllable imbalance.

The latent score is ``beta0 + 2.9 x1 - 3.7 x2 + 1.2 x3 + eps`` with standard
normal features and ``eps ~ N(0, v)``; the label is a Bernoulli draw of the
logistic transform of that score. ``beta0`` steers the class balance and
``v`` the label noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..seeding import derive_seed, rng_from
from .dataset import Dataset

COEFFICIENTS = (2.9, -3.7, 1.2)
FEATURE_NAMES = ("X1", "X2", "X3")
GRID_INTERCEPTS = (1.5, 2.5, 3.5, 4.5)
GRID_VARIANCES = (1.0, 2.0, 3.0)
DEFAULT_N_SAMPLES = 10_000


@dataclass(frozen=True)
class SimulationScenario:
    beta0: float
    error_variance: float
    n_samples: int = DEFAULT_N_SAMPLES
    seed: int = 0
    group: int | None = None
    var_level: int | None = None

    def __post_init__(self):
        if not self.error_variance > 0:
            raise ValueError(f"error_variance must be > 0, got {self.error_variance}")
        if self.n_samples < 100:
            raise ValueError(f"n_samples must be >= 100, got {self.n_samples}")

    @property
    def label(self) -> str:
        if self.group is None:
            return f"sim_b{self.beta0:g}_v{self.error_variance:g}"
        return f"sim_group{self.group}_var{self.var_level}"


def simulate(scenario: SimulationScenario, coefficients=COEFFICIENTS) -> Dataset:
    """Draw one dataset. ``coefficients`` is overridable for tests only."""
    rng = rng_from(scenario.seed)
    n = scenario.n_samples
    X = rng.standard_normal((n, 3))
    eps = rng.normal(0.0, np.sqrt(scenario.error_variance), size=n)
    z = scenario.beta0 + X @ np.asarray(coefficients, dtype=np.float64) + eps
    p = 1.0 / (1.0 + np.exp(-z))
    y = (rng.random(n) < p).astype(np.int64)
    return Dataset(
        name=scenario.label,
        features=X,
        feature_names=FEATURE_NAMES,
        target=y,
        source="simulated",
        meta={
            "beta0": scenario.beta0,
            "error_variance": scenario.error_variance,
            "n_samples": n,
            "seed": scenario.seed,
        },
    )


def scenario_grid(n_samples: int = DEFAULT_N_SAMPLES, master_seed: int = 0):
    """The 12 scenarios: groups 1-4 (intercepts) x var levels 1-3 (noise variances).

    Returns a list of ``(SimulationScenario, Dataset)`` ordered group-major.
    """
    if n_samples < 100:
        raise ValueError(f"n_samples must be >= 100, got {n_samples}")
    out = []
    for i, beta0 in enumerate(GRID_INTERCEPTS, start=1):
        for j, v in enumerate(GRID_VARIANCES, start=1):
            scenario = SimulationScenario(
                beta0=beta0,
                error_variance=v,
                n_samples=n_samples,
                seed=derive_seed(master_seed, "scenario", i, j),
                group=i,
                var_level=j,
            )
            out.append((scenario, simulate(scenario)))
    return out
