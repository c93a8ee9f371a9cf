"""Behavior-change and performance comparisons between two models."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .explain import ImportanceVector, Profile
from .metrics import midranks

EXACT_MAX_PAIRS = 15
ALPHA = 0.05


class GridMismatch(ValueError):
    """Profiles were evaluated on different points and cannot be compared."""


class LowPowerWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SddResult:
    variable: str
    kind: str
    sdd: float
    grid_k: int


@dataclass(frozen=True)
class AsddResult:
    kind: str
    asdd: float
    per_variable: tuple[SddResult, ...]


@dataclass(frozen=True)
class ViTestResult:
    statistic: float
    p_value: float
    adjusted_p: float
    rejected: bool
    n_pairs: int
    low_power: bool = False


def sdd(p1: Profile, p2: Profile) -> SddResult:
    """Population standard deviation of the pointwise profile differences.

    A spread below the floating-point resolution of the profile values is
    reported as exactly 0: it cannot be told apart from a constant offset.
    """
    if p1.variable != p2.variable:
        raise GridMismatch(f"variables differ: {p1.variable!r} vs {p2.variable!r}")
    if p1.kind != p2.kind:
        raise GridMismatch(f"profile kinds differ: {p1.kind} vs {p2.kind}")
    if not p1.grid.same_points(p2.grid):
        raise GridMismatch(f"grids for {p1.variable!r} are not identical")
    diff = p1.values - p2.values
    sd = float(np.std(diff))
    scale = max(float(np.max(np.abs(p1.values))), float(np.max(np.abs(p2.values))))
    if sd <= 4.0 * np.finfo(np.float64).eps * scale:
        sd = 0.0
    return SddResult(p1.variable, p1.kind, sd, p1.grid.k)


def asdd(profiles1, profiles2) -> AsddResult:
    """Mean SDD across variables; inputs are sequences or variable-keyed dicts."""
    a = _by_variable(profiles1)
    b = _by_variable(profiles2)
    if set(a) != set(b):
        raise GridMismatch(f"variable sets differ: {sorted(set(a) ^ set(b))}")
    if not a:
        raise ValueError("no profiles to compare")
    per = tuple(sdd(a[v], b[v]) for v in a)
    kinds = {r.kind for r in per}
    if len(kinds) != 1:
        raise GridMismatch(f"mixed profile kinds {sorted(kinds)}")
    return AsddResult(kinds.pop(), float(np.mean([r.sdd for r in per])), per)


def _by_variable(profiles) -> dict[str, Profile]:
    if isinstance(profiles, dict):
        return dict(profiles)
    out = {}
    for p in profiles:
        if p.variable in out:
            raise ValueError(f"duplicate profile for {p.variable!r}")
        out[p.variable] = p
    return out


def balanced_accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    pos = y_true == 1
    neg = ~pos
    if not pos.any() or not neg.any():
        raise ValueError("balanced accuracy needs both classes in y_true")
    tpr = np.count_nonzero(y_pred[pos] == 1) / np.count_nonzero(pos)
    tnr = np.count_nonzero(y_pred[neg] == 0) / np.count_nonzero(neg)
    return (tpr + tnr) / 2.0


def _signed_rank_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    """Number of sign assignments giving each doubled positive-rank sum."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled_ranks.astype(np.int64):
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(x, y, exact_max: int = EXACT_MAX_PAIRS) -> tuple[float, float]:
    """Two-sided Wilcoxon signed-rank test on ``x - y``.

    Zero differences are dropped and tied magnitudes receive midranks. With at
    most ``exact_max`` non-zero pairs the p-value is exact (full enumeration of
    sign assignments via a counting recursion); above that a normal
    approximation with tie correction is used. The statistic is the smaller of
    the positive and negative rank sums. All-zero differences give ``(0, 1)``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D vectors of equal length")
    d = x - y
    d = d[d != 0]
    n = d.size
    if n == 0:
        return 0.0, 1.0
    ranks = midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    total = n * (n + 1) / 2.0
    statistic = min(w_plus, total - w_plus)
    if n <= exact_max:
        doubled = np.rint(2 * ranks).astype(np.int64)  # midranks are multiples of 1/2
        counts = _signed_rank_counts(doubled)
        k = int(round(2 * w_plus))
        denom = 2.0**n
        lower = counts[: k + 1].sum() / denom
        upper = counts[k:].sum() / denom
        p = min(1.0, 2.0 * min(lower, upper))
        return statistic, p
    _, tie_sizes = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_sizes**3 - tie_sizes) / 48.0
    if var <= 0:
        return statistic, 1.0
    z = (w_plus - total / 2.0) / math.sqrt(var)
    return statistic, min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def fdr_adjust(p_values) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values."""
    p = np.asarray(p_values, dtype=np.float64)
    if p.size == 0:
        return p.copy()
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    adjusted = np.minimum(np.minimum.accumulate(scaled[::-1])[::-1], 1.0)
    out = np.empty(m)
    out[order] = adjusted
    return np.maximum(out, p)


def compare_vi(vi1: ImportanceVector, vi2: ImportanceVector, alpha: float = ALPHA, pairing: str = "variables") -> ViTestResult:
    """Paired Wilcoxon test between two importance vectors.

    ``pairing="variables"`` pairs per-variable mean importances;
    ``pairing="repeats"`` pairs every (repeat, variable) entry of the raw
    matrices. The result carries the unadjusted p-value in ``adjusted_p``;
    call :func:`adjust_vi_tests` over the whole family to finalize it.
    """
    if tuple(vi1.variables) != tuple(vi2.variables):
        raise ValueError("importance vectors cover different variables")
    if pairing == "variables":
        a, b = vi1.means(), vi2.means()
    elif pairing == "repeats":
        if vi1.raw.shape != vi2.raw.shape:
            raise ValueError("repeat pairing needs equal repeat counts")
        a, b = vi1.raw.ravel(), vi2.raw.ravel()
    else:
        raise ValueError(f"unknown pairing {pairing!r}")
    low_power = a.size < 5
    if low_power:
        warnings.warn(
            f"only {a.size} pairs for the Wilcoxon test; exact test used, power is low",
            LowPowerWarning,
            stacklevel=2,
        )
    stat, p = wilcoxon_signed_rank(a, b)
    return ViTestResult(stat, p, p, False, int(a.size), low_power)


def adjust_vi_tests(results, alpha: float = ALPHA) -> list:
    """FDR-adjust a family of VI tests; ``None`` entries (failed cells) pass through."""
    present = [i for i, r in enumerate(results) if r is not None]
    adjusted = fdr_adjust([results[i].p_value for i in present])
    out = list(results)
    for i, q in zip(present, adjusted):
        out[i] = replace(results[i], adjusted_p=float(q), rejected=bool(q < alpha))
    return out
