import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from balancedrift.compare import (
    GridMismatch,
    LowPowerWarning,
    adjust_vi_tests,
    asdd,
    balanced_accuracy,
    compare_vi,
    fdr_adjust,
    sdd,
    wilcoxon_signed_rank,
)
from balancedrift.explain import Grid, ImportanceVector, Profile
from balancedrift.metrics import midranks

UNIT = Grid("z", np.linspace(0.0, 1.0, 101), "uniform")


def prof(values, grid=UNIT, kind="pdp", variable=None):
    return Profile(kind, variable or grid.variable, grid, np.asarray(values, dtype=float))


# -- oracles ------------------------------------------------------------------


def sign_flip_p(d):
    """Two-sided exact p by enumerating all 2^n sign assignments."""
    d = np.asarray(d, dtype=float)
    d = d[d != 0]
    ranks = midranks(np.abs(d))
    observed = ranks[d > 0].sum()
    n = d.size
    lower = upper = 0
    for signs in itertools.product((0, 1), repeat=n):
        s = sum(r for r, keep in zip(ranks, signs) if keep)
        lower += s <= observed + 1e-9
        upper += s >= observed - 1e-9
    return min(1.0, 2 * min(lower, upper) / 2**n)


def step_up_direct(p):
    """Textbook BH: q_(i) = min_{k>=i} p_(k) m / k."""
    m = len(p)
    order = sorted(range(m), key=lambda i: p[i])
    q = [0.0] * m
    for rank, i in enumerate(order, start=1):
        q[i] = min(1.0, min(p[order[k - 1]] * m / k for k in range(rank, m + 1)))
    return q


# -- SDD / ASDD ---------------------------------------------------------------------


def test_sdd_worked_example():
    z = UNIT.points
    r = sdd(prof(z), prof(1.0 - z))
    # population sd of 2z - 1 on the grid, closed form
    expect = 2 * math.sqrt(sum((x - 0.5) ** 2 for x in z.tolist()) / 101)
    assert r.sdd == pytest.approx(expect, abs=1e-12)
    assert round(r.sdd, 4) == 0.5831
    assert r.grid_k == 101


def test_sdd_zero_cases_are_exact():
    z = UNIT.points
    h = np.sin(7 * z)
    assert sdd(prof(h), prof(h)).sdd == 0.0
    assert sdd(prof(h), prof(h + 5)).sdd == 0.0


def test_sdd_guards():
    other = Grid("z", np.linspace(0.0, 1.0, 51), "uniform")
    with pytest.raises(GridMismatch):
        sdd(prof(UNIT.points), prof(other.points, other))
    pts = UNIT.points.copy()
    pts[50] = np.nextafter(pts[50], 1.0)
    nudged = Grid("z", pts, "uniform")
    with pytest.raises(GridMismatch):
        sdd(prof(UNIT.points), prof(UNIT.points, nudged))
    with pytest.raises(GridMismatch):
        sdd(prof(UNIT.points), prof(UNIT.points, kind="ale"))


@settings(max_examples=60, deadline=None)
@given(
    a=st.lists(st.floats(-5, 5), min_size=6, max_size=6),
    b=st.lists(st.floats(-5, 5), min_size=6, max_size=6),
    c=st.floats(-100, 100),
    s=st.floats(-10, 10),
)
def test_sdd_properties(a, b, c, s):
    g = Grid("v", np.arange(6.0), "uniform")
    p, q = prof(a, g), prof(b, g)
    v = sdd(p, q).sdd
    assert v >= 0.0
    assert sdd(q, p).sdd == v
    assert sdd(prof(np.add(a, c), g), q).sdd == pytest.approx(v, abs=1e-9)
    scaled = sdd(prof(np.multiply(a, s), g), prof(np.multiply(b, s), g)).sdd
    assert scaled == pytest.approx(abs(s) * v, abs=1e-9)


def test_asdd_mean_of_three():
    g = {v: Grid(v, np.linspace(0, 1, 11), "uniform") for v in ("a", "b", "c")}
    z = np.linspace(0, 1, 11)
    unit_sd = float(np.std(z))
    base = [prof(z, g[v]) for v in "abc"]
    shifted = [prof(z + 1, g["a"]), prof(z * (1 + 0.3 / unit_sd), g["b"]), prof(z * (1 + 0.6 / unit_sd), g["c"])]
    r = asdd(base, shifted)
    assert [x.sdd for x in r.per_variable] == pytest.approx([0.0, 0.3, 0.6], abs=1e-12)
    assert r.asdd == pytest.approx(0.3, abs=1e-12)
    single = asdd([base[1]], {"b": shifted[1]})
    assert single.asdd == single.per_variable[0].sdd
    assert asdd(base, base).asdd == 0.0
    with pytest.raises(GridMismatch):
        asdd(base, shifted[:2])


# -- balanced accuracy -------------------------------------------------------------


def test_balanced_accuracy_examples():
    y = np.array([1] * 50 + [0] * 80)
    pred = np.array([1] * 40 + [0] * 10 + [0] * 60 + [1] * 20)
    assert balanced_accuracy(y, pred) == pytest.approx(0.775, abs=1e-15)
    assert balanced_accuracy(y, y) == 1.0
    assert balanced_accuracy(y, np.zeros_like(y)) == 0.5
    assert balanced_accuracy(1 - y, 1 - pred) == balanced_accuracy(y, pred)
    with pytest.raises(ValueError):
        balanced_accuracy([1, 1], [1, 0])


# -- Wilcoxon -------------------------------------------------------------------------


def test_wilcoxon_six_pairs_against_sign_flip_oracle():
    x = np.array([1.8, 0.4, 2.2, 1.1, 0.9, 3.0])
    y = np.array([1.0, 0.9, 1.0, 0.2, 0.9 - 0.5, 1.5])
    stat, p = wilcoxon_signed_rank(x, y)
    assert p == pytest.approx(sign_flip_p(x - y), abs=1e-15)
    ranks = midranks(np.abs(x - y))
    assert stat == min(ranks[x > y].sum(), ranks[x < y].sum())


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=1, max_size=10))
def test_wilcoxon_exact_matches_oracle_with_ties(diffs):
    d = np.array(diffs, dtype=float)
    stat, p = wilcoxon_signed_rank(d, np.zeros_like(d))
    if not d.any():
        assert (stat, p) == (0.0, 1.0)
        return
    assert p == pytest.approx(sign_flip_p(d), abs=1e-12)
    assert wilcoxon_signed_rank(np.zeros_like(d), d)[1] == p


def test_wilcoxon_exact_agrees_with_scipy_without_ties(rng):
    x, y = rng.standard_normal(12), rng.standard_normal(12)
    ref = stats.wilcoxon(x, y, method="exact")
    stat, p = wilcoxon_signed_rank(x, y)
    assert stat == ref.statistic
    assert p == pytest.approx(ref.pvalue, abs=1e-12)


def test_wilcoxon_normal_path_matches_scipy(rng):
    x = np.round(rng.standard_normal(40), 1)
    y = np.round(rng.standard_normal(40), 1)
    ref = stats.wilcoxon(x, y, method="approx", correction=False, zero_method="wilcox")
    stat, p = wilcoxon_signed_rank(x, y)
    assert stat == ref.statistic
    assert p == pytest.approx(ref.pvalue, rel=1e-9)


def test_wilcoxon_identical_inputs():
    assert wilcoxon_signed_rank([1.0, 2.0], [1.0, 2.0]) == (0.0, 1.0)
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1.0], [1.0, 2.0])


# -- FDR ------------------------------------------------------------------------------


def test_fdr_worked_example():
    np.testing.assert_allclose(fdr_adjust([0.01, 0.02, 0.03, 0.5]), [0.04, 0.04, 0.04, 0.5], atol=1e-15)
    assert fdr_adjust([0.3]).tolist() == [0.3]
    assert fdr_adjust([]).size == 0
    with pytest.raises(ValueError):
        fdr_adjust([1.2])


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=25))
def test_fdr_matches_direct_step_up(p):
    q = fdr_adjust(p)
    np.testing.assert_allclose(q, step_up_direct(p), atol=1e-12)
    assert (q >= np.asarray(p)).all() and (q <= 1).all()
    s = np.sort(p)
    assert (np.diff(fdr_adjust(s)) >= -1e-15).all()


# -- VI comparison ----------------------------------------------------------------------


def vi(values, names=None):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    names = names or tuple(f"v{j}" for j in range(values.shape[1]))
    return ImportanceVector(tuple(names), values, 0.1)


def test_compare_vi_identical_never_rejected():
    a = vi([0.1, 0.2, 0.3, 0.05, 0.4, 0.6])
    r = adjust_vi_tests([compare_vi(a, a)])[0]
    assert r.p_value == 1.0 and not r.rejected


def test_compare_vi_rescaled_matches_oracle():
    base = np.array([0.1, 0.2, 0.3, 0.05, 0.4, 0.6])
    r = compare_vi(vi(base), vi(2 * base))
    assert r.statistic == 0.0
    assert r.p_value == pytest.approx(sign_flip_p(-base), abs=1e-15)
    assert r.p_value == pytest.approx(2 / 64, abs=1e-15)


def test_compare_vi_low_power_and_guards():
    with pytest.warns(LowPowerWarning):
        r = compare_vi(vi([0.1, 0.2, 0.3]), vi([0.2, 0.1, 0.5]))
    assert r.low_power and r.n_pairs == 3
    with pytest.raises(ValueError):
        compare_vi(vi([0.1, 0.2], ("a", "b")), vi([0.1, 0.2], ("a", "c")))


def test_compare_vi_repeat_pairing():
    a = vi(np.arange(12.0).reshape(2, 6) / 10)
    b = vi(np.arange(12.0).reshape(2, 6) / 5)
    r = compare_vi(a, b, pairing="repeats")
    assert r.n_pairs == 11 + 1
    assert r.p_value == pytest.approx(sign_flip_p((a.raw - b.raw).ravel()), abs=1e-15)


def test_adjust_passes_failed_cells_through():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LowPowerWarning)
        a = compare_vi(vi([0.1, 0.2, 0.3, 0.4, 0.5, 0.7]), vi([0.3, 0.5, 0.6, 0.8, 0.9, 1.3]))
    out = adjust_vi_tests([a, None, a], alpha=0.05)
    assert out[1] is None
    assert out[0].adjusted_p == pytest.approx(a.p_value, abs=1e-15)
    assert out[0].rejected == (a.p_value < 0.05)
