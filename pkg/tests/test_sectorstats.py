import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from corrnet.sectorstats import (
    LinkStatus,
    P_FLOOR,
    StatsError,
    classify_link,
    decline_coincidence_test,
    index_linkage,
    link_density,
    link_density_report,
    merge_tstat,
    sector_members,
    self_clustering,
    sign_change_test,
    slope_trend_test,
    welch_counts,
    welch_samples,
)

from .conftest import MATERIALS, OIL, OTHER_FINANCE, REAL_ESTATE, TECH
from .nets import cross_pairs, network, within_pairs
from .oracles import scratch_welch

A = [f"a{i}" for i in range(4)]
B = [f"b{i}" for i in range(3)]


def test_link_density_counts():
    net = network({TECH: ["x", "y", "z"]}, [("x", "y"), ("y", "z")])
    d = link_density(net, ["x", "y", "z"], ["x", "y", "z"])
    assert d.density == pytest.approx(2 / 3) and d.n_pairs == 3


def test_link_density_saturated_and_undefined():
    ids = ["p", "q", "r", "s"]
    net = network({TECH: ids[:2], OIL: ids[2:]}, within_pairs(ids))
    assert link_density(net, ids[:2], ids[2:]).density == 1.0
    assert link_density(net, ids, ids).density == 1.0
    lone = link_density(net, ["p"], ["p"])
    assert lone.n_pairs == 0 and math.isnan(lone.density) and not lone.defined


def test_density_report_global():
    net = network({TECH: ["x", "y", "z"], OIL: ["u", "v"]}, [("x", "y"), ("u", "x")])
    rep = link_density_report(net, sector_members(net))
    assert rep.global_density == pytest.approx(2 / 10)
    assert rep.within[TECH].density == pytest.approx(1 / 3)
    pair = (TECH, OIL) if (TECH, OIL) in rep.between else (OIL, TECH)
    assert rep.between[pair].n_edges == 1


def test_merge_hand_example():
    # within: 5 linked of 6 pairs (3 in A + 3 in B); between: 1 of 9
    a, b = ["a0", "a1", "a2"], ["b0", "b1", "b2"]
    edges = within_pairs(a) + within_pairs(b)[:2] + [("a0", "b0")]
    net = network({REAL_ESTATE: a, OTHER_FINANCE: b}, edges)
    m = merge_tstat(net, REAL_ESTATE, OTHER_FINANCE)
    assert (m.n_within, m.n_between) == (6, 9)
    assert m.t == pytest.approx(3.6055512754639896, abs=1e-3)
    assert not m.merged
    assert m.within_sample == "pooled"


def test_merge_equal_densities():
    a, b = ["a0", "a1", "a2"], ["b0", "b1", "b2"]
    # within 2/6, between 3/9 -> equal
    edges = [("a0", "a1"), ("b0", "b1"), ("a0", "b0"), ("a1", "b1"), ("a2", "b2")]
    m = merge_tstat(network({REAL_ESTATE: a, OTHER_FINANCE: b}, edges), REAL_ESTATE, OTHER_FINANCE)
    assert m.t == 0.0 and m.p_one_sided == pytest.approx(0.5) and m.merged


def test_merge_degenerate_flags():
    a = [f"a{i}" for i in range(4)]
    b = [f"b{i}" for i in range(3)]
    # within 6 + 3 = 9 pairs, all linked; between 12 pairs, none linked
    net = network({REAL_ESTATE: a, OTHER_FINANCE: b}, within_pairs(a) + within_pairs(b))
    m = merge_tstat(net, REAL_ESTATE, OTHER_FINANCE)
    assert m.degenerate and math.isnan(m.t) and not m.merged


def test_merge_symmetric_and_needs_members():
    rng = np.random.default_rng(4)
    ids = A + B
    edges = [p for p in within_pairs(ids) if rng.random() < 0.4]
    net = network({TECH: A, OIL: B}, edges)
    assert merge_tstat(net, TECH, OIL).t == merge_tstat(net, OIL, TECH).t
    small = network({TECH: ["x"], OIL: B}, [])
    with pytest.raises(StatsError):
        merge_tstat(small, TECH, OIL)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_merge_invariant_under_relabeling(seed):
    rng = np.random.default_rng(seed)
    ids = A + B
    edges = [p for p in within_pairs(ids) if rng.random() < 0.5]
    net = network({TECH: A, OIL: B}, edges)
    perm = dict(zip(ids, rng.permutation([f"z{i}" for i in range(len(ids))])))
    renamed = network(
        {TECH: [perm[x] for x in A], OIL: [perm[x] for x in B]}, [(perm[x], perm[y]) for x, y in edges]
    )
    m1, m2 = merge_tstat(net, TECH, OIL), merge_tstat(renamed, TECH, OIL)
    assert (m1.t == m2.t) or (math.isnan(m1.t) and math.isnan(m2.t))


def test_welch_counts_matches_scipy():
    for k1, n1, k2, n2 in [(5, 6, 1, 9), (3, 40, 10, 31), (20, 30, 2, 50)]:
        x1 = [1.0] * k1 + [0.0] * (n1 - k1)
        x2 = [1.0] * k2 + [0.0] * (n2 - k2)
        ref = stats.ttest_ind(x1, x2, equal_var=False, alternative="greater")
        got = welch_counts(k1, n1, k2, n2)
        assert got.t == pytest.approx(ref.statistic, abs=1e-12)
        assert got.p_greater == pytest.approx(ref.pvalue, rel=1e-9)
        t, p = scratch_welch(x1, x2)
        assert got.t == pytest.approx(t, abs=1e-12)


def test_p_floor():
    assert welch_counts(999, 1000, 1, 1000).p_greater >= P_FLOOR
    tiny = np.tile([0.0, 1e-9], 50)
    assert welch_samples(10.0 + tiny, tiny).p_greater == P_FLOOR


def test_self_clustering_min():
    c_ids = ["c0", "c1", "c2"]
    ids = A + B + c_ids
    edges = within_pairs(A)[:4] + [("a0", "b0")] + cross_pairs(A, c_ids)[:3] + within_pairs(B)[:1]
    net = network({TECH: A, OIL: B, MATERIALS: c_ids}, edges)
    res = self_clustering(net, TECH, [OIL, MATERIALS])
    assert res.t_min == min(res.per_sector_t.values())
    assert res.argmin_sector == MATERIALS
    single = self_clustering(net, TECH, [OIL])
    assert single.t_min == single.per_sector_t[OIL]
    with pytest.raises(StatsError):
        self_clustering(net, TECH, [])


def test_self_clustering_positive_for_dense_sector():
    a = [f"a{i}" for i in range(5)]
    b = [f"b{i}" for i in range(5)]
    c = [f"c{i}" for i in range(4)]
    sparse = [("b0", "b1"), ("a0", "b2"), ("c0", "c1"), ("a1", "c2")]
    net = network({TECH: a, OIL: b, MATERIALS: c}, within_pairs(a)[:9] + sparse)
    res = self_clustering(net, TECH, [OIL, MATERIALS])
    # oracle: direct Welch on 9/10 within vs 1/25 and 1/20 between
    t_b, _ = scratch_welch([1] * 9 + [0], [1] + [0] * 24)
    t_c, _ = scratch_welch([1] * 9 + [0], [1] + [0] * 19)
    assert res.per_sector_t[OIL] == pytest.approx(t_b)
    assert res.per_sector_t[MATERIALS] == pytest.approx(t_c)
    assert res.t_min == pytest.approx(min(t_b, t_c)) and res.t_min > 0


def test_self_clustering_all_undefined():
    net = network({TECH: A, OIL: B}, [])
    res = self_clustering(net, TECH, [OIL])
    assert math.isnan(res.t_min) and not res.defined and res.undefined == (OIL,)


def _index_net(n_members, n_linked, p0_edges=0, n_filler=0):
    """Index linked to ``n_linked`` of ``n_members``; extra filler nodes tune the graph density."""
    members = [f"m{i:02d}" for i in range(n_members)]
    filler = [f"f{i:02d}" for i in range(n_filler)]
    edges = [("IDX", m) for m in members[:n_linked]]
    extra = within_pairs(filler)[:p0_edges]
    return network({TECH: members, OIL: filler} if filler else {TECH: members}, edges + extra, ["IDX"])


def test_index_linkage_hand_example():
    net = _index_net(16, 8)
    p0 = net.global_density
    res = index_linkage(net, "IDX", TECH)
    expected = (0.5 - p0) / math.sqrt((0.25 * 16 / 15) / 16)
    assert res.t == pytest.approx(expected, rel=1e-12)
    # the hand value at p0 = 0.0625 is 3.389 -> Indeterminate
    assert (0.5 - 0.0625) / math.sqrt((0.25 * 16 / 15) / 16) == pytest.approx(3.38886042793149)
    assert classify_link(3.38886042793149) is LinkStatus.INDETERMINATE


def test_index_unlinked_when_no_links():
    net = _index_net(6, 0, p0_edges=3, n_filler=4)
    res = index_linkage(net, "IDX", TECH)
    assert res.status is LinkStatus.UNLINKED and res.degenerate


def test_index_all_linked_is_linked():
    net = _index_net(5, 5)
    res = index_linkage(net, "IDX", TECH)
    assert res.status is LinkStatus.LINKED and res.degenerate


def test_classify_strict_thresholds():
    assert classify_link(4.0) is LinkStatus.INDETERMINATE
    assert classify_link(2.0) is LinkStatus.INDETERMINATE
    assert classify_link(np.nextafter(4.0, 5)) is LinkStatus.LINKED
    assert classify_link(np.nextafter(2.0, 0)) is LinkStatus.UNLINKED


def test_slope_exact_line():
    r = slope_trend_test([1, 2, 3, 4])
    assert r.slope == pytest.approx(1.0, rel=1e-12)
    assert r.p == P_FLOOR and math.isinf(r.t_slope)


def test_slope_constant():
    r = slope_trend_test([2, 2, 2])
    assert (r.slope, r.p) == (0.0, 1.0)


def test_slope_against_closed_form_and_scipy():
    r = slope_trend_test([0, 1, 0, 1])
    assert r.slope == pytest.approx(0.2, abs=1e-15)
    ref = stats.linregress([0, 1, 2, 3], [0, 1, 0, 1])
    assert r.p == pytest.approx(ref.pvalue, rel=1e-9)
    rng = np.random.default_rng(2)
    y = 0.3 * np.arange(20) + rng.standard_normal(20)
    r = slope_trend_test(y)
    ref = stats.linregress(np.arange(20), y)
    assert r.slope == pytest.approx(ref.slope, rel=1e-12)
    assert r.p == pytest.approx(ref.pvalue, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(-100, 100), st.floats(-100, 100), st.integers(3, 30))
def test_slope_recovers_exact_lines(a, b, n):
    y = a + b * np.arange(n)
    r = slope_trend_test(y)
    assert r.slope == pytest.approx(b, rel=1e-12, abs=1e-9)


def test_slope_positions_and_errors():
    r = slope_trend_test([0.0, 2.0, 3.0], positions=[0, 2, 3])
    assert r.slope == pytest.approx(1.0)
    with pytest.raises(StatsError):
        slope_trend_test([1.0, 2.0])


def _quarters(n, start="2004-01-01"):
    return np.array([np.datetime64(start, "M") + 3 * i for i in range(n)]).astype("datetime64[D]")


def test_sign_change_detected():
    rng = np.random.default_rng(0)
    dates = _quarters(8)  # 2004Q1 .. 2005Q4
    vals = np.r_[np.ones(4), -np.ones(4)] + rng.normal(0, 0.01, 8)
    changed, p = sign_change_test(dates, vals, 2005)
    assert changed and p < 1e-6
    # oracle: one-sample t-tests with scipy
    p_pre = stats.ttest_1samp(vals[:4], 0, alternative="greater").pvalue
    p_cur = stats.ttest_1samp(vals[4:], 0, alternative="less").pvalue
    assert p == pytest.approx(max(p_pre, p_cur), rel=1e-9)


def test_sign_change_absent():
    dates = _quarters(8)
    same, _ = sign_change_test(dates, [1, 1.1, 0.9, 1, 1.2, 0.8, 1, 1.1], 2005)
    assert not same
    straddle, _ = sign_change_test(dates, [1, 1.1, 0.9, 1, 0.5, -0.5, 0.4, -0.4], 2005)
    assert not straddle
    with pytest.raises(StatsError):
        sign_change_test(dates[:5], [1, 1, 1, 1, -1], 2005)


def test_decline_coincidence_constructed():
    rng = np.random.default_rng(1)
    corr = np.r_[0.5 + rng.normal(0, 0.02, 8), 0.1 + rng.normal(0, 0.02, 8)]
    ret = np.r_[-np.ones(8), np.ones(8)]
    res = decline_coincidence_test(corr, ret)
    assert res.p_one_sided < 0.01
    t, p = scratch_welch(list(corr[:8]), list(corr[8:]))
    assert res.t == pytest.approx(t) and res.p_one_sided == pytest.approx(p, rel=1e-9)


def test_decline_coincidence_null_average():
    rng = np.random.default_rng(2)
    ps = []
    for _ in range(400):
        corr = rng.normal(0.3, 0.05, 16)
        ret = np.r_[-np.ones(8), np.ones(8)]
        ps.append(decline_coincidence_test(corr, ret).p_one_sided)
    assert np.mean(ps) == pytest.approx(0.5, abs=0.05)


def test_decline_coincidence_group_errors():
    with pytest.raises(StatsError, match="decline"):
        decline_coincidence_test([0.1] * 6, [1.0] * 6)
    with pytest.raises(StatsError, match="rise"):
        decline_coincidence_test([0.1] * 6, [-1.0] * 6)
