"""Link-density statistics on threshold networks and trend tests on their series.

Every density comparison is a Welch two-sample t-test on 0/1 link
indicators, with Welch-Satterthwaite degrees of freedom. Link indicators
inside one network are treated as independent draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy import stats

from .corrwin import Window, block_pairs
from .errors import CorrnetError
from .ingest import AssetKind, SectorLabel
from .network import CorrelationNetwork

P_FLOOR = 1e-300
ALPHA_MERGE = 0.05
LINKED_ABOVE = 4.0
UNLINKED_BELOW = 2.0


class StatsError(CorrnetError, ValueError):
    module = "sectorstats"


def floor_p(p: float) -> float:
    if math.isnan(p):
        return p
    return max(float(p), P_FLOOR)


class WelchResult(NamedTuple):
    t: float
    df: float
    p_greater: float
    degenerate: bool


def welch_from_moments(m1, v1, n1, m2, v2, n2) -> WelchResult:
    """One-sided (``mean1 > mean2``) Welch test from means and unbiased variances.

    When both variance terms vanish the statistic is undefined: ``t``,
    ``df`` and ``p`` are NaN and ``degenerate`` is set.
    """
    if n1 < 2 or n2 < 2:
        return WelchResult(math.nan, math.nan, math.nan, True)
    a, b = v1 / n1, v2 / n2
    se2 = a + b
    if se2 == 0:
        return WelchResult(math.nan, math.nan, math.nan, True)
    t = (m1 - m2) / math.sqrt(se2)
    df = se2 * se2 / (a * a / (n1 - 1) + b * b / (n2 - 1))
    return WelchResult(t, df, floor_p(stats.t.sf(t, df)), False)


def welch_counts(k1: int, n1: int, k2: int, n2: int) -> WelchResult:
    """Welch test on Bernoulli samples given as ``k`` successes out of ``n``."""
    def moments(k, n):
        p = k / n if n else math.nan
        v = p * (1 - p) * n / (n - 1) if n > 1 else math.nan
        return p, v

    p1, v1 = moments(k1, n1)
    p2, v2 = moments(k2, n2)
    return welch_from_moments(p1, v1, n1, p2, v2, n2)


def welch_samples(x1, x2) -> WelchResult:
    x1, x2 = np.asarray(x1, float), np.asarray(x2, float)
    v1 = x1.var(ddof=1) if len(x1) > 1 else math.nan
    v2 = x2.var(ddof=1) if len(x2) > 1 else math.nan
    return welch_from_moments(x1.mean(), v1, len(x1), x2.mean(), v2, len(x2))


# -- densities --------------------------------------------------------------


class Density(NamedTuple):
    density: float
    n_pairs: int
    n_edges: int

    @property
    def defined(self) -> bool:
        return self.n_pairs > 0


def _count(net: CorrelationNetwork, mask: np.ndarray) -> tuple[int, int]:
    designated = mask & net.defined
    return int((designated & net.adjacency).sum()), int(designated.sum())


def link_density(net: CorrelationNetwork, group_a, group_b) -> Density:
    """Edges over designated defined pairs; NaN with ``n_pairs == 0`` if none."""
    k, n = _count(net, block_pairs(net.asset_ids, group_a, group_b))
    return Density(k / n if n else math.nan, n, k)


def sector_members(
    net: CorrelationNetwork, coarse: bool = False
) -> dict[SectorLabel, list[str]]:
    """Stock ids grouped by sector label; ``coarse`` groups by major sector only."""
    out: dict[SectorLabel, list[str]] = {}
    for r in net.nodes:
        if r.kind is AssetKind.INDEX or r.sector is None:
            continue
        label = r.sector.coarse() if coarse else r.sector
        out.setdefault(label, []).append(r.asset_id)
    return dict(sorted(out.items()))


@dataclass
class LinkDensityReport:
    window: Window
    within: dict[SectorLabel, Density]
    between: dict[tuple[SectorLabel, SectorLabel], Density]
    global_density: float


def link_density_report(net: CorrelationNetwork, members: Mapping[SectorLabel, list[str]]) -> LinkDensityReport:
    within = {s: link_density(net, m, m) for s, m in members.items()}
    labels = list(members)
    between = {
        (a, b): link_density(net, members[a], members[b])
        for i, a in enumerate(labels)
        for b in labels[i + 1 :]
    }
    return LinkDensityReport(net.window, within, between, net.global_density)


# -- merging / self-clustering ----------------------------------------------


@dataclass
class MergeTestResult:
    sectors: tuple[SectorLabel, SectorLabel]
    t: float
    p_one_sided: float
    merged: bool
    n_within: int
    n_between: int
    density_within: float
    density_between: float
    df: float = math.nan
    degenerate: bool = False
    within_sample: str = "pooled"


def merge_tstat(
    net: CorrelationNetwork,
    a: SectorLabel,
    b: SectorLabel,
    alpha_merge: float = ALPHA_MERGE,
    members: Mapping[SectorLabel, list[str]] | None = None,
) -> MergeTestResult:
    """Test whether two sectors' link densities still separate them.

    The within sample pools the link indicators of the within-``a`` and
    within-``b`` pairs; the between sample covers every ``a x b`` pair. A
    small one-sided p (within denser than between) means the sectors are
    distinct; they count as merged when ``p >= alpha_merge``. If both
    samples have zero variance, the densities are compared directly and
    ``degenerate`` is set.
    """
    members = members if members is not None else sector_members(net)
    ma, mb = _members(members, a), _members(members, b)
    if len(ma) < 2 or len(mb) < 2:
        raise StatsError(f"sectors {a} and {b} need at least 2 members each")
    ka, na = _count(net, block_pairs(net.asset_ids, ma, ma))
    kb, nb = _count(net, block_pairs(net.asset_ids, mb, mb))
    kx, nx = _count(net, block_pairs(net.asset_ids, ma, mb))
    if nx < 1:
        raise StatsError(f"no defined pairs between {a} and {b}")
    k1, n1 = ka + kb, na + nb
    res = welch_counts(k1, n1, kx, nx)
    d1 = k1 / n1 if n1 else math.nan
    d2 = kx / nx
    if res.degenerate:
        merged = not d1 > d2
    else:
        merged = res.p_greater >= alpha_merge
    return MergeTestResult((a, b), res.t, res.p_greater, merged, n1, nx, d1, d2, res.df, res.degenerate)


@dataclass
class SelfClusterResult:
    sector: SectorLabel
    t_min: float
    argmin_sector: SectorLabel | None
    per_sector_t: dict[SectorLabel, float] = field(default_factory=dict)
    undefined: tuple[SectorLabel, ...] = ()

    @property
    def defined(self) -> bool:
        return self.argmin_sector is not None


def self_clustering(
    net: CorrelationNetwork,
    a: SectorLabel,
    others: Sequence[SectorLabel],
    members: Mapping[SectorLabel, list[str]] | None = None,
) -> SelfClusterResult:
    """Minimum over other sectors of the within-``a`` vs ``a x b`` density t-statistic."""
    if not others:
        raise StatsError("self-clustering needs at least one other sector")
    members = members if members is not None else sector_members(net)
    ma = _members(members, a)
    kw, nw = _count(net, block_pairs(net.asset_ids, ma, ma))
    per = {}
    undefined = []
    for b in others:
        kx, nx = _count(net, block_pairs(net.asset_ids, ma, _members(members, b)))
        res = welch_counts(kw, nw, kx, nx)
        per[b] = res.t
        if res.degenerate:
            undefined.append(b)
    finite = {b: t for b, t in per.items() if not math.isnan(t)}
    if not finite:
        return SelfClusterResult(a, math.nan, None, per, tuple(undefined))
    arg = min(finite, key=lambda b: (finite[b], b))
    return SelfClusterResult(a, finite[arg], arg, per, tuple(undefined))


def _members(members, label):
    try:
        return members[label]
    except KeyError:
        raise StatsError(f"sector {label} has no members in this network") from None


# -- index linkage ----------------------------------------------------------


class LinkStatus(str, Enum):
    LINKED = "Linked"
    UNLINKED = "Unlinked"
    INDETERMINATE = "Indeterminate"


def classify_link(t: float) -> LinkStatus:
    """Strict thresholds: linked above 4, unlinked below 2."""
    if t > LINKED_ABOVE:
        return LinkStatus.LINKED
    if t < UNLINKED_BELOW:
        return LinkStatus.UNLINKED
    return LinkStatus.INDETERMINATE


@dataclass
class IndexLinkResult:
    index: str
    sector: SectorLabel
    t: float
    status: LinkStatus
    link_fraction: float
    base_density: float
    n: int
    degenerate: bool = False


def index_linkage(
    net: CorrelationNetwork,
    index: str,
    sector: SectorLabel,
    members: Mapping[SectorLabel, list[str]] | None = None,
) -> IndexLinkResult:
    """One-sample t of the index's link indicators to a sector vs the graph density.

    With zero sample variance the statistic is undefined; the status then
    follows the raw comparison of link fraction and graph density and
    ``degenerate`` is set.
    """
    ids = net.asset_ids
    if index not in ids:
        raise StatsError(f"index node {index!r} is not in the network")
    members = members if members is not None else sector_members(net)
    ms = [m for m in _members(members, sector) if m != index]
    if len(ms) < 2:
        raise StatsError(f"sector {sector} needs at least 2 members")
    i = ids.index(index)
    cols = np.array([ids.index(m) for m in ms])
    ok = net.defined[i, cols]
    x = net.adjacency[i, cols][ok].astype(float)
    n = len(x)
    p0 = net.global_density
    if n < 2:
        return IndexLinkResult(index, sector, math.nan, LinkStatus.INDETERMINATE, math.nan, p0, n, True)
    p_hat = x.mean()
    s2 = x.var(ddof=1)
    if s2 == 0:
        if p_hat > p0:
            status = LinkStatus.LINKED
        elif p_hat < p0:
            status = LinkStatus.UNLINKED
        else:
            status = LinkStatus.INDETERMINATE
        return IndexLinkResult(index, sector, math.nan, status, p_hat, p0, n, True)
    t = (p_hat - p0) / math.sqrt(s2 / n)
    return IndexLinkResult(index, sector, t, classify_link(t), p_hat, p0, n)


# -- series tests -----------------------------------------------------------


@dataclass
class TrendTestResult:
    series_name: str
    slope: float
    t_slope: float
    p: float
    n: int
    intercept: float = math.nan
    sign_change_year: int | None = None
    p_sign: float = math.nan


def slope_trend_test(values: Sequence[float], name: str = "", positions=None) -> TrendTestResult:
    """OLS of the series on its quarter index with a two-sided slope t-test.

    ``positions`` gives each value's quarter index (default 0, 1, ...), so
    series with skipped quarters keep their spacing. A constant series gives
    slope 0 and p = 1. An exact line (zero residuals) gives an infinite t and
    the floored p.
    """
    y = np.asarray(values, dtype=float)
    n = len(y)
    if n < 3:
        raise StatsError(f"trend test needs at least 3 points, got {n}")
    if np.isnan(y).any():
        raise StatsError(f"series {name!r} contains undefined values")
    x = np.arange(n, dtype=float) if positions is None else np.asarray(positions, dtype=float)
    if len(x) != n:
        raise StatsError("positions and values differ in length")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    ym = y.mean()
    yc = y - ym
    syy = float(yc @ yc)
    slope = float(xc @ yc) / sxx
    intercept = ym - slope * x.mean()
    if syy == 0:
        return TrendTestResult(name, 0.0, 0.0, 1.0, n, ym)
    resid = yc - slope * xc
    ssr = float(resid @ resid)
    if ssr <= (64 * np.finfo(float).eps) ** 2 * syy:
        return TrendTestResult(name, slope, math.copysign(math.inf, slope), P_FLOOR, n, intercept)
    se = math.sqrt(ssr / (n - 2) / sxx)
    t = slope / se
    p = 2 * stats.t.sf(abs(t), n - 2)
    return TrendTestResult(name, slope, t, floor_p(p), n, intercept)


def _one_sided_mean_test(x: np.ndarray, sign: float) -> float:
    """p-value that ``mean(x)`` has the given sign (one-sample t, H0: mean = 0)."""
    m = x.mean()
    s = x.std(ddof=1)
    if s == 0:
        return P_FLOOR if m * sign > 0 else 1.0
    t = sign * m / (s / math.sqrt(len(x)))
    return floor_p(stats.t.sf(t, len(x) - 1))


def sign_change_test(dates, values, year: int, alpha: float = 0.05) -> tuple[bool, float]:
    """Does the series change sign in ``year`` relative to the earlier points?

    The sign of the pre-year mean is tested with a one-sided one-sample
    t-test, and the year's points are tested for the opposite sign. The
    change holds when both p-values are below ``alpha``; the reported
    ``p_sign`` is the larger of the two.
    """
    years = np.asarray(dates, dtype="datetime64[D]").astype("datetime64[Y]").astype(int) + 1970
    y = np.asarray(values, dtype=float)
    ok = ~np.isnan(y)
    pre, cur = y[ok & (years < year)], y[ok & (years == year)]
    if len(pre) < 4 or len(cur) < 2:
        raise StatsError(
            f"sign change test for {year} needs >= 4 earlier and >= 2 in-year points, "
            f"got {len(pre)} and {len(cur)}"
        )
    pre_sign = math.copysign(1.0, pre.mean())
    if pre.mean() == 0:
        return False, 1.0
    p_pre = _one_sided_mean_test(pre, pre_sign)
    p_cur = _one_sided_mean_test(cur, -pre_sign)
    p = max(p_pre, p_cur)
    return bool(p_pre < alpha and p_cur < alpha), p


class DeclineTestResult(NamedTuple):
    t: float
    p_one_sided: float
    n_decline: int
    n_rise: int
    mean_decline: float
    mean_rise: float


def decline_coincidence_test(avg_corr, market_return, min_group: int = 4) -> DeclineTestResult:
    """Welch test that correlations are higher in quarters with negative market return.

    Quarters with zero or undefined market return, or undefined correlation,
    are left out.
    """
    c = np.asarray(avg_corr, dtype=float)
    r = np.asarray(market_return, dtype=float)
    if c.shape != r.shape:
        raise StatsError("correlation and market return series are not aligned")
    ok = ~np.isnan(c) & ~np.isnan(r)
    dec, rise = c[ok & (r < 0)], c[ok & (r > 0)]
    for name, grp in (("decline", dec), ("rise", rise)):
        if len(grp) < min_group:
            raise StatsError(f"{name} group has {len(grp)} quarters; need at least {min_group}")
    res = welch_samples(dec, rise)
    return DeclineTestResult(res.t, res.p_greater, len(dec), len(rise), float(dec.mean()), float(rise.mean()))


def sector_pairs(labels: Iterable[SectorLabel]) -> list[tuple[SectorLabel, SectorLabel]]:
    labels = sorted(labels)
    return [(a, b) for i, a in enumerate(labels) for b in labels[i + 1 :]]
