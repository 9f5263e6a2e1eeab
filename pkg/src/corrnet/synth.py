"""Synthetic factor-model markets with known correlation structure.

Returns follow ``r_i(t) = bm * f_m(t) + bs(s) * f_s(t) + sigma * e_i(t)``.

Random streams
--------------
Each stream is a PCG64 generator seeded from ``SeedSequence(seed,
spawn_key=key)``: key ``(0,)`` drives the market factor, ``(1, s)`` the
factor of sector ``s`` (position in the sector list), ``(2, i)`` the noise of asset
``i``. Uniform doubles from a stream become standard normals by the
Box-Muller transform, ``sqrt(-2 ln u1) * (cos 2 pi u2, sin 2 pi u2)`` with
``u1 = 1 - U`` in ``(0, 1]``, both outputs used in order. The streams do not
depend on how generation is split across threads.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import CorrnetError
from .ingest import AssetRecord, PricePanel, ReturnPanel, SectorLabel, parse_date

GENERATOR_VERSION = "pcg64-boxmuller-1"
DEFAULT_START = "2000-01-03"


class SynthError(CorrnetError, ValueError):
    module = "synth"


def normal_stream(seed: int, key: tuple[int, ...], n: int) -> np.ndarray:
    """``n`` standard normals from the stream ``(seed, key)``."""
    bits = np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key))
    u = np.random.Generator(bits).random(2 * ((n + 1) // 2))
    u1, u2 = 1.0 - u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(len(u))
    z[0::2] = r * np.cos(2 * np.pi * u2)
    z[1::2] = r * np.sin(2 * np.pi * u2)
    return z[:n]


@dataclass(frozen=True)
class SectorSpec:
    label: SectorLabel
    count: int
    beta: float


@dataclass(frozen=True)
class FactorModelSpec:
    sectors: tuple[SectorSpec, ...]
    beta_market: float = 1.0
    sigma_idio: float = 1.0
    dates: int = 1000
    seed: int = 0
    start: np.datetime64 = np.datetime64(DEFAULT_START, "D")

    def __post_init__(self):
        object.__setattr__(self, "sectors", tuple(self.sectors))
        object.__setattr__(self, "start", np.datetime64(self.start, "D"))
        if not self.sectors:
            raise SynthError("at least one sector is required")
        labels = [s.label for s in self.sectors]
        if len(set(labels)) != len(labels):
            raise SynthError("sector labels must be unique")
        for s in self.sectors:
            if s.count < 2:
                raise SynthError(f"sector {s.label} needs at least 2 members, got {s.count}")
            if not math.isfinite(s.beta):
                raise SynthError(f"sector {s.label} loading is not finite")
        if not math.isfinite(self.beta_market):
            raise SynthError("market loading is not finite")
        if not (self.sigma_idio > 0 and math.isfinite(self.sigma_idio)):
            raise SynthError("sigma_idio must be positive")
        if self.dates < 2:
            raise SynthError("need at least 2 dates")

    def calendar(self) -> np.ndarray:
        """Business days starting on (or rolled forward to) ``start``."""
        first = np.busday_offset(self.start, 0, roll="forward")
        return np.busday_offset(first, np.arange(self.dates), roll="forward").astype("datetime64[D]")

    def asset_records(self) -> tuple[AssetRecord, ...]:
        out = []
        for s in self.sectors:
            stem = s.label.minor.value if s.label.minor.value != "None" else s.label.major.value
            out.extend(AssetRecord(f"{stem}_{k:03d}", s.label) for k in range(1, s.count + 1))
        return tuple(out)

    def sector_of_asset(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.sectors)), [s.count for s in self.sectors])

    def index_of(self, label: SectorLabel) -> int:
        for k, s in enumerate(self.sectors):
            if s.label == label:
                return k
        raise SynthError(f"sector {label} is not in the model")


class MergeSectors(NamedTuple):
    a: SectorLabel
    b: SectorLabel


class SetMarketBeta(NamedTuple):
    value: float


class SetSectorBeta(NamedTuple):
    sector: SectorLabel
    value: float


class SetMarketDrift(NamedTuple):
    value: float


class ShockDay(NamedTuple):
    magnitude: float


Effect = Union[MergeSectors, SetMarketBeta, SetSectorBeta, SetMarketDrift, ShockDay]


@dataclass(frozen=True)
class RegimeSchedule:
    events: tuple[tuple[np.datetime64, Effect], ...] = field(default=())

    def __post_init__(self):
        evs = tuple((np.datetime64(d, "D"), e) for d, e in self.events)
        # stable by date so same-day events apply in listed order
        object.__setattr__(self, "events", tuple(sorted(evs, key=lambda x: x[0])))


def generate_returns(spec: FactorModelSpec, schedule: RegimeSchedule = RegimeSchedule()) -> ReturnPanel:
    """Simulate a return panel; identical inputs give bit-identical output.

    Schedule effects hold from their date onward (shock days only on their
    date). ``MergeSectors(a, b)`` makes ``b``'s members load on ``a``'s
    factor; merges chain transitively.
    """
    dates = spec.calendar()
    T = len(dates)
    n_sec = len(spec.sectors)
    sec = spec.sector_of_asset()
    N = len(sec)
    for d, _ in schedule.events:
        if d < dates[0] or d > dates[-1]:
            raise SynthError(f"event date {d} outside panel {dates[0]}..{dates[-1]}")

    f_m = normal_stream(spec.seed, (0,), T)
    f_s = np.stack([normal_stream(spec.seed, (1, k), T) for k in range(n_sec)], axis=1)
    eps = np.stack([normal_stream(spec.seed, (2, i), T) for i in range(N)], axis=1)

    # per-date regime state, filled segment by segment
    bm = np.full(T, float(spec.beta_market))
    drift = np.zeros(T)
    bs = np.tile(np.array([s.beta for s in spec.sectors], dtype=float), (T, 1))
    factor_of = np.tile(np.arange(n_sec), (T, 1))
    shock = np.zeros(T)
    parent = list(range(n_sec))

    def root(k):
        while parent[k] != k:
            k = parent[k]
        return k

    for d, effect in schedule.events:
        t0 = int(np.searchsorted(dates, d, side="left"))
        if isinstance(effect, ShockDay):
            if t0 < T and dates[t0] == d:
                shock[t0] += effect.magnitude
            else:
                raise SynthError(f"shock date {d} is not a trading day")
        elif isinstance(effect, SetMarketBeta):
            bm[t0:] = effect.value
        elif isinstance(effect, SetMarketDrift):
            drift[t0:] = effect.value
        elif isinstance(effect, SetSectorBeta):
            bs[t0:, spec.index_of(effect.sector)] = effect.value
        elif isinstance(effect, MergeSectors):
            ra, rb = root(spec.index_of(effect.a)), root(spec.index_of(effect.b))
            if ra != rb:
                parent[rb] = ra
            factor_of[t0:] = [root(k) for k in range(n_sec)]
        else:
            raise SynthError(f"unknown schedule effect {effect!r}")

    market = (bm * (f_m + drift))[:, None]
    sector_factor = np.take_along_axis(f_s, factor_of[:, sec], axis=1)
    r = market + bs[:, sec] * sector_factor + spec.sigma_idio * eps + shock[:, None]
    return ReturnPanel(dates, r, spec.asset_records())


def analytic_correlation(spec: FactorModelSpec, i, j) -> float:
    """Population correlation of assets ``i`` and ``j`` under the static model.

    ``i`` and ``j`` are asset ids or positions.
    """
    ids = [a.asset_id for a in spec.asset_records()]
    i = ids.index(i) if isinstance(i, str) else int(i)
    j = ids.index(j) if isinstance(j, str) else int(j)
    if i == j:
        raise SynthError("analytic correlation needs two distinct assets")
    sec = spec.sector_of_asset()
    bi, bj = spec.sectors[sec[i]].beta, spec.sectors[sec[j]].beta
    bm2, s2 = spec.beta_market**2, spec.sigma_idio**2
    shared = bi * bj if sec[i] == sec[j] else 0.0
    return (bm2 + shared) / math.sqrt((bm2 + bi * bi + s2) * (bm2 + bj * bj + s2))


def analytic_matrix(spec: FactorModelSpec) -> np.ndarray:
    n = sum(s.count for s in spec.sectors)
    out = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = analytic_correlation(spec, i, j)
    return out


def inject_shock_days(panel: ReturnPanel, dates: Sequence, magnitude: float) -> ReturnPanel:
    """Add ``magnitude`` to every present return on each listed date."""
    r = panel.returns.copy()
    for d in dates:
        d = np.datetime64(d, "D")
        t = int(np.searchsorted(panel.dates, d))
        if t >= len(panel.dates) or panel.dates[t] != d:
            raise SynthError(f"shock date {d} is not in the panel")
        r[t] += magnitude
    return ReturnPanel(panel.dates, r, panel.assets)


def returns_to_prices(panel: ReturnPanel, base: float = 100.0) -> PricePanel:
    """Price paths starting at ``base`` one business day before the first return."""
    first = np.busday_offset(panel.dates[0], -1, roll="backward").astype("datetime64[D]")
    dates = np.concatenate([[first], panel.dates])
    cum = np.vstack([np.zeros(len(panel.assets)), np.cumsum(panel.returns, axis=0)])
    return PricePanel(dates, base * np.exp(cum), panel.assets)


# -- config -----------------------------------------------------------------

_EFFECTS = {
    "MergeSectors": lambda args: MergeSectors(SectorLabel.parse(args[0]), SectorLabel.parse(args[1])),
    "SetMarketBeta": lambda args: SetMarketBeta(float(args[0])),
    "SetSectorBeta": lambda args: SetSectorBeta(SectorLabel.parse(args[0]), float(args[1])),
    "SetMarketDrift": lambda args: SetMarketDrift(float(args[0])),
    "ShockDay": lambda args: ShockDay(float(args[0])),
}


def parse_event(line: str):
    parts = line.split()
    if len(parts) < 2 or parts[1] not in _EFFECTS:
        raise SynthError(f"bad schedule event {line!r}")
    try:
        return parse_date(parts[0]), _EFFECTS[parts[1]](parts[2:])
    except (IndexError, ValueError) as exc:
        raise SynthError(f"bad schedule event {line!r}: {exc}") from exc


def load_synth_config(path, seed: int | None = None) -> tuple[FactorModelSpec, RegimeSchedule]:
    """Read a synthetic-market INI file.

    Schema::

        [model]
        seed = 7
        dates = 1000
        start = 2003-01-01
        beta_market = 1.0
        sigma_idio = 1.0

        [sectors]
        # label = member count, sector loading
        Finance/RealEstate = 10, 1.0
        Technology = 12, 0.8

        [schedule]
        events =
            2004-01-02 MergeSectors Finance/RealEstate Finance/OtherFinance
            2004-06-01 SetMarketBeta 0.5
            2004-06-01 SetSectorBeta Technology 0.2
            2004-06-01 SetMarketDrift -0.05
            2004-09-15 ShockDay -0.1
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    if not cp.read(path):
        raise SynthError(f"cannot read synth config {path}")
    try:
        m = cp["model"]
        sectors = []
        for label, value in cp["sectors"].items():
            count, beta = (v.strip() for v in value.split(","))
            sectors.append(SectorSpec(SectorLabel.parse(label), int(count), float(beta)))
        spec = FactorModelSpec(
            tuple(sectors),
            beta_market=m.getfloat("beta_market", 1.0),
            sigma_idio=m.getfloat("sigma_idio", 1.0),
            dates=m.getint("dates", 1000),
            seed=seed if seed is not None else m.getint("seed", 0),
            start=parse_date(m.get("start", DEFAULT_START)),
        )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, SynthError):
            raise
        raise SynthError(f"{path}: invalid synth config: {exc}") from exc
    events = []
    if cp.has_section("schedule"):
        for line in cp["schedule"].get("events", "").splitlines():
            if line.strip():
                events.append(parse_event(line))
    return spec, RegimeSchedule(tuple(events))
