"""Rolling windows, extreme-day trimming and Pearson correlation matrices."""
from __future__ import annotations

import hashlib
import json
import logging
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from . import kernels
from .errors import CorrnetError, DataError
from .ingest import ReturnPanel

log = logging.getLogger(__name__)

DEFAULT_MIN_OVERLAP = 100
DEFAULT_TRIMS = (0, 2, 5, 10, 20)


class WindowError(CorrnetError, ValueError):
    module = "corrwin"


class Mode(str, Enum):
    ROLLING = "rolling"
    CALENDAR_YEAR = "calendar_year"


class Window(NamedTuple):
    """Half-open date range ``[start, end)``."""

    start: np.datetime64
    end: np.datetime64

    @property
    def label(self) -> str:
        s, e = self.start.astype(object), self.end.astype(object)
        if s.month == 1 and s.day == 1 and e.day == 1 and e.month == 1 and e.year == s.year + 1:
            return f"{s.year}"
        if s.day == 1 and s.month % 3 == 1:
            return f"{s.year}Q{(s.month - 1) // 3 + 1}"
        return f"{s.isoformat()}"

    def __str__(self):
        return f"[{self.start}, {self.end})"


def add_months(day, months: int) -> np.datetime64:
    """Shift a month-aligned date by whole calendar months."""
    day = np.datetime64(day, "D")
    month = day.astype("datetime64[M]")
    offset = day - month.astype("datetime64[D]")
    return (month + months).astype("datetime64[D]") + offset


@dataclass(frozen=True)
class WindowSpec:
    start: np.datetime64
    end: np.datetime64
    length: int = 12
    shift: int = 3
    mode: Mode = Mode.ROLLING

    def __post_init__(self):
        object.__setattr__(self, "start", np.datetime64(self.start, "D"))
        object.__setattr__(self, "end", np.datetime64(self.end, "D"))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.mode is Mode.CALENDAR_YEAR:
            object.__setattr__(self, "length", 12)
        if self.length < 1 or self.shift < 1:
            raise WindowError("window length and shift must be at least one month")
        if self.start > self.end:
            raise WindowError(f"window start {self.start} is after end {self.end}")


def enumerate_windows(spec: WindowSpec) -> list[Window]:
    """List the windows described by ``spec``, end-exclusive.

    Rolling windows start at ``spec.start`` and every ``shift`` months after
    it while the start is on or before ``spec.end``. Calendar-year mode gives
    one Jan-Dec window per year touching ``[start, end]``.
    """
    if spec.mode is Mode.CALENDAR_YEAR:
        y0 = spec.start.astype("datetime64[Y]")
        y1 = spec.end.astype("datetime64[Y]")
        return [
            Window(y.astype("datetime64[D]"), (y + 1).astype("datetime64[D]"))
            for y in np.arange(y0, y1 + 1)
        ]
    out = []
    k = 0
    while True:
        s = add_months(spec.start, k * spec.shift)
        if s > spec.end:
            break
        out.append(Window(s, add_months(s, spec.length)))
        k += 1
    return out


def cross_sectional_mean(returns: np.ndarray) -> np.ndarray:
    """Equal-weighted mean over present assets per date; NaN if none present."""
    present = ~np.isnan(returns)
    n = present.sum(axis=1)
    total = np.where(present, returns, 0.0).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > 0, total / np.maximum(n, 1), np.nan)


def trim_extreme_days(panel: ReturnPanel, window, k: int) -> tuple[ReturnPanel, np.ndarray]:
    """Restrict ``panel`` to ``window`` and drop the ``k`` most extreme days.

    A day's extremeness is the absolute value of the equal-weighted
    cross-sectional mean return. Ties go to the earlier date. Dates with no
    present return are never dropped.

    Returns
    -------
    (ReturnPanel, numpy.ndarray)
        The restricted panel in original date order and the omitted dates.
    """
    sub = panel.between(*window)
    n = len(sub.dates)
    if k < 0:
        raise WindowError(f"trim count must be non-negative, got {k}")
    if k >= n:
        raise WindowError(f"cannot trim {k} days from a window of {n} days {Window(*window)}")
    if k == 0:
        return sub, np.array([], dtype="datetime64[D]")
    score = np.abs(cross_sectional_mean(sub.returns))
    score = np.where(np.isnan(score), -np.inf, score)
    order = np.lexsort((np.arange(n), -score))
    drop = np.sort(order[:k])
    keep = np.ones(n, dtype=bool)
    keep[drop] = False
    return sub.select_dates(keep), sub.dates[drop]


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    window: Window
    assets: tuple[str, ...]
    rho: np.ndarray
    n_obs: np.ndarray
    trimmed_days: np.ndarray
    k: int = 0
    min_overlap: int = DEFAULT_MIN_OVERLAP

    def index(self, asset_id: str) -> int:
        return self.assets.index(asset_id)

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.rho)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(["asset_id", *self.assets]) + "\n")
            for a, row in zip(self.assets, self.rho):
                fh.write(",".join([a, *("" if np.isnan(v) else repr(float(v)) for v in row)]) + "\n")


def pearson_matrix(
    panel: ReturnPanel, window, k: int = 0, min_overlap: int = DEFAULT_MIN_OVERLAP
) -> CorrelationMatrix:
    """Pairwise-complete Pearson correlations within ``window``.

    Entries are NaN (undefined) when the pair shares fewer than
    ``min_overlap`` observations, or when either series is constant over the
    shared dates. The diagonal is 1 for every asset with at least two
    observations and non-zero variance.
    """
    window = Window(np.datetime64(window[0], "D"), np.datetime64(window[1], "D"))
    sub, omitted = trim_extreme_days(panel, window, k)
    if len(sub.dates) == 0:
        raise WindowError(f"window {window} is empty after trimming")
    rho, n_obs = kernels.pairwise_pearson(np.ascontiguousarray(sub.returns, dtype=float))
    off = ~np.eye(len(sub.assets), dtype=bool)
    rho[off & (n_obs < min_overlap)] = np.nan
    for i, a in enumerate(sub.asset_ids):
        if n_obs[i, i] < 2:
            log.warning("asset %s has %d observations in %s; row undefined", a, n_obs[i, i], window)
        elif np.isnan(rho[i, i]):
            log.warning("asset %s has zero variance in %s; row undefined", a, window)
    return CorrelationMatrix(window, sub.asset_ids, rho, n_obs, omitted, k, min_overlap)


class BlockAverage(NamedTuple):
    value: float
    n_defined: int
    n_undefined: int

    @property
    def defined(self) -> bool:
        return self.n_defined > 0


def _pair_mask(n: int, ia: np.ndarray, ib: np.ndarray, same: bool) -> np.ndarray:
    mask = np.zeros((n, n), dtype=bool)
    if same:
        sel = np.zeros(n, dtype=bool)
        sel[ia] = True
        mask[np.ix_(sel, sel)] = True
        mask = np.triu(mask, 1)
    else:
        mask[np.ix_(ia, ib)] = True
    return mask


def block_pairs(assets: tuple[str, ...], group_a: Iterable[str], group_b: Iterable[str]) -> np.ndarray:
    """Boolean mask of the designated pairs between two asset groups.

    Equal groups designate the unordered distinct pairs inside the group;
    otherwise every cross pair ``(a, b)`` is designated once.
    """
    pos = {a: i for i, a in enumerate(assets)}
    set_a, set_b = set(group_a), set(group_b)
    missing = (set_a | set_b) - pos.keys()
    if missing:
        raise WindowError(f"assets not in matrix: {sorted(missing)}")
    if not set_a or not set_b:
        raise WindowError("groups must be non-empty")
    ia = np.array(sorted(pos[a] for a in set_a))
    ib = np.array(sorted(pos[b] for b in set_b))
    if set_a == set_b:
        return _pair_mask(len(assets), ia, ib, True)
    if set_a & set_b:
        raise WindowError("groups must be equal or disjoint")
    return _pair_mask(len(assets), ia, ib, False)


def average_block_correlation(corr: CorrelationMatrix, group_a, group_b) -> BlockAverage:
    """Mean of defined correlations over the designated pairs.

    An undefined result (no defined pair) has ``value`` NaN and
    ``defined`` False rather than a silent zero.
    """
    mask = block_pairs(corr.assets, group_a, group_b)
    vals = corr.rho[mask]
    ok = ~np.isnan(vals)
    n_def = int(ok.sum())
    value = float(vals[ok].mean()) if n_def else float("nan")
    return BlockAverage(value, n_def, int((~ok).sum()))


def average_all_pairs(corr: CorrelationMatrix) -> BlockAverage:
    return average_block_correlation(corr, corr.assets, corr.assets)


# -- binary cache -----------------------------------------------------------

CACHE_MAGIC = b"CORRNETC"
CACHE_VERSION = 1


def panel_fingerprint(panel: ReturnPanel) -> str:
    h = hashlib.sha256()
    h.update(panel.dates.astype("<i8").tobytes())
    h.update(np.ascontiguousarray(panel.returns, dtype="<f8").tobytes())
    h.update("\x00".join(panel.asset_ids).encode())
    return h.hexdigest()


def cache_name(window: Window, k: int, min_overlap: int) -> str:
    return f"corr_{window.start}_{window.end}_k{k}_mo{min_overlap}.bin"


def save_cache(corr: CorrelationMatrix, path, fingerprint: str = "") -> None:
    """Write ``corr`` as header + little-endian float64 upper triangles.

    Layout: magic, uint32 version, uint32 header length, UTF-8 JSON header,
    then the row-major upper triangle (diagonal included) of ``rho`` (NaN for
    undefined) followed by that of ``n_obs``.
    """
    header = json.dumps(
        {
            "window": [str(corr.window.start), str(corr.window.end)],
            "k": corr.k,
            "min_overlap": corr.min_overlap,
            "assets": list(corr.assets),
            "trimmed_days": [str(d) for d in corr.trimmed_days],
            "fingerprint": fingerprint,
        },
        sort_keys=True,
    ).encode()
    iu = np.triu_indices(len(corr.assets))
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<II", CACHE_VERSION, len(header)))
        fh.write(header)
        fh.write(corr.rho[iu].astype("<f8").tobytes())
        fh.write(corr.n_obs[iu].astype("<f8").tobytes())


def load_cache(path, fingerprint: str | None = None) -> CorrelationMatrix | None:
    """Read a cache file; ``None`` when the version or fingerprint differs."""
    data = Path(path).read_bytes()
    if data[:8] != CACHE_MAGIC:
        raise DataError(f"{path}: not a correlation cache")
    version, hlen = struct.unpack_from("<II", data, 8)
    if version != CACHE_VERSION:
        return None
    header = json.loads(data[16 : 16 + hlen])
    if fingerprint is not None and header["fingerprint"] != fingerprint:
        return None
    n = len(header["assets"])
    iu = np.triu_indices(n)
    m = len(iu[0])
    body = np.frombuffer(data, dtype="<f8", offset=16 + hlen)
    if len(body) != 2 * m:
        raise DataError(f"{path}: truncated cache")
    rho = np.empty((n, n))
    rho[iu] = body[:m]
    rho.T[iu] = body[:m]
    n_obs = np.empty((n, n), dtype=np.int64)
    n_obs[iu] = body[m:]
    n_obs.T[iu] = body[m:]
    window = Window(*(np.datetime64(s, "D") for s in header["window"]))
    trimmed = np.array(header["trimmed_days"], dtype="datetime64[D]")
    return CorrelationMatrix(
        window, tuple(header["assets"]), rho, n_obs, trimmed, header["k"], header["min_overlap"]
    )
