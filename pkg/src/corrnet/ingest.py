"""Loading of price panels, sector maps and exogenous series.

Dates are held as ``numpy.datetime64[D]`` arrays and missing prices or
returns as ``NaN``. A missing cell is never filled.
"""
from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ComputationError, DataError, ParseError

log = logging.getLogger(__name__)


class Major(str, Enum):
    TECHNOLOGY = "Technology"
    BASIC_MATERIALS = "BasicMaterials"
    FINANCE = "Finance"


class Minor(str, Enum):
    OIL = "Oil"
    OTHER_MATERIALS = "OtherMaterials"
    REAL_ESTATE = "RealEstate"
    OTHER_FINANCE = "OtherFinance"
    NONE = "None"


_ALLOWED_MINOR = {
    Major.TECHNOLOGY: {Minor.NONE},
    Major.BASIC_MATERIALS: {Minor.OIL, Minor.OTHER_MATERIALS, Minor.NONE},
    Major.FINANCE: {Minor.REAL_ESTATE, Minor.OTHER_FINANCE, Minor.NONE},
}


class AssetKind(str, Enum):
    STOCK = "Stock"
    INDEX = "Index"


@dataclass(frozen=True, order=True)
class SectorLabel:
    major: Major
    minor: Minor = Minor.NONE

    def __post_init__(self):
        object.__setattr__(self, "major", Major(self.major))
        object.__setattr__(self, "minor", Minor(self.minor))
        if self.minor not in _ALLOWED_MINOR[self.major]:
            raise DataError(
                f"minor sector {self.minor.value!r} is not valid under {self.major.value!r}"
            )

    def __str__(self):
        if self.minor is Minor.NONE:
            return self.major.value
        return f"{self.major.value}/{self.minor.value}"

    @classmethod
    def parse(cls, text: str) -> "SectorLabel":
        """Inverse of ``str()``: ``"Finance/RealEstate"`` or ``"Technology"``."""
        major, _, minor = text.strip().partition("/")
        try:
            return cls(Major(major), Minor(minor) if minor else Minor.NONE)
        except ValueError as exc:
            raise ParseError(f"unknown sector {text!r}") from exc

    def coarse(self) -> "SectorLabel":
        return SectorLabel(self.major)


@dataclass(frozen=True)
class AssetRecord:
    asset_id: str
    sector: SectorLabel | None = None
    kind: AssetKind = AssetKind.STOCK


@dataclass(frozen=True, eq=False)
class PricePanel:
    dates: np.ndarray
    prices: np.ndarray
    assets: tuple[AssetRecord, ...]

    def __post_init__(self):
        _check_dates(self.dates)
        if self.prices.shape != (len(self.dates), len(self.assets)):
            raise DataError(
                f"price matrix shape {self.prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.assets)} assets"
            )
        _check_unique(self.assets)
        present = ~np.isnan(self.prices)
        bad = present & ~(self.prices > 0)
        if bad.any():
            t, i = np.argwhere(bad)[0]
            raise DataError(
                f"non-positive price {self.prices[t, i]!r} for asset "
                f"{self.assets[i].asset_id} on {self.dates[t]}"
            )

    @property
    def asset_ids(self) -> tuple[str, ...]:
        return tuple(a.asset_id for a in self.assets)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.prices)

    def with_sectors(self, mapping: Mapping[str, AssetRecord]) -> "PricePanel":
        return replace(self, assets=_attach(self.assets, mapping))


@dataclass(frozen=True, eq=False)
class ReturnPanel:
    dates: np.ndarray
    returns: np.ndarray
    assets: tuple[AssetRecord, ...]

    def __post_init__(self):
        _check_dates(self.dates)
        if self.returns.shape != (len(self.dates), len(self.assets)):
            raise DataError("return matrix shape does not match dates x assets")
        _check_unique(self.assets)
        if np.isinf(self.returns).any():
            raise DataError("returns must be finite or missing")

    @property
    def asset_ids(self) -> tuple[str, ...]:
        return tuple(a.asset_id for a in self.assets)

    def with_sectors(self, mapping: Mapping[str, AssetRecord]) -> "ReturnPanel":
        return replace(self, assets=_attach(self.assets, mapping))

    def select_dates(self, keep: np.ndarray) -> "ReturnPanel":
        return ReturnPanel(self.dates[keep], self.returns[keep], self.assets)

    def between(self, start, end) -> "ReturnPanel":
        """Rows with ``start <= date < end``."""
        start, end = np.datetime64(start, "D"), np.datetime64(end, "D")
        return self.select_dates((self.dates >= start) & (self.dates < end))


@dataclass(frozen=True, eq=False)
class ExogenousSeries:
    name: str
    dates: np.ndarray
    values: np.ndarray
    units: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_dates(self.dates)
        if len(self.values) != len(self.dates):
            raise DataError(f"series {self.name!r}: dates and values differ in length")

    def on_or_after(self, day) -> tuple[np.datetime64, float] | None:
        """First observation dated on or after ``day``."""
        pos = np.searchsorted(self.dates, np.datetime64(day, "D"), side="left")
        if pos >= len(self.dates):
            return None
        return self.dates[pos], float(self.values[pos])


def _check_dates(dates):
    if dates.dtype != np.dtype("datetime64[D]"):
        raise DataError("dates must be datetime64[D]")
    if len(dates) > 1 and not (np.diff(dates) > np.timedelta64(0, "D")).all():
        raise DataError("dates must be strictly increasing")


def _check_unique(assets):
    seen = set()
    for a in assets:
        if a.asset_id in seen:
            raise DataError(f"duplicate asset_id {a.asset_id!r}")
        seen.add(a.asset_id)


def _attach(assets, mapping):
    out = []
    for a in assets:
        rec = mapping.get(a.asset_id)
        if rec is None:
            raise DataError(f"asset {a.asset_id!r} has no sector map entry")
        out.append(rec)
    return tuple(out)


def parse_date(text: str, path=None, line=None) -> np.datetime64:
    try:
        return np.datetime64(dt.date.fromisoformat(text.strip()), "D")
    except ValueError as exc:
        raise ParseError(f"bad ISO-8601 date {text!r}", path, line) from exc


def _parse_price(text: str, path, line) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise ParseError(f"bad price {text!r}", path, line) from exc
    if not math.isfinite(value):
        raise ParseError(f"non-finite price {text!r}", path, line)
    return value


def _rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            yield reader.line_num, row


def load_prices(path, format: str = "long") -> PricePanel:
    """Load adjusted closing prices from CSV.

    Parameters
    ----------
    path:
        CSV file. Long format has header ``date,asset_id,adjusted_close``;
        wide format has ``date,<asset_id>,...`` with empty cells for missing
        prices.
    format:
        ``"long"`` or ``"wide"``.

    Returns
    -------
    PricePanel
        Union of all dates, sorted. Asset records carry no sector until
        :meth:`PricePanel.with_sectors` is applied.

    Raises
    ------
    ParseError
        Malformed row (the message names the line).
    DataError
        Duplicate ``(date, asset)`` entry or a non-positive price.
    """
    path = Path(path)
    if format == "long":
        cells, asset_ids, all_dates = _read_long(path)
    elif format == "wide":
        cells, asset_ids, all_dates = _read_wide(path)
    else:
        raise ValueError(f"unknown price format {format!r}")
    dates = np.array(sorted(all_dates), dtype="datetime64[D]")
    col = {a: i for i, a in enumerate(asset_ids)}
    row = {d: t for t, d in enumerate(dates)}
    prices = np.full((len(dates), len(asset_ids)), np.nan)
    for (d, a), (value, line) in cells.items():
        if value <= 0:
            raise DataError(f"{path}:{line}: non-positive price {value!r} for asset {a} on {d}")
        prices[row[d], col[a]] = value
    return PricePanel(dates, prices, tuple(AssetRecord(a) for a in asset_ids))


def _read_long(path):
    cells = {}
    asset_ids = []
    rows = _rows(path)
    header = next(rows, None)
    if header is None:
        raise ParseError("empty price file", path)
    if [c.strip() for c in header[1]] != ["date", "asset_id", "adjusted_close"]:
        raise ParseError("expected header date,asset_id,adjusted_close", path, header[0])
    for line, row in rows:
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", path, line)
        d = parse_date(row[0], path, line)
        a = row[1].strip()
        if not a:
            raise ParseError("empty asset_id", path, line)
        key = (d, a)
        if key in cells:
            raise DataError(f"{path}:{line}: duplicate entry for asset {a} on {d}")
        cells[key] = (_parse_price(row[2], path, line), line)
        if a not in asset_ids:
            asset_ids.append(a)
    return cells, asset_ids, {d for d, _ in cells}


def _read_wide(path):
    rows = _rows(path)
    header = next(rows, None)
    if header is None:
        raise ParseError("empty price file", path)
    hline, names = header
    names = [c.strip() for c in names]
    if not names or names[0] != "date":
        raise ParseError("wide header must start with 'date'", path, hline)
    asset_ids = names[1:]
    if len(set(asset_ids)) != len(asset_ids):
        raise DataError(f"{path}:{hline}: duplicate asset column")
    cells = {}
    seen_dates = set()
    for line, row in rows:
        if len(row) != len(names):
            raise ParseError(f"expected {len(names)} fields, got {len(row)}", path, line)
        d = parse_date(row[0], path, line)
        if d in seen_dates:
            raise DataError(f"{path}:{line}: duplicate date {d}")
        seen_dates.add(d)
        for a, text in zip(asset_ids, row[1:]):
            if text.strip() == "":
                cells.setdefault((d, a), None)
                continue
            cells[(d, a)] = (_parse_price(text, path, line), line)
    cells = {k: v for k, v in cells.items() if v is not None}
    if not cells and seen_dates:
        log.warning("%s: every price cell is empty", path)
    return cells, asset_ids, seen_dates


def write_prices(panel: PricePanel, path, format: str = "wide") -> None:
    """Write ``panel`` so that :func:`load_prices` reproduces it exactly."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if format == "wide":
            w.writerow(["date", *panel.asset_ids])
            for d, row in zip(panel.dates, panel.prices):
                w.writerow([str(d), *("" if np.isnan(v) else repr(float(v)) for v in row)])
        elif format == "long":
            w.writerow(["date", "asset_id", "adjusted_close"])
            for t, d in enumerate(panel.dates):
                for i, a in enumerate(panel.asset_ids):
                    v = panel.prices[t, i]
                    if not np.isnan(v):
                        w.writerow([str(d), a, repr(float(v))])
        else:
            raise ValueError(f"unknown price format {format!r}")


def compute_log_returns(panel: PricePanel) -> ReturnPanel:
    """Daily log returns ``ln(p[t] / p[t-1])`` on the panel's own calendar.

    A return is present only when both the price on ``t`` and on the
    immediately preceding panel date are present; gaps are never spanned.
    The first calendar date has no return and is dropped.
    """
    if len(panel.dates) < 2:
        raise ValueError("need at least 2 dates to compute returns")
    p = panel.prices
    with np.errstate(invalid="ignore"):
        r = np.log(p[1:] / p[:-1])
    return ReturnPanel(panel.dates[1:].copy(), r, panel.assets)


def load_sector_map(path) -> dict[str, AssetRecord]:
    """Read ``asset_id,major,minor`` rows into asset records.

    ``major`` may also be ``Index`` for index nodes (oil spot, bond price);
    those get ``kind=Index`` and no sector. An empty ``minor`` means None.
    """
    path = Path(path)
    out: dict[str, AssetRecord] = {}
    rows = _rows(path)
    header = next(rows, None)
    if header is None:
        log.warning("%s: empty sector map", path)
        return out
    if [c.strip() for c in header[1]] != ["asset_id", "major", "minor"]:
        raise ParseError("expected header asset_id,major,minor", path, header[0])
    for line, row in rows:
        if len(row) == 2:
            row = [*row, ""]
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", path, line)
        asset, major, minor = (c.strip() for c in row)
        if major == "Index":
            rec = AssetRecord(asset, None, AssetKind.INDEX)
        else:
            try:
                major_e = Major(major)
                minor_e = Minor(minor) if minor else Minor.NONE
            except ValueError as exc:
                raise ParseError(f"unknown sector {major!r}/{minor!r}", path, line) from exc
            try:
                rec = AssetRecord(asset, SectorLabel(major_e, minor_e))
            except DataError as exc:
                raise DataError(f"{path}:{line}: {exc}") from exc
        prev = out.get(asset)
        if prev is not None and prev != rec:
            raise DataError(f"{path}:{line}: asset {asset!r} listed with conflicting labels")
        out[asset] = rec
    if not out:
        log.warning("%s: sector map has no entries", path)
    return out


def write_sector_map(records: Sequence[AssetRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["asset_id", "major", "minor"])
        for r in records:
            if r.kind is AssetKind.INDEX:
                w.writerow([r.asset_id, "Index", ""])
            else:
                minor = "" if r.sector.minor is Minor.NONE else r.sector.minor.value
                w.writerow([r.asset_id, r.sector.major.value, minor])


def load_exogenous(path, name: str | None = None) -> ExogenousSeries:
    """Read a ``date,value`` CSV; a leading ``#units:`` line sets the units."""
    path = Path(path)
    units = ""
    with open(path) as fh:
        for text in fh:
            if text.startswith("#units:"):
                units = text[len("#units:"):].strip()
                break
    rows = _rows(path)
    header = next(rows, None)
    if header is None or [c.strip() for c in header[1]] != ["date", "value"]:
        raise ParseError("expected header date,value", path, header[0] if header else None)
    pairs = {}
    for line, row in rows:
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", path, line)
        d = parse_date(row[0], path, line)
        if d in pairs:
            raise DataError(f"{path}:{line}: duplicate date {d}")
        try:
            pairs[d] = float(row[1])
        except ValueError as exc:
            raise ParseError(f"bad value {row[1]!r}", path, line) from exc
    dates = np.array(sorted(pairs), dtype="datetime64[D]")
    values = np.array([pairs[d] for d in dates], dtype=float)
    return ExogenousSeries(name or path.stem, dates, values, units)


def write_exogenous(series: ExogenousSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        if series.units:
            fh.write(f"#units: {series.units}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "value"])
        for d, v in zip(series.dates, series.values):
            w.writerow([str(d), "" if np.isnan(v) else repr(float(v))])


def quarter_starts(start, end) -> np.ndarray:
    """Calendar quarter starts ``s`` with ``start <= s <= end``."""
    first = np.datetime64(start, "M")
    months = np.arange(first, np.datetime64(end, "M") + 1)
    months = months[(months.astype(int) % 3) == 0]
    days = months.astype("datetime64[D]")
    return days[(days >= np.datetime64(start, "D")) & (days <= np.datetime64(end, "D"))]


def derive_libor_spread(
    libor: ExogenousSeries, ffr: ExogenousSeries, quarters: Sequence
) -> ExogenousSeries:
    """Relative LIBOR over Fed Funds spread, ``(LIBOR - FFR) / FFR``, per quarter.

    Each quarter uses the first observation of each series on or after the
    quarter start date.
    """
    dates, values = [], []
    for q in quarters:
        q = np.datetime64(q, "D")
        lo, fo = libor.on_or_after(q), ffr.on_or_after(q)
        if lo is None or fo is None:
            which = libor.name if lo is None else ffr.name
            raise DataError(f"series {which!r} has no observation on or after quarter {q}")
        if fo[1] == 0:
            raise ComputationError(f"federal funds rate is zero for quarter {q}")
        dates.append(q)
        values.append((lo[1] - fo[1]) / fo[1])
    return ExogenousSeries(
        "libor_spread", np.array(dates, dtype="datetime64[D]"), np.array(values), "dimensionless"
    )
