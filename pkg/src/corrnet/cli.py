"""Command-line pipeline: ``corrnet analyze|synth|export``.

Runs are driven by an INI file (see ``RunConfig.load``); command-line flags
override its keys. Logging goes to standard error, data only to files.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import reports
from .corrwin import (
    DEFAULT_MIN_OVERLAP,
    Mode,
    Window,
    WindowSpec,
    add_months,
    average_all_pairs,
    average_block_correlation,
    cache_name,
    cross_sectional_mean,
    enumerate_windows,
    load_cache,
    panel_fingerprint,
    pearson_matrix,
    save_cache,
)
from .errors import CorrnetError
from .ingest import (
    AssetKind,
    ExogenousSeries,
    ReturnPanel,
    compute_log_returns,
    derive_libor_spread,
    load_exogenous,
    load_prices,
    load_sector_map,
    parse_date,
    quarter_starts,
    write_exogenous,
    write_prices,
    write_sector_map,
)
from .network import (
    DEFAULT_QUANTILE,
    FORMATS,
    ThresholdSpec,
    build_threshold_network,
    export_network,
    stack_temporal,
)
from .reports import fmt_num, fmt_p, json_num, json_p
from .sectorstats import (
    ALPHA_MERGE,
    StatsError,
    decline_coincidence_test,
    index_linkage,
    link_density_report,
    merge_tstat,
    sector_members,
    sector_pairs,
    self_clustering,
    sign_change_test,
    slope_trend_test,
)
from .synth import GENERATOR_VERSION, analytic_matrix, generate_returns, load_synth_config, returns_to_prices

log = logging.getLogger("corrnet")

EXTENSIONS = {"edge_list": "csv", "graphml": "graphml", "dot": "dot"}


class ConfigError(CorrnetError, ValueError):
    module = "cli"


@dataclass
class RunConfig:
    """Resolved analysis settings.

    INI schema (paths are relative to the config file)::

        [paths]
        prices = prices.csv        # required
        format = wide              # wide | long
        sectors = sectors.csv      # required
        market = sp500.csv         # optional index levels for market returns
        libor = libor.csv          # optional, with ffr
        ffr = ffr.csv
        output = out

        [windows]
        mode = rolling             # rolling | calendar_year
        start = 2003-01-01
        end = 2008-12-31
        length = 12
        shift = 3

        [analysis]
        trim = 0, 2, 5, 10, 20     # first entry drives networks and tests
        quantile = 0.0625
        min_overlap = 100
        alpha_merge = 0.05
        sector_level = minor       # minor | major
        sign_change_year = 2008    # optional
    """

    prices: Path
    sectors: Path
    output: Path
    windows: WindowSpec
    price_format: str = "wide"
    market: Path | None = None
    libor: Path | None = None
    ffr: Path | None = None
    trims: tuple[int, ...] = (0,)
    quantile: float = DEFAULT_QUANTILE
    min_overlap: int = DEFAULT_MIN_OVERLAP
    alpha_merge: float = ALPHA_MERGE
    coarse_sectors: bool = False
    sign_change_year: int | None = None
    source: Path | None = field(default=None, compare=False)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        if not cp.read(path):
            raise ConfigError(f"cannot read config file {path}")
        base = path.parent

        def p(key, required=False):
            val = cp.get("paths", key, fallback="").strip()
            if not val:
                if required:
                    raise ConfigError(f"{path}: [paths] {key} is required")
                return None
            return (base / val).resolve() if not Path(val).is_absolute() else Path(val)

        try:
            w = cp["windows"] if cp.has_section("windows") else {}
            spec = WindowSpec(
                parse_date(w["start"]),
                parse_date(w["end"]),
                int(w.get("length", 12)),
                int(w.get("shift", 3)),
                Mode(w.get("mode", "rolling")),
            )
            a = cp["analysis"] if cp.has_section("analysis") else {}
            year = a.get("sign_change_year", "").strip()
            return cls(
                prices=p("prices", True),
                sectors=p("sectors", True),
                output=p("output") or (base / "out").resolve(),
                windows=spec,
                price_format=cp.get("paths", "format", fallback="wide").strip(),
                market=p("market"),
                libor=p("libor"),
                ffr=p("ffr"),
                trims=parse_trims(a.get("trim", "0")),
                quantile=float(a.get("quantile", DEFAULT_QUANTILE)),
                min_overlap=int(a.get("min_overlap", DEFAULT_MIN_OVERLAP)),
                alpha_merge=float(a.get("alpha_merge", ALPHA_MERGE)),
                coarse_sectors=a.get("sector_level", "minor").strip() == "major",
                sign_change_year=int(year) if year else None,
                source=path,
            )
        except KeyError as exc:
            raise ConfigError(f"{path}: missing key {exc}") from exc
        except ValueError as exc:
            if isinstance(exc, CorrnetError):
                raise
            raise ConfigError(f"{path}: {exc}") from exc

    def check_files(self) -> None:
        for name in ("prices", "sectors", "market", "libor", "ffr"):
            f = getattr(self, name)
            if f is not None and not f.is_file():
                raise ConfigError(f"{name} file not found: {f}")
        if (self.libor is None) != (self.ffr is None):
            raise ConfigError("libor and ffr must be given together")


def parse_trims(text: str) -> tuple[int, ...]:
    trims = tuple(int(t) for t in str(text).replace(" ", "").split(",") if t)
    if not trims or any(t < 0 for t in trims):
        raise ConfigError(f"bad trim list {text!r}")
    return trims


def thread_count() -> int:
    raw = os.environ.get("CORRNET_THREADS", "")
    if raw.strip():
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"CORRNET_THREADS must be an integer, got {raw!r}") from None
        return max(1, n)
    return max(1, min(8, os.cpu_count() or 1))


# -- analysis ---------------------------------------------------------------


@dataclass
class Inputs:
    returns: ReturnPanel
    records: dict
    fingerprint: str
    windows: list[Window]


def load_inputs(cfg: RunConfig) -> Inputs:
    cfg.check_files()
    prices = load_prices(cfg.prices, cfg.price_format)
    records = load_sector_map(cfg.sectors)
    prices = prices.with_sectors(records)
    returns = compute_log_returns(prices)
    return Inputs(returns, records, panel_fingerprint(returns), enumerate_windows(cfg.windows))


def correlation(cfg: RunConfig, inputs: Inputs, window: Window, k: int):
    """Cached correlation matrix for ``(window, k, min_overlap)``."""
    cache = cfg.output / "cache" / cache_name(window, k, cfg.min_overlap)
    if cache.is_file():
        corr = load_cache(cache, inputs.fingerprint)
        if corr is not None:
            return corr
    corr = pearson_matrix(inputs.returns, window, k, cfg.min_overlap)
    cache.parent.mkdir(parents=True, exist_ok=True)
    tmp = cache.with_suffix(".tmp")
    save_cache(corr, tmp, inputs.fingerprint)
    tmp.replace(cache)
    return corr


def market_return(cfg: RunConfig, inputs: Inputs, market: ExogenousSeries | None, w: Window) -> float:
    """Log return of the market over the window.

    Uses the market index levels when configured, else the sum of the
    equal-weighted daily mean log returns of the panel.
    """
    if market is not None:
        sel = (market.dates >= w.start) & (market.dates < w.end)
        vals = market.values[sel]
        vals = vals[~np.isnan(vals)]
        if len(vals) < 2:
            return math.nan
        return float(np.log(vals[-1] / vals[0]))
    sub = inputs.returns.between(w.start, w.end)
    m = cross_sectional_mean(sub.returns)
    m = m[~np.isnan(m)]
    return float(m.sum()) if len(m) else math.nan


def analyze_window(cfg: RunConfig, inputs: Inputs, w: Window, market) -> dict:
    """All per-window statistics; undefined values are recorded, not raised."""
    stage = "corrwin"
    try:
        out = {"window": w, "flags": []}
        mats = {k: correlation(cfg, inputs, w, k) for k in cfg.trims}
        corr = mats[cfg.trims[0]]
        out["corr"] = corr
        out["avg_all"] = {k: average_all_pairs(m) for k, m in mats.items()}
        stage = "network"
        net = build_threshold_network(corr, ThresholdSpec(cfg.quantile), inputs.records)
        out["net"] = net
        stage = "sectorstats"
        members = sector_members(net, coarse=cfg.coarse_sectors)
        out["members"] = members
        out["blocks"] = {
            (a, b): average_block_correlation(corr, members[a], members[b])
            for a in members
            for b in members
            if a <= b
        }
        out["density"] = link_density_report(net, members)
        merges = {}
        for a, b in sector_pairs(members):
            try:
                merges[(a, b)] = merge_tstat(net, a, b, cfg.alpha_merge, members)
            except StatsError as exc:
                out["flags"].append(f"merge {a} {b}: {exc}")
        out["merge"] = merges
        sc = {}
        for a in members:
            others = [b for b in members if b != a]
            if others:
                sc[a] = self_clustering(net, a, others, members)
        out["self"] = sc
        links = []
        for idx in (r.asset_id for r in net.nodes if r.kind is AssetKind.INDEX):
            for s, m in members.items():
                if len(m) >= 2:
                    links.append(index_linkage(net, idx, s, members))
        out["index"] = links
        out["market_return"] = market_return(cfg, inputs, market, w)
        return out
    except CorrnetError as exc:
        module = exc.module if exc.module not in ("corrnet", "cli") else stage
        err = CorrnetError(f"window {w.label} {w}: {exc}")
        err.module = module
        raise err from exc


def run_analysis(cfg: RunConfig) -> list[dict]:
    inputs = load_inputs(cfg)
    if not inputs.windows:
        raise ConfigError("window specification yields no windows")
    market = load_exogenous(cfg.market, "market") if cfg.market else None
    n = thread_count()
    log.info("analyzing %d windows with %d worker(s)", len(inputs.windows), n)
    with ThreadPoolExecutor(max_workers=n) as pool:
        results = list(pool.map(lambda w: analyze_window(cfg, inputs, w, market), inputs.windows))
    write_reports(cfg, inputs, results)
    if cfg.libor is not None:
        spread = derive_libor_spread(
            load_exogenous(cfg.libor, "libor"),
            load_exogenous(cfg.ffr, "ffr"),
            quarter_starts(cfg.windows.start, cfg.windows.end),
        )
        write_exogenous(spread, cfg.output / "reports" / "libor_spread.csv")
    return results


def _series_tests(cfg: RunConfig, results: list[dict]) -> tuple[list, dict]:
    """Trend tests across windows, plus the decline-coincidence test."""
    names: dict[str, list[float]] = {}
    names["avg_corr"] = [r["avg_all"][cfg.trims[0]].value for r in results]
    for s in sorted({s for r in results for s in r["self"]}):
        names[f"self_clustering:{s}"] = [
            r["self"][s].t_min if s in r["self"] else math.nan for r in results
        ]
    for pair in sorted({p for r in results for p in r["merge"]}):
        names[f"merge_t:{pair[0]}|{pair[1]}"] = [
            r["merge"][pair].t if pair in r["merge"] else math.nan for r in results
        ]
    starts = [r["window"].start for r in results]
    trends = []
    for name, vals in names.items():
        y = np.array(vals, dtype=float)
        pos = np.nonzero(~np.isnan(y))[0]
        row = {"series": name, "n": int(len(pos)), "result": None, "error": "", "sign": None}
        try:
            row["result"] = slope_trend_test(y[pos], name, positions=pos)
        except StatsError as exc:
            row["error"] = str(exc)
        if cfg.sign_change_year is not None and name.startswith("self_clustering:"):
            try:
                row["sign"] = sign_change_test(starts, y, cfg.sign_change_year)
            except StatsError as exc:
                row["error"] = (row["error"] + "; " if row["error"] else "") + str(exc)
        trends.append(row)
    decline = {"result": None, "error": ""}
    try:
        decline["result"] = decline_coincidence_test(
            names["avg_corr"], [r["market_return"] for r in results]
        )
    except StatsError as exc:
        decline["error"] = str(exc)
    return trends, decline


def write_reports(cfg: RunConfig, inputs: Inputs, results: list[dict]) -> None:
    out = cfg.output
    rep = out / "reports"
    for r in results:
        wdir = out / "windows" / r["window"].label
        wdir.mkdir(parents=True, exist_ok=True)
        r["corr"].to_csv(wdir / "correlation.csv")
        export_network(r["net"], wdir / "network.csv", "edge_list")

    def wcols(w):
        return [w.label, str(w.start), str(w.end)]

    wh = ["window", "start", "end"]
    reports.write_csv(
        rep / "block_correlation.csv",
        wh + ["k", "group_a", "group_b", "mean_rho", "n_defined", "n_undefined"],
        [
            wcols(r["window"]) + [k, "ALL", "ALL", fmt_num(b.value), b.n_defined, b.n_undefined]
            for r in results
            for k, b in r["avg_all"].items()
        ]
        + [
            wcols(r["window"]) + [cfg.trims[0], str(a), str(b), fmt_num(v.value), v.n_defined, v.n_undefined]
            for r in results
            for (a, b), v in r["blocks"].items()
        ],
    )
    dens_rows = []
    for r in results:
        d = r["density"]
        dens_rows.append(wcols(r["window"]) + ["ALL", "ALL", fmt_num(d.global_density), r["net"].n_defined_pairs, r["net"].n_edges])
        for s, v in d.within.items():
            dens_rows.append(wcols(r["window"]) + [str(s), str(s), fmt_num(v.density), v.n_pairs, v.n_edges])
        for (a, b), v in d.between.items():
            dens_rows.append(wcols(r["window"]) + [str(a), str(b), fmt_num(v.density), v.n_pairs, v.n_edges])
    reports.write_csv(rep / "link_density.csv", wh + ["group_a", "group_b", "density", "n_pairs", "n_edges"], dens_rows)
    reports.write_csv(
        rep / "merge.csv",
        wh + ["sector_a", "sector_b", "t", "df", "p_one_sided", "merged", "n_within", "n_between",
              "density_within", "density_between", "degenerate", "within_sample"],
        [
            wcols(r["window"]) + [str(a), str(b), fmt_num(m.t), fmt_num(m.df), fmt_p(m.p_one_sided),
                                  fmt_num(m.merged), m.n_within, m.n_between, fmt_num(m.density_within),
                                  fmt_num(m.density_between), fmt_num(m.degenerate), m.within_sample]
            for r in results
            for (a, b), m in r["merge"].items()
        ],
    )
    reports.write_csv(
        rep / "self_clustering.csv",
        wh + ["sector", "t_min", "argmin_sector", "defined", "per_sector_t"],
        [
            wcols(r["window"]) + [str(s), fmt_num(c.t_min), str(c.argmin_sector or ""), fmt_num(c.defined),
                                  ";".join(f"{b}={fmt_num(t)}" for b, t in c.per_sector_t.items())]
            for r in results
            for s, c in r["self"].items()
        ],
    )
    reports.write_csv(
        rep / "index_linkage.csv",
        wh + ["index", "sector", "t", "status", "link_fraction", "base_density", "n", "degenerate"],
        [
            wcols(r["window"]) + [x.index, str(x.sector), fmt_num(x.t), x.status.value, fmt_num(x.link_fraction),
                                  fmt_num(x.base_density), x.n, fmt_num(x.degenerate)]
            for r in results
            for x in r["index"]
        ],
    )
    reports.write_csv(
        rep / "series.csv",
        wh + ["avg_corr", "market_return", "trimmed_days"],
        [
            wcols(r["window"]) + [fmt_num(r["avg_all"][cfg.trims[0]].value), fmt_num(r["market_return"]),
                                  " ".join(str(d) for d in r["corr"].trimmed_days)]
            for r in results
        ],
    )
    trends, decline = _series_tests(cfg, results)
    trend_rows = []
    for row in trends:
        t = row["result"]
        sign = row["sign"]
        trend_rows.append([
            row["series"], row["n"],
            fmt_num(t.slope) if t else "", fmt_num(t.t_slope) if t else "", fmt_p(t.p) if t else "",
            cfg.sign_change_year if sign else "", fmt_num(sign[0]) if sign else "", fmt_p(sign[1]) if sign else "",
            row["error"],
        ])
    reports.write_csv(
        rep / "trends.csv",
        ["series", "n", "slope", "t_slope", "p", "sign_change_year", "sign_changed", "p_sign", "error"],
        trend_rows,
    )
    d = decline["result"]
    reports.write_csv(
        rep / "decline.csv",
        ["t", "p_one_sided", "n_decline", "n_rise", "mean_decline", "mean_rise", "error"],
        [[fmt_num(d.t) if d else "", fmt_p(d.p_one_sided) if d else "", d.n_decline if d else "",
          d.n_rise if d else "", fmt_num(d.mean_decline) if d else "", fmt_num(d.mean_rise) if d else "",
          decline["error"]]],
    )
    reports.write_json(rep / "report.json", _json_tree(cfg, results, trends, decline))


def _json_tree(cfg, results, trends, decline):
    windows = {}
    for r in results:
        w = r["window"]
        windows[w.label] = {
            "start": str(w.start),
            "end": str(w.end),
            "avg_corr": {str(k): json_num(b.value) for k, b in r["avg_all"].items()},
            "global_density": json_num(r["density"].global_density),
            "n_edges": r["net"].n_edges,
            "market_return": json_num(r["market_return"]),
            "merge": {
                f"{a}|{b}": {
                    "t": json_num(m.t), "p_one_sided": json_p(m.p_one_sided), "merged": m.merged,
                    "degenerate": m.degenerate, "n_within": m.n_within, "n_between": m.n_between,
                }
                for (a, b), m in r["merge"].items()
            },
            "self_clustering": {
                str(s): {
                    "t_min": json_num(c.t_min),
                    "argmin_sector": str(c.argmin_sector) if c.argmin_sector else None,
                    "per_sector_t": {str(b): json_num(t) for b, t in c.per_sector_t.items()},
                }
                for s, c in r["self"].items()
            },
            "index_linkage": [
                {"index": x.index, "sector": str(x.sector), "t": json_num(x.t), "status": x.status.value,
                 "degenerate": x.degenerate}
                for x in r["index"]
            ],
            "flags": r["flags"],
        }
    cross = {
        "trends": {
            row["series"]: {
                "slope": json_num(row["result"].slope) if row["result"] else None,
                "t_slope": json_num(row["result"].t_slope) if row["result"] else None,
                "p": json_p(row["result"].p) if row["result"] else None,
                "sign_change": (
                    {"year": cfg.sign_change_year, "changed": row["sign"][0], "p_sign": json_p(row["sign"][1])}
                    if row["sign"] else None
                ),
                "error": row["error"] or None,
            }
            for row in trends
        },
        "decline_coincidence": (
            {"t": json_num(decline["result"].t), "p_one_sided": json_p(decline["result"].p_one_sided),
             "n_decline": decline["result"].n_decline, "n_rise": decline["result"].n_rise}
            if decline["result"] else {"error": decline["error"]}
        ),
    }
    return {"windows": windows, "cross_window": cross}


# -- export -----------------------------------------------------------------


def select_windows(windows: list[Window], spec: str) -> list[Window]:
    """Resolve ``--window``: a label, a year, ``A:B`` label range, or ``all``."""
    labels = [w.label for w in windows]
    # a window starting Jan 1 is labelled by its year but also answers to YYYYQ1
    aliases = {}
    for i, w in enumerate(windows):
        aliases.setdefault(w.label, i)
        s = w.start.astype(object)
        if s.day == 1 and s.month % 3 == 1:
            aliases.setdefault(f"{s.year}Q{(s.month - 1) // 3 + 1}", i)
    if spec == "all":
        return list(windows)
    if spec in aliases:
        return [windows[aliases[spec]]]
    if ":" in spec:
        lo, hi = spec.split(":", 1)
        if lo in aliases and hi in aliases:
            return windows[aliases[lo] : aliases[hi] + 1]
    elif spec.isdigit():
        hits = [w for w in windows if str(w.start.astype(object).year) == spec]
        if hits:
            return hits
    raise ConfigError(f"unknown window {spec!r}; available: {', '.join(labels)}")


def run_export(cfg: RunConfig, window: str, fmt: str) -> Path:
    inputs = load_inputs(cfg)
    chosen = select_windows(inputs.windows, window)
    k = cfg.trims[0]
    nets = []
    for w in chosen:
        cache = cfg.output / "cache" / cache_name(w, k, cfg.min_overlap)
        corr = load_cache(cache, inputs.fingerprint) if cache.is_file() else None
        if corr is None:
            raise ConfigError(f"no analysis artifacts for window {w.label}; run 'corrnet analyze' first")
        nets.append(build_threshold_network(corr, ThresholdSpec(cfg.quantile), inputs.records))
    dest = cfg.output / "exports"
    dest.mkdir(parents=True, exist_ok=True)
    if window == "all" or len(nets) > 1:
        net = stack_temporal(nets)
        name = "temporal_all" if window == "all" else f"temporal_{window.replace(':', '_')}"
    else:
        net = nets[0]
        name = chosen[0].label
    return export_network(net, dest / f"{name}.{EXTENSIONS[fmt]}", fmt)


# -- synth ------------------------------------------------------------------


def run_synth(spec_path, out: Path, seed: int | None = None) -> Path:
    spec, schedule = load_synth_config(spec_path, seed)
    panel = generate_returns(spec, schedule)
    out.mkdir(parents=True, exist_ok=True)
    write_prices(returns_to_prices(panel), out / "prices.csv", "wide")
    write_sector_map(panel.assets, out / "sectors.csv")
    truth = analytic_matrix(spec)
    ids = panel.asset_ids
    reports.write_csv(
        out / "truth.csv", ["asset_id", *ids], [[a, *(repr(float(v)) for v in row)] for a, row in zip(ids, truth)]
    )
    # quarter-aligned rolling 12/3 windows that fit inside the generated calendar
    first_month = panel.dates[0].astype("datetime64[M]") + 1
    first_month += (-first_month.astype(int)) % 3
    span = int((panel.dates[-1].astype("datetime64[M]") - first_month).astype(int))
    if span < 12:
        raise ConfigError("synthetic calendar is shorter than one 12-month window")
    start = first_month.astype("datetime64[D]")
    end = add_months(start, (span - 12) // 3 * 3)
    run = configparser.ConfigParser()
    run["paths"] = {"prices": "prices.csv", "format": "wide", "sectors": "sectors.csv", "output": "out"}
    run["windows"] = {"mode": "rolling", "start": str(start), "end": str(end), "length": "12", "shift": "3"}
    run["analysis"] = {
        "trim": "0, 2, 5", "quantile": repr(DEFAULT_QUANTILE), "min_overlap": str(DEFAULT_MIN_OVERLAP),
        "alpha_merge": repr(ALPHA_MERGE), "sector_level": "minor",
    }
    # not read back; identifies the generator that produced prices.csv
    run["provenance"] = {"generator": GENERATOR_VERSION, "seed": str(spec.seed)}
    with open(out / "run.ini", "w") as fh:
        run.write(fh)
    return out


# -- entry point ------------------------------------------------------------


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "trim", None):
        cfg = replace(cfg, trims=parse_trims(args.trim))
    if getattr(args, "quantile", None) is not None:
        ThresholdSpec(args.quantile)
        cfg = replace(cfg, quantile=args.quantile)
    if getattr(args, "out", None):
        cfg = replace(cfg, output=Path(args.out).resolve())
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrnet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run config (INI)")
        p.add_argument("--trim", help="comma-separated trim counts; first drives the networks")
        p.add_argument("--quantile", type=float, help="fraction of strongest pairs kept as edges")
        p.add_argument("--out", help="output directory")

    pa = sub.add_parser("analyze", help="compute correlation networks and statistics")
    common(pa)
    ps = sub.add_parser("synth", help="generate a synthetic factor-model market")
    ps.add_argument("--config", required=True, help="synthetic market spec (INI)")
    ps.add_argument("--out", help="output directory (default: alongside the market file)")
    ps.add_argument("--seed", type=int, help="override the market file's seed")
    pe = sub.add_parser("export", help="export a window's network as a graph file")
    common(pe)
    pe.add_argument("--window", required=True, help="window label, year, A:B range, or 'all'")
    pe.add_argument("--format", required=True, choices=FORMATS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "synth":
            out = Path(args.out) if args.out else Path(args.config).resolve().parent
            run_synth(args.config, out, args.seed)
            log.info("wrote synthetic market to %s", out)
            return 0
        cfg = _apply_overrides(RunConfig.load(args.config), args)
        if args.command == "analyze":
            run_analysis(cfg)
            log.info("reports written to %s", cfg.output / "reports")
        else:
            path = run_export(cfg, args.window, args.format)
            log.info("wrote %s", path)
        return 0
    except (CorrnetError, OSError) as exc:
        module = getattr(exc, "module", "io")
        print(f"corrnet: error: {module}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
