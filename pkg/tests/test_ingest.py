import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrnet.errors import ComputationError, DataError, ParseError
from corrnet.ingest import (
    AssetKind,
    ExogenousSeries,
    Major,
    Minor,
    PricePanel,
    AssetRecord,
    SectorLabel,
    compute_log_returns,
    derive_libor_spread,
    load_exogenous,
    load_prices,
    load_sector_map,
    quarter_starts,
    write_exogenous,
    write_prices,
)


def _panel(prices, dates=None):
    prices = np.asarray(prices, dtype=float)
    if prices.ndim == 1:
        prices = prices[:, None]
    if dates is None:
        dates = np.arange(np.datetime64("2003-01-01"), np.datetime64("2003-01-01") + len(prices))
    ids = [f"S{i}" for i in range(prices.shape[1])]
    return PricePanel(np.asarray(dates, dtype="datetime64[D]"), prices, tuple(AssetRecord(a) for a in ids))


def test_load_long(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("date,asset_id,adjusted_close\n2003-01-02,XOM,10\n2003-01-03,XOM,11\n2003-01-06,XOM,12.5\n")
    panel = load_prices(f, "long")
    assert len(panel.dates) == 3
    assert panel.asset_ids == ("XOM",)
    assert not panel.missing.any()
    assert panel.prices[:, 0].tolist() == [10.0, 11.0, 12.5]


def test_load_wide_marks_missing(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("date,A,B\n2003-01-02,1,2\n2003-01-03,1.5,\n2003-01-06,2,3\n")
    panel = load_prices(f, "wide")
    assert panel.missing.tolist() == [[False, False], [False, True], [False, False]]
    assert panel.prices[1, 0] == 1.5


def test_zero_price_names_asset_and_date(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("date,asset_id,adjusted_close\n2003-01-02,XOM,10\n2003-01-03,IBM,0.0\n")
    with pytest.raises(DataError, match=r"IBM.*2003-01-03"):
        load_prices(f, "long")


def test_duplicate_long_entry_rejected(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("date,asset_id,adjusted_close\n2003-01-02,XOM,10\n2003-01-02,XOM,11\n")
    with pytest.raises(DataError, match="duplicate"):
        load_prices(f, "long")


def test_malformed_row_names_line(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("date,asset_id,adjusted_close\n2003-01-02,XOM,10\n2003-01-03,XOM\n")
    with pytest.raises(ParseError, match=":3:"):
        load_prices(f, "long")
    f.write_text("date,asset_id,adjusted_close\n03/01/2003,XOM,10\n")
    with pytest.raises(ParseError, match="date"):
        load_prices(f, "long")


def test_wide_round_trip(tmp_path):
    prices = [[1.0, 2.5], [1.1, np.nan], [1.0 / 3, 7.25]]
    panel = _panel(prices)
    f = tmp_path / "w.csv"
    write_prices(panel, f, "wide")
    back = load_prices(f, "wide")
    assert (back.dates == panel.dates).all()
    assert back.asset_ids == panel.asset_ids
    assert (back.missing == panel.missing).all()
    np.testing.assert_array_equal(back.prices[~back.missing], panel.prices[~panel.missing])


def test_long_round_trip_keeps_calendar(tmp_path):
    panel = _panel([[1.0, 2.0], [np.nan, 2.5], [1.2, 3.0]])
    f = tmp_path / "l.csv"
    write_prices(panel, f, "long")
    back = load_prices(f, "long")
    assert (back.missing == panel.missing).all()


def test_log_returns_constant_and_simple():
    assert compute_log_returns(_panel([100, 100, 100])).returns[:, 0].tolist() == [0.0, 0.0]
    r = compute_log_returns(_panel([100, 110])).returns[0, 0]
    assert r == pytest.approx(0.09531017980432493, rel=1e-12)


def test_log_returns_do_not_span_gaps():
    r = compute_log_returns(_panel([100, np.nan, 120])).returns[:, 0]
    assert np.isnan(r).all()


def test_log_returns_need_two_dates():
    with pytest.raises(ValueError):
        compute_log_returns(_panel([100]))


prices_st = st.lists(st.floats(1e-3, 1e6), min_size=2, max_size=40)


@settings(max_examples=100, deadline=None)
@given(prices_st, st.floats(1e-6, 1e6))
def test_log_returns_scale_invariant(prices, scale):
    a = compute_log_returns(_panel(prices)).returns[:, 0]
    b = compute_log_returns(_panel(np.array(prices) * scale)).returns[:, 0]
    np.testing.assert_allclose(b, a, rtol=1e-12, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(prices_st)
def test_log_returns_telescoping(prices):
    r = compute_log_returns(_panel(prices)).returns[:, 0]
    expected = math.log(prices[-1] / prices[0])
    assert r.sum() == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_sector_map(tmp_path, caplog):
    f = tmp_path / "s.csv"
    f.write_text("asset_id,major,minor\nXOM,BasicMaterials,Oil\nAAPL,Technology,\nWTI,Index,\n")
    m = load_sector_map(f)
    assert m["XOM"].sector == SectorLabel(Major.BASIC_MATERIALS, Minor.OIL)
    assert m["AAPL"].sector.minor is Minor.NONE
    assert m["WTI"].kind is AssetKind.INDEX and m["WTI"].sector is None

    f.write_text("asset_id,major,minor\nAAPL,Technology,Oil\n")
    with pytest.raises(DataError):
        load_sector_map(f)

    f.write_text("asset_id,major,minor\nAAPL,Tech,\n")
    with pytest.raises(ParseError):
        load_sector_map(f)

    f.write_text("asset_id,major,minor\nAAPL,Technology,\nAAPL,Finance,RealEstate\n")
    with pytest.raises(DataError, match="conflicting"):
        load_sector_map(f)

    f.write_text("")
    with caplog.at_level(logging.WARNING):
        assert load_sector_map(f) == {}
    assert "empty" in caplog.text


def test_sector_label_parse_round_trip():
    for label in (SectorLabel(Major.TECHNOLOGY), SectorLabel(Major.FINANCE, Minor.REAL_ESTATE)):
        assert SectorLabel.parse(str(label)) == label


def _series(name, pairs):
    dates = np.array([d for d, _ in pairs], dtype="datetime64[D]")
    return ExogenousSeries(name, dates, np.array([v for _, v in pairs], dtype=float))


@pytest.mark.parametrize(
    "libor, ffr, expected",
    [(5.0, 5.0, 0.0), (5.25, 5.0, 0.05)],
)
def test_libor_spread(libor, ffr, expected):
    lib = _series("libor", [("2007-01-02", libor)])
    fed = _series("ffr", [("2007-01-02", ffr)])
    out = derive_libor_spread(lib, fed, ["2007-01-01"])
    assert out.values[0] == pytest.approx(expected, abs=1e-15)


def test_libor_spread_uses_first_observation_on_or_after_quarter_start():
    lib = _series("libor", [("2006-12-29", 9.0), ("2007-01-03", 6.0), ("2007-01-04", 7.0)])
    fed = _series("ffr", [("2007-01-02", 4.0)])
    assert derive_libor_spread(lib, fed, ["2007-01-01"]).values[0] == pytest.approx(0.5)


def test_libor_spread_errors():
    lib = _series("libor", [("2007-01-02", 2.0)])
    with pytest.raises(ComputationError, match="2007-01-01"):
        derive_libor_spread(lib, _series("ffr", [("2007-01-02", 0.0)]), ["2007-01-01"])
    with pytest.raises(DataError, match="2007-04-01"):
        derive_libor_spread(lib, _series("ffr", [("2007-01-02", 1.0)]), ["2007-04-01"])


def test_exogenous_units_round_trip(tmp_path):
    s = ExogenousSeries("libor", np.array(["2007-01-02", "2007-04-02"], dtype="datetime64[D]"),
                        np.array([5.3, 5.35]), "percent per annum")
    f = tmp_path / "libor.csv"
    write_exogenous(s, f)
    back = load_exogenous(f)
    assert back.units == "percent per annum"
    assert back.values.tolist() == [5.3, 5.35]
    f.write_text("date,value\n2007-01-02,1\n2007-01-02,2\n")
    with pytest.raises(DataError, match="duplicate"):
        load_exogenous(f)


def test_quarter_starts():
    q = quarter_starts("2003-01-01", "2003-12-31")
    assert [str(d) for d in q] == ["2003-01-01", "2003-04-01", "2003-07-01", "2003-10-01"]
