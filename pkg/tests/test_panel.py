import pytest

from econres.errors import DataError, DuplicateCountry, UnknownContinent, UnknownCovariateCode
from econres.panel import (
    Panel,
    SplitPolicy,
    attach_covariates,
    build_panel,
    panel_columns,
    panel_to_csv,
    panel_to_json,
    read_panel,
    write_panel,
)
from econres.series import AnnualSeries, CountryMeta, Reason, ShockEvent, series_from_values
from econres.testkit import (
    FIXTURE_SHOCKS,
    fixture_covariate_series,
    fixture_gdp_series,
    world_codes,
    world_gdp_series,
)
from econres.config import DEFAULT_SHOCKS
from econres.ingest import load_country_continents

META = load_country_continents()


def fixture_panel(alignment="shock-year"):
    panel = build_panel(fixture_gdp_series(), FIXTURE_SHOCKS, META, covariate_codes=("POP", "TRD"))
    covs = [AnnualSeries(s.country_code, {"SP.POP.TOTL": "POP", "NE.TRD.GNFS.ZS": "TRD"}[s.indicator_code], s.values)
            for s in fixture_covariate_series()]
    return attach_covariates(panel, covs, alignment)


class TestBuildPanel:
    def test_world_size(self):
        series = world_gdp_series(world_codes(200))
        panel = build_panel(series, DEFAULT_SHOCKS, META)
        assert len(DEFAULT_SHOCKS) == 15
        assert len(panel.shocks) == 14
        assert len(panel.rows) == 2800

    def test_single_short_country(self):
        s = series_from_values("GRC", "X", 1996, [1.0, 2.0])
        panel = build_panel([s], [ShockEvent("s", 1997)], META)
        assert len(panel.rows) == 1
        assert panel.rows[0].reason is Reason.INSUFFICIENT_REFERENCE

    def test_fixture(self):
        panel = fixture_panel()
        assert len(panel.rows) == 15
        assert len(panel.computable()) == 13
        failed = {(r.country_code, r.shock_year): r.reason for r in panel.rows if r.record is None}
        assert failed == {("KIR", 1987): Reason.INSUFFICIENT_REFERENCE, ("NGA", 2007): Reason.GAP_AT_SHOCK}
        keys = [(r.country_code, r.shock_year) for r in panel.rows]
        assert keys == sorted(keys)

    def test_duplicate_country(self):
        s = series_from_values("GRC", "X", 1990, [1.0] * 10)
        with pytest.raises(DuplicateCountry):
            build_panel([s, s], [ShockEvent("s", 1995)], META)

    def test_unknown_continent(self):
        s = series_from_values("ZZZ", "X", 1990, [1.0] * 10)
        with pytest.raises(UnknownContinent):
            build_panel([s], [ShockEvent("s", 1995)], META)

    def test_no_enabled_shocks(self):
        s = series_from_values("GRC", "X", 1990, [1.0] * 10)
        with pytest.raises(DataError):
            build_panel([s], [ShockEvent("s", 1995, enabled=False)], META)

    def test_degenerate_levels_become_not_computable(self):
        s = series_from_values("GRC", "X", 1990, [0.0] * 10)
        panel = build_panel([s], [ShockEvent("s", 1995)], META)
        assert panel.rows[0].reason is Reason.DEGENERATE_LEVELS

    def test_deterministic(self):
        assert panel_to_csv(fixture_panel()) == panel_to_csv(fixture_panel())
        assert panel_to_json(fixture_panel()) == panel_to_json(fixture_panel())

    def test_mean_mode_policy(self):
        panel = build_panel(fixture_gdp_series(), FIXTURE_SHOCKS, META, SplitPolicy(level_mode="mean"))
        assert len(panel.rows) == 15


class TestCovariates:
    def base(self):
        s = series_from_values("GRC", "GDP", 1990, [float(i) for i in range(1, 21)])
        return build_panel([s], [ShockEvent("s", 2000)], META, covariate_codes=("POP", "TRD"))

    def test_exact_year(self):
        p = attach_covariates(self.base(), [AnnualSeries("GRC", "POP", {1999: 1.0, 2000: 2.0, 2001: 3.0})])
        assert p.rows[0].covariates == {"POP": 2.0, "TRD": None}

    def test_fallback_next_year(self):
        p = attach_covariates(self.base(), [AnnualSeries("GRC", "POP", {2000: None, 2001: 3.0})])
        assert p.rows[0].covariates["POP"] == 3.0

    def test_earlier_wins_ties(self):
        p = attach_covariates(self.base(), [AnnualSeries("GRC", "POP", {1998: 1.0, 1999: None, 2000: None,
                                                                        2001: None, 2002: 5.0})])
        assert p.rows[0].covariates["POP"] == 1.0

    def test_out_of_reach(self):
        base = self.base()
        p = attach_covariates(base, [AnnualSeries("GRC", "POP", {1990: 1.0, 2010: 2.0})])
        assert p.rows[0].covariates["POP"] is None
        assert p.rows[0].outcome == base.rows[0].outcome

    def test_performance_mean(self):
        p = attach_covariates(self.base(), [AnnualSeries("GRC", "POP", {y: float(y - 2000) for y in range(1990, 2010)})],
                              "performance-mean")
        assert p.rows[0].covariates["POP"] == 5.0  # mean of 1..9 over 2001-2009

    def test_unknown_code(self):
        with pytest.raises(UnknownCovariateCode):
            attach_covariates(self.base(), [AnnualSeries("GRC", "XYZ", {2000: 1.0})])

    def test_records_untouched(self):
        a = build_panel(fixture_gdp_series(), FIXTURE_SHOCKS, META, covariate_codes=("POP", "TRD"))
        b = fixture_panel()
        assert [r.outcome for r in a.rows] == [r.outcome for r in b.rows]

    def test_fixture_fallbacks(self):
        rows = {(r.country_code, r.shock_year): r for r in fixture_panel().rows}
        assert rows[("JPN", 2007)].covariates["TRD"] is None
        assert rows[("GRC", 1997)].covariates["TRD"] is not None


class TestSerialization:
    def test_columns(self):
        assert panel_columns(("POP", "TRD")) == [
            "country", "shock", "year", "r_en", "r_ec", "r_ev", "i_r", "class",
            "not_computable_reason", "POP", "TRD", "continent"]

    @pytest.mark.parametrize("name", ["panel.json", "panel.csv"])
    def test_round_trip(self, tmp_path, name):
        panel = fixture_panel()
        write_panel(panel, tmp_path)
        back = read_panel(tmp_path / name)
        assert panel_to_csv(back) == panel_to_csv(panel)
        assert [r.outcome for r in back.rows] == [r.outcome for r in panel.rows]

    def test_csv_and_json_agree(self, tmp_path):
        write_panel(fixture_panel(), tmp_path)
        a = read_panel(tmp_path / "panel.csv")
        b = read_panel(tmp_path / "panel.json")
        assert a.rows == b.rows
