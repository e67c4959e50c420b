"""Synthetic series with known ground truth, and the bundled fixtures.

A :class:`SynthProfile` lays out a reference period (geometric trend), a
drop right after the shock, a designed first-recovery time and a post-shock
regime that ends above, at, or below the reference level. Optional noise is
bounded so none of those designed facts can change.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import InfeasibleProfile
from .index import ResilienceClass, ResilienceRecord, ResilienceVector, record_from_vector
from .panel import COVARIATE_CODES, Panel, PanelRow
from .series import AnnualSeries, CountryMeta, ShockEvent, series_from_values

POST_REGIMES = ("above", "at", "below")


@dataclass(frozen=True)
class SynthProfile:
    base_level: float = 100.0
    pre_trend: float = 0.02
    shock_drop: float = 0.1
    recovery_after: int | None = 3
    post_regime: str = "above"
    length: int = 30
    seed: int = 0
    shock_at: int | None = None  # 1-based index of the shock year; default length // 2
    rise: float = 0.1
    noise: float = 0.0
    start_year: int = 1960


@dataclass(frozen=True)
class GroundTruth:
    shock: ShockEvent
    c_R: float
    t_cR: int
    M_P: float
    recovery_index: int | None
    tau: int | None
    direction: int
    mean_side: int  # sign of mean(performance) - c_R


def generate(profile: SynthProfile) -> tuple[AnnualSeries, GroundTruth]:
    p = profile
    n = p.length
    k = p.shock_at if p.shock_at is not None else n // 2
    if p.base_level <= 0 or not -1 < p.pre_trend:
        raise InfeasibleProfile("series must stay strictly positive")
    if not 0 <= p.shock_drop < 1 or not 0 <= p.noise < 1 or p.rise <= 0:
        raise InfeasibleProfile("shock_drop and noise must lie in [0, 1), rise must be positive")
    if p.post_regime not in POST_REGIMES:
        raise InfeasibleProfile(f"unknown post regime {p.post_regime!r}")
    if not 1 <= k < n:
        raise InfeasibleProfile("shock must leave a non-empty performance period")
    never = p.recovery_after is None
    if never != (p.post_regime == "below"):
        raise InfeasibleProfile("the series recovers exactly when the regime is 'above' or 'at'")

    rng = random.Random(p.seed)
    ref = [p.base_level * (1 + p.pre_trend) ** i for i in range(k)]
    t_cr = k if p.pre_trend >= 0 else 1
    c_r = ref[t_cr - 1]
    for i in range(k):
        if i + 1 != t_cr and p.noise:
            ref[i] *= 1 - rng.random() * p.noise

    if never:
        rec = None
        last_dip = n
    else:
        if p.recovery_after < 1:
            raise InfeasibleProfile("recovery_after must be at least 1")
        rec = t_cr + p.recovery_after
        if not k < rec <= n:
            raise InfeasibleProfile(f"recovery index {rec} falls outside the performance period ({k + 1}..{n})")
        last_dip = rec - 1
    if last_dip > k and p.shock_drop == 0:
        raise InfeasibleProfile("a zero drop recovers immediately")

    deficits: list[float] = []
    for j in range(k + 1, last_dip + 1):
        if never:
            f = p.shock_drop * (1 - 0.5 * (j - k - 1) / (n - k))
        else:
            f = p.shock_drop * (1 - (j - k - 1) / (rec - k))
        if p.noise:
            f *= 1 - 0.5 * rng.random() * p.noise
        deficits.append(f)
    surpluses: list[float] = []
    if rec is not None:
        for _ in range(rec, n + 1):
            if p.post_regime == "at":
                surpluses.append(0.0)
            else:
                surpluses.append(p.rise * (1 + (rng.random() * p.noise if p.noise else 0.0)))

    perf = [c_r * (1 - f) for f in deficits] + [c_r * (1 + s) if s else c_r for s in surpluses]
    balance = math.fsum(surpluses) - math.fsum(deficits)
    if balance != 0 and abs(balance) < 1e-9 * n:
        raise InfeasibleProfile("performance mean too close to the reference level to be designed")

    values = ref + perf
    series = series_from_values("SYN", "SYNTH", p.start_year, values)
    shock = ShockEvent("synthetic", p.start_year + k - 1, "Synthetic")
    truth = GroundTruth(
        shock=shock,
        c_R=c_r,
        t_cR=t_cr,
        M_P=max(perf),
        recovery_index=rec,
        tau=None if rec is None else rec - t_cr,
        direction=-1 if p.post_regime == "below" else 1,
        mean_side=(balance > 0) - (balance < 0),
    )
    return series, truth


def random_profile(rng: random.Random) -> SynthProfile:
    """Draw a feasible profile (retrying is left to :func:`random_case`)."""
    length = rng.randint(6, 61)
    shock_at = rng.randint(3, length - 2)
    regime = rng.choice(POST_REGIMES)
    pre_trend = rng.choice([0.0, rng.uniform(-0.05, 0.08)])
    t_cr = shock_at if pre_trend >= 0 else 1
    recovery = None
    if regime != "below":
        recovery = rng.randint(shock_at + 1 - t_cr, length - t_cr)
    drop = rng.uniform(0.01, 0.6)
    if recovery is not None and t_cr + recovery == shock_at + 1 and rng.random() < 0.2:
        drop = 0.0
    return SynthProfile(
        base_level=rng.uniform(1.0, 1e6),
        pre_trend=pre_trend,
        shock_drop=drop,
        recovery_after=recovery,
        post_regime=regime,
        length=length,
        seed=rng.randrange(2**32),
        shock_at=shock_at,
        rise=rng.uniform(0.01, 0.5),
        noise=rng.choice([0.0, rng.uniform(0.0, 0.5)]),
    )


def random_case(rng: random.Random) -> tuple[SynthProfile, AnnualSeries, GroundTruth]:
    while True:
        profile = random_profile(rng)
        try:
            series, truth = generate(profile)
        except InfeasibleProfile:
            continue
        return profile, series, truth


# -- bundled fixtures ------------------------------------------------------------

FIXTURE_SHOCKS = (
    ShockEvent("Black Monday", 1987, "Global"),
    ShockEvent("Asian Financial Crisis", 1997, "International"),
    ShockEvent("Worldwide financial crisis", 2007, "Global"),
)

FIXTURE_YEARS = range(1960, 2021)


def _path(level: float, growth: dict[int, float], default: float) -> list[float]:
    out = []
    for year in FIXTURE_YEARS:
        out.append(round(level, 2))
        level *= 1 + growth.get(year + 1, default)
    return out


def _span(first: int, last: int, rate: float) -> dict[int, float]:
    return {y: rate for y in range(first, last + 1)}


def fixture_gdp_series() -> list[AnnualSeries]:
    """Five countries, 1960-2020, shaped to cover all three classes.

    Two country-shock pairs are designed to fail: KIR has no data before
    1990 (1987 lacks a reference period) and NGA is missing 2007.
    """
    paths = {
        # steady growth with shallow dips, then a slump after 2007 it never makes up
        "BRA": _path(2.0e10, {**_span(1982, 1983, -0.03), **_span(1988, 1988, -0.02),
                              **_span(1998, 1999, -0.01), **_span(2008, 2012, -0.03),
                              **_span(2013, 2020, 0.005)}, 0.045),
        # long boom, then a deep slump that never regains the 2007 level
        "GRC": _path(1.5e10, {**_span(1988, 1988, -0.01), **_span(1998, 1999, 0.01),
                              **_span(2008, 2013, -0.05), **_span(2014, 2020, 0.005)}, 0.04),
        # fast growth until 1997, a drop, stagnation below the old peak, late recovery
        "JPN": _path(4.0e11, {**_span(1988, 1988, -0.01), **_span(1998, 1999, -0.06),
                              **_span(2000, 2004, 0.005), **_span(2005, 2011, 0.012),
                              **_span(2012, 2020, 0.004)}, 0.05),
        "KIR": _path(5.0e7, {**_span(1998, 1999, -0.08), **_span(2000, 2006, 0.0075),
                             **_span(2008, 2012, -0.02)}, 0.03),
        "NGA": _path(3.0e10, {**_span(1988, 1990, -0.04), **_span(1991, 1994, 0.003),
                              **_span(1995, 2002, 0.02), **_span(1998, 1998, -0.05)}, 0.035),
    }
    out = []
    for code, values in sorted(paths.items()):
        vals: list[float | None] = list(values)
        if code == "KIR":
            vals = [None if y < 1990 else v for y, v in zip(FIXTURE_YEARS, vals)]
        if code == "NGA":
            vals[2007 - 1960] = None
        out.append(series_from_values(code, "NY.GDP.MKTP.KD", 1960, vals))
    return out


FIXTURE_COVARIATES = {"POP": "SP.POP.TOTL", "TRD": "NE.TRD.GNFS.ZS"}


def fixture_covariate_series() -> list[AnnualSeries]:
    out = []
    pops = {"BRA": 7.2e7, "GRC": 8.3e6, "JPN": 9.3e7, "KIR": 4.1e4, "NGA": 4.5e7}
    trades = {"BRA": 14.0, "GRC": 30.0, "JPN": 20.0, "KIR": 90.0, "NGA": 25.0}
    for code in sorted(pops):
        pop = [round(pops[code] * 1.015 ** i) * 1.0 for i in range(len(FIXTURE_YEARS))]
        trd = [round(trades[code] + 0.25 * i, 2) for i in range(len(FIXTURE_YEARS))]
        if code == "GRC":
            # missing at 1997 itself: falls back to 1996 (earlier wins the tie)
            trd[1997 - 1960] = None
        if code == "JPN":
            # nothing within two years of 2007
            for y in range(2005, 2010):
                trd[y - 1960] = None
        out.append(series_from_values(code, FIXTURE_COVARIATES["POP"], 1960, pop))
        out.append(series_from_values(code, FIXTURE_COVARIATES["TRD"], 1960, trd))
    return out


def fixture_config(gdp: str = "gdp.csv", covariates: str = "covariates.csv", output_dir: str = "out") -> dict:
    return {
        "gdp": {"path": gdp, "indicator": "NY.GDP.MKTP.KD"},
        "covariates": {"path": covariates, "indicators": dict(FIXTURE_COVARIATES)},
        "shocks": [
            {"name": s.name, "year": s.reference_year, "scale": s.scale_label, "enabled": True}
            for s in FIXTURE_SHOCKS
        ],
        "split": {"min_ref": 3, "min_perf": 2, "level_mode": "max"},
        "sign_convention": "corrected",
        "confidence_level": 0.95,
        "covariate_alignment": "shock-year",
        "levene": True,
        "year_range": [1960, 2020],
        "output_dir": output_dir,
    }


def write_fixture(directory: str | Path) -> Path:
    """Write the 5x3 fixture (GDP, covariates, config) and return the config path."""
    from .ingest import write_wdi_csv

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    years = list(FIXTURE_YEARS)
    write_wdi_csv(directory / "gdp.csv", fixture_gdp_series(), years=years)
    write_wdi_csv(directory / "covariates.csv", fixture_covariate_series(), years=years)
    cfg = directory / "config.json"
    cfg.write_text(json.dumps(fixture_config(), indent=2) + "\n", encoding="utf-8")
    return cfg


def world_gdp_series(codes, seed: int = 2021, years=FIXTURE_YEARS) -> list[AnnualSeries]:
    """One random-walk GDP series per code, strictly positive, no gaps."""
    rng = random.Random(seed)
    out = []
    for code in codes:
        level = 10 ** rng.uniform(8, 12)
        drift = rng.uniform(-0.005, 0.05)
        vol = rng.uniform(0.005, 0.06)
        vals = []
        for _ in years:
            vals.append(level)
            level *= math.exp(drift + rng.gauss(0.0, vol))
        out.append(series_from_values(code, "NY.GDP.MKTP.KD", years[0], vals))
    return out


def world_codes(n: int = 200) -> list[str]:
    """The first ``n`` codes of the shipped country table, alphabetically."""
    from .ingest import load_country_continents

    return sorted(load_country_continents())[:n]


def write_world_fixture(directory: str | Path, n: int = 200, seed: int = 2021) -> Path:
    """Write an ``n``-country random-walk GDP file and a default-calendar config."""
    from .ingest import write_wdi_csv

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_wdi_csv(directory / "gdp.csv", world_gdp_series(world_codes(n), seed), years=list(FIXTURE_YEARS))
    cfg = directory / "config.json"
    doc = {"gdp": {"path": "gdp.csv"}, "output_dir": "out"}
    cfg.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return cfg


# -- hand-counted geographic fixture ---------------------------------------------------

_CANNED = {
    ResilienceClass.LOW: ResilienceVector(0.0, math.exp(-0.2), 0.8, -1),
    ResilienceClass.MEDIUM: ResilienceVector(0.25, 1.05, 0.9, 1),
    ResilienceClass.HIGH: ResilienceVector(1.0, 1.3, 1.1, 1),
}


def canned_record(cls: ResilienceClass) -> ResilienceRecord:
    record = record_from_vector(_CANNED[cls])
    assert record.resilience_class is cls
    return record


GEO_SHOCKS = (
    ShockEvent("Latin American debt crisis", 1980, "International"),
    ShockEvent("Asian Financial Crisis", 1997, "International"),
    ShockEvent("Worldwide financial crisis", 2007, "Global"),
)

L, M, H = ResilienceClass.LOW, ResilienceClass.MEDIUM, ResilienceClass.HIGH

# country -> (continent, classes per GEO_SHOCKS; None = not computable)
GEO_FIXTURE = {
    "AAA": ("Europe", (M, M, M)),       # fixed Medium
    "BBB": ("Europe", (H, H, H)),       # fixed High
    "CCC": ("Europe", (M, H, H)),       # commute, 8/3 -> High
    "DDD": ("Europe", (L, M, None)),    # commute, 1.5 -> Medium
    "EEE": ("Africa", (H, H, None)),    # fixed High
    "FFF": ("Africa", (H, L, H)),       # commute, 7/3 -> Medium
    "GGG": ("Africa", (L, None, None)), # insufficient
    "HHH": ("Africa", (H, M, H)),       # commute, 8/3 -> High
}


def geo_fixture() -> tuple[Panel, dict[str, CountryMeta]]:
    from .series import NotComputable, Reason

    rows = []
    meta = {}
    for code, (continent, classes) in sorted(GEO_FIXTURE.items()):
        meta[code] = CountryMeta(code, code, continent)
        for shock, cls in zip(GEO_SHOCKS, classes):
            outcome = canned_record(cls) if cls is not None else NotComputable(Reason.INSUFFICIENT_PERFORMANCE)
            rows.append(PanelRow(code, shock.name, shock.reference_year, outcome,
                                 {c: None for c in COVARIATE_CODES}, continent))
    return Panel(rows=tuple(rows), shocks=GEO_SHOCKS), meta
