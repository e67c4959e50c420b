"""Annual series and their segmentation around a shock year.

A shock splits the longest gap-free run of observations that contains the
shock year into a reference period (years up to and including the shock
year) and a performance period (the years after it). Positions inside that
run are 1-based time indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

CONTINENTS = ("Africa", "Asia", "Europe", "North America", "Oceania", "South America")

LEVEL_MODES = ("max", "mean")


@dataclass(frozen=True)
class AnnualSeries:
    """One country's yearly values for one indicator.

    ``values`` maps calendar year to a float, or to ``None`` for an explicitly
    missing year. Years absent from the mapping are also treated as missing.
    """

    country_code: str
    indicator_code: str
    values: Mapping[int, float | None]

    def __post_init__(self):
        years = list(self.values)
        if any(b <= a for a, b in zip(years, years[1:])):
            raise ValueError(f"{self.country_code}: years must be strictly increasing")
        if not any(v is not None for v in self.values.values()):
            raise ValueError(f"{self.country_code}/{self.indicator_code}: no observed values")

    @property
    def observed(self) -> dict[int, float]:
        return {y: v for y, v in self.values.items() if v is not None}

    def value_at(self, year: int) -> float | None:
        return self.values.get(year)

    @property
    def first_year(self) -> int:
        return next(iter(self.values))

    @property
    def last_year(self) -> int:
        return next(reversed(self.values))


@dataclass(frozen=True)
class ShockEvent:
    name: str
    reference_year: int
    scale_label: str = ""
    enabled: bool = True


@dataclass(frozen=True)
class CountryMeta:
    country_code: str
    name: str
    continent: str


class Reason(str, Enum):
    INSUFFICIENT_REFERENCE = "InsufficientReference"
    INSUFFICIENT_PERFORMANCE = "InsufficientPerformance"
    GAP_AT_SHOCK = "GapAtShock"
    NO_DATA = "NoData"
    DEGENERATE_LEVELS = "DegenerateLevels"


@dataclass(frozen=True)
class NotComputable:
    """Marker for a country-shock pair that yields no window or record."""

    reason: Reason

    def __str__(self):
        return self.reason.value


@dataclass(frozen=True)
class ShockWindow:
    reference_segment: tuple[tuple[int, float], ...]
    performance_segment: tuple[tuple[int, float], ...]
    c_R: float
    t_cR: int
    M_P: float
    n: int
    n_P: int
    first_year: int | None = field(default=None, compare=False)
    level_mode: str = "max"

    @property
    def reference_values(self) -> list[float]:
        return [v for _, v in self.reference_segment]

    @property
    def performance_values(self) -> list[float]:
        return [v for _, v in self.performance_segment]

    @property
    def shock_index(self) -> int:
        return len(self.reference_segment)

    def year_of(self, index: int) -> int | None:
        if self.first_year is None:
            return None
        return self.first_year + index - 1


def make_window(
    reference: Sequence[float],
    performance: Sequence[float],
    level_mode: str = "max",
    first_year: int | None = None,
) -> ShockWindow:
    """Build a window from the two value segments directly.

    With ``level_mode="max"`` the reference level is the reference maximum;
    ``"mean"`` uses the reference average instead. In both modes ``t_cR`` is
    the latest reference index whose value reaches the level.
    """
    if not reference or not performance:
        raise ValueError("both segments must be non-empty")
    if level_mode not in LEVEL_MODES:
        raise ValueError(f"unknown level mode {level_mode!r}")
    ref = tuple((i + 1, float(v)) for i, v in enumerate(reference))
    k = len(ref)
    perf = tuple((k + i + 1, float(v)) for i, v in enumerate(performance))
    for _, v in ref + perf:
        if not math.isfinite(v):
            raise ValueError("segment values must be finite")
    ref_values = [v for _, v in ref]
    if level_mode == "max":
        c_r = max(ref_values)
    else:
        c_r = math.fsum(ref_values) / k
    t_cr = max(i for i, v in ref if v >= c_r)
    return ShockWindow(
        reference_segment=ref,
        performance_segment=perf,
        c_R=c_r,
        t_cR=t_cr,
        M_P=max(v for _, v in perf),
        n=k + len(perf),
        n_P=len(perf),
        first_year=first_year,
        level_mode=level_mode,
    )


def _run_containing(years: list[int], year: int) -> list[int]:
    i = years.index(year)
    lo = i
    while lo > 0 and years[lo - 1] == years[lo] - 1:
        lo -= 1
    hi = i
    while hi + 1 < len(years) and years[hi + 1] == years[hi] + 1:
        hi += 1
    return years[lo : hi + 1]


def split_at_shock(
    series: AnnualSeries,
    shock: ShockEvent,
    min_ref: int = 3,
    min_perf: int = 2,
    level_mode: str = "max",
) -> ShockWindow | NotComputable:
    """Split ``series`` into reference and performance periods at ``shock``.

    Only the gap-free run of observed years that contains the shock year is
    used; the shock year itself closes the reference period. Returns a
    :class:`NotComputable` marker when the run cannot support a window.
    """
    if min_ref < 1 or min_perf < 1:
        raise ValueError("min_ref and min_perf must be at least 1")
    observed = series.observed
    if not observed:
        return NotComputable(Reason.NO_DATA)
    years = sorted(observed)
    t_k = shock.reference_year

    if t_k not in observed:
        before = years[0] < t_k
        after = years[-1] > t_k
        if before and after:
            return NotComputable(Reason.GAP_AT_SHOCK)
        if after:
            return NotComputable(Reason.INSUFFICIENT_REFERENCE)
        return NotComputable(Reason.INSUFFICIENT_PERFORMANCE)

    run = _run_containing(years, t_k)
    ref_years = [y for y in run if y <= t_k]
    perf_years = [y for y in run if y > t_k]
    if not perf_years and years[-1] > t_k:
        return NotComputable(Reason.GAP_AT_SHOCK)
    # a short reference period is reported even when the performance period is short too
    if len(ref_years) < min_ref:
        return NotComputable(Reason.INSUFFICIENT_REFERENCE)
    if len(perf_years) < min_perf:
        return NotComputable(Reason.INSUFFICIENT_PERFORMANCE)

    return make_window(
        [observed[y] for y in ref_years],
        [observed[y] for y in perf_years],
        level_mode=level_mode,
        first_year=ref_years[0],
    )


def window_levels(window: ShockWindow) -> tuple[float, int, float]:
    return window.c_R, window.t_cR, window.M_P


def series_from_values(
    country_code: str,
    indicator_code: str,
    first_year: int,
    values: Iterable[float | None],
) -> AnnualSeries:
    """Convenience constructor for consecutive years starting at ``first_year``."""
    return AnnualSeries(
        country_code,
        indicator_code,
        {first_year + i: (None if v is None else float(v)) for i, v in enumerate(values)},
    )
