"""Country trajectories across shocks and their geographic summaries.

A country is *Fixed* when all of its computable classes (at least two) agree
and *Commute* otherwise; fewer than two computable classes leaves it
*Insufficient*. Commute countries get an average class: the mean of the
class ordinals (Low=1, Medium=2, High=3) rounded half up.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import UnknownContinent
from .index import CLASS_ORDER, ResilienceClass
from .panel import Panel
from .series import CountryMeta
from .stats import GroupStats, grouped_errorbars


class Status(str, Enum):
    FIXED = "Fixed"
    COMMUTE = "Commute"
    INSUFFICIENT = "Insufficient"


@dataclass(frozen=True)
class CountryTrajectory:
    country_code: str
    classes_by_shock: tuple[tuple[int, ResilienceClass | None], ...]
    status: Status
    average_class: ResilienceClass | None

    @property
    def computable_classes(self) -> list[ResilienceClass]:
        return [c for _, c in self.classes_by_shock if c is not None]

    @property
    def map_class(self) -> ResilienceClass | None:
        """The class a map would colour: the fixed class or the average."""
        if self.status is Status.FIXED:
            return self.computable_classes[0]
        return self.average_class


@dataclass(frozen=True)
class ShiftRecord:
    continent: str
    shock_year: int
    shock_name: str
    net_shift: int
    promoted: int
    demoted: int
    pairs: int  # countries with a consecutive computable pair ending here


def round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def average_class(classes: Sequence[ResilienceClass]) -> ResilienceClass:
    mean = Fraction(sum(c.ordinal for c in classes), len(classes))
    return ResilienceClass.from_ordinal(round_half_up(mean))


def _by_country(panel: Panel) -> dict[str, list]:
    out: dict[str, list] = {}
    for row in sorted(panel.rows, key=lambda r: (r.country_code, r.shock_year, r.shock_name)):
        out.setdefault(row.country_code, []).append(row)
    return out


def fixed_commute_status(panel: Panel) -> list[CountryTrajectory]:
    result = []
    for code, rows in _by_country(panel).items():
        seq = tuple(
            (r.shock_year, r.record.resilience_class if r.record else None) for r in rows
        )
        classes = [c for _, c in seq if c is not None]
        if len(classes) < 2:
            status, avg = Status.INSUFFICIENT, None
        elif len(set(classes)) == 1:
            status, avg = Status.FIXED, None
        else:
            status, avg = Status.COMMUTE, average_class(classes)
        result.append(CountryTrajectory(code, seq, status, avg))
    return result


def shift_pyramid(panel: Panel, meta: Mapping[str, CountryMeta]) -> list[ShiftRecord]:
    """Net class promotions minus demotions per continent and shock.

    Each pair of consecutive computable classes of a country adds the sign
    of the change at the later shock; shocks a country could not be scored
    on are skipped, not treated as breaks. The earliest shock can never be
    the later member of a pair, so it gets no record.
    """
    shocks = sorted(panel.shocks, key=lambda s: (s.reference_year, s.name))
    names = {s.reference_year: s.name for s in shocks}
    later_years = [s.reference_year for s in shocks[1:]]

    by_country = _by_country(panel)
    missing = sorted(c for c in by_country if c not in meta)
    if missing:
        raise UnknownContinent(f"no continent for {', '.join(missing)}")
    continents = sorted({meta[c].continent for c in by_country})

    tally = {(cont, y): [0, 0, 0] for cont in continents for y in later_years}
    for code, rows in by_country.items():
        cont = meta[code].continent
        chain = [(r.shock_year, r.record.resilience_class) for r in rows if r.record is not None]
        for (_, prev), (year, cur) in zip(chain, chain[1:]):
            slot = tally[(cont, year)]
            step = cur.ordinal - prev.ordinal
            if step > 0:
                slot[0] += 1
            elif step < 0:
                slot[1] += 1
            slot[2] += 1
    return [
        ShiftRecord(cont, y, names[y], up - down, up, down, pairs)
        for (cont, y), (up, down, pairs) in sorted(tally.items(), key=lambda kv: (kv[0][1], kv[0][0]))
    ]


def global_shifts(records: Sequence[ShiftRecord]) -> dict[int, int]:
    out: dict[int, int] = {}
    for r in records:
        out[r.shock_year] = out.get(r.shock_year, 0) + r.net_shift
    return out


CONTINENT_MEASURES = ("i_r", "r_en", "r_ec", "r_ev")


def continent_errorbars(panel: Panel, level: float = 0.95) -> dict[str, list[GroupStats]]:
    return {m: grouped_errorbars(panel, m, "continent", level) for m in CONTINENT_MEASURES}


@dataclass(frozen=True)
class ShareCell:
    population: str  # "Fixed" or "Commute"
    continent: str  # a continent, or "Global"
    resilience_class: ResilienceClass
    count: int
    within_continent_pct: float | None
    within_class_pct: float | None
    population_pct: float | None
    total_pct: float | None


def _pct(part: int, whole: int) -> float | None:
    return 100.0 * part / whole if whole else None


def class_share_tabulation(
    trajectories: Sequence[CountryTrajectory],
    meta: Mapping[str, CountryMeta],
) -> list[ShareCell]:
    """Cross-tabulate Fixed and Commute countries by continent and class.

    For each population and continent row: the share of each class within
    the continent (rows sum to 100), the share of the continent within each
    class (columns sum to 100), the cell as a share of the whole population,
    and the cell as a share of all countries. ``Global`` rows hold the class
    totals.
    """
    total = len(trajectories)
    cells = []
    for status in (Status.FIXED, Status.COMMUTE):
        members = [t for t in trajectories if t.status is status]
        counts: dict[tuple[str, ResilienceClass], int] = {}
        for t in members:
            if t.country_code not in meta:
                raise UnknownContinent(f"no continent for {t.country_code}")
            key = (meta[t.country_code].continent, t.map_class)
            counts[key] = counts.get(key, 0) + 1
        continents = sorted({meta[t.country_code].continent for t in trajectories})
        pop_total = len(members)
        class_totals = {c: sum(n for (_, k), n in counts.items() if k is c) for c in CLASS_ORDER}
        for cls in CLASS_ORDER:
            n = class_totals[cls]
            cells.append(ShareCell(status.value, "Global", cls, n, _pct(n, pop_total), 100.0 if n else None,
                                   _pct(n, pop_total), _pct(n, total)))
        for cont in continents:
            row_total = sum(counts.get((cont, c), 0) for c in CLASS_ORDER)
            for cls in CLASS_ORDER:
                n = counts.get((cont, cls), 0)
                cells.append(ShareCell(status.value, cont, cls, n, _pct(n, row_total),
                                       _pct(n, class_totals[cls]), _pct(n, pop_total), _pct(n, total)))
    return cells


def status_shares(trajectories: Sequence[CountryTrajectory]) -> dict[str, float]:
    total = len(trajectories)
    return {s.value: _pct(sum(t.status is s for t in trajectories), total) or 0.0 for s in Status}


# -- output tables -------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Enum):
        return v.value
    return str(v)


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def trajectories_csv(trajectories: Sequence[CountryTrajectory], meta: Mapping[str, CountryMeta]) -> str:
    years = sorted({y for t in trajectories for y, _ in t.classes_by_shock})
    header = ["country", "continent", "status", "average_class", *[str(y) for y in years]]
    rows = []
    for t in trajectories:
        by_year = dict(t.classes_by_shock)
        cont = meta[t.country_code].continent if t.country_code in meta else ""
        rows.append([t.country_code, cont, t.status, t.average_class, *[by_year.get(y) for y in years]])
    return _csv(header, rows)


def choropleth_csv(trajectories: Sequence[CountryTrajectory], meta: Mapping[str, CountryMeta]) -> str:
    """Join table for mapping tools: ISO3, status, and the class to colour."""
    rows = []
    for t in trajectories:
        m = meta.get(t.country_code)
        rows.append([t.country_code, t.status, t.map_class, m.name if m else "", m.continent if m else ""])
    return _csv(["iso3", "status", "class", "name", "continent"], rows)


def shifts_csv(records: Sequence[ShiftRecord]) -> str:
    return _csv(
        ["continent", "year", "shock", "net_shift", "promoted", "demoted", "pairs"],
        [[r.continent, r.shock_year, r.shock_name, r.net_shift, r.promoted, r.demoted, r.pairs] for r in records],
    )


def shares_csv(cells: Sequence[ShareCell]) -> str:
    return _csv(
        ["population", "continent", "class", "count", "within_continent_pct",
         "within_class_pct", "population_pct", "total_pct"],
        [[c.population, c.continent, c.resilience_class, c.count, c.within_continent_pct,
          c.within_class_pct, c.population_pct, c.total_pct] for c in cells],
    )


ISO3_KEYS = ("ISO_A3", "iso_a3", "ADM0_A3", "ISO3", "iso3", "GID_0")


def geojson_join(
    boundaries: dict,
    trajectories: Sequence[CountryTrajectory],
    key: str | None = None,
) -> dict:
    """Copy of a FeatureCollection with resilience properties merged in.

    Features are matched on ``key`` (or the first ISO3-like property found,
    falling back to the feature ``id``). Unmatched features get null values.
    """
    by_code = {t.country_code: t for t in trajectories}
    features = []
    for feat in boundaries.get("features", []):
        props = dict(feat.get("properties") or {})
        code = None
        if key is not None:
            code = props.get(key)
        else:
            for k in ISO3_KEYS:
                if props.get(k):
                    code = props[k]
                    break
            else:
                code = feat.get("id")
        t = by_code.get(code)
        props["resilience_status"] = t.status.value if t else None
        props["resilience_class"] = t.map_class.value if t and t.map_class else None
        features.append({**feat, "properties": props})
    return {**boundaries, "features": features}


def geojson_join_text(boundaries_text: str, trajectories, key: str | None = None) -> str:
    return json.dumps(geojson_join(json.loads(boundaries_text), trajectories, key), ensure_ascii=False) + "\n"
