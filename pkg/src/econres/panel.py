"""Country x shock panel of resilience records with covariates attached.

CSV layout (exact column order)::

    country, shock, year, r_en, r_ec, r_ev, i_r, class,
    not_computable_reason, <one column per covariate code>, continent

Floats are written with ``repr`` so a round trip is lossless; missing values
are empty cells. The JSON form carries the same rows plus the shock list,
configuration snapshot and source descriptors.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataError, DegenerateLevels, DuplicateCountry, UnknownContinent, UnknownCovariateCode
from .index import (
    ResilienceClass,
    ResilienceRecord,
    ResilienceVector,
    compute_record,
)
from .series import AnnualSeries, CountryMeta, NotComputable, Reason, ShockEvent, split_at_shock

COVARIATE_CODES = (
    "POP", "URB", "URB2", "LF", "EMP", "GDPpc", "GVA",
    "AGVA", "BGVA", "CGVA", "TRD", "FCE", "TXR", "TNR",
)

ALIGNMENTS = ("shock-year", "performance-mean")

PANEL_FORMAT = "econres-panel/1"


@dataclass(frozen=True)
class SplitPolicy:
    min_ref: int = 3
    min_perf: int = 2
    level_mode: str = "max"
    sign_convention: str = "corrected"


@dataclass(frozen=True)
class PanelRow:
    country_code: str
    shock_name: str
    shock_year: int
    outcome: ResilienceRecord | NotComputable
    covariates: Mapping[str, float | None]
    continent: str
    performance_years: tuple[int, int] | None = field(default=None, compare=False)

    @property
    def record(self) -> ResilienceRecord | None:
        return self.outcome if isinstance(self.outcome, ResilienceRecord) else None

    @property
    def reason(self) -> Reason | None:
        return self.outcome.reason if isinstance(self.outcome, NotComputable) else None


@dataclass(frozen=True)
class Panel:
    rows: tuple[PanelRow, ...]
    shocks: tuple[ShockEvent, ...]
    covariate_codes: tuple[str, ...] = COVARIATE_CODES
    provenance: tuple[dict, ...] = ()
    config_snapshot: dict = field(default_factory=dict)

    @property
    def countries(self) -> list[str]:
        return sorted({r.country_code for r in self.rows})

    def computable(self) -> list[PanelRow]:
        return [r for r in self.rows if r.record is not None]


def _row_for(series: AnnualSeries, shock: ShockEvent, policy: SplitPolicy):
    window = split_at_shock(series, shock, policy.min_ref, policy.min_perf, policy.level_mode)
    if isinstance(window, NotComputable):
        return window, None
    try:
        record = compute_record(window, policy.sign_convention)
    except DegenerateLevels:
        return NotComputable(Reason.DEGENERATE_LEVELS), None
    last = window.year_of(window.n)
    return record, (shock.reference_year + 1, last)


def build_panel(
    series_set: Iterable[AnnualSeries],
    shocks: Sequence[ShockEvent],
    meta: Mapping[str, CountryMeta],
    policy: SplitPolicy = SplitPolicy(),
    covariate_codes: Sequence[str] = COVARIATE_CODES,
    provenance: Sequence[dict] = (),
    config_snapshot: dict | None = None,
) -> Panel:
    """One row per (country, enabled shock), ordered by country then year."""
    active = sorted((s for s in shocks if s.enabled), key=lambda s: (s.reference_year, s.name))
    if not active:
        raise DataError("no enabled shocks")
    by_country: dict[str, AnnualSeries] = {}
    for s in series_set:
        if s.country_code in by_country:
            raise DuplicateCountry(f"two series for {s.country_code}")
        by_country[s.country_code] = s
    missing = sorted(c for c in by_country if c not in meta)
    if missing:
        raise UnknownContinent(f"no continent for {', '.join(missing)}")

    empty = {code: None for code in covariate_codes}
    rows = []
    for code in sorted(by_country):
        series = by_country[code]
        for shock in active:
            outcome, perf_years = _row_for(series, shock, policy)
            rows.append(PanelRow(
                country_code=code,
                shock_name=shock.name,
                shock_year=shock.reference_year,
                outcome=outcome,
                covariates=dict(empty),
                continent=meta[code].continent,
                performance_years=perf_years,
            ))
    return Panel(
        rows=tuple(rows),
        shocks=tuple(active),
        covariate_codes=tuple(covariate_codes),
        provenance=tuple(provenance),
        config_snapshot=dict(config_snapshot or {}),
    )


def _nearest_value(series: AnnualSeries | None, year: int, reach: int) -> float | None:
    if series is None:
        return None
    v = series.value_at(year)
    if v is not None:
        return v
    for d in range(1, reach + 1):
        for y in (year - d, year + d):  # earlier wins ties
            v = series.value_at(y)
            if v is not None:
                return v
    return None


def _period_mean(series: AnnualSeries | None, years: tuple[int, int] | None) -> float | None:
    if series is None or years is None:
        return None
    vals = [v for y, v in series.observed.items() if years[0] <= y <= years[1]]
    return math.fsum(vals) / len(vals) if vals else None


def attach_covariates(
    panel: Panel,
    covariate_series: Iterable[AnnualSeries],
    alignment: str = "shock-year",
    reach: int = 2,
) -> Panel:
    """Fill covariate values per row.

    ``"shock-year"`` takes the value at the shock year, falling back to the
    nearest observed year within ``reach`` years. ``"performance-mean"``
    averages the observed values over the row's performance period.
    Codes with at least one supplied series are recomputed for every row;
    other codes keep their current values.
    """
    if alignment not in ALIGNMENTS:
        raise ValueError(f"unknown alignment {alignment!r}")
    index: dict[tuple[str, str], AnnualSeries] = {}
    for s in covariate_series:
        if s.indicator_code not in panel.covariate_codes:
            raise UnknownCovariateCode(f"covariate {s.indicator_code!r} is not configured")
        index[(s.country_code, s.indicator_code)] = s
    supplied = {code for _, code in index}

    rows = []
    for row in panel.rows:
        cov = dict(row.covariates)
        for code in supplied:
            s = index.get((row.country_code, code))
            if alignment == "shock-year":
                cov[code] = _nearest_value(s, row.shock_year, reach)
            else:
                cov[code] = _period_mean(s, row.performance_years)
        rows.append(replace(row, covariates=cov))
    return replace(panel, rows=tuple(rows))


# -- serialization ---------------------------------------------------------

def panel_columns(covariate_codes: Sequence[str]) -> list[str]:
    return [
        "country", "shock", "year", "r_en", "r_ec", "r_ev", "i_r", "class",
        "not_computable_reason", *covariate_codes, "continent",
    ]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def row_to_dict(row: PanelRow, covariate_codes: Sequence[str]) -> dict:
    rec = row.record
    d = {
        "country": row.country_code,
        "shock": row.shock_name,
        "year": row.shock_year,
        "r_en": rec.vector.r_en if rec else None,
        "r_ec": rec.vector.r_ec if rec else None,
        "r_ev": rec.vector.r_ev if rec else None,
        "i_r": rec.i_r if rec else None,
        "class": rec.resilience_class.value if rec else None,
        "not_computable_reason": row.reason.value if row.reason else None,
    }
    for code in covariate_codes:
        d[code] = row.covariates.get(code)
    d["continent"] = row.continent
    return d


def panel_to_csv(panel: Panel) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = panel_columns(panel.covariate_codes)
    writer.writerow(cols)
    for row in panel.rows:
        d = row_to_dict(row, panel.covariate_codes)
        writer.writerow([_fmt(d[c]) for c in cols])
    return buf.getvalue()


def shock_to_dict(s: ShockEvent) -> dict:
    return {"name": s.name, "year": s.reference_year, "scale": s.scale_label, "enabled": s.enabled}


def panel_to_json(panel: Panel) -> str:
    doc = {
        "format": PANEL_FORMAT,
        "columns": panel_columns(panel.covariate_codes),
        "covariate_codes": list(panel.covariate_codes),
        "shocks": [shock_to_dict(s) for s in panel.shocks],
        "config": panel.config_snapshot,
        "provenance": list(panel.provenance),
        "rows": [row_to_dict(r, panel.covariate_codes) for r in panel.rows],
    }
    return json.dumps(doc, indent=1, ensure_ascii=False) + "\n"


def write_panel(panel: Panel, out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "panel.csv", out_dir / "panel.json"]
    paths[0].write_text(panel_to_csv(panel), encoding="utf-8")
    paths[1].write_text(panel_to_json(panel), encoding="utf-8")
    return paths


def _row_from_dict(d: Mapping, covariate_codes: Sequence[str], line: int) -> PanelRow:
    def num(key):
        v = d.get(key)
        if v is None or v == "":
            return None
        try:
            return float(v)
        except (TypeError, ValueError):
            raise DataError(f"row {line}: column {key!r} is not numeric: {v!r}") from None

    reason = d.get("not_computable_reason") or None
    if reason:
        try:
            outcome = NotComputable(Reason(reason))
        except ValueError:
            raise DataError(f"row {line}: unknown reason {reason!r}") from None
    else:
        i_r = num("i_r")
        cls = d.get("class")
        if i_r is None or not cls:
            raise DataError(f"row {line}: computable row without index/class")
        try:
            cls = ResilienceClass(cls)
        except ValueError:
            raise DataError(f"row {line}: unknown class {cls!r}") from None
        vector = ResilienceVector(num("r_en"), num("r_ec"), num("r_ev"), 1 if i_r >= 0 else -1)
        outcome = ResilienceRecord(vector, i_r, cls)
    try:
        year = int(d["year"])
    except (KeyError, TypeError, ValueError):
        raise DataError(f"row {line}: bad shock year") from None
    return PanelRow(
        country_code=str(d["country"]),
        shock_name=str(d["shock"]),
        shock_year=year,
        outcome=outcome,
        covariates={c: num(c) for c in covariate_codes},
        continent=str(d["continent"]),
    )


def _shocks_from_rows(rows: Sequence[PanelRow]) -> tuple[ShockEvent, ...]:
    seen = {(r.shock_year, r.shock_name) for r in rows}
    return tuple(ShockEvent(name, year) for year, name in sorted(seen))


def read_panel_csv(path: Path) -> Panel:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        cols = reader.fieldnames or []
        if cols[:9] != panel_columns(())[:9] or not cols or cols[-1] != "continent":
            raise DataError(f"{path}: not a panel CSV")
        covs = tuple(cols[9:-1])
        rows = tuple(_row_from_dict(d, covs, i + 2) for i, d in enumerate(reader))
    return Panel(rows=rows, shocks=_shocks_from_rows(rows), covariate_codes=covs)


def read_panel_json(path: Path) -> Panel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != PANEL_FORMAT:
        raise DataError(f"{path}: not a panel JSON document")
    covs = tuple(doc["covariate_codes"])
    rows = tuple(_row_from_dict(d, covs, i + 1) for i, d in enumerate(doc["rows"]))
    shocks = tuple(
        ShockEvent(s["name"], int(s["year"]), s.get("scale", ""), s.get("enabled", True))
        for s in doc["shocks"]
    )
    return Panel(
        rows=rows,
        shocks=shocks,
        covariate_codes=covs,
        provenance=tuple(doc.get("provenance", ())),
        config_snapshot=doc.get("config", {}),
    )


def read_panel(path: Path) -> Panel:
    path = Path(path)
    if path.is_dir():
        path = path / "panel.json"
    if path.suffix == ".csv":
        return read_panel_csv(path)
    return read_panel_json(path)
