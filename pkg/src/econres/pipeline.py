"""Batch pipeline: ingest -> compute -> analyze -> render, plus validation.

Every step reads what the previous one wrote under the output directory, so
running the subcommands one after another produces the same tree as
:func:`run_pipeline`. Output layout::

    data/gdp.csv, data/covariates.csv, data/sources.json
    panel.csv, panel.json
    tables/class_errorbars_components.csv    (components by class)
    tables/class_errorbars_covariates.csv    (covariates by class)
    tables/levene_by_class.csv               (only with "levene": true)
    tables/trajectories.csv, tables/choropleth.csv, tables/class_shares.csv
    tables/choropleth.geojson                (only with "boundaries")
    tables/shifts.csv
    tables/continent_errorbars.csv
    charts/*.svg
    manifest.json
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import RunConfig
from .errors import DataError, InsufficientData, InvariantViolation
from .geo import (
    choropleth_csv,
    class_share_tabulation,
    continent_errorbars,
    fixed_commute_status,
    geojson_join_text,
    shares_csv,
    shift_pyramid,
    shifts_csv,
    trajectories_csv,
)
from .index import SQRT3, classify
from .ingest import (
    SourceDescriptor,
    WdiFile,
    fetch_indicator,
    load_country_continents,
    read_wdi_csv,
    wdi_csv_text,
)
from .panel import Panel, attach_covariates, build_panel, read_panel, write_panel
from .render import errorbar_svg
from .series import CONTINENTS, AnnualSeries, CountryMeta, Reason
from .stats import COMPONENT_SELECTORS, GroupStats, grouped_errorbars, grouped_levene

logger = logging.getLogger(__name__)

ERRORBAR_HEADER = ["measure", "group", "n", "mean", "sd", "ci_low", "ci_high", "level"]


@dataclass
class IngestResult:
    gdp: list[AnnualSeries]
    covariates: list[AnnualSeries]
    descriptors: list[SourceDescriptor]
    dropped_no_data: list[str] = field(default_factory=list)
    dropped_unmapped: list[str] = field(default_factory=list)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _load_source(cfg: RunConfig, spec, indicators: Sequence[str]) -> list[WdiFile]:
    if spec.path is not None:
        return [read_wdi_csv(cfg.resolve(spec.path), location=spec.path)]
    fetch = dict(spec.fetch)
    kwargs = {
        "country_filter": fetch.get("countries", "all"),
        "year_range": tuple(fetch.get("year_range", cfg.year_range)),
    }
    if "base_url" in fetch:
        kwargs["base_url"] = fetch["base_url"]
    if "snapshot_dir" in fetch:
        kwargs["snapshot_dir"] = cfg.resolve(fetch["snapshot_dir"])
    return [fetch_indicator(code, **kwargs) for code in indicators]


def _clip(s: AnnualSeries, years: tuple[int, int], code: str | None = None) -> AnnualSeries | None:
    lo, hi = years
    vals = {y: v for y, v in s.values.items() if lo <= y <= hi}
    if not any(v is not None for v in vals.values()):
        return None
    return AnnualSeries(s.country_code, code or s.indicator_code, vals)


def load_meta(cfg: RunConfig) -> dict[str, CountryMeta]:
    path = cfg.resolve(cfg.countries) if cfg.countries else None
    return load_country_continents(path, cfg.continent_overrides)


def ingest(cfg: RunConfig, meta: dict[str, CountryMeta] | None = None) -> IngestResult:
    """Read (or fetch) the configured sources and keep only panel countries.

    Rows for codes missing from the country table (regional aggregates such
    as WLD or EUU) and countries with no GDP data in range are dropped and
    reported.
    """
    meta = meta if meta is not None else load_meta(cfg)
    files = _load_source(cfg, cfg.gdp, [cfg.gdp_indicator])
    descriptors = [f.descriptor for f in files if f.descriptor]
    gdp: dict[str, AnnualSeries] = {}
    seen: set[str] = set()
    for f in files:
        seen |= {c for c, ind in f.empty_rows if ind == cfg.gdp_indicator}
        for s in f.series:
            if s.indicator_code != cfg.gdp_indicator:
                continue
            seen.add(s.country_code)
            clipped = _clip(s, cfg.year_range)
            if clipped is not None:
                gdp[s.country_code] = clipped
    if not gdp:
        raise DataError(f"no {cfg.gdp_indicator} series in the GDP source")
    unmapped = sorted(c for c in gdp if c not in meta)
    for c in unmapped:
        del gdp[c]
    no_data = sorted(c for c in seen if c not in gdp and c in meta)

    covs: list[AnnualSeries] = []
    if cfg.covariates is not None:
        by_indicator = {v: k for k, v in cfg.covariate_indicators.items()}
        files = _load_source(cfg, cfg.covariates, list(cfg.covariate_indicators.values()))
        descriptors += [f.descriptor for f in files if f.descriptor]
        for f in files:
            for s in f.series:
                code = by_indicator.get(s.indicator_code)
                if code is None or s.country_code not in gdp:
                    continue
                clipped = _clip(s, cfg.year_range, code)
                if clipped is not None:
                    covs.append(clipped)
    if unmapped:
        logger.info("dropped %d codes absent from the country table", len(unmapped))
    return IngestResult(
        gdp=[gdp[c] for c in sorted(gdp)],
        covariates=sorted(covs, key=lambda s: (s.indicator_code, s.country_code)),
        descriptors=descriptors,
        dropped_no_data=no_data,
        dropped_unmapped=unmapped,
    )


def write_ingest(result: IngestResult, cfg: RunConfig, out: Path) -> list[Path]:
    years = list(range(cfg.year_range[0], cfg.year_range[1] + 1))
    paths = [_write(out / "data" / "gdp.csv", wdi_csv_text(result.gdp, years=years))]
    if result.covariates:
        paths.append(_write(out / "data" / "covariates.csv", wdi_csv_text(result.covariates, years=years)))
    sources = {
        "sources": [d.to_dict(with_time=False) for d in result.descriptors],
        "dropped_no_data": result.dropped_no_data,
        "dropped_unmapped": result.dropped_unmapped,
    }
    paths.append(_write(out / "data" / "sources.json", json.dumps(sources, indent=1) + "\n"))
    return paths


def read_ingest(out: Path) -> IngestResult:
    data = out / "data"
    gdp = read_wdi_csv(data / "gdp.csv").series
    covs = read_wdi_csv(data / "covariates.csv").series if (data / "covariates.csv").exists() else []
    sources = json.loads((data / "sources.json").read_text(encoding="utf-8"))
    descs = [SourceDescriptor(retrieved_at="", **d) for d in sources["sources"]]
    return IngestResult(gdp, covs, descs, sources["dropped_no_data"], sources["dropped_unmapped"])


def compute(cfg: RunConfig, data: IngestResult, meta: dict[str, CountryMeta] | None = None) -> Panel:
    meta = meta if meta is not None else load_meta(cfg)
    panel = build_panel(
        data.gdp,
        cfg.shocks,
        meta,
        cfg.policy,
        covariate_codes=cfg.covariate_codes,
        provenance=[d.to_dict(with_time=False) for d in data.descriptors],
        config_snapshot=cfg.snapshot(),
    )
    if data.covariates:
        panel = attach_covariates(panel, data.covariates, cfg.covariate_alignment)
    return panel


# -- analyses ----------------------------------------------------------------------

def panel_level(panel: Panel, level: float | None = None) -> float:
    if level is not None:
        return level
    return float(panel.config_snapshot.get("confidence_level", 0.95))


def meta_for_panel(panel: Panel) -> dict[str, CountryMeta]:
    """Continents as recorded in the panel rows; names from the shipped table."""
    names = {c: m.name for c, m in load_country_continents().items()}
    return {
        r.country_code: CountryMeta(r.country_code, names.get(r.country_code, r.country_code), r.continent)
        for r in panel.rows
    }


def errorbar_table(tables: dict[str, list[GroupStats]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ERRORBAR_HEADER)
    for measure, groups in tables.items():
        for g in groups:
            w.writerow([measure, g.group_label, g.n, _fmt(g.mean), _fmt(g.sd),
                        _fmt(g.ci_low), _fmt(g.ci_high), _fmt(g.level)])
    return buf.getvalue()


def read_errorbar_table(path: Path) -> dict[str, list[GroupStats]]:
    def num(v):
        return float(v) if v != "" else None

    out: dict[str, list[GroupStats]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        for d in csv.DictReader(f):
            out.setdefault(d["measure"], []).append(GroupStats(
                d["group"], int(d["n"]), num(d["mean"]), num(d["sd"]),
                num(d["ci_low"]), num(d["ci_high"]), float(d["level"])))
    return out


def analyze_class_errorbars(panel: Panel, out: Path, level: float | None = None, levene: bool | None = None) -> list[Path]:
    level = panel_level(panel, level)
    components = {m: grouped_errorbars(panel, m, "class", level) for m in ("r_en", "r_ec", "r_ev")}
    covariates = {c: grouped_errorbars(panel, c, "class", level) for c in panel.covariate_codes}
    paths = [
        _write(out / "tables" / "class_errorbars_components.csv", errorbar_table(components)),
        _write(out / "tables" / "class_errorbars_covariates.csv", errorbar_table(covariates)),
    ]
    if levene is None:
        levene = bool(panel.config_snapshot.get("levene", False))
    if levene:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["measure", "w_statistic", "df1", "df2", "p_value"])
        for m in (*("r_en", "r_ec", "r_ev", "i_r"), *panel.covariate_codes):
            try:
                r = grouped_levene(panel, m, "class")
            except (InsufficientData, DataError):
                w.writerow([m, "", "", "", ""])
                continue
            w.writerow([m, _fmt(r.w_statistic), r.df1, r.df2, _fmt(r.p_value)])
        paths.append(_write(out / "tables" / "levene_by_class.csv", buf.getvalue()))
    return paths


def analyze_fixed_commute(panel: Panel, out: Path, boundaries: Path | None = None, key: str | None = None) -> list[Path]:
    meta = meta_for_panel(panel)
    traj = fixed_commute_status(panel)
    paths = [
        _write(out / "tables" / "trajectories.csv", trajectories_csv(traj, meta)),
        _write(out / "tables" / "choropleth.csv", choropleth_csv(traj, meta)),
        _write(out / "tables" / "class_shares.csv", shares_csv(class_share_tabulation(traj, meta))),
    ]
    if boundaries is not None:
        text = Path(boundaries).read_text(encoding="utf-8")
        paths.append(_write(out / "tables" / "choropleth.geojson", geojson_join_text(text, traj, key)))
    return paths


def analyze_shifts(panel: Panel, out: Path) -> list[Path]:
    return [_write(out / "tables" / "shifts.csv", shifts_csv(shift_pyramid(panel, meta_for_panel(panel))))]


def analyze_continents(panel: Panel, out: Path, level: float | None = None) -> list[Path]:
    tables = continent_errorbars(panel, panel_level(panel, level))
    return [_write(out / "tables" / "continent_errorbars.csv", errorbar_table(tables))]


CHART_SOURCES = (
    ("class_errorbars_components.csv", "class"),
    ("class_errorbars_covariates.csv", "class"),
    ("continent_errorbars.csv", "continent"),
)


def render(out: Path) -> list[Path]:
    paths = []
    for name, kind in CHART_SOURCES:
        src = out / "tables" / name
        if not src.exists():
            continue
        for measure, groups in read_errorbar_table(src).items():
            level = groups[0].level if groups else 0.95
            title = f"{measure} by {kind} ({level * 100:.0f}% CI)"
            svg = errorbar_svg(groups, title, measure)
            paths.append(_write(out / "charts" / f"{kind}_{measure}.svg", svg))
    return paths


# -- validation ----------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    row: int | None  # 1-based data row, None for panel-wide checks
    country: str | None
    shock: str | None
    check: str
    detail: str

    def to_dict(self) -> dict:
        return {"row": self.row, "country": self.country, "shock": self.shock,
                "check": self.check, "detail": self.detail}


TOL = 1e-9


def validate_panel(panel: Panel) -> list[Violation]:
    out: list[Violation] = []
    seen: dict[tuple[str, str], int] = {}
    continents: dict[str, str] = {}
    for i, row in enumerate(panel.rows, start=1):
        def bad(check, detail):
            out.append(Violation(i, row.country_code, row.shock_name, check, detail))

        key = (row.country_code, row.shock_name)
        if key in seen:
            bad("unique_pair", f"duplicates row {seen[key]}")
        seen.setdefault(key, i)
        if row.continent not in CONTINENTS:
            bad("continent_label", f"unknown continent {row.continent!r}")
        if continents.setdefault(row.country_code, row.continent) != row.continent:
            bad("one_continent", f"{row.continent} vs {continents[row.country_code]}")
        if set(row.covariates) != set(panel.covariate_codes):
            bad("covariate_columns", "covariate map differs from the configured codes")
        rec = row.record
        if rec is None:
            if not isinstance(row.reason, Reason):
                bad("reason", "row has neither a record nor a reason")
            continue
        v = rec.vector
        vals = (v.r_en, v.r_ec, v.r_ev, rec.i_r)
        if any(x is None or not math.isfinite(x) for x in vals):
            bad("finite", "non-finite or missing component")
            continue
        if not -TOL <= v.r_en <= 1 + TOL:
            bad("r_en_range", f"r_en={v.r_en!r} outside [0, 1]")
        if not math.exp(-1) - TOL <= v.r_ec <= math.e + TOL:
            bad("r_ec_range", f"r_ec={v.r_ec!r} outside [1/e, e]")
        if not v.r_ev > 0:
            bad("r_ev_positive", f"r_ev={v.r_ev!r}")
        norm = math.sqrt(v.r_en**2 + v.r_ec**2 + v.r_ev**2) / SQRT3
        if abs(abs(rec.i_r) - norm) > TOL:
            bad("i_r_norm", f"|i_r|={abs(rec.i_r)!r} but norm/sqrt(3)={norm!r}")
        if classify(rec.i_r) is not rec.resilience_class:
            bad("class", f"class {rec.resilience_class.value} does not match i_r={rec.i_r!r}")
        if (rec.i_r < 0) != (v.r_ec < 1):
            bad("sign", f"i_r={rec.i_r!r} disagrees with r_ec={v.r_ec!r} on the vertical shift")
    n_countries = len({r.country_code for r in panel.rows})
    n_shocks = len(panel.shocks)
    if len(panel.rows) != n_countries * n_shocks:
        out.append(Violation(None, None, None, "row_count",
                             f"{len(panel.rows)} rows for {n_countries} countries x {n_shocks} shocks"))
    return out


# -- orchestration -------------------------------------------------------------------

def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(cfg: RunConfig, out: Path, data: IngestResult, descriptors: Sequence[SourceDescriptor]) -> Path:
    outputs = sorted(
        p for p in out.rglob("*") if p.is_file() and p.name not in ("manifest.json", "error.json")
    )
    doc = {
        "created_at": _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat(),
        "version": __version__,
        "config": cfg.snapshot(),
        "sources": [d.to_dict() for d in descriptors],
        "dropped_no_data": data.dropped_no_data,
        "dropped_unmapped": data.dropped_unmapped,
        "outputs": {p.relative_to(out).as_posix(): sha256_file(p) for p in outputs},
    }
    return _write(out / "manifest.json", json.dumps(doc, indent=1) + "\n")


def check_panel(panel: Panel) -> None:
    violations = validate_panel(panel)
    if violations:
        first = violations[0]
        raise InvariantViolation(f"{len(violations)} invariant violations; first: {first.check} at row {first.row}")


def run_pipeline(cfg: RunConfig, out: Path | None = None) -> Path:
    """Run every step and write the full output tree; returns the output dir."""
    cfg.validate()
    out = Path(out) if out is not None else cfg.out_path
    out.mkdir(parents=True, exist_ok=True)
    meta = load_meta(cfg)
    data = ingest(cfg, meta)
    descriptors = list(data.descriptors)
    write_ingest(data, cfg, out)
    panel = compute(cfg, read_ingest(out), meta)
    check_panel(panel)
    write_panel(panel, out)
    panel = read_panel(out / "panel.json")
    analyze_class_errorbars(panel, out)
    boundaries = cfg.boundaries or {}
    analyze_fixed_commute(
        panel, out,
        cfg.resolve(boundaries["path"]) if boundaries.get("path") else None,
        boundaries.get("key"),
    )
    analyze_shifts(panel, out)
    analyze_continents(panel, out)
    render(out)
    write_manifest(cfg, out, data, descriptors)
    return out
