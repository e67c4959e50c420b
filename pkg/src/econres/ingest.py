"""Data acquisition: World Bank wide CSV exports, the indicator JSON API,
and the country/continent table.

The wide layout has one row per (country, indicator)::

    Country Name, Country Code, Indicator Name, Indicator Code, 1960, 1961, ...

Bulk downloads from the data portal prepend a few preamble lines and end each
row with a trailing comma; both are tolerated. Empty cells (and the ``..``
placeholder used by DataBank exports) mean missing. Year headers may be plain
(``1960``) or DataBank style (``1960 [YR1960]``).

API responses are a two-element JSON array: a paging envelope
(``page``, ``pages``, ``per_page``, ``total``) followed by the observation
list. Each observation carries ``countryiso3code`` (or ``country.id``),
``date`` and ``value``; ``null`` values become missing years. Fetches are
written to disk first and parsed from that snapshot, so no computation
reads the network directly.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import logging
import os
import re
import time
import urllib.error
import urllib.parse
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (
    DuplicateCode,
    EmptyFile,
    HttpError,
    MalformedHeader,
    MalformedRow,
    SchemaError,
    UnknownContinentLabel,
)
from .series import CONTINENTS, AnnualSeries, CountryMeta

logger = logging.getLogger(__name__)

WDI_BASE_URL = "https://api.worldbank.org/v2"
CACHE_ENV = "ECONRES_CACHE_DIR"

HEADER = ("Country Name", "Country Code", "Indicator Name", "Indicator Code")
_YEAR_RE = re.compile(r"^\s*(\d{4})(?:\s*\[YR\d{4}\])?\s*$")
_MISSING = {"", ".."}


@dataclass
class SourceDescriptor:
    kind: str  # "file" or "http"
    location: str
    indicator_code: str
    retrieved_at: str
    content_hash: str | None = None

    def to_dict(self, with_time: bool = True) -> dict:
        d = asdict(self)
        if not with_time:
            d.pop("retrieved_at")
        return d


@dataclass
class WdiFile:
    series: list[AnnualSeries]
    descriptor: SourceDescriptor | None = None
    empty_rows: list[tuple[str, str]] = field(default_factory=list)  # (country, indicator) with no data
    skipped_rows: int = 0


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _parse_number(cell: str, row: int, column: str) -> float | None:
    cell = cell.strip()
    if cell in _MISSING:
        return None
    try:
        return float(cell)
    except ValueError:
        raise MalformedRow(f"row {row}, column {column}: not a number: {cell!r}", row, column) from None


def _find_header(rows: list[list[str]]) -> int:
    for i, r in enumerate(rows[:50]):
        cells = [c.strip() for c in r]
        if tuple(cells[:4]) == HEADER:
            return i
    raise MalformedHeader(
        "no header row starting with 'Country Name, Country Code, Indicator Name, Indicator Code'"
    )


def read_wdi_text(text: str, location: str = "<string>") -> WdiFile:
    if text.startswith("\ufeff"):
        text = text[1:]
    if not text.strip():
        raise EmptyFile(f"{location} is empty")
    rows = list(csv.reader(io.StringIO(text)))
    h = _find_header(rows)
    header = rows[h]
    year_cols: list[tuple[int, int]] = []
    for j, name in enumerate(header[4:], start=4):
        m = _YEAR_RE.match(name)
        if m:
            year_cols.append((j, int(m.group(1))))
        elif name.strip():
            raise MalformedHeader(f"unexpected column {name!r} in {location}")
    if not year_cols:
        raise MalformedHeader(f"no year columns in {location}")
    years = [y for _, y in year_cols]
    if any(b <= a for a, b in zip(years, years[1:])):
        raise MalformedHeader("year columns must be strictly increasing")

    out = WdiFile(series=[])
    seen: set[tuple[str, str]] = set()
    for i, r in enumerate(rows[h + 1 :], start=h + 2):
        if not any(c.strip() for c in r):
            continue
        code = r[1].strip() if len(r) > 1 else ""
        indicator = r[3].strip() if len(r) > 3 else ""
        if not code or not indicator:
            # footer lines ("Data from database: ...", "Last Updated: ...")
            out.skipped_rows += 1
            continue
        if len(r) < year_cols[-1][0] + 1:
            raise MalformedRow(f"row {i}: expected {year_cols[-1][0] + 1} fields, got {len(r)}", i)
        if (code, indicator) in seen:
            raise MalformedRow(f"row {i}: duplicate series {code}/{indicator}", i)
        seen.add((code, indicator))
        values = {y: _parse_number(r[j], i, header[j].strip()) for j, y in year_cols}
        if all(v is None for v in values.values()):
            out.empty_rows.append((code, indicator))
            continue
        out.series.append(AnnualSeries(code, indicator, values))
    if out.skipped_rows:
        logger.warning("%s: skipped %d metadata rows", location, out.skipped_rows)
    return out


def read_wdi_csv(path: str | os.PathLike, location: str | None = None) -> WdiFile:
    """Parse a wide CSV file and describe its provenance."""
    data = Path(path).read_bytes()
    loc = str(path) if location is None else location
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedRow(f"{loc} is not valid UTF-8") from None
    result = read_wdi_text(text, loc)
    indicators = sorted({s.indicator_code for s in result.series} | {i for _, i in result.empty_rows})
    result.descriptor = SourceDescriptor(
        kind="file",
        location=loc,
        indicator_code=",".join(indicators),
        retrieved_at=_now(),
        content_hash=sha256_bytes(data),
    )
    return result


def parse_wdi_csv(path: str | os.PathLike) -> list[AnnualSeries]:
    return read_wdi_csv(path).series


def wdi_csv_text(
    series: Iterable[AnnualSeries],
    years: Sequence[int] | None = None,
    names: Mapping[str, str] | None = None,
    indicator_names: Mapping[str, str] | None = None,
) -> str:
    """Serialize series to the canonical wide layout.

    Rows are ordered by (indicator, country); values use ``repr``.
    """
    series = sorted(series, key=lambda s: (s.indicator_code, s.country_code))
    if years is None:
        all_years = {y for s in series for y in s.values}
        years = list(range(min(all_years), max(all_years) + 1)) if all_years else []
    names = names or {}
    indicator_names = indicator_names or {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*HEADER, *map(str, years)])
    for s in series:
        cells = []
        for y in years:
            v = s.values.get(y)
            cells.append("" if v is None else repr(float(v)))
        w.writerow([
            names.get(s.country_code, s.country_code),
            s.country_code,
            indicator_names.get(s.indicator_code, s.indicator_code),
            s.indicator_code,
            *cells,
        ])
    return buf.getvalue()


def write_wdi_csv(path: str | os.PathLike, series: Iterable[AnnualSeries], **kwargs) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(wdi_csv_text(series, **kwargs), encoding="utf-8")
    return path


# -- HTTP API ----------------------------------------------------------------

RETRY_STATUSES = {429, 500, 502, 503, 504}


def _http_get_json(
    url: str,
    attempts: int = 5,
    backoff: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
    timeout: float = 30.0,
):
    last = None
    for attempt in range(attempts):
        try:
            with urllib.request.urlopen(url, timeout=timeout) as resp:
                body = resp.read()
        except urllib.error.HTTPError as exc:
            last = exc.code
            if exc.code not in RETRY_STATUSES:
                raise HttpError(exc.code, url) from None
        except urllib.error.URLError as exc:
            raise HttpError(0, f"{url} ({exc.reason})") from None
        else:
            try:
                return json.loads(body.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                raise SchemaError(f"response from {url} is not JSON") from None
        if attempt + 1 < attempts:
            sleep(backoff * 2**attempt)
    raise HttpError(last, url)


def _check_page(payload) -> tuple[dict, list]:
    if (
        not isinstance(payload, list)
        or len(payload) != 2
        or not isinstance(payload[0], dict)
        or not isinstance(payload[1], (list, type(None)))
    ):
        if isinstance(payload, list) and payload and isinstance(payload[0], dict) and "message" in payload[0]:
            raise SchemaError(f"API error: {payload[0]['message']}")
        raise SchemaError("expected [envelope, observations]")
    meta = payload[0]
    for key in ("page", "pages"):
        if key not in meta:
            raise SchemaError(f"envelope lacks {key!r}")
    return meta, payload[1] or []


def series_from_api_pages(pages: Sequence, indicator_code: str | None = None) -> list[AnnualSeries]:
    """Merge API pages into one series per country (years ascending)."""
    table: dict[str, dict[int, float | None]] = {}
    code_seen = None
    for payload in pages:
        _, obs = _check_page(payload)
        for o in obs:
            try:
                country = o.get("countryiso3code") or o["country"]["id"]
                year = int(o["date"])
                value = o["value"]
                code_seen = code_seen or o.get("indicator", {}).get("id")
            except (KeyError, TypeError, ValueError, AttributeError):
                raise SchemaError(f"malformed observation {o!r}") from None
            if value is not None and not isinstance(value, (int, float)):
                raise SchemaError(f"non-numeric value {value!r}")
            table.setdefault(country, {})[year] = None if value is None else float(value)
    indicator = indicator_code or code_seen or ""
    out = []
    for country in sorted(table):
        vals = table[country]
        lo, hi = min(vals), max(vals)
        full = {y: vals.get(y) for y in range(lo, hi + 1)}
        if any(v is not None for v in full.values()):
            out.append(AnnualSeries(country, indicator, full))
    return out


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "econres")


def fetch_indicator(
    indicator_code: str,
    country_filter: str | Sequence[str] = "all",
    year_range: tuple[int, int] = (1960, 2020),
    base_url: str = WDI_BASE_URL,
    snapshot_dir: str | os.PathLike | None = None,
    per_page: int = 20000,
    sleep: Callable[[float], None] = time.sleep,
) -> WdiFile:
    """Download an indicator, snapshot the pages to disk, then parse the snapshot."""
    countries = country_filter if isinstance(country_filter, str) else ";".join(country_filter)
    base = f"{base_url.rstrip('/')}/country/{urllib.parse.quote(countries, safe=';')}/indicator/{indicator_code}"
    query = {"format": "json", "date": f"{year_range[0]}:{year_range[1]}", "per_page": per_page}
    pages = []
    page, total_pages = 1, 1
    while page <= total_pages:
        url = f"{base}?{urllib.parse.urlencode({**query, 'page': page})}"
        payload = _http_get_json(url, sleep=sleep)
        meta, _ = _check_page(payload)
        total_pages = int(meta["pages"])
        pages.append(payload)
        page += 1

    snap_dir = Path(snapshot_dir) if snapshot_dir is not None else cache_dir()
    snap_dir.mkdir(parents=True, exist_ok=True)
    blob = json.dumps({"indicator": indicator_code, "url": base, "pages": pages}, sort_keys=True).encode("utf-8")
    snap = snap_dir / f"{indicator_code}-{sha256_bytes(blob)[:12]}.json"
    snap.write_bytes(blob)
    result = read_api_snapshot(snap)
    result.descriptor = SourceDescriptor("http", base, indicator_code, _now(), sha256_bytes(blob))
    return result


def read_api_snapshot(path: str | os.PathLike) -> WdiFile:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        pages, indicator = doc["pages"], doc["indicator"]
    except (KeyError, TypeError):
        raise SchemaError(f"{path} is not an API snapshot") from None
    return WdiFile(series=series_from_api_pages(pages, indicator))


def fetch_indicators(codes: Sequence[str], max_workers: int = 2, **kwargs) -> dict[str, WdiFile]:
    workers = max(1, min(2, max_workers))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {c: pool.submit(fetch_indicator, c, **kwargs) for c in codes}
        return {c: f.result() for c, f in futures.items()}


# -- country table -------------------------------------------------------------

def default_countries_path():
    return resources.files("econres").joinpath("data/countries.csv")


def load_country_continents(
    path: str | os.PathLike | None = None,
    overrides: Mapping[str, str] | None = None,
) -> dict[str, CountryMeta]:
    """Read ``iso3,name,continent`` rows into a map keyed by ISO3."""
    if path is None:
        text = default_countries_path().read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    if text.startswith("\ufeff"):
        text = text[1:]
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or set(reader.fieldnames) < {"iso3", "name", "continent"}:
        raise MalformedHeader("country table needs columns iso3,name,continent")
    meta: dict[str, CountryMeta] = {}
    for i, row in enumerate(reader, start=2):
        code = row["iso3"].strip()
        continent = row["continent"].strip()
        if code in meta:
            raise DuplicateCode(f"row {i}: duplicate ISO3 code {code}")
        if continent not in CONTINENTS:
            raise UnknownContinentLabel(f"row {i}: unknown continent {continent!r}")
        meta[code] = CountryMeta(code, row["name"].strip(), continent)
    for code, continent in (overrides or {}).items():
        if continent not in CONTINENTS:
            raise UnknownContinentLabel(f"override {code}: unknown continent {continent!r}")
        name = meta[code].name if code in meta else code
        meta[code] = CountryMeta(code, name, continent)
    return meta
