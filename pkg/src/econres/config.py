"""Run configuration: a single JSON document, overridable from the command line.

Schema (all keys optional except ``gdp``)::

    {
      "gdp":        {"path": "gdp.csv", "indicator": "NY.GDP.MKTP.KD"}
                    | {"fetch": {"base_url": ..., "countries": "all"}, "indicator": ...},
      "covariates": {"path": "wdi.csv", "indicators": {"POP": "SP.POP.TOTL", ...}}
                    | {"fetch": {...}, "indicators": {...}},
      "countries":  "countries.csv",            # iso3,name,continent; default: shipped table
      "continent_overrides": {"GEO": "Asia"},
      "shocks":     [{"name": ..., "year": 1997, "scale": ..., "enabled": true}, ...],
      "split":      {"min_ref": 3, "min_perf": 2, "level_mode": "max" | "mean"},
      "sign_convention": "corrected" | "as_printed",
      "confidence_level": 0.90 | 0.95 | 0.99,
      "covariate_alignment": "shock-year" | "performance-mean",
      "levene": false,
      "year_range": [1960, 2020],
      "boundaries": {"path": "world.geojson", "key": "ISO_A3"},
      "output_dir": "out"
    }

Relative paths resolve against the directory holding the config file.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .index import SIGN_CONVENTIONS
from .panel import ALIGNMENTS, COVARIATE_CODES, SplitPolicy
from .series import LEVEL_MODES, ShockEvent

GDP_INDICATOR = "NY.GDP.MKTP.KD"

# default World Bank series per covariate code
COVARIATE_INDICATORS = {
    "POP": "SP.POP.TOTL",
    "URB": "SP.URB.TOTL",
    "URB2": "EN.URB.LCTY.UR.ZS",
    "LF": "SL.TLF.TOTL.IN",
    "EMP": "SL.EMP.TOTL.SP.ZS",
    "GDPpc": "NY.GDP.PCAP.KD",
    "GVA": "NY.GDP.FCST.KD",
    "AGVA": "NV.AGR.TOTL.KD",
    "BGVA": "NV.IND.TOTL.KD",
    "CGVA": "NV.SRV.TOTL.KD",
    "TRD": "NE.TRD.GNFS.ZS",
    "FCE": "NE.CON.TOTL.KD",
    "TXR": "GC.TAX.TOTL.GD.ZS",
    "TNR": "NY.GDP.TOTL.RT.ZS",
}

# Multi-year crises split at their first year. The 1973 oil crisis is listed
# but disabled so the default calendar has 14 active shocks.
DEFAULT_SHOCKS = (
    ShockEvent("Oil crisis", 1973, "Global", enabled=False),
    ShockEvent("Latin American debt crisis", 1980, "International"),
    ShockEvent("Black Monday", 1987, "Global"),
    ShockEvent("Norwegian banking crisis", 1988, "National/International"),
    ShockEvent("United States Savings & Loan crisis", 1989, "National/International"),
    ShockEvent("Japanese financial crisis", 1990, "National/International"),
    ShockEvent("Scandinavian banking crisis", 1991, "International/Regional"),
    ShockEvent("Black Wednesday", 1992, "International"),
    ShockEvent("Economic crisis in Mexico", 1994, "National/International"),
    ShockEvent("Asian Financial Crisis", 1997, "International"),
    ShockEvent("Russian financial crisis", 1998, "National/International"),
    ShockEvent("Argentina economic crisis", 1999, "National/International"),
    ShockEvent("Turkish economic crisis", 2000, "National/International"),
    ShockEvent("Bursting of the dot-com bubble", 2001, "Global"),
    ShockEvent("Worldwide financial crisis", 2007, "Global"),
)

CONFIDENCE_LEVELS = (0.90, 0.95, 0.99)


@dataclass
class SourceSpec:
    path: str | None = None
    fetch: dict | None = None


@dataclass
class RunConfig:
    gdp: SourceSpec
    gdp_indicator: str = GDP_INDICATOR
    covariates: SourceSpec | None = None
    covariate_indicators: dict[str, str] = field(default_factory=dict)
    countries: str | None = None
    continent_overrides: dict[str, str] = field(default_factory=dict)
    shocks: tuple[ShockEvent, ...] = DEFAULT_SHOCKS
    policy: SplitPolicy = SplitPolicy()
    confidence_level: float = 0.95
    covariate_alignment: str = "shock-year"
    levene: bool = False
    year_range: tuple[int, int] = (1960, 2020)
    boundaries: dict | None = None
    output_dir: str = "out"
    base_dir: Path = field(default_factory=Path.cwd, compare=False)

    @property
    def covariate_codes(self) -> tuple[str, ...]:
        if not self.covariate_indicators:
            return COVARIATE_CODES
        return tuple(c for c in COVARIATE_CODES if c in self.covariate_indicators) + tuple(
            c for c in self.covariate_indicators if c not in COVARIATE_CODES
        )

    @property
    def enabled_shocks(self) -> list[ShockEvent]:
        return [s for s in self.shocks if s.enabled]

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def out_path(self) -> Path:
        return self.resolve(self.output_dir)

    def validate(self) -> None:
        if not self.enabled_shocks:
            raise ConfigError("at least one shock must be enabled")
        if self.confidence_level not in CONFIDENCE_LEVELS:
            raise ConfigError(f"confidence_level must be one of {CONFIDENCE_LEVELS}")
        if self.policy.min_ref < 1 or self.policy.min_perf < 1:
            raise ConfigError("min_ref and min_perf must be positive")
        if self.policy.level_mode not in LEVEL_MODES:
            raise ConfigError(f"level_mode must be one of {LEVEL_MODES}")
        if self.policy.sign_convention not in SIGN_CONVENTIONS:
            raise ConfigError(f"sign_convention must be one of {SIGN_CONVENTIONS}")
        if self.covariate_alignment not in ALIGNMENTS:
            raise ConfigError(f"covariate_alignment must be one of {ALIGNMENTS}")
        lo, hi = self.year_range
        if lo >= hi:
            raise ConfigError("year_range must be increasing")
        for s in self.shocks:
            if not lo <= s.reference_year <= hi:
                raise ConfigError(f"shock {s.name!r} ({s.reference_year}) lies outside {lo}-{hi}")
        names = [(s.name, s.reference_year) for s in self.shocks]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate shock entries")
        years = [s.reference_year for s in self.enabled_shocks]
        if len(set(years)) != len(years):
            raise ConfigError("enabled shocks must have distinct reference years")
        if self.gdp.path is None and self.gdp.fetch is None:
            raise ConfigError("gdp needs a 'path' or a 'fetch' block")
        if self.covariates is not None and not self.covariate_indicators:
            raise ConfigError("covariates need an 'indicators' mapping")

    def snapshot(self) -> dict:
        """Normalized, JSON-ready view used for provenance."""
        def source(spec: SourceSpec | None, extra: dict) -> dict | None:
            if spec is None:
                return None
            d = {"path": spec.path} if spec.path is not None else {"fetch": spec.fetch}
            d.update(extra)
            return d

        return {
            "gdp": source(self.gdp, {"indicator": self.gdp_indicator}),
            "covariates": source(self.covariates, {"indicators": dict(self.covariate_indicators)}),
            "countries": self.countries,
            "continent_overrides": dict(sorted(self.continent_overrides.items())),
            "shocks": [
                {"name": s.name, "year": s.reference_year, "scale": s.scale_label, "enabled": s.enabled}
                for s in self.shocks
            ],
            "split": {
                "min_ref": self.policy.min_ref,
                "min_perf": self.policy.min_perf,
                "level_mode": self.policy.level_mode,
            },
            "sign_convention": self.policy.sign_convention,
            "confidence_level": self.confidence_level,
            "covariate_alignment": self.covariate_alignment,
            "levene": self.levene,
            "year_range": list(self.year_range),
            "boundaries": self.boundaries,
            "output_dir": self.output_dir,
        }


def _source(block: Any, what: str) -> SourceSpec:
    if not isinstance(block, dict):
        raise ConfigError(f"{what} must be an object")
    if ("path" in block) == ("fetch" in block):
        raise ConfigError(f"{what} needs exactly one of 'path' or 'fetch'")
    if "fetch" in block and not isinstance(block["fetch"], dict):
        raise ConfigError(f"{what}.fetch must be an object")
    return SourceSpec(path=block.get("path"), fetch=block.get("fetch"))


KNOWN_KEYS = {
    "gdp", "covariates", "countries", "continent_overrides", "shocks", "split",
    "sign_convention", "confidence_level", "covariate_alignment", "levene",
    "year_range", "boundaries", "output_dir",
}


def config_from_dict(doc: dict, base_dir: Path | None = None) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(doc) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    if "gdp" not in doc:
        raise ConfigError("configuration needs a 'gdp' source")
    try:
        gdp = _source(doc["gdp"], "gdp")
        cov = None
        cov_ind: dict[str, str] = {}
        if doc.get("covariates") is not None:
            cov = _source(doc["covariates"], "covariates")
            cov_ind = dict(doc["covariates"].get("indicators") or {})
        shocks = DEFAULT_SHOCKS
        if "shocks" in doc:
            shocks = tuple(
                ShockEvent(str(s["name"]), int(s["year"]), str(s.get("scale", "")), bool(s.get("enabled", True)))
                for s in doc["shocks"]
            )
        split = doc.get("split", {})
        policy = SplitPolicy(
            min_ref=int(split.get("min_ref", 3)),
            min_perf=int(split.get("min_perf", 2)),
            level_mode=str(split.get("level_mode", "max")),
            sign_convention=str(doc.get("sign_convention", "corrected")),
        )
        year_range = tuple(int(y) for y in doc.get("year_range", (1960, 2020)))
        if len(year_range) != 2:
            raise ConfigError("year_range needs two years")
        cfg = RunConfig(
            gdp=gdp,
            gdp_indicator=str(doc["gdp"].get("indicator", GDP_INDICATOR)),
            covariates=cov,
            covariate_indicators=cov_ind,
            countries=doc.get("countries"),
            continent_overrides=dict(doc.get("continent_overrides") or {}),
            shocks=shocks,
            policy=policy,
            confidence_level=float(doc.get("confidence_level", 0.95)),
            covariate_alignment=str(doc.get("covariate_alignment", "shock-year")),
            levene=bool(doc.get("levene", False)),
            year_range=year_range,
            boundaries=doc.get("boundaries"),
            output_dir=str(doc.get("output_dir", "out")),
            base_dir=base_dir or Path.cwd(),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    cfg.validate()
    return cfg


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    doc = merge_overrides(doc, overrides or {})
    return config_from_dict(doc, base_dir=path.resolve().parent)


def merge_overrides(doc: dict, overrides: dict) -> dict:
    """Apply flat overrides; ``split.*`` keys go into the split block."""
    doc = copy.deepcopy(doc)
    for key, value in overrides.items():
        if value is None:
            continue
        if key.startswith("split."):
            doc.setdefault("split", {})[key[6:]] = value
        else:
            doc[key] = value
    return doc
