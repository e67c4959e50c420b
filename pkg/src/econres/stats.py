"""Group statistics behind the error-bar analyses.

Student-t and F probabilities come from a regularized incomplete beta
evaluated by continued fraction (modified Lentz), so no SciPy is needed at
runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DegenerateGroups, DomainError, InsufficientData, UnknownSelector

_EPS = 1e-16
_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    max_iter = 20000 + int(10 * math.sqrt(max(a, b)))
    for m in range(1, max_iter):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise DomainError("betainc needs a, b > 0")
    if x < 0 or x > 1:
        raise DomainError("betainc needs 0 <= x <= 1")
    if x == 0 or x == 1:
        return float(x)
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    if df <= 0:
        raise DomainError("df must be positive")
    if t == 0:
        return 0.5
    tail = 0.5 * betainc(df / 2.0, 0.5, df / (df + t * t))
    return 1.0 - tail if t > 0 else tail


def t_quantile(p: float, df: float) -> float:
    """p-quantile of Student's t, by bisection on the CDF."""
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    if df <= 0:
        raise DomainError("df must be positive")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, df)
    lo, hi = 0.0, 1.0
    while t_cdf(hi, df) < p:
        lo, hi = hi, hi * 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def f_sf(w: float, df1: float, df2: float) -> float:
    """Upper tail P(F > w) of the F distribution."""
    if w <= 0:
        return 1.0
    return betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * w))


@dataclass(frozen=True)
class GroupStats:
    group_label: str
    n: int
    mean: float | None
    sd: float | None
    ci_low: float | None
    ci_high: float | None
    level: float

    @property
    def interval_defined(self) -> bool:
        return self.ci_low is not None


@dataclass(frozen=True)
class LeveneResult:
    w_statistic: float
    df1: int
    df2: int
    p_value: float


def _clean(values: Iterable[float | None]) -> list[float]:
    return [float(v) for v in values if v is not None and not math.isnan(v)]


def confidence_interval(values: Sequence[float | None], level: float = 0.95, label: str = "") -> GroupStats:
    """t-based interval for the mean; missing values are dropped first."""
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    xs = _clean(values)
    n = len(xs)
    if n < 2:
        raise InsufficientData(f"need at least 2 values for an interval, got {n}")
    mean = math.fsum(xs) / n
    sd = math.sqrt(math.fsum((x - mean) ** 2 for x in xs) / (n - 1))
    half = t_quantile((1.0 + level) / 2.0, n - 1) * sd / math.sqrt(n)
    return GroupStats(label, n, mean, sd, mean - half, mean + half, level)


def describe(values: Sequence[float | None], level: float = 0.95, label: str = "") -> GroupStats:
    """Like :func:`confidence_interval` but total: small groups get no interval."""
    xs = _clean(values)
    if len(xs) >= 2:
        return confidence_interval(xs, level, label)
    mean = xs[0] if xs else None
    return GroupStats(label, len(xs), mean, None, None, None, level)


def levene_test(groups: Sequence[Sequence[float]], center: str = "mean") -> LeveneResult:
    """Levene's homogeneity-of-variance test.

    ``center="median"`` gives the Brown-Forsythe variant. The statistic is
    accumulated in exact rational arithmetic (every float converts to a
    Fraction without loss), so W is exactly invariant under shifts and
    power-of-two rescalings that are themselves exact in floating point.
    """
    if center not in ("mean", "median"):
        raise ValueError(f"unknown center {center!r}")
    groups = [[Fraction(x) for x in _clean(g)] for g in groups]
    k = len(groups)
    if k < 2 or any(len(g) < 2 for g in groups):
        raise InsufficientData("need at least 2 groups of at least 2 values")
    devs = []
    for g in groups:
        c = sum(g) / len(g) if center == "mean" else _median(g)
        devs.append([abs(x - c) for x in g])
    total = sum(len(d) for d in devs)
    grand = sum(sum(d) for d in devs) / total
    means = [sum(d) / len(d) for d in devs]
    within = sum(sum((z - m) ** 2 for z in d) for d, m in zip(devs, means))
    between = sum(len(d) * (m - grand) ** 2 for d, m in zip(devs, means))
    df1, df2 = k - 1, total - k
    if within == 0:
        if between == 0:
            raise DegenerateGroups("all absolute deviations are identical")
        return LeveneResult(math.inf, df1, df2, 0.0)
    w = float((df2 * between) / (df1 * within))
    return LeveneResult(w, df1, df2, f_sf(w, df1, df2))


def _median(xs):
    s = sorted(xs)
    m = len(s) // 2
    return s[m] if len(s) % 2 else (s[m - 1] + s[m]) / 2


COMPONENT_SELECTORS = ("i_r", "r_en", "r_ec", "r_ev")
GROUPINGS = ("class", "continent")


def selector_value(row, selector: str) -> float | None:
    if selector in COMPONENT_SELECTORS:
        rec = row.record
        if rec is None:
            return None
        if selector == "i_r":
            return rec.i_r
        return getattr(rec.vector, selector)
    return row.covariates.get(selector)


def grouped_errorbars(panel, value_selector: str, group_by: str = "class", level: float = 0.95) -> list[GroupStats]:
    """One :class:`GroupStats` per group; missing values are dropped pairwise.

    Class groups come out Low, Medium, High; continents alphabetically. Rows
    without a resilience record have no class and are left out of class
    grouping.
    """
    from .index import CLASS_ORDER

    if value_selector not in COMPONENT_SELECTORS and value_selector not in panel.covariate_codes:
        raise UnknownSelector(f"unknown selector {value_selector!r}")
    if group_by not in GROUPINGS:
        raise UnknownSelector(f"unknown grouping {group_by!r}")

    buckets: dict[str, list[float | None]] = {}
    if group_by == "class":
        for cls in CLASS_ORDER:
            buckets[cls.value] = []
        for row in panel.rows:
            if row.record is not None:
                buckets[row.record.resilience_class.value].append(selector_value(row, value_selector))
    else:
        for continent in sorted({row.continent for row in panel.rows}):
            buckets[continent] = []
        for row in panel.rows:
            buckets[row.continent].append(selector_value(row, value_selector))
    return [describe(vals, level, label) for label, vals in buckets.items()]


def grouped_levene(panel, value_selector: str, group_by: str = "class", center: str = "mean") -> LeveneResult:
    from .index import CLASS_ORDER

    groups: dict[str, list[float]] = {}
    for row in panel.rows:
        if group_by == "class":
            if row.record is None:
                continue
            key = row.record.resilience_class.value
        else:
            key = row.continent
        v = selector_value(row, value_selector)
        if v is not None:
            groups.setdefault(key, []).append(v)
    order = [c.value for c in CLASS_ORDER] if group_by == "class" else sorted(groups)
    usable = [groups[k] for k in order if len(groups.get(k, [])) >= 2]
    return levene_test(usable, center=center)
