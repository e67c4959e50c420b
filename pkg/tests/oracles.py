"""Independent reference implementations used as test oracles.

Each one is written in a different algebraic form from the library code
(e.g. 1 - log(tau)/log(H) instead of log(H/tau)/log(H), the signed shift
instead of sign times magnitude, a performance mean instead of a sum) so
that agreement is evidence rather than repetition.
"""

import math

import scipy.integrate


def brute_force_recovery(values, k):
    """1-based index of the first value after position k reaching max(values[:k])."""
    c = max(values[:k])
    for i in range(k, len(values)):
        if values[i] >= c:
            return i + 1
    return None


def latest_argmax(ref):
    c = max(ref)
    for i in range(len(ref) - 1, -1, -1):
        if ref[i] == c:
            return i + 1
    raise AssertionError


def oracle_record(ref, perf):
    """(r_en, r_ec, r_ev, direction, i_r, class) for max-mode windows."""
    values = list(ref) + list(perf)
    k = len(ref)
    c = max(ref)
    t_c = latest_argmax(ref)
    m = max(perf)
    horizon = len(values) - t_c
    rec = brute_force_recovery(values, k)
    if rec is None:
        r_en = 0.0
    elif horizon == 1:
        r_en = 1.0
    else:
        r_en = 1.0 - math.log(rec - t_c) / math.log(horizon)
    r_ec = math.exp((m - c) / max(abs(c), abs(m)))
    mean_gap = sum(x - c for x in perf) / len(perf)
    r_ev = math.exp(mean_gap / abs(c + m))
    direction = 1 if m >= c else -1
    i_r = direction * math.hypot(r_en, r_ec, r_ev) / math.sqrt(3)
    cls = "Low" if i_r < 0 else ("Medium" if i_r < 1 else "High")
    return r_en, r_ec, r_ev, direction, i_r, cls


def t_pdf(x, df):
    c = math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2)) / math.sqrt(df * math.pi)
    return c * (1 + x * x / df) ** (-(df + 1) / 2)


def t_cdf_quad(x, df):
    """Student t CDF by numeric integration of the density."""
    val, _ = scipy.integrate.quad(t_pdf, 0.0, abs(x), args=(df,), epsabs=1e-13, epsrel=1e-13)
    return 0.5 + math.copysign(val, x)


def bisect(f, target, lo, hi, tol=1e-12):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def t_quantile_quad(p, df):
    hi = 1.0
    while t_cdf_quad(hi, df) < max(p, 1 - p):
        hi *= 2
    return bisect(lambda x: t_cdf_quad(x, df), p, -hi, hi)


def f_pdf(x, d1, d2):
    if x <= 0:
        return 0.0
    logc = (math.lgamma((d1 + d2) / 2) - math.lgamma(d1 / 2) - math.lgamma(d2 / 2)
            + (d1 / 2) * math.log(d1 / d2))
    return math.exp(logc + (d1 / 2 - 1) * math.log(x) - ((d1 + d2) / 2) * math.log(1 + d1 * x / d2))


def f_sf_quad(w, d1, d2):
    val, _ = scipy.integrate.quad(f_pdf, w, math.inf, args=(d1, d2), epsabs=1e-13, epsrel=1e-12)
    return val


def normal_quantile(p):
    from statistics import NormalDist

    return NormalDist().inv_cdf(p)


def levene_by_hand(groups):
    """Mean-centred Levene W straight from its ANOVA-on-deviations definition."""
    z = [[abs(x - sum(g) / len(g)) for x in g] for g in groups]
    k = len(groups)
    n = sum(len(g) for g in groups)
    zbar = [sum(g) / len(g) for g in z]
    grand = sum(sum(g) for g in z) / n
    between = sum(len(g) * (zb - grand) ** 2 for g, zb in zip(z, zbar))
    within = sum((x - zb) ** 2 for g, zb in zip(z, zbar) for x in g)
    return (n - k) * between / ((k - 1) * within)
