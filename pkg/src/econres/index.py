"""Engineering, ecological and evolutionary resilience components.

All three components are computed from a :class:`~econres.series.ShockWindow`:

* engineering: log(H / tau) / log(H), with H = n - t(c_R) the horizon after
  the reference level and tau the delay until the first performance value
  that reaches c_R. Zero when the series never recovers.
* ecological: exp(|M_P - c_R| / max(|c_R|, |M_P|)) raised to a +/-1 sign.
* evolutionary: exp(-sum(c_R - x_i) / (n_P * |c_R + M_P|)) over the
  performance values.

The 1D index is the signed Euclidean norm of the three, divided by sqrt(3).

Sign convention
---------------
The published formulas put sgn*(c_R - M_P) in the exponent, which would
make the ecological component exceed one after a *loss* of functionality
and flip the sign of the 1D index accordingly. The described behaviour is
the opposite, so ``"corrected"`` (the default) uses sgn*(M_P - c_R).
``"as_printed"`` reproduces the literal formulas. sgn* maps zero to +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DegenerateLevels, NonFinite
from .series import ShockWindow

SIGN_CONVENTIONS = ("corrected", "as_printed")

SQRT3 = math.sqrt(3.0)


class ResilienceClass(str, Enum):
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"

    @property
    def ordinal(self) -> int:
        return _ORDINALS[self]

    @classmethod
    def from_ordinal(cls, k: int) -> "ResilienceClass":
        return _BY_ORDINAL[k]


_ORDINALS = {ResilienceClass.LOW: 1, ResilienceClass.MEDIUM: 2, ResilienceClass.HIGH: 3}
_BY_ORDINAL = {v: k for k, v in _ORDINALS.items()}
CLASS_ORDER = (ResilienceClass.LOW, ResilienceClass.MEDIUM, ResilienceClass.HIGH)


@dataclass(frozen=True)
class ResilienceVector:
    r_en: float
    r_ec: float
    r_ev: float
    direction: int  # +1 or -1

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r_en, self.r_ec, self.r_ev)


@dataclass(frozen=True)
class ResilienceRecord:
    vector: ResilienceVector
    i_r: float
    resilience_class: ResilienceClass


def adjusted_sign(x: float) -> int:
    return 1 if x >= 0 else -1


def shift_direction(window: ShockWindow, sign_convention: str = "corrected") -> int:
    if sign_convention == "corrected":
        return adjusted_sign(window.M_P - window.c_R)
    if sign_convention == "as_printed":
        return adjusted_sign(window.c_R - window.M_P)
    raise ValueError(f"unknown sign convention {sign_convention!r}")


def first_recovery_index(window: ShockWindow) -> int | None:
    """Time index of the first performance value at or above c_R."""
    for t, x in window.performance_segment:
        if x >= window.c_R:
            return t
    return None


def engineering_component(window: ShockWindow) -> float:
    horizon = window.n - window.t_cR
    if horizon < 1:
        raise ValueError("window leaves no time after the reference level")
    t_rec = first_recovery_index(window)
    if t_rec is None:
        return 0.0
    tau = t_rec - window.t_cR
    if horizon == 1:
        # log(H) = 0; only tau = 1 is possible here
        return 1.0
    if tau == 1:
        return 1.0
    return math.log(horizon / tau) / math.log(horizon)


def ecological_component(window: ShockWindow, sign_convention: str = "corrected") -> float:
    c_r, m_p = window.c_R, window.M_P
    scale = max(abs(c_r), abs(m_p))
    if scale == 0:
        raise DegenerateLevels("c_R and M_P are both zero")
    sign = shift_direction(window, sign_convention)
    return math.exp(sign * abs(m_p - c_r) / scale)


def evolutionary_component(window: ShockWindow) -> float:
    c_r = window.c_R
    denom = window.n_P * abs(c_r + window.M_P)
    if denom == 0:
        raise DegenerateLevels("c_R + M_P is zero")
    deficit = math.fsum(c_r - x for x in window.performance_values)
    return math.exp(-deficit / denom)


def scalar_index(vector: ResilienceVector) -> float:
    return vector.direction * math.sqrt(vector.r_en**2 + vector.r_ec**2 + vector.r_ev**2) / SQRT3


def classify(i_r: float) -> ResilienceClass:
    if not math.isfinite(i_r):
        raise NonFinite(f"cannot classify non-finite index {i_r!r}")
    if i_r < 0:
        return ResilienceClass.LOW
    if i_r < 1:
        return ResilienceClass.MEDIUM
    return ResilienceClass.HIGH


def compute_record(window: ShockWindow, sign_convention: str = "corrected") -> ResilienceRecord:
    vector = ResilienceVector(
        r_en=engineering_component(window),
        r_ec=ecological_component(window, sign_convention),
        r_ev=evolutionary_component(window),
        direction=shift_direction(window, sign_convention),
    )
    i_r = scalar_index(vector)
    return ResilienceRecord(vector, i_r, classify(i_r))


def record_from_vector(vector: ResilienceVector) -> ResilienceRecord:
    i_r = scalar_index(vector)
    return ResilienceRecord(vector, i_r, classify(i_r))
