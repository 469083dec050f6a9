"""Lumped resonance model of the LC-loaded spiral antenna.

The substrate permittivity enters only through ``X = 1 / (2 pi f)^2``,
taken linear in ``eps`` (exact when the resonator capacitance is linear in
``eps``) and fixed by two calibration anchors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError, DomainError, InputError, NoBandwidthError

Z0 = 50.0
MU0 = 4e-7 * math.pi
DEFAULT_ANCHORS = ((8.0, 4.15e9), (47.1, 3.09e9))
DEFAULT_CP = 0.8e-12
# the default Q puts the -10 dB bandwidth at this value for eps = 20
TARGET_BANDWIDTH = 17e6
TARGET_EPS = 20.0
BAND_N78 = (3.3e9, 3.8e9)
EXP_SPIRAL_ALPHA = 17.5e-3
# |S11| floor so a perfect match maps to a finite dB value
S11_FLOOR = 1e-15


def resonant_frequency(inductance: float, capacitance: float) -> float:
    if not (inductance > 0 and capacitance > 0):
        raise DomainError("inductance and capacitance must be positive")
    return 1.0 / (2.0 * math.pi * math.sqrt(inductance * capacitance))


@dataclass(frozen=True)
class TuningModel:
    """``f(eps) = 1 / (2 pi sqrt(x_a + x_b eps))`` plus a resonator Q.

    ``c_p`` is the matching capacitance; with it the equivalent spiral
    inductance at a given ``eps`` is ``X(eps) / c_p``.
    """

    x_a: float
    x_b: float
    q_factor: float
    c_p: float = DEFAULT_CP
    z0: float = Z0

    def __post_init__(self):
        if not (self.x_a > 0 and self.x_b > 0):
            raise CalibrationError("x_a and x_b must be positive")
        if not self.q_factor > 0:
            raise CalibrationError("q_factor must be positive")


def _x(f):
    return 1.0 / (2.0 * math.pi * f) ** 2


def q_for_bandwidth(f0: float, bandwidth: float) -> float:
    """Q of the matched series resonator with the given -10 dB width.

    With ``z = 1 + jQ(f/f0 - f0/f)``, ``|S11|^2 = 0.1`` where
    ``|Q(f/f0 - f0/f)| = 2/3``, so the width is exactly ``2 f0 / (3 Q)``.
    """
    return 2.0 * f0 / (3.0 * bandwidth)


def calibrate(
    eps_low: float = DEFAULT_ANCHORS[0][0],
    f_low: float = DEFAULT_ANCHORS[0][1],
    eps_high: float = DEFAULT_ANCHORS[1][0],
    f_high: float = DEFAULT_ANCHORS[1][1],
    q_factor: float | None = None,
    c_p: float = DEFAULT_CP,
    z0: float = Z0,
) -> TuningModel:
    """Fit ``X(eps)`` through two ``(eps, f)`` anchors.

    ``q_factor=None`` picks the Q that gives a ``TARGET_BANDWIDTH`` wide
    -10 dB dip at ``eps = TARGET_EPS``.
    """
    if not (0 < eps_low < eps_high):
        raise CalibrationError("need 0 < eps_low < eps_high")
    if not (f_low > f_high > 0):
        raise CalibrationError("need f_low > f_high > 0")
    xl, xh = _x(f_low), _x(f_high)
    x_b = (xh - xl) / (eps_high - eps_low)
    x_a = xl - x_b * eps_low
    if x_a <= 0:
        raise CalibrationError("anchors imply a non-positive intercept")
    if q_factor is None:
        f20 = 1.0 / (2.0 * math.pi * math.sqrt(x_a + x_b * TARGET_EPS))
        q_factor = q_for_bandwidth(f20, TARGET_BANDWIDTH)
    return TuningModel(x_a, x_b, float(q_factor), c_p, z0)


def frequency_from_eps(model: TuningModel, eps):
    e = np.asarray(eps, dtype=float)
    if np.any(e <= 0):
        raise InputError("eps must be positive")
    f = 1.0 / (2.0 * np.pi * np.sqrt(model.x_a + model.x_b * e))
    return float(f) if f.ndim == 0 else f


def equivalent_inductance(model: TuningModel, eps) -> float:
    return (model.x_a + model.x_b * np.asarray(eps, dtype=float)) / model.c_p


def s11_curve(model: TuningModel, eps: float, freqs):
    """``S11`` in dB of a series RLC branch matched to ``z0`` at resonance.

    ``R = z0``, ``L = Q z0 / w0``, ``C = 1 / (w0^2 L)``.
    """
    f = np.asarray(freqs, dtype=float)
    if np.any(f <= 0) or np.any(np.diff(f) <= 0):
        raise InputError("frequency grid must be positive and ascending")
    f0 = frequency_from_eps(model, eps)
    w0 = 2.0 * np.pi * f0
    ind = model.q_factor * model.z0 / w0
    cap = 1.0 / (w0**2 * ind)
    w = 2.0 * np.pi * f
    z = model.z0 + 1j * (w * ind - 1.0 / (w * cap))
    gamma = np.abs((z - model.z0) / (z + model.z0))
    return f, 20.0 * np.log10(np.maximum(gamma, S11_FLOOR))


def bandwidth_minus10db(freqs, s11_db, level: float = -10.0) -> float:
    """Width of the contiguous ``S11 <= level`` interval around the minimum."""
    f = np.asarray(freqs, dtype=float)
    s = np.asarray(s11_db, dtype=float)
    k = int(np.argmin(s))
    if s[k] > level:
        raise NoBandwidthError(f"minimum {s[k]:.2f} dB does not reach {level} dB")
    lo = k
    while lo > 0 and s[lo - 1] <= level:
        lo -= 1
    hi = k
    while hi < s.size - 1 and s[hi + 1] <= level:
        hi += 1
    if lo == 0 or hi == s.size - 1:
        raise NoBandwidthError("the dip is not closed within the frequency grid")

    def cross(i, j):
        return f[i] + (level - s[i]) * (f[j] - f[i]) / (s[j] - s[i])

    return float(cross(hi, hi + 1) - cross(lo - 1, lo))


def tuning_curve(voltages, eps_eff, model: TuningModel):
    """Columns ``(V, eps_eff, f_res)``."""
    v = np.asarray(voltages, dtype=float)
    e = np.asarray(eps_eff, dtype=float)
    return np.column_stack([v, e, frequency_from_eps(model, e)])


def _crossing(v, f, target):
    # first sweep interval where f passes downwards through target
    for i in range(v.size - 1):
        if f[i] >= target >= f[i + 1] and f[i] != f[i + 1]:
            return float(v[i] + (f[i] - target) * (v[i + 1] - v[i]) / (f[i] - f[i + 1]))
    return None


def band_coverage(voltages, freqs, band=BAND_N78):
    """Voltage interval ``(V_lo, V_hi)`` tuning across ``band`` (low, high in Hz).

    ``V_lo`` is where ``f`` falls through the upper band edge, ``V_hi`` where
    it falls through the lower one; ``None`` marks an edge the sweep misses.
    """
    v = np.asarray(voltages, dtype=float)
    f = np.asarray(freqs, dtype=float)
    return _crossing(v, f, band[1]), _crossing(v, f, band[0])


# spiral geometry ---------------------------------------------------------------


@dataclass(frozen=True)
class SpiralParams:
    """Spiral outline. ``alpha=None`` selects the form's default growth.

    Archimedean default: ``(r1 - r0) / pi`` per radian, so successive turns
    are ``2 (r1 - r0)`` apart (a trace of width ``r1 - r0`` with an equal
    gap). Exponential default: ``EXP_SPIRAL_ALPHA`` (per radian, dimensionless).
    """

    r0: float = 4.5e-3
    r1: float = 4.7e-3
    alpha: float | None = None
    phi_max: float = 6.0 * math.pi
    form: str = "archimedean"

    def __post_init__(self):
        if not (0 < self.r0 < self.r1):
            raise InputError("need 0 < r0 < r1")
        if self.phi_max < 0:
            raise InputError("phi_max must be non-negative")
        if self.form not in ("archimedean", "exponential"):
            raise InputError("form must be 'archimedean' or 'exponential'")

    @property
    def growth(self) -> float:
        if self.alpha is not None:
            return self.alpha
        return (self.r1 - self.r0) / math.pi if self.form == "archimedean" else EXP_SPIRAL_ALPHA


def spiral_path(params: SpiralParams = SpiralParams(), samples_per_turn: int = 64):
    """Polyline ``(n, 2)`` of the spiral in metres."""
    if samples_per_turn < 8:
        raise InputError("samples_per_turn must be at least 8")
    n = int(math.ceil(params.phi_max / (2.0 * math.pi) * samples_per_turn)) + 1
    phi = np.linspace(0.0, params.phi_max, n)
    if params.form == "archimedean":
        r = params.r0 + params.growth * phi
    else:
        r = params.r0 * np.exp(params.growth * phi)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def spiral_inductance_estimate(params: SpiralParams = SpiralParams()) -> float:
    """Rough inductance (H) from the current-sheet formula for circular spirals.

    Not part of the calibrated model: a sanity figure only. Uses the outer
    diameter at the end of the arm, the inner diameter ``2 r0`` and
    ``phi_max / 2 pi`` turns.
    """
    turns = params.phi_max / (2.0 * math.pi)
    path = spiral_path(params, 64)
    d_out = 2.0 * float(np.hypot(*path[-1])) + 2.0 * (params.r1 - params.r0)
    d_in = 2.0 * params.r0
    d_avg = 0.5 * (d_out + d_in)
    fill = (d_out - d_in) / (d_out + d_in)
    if fill <= 0:
        raise DomainError("spiral has no radial extent")
    c1, c2, c3, c4 = 1.0, 2.46, 0.0, 0.20
    return MU0 * turns**2 * d_avg * c1 / 2.0 * (math.log(c2 / fill) + c3 * fill + c4 * fill**2)
