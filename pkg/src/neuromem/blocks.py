"""Behavioral models of the CMOS-memristor building blocks.

The weight block is a four-memristor bridge. Reading it is non-destructive;
only ``program_bridge`` moves the device states. Current-mode blocks
(squarer, divider, multiplier, mirrors) follow their ideal transfer
equations, with an optional nonideal mode reproducing the measured operating
limits of the transistor circuits: the squarer output is zero below 360 uA
and the divider stops working above 300 uA.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .device import DeviceParams, MemristorState, _derivative, _memristance
from .errors import NumericError, OperatingRangeError, RangeError

I_REF = 250e-6
PROGRAM_DT = 1e-3


# --------------------------------------------------------------------------
# Memristor bridge synapse
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BridgeSynapse:
    """Four memristors in a bridge: M1-M2 and M3-M4 are anti-serial pairs.

    M1 and M3 are oriented so that a positive programming pulse lowers their
    memristance; M2 and M4 are reversed. The bridge output is
    ``(M2/(M1+M2) - M3/(M3+M4)) * v_in``.
    """

    m1: MemristorState
    m2: MemristorState
    m3: MemristorState
    m4: MemristorState
    params: DeviceParams = field(default_factory=DeviceParams)
    programming_amplitude: float = 1.0

    @classmethod
    def balanced(cls, params: DeviceParams | None = None, amplitude: float = 1.0) -> "BridgeSynapse":
        """All four devices at mid-range: zero weight.

        Orientations are chosen so a positive pulse lowers M1 and M3; in the
        threshold model positive current raises resistance, so they flip.
        """
        params = params or DeviceParams()
        lo, hi = params.bounds
        mid = 0.5 * (lo + hi)
        s = -1 if params.model == "team" else 1
        return cls(
            MemristorState(mid, s),
            MemristorState(mid, -s),
            MemristorState(mid, s),
            MemristorState(mid, -s),
            params,
            amplitude,
        )

    @property
    def states(self) -> tuple[MemristorState, ...]:
        return (self.m1, self.m2, self.m3, self.m4)

    def memristances(self) -> tuple[float, float, float, float]:
        lo, hi = self.params.bounds
        for s in self.states:
            if not lo <= s.x <= hi:
                raise RangeError(f"bridge device state {s.x!r} outside [{lo}, {hi}]")
        return tuple(_memristance(s.x, self.params) for s in self.states)


def max_weight(params: DeviceParams | None = None) -> float:
    """Largest realizable bridge weight magnitude, ``(R_off-R_on)/(R_off+R_on)``."""
    params = params or DeviceParams()
    return (params.r_off - params.r_on) / (params.r_off + params.r_on)


def _weight(m1, m2, m3, m4) -> float:
    return m2 / (m1 + m2) - m3 / (m3 + m4)


def bridge_weight(synapse: BridgeSynapse) -> float:
    """``M2/(M1+M2) - M3/(M3+M4)``; positive exactly when ``M2*M4 > M1*M3``."""
    return _weight(*synapse.memristances())


def bridge_apply(synapse: BridgeSynapse, v_in):
    """Read the bridge: output voltage ``w * v_in``; the synapse is not touched."""
    return bridge_weight(synapse) * v_in


def _program(xs, pols, params: DeviceParams, amplitude: float, width: float, dt: float):
    """RK4 over the coupled bridge; returns new states as a list."""
    n = max(1, math.ceil(width / dt - 1e-9))
    h = width / n
    lo, hi = params.bounds
    mem = _memristance
    der = _derivative

    def rhs(x):
        x = [lo if v < lo else hi if v > hi else v for v in x]
        m = [mem(v, params) for v in x]
        ia = amplitude / (m[0] + m[1])
        ib = amplitude / (m[2] + m[3])
        cur = (ia, ia, ib, ib)
        return [der(x[k], cur[k] * m[k], cur[k], params, pols[k]) for k in range(4)]

    x = list(xs)
    for _ in range(n):
        k1 = rhs(x)
        k2 = rhs([x[q] + 0.5 * h * k1[q] for q in range(4)])
        k3 = rhs([x[q] + 0.5 * h * k2[q] for q in range(4)])
        k4 = rhs([x[q] + h * k3[q] for q in range(4)])
        x = [x[q] + h / 6.0 * (k1[q] + 2 * k2[q] + 2 * k3[q] + k4[q]) for q in range(4)]
        if not all(math.isfinite(v) for v in x):
            raise NumericError("non-finite state while programming bridge")
        x = [lo if v < lo else hi if v > hi else v for v in x]
    return x


def program_bridge(
    synapse: BridgeSynapse,
    pulse_width: float,
    amplitude: float | None = None,
    dt: float = PROGRAM_DT,
) -> BridgeSynapse:
    """Apply one rectangular programming pulse across the bridge input.

    Each anti-serial pair carries a single branch current ``v/(Ma+Mb)``; the
    reversed device of the pair sees it with opposite sign, so the pair's
    total resistance stays put while the weight moves in the direction of
    the pulse polarity.
    """
    if pulse_width < 0:
        raise ValueError("pulse_width must be non-negative")
    if not dt > 0:
        raise ValueError("dt must be positive")
    if pulse_width == 0:
        return synapse
    amplitude = synapse.programming_amplitude if amplitude is None else amplitude
    xs = [s.x for s in synapse.states]
    pols = [s.polarity for s in synapse.states]
    new = _program(xs, pols, synapse.params, amplitude, pulse_width, dt)
    return replace(
        synapse,
        m1=replace(synapse.m1, x=new[0]),
        m2=replace(synapse.m2, x=new[1]),
        m3=replace(synapse.m3, x=new[2]),
        m4=replace(synapse.m4, x=new[3]),
    )


def program_to_weight(
    synapse: BridgeSynapse,
    target_w: float,
    amplitude: float | None = None,
    tol: float = 0.01,
    dt: float = PROGRAM_DT,
    max_iter: int = 60,
) -> float:
    """Pulse width that programs ``synapse`` to ``target_w`` within ``tol``.

    The width is found by bisection on simulated pulses. The sign of the
    result is the pulse polarity: a negative width means a pulse of
    ``-|amplitude|``.
    """
    wmax = max_weight(synapse.params)
    if abs(target_w) > wmax:
        raise RangeError(f"target weight {target_w} beyond realizable +/-{wmax:.6f}")
    amplitude = abs(synapse.programming_amplitude if amplitude is None else amplitude)
    if amplitude == 0:
        raise ValueError("amplitude must be non-zero")
    w0 = bridge_weight(synapse)
    if abs(w0 - target_w) <= tol:
        return 0.0
    sign = 1.0 if target_w > w0 else -1.0

    def weight_after(width):
        return bridge_weight(program_bridge(synapse, width, sign * amplitude, dt))

    lo, hi = 0.0, dt
    w_hi = weight_after(hi)
    w_prev = w0
    # grow the bracket until the target is passed or the bridge saturates
    while sign * (w_hi - target_w) < 0:
        if abs(w_hi - target_w) <= tol:
            return sign * hi
        if w_hi == w_prev:
            raise RangeError(f"bridge saturates at {w_hi:.6f} before reaching {target_w}")
        lo, w_prev = hi, w_hi
        hi *= 2.0
        w_hi = weight_after(hi)
    if abs(w_hi - target_w) <= tol:
        return sign * hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        w_mid = weight_after(mid)
        if abs(w_mid - target_w) <= tol:
            return sign * mid
        if sign * (w_mid - target_w) < 0:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    if abs(weight_after(mid) - target_w) <= tol:
        return sign * mid
    raise RangeError(f"could not reach weight {target_w} within {tol}")


@lru_cache(maxsize=4096)
def _quantize_cached(target: float, params: DeviceParams, amplitude: float, resolution: float) -> float:
    start = BridgeSynapse.balanced(params, amplitude)
    width = program_to_weight(start, target, amplitude, tol=0.25 * resolution * _rate(params, amplitude))
    steps = abs(width) / resolution
    sign = 1.0 if width >= 0 else -1.0
    best = None
    for k in {math.floor(steps), math.ceil(steps)}:
        w = bridge_weight(program_bridge(start, k * resolution, sign * amplitude, resolution))
        if best is None or abs(w - target) < abs(best - target):
            best = w
    return best


def _rate(params: DeviceParams, amplitude: float) -> float:
    """Weight change per second near the balanced point (for tolerances)."""
    start = BridgeSynapse.balanced(params, amplitude)
    return max(abs(bridge_weight(program_bridge(start, PROGRAM_DT, amplitude))) / PROGRAM_DT, 1e-9)


def quantize_weight(
    target: float,
    params: DeviceParams | None = None,
    amplitude: float = 1.0,
    resolution: float = PROGRAM_DT,
) -> float:
    """Nearest weight a balanced bridge reaches with a pulse whose width is a
    whole number of ``resolution`` ticks. Targets beyond the realizable range
    are clipped to it first."""
    params = params or DeviceParams()
    wmax = max_weight(params)
    target = float(min(max(target, -wmax), wmax))
    return _quantize_cached(target, params, float(amplitude), float(resolution))


# --------------------------------------------------------------------------
# Current-mode arithmetic blocks
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockNonideality:
    """Operating limits of the transistor-level squarer and divider."""

    mode: str = "ideal"
    squarer_min_input: float = 360e-6
    divider_max_input: float = 300e-6

    def __post_init__(self):
        if self.mode not in ("ideal", "nonideal"):
            raise ValueError("mode must be 'ideal' or 'nonideal'")
        if not (self.squarer_min_input > 0 and self.divider_max_input > 0):
            raise ValueError("thresholds must be positive")

    @property
    def ideal(self) -> bool:
        return self.mode == "ideal"


IDEAL = BlockNonideality()
NONIDEAL = BlockNonideality("nonideal")


def summing(i_plus, i_minus):
    """Sum of the I+ currents minus the sum of the I- currents."""
    return np.sum(np.asarray(i_plus, dtype=float), axis=-1) - np.sum(np.asarray(i_minus, dtype=float), axis=-1)


def relu(x, ceiling=None):
    y = np.maximum(x, 0.0)
    if ceiling is not None:
        y = np.minimum(y, ceiling)
    return y


def squarer(x: float, i_ref: float = I_REF, nonideality: BlockNonideality = IDEAL) -> float:
    """``x^2 / (4 I_ref)``; 1000*x^2 for the 250 uA reference."""
    if x < 0:
        raise ValueError("squarer input must be non-negative")
    if i_ref <= 0:
        raise ValueError("i_ref must be positive")
    if not nonideality.ideal and x < nonideality.squarer_min_input:
        return 0.0
    return x * x / (4.0 * i_ref)


def divider(x: float, i_ref: float = I_REF, nonideality: BlockNonideality = IDEAL) -> float:
    """``I_ref^2 / (4 x)``."""
    if x <= 0:
        raise ValueError("divider input must be positive")
    if i_ref <= 0:
        raise ValueError("i_ref must be positive")
    if not nonideality.ideal and x > nonideality.divider_max_input:
        raise OperatingRangeError(f"divider input {x:.6g} A above {nonideality.divider_max_input:.6g} A")
    return i_ref * i_ref / (4.0 * x)


def multiplier(i1: float, i2: float, i_ref: float = I_REF, nonideality: BlockNonideality = IDEAL) -> float:
    """Quarter-square multiplier: ``sq(i1+i2) - sq(i1-i2) = i1*i2/I_ref``.

    The difference is fed to two squarer paths as ``i1-i2`` and ``i2-i1``;
    whichever is negative is cut off, so exactly one path carries it. Signs of
    the operands are handled outside the single-quadrant core.
    """
    if i_ref <= 0:
        raise ValueError("i_ref must be positive")
    sign = math.copysign(1.0, i1) * math.copysign(1.0, i2)
    a, b = abs(i1), abs(i2)
    total = squarer(a + b, i_ref, nonideality)
    diff = squarer(max(a - b, 0.0), i_ref, nonideality) + squarer(max(b - a, 0.0), i_ref, nonideality)
    return sign * (total - diff)


def gain_mirror(x, ratio: float):
    """Current mirror with an unbalanced W/L ratio."""
    if ratio <= 0:
        raise ValueError("mirror ratio must be positive")
    return x * ratio


def tanh_block(
    x: float,
    m: float,
    c: float,
    nonideality: BlockNonideality = IDEAL,
    structural: bool = False,
    i_ref: float = I_REF,
) -> float:
    """Rational tanh ``m*x/(x^2 + c)``, odd in ``x``.

    With ``structural=True`` the value is assembled from the blocks: the
    squarer output plus a bias current ``c/(4 I_ref)`` feeds the divider,
    whose output is multiplied by ``|x|`` and scaled by a mirror of ratio
    ``m/I_ref^2``.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if not structural:
        return m * x / (x * x + c)
    ax = abs(x)
    den = summing([squarer(ax, i_ref, nonideality), c / (4.0 * i_ref)], [])
    q = divider(float(den), i_ref, nonideality)
    p = multiplier(ax, q, i_ref, nonideality)
    out = gain_mirror(p, m / (i_ref * i_ref))
    return math.copysign(out, x) if x != 0 else 0.0


def pade_tanh(x):
    """Unit-normalized rational tanh ``3x/(x^2+3)``."""
    return 3.0 * x / (x * x + 3.0)


def _tanh_error(m, c, unit, grid):
    return float(np.max(np.abs(m * grid / (grid * grid + c) - unit * np.tanh(grid / unit))))


def calibrate_tanh(unit_current: float, refine: bool = False, points: int = 2001) -> tuple[float, float]:
    """Constants ``(m, c)`` so ``m*x/(x^2+c)`` tracks ``unit*tanh(x/unit)``.

    Scaling the unit-normalized form gives ``m = 3 u^2`` and ``c = 3 u^2``
    (both A^2). With ``refine=True`` a coarse grid followed by Nelder-Mead
    minimizes the peak error over ``|x| <= 2u``; the scaled seed is kept when
    nothing beats it.
    """
    if unit_current <= 0:
        raise ValueError("unit_current must be positive")
    u = float(unit_current)
    m0 = c0 = 3.0 * u * u
    if not refine:
        return m0, c0
    grid = np.linspace(-2 * u, 2 * u, points)
    best = (_tanh_error(m0, c0, u, grid), m0, c0)
    factors = np.linspace(0.7, 1.4, 15)
    for fm in factors:
        for fc in factors:
            err = _tanh_error(m0 * fm, c0 * fc, u, grid)
            if err < best[0]:
                best = (err, m0 * fm, c0 * fc)
    from scipy.optimize import minimize

    res = minimize(
        lambda z: _tanh_error(m0 * z[0], c0 * z[1], u, grid),
        x0=[best[1] / m0, best[2] / c0],
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-14 * u, "maxiter": 4000},
    )
    if res.fun < best[0] and res.x[1] > 0:
        best = (res.fun, m0 * res.x[0], c0 * res.x[1])
    return best[1], best[2]


def max_pool_block(v_inputs, diode_threshold: float = 0.7) -> float:
    """Diode-OR max selector: output floors at the diode threshold."""
    v = np.asarray(v_inputs, dtype=float)
    if v.size == 0:
        raise ValueError("max pool needs at least one input")
    if diode_threshold < 0:
        raise ValueError("diode_threshold must be non-negative")
    return float(max(diode_threshold, v.max()))
