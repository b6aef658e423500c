"""Memristor device models.

Three models are supported:

``linear``
    HP linear ion drift. State ``x = w/D`` in [0, 1]; memristance
    ``R_on*x + R_off*(1-x)``; current controlled, ``dw/dt = mu_v*R_on/D * i``.
``nonlinear``
    Nonlinear ion drift. Same normalized state and memristance map; voltage
    controlled, ``dx/dt = a * v**m * f(x)``.
``team``
    Threshold adaptive model. State in metres on ``[x_on, x_off]``; no motion
    while ``i_on < i < i_off``; polynomial drive above the thresholds. Both the
    linear and the exponential resistance maps are available.

All state equations are multiplied by a window function and integrated with a
fixed-step classical Runge-Kutta scheme; the state is clamped to its legal
range after every step so finite steps cannot overshoot the boundaries.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import NumericError, RangeError
from .formats import SignalTrace, fmt_float, read_profile, write_profile

MODELS = ("linear", "nonlinear", "team")
WINDOWS = ("none", "joglekar", "biolek", "prodromakis", "piecewise", "team")
TEAM_VARIANTS = ("linear", "exponential")

DEFAULT_DT = 1e-5


@dataclass(frozen=True)
class WindowSpec:
    """Window function multiplying the state derivative.

    ``p`` is the exponent for Joglekar, Biolek and Prodromakis, ``j`` the
    Prodromakis scale. The piecewise window uses ``a``, ``b`` inside
    ``[x0, 1-x0]`` and ``k*x*(1-x)`` outside; ``k=None`` picks the value that
    makes the two pieces meet at ``x0``. ``w_c`` is the decay width of the
    TEAM window, in units of the normalized state.
    """

    kind: str = "none"
    p: int = 1
    j: float = 1.0
    a: float = 0.4
    b: float = 2.0
    k: float | None = None
    x0: float = 0.1
    w_c: float = 0.05

    def __post_init__(self):
        if self.kind not in WINDOWS:
            raise ValueError(f"unknown window {self.kind!r}; choose from {WINDOWS}")
        if int(self.p) != self.p or self.p < 1:
            raise ValueError("window exponent p must be a positive integer")
        object.__setattr__(self, "p", int(self.p))
        if self.j <= 0 or self.a <= 0 or self.b <= 0 or self.w_c <= 0:
            raise ValueError("window constants j, a, b, w_c must be positive")
        if not 0 < self.x0 < 0.5:
            raise ValueError("piecewise x0 must lie in (0, 0.5)")
        if self.k is None:
            inner = 1.0 / (1.0 + (abs(self.x0 - 0.5) / self.a) ** (2 * self.b))
            object.__setattr__(self, "k", inner / (self.x0 * (1 - self.x0)))
        if not 0 < self.k * self.x0 * (1 - self.x0) <= 1:
            # outer piece is largest at x0
            raise ValueError("piecewise k must keep k*x0*(1-x0) in (0, 1]")


def window_value(x: float, i_sign: float, spec: WindowSpec) -> float:
    """Window ``f(x)`` for normalized state ``x`` and drive direction ``i_sign``.

    For the TEAM window ``x`` is the state offset normalized to [0, 1]; a
    non-negative ``i_sign`` selects the branch that slows motion towards the
    upper bound.
    """
    kind = spec.kind
    if kind == "none":
        return 1.0
    if kind == "joglekar":
        return 1.0 - (2.0 * x - 1.0) ** (2 * spec.p)
    if kind == "biolek":
        step = 1.0 if -i_sign >= 0 else 0.0
        return 1.0 - (x - step) ** (2 * spec.p)
    if kind == "prodromakis":
        return spec.j * (1.0 - ((x - 0.5) ** 2 + 0.75) ** spec.p)
    if kind == "piecewise":
        if spec.x0 <= x <= 1.0 - spec.x0:
            return 1.0 / (1.0 + (abs(x - 0.5) / spec.a) ** (2 * spec.b))
        return spec.k * x * (1.0 - x)
    # team
    if i_sign >= 0:
        return math.exp(-math.exp((x - 1.0) / spec.w_c))
    return math.exp(-math.exp(-x / spec.w_c))


@dataclass(frozen=True)
class DeviceParams:
    """Model kind, constants and window for one memristor.

    Defaults describe an HP-class linear drift device (R_on = 1 kOhm,
    R_off = 81 kOhm, D = 10 nm, mu_v = 1e-14 m^2/Vs). The nonlinear and TEAM
    constants are demonstration values; see ``BUILTIN_PROFILES``.
    """

    model: str = "linear"
    r_on: float = 1e3
    r_off: float = 81e3
    # linear ion drift
    d: float = 10e-9
    mu_v: float = 1e-14
    # nonlinear ion drift: i = x^n beta sinh(alpha v) + chi (exp(gamma v) - 1),
    # dx/dt = a v^m f(x)
    alpha: float = 2.0
    beta: float = 1e-4
    gamma: float = 4.0
    chi: float = 1e-6
    n: float = 4.0
    m: int = 5
    a: float = 1.0
    # TEAM
    k_on: float = -2e-9
    k_off: float = 2e-9
    alpha_on: float = 3.0
    alpha_off: float = 3.0
    i_on: float = -2e-5
    i_off: float = 2e-5
    x_on: float = 0.0
    x_off: float = 3e-9
    lam: float | None = None
    variant: str = "linear"
    window: WindowSpec = field(default_factory=WindowSpec)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if not self.r_on > 0:
            raise ValueError("r_on must be positive")
        if not self.r_off > self.r_on:
            raise ValueError("r_off must exceed r_on")
        if self.model == "linear" and not (self.d > 0 and self.mu_v > 0):
            raise ValueError("linear model needs d > 0 and mu_v > 0")
        if self.model == "nonlinear" and (int(self.m) != self.m or self.m % 2 == 0):
            raise ValueError("nonlinear model needs an odd integer m")
        if self.model == "team":
            if not self.i_on < 0 < self.i_off:
                raise ValueError("TEAM needs i_on < 0 < i_off")
            if not self.x_on < self.x_off:
                raise ValueError("TEAM needs x_on < x_off")
            if self.variant not in TEAM_VARIANTS:
                raise ValueError(f"unknown TEAM variant {self.variant!r}")
        if self.lam is None:
            object.__setattr__(self, "lam", math.log(self.r_off / self.r_on))

    @property
    def bounds(self) -> tuple[float, float]:
        """Legal range of the state variable."""
        if self.model == "team":
            return self.x_on, self.x_off
        return 0.0, 1.0

    def normalize(self, x: float) -> float:
        lo, hi = self.bounds
        return (x - lo) / (hi - lo)

    @classmethod
    def from_entries(cls, entries: dict) -> "DeviceParams":
        """Build from a parsed key=value profile (see ``read_profile``)."""
        entries = dict(entries)
        wkw = {}
        if "window" in entries:
            wkw["kind"] = str(entries.pop("window"))
        for name in [f.name for f in fields(WindowSpec) if f.name != "kind"]:
            key = "window_" + name
            if key in entries:
                wkw[name] = entries.pop(key)
        known = {f.name for f in fields(cls)} - {"window"}
        unknown = set(entries) - known
        if unknown:
            raise ValueError(f"unknown profile parameters: {sorted(unknown)}")
        if "m" in entries:
            entries["m"] = int(entries["m"])
        for key in ("model", "variant"):
            if key in entries:
                entries[key] = str(entries[key])
        return cls(window=WindowSpec(**wkw), **entries)

    def to_entries(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "window"}
        w = asdict(self.window)
        out["window"] = w.pop("kind")
        out.update({"window_" + k: v for k, v in w.items()})
        return out


@dataclass(frozen=True)
class MemristorState:
    """Internal state ``x`` and terminal orientation of one device.

    ``polarity = -1`` means the device is inserted reversed, so the drive seen
    by its state equation changes sign.
    """

    x: float
    polarity: int = 1

    def __post_init__(self):
        if self.polarity not in (1, -1):
            raise ValueError("polarity must be +1 or -1")


def _check_state(x: float, params: DeviceParams) -> None:
    lo, hi = params.bounds
    if not lo <= x <= hi:
        raise RangeError(f"state {x!r} outside [{lo}, {hi}] for model {params.model}")


def _memristance(x: float, p: DeviceParams) -> float:
    if p.model == "team":
        u = (x - p.x_on) / (p.x_off - p.x_on)
        if p.variant == "exponential":
            return p.r_on * math.exp(p.lam * u)
        return p.r_on + (p.r_off - p.r_on) * u
    return p.r_on * x + p.r_off * (1.0 - x)


def memristance(state: MemristorState, params: DeviceParams) -> float:
    """Resistance of the device in its current state, in ohms."""
    _check_state(state.x, params)
    return _memristance(state.x, params)


def nonlinear_current(x: float, v: float, params: DeviceParams) -> float:
    """Current of the nonlinear ion drift I-V relation."""
    p = params
    return x ** p.n * p.beta * math.sinh(p.alpha * v) + p.chi * (math.exp(p.gamma * v) - 1.0)


def _derivative(x: float, v: float, i: float, p: DeviceParams, polarity: int) -> float:
    u = p.normalize(x)
    if p.model == "linear":
        drive = polarity * i
        return p.mu_v * p.r_on / (p.d * p.d) * drive * window_value(u, drive, p.window)
    if p.model == "nonlinear":
        drive = polarity * v
        return p.a * drive ** p.m * window_value(u, drive, p.window)
    drive = polarity * i
    if drive > p.i_off:
        return p.k_off * (drive / p.i_off - 1.0) ** p.alpha_off * window_value(u, 1.0, p.window)
    if drive < p.i_on:
        return p.k_on * (drive / p.i_on - 1.0) ** p.alpha_on * window_value(u, -1.0, p.window)
    return 0.0


def state_derivative(state: MemristorState, v: float, i: float, params: DeviceParams) -> float:
    """``dx/dt`` including the window factor.

    Linear and TEAM models are driven by ``i``, the nonlinear model by ``v``.
    The linear model returns the derivative of the normalized state, so
    ``dw/dt`` is this value times ``D``.
    """
    return _derivative(state.x, v, i, params, state.polarity)


@lru_cache(maxsize=64)
def _rhs(params: DeviceParams, polarity: int):
    lo, hi = params.bounds
    mem = _memristance
    deriv = _derivative

    def f(x, v):
        x = lo if x < lo else hi if x > hi else x
        return deriv(x, v, v / mem(x, params), params, polarity)

    return f


def _rk4(f, x, v0, vmid, v1, dt, lo, hi):
    k1 = f(x, v0)
    k2 = f(x + 0.5 * dt * k1, vmid)
    k3 = f(x + 0.5 * dt * k2, vmid)
    k4 = f(x + dt * k3, v1)
    x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not math.isfinite(x):
        raise NumericError("non-finite state during integration")
    return lo if x < lo else hi if x > hi else x


def step_state(state: MemristorState, v_drive: float, dt: float, params: DeviceParams) -> MemristorState:
    """Advance one RK4 step of length ``dt`` under a constant drive voltage."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    _check_state(state.x, params)
    lo, hi = params.bounds
    f = _rhs(params, state.polarity)
    x = _rk4(f, state.x, v_drive, v_drive, v_drive, dt, lo, hi)
    return replace(state, x=x)


@dataclass(frozen=True, eq=False)
class SimTrace:
    """Samples of a driven device: time, voltage, current, state, memristance."""

    t: np.ndarray
    v: np.ndarray
    i: np.ndarray
    x: np.ndarray
    memristance: np.ndarray

    def __len__(self):
        return self.t.size

    def to_csv(self) -> str:
        rows = ["t,v,i,x,memristance"]
        for row in zip(self.t, self.v, self.i, self.x, self.memristance):
            rows.append(",".join(fmt_float(c) for c in row))
        return "\n".join(rows) + "\n"


def simulate_drive(
    params: DeviceParams,
    initial_x: float,
    drive: SignalTrace,
    dt: float = DEFAULT_DT,
    polarity: int = 1,
) -> SimTrace:
    """Integrate one device under a PWL voltage drive, sampled every ``dt``.

    The drive is interpolated linearly between breakpoints, including at the
    RK4 half-step stages, and ``i = v / M`` at each sample.
    """
    if drive is None or len(drive) == 0:
        raise ValueError("drive must contain at least one breakpoint")
    if not dt > 0:
        raise ValueError("dt must be positive")
    _check_state(initial_x, params)
    t0, t1 = drive.span
    n = int(round((t1 - t0) / dt))
    t = t0 + dt * np.arange(n + 1)
    v = drive.at(t)
    vmid = drive.at(t[:-1] + 0.5 * dt).tolist()
    vl = v.tolist()

    lo, hi = params.bounds
    f = _rhs(params, polarity)
    xs = [float(initial_x)]
    x = xs[0]
    for k in range(n):
        x = _rk4(f, x, vl[k], vmid[k], vl[k + 1], dt, lo, hi)
        xs.append(x)
    x_arr = np.array(xs)
    if params.model == "team":
        u = (x_arr - params.x_on) / (params.x_off - params.x_on)
        if params.variant == "exponential":
            mem = params.r_on * np.exp(params.lam * u)
        else:
            mem = params.r_on + (params.r_off - params.r_on) * u
    else:
        mem = params.r_on * x_arr + params.r_off * (1.0 - x_arr)
    mem = np.clip(mem, params.r_on, params.r_off)
    return SimTrace(t=t, v=v, i=v / mem, x=x_arr, memristance=mem)


def lobe_area(trace: SimTrace) -> float:
    """Area enclosed by the positive-voltage lobe of an I-V loop, ``|sum i dv|``."""
    v, i = trace.v, trace.i
    both = (v[:-1] >= 0) & (v[1:] >= 0)
    seg = 0.5 * (i[:-1] + i[1:]) * np.diff(v)
    return float(abs(np.sum(seg[both])))


def sine_drive(amplitude: float, frequency: float, duration: float, points_per_period: int = 2000) -> SignalTrace:
    """Densely sampled PWL approximation of ``amplitude*sin(2 pi f t)``."""
    n = max(2, int(round(duration * frequency * points_per_period)) + 1)
    t = np.linspace(0.0, duration, n)
    v = amplitude * np.sin(2 * np.pi * frequency * t)
    return SignalTrace(t, v)


def pulse_drive(amplitude: float, width: float, period: float, count: int, edge: float | None = None) -> SignalTrace:
    """Train of rectangular pulses with short linear edges."""
    if not 0 < width < period or count < 1:
        raise ValueError("need 0 < width < period and count >= 1")
    edge = edge if edge is not None else min(width, period - width) * 1e-3
    ts, vs = [0.0], [0.0]
    for k in range(count):
        start = k * period + edge
        ts += [start, start + edge, start + edge + width, start + 2 * edge + width]
        vs += [0.0, amplitude, amplitude, 0.0]
    ts.append(count * period + 2 * edge)
    vs.append(0.0)
    return SignalTrace(ts, vs)


BUILTIN_PROFILES = {
    "hp-linear": """\
# HP-class linear ion drift device
model = linear
r_on = 1000
r_off = 81000
d = 1e-08
mu_v = 1e-14
window = none
""",
    "hp-joglekar": """\
# linear ion drift with the Joglekar window, p = 1
model = linear
r_on = 1000
r_off = 81000
d = 1e-08
mu_v = 1e-14
window = joglekar
window_p = 1
""",
    "nonlinear": """\
# nonlinear ion drift sample; piecewise window stands in for the
# programming-circuit window used in the pulse experiment
model = nonlinear
r_on = 1000
r_off = 81000
alpha = 2
beta = 0.0001
gamma = 4
chi = 1e-06
n = 4
m = 5
a = 1
window = piecewise
""",
    "team": """\
# threshold adaptive demonstration device, linear resistance map
model = team
r_on = 1000
r_off = 81000
k_on = -2e-09
k_off = 2e-09
alpha_on = 3
alpha_off = 3
i_on = -2e-05
i_off = 2e-05
x_on = 0
x_off = 3e-09
variant = linear
window = team
window_w_c = 0.05
""",
}


def load_profile(name_or_path: str | Path) -> DeviceParams:
    """Device parameters from a built-in profile name or a key=value file."""
    key = str(name_or_path)
    if key in BUILTIN_PROFILES:
        return DeviceParams.from_entries(read_profile(BUILTIN_PROFILES[key]))
    path = Path(name_or_path)
    if not path.is_file():
        raise FileNotFoundError(f"no built-in profile or file named {key!r}")
    return DeviceParams.from_entries(read_profile(path.read_text()))


def dump_profile(params: DeviceParams) -> str:
    entries = {k: v for k, v in params.to_entries().items() if v is not None}
    return write_profile(entries)
