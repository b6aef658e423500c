"""Readers and writers for the plain-text and binary currencies used by the
simulators: piecewise-linear traces, two-column CSV traces, binary PGM
images, key=value parameter profiles and whitespace weight matrices.

Every reader rejects malformed input instead of repairing it, and every
error message names the offending line (text formats) or byte offset (PGM).
Floats are written with ``repr`` which is the shortest string that parses
back to the identical double.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, RangeError


def fmt_float(value: float) -> str:
    """Shortest round-trip decimal for a double."""
    return repr(float(value))


# --------------------------------------------------------------------------
# Signal traces
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SignalTrace:
    """Piecewise-linear signal given by ``(t, value)`` breakpoints."""

    times: np.ndarray
    values: np.ndarray
    unit: str = "V"

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        v = np.array(self.values, dtype=float).reshape(-1)
        if t.shape != v.shape:
            raise ValueError("times and values must have the same length")
        if t.size == 0:
            raise ValueError("a trace needs at least one breakpoint")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("trace contains non-finite entries")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("trace times must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.times.size

    def __eq__(self, other):
        if not isinstance(other, SignalTrace):
            return NotImplemented
        return (
            self.unit == other.unit
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def at(self, t):
        """Linear interpolation at ``t`` (scalar or array) inside the span."""
        return np.interp(t, self.times, self.values)


def _parse_number(token: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise FormatError(f"line {lineno}: not a number: {token!r}") from None
    if not math.isfinite(value):
        raise FormatError(f"line {lineno}: non-finite value {token!r}")
    return value


def _check_monotone(times: list[float], linenos: list[int]) -> None:
    for k in range(1, len(times)):
        if times[k] <= times[k - 1]:
            raise FormatError(f"line {linenos[k]}: time {times[k]!r} does not increase")


def read_pwl(text: str, unit: str = "V") -> SignalTrace:
    """Parse PWL text: one ``time value`` pair per line, space or tab separated."""
    times, values, linenos = [], [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 2 fields, got {len(parts)}")
        times.append(_parse_number(parts[0], lineno))
        values.append(_parse_number(parts[1], lineno))
        linenos.append(lineno)
    if not times:
        raise FormatError("empty PWL file")
    _check_monotone(times, linenos)
    return SignalTrace(times, values, unit)


def write_pwl(trace: SignalTrace) -> str:
    if trace is None or len(trace) == 0:
        raise ValueError("cannot write an empty trace")
    return "".join(f"{fmt_float(t)} {fmt_float(v)}\n" for t, v in zip(trace.times, trace.values))


def read_csv_trace(text: str, unit: str = "V") -> SignalTrace:
    """Parse a two-column ``time,value`` CSV; a non-numeric first line is a header."""
    times, values, linenos = [], [], []
    first = True
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        parts = [p.strip() for p in stripped.split(",")]
        if first:
            first = False
            try:
                [float(p) for p in parts]
            except ValueError:
                continue  # header
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 2 columns, got {len(parts)}")
        times.append(_parse_number(parts[0], lineno))
        values.append(_parse_number(parts[1], lineno))
        linenos.append(lineno)
    if not times:
        raise FormatError("empty CSV trace")
    _check_monotone(times, linenos)
    return SignalTrace(times, values, unit)


def write_csv_trace(trace: SignalTrace, header: str | None = "time,value") -> str:
    lines = [header] if header else []
    lines += [f"{fmt_float(t)},{fmt_float(v)}" for t, v in zip(trace.times, trace.values)]
    return "\n".join(lines) + "\n"


def resample(trace: SignalTrace, t0: float, dt: float, n: int) -> np.ndarray:
    """Sample ``n`` points at ``t0 + k*dt`` by linear interpolation."""
    if n < 0 or dt <= 0:
        raise ValueError("need n >= 0 and dt > 0")
    grid = t0 + dt * np.arange(n)
    lo, hi = trace.span
    # one ulp-scale slack so a grid built by repeated addition still lands inside
    slack = 1e-12 * max(1.0, abs(hi))
    if n and (grid[0] < lo - slack or grid[-1] > hi + slack):
        raise RangeError(f"sample window [{grid[0]}, {grid[-1]}] outside trace span [{lo}, {hi}]")
    return np.interp(grid, trace.times, trace.values)


def thin_breakpoints(trace: SignalTrace, rtol: float = 1e-12) -> SignalTrace:
    """Drop breakpoints that lie on the straight line through their neighbours."""
    t, v = trace.times, trace.values
    if len(t) <= 2:
        return trace
    keep = [0]
    for k in range(1, len(t) - 1):
        a = keep[-1]
        expected = v[a] + (v[k + 1] - v[a]) * (t[k] - t[a]) / (t[k + 1] - t[a])
        scale = max(abs(v[a]), abs(v[k]), abs(v[k + 1]), 1.0)
        if abs(expected - v[k]) > rtol * scale:
            keep.append(k)
    keep.append(len(t) - 1)
    return SignalTrace(t[keep], v[keep], trace.unit)


# --------------------------------------------------------------------------
# Images
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ImageGrid:
    """8-bit grayscale raster stored row-major as a ``(height, width)`` array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("image data must be a non-empty 2-D array")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255) or np.any(arr != np.round(arr)):
                raise ValueError("pixel values must be integers in 0..255")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ImageGrid):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "ImageGrid":
        values = np.asarray(values)
        if values.size != width * height:
            raise ValueError(f"expected {width * height} pixels, got {values.size}")
        return cls(values.reshape(height, width))


_WS = b" \t\r\n\v\f"


def read_pgm(raw: bytes) -> ImageGrid:
    """Decode a binary (P5) PGM with maxval 255."""
    raw = bytes(raw)
    if raw[:2] != b"P5":
        raise FormatError("byte 0: bad magic, expected b'P5'")
    pos = 2
    fields = []
    while len(fields) < 3:
        if pos >= len(raw):
            raise FormatError(f"byte {pos}: header truncated")
        c = raw[pos:pos + 1]
        if c[0] in _WS:
            pos += 1
            continue
        if c == b"#":
            end = raw.find(b"\n", pos)
            if end < 0:
                raise FormatError(f"byte {pos}: unterminated header comment")
            pos = end + 1
            continue
        start = pos
        while pos < len(raw) and raw[pos] not in _WS and raw[pos:pos + 1] != b"#":
            pos += 1
        token = raw[start:pos]
        if not token.isdigit():
            raise FormatError(f"byte {start}: expected an integer, got {token!r}")
        fields.append((int(token), start))
    (width, wpos), (height, hpos), (maxval, mpos) = fields
    if width <= 0:
        raise FormatError(f"byte {wpos}: width must be positive")
    if height <= 0:
        raise FormatError(f"byte {hpos}: height must be positive")
    if maxval != 255:
        raise FormatError(f"byte {mpos}: maxval {maxval} unsupported, need 255")
    if pos >= len(raw) or raw[pos] not in _WS:
        raise FormatError(f"byte {pos}: missing whitespace after maxval")
    pos += 1
    need = width * height
    payload = raw[pos:pos + need]
    if len(payload) < need:
        raise FormatError(
            f"byte {pos + len(payload)}: payload truncated, {len(payload)} of {need} bytes present"
        )
    if len(raw) > pos + need:
        raise FormatError(f"byte {pos + need}: trailing data after payload")
    return ImageGrid(np.frombuffer(payload, dtype=np.uint8).reshape(height, width).copy())


def write_pgm(img: ImageGrid) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.data.tobytes()


# --------------------------------------------------------------------------
# Parameter profiles
# --------------------------------------------------------------------------

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")


def _profile_value(token: str):
    try:
        value = float(token)
    except ValueError:
        return token
    return value


def read_profile(text: str) -> dict:
    """Parse ``name = value`` lines into an ordered dict.

    Values that parse as numbers become floats, anything else is kept as an
    enum token. ``#`` starts a comment. Names are case-sensitive and unique.
    """
    entries: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise FormatError(f"line {lineno}: expected name=value")
        name, value = (s.strip() for s in body.split("=", 1))
        if not _NAME.match(name):
            raise FormatError(f"line {lineno}: bad parameter name {name!r}")
        if not value:
            raise FormatError(f"line {lineno}: missing value for {name!r}")
        if name in entries:
            raise FormatError(f"line {lineno}: duplicate parameter {name!r}")
        entries[name] = _profile_value(value)
    return entries


def write_profile(entries: dict) -> str:
    out = []
    for name, value in entries.items():
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = fmt_float(value)
        out.append(f"{name} = {value}")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# Weight matrices
# --------------------------------------------------------------------------


def read_matrix(text: str) -> np.ndarray:
    rows, width = [], None
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        row = [_parse_number(p, lineno) for p in parts]
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise FormatError(f"line {lineno}: expected {width} columns, got {len(row)}")
        rows.append(row)
    if not rows:
        raise FormatError("empty matrix")
    return np.array(rows, dtype=float)


def write_matrix(matrix) -> str:
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    return "".join(" ".join(fmt_float(x) for x in row) + "\n" for row in m)


__all__ = [
    "SignalTrace",
    "ImageGrid",
    "fmt_float",
    "read_pwl",
    "write_pwl",
    "read_csv_trace",
    "write_csv_trace",
    "resample",
    "thin_breakpoints",
    "read_pgm",
    "write_pgm",
    "read_profile",
    "write_profile",
    "read_matrix",
    "write_matrix",
]
