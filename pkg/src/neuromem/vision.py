"""3x3 image kernels evaluated as bridge-weighted sums of pixel voltages.

An image is cut into its valid 3x3 windows. Each of the nine taps becomes
a voltage trace with one breakpoint per window position (row-major), the
kernel forms a weighted sum per breakpoint, and the summed trace is
min-max normalized back into an 8-bit image of size (H-2, W-2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import blocks
from .device import DeviceParams
from .errors import RangeError
from .formats import ImageGrid, SignalTrace

DT_PIXEL = 1e-3
REALIZATIONS = ("ideal", "bridge")
_ROUND_GUARD = 1e-9
FLAT_RTOL = 1e-9


@dataclass(frozen=True)
class PixelVoltageMap:
    """Linear map from gray levels 0..255 onto 0..v_full volts."""

    v_full: float = 1.5

    def __post_init__(self):
        if not self.v_full > 0:
            raise ValueError("v_full must be positive")

    def to_volts(self, pixels):
        return np.asarray(pixels, dtype=float) / 255.0 * self.v_full

    def to_pixels(self, volts):
        return np.clip(round_half_up(np.asarray(volts, dtype=float) / self.v_full * 255.0), 0, 255).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    weights: np.ndarray
    realization: str = "ideal"
    params: DeviceParams = field(default_factory=DeviceParams)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (3, 3):
            raise ValueError(f"kernel must be 3x3, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("kernel weights must be finite")
        if self.realization not in REALIZATIONS:
            raise ValueError(f"realization must be one of {REALIZATIONS}")
        if self.realization == "bridge":
            wmax = blocks.max_weight(self.params)
            if np.max(np.abs(w)) > wmax:
                raise RangeError(f"kernel weight beyond bridge range +/-{wmax:.6f}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def effective(self) -> np.ndarray:
        """Weights actually applied: bridge-quantized in ``bridge`` mode."""
        if self.realization == "ideal":
            return self.weights
        q = [blocks.quantize_weight(v, self.params) for v in self.weights.ravel()]
        return np.array(q).reshape(3, 3)

    def with_realization(self, realization: str) -> "KernelSpec":
        return KernelSpec(self.weights, realization, self.params)


BLUR = KernelSpec(np.full((3, 3), 0.1))
EDGE = KernelSpec(np.array([[-0.1, -0.1, -0.1], [-0.1, 0.8, -0.1], [-0.1, -0.1, -0.1]]))
IDENTITY = KernelSpec(np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]))
NAMED_KERNELS = {"blur": BLUR, "edge": EDGE, "identity": IDENTITY}


def round_half_up(x):
    """Nearest integer with ties upward; a tiny guard absorbs rounding noise
    so values that should be exact halves round the same everywhere."""
    return np.floor(np.asarray(x, dtype=float) + 0.5 + _ROUND_GUARD)


def image_to_signals(img: ImageGrid, vmap: PixelVoltageMap | None = None, dt_pixel: float = DT_PIXEL):
    """Nine tap traces (row-major tap order) and the output ``(width, height)``."""
    vmap = vmap or PixelVoltageMap()
    if img.width < 3 or img.height < 3:
        raise ValueError(f"image {img.width}x{img.height} is smaller than 3x3")
    if dt_pixel <= 0:
        raise ValueError("dt_pixel must be positive")
    out_h, out_w = img.height - 2, img.width - 2
    volts = vmap.to_volts(img.data)
    times = dt_pixel * np.arange(out_h * out_w)
    traces = []
    for r in range(3):
        for c in range(3):
            traces.append(SignalTrace(times, volts[r:r + out_h, c:c + out_w].ravel()))
    return traces, (out_w, out_h)


def conv_forward(kernel: KernelSpec, signals, r_load: float = 1e3, transconductance: float = 1e-3) -> SignalTrace:
    """Per breakpoint ``g_m * r_load * sum_i w_i v_i``; the defaults give unit scale."""
    if len(signals) != 9:
        raise ValueError(f"expected 9 tap traces, got {len(signals)}")
    if r_load <= 0:
        raise ValueError("r_load must be positive")
    times = signals[0].times
    for s in signals[1:]:
        if len(s) != len(times) or not np.array_equal(s.times, times):
            raise ValueError("tap traces do not share breakpoints")
    w = kernel.effective().ravel()
    acc = np.zeros(len(times))
    for k in range(9):
        acc = acc + w[k] * signals[k].values
    return SignalTrace(times, transconductance * r_load * acc)


def normalize_to_pixels(values, flat_tol: float = 0.0) -> np.ndarray:
    """Min-max onto 0..255 with half-up rounding.

    Input whose spread is at most ``flat_tol`` counts as constant and maps
    to zeros; otherwise cancellation noise would be stretched to full scale.
    """
    v = np.asarray(values, dtype=float)
    lo, hi = v.min(), v.max()
    if hi - lo <= flat_tol:
        return np.zeros(v.shape, dtype=np.uint8)
    return round_half_up((v - lo) / (hi - lo) * 255.0).astype(np.uint8)


def signals_to_image(trace: SignalTrace, out_width: int, out_height: int, flat_tol: float = 0.0) -> ImageGrid:
    if len(trace) != out_width * out_height:
        raise ValueError(f"trace has {len(trace)} points, need {out_width * out_height}")
    return ImageGrid(normalize_to_pixels(trace.values, flat_tol).reshape(out_height, out_width))


def flat_tolerance(kernel: KernelSpec, vmap: PixelVoltageMap | None = None) -> float:
    """Spread below which a kernel output is treated as flat: 1e-9 of full scale."""
    vmap = vmap or PixelVoltageMap()
    return FLAT_RTOL * vmap.v_full * float(np.sum(np.abs(kernel.effective())))


def run_kernel(img: ImageGrid, kernel: KernelSpec, vmap: PixelVoltageMap | None = None) -> ImageGrid:
    signals, (w, h) = image_to_signals(img, vmap)
    return signals_to_image(conv_forward(kernel, signals), w, h, flat_tolerance(kernel, vmap))


def pool_dims(height: int, width: int, window: int, stride: int) -> tuple[int, int]:
    return (height - window) // stride + 1, (width - window) // stride + 1


def pool_values(values, window: int, stride: int, kind: str = "max", diode_threshold: float | None = None):
    """Pool a 2-D float array. ``max`` optionally floors each window at the diode threshold."""
    a = np.asarray(values, dtype=float)
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be >= 1")
    if window > min(a.shape):
        raise ValueError(f"window {window} larger than input {a.shape}")
    oh, ow = pool_dims(*a.shape, window, stride)
    out = np.empty((oh, ow))
    for r in range(oh):
        for c in range(ow):
            patch = a[r * stride:r * stride + window, c * stride:c * stride + window]
            if kind == "max":
                out[r, c] = patch.max() if diode_threshold is None else blocks.max_pool_block(patch.ravel(), diode_threshold)
            elif kind == "avg":
                out[r, c] = patch.mean()
            else:
                raise ValueError(f"unknown pooling kind {kind!r}")
    return out


def pool_image(
    img: ImageGrid,
    window: int = 2,
    stride: int = 2,
    kind: str = "max",
    diode_threshold: float | None = None,
    vmap: PixelVoltageMap | None = None,
) -> ImageGrid:
    """Max or average pooling over an image or feature map.

    Max pooling keeps gray levels unless a diode threshold is given, in
    which case windows are pooled in volts and mapped back. Average pooling
    takes the 3x3 case through the kernel engine with weights 1/9 and does
    the others directly; both are min-max normalized.
    """
    vmap = vmap or PixelVoltageMap()
    kind = kind.lower()
    if kind not in ("max", "avg"):
        raise ValueError(f"unknown pooling kind {kind!r}")
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be >= 1")
    if window > min(img.height, img.width):
        raise ValueError(f"window {window} larger than image {img.width}x{img.height}")
    if kind == "max":
        if diode_threshold is None:
            return ImageGrid(pool_values(img.data, window, stride).astype(np.uint8))
        v = pool_values(vmap.to_volts(img.data), window, stride, "max", diode_threshold)
        return ImageGrid(vmap.to_pixels(v))
    if window == 3:
        signals, (w, h) = image_to_signals(img, vmap)
        full = conv_forward(KernelSpec(np.full((3, 3), 1.0 / 9.0)), signals).values.reshape(h, w)
        means = full[::stride, ::stride]
    else:
        means = pool_values(vmap.to_volts(img.data), window, stride, "avg")
    return ImageGrid(normalize_to_pixels(means, FLAT_RTOL * vmap.v_full))
