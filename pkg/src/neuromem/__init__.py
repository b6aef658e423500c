"""Memristor device models, CMOS-memristor circuit blocks and small
neuromorphic pipelines built from them."""

__version__ = "0.1.0"

from .errors import ConvergenceError, FormatError, NumericError, OperatingRangeError, RangeError  # noqa: E402,F401
from .formats import ImageGrid, SignalTrace  # noqa: E402,F401
from .device import DeviceParams, MemristorState, WindowSpec, simulate_drive  # noqa: E402,F401
from .blocks import BridgeSynapse, bridge_weight, program_to_weight  # noqa: E402,F401
from .network import AdalineSpec, NetworkSpec, forward  # noqa: E402,F401
from .vision import KernelSpec, PixelVoltageMap, run_kernel  # noqa: E402,F401
