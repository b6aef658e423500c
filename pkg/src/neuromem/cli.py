"""Command-line front end.

Every command writes its primary artifact to ``--out`` (CSV, PGM or model
text), a ``<out>.meta.json`` run summary next to it, and with ``--plot`` a
``<out>.png`` figure. Exit codes: 0 success, 1 usage error, 2 data or
convergence error.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, blocks, device, network, vision
from .errors import ConvergenceError, FormatError, NumericError, RangeError
from .formats import ImageGrid, fmt_float, read_matrix, read_pgm, read_pwl, write_pgm

PROFILE_ENV = "NEUROMEM_PROFILE"
DEFAULT_PROFILE = "hp-linear"
DATASET_HINT = (
    "download breast-cancer-wisconsin.data from the UCI Machine Learning Repository "
    "(https://archive.ics.uci.edu/dataset/15) and pass its path with --data"
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(sub: argparse.ArgumentParser, out_required: bool = True) -> None:
    sub.add_argument("--profile", help=f"device profile name or file (default: ${PROFILE_ENV} or {DEFAULT_PROFILE})")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--mode", choices=("ideal", "bridge"), default="ideal")
    sub.add_argument("--out", required=out_required, help="output file")
    sub.add_argument("--plot", action="store_true", help="also render <out>.png")


def _profile_name(args) -> str:
    return args.profile or os.environ.get(PROFILE_ENV) or DEFAULT_PROFILE


def _params(args) -> device.DeviceParams:
    return device.load_profile(_profile_name(args))


def _write_text(path, text: str, outputs: list) -> None:
    Path(path).write_text(text)
    outputs.append(str(path))


def _png(args, outputs: list) -> Path | None:
    if not getattr(args, "plot", False):
        return None
    p = Path(str(args.out) + ".png")
    outputs.append(str(p))
    return p


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_device_sweep(args, outputs: list) -> str:
    params = _params(args)
    if args.pwl:
        drive = read_pwl(Path(args.pwl).read_text())
    elif args.waveform == "sine":
        drive = device.sine_drive(args.amplitude, args.frequency, args.duration)
    else:
        count = max(1, int(round(args.duration / args.period)))
        drive = device.pulse_drive(args.amplitude, args.width, args.period, count)
    if not 0.0 <= args.x0 <= 1.0:
        raise UsageError("--x0 is a normalized state in [0, 1]")
    lo, hi = params.bounds
    trace = device.simulate_drive(params, lo + args.x0 * (hi - lo), drive, args.dt)
    _write_text(args.out, trace.to_csv(), outputs)
    png = _png(args, outputs)
    if png:
        from .plotting import plot_sim_trace

        plot_sim_trace(trace, png)
    return f"{len(trace)} samples, final memristance {trace.memristance[-1]:.6g} ohm"


def cmd_bridge(args, outputs: list) -> str:
    params = _params(args)
    syn = blocks.BridgeSynapse.balanced(params, args.amplitude)
    if args.action == "program":
        if args.target is None:
            raise UsageError("bridge program needs --target")
        width = blocks.program_to_weight(syn, args.target, args.amplitude, tol=args.tol)
        target = args.target
    else:
        if args.width is None:
            raise UsageError("bridge read needs --width")
        width, target = args.width, None
    sign = 1.0 if width >= 0 else -1.0
    programmed = blocks.program_bridge(syn, abs(width), sign * abs(args.amplitude))
    weight = blocks.bridge_weight(programmed)
    m = programmed.memristances()
    row = [fmt_float(target) if target is not None else "", fmt_float(width), fmt_float(weight)]
    row += [fmt_float(v) for v in m]
    _write_text(args.out, "target,width,weight,m1,m2,m3,m4\n" + ",".join(row) + "\n", outputs)
    png = _png(args, outputs)
    if png:
        from .plotting import plot_curve

        widths = np.linspace(0.0, max(abs(width), blocks.PROGRAM_DT), 40)
        ws = [blocks.bridge_weight(blocks.program_bridge(syn, w, sign * abs(args.amplitude))) for w in widths]
        plot_curve(widths * 1e3, ws, png, "pulse width (ms)", "weight")
    return f"weight {weight:.6f} after pulse width {width:.6g} s"


def _kernel_from_arg(text: str, realization: str) -> vision.KernelSpec:
    if text in vision.NAMED_KERNELS:
        return vision.NAMED_KERNELS[text].with_realization(realization)
    if Path(text).is_file():
        w = read_matrix(Path(text).read_text())
    else:
        rows = [r for r in text.replace(";", "\n").splitlines() if r.strip()]
        w = read_matrix("\n".join(r.replace(",", " ") for r in rows))
    return vision.KernelSpec(w, realization)


def cmd_kernel(args, outputs: list) -> str:
    img = read_pgm(Path(args.image).read_bytes())
    kernel = _kernel_from_arg(args.kernel, args.mode if args.mode == "ideal" else "bridge")
    out = vision.run_kernel(img, kernel, vision.PixelVoltageMap(args.v_full))
    Path(args.out).write_bytes(write_pgm(out))
    outputs.append(str(args.out))
    png = _png(args, outputs)
    if png:
        from .plotting import plot_images

        plot_images(img, out, png)
    return f"{out.width}x{out.height} image written"


def _load_data(args) -> network.Dataset:
    if not args.data or not Path(args.data).is_file():
        raise FileNotFoundError(f"dataset not found: {args.data!r}; {DATASET_HINT}")
    return network.load_dataset(args.data, seed=args.seed)


def _report(net, data) -> str:
    lines = ["split,n,accuracy,tn,fp,fn,tp"]
    for name in ("train", "validation", "test"):
        x, y = data.subset(name)
        pred = network.forward(net, x)[1]
        tn = int(np.sum((pred == 0) & (y == 0)))
        fp = int(np.sum((pred == 1) & (y == 0)))
        fn = int(np.sum((pred == 0) & (y == 1)))
        tp = int(np.sum((pred == 1) & (y == 1)))
        lines.append(f"{name},{len(y)},{fmt_float(float(np.mean(pred == y)))},{tn},{fp},{fn},{tp}")
    return "\n".join(lines) + "\n"


def cmd_ann(args, outputs: list) -> str:
    data = _load_data(args)
    if args.action == "train":
        net0 = network.init_network(hidden_activation=args.activation, seed=args.seed)
        net, history = network.fit(net0, data, epochs=args.epochs, lr=args.lr, seed=args.seed)
        if args.mode == "bridge":
            net = network.quantize_network(net, _params(args))
        _write_text(args.out, network.dump_model(net), outputs)
        splits = "".join(
            f"{name} " + " ".join(str(int(i)) for i in getattr(data, name)) + "\n"
            for name in ("train", "validation", "test")
        )
        _write_text(str(args.out) + ".splits", splits, outputs)
        png = _png(args, outputs)
        if png:
            from .plotting import plot_history

            plot_history(history, png)
        acc = network.accuracy(net, *data.subset("test"))
        return f"test accuracy {acc:.4f}"
    if not args.model:
        raise UsageError("ann eval needs --model")
    net = network.load_model(args.model)
    if args.mode == "bridge" and net.mode == "float":
        net = network.quantize_network(net, _params(args))
    report = _report(net, data)
    _write_text(args.out, report, outputs)
    return report.rstrip()


def _sweep(block: str, nonideal: bool):
    if block == "relu":
        x = np.linspace(-1e-3, 1e-3, 201)
        return x, blocks.relu(x), "input current (A)", "output current (A)"
    if block == "tanh":
        x = np.linspace(1e-5, 2e-3, 200)
        m, c = blocks.calibrate_tanh(1e-4)
        mode = blocks.NONIDEAL if nonideal else blocks.IDEAL
        y = []
        for v in x:
            try:
                y.append(blocks.tanh_block(v, m, c, mode, structural=True))
            except RangeError:
                y.append(np.nan)
        return x, np.array(y), "input current (A)", "output current (A)"
    x = np.linspace(0.0, 2.0, 201)
    y = np.array([blocks.max_pool_block([v, 0.7, 0.7, 0.7], 0.7) for v in x])
    return x, y, "swept input (V)", "output (V)"


def cmd_activation(args, outputs: list) -> str:
    x, y, xl, yl = _sweep(args.block, args.nonideal)
    body = "input,output\n" + "".join(f"{fmt_float(a)},{fmt_float(b)}\n" for a, b in zip(x, y))
    _write_text(args.out, body, outputs)
    png = _png(args, outputs)
    if png:
        from .plotting import plot_curve

        plot_curve(x, y, png, xl, yl, args.block)
    return f"{len(x)} points"


def cmd_pool(args, outputs: list) -> str:
    if args.image is None:
        args.block = "maxpool"
        args.nonideal = False
        return cmd_activation(args, outputs)
    img = read_pgm(Path(args.image).read_bytes())
    out = vision.pool_image(img, args.window, args.stride, args.kind, args.threshold, vision.PixelVoltageMap(args.v_full))
    Path(args.out).write_bytes(write_pgm(out))
    outputs.append(str(args.out))
    png = _png(args, outputs)
    if png:
        from .plotting import plot_images

        plot_images(img, out, png)
    return f"{out.width}x{out.height} image written"


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="neuromem", description="Memristor device, analog block and neuromorphic pipeline simulator")
    p.add_argument("--version", action="version", version=f"neuromem {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("device-sweep", help="drive one memristor and dump t,v,i,x,M")
    _common(s)
    s.add_argument("--waveform", choices=("sine", "pulse"), default="sine")
    s.add_argument("--pwl", help="PWL drive file, overrides --waveform")
    s.add_argument("--amplitude", type=float, default=1.0)
    s.add_argument("--frequency", type=float, default=1.0)
    s.add_argument("--duration", type=float, default=1.0)
    s.add_argument("--width", type=float, default=0.01, help="pulse width (s)")
    s.add_argument("--period", type=float, default=0.02, help="pulse period (s)")
    s.add_argument("--x0", type=float, default=0.1, help="initial normalized state")
    s.add_argument("--dt", type=float, default=device.DEFAULT_DT)
    s.set_defaults(func=cmd_device_sweep)

    s = sub.add_parser("bridge", help="program or read a bridge synapse")
    s.add_argument("action", choices=("program", "read"))
    _common(s)
    s.add_argument("--target", type=float)
    s.add_argument("--width", type=float, help="signed pulse width for read (s)")
    s.add_argument("--amplitude", type=float, default=1.0)
    s.add_argument("--tol", type=float, default=0.01)
    s.set_defaults(func=cmd_bridge)

    s = sub.add_parser("kernel", help="apply a 3x3 kernel to a PGM image")
    _common(s)
    s.add_argument("--image", required=True)
    s.add_argument("--kernel", default="blur", help="blur, edge, identity, a 3x3 matrix file or 'a b c; d e f; g h i'")
    s.add_argument("--v-full", type=float, default=1.5)
    s.set_defaults(func=cmd_kernel)

    s = sub.add_parser("ann", help="train or evaluate the 9-2-2 classifier")
    s.add_argument("action", choices=("train", "eval"))
    _common(s)
    s.add_argument("--data", help="breast-cancer-wisconsin.data path")
    s.add_argument("--model", help="model file for eval")
    s.add_argument("--activation", choices=network.ACTIVATIONS, default="relu")
    s.add_argument("--epochs", type=int, default=2000)
    s.add_argument("--lr", type=float, default=0.1)
    s.set_defaults(func=cmd_ann)

    s = sub.add_parser("activation", help="DC sweep of a block to CSV")
    _common(s)
    s.add_argument("--block", choices=("relu", "tanh", "maxpool"), required=True)
    s.add_argument("--nonideal", action="store_true", help="apply squarer/divider operating limits")
    s.set_defaults(func=cmd_activation)

    s = sub.add_parser("pool", help="pool a PGM image, or dump the max-pool DC curve without --image")
    _common(s)
    s.add_argument("--image")
    s.add_argument("--window", type=int, default=2)
    s.add_argument("--stride", type=int, default=2)
    s.add_argument("--kind", choices=("max", "avg"), default="max")
    s.add_argument("--threshold", type=float, help="diode threshold (V) for max pooling")
    s.add_argument("--v-full", type=float, default=1.5)
    s.set_defaults(func=cmd_pool)
    return p


def _versions() -> dict:
    import matplotlib
    import scipy

    return {
        "neuromem": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
    }


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    outputs: list = []
    start = time.perf_counter()
    try:
        summary = args.func(args, outputs)
    except UsageError as e:
        print(f"neuromem: error: {e}", file=sys.stderr)
        return 1
    except (FileNotFoundError, FormatError, RangeError, ConvergenceError, NumericError, ValueError) as e:
        print(f"neuromem: error: {e}", file=sys.stderr)
        return 2
    meta = {
        "argv": ["neuromem", *argv],
        "command": args.command,
        "profile": _profile_name(args),
        "seed": args.seed,
        "mode": args.mode,
        "versions": _versions(),
        "elapsed_s": time.perf_counter() - start,
        "outputs": outputs,
    }
    meta_path = Path(str(args.out) + ".meta.json")
    meta["outputs"].append(str(meta_path))
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    print(summary)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
