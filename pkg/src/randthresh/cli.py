"""Command-line interface: ``randthresh {test,threshold,simulate,calibrate}``.

Exit codes: 0 success (or null not rejected), 2 usage or data error,
3 global null rejected by ``test``.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, core, simulate
from .distributions import (Constant, Exponential, Gamma, Gaussian,
                            GaussianUnknownVariance, Normal, StandardGaussian,
                            TwoComponentGaussian)
from .exceptions import RandThreshError, UsageError, DataError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_REJECTED = 3


# -- parsing helpers ----------------------------------------------------------------

def parse_null_model(text):
    """``gaussian``, ``gaussian:SIGMA``, ``exponential[:RATE]`` or ``gaussian-unknown``."""
    name, _, arg = text.strip().lower().partition(":")
    try:
        if name in ("gaussian", "normal"):
            return StandardGaussian() if not arg or float(arg) == 1.0 else Gaussian(float(arg))
        if name in ("exponential", "exp"):
            return Exponential(float(arg) if arg else 1.0)
        if name in ("gaussian-unknown", "unknown-sigma") and not arg:
            return GaussianUnknownVariance()
    except ValueError:
        pass
    raise UsageError(f"bad null model {text!r}; use gaussian[:sigma], exponential[:rate] or gaussian-unknown")


def read_scores(path, column=None):
    """Read one score per line (``#`` starts a comment) or a named CSV column."""
    text = Path(path).read_text(encoding="utf-8")
    values = []
    if column is not None:
        reader = csv.DictReader(line for line in text.splitlines() if not line.lstrip().startswith("#"))
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise DataError(f"column {column!r} not found in {path}")
        for lineno, row in enumerate(reader, start=2):
            try:
                values.append(float(row[column]))
            except (TypeError, ValueError):
                raise DataError(f"{path}: row {lineno}: cannot parse {row[column]!r}") from None
    else:
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise DataError(f"{path}: line {lineno}: cannot parse {line!r}") from None
    if not values:
        raise UsageError(f"{path}: no scores found")
    return np.asarray(values)


def _digest(path):
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_manifest(command, params, seeds=(), input_path=None):
    """Everything needed to rerun a command."""
    return {
        "command": command,
        "params": params,
        "seeds": list(seeds),
        "version": __version__,
        "input_digest": _digest(input_path) if input_path else None,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _jsonable(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def _emit(obj, stream):
    stream.write(json.dumps(_jsonable(obj), indent=2) + "\n")


# -- commands ---------------------------------------------------------------------------

def cmd_test(args, out):
    y = read_scores(args.input, args.column)
    model = parse_null_model(args.null)
    critical = None
    if args.calibration:
        table = simulate.CalibrationTable.from_json(Path(args.calibration).read_text(encoding="utf-8"))
        critical = table.lookup(y.size, args.level)
    result = core.null_test(y, model, args.level, critical)
    report = result.to_dict(curves=args.curves)
    report["null_model"] = model.describe()
    report["manifest"] = run_manifest("test", _params(args), input_path=args.input)
    _emit(report, out)
    return EXIT_REJECTED if result.reject else EXIT_OK


def cmd_threshold(args, out):
    y = read_scores(args.input, args.column)
    window = args.window if args.window is not None else y.size // 2
    if args.variant == "fixed":
        result = core.select_fixed_window(y, parse_null_model(args.null), window)
    elif args.variant == "varying":
        result = core.select_varying_window(y, parse_null_model(args.null), window)
    else:
        kw = {"window": window} if args.window_mode == "fixed" else {"kappa": window}
        result = core.select_unknown_theta(y, GaussianUnknownVariance(), **kw)
    report = result.to_dict()
    if args.out:
        Path(args.out).write_text("".join(f"{i}\n" for i in result.selected), encoding="utf-8")
    if args.eta_out:
        with open(args.eta_out, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "eta"] + (["variance"] if result.theta_curve is not None else []))
            for i, e in enumerate(result.eta):
                row = [result.k_start + i, format(e, ".17g")]
                if result.theta_curve is not None:
                    row.append(format(result.theta_curve[i], ".17g"))
                w.writerow(row)
    report["manifest"] = run_manifest("threshold", _params(args), input_path=args.input)
    _emit(report, out)
    return EXIT_OK


_SIGNAL_LAWS = {
    "constant": lambda d: Constant(d["value"]),
    "normal": lambda d: Normal(d["mu"], d["sigma"]),
    "gamma": lambda d: Gamma(d["alpha"], d["beta"]),
    "two-gaussian": lambda d: TwoComponentGaussian(d["mu1"], d["sigma1"], d["mu2"], d["sigma2"], d["weight"]),
}


def parse_method(text):
    """``fixed_rt:K``, ``varying_rt:KAPPA``, ``unknown_fixed_rt:K``,
    ``unknown_varying_rt:KAPPA``, ``bh:Q``, ``gmm`` or ``oracle``."""
    name, _, arg = text.strip().lower().partition(":")
    try:
        if name == "fixed_rt":
            return simulate.FixedRT(int(arg))
        if name == "varying_rt":
            return simulate.VaryingRT(int(arg))
        if name == "unknown_fixed_rt":
            return simulate.UnknownThetaRT(window=int(arg))
        if name == "unknown_varying_rt":
            return simulate.UnknownThetaRT(kappa=int(arg))
        if name == "bh":
            return simulate.BH(float(arg))
        if name == "gmm" and not arg:
            return simulate.GMM()
        if name == "oracle" and not arg:
            return simulate.Oracle()
    except ValueError:
        pass
    raise UsageError(f"bad method {text!r}")


def scenarios_from_spec(spec, replicates, seed):
    """Build scenarios (and optional methods) from a JSON spec document."""
    entries = spec["scenarios"] if "scenarios" in spec else [spec]
    scenarios = []
    try:
        for i, e in enumerate(entries):
            law = dict(e["signal"])
            signal = _SIGNAL_LAWS[law.pop("law")](law)
            scenarios.append(simulate.Scenario(
                e.get("name", f"spec/{i}"), int(e["n"]), int(e["n_signal"]),
                parse_null_model(e.get("null", "gaussian")), signal,
                replicates, seed, int(e.get("n2", 0)), bool(e.get("null_known", True))))
    except (KeyError, TypeError) as exc:
        raise UsageError(f"invalid scenario spec: {exc!r}") from None
    methods = [parse_method(m) for m in spec.get("methods", [])]
    return scenarios, methods


def cmd_simulate(args, out):
    replicates = 100 if args.full else args.replicates
    if args.preset:
        scenarios, methods = simulate.preset(args.preset, replicates, args.seed)
        source = None
    else:
        spec = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        scenarios, methods = scenarios_from_spec(spec, replicates, args.seed)
        source = args.spec
    if args.methods:
        methods = [parse_method(m) for m in args.methods.split(",")]
    if not methods:
        raise UsageError("no methods given")
    tables = [simulate.run_comparison(sc, methods, args.workers) for sc in scenarios]

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_text = tables[0].to_csv() + "".join(t.to_csv().split("\n", 1)[1] for t in tables[1:])
    (outdir / "results.csv").write_text(csv_text, encoding="utf-8")
    rows = [r for t in tables for r in t.rows]
    (outdir / "results.json").write_text(json.dumps(_jsonable({"rows": rows}), indent=2) + "\n",
                                         encoding="utf-8")
    manifest = run_manifest("simulate", _params(args), seeds=[args.seed], input_path=source)
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    _emit({"output": str(outdir), "rows": rows}, out)
    return EXIT_OK


def cmd_calibrate(args, out):
    table = simulate.calibration_table(args.n, args.level, args.replicates, args.seed)
    path = Path(args.output)
    if path.exists():
        table = simulate.CalibrationTable.from_json(path.read_text(encoding="utf-8")).merge(table)
    path.write_text(table.to_json(), encoding="utf-8")
    _emit({"output": str(path), "critical_values": table.entries}, out)
    return EXIT_OK


def _params(args):
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


# -- entry point ------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="randthresh", description="Random-threshold selection of non-null means.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_input(sp):
        sp.add_argument("input", help="one score per line ('#' comments), or CSV with --column")
        sp.add_argument("--column", help="read this named column of a CSV file")
        sp.add_argument("--null", default="gaussian",
                        help="noise law: gaussian[:sigma], exponential[:rate] (default gaussian)")

    sp = sub.add_parser("test", help="test the global null hypothesis")
    add_input(sp)
    sp.add_argument("--level", type=float, default=0.05)
    sp.add_argument("--calibration", help="calibration JSON written by 'calibrate'")
    sp.add_argument("--curves", action="store_true", help="include T and Q curves in the report")
    sp.set_defaults(func=cmd_test)

    sp = sub.add_parser("threshold", help="estimate the number of non-null terms")
    add_input(sp)
    sp.add_argument("--variant", choices=("fixed", "varying", "unknown-sigma"), default="varying")
    sp.add_argument("--window", type=int, help="K_n (fixed) or kappa_n (varying); default n // 2")
    sp.add_argument("--window-mode", choices=("fixed", "varying"), default="varying",
                    help="window used by the unknown-sigma variant")
    sp.add_argument("--out", help="write selected 0-based indices here, one per line")
    sp.add_argument("--eta-out", help="write the eta curve here as CSV")
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("simulate", help="compare methods against the oracle risk")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(simulate.PRESETS))
    src.add_argument("--spec", help="JSON scenario spec file")
    sp.add_argument("--methods", help="comma-separated, e.g. varying_rt:5000,bh:0.1,oracle")
    sp.add_argument("--replicates", type=int, default=20)
    sp.add_argument("--full", action="store_true", help="use 100 replicates")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--output", required=True, help="output directory")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("calibrate", help="Monte Carlo critical values of D_n")
    sp.add_argument("--n", type=int, nargs="+", required=True)
    sp.add_argument("--level", type=float, nargs="+", default=[0.05])
    sp.add_argument("--replicates", type=int, default=5000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--output", required=True, help="calibration JSON (merged if it exists)")
    sp.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (RandThreshError, OSError, json.JSONDecodeError) as exc:
        print(f"randthresh {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
