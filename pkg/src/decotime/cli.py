"""Command-line front end.

Subcommands: ``tau2`` (one decoherence report), ``sweep`` (tau_2 versus N
with the fitted scaling exponent), ``validate`` (oracle-vs-engine
regression suite) and ``modesum`` (individual bath sums).  Every run
writes a manifest next to its outputs; data files are byte-deterministic
for a given config and flags (floats at 17 significant digits).

Exit codes: 0 success, 1 regression failure, 2 usage or config error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ENV_CONFIG_VAR, load_model_file
from .errors import (ConfigError, ModelValidationError, NumericsError,
                     RequiresNormalModesError, StateClassMismatchError)
from .model import validate_model
from .modesums import extract_F, se_cross_sum_scaled, se_diagonal_sum
from .oracle import comparison_report_json, cross_validate, regression_specs
from .states import CavityState, QubitRegisterState
from .tau2 import (assemble_interaction_terms, scaling_sweep,
                   tau2_closed_form, tau2_general)
from .vibrations import normal_modes_for

EXIT_OK = 0
EXIT_REGRESSION = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def _fmt(x):
    return f"{x:.17g}"


def _load(args):
    model = load_model_file(args.config)
    return validate_model(model)


def _write_manifest(args, vm, outputs, started):
    """One manifest per run, next to the first output (or cwd)."""
    digest = hashlib.sha256(vm.model.to_json(indent=None).encode()).hexdigest()
    manifest = {
        "command": " ".join(sys.argv),
        "config": args.config,
        "parameter_hash": digest,
        "outputs": [str(p) for p in outputs],
        "wall_time_s": time.monotonic() - started,
        "library_version": __version__,
    }
    base = Path(outputs[0]) if outputs else Path("decotime-run")
    path = base.with_suffix(base.suffix + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def _resolve_state(tag, n):
    if tag.startswith("file:"):
        return QubitRegisterState.from_amplitude_file(tag[5:], n)
    return QubitRegisterState.structured(tag, n)


def cmd_tau2(args):
    started = time.monotonic()
    vm = _load(args)
    n = vm.n_qubits
    state = _resolve_state(args.state, n)
    if args.case == "general":
        nm = normal_modes_for(vm) if vm.vib.kind != "frozen" else None
        terms = assemble_interaction_terms(vm, nm)
        report = tau2_general(state, CavityState.vacuum(), terms, T=args.temp)
    else:
        report = tau2_closed_form(args.case, state, vm, nm=None, T=args.temp)
    outputs = []
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
        outputs.append(args.out)
    _write_manifest(args, vm, outputs, started)
    tau = "inf" if math.isinf(report.tau2) else _fmt(report.tau2)
    print(f"tau2 = {tau} s")
    return EXIT_OK


def cmd_sweep(args):
    started = time.monotonic()
    vm = _load(args)
    try:
        n_list = [int(float(tok)) for tok in args.n_list.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse --n-list {args.n_list!r}: {exc}") from exc
    result = scaling_sweep(vm, args.state, n_list, T=args.temp)
    outputs = []
    if args.out:
        Path(args.out).write_text(result.to_csv(), encoding="utf-8")
        outputs.append(args.out)
    _write_manifest(args, vm, outputs, started)
    for row in result.rows:
        print(f"N = {row['N']}: tau2 = {_fmt(row['tau2_s'])} s")
    print(f"slope = {result.slope:.6f}")
    return EXIT_OK


def cmd_validate(args):
    started = time.monotonic()
    vm = _load(args) if args.config else None
    results = [cross_validate(spec) for spec in regression_specs(args.suite)]
    outputs = []
    if args.out:
        Path(args.out).write_text(comparison_report_json(results) + "\n", encoding="utf-8")
        outputs.append(args.out)
    if vm is not None:
        _write_manifest(args, vm, outputs, started)
    failed = 0
    for res in results:
        status = "pass" if res.passed else "FAIL"
        failed += 0 if res.passed else 1
        print(f"[{status}] {res.name}: engine {_fmt(res.engine_tau2)} s, "
              f"oracle {_fmt(res.oracle_tau2)} s, deviation {res.deviation:.3e}")
    print(f"{len(results) - failed}/{len(results)} oracle regressions passed")
    return EXIT_OK if failed == 0 else EXIT_REGRESSION


def cmd_modesum(args):
    started = time.monotonic()
    vm = _load(args)
    outputs = []
    if args.which == "diagonal":
        res = se_diagonal_sum(vm, T=args.temp)
        print(f"sum|g_k|^2 coth = {_fmt(res.value)} 1/s^2  "
              f"(method {res.method}, est error {res.est_abs_error:.3e})")
    else:
        dijs = [float(tok) for tok in str(args.dij).split(",") if tok.strip()]
        if not dijs:
            raise ConfigError("--dij must give at least one separation in metres")
        xs = [vm.se_bath.cutoff_omega_c * d / vm.constants.c for d in dijs]
        if args.which == "cross":
            for d, x in zip(dijs, xs):
                res = se_cross_sum_scaled(vm, x, args.cos2theta, T=args.temp)
                print(f"d = {_fmt(d)} m (omega_c tau = {_fmt(x)}): "
                      f"value = {_fmt(res.value)} 1/s^2 (method {res.method}, "
                      f"est error {res.est_abs_error:.3e})")
        else:
            values = [extract_F(vm, x, args.cos2theta, T=args.temp) for x in xs]
            for d, x, val in zip(dijs, xs, values):
                print(f"d = {_fmt(d)} m: F({_fmt(x)}) = {_fmt(val)}")
            if len(xs) >= 2:
                slopes = np.diff(np.log(np.abs(values))) / np.diff(np.log(xs))
                for x0, x1, s in zip(xs[:-1], xs[1:], slopes):
                    print(f"local slope over [{_fmt(x0)}, {_fmt(x1)}]: {s:.4f}")
    _write_manifest(args, vm, outputs, started)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="decotime",
        description="Decoherence timescales of an N-qubit register with "
                    "spontaneous-emission, cavity-decay and vibrational baths.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", default=None,
                       help=f"config file (default: ${ENV_CONFIG_VAR})")
        p.add_argument("--temp", type=float, default=0.0, help="temperature, K")
        p.add_argument("--out", default=None, help="output file path")

    p = sub.add_parser("tau2", help="one decoherence report")
    add_common(p)
    p.add_argument("--state", default="hadamard",
                   help="hadamard | ghz | allzero | w | file:PATH")
    p.add_argument("--case", default="general",
                   choices=["general", "se", "vacuum", "no-se", "hadamard", "ghz"])
    p.set_defaults(func=cmd_tau2)

    p = sub.add_parser("sweep", help="tau2 vs N with fitted scaling exponent")
    add_common(p)
    p.add_argument("--state", default="hadamard", help="hadamard | ghz | no-se")
    p.add_argument("--n-list", required=True,
                   help="comma list of register sizes, e.g. 1e2,1e3,1e4")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="oracle-vs-engine regression suite")
    add_common(p)
    p.add_argument("--suite", default="quick", choices=["quick", "full"])
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("modesum", help="individual bath-mode sums")
    add_common(p)
    p.add_argument("--which", default="diagonal", choices=["diagonal", "cross", "F"])
    p.add_argument("--dij", default="1e-6",
                   help="separation(s) in metres, comma list for a sweep")
    p.add_argument("--cos2theta", type=float, default=1.0,
                   help="cos^2 of the separation/dipole angle")
    p.set_defaults(func=cmd_modesum)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; keep --version/-h at 0
        raise exc
    try:
        return args.func(args)
    except (ConfigError, ModelValidationError, StateClassMismatchError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericsError, RequiresNormalModesError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
