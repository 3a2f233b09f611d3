"""
Command-line front end.

    qbounds figure1 [--sigma F] [--normalized] [--out PATH]
    qbounds figure2 [--sigma F] [--epsilon F] [--M N] [--out PATH]
    qbounds bound --model FILE --method NAME [--h F] [--s F] [--sweep SPEC]
    qbounds heisenberg --model FILE
    qbounds validate [--seed N]

Exit status: 0 success, 2 validation failure, 3 capability error,
4 IO/config error.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .models import GaussianPrior, GridHybridModel, ModelError, load_model
from .numerics import EmptyScanError
from .phase import (NoDynamicsError, UnsupportedModelError, heisenberg_limit, mmse_gaussian,
                    qcrb_bayes, qwwb_optimized, qwwb_phase, qzzb_gaussian)
from .report import (FIGURE2_NU, INSET_NU, default_energy_grid, figure1_report,
                     figure2_report, fidelity_curves, report_rows, write_csv)
from .validate import run_suites
from .wwcore import (DegenerateTestPointError, SingularAssemblyError, TestPoint,
                     UnsolvableComponentError, assemble, covariance_bound)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CAPABILITY = 3
EXIT_CONFIG = 4

METHODS = ("qwwb", "qzzb", "qcrb", "mmse", "generic-ww")

log = logging.getLogger("qbounds")


class CapabilityError(Exception):
    pass


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _check_grid(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.size == 0 or np.any(np.diff(arr) <= 0):
        raise ConfigError(f"{name} grid must be nonempty and ascending")
    return values


def parse_sweep(spec: str):
    """``name=start:stop:num[:log]`` or ``name=v1,v2,...``."""
    name, sep, body = spec.partition("=")
    if not sep or name not in ("h", "s", "E", "nu"):
        raise ConfigError(f"sweep must look like h=0.01:1:50 (name in h,s,E,nu), got {spec!r}")
    try:
        if ":" in body:
            parts = body.split(":")
            start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
            logscale = len(parts) > 3 and parts[3] == "log"
            vals = np.geomspace(start, stop, num) if logscale else np.linspace(start, stop, num)
        else:
            vals = np.array([float(v) for v in body.split(",")])
    except (ValueError, IndexError):
        raise ConfigError(f"malformed sweep {spec!r}") from None
    if name == "nu":
        vals = np.unique(np.rint(vals).astype(int))
    _check_grid(vals, "sweep")
    return name, vals


@contextlib.contextmanager
def _output(path):
    if path is None or str(path) == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from None
    with fh:
        yield fh


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_figure1(args) -> int:
    energies = _check_grid(args.E or default_energy_grid(args.sigma, args.points), "E")
    s = None if args.s_optimize else 0.5
    rep = figure1_report(args.sigma, energies, args.mean, s, args.jobs)
    cols = ["E", "mmse", "qwwb", "qzzb", "qcrb", "qwwb_h", "qwwb_s"]
    config = {"command": "figure1", "sigma": args.sigma, "mean": args.mean,
              "normalized": args.normalized, "s": "optimized" if s is None else s,
              "h_range": f"(0,{10 * args.sigma}]", "points": len(energies),
              "version": __version__}
    with _output(args.out) as fh:
        write_csv(fh, cols, report_rows(rep, cols, args.normalized), config)
    return EXIT_OK


def cmd_figure2(args) -> int:
    nus = _check_grid(args.nu or list(FIGURE2_NU), "nu")
    s = None if args.s_optimize else 0.5
    rep = figure2_report(args.sigma, args.epsilon, args.M, nus, args.mean, s, args.jobs)
    cols = ["nu", "qwwb", "qzzb", "qcrb", "qwwb_h", "qwwb_s"]
    config = {"command": "figure2", "sigma": args.sigma, "epsilon": args.epsilon, "M": args.M,
              "mean": args.mean, "normalized": args.normalized,
              "s": "optimized" if s is None else s, "h_range": f"(0,{10 * args.sigma}]",
              "version": __version__}
    with _output(args.out) as fh:
        write_csv(fh, cols, report_rows(rep, cols, args.normalized), config)

    fid_path = args.fidelity_out
    if fid_path is None and args.out not in (None, "-"):
        out = Path(args.out)
        fid_path = out.with_name(out.stem + "_fidelity.csv")
    if fid_path is not None:
        h, curves = fidelity_curves(args.epsilon, args.M, INSET_NU)
        fcols = ["h"] + [f"nu={n}" for n in INSET_NU]
        rows = ([hv] + [curves[n][i] for n in INSET_NU] for i, hv in enumerate(h))
        with _output(fid_path) as fh:
            write_csv(fh, fcols, rows, {"command": "figure2-fidelity", "epsilon": args.epsilon,
                                         "M": args.M, "version": __version__})
    return EXIT_OK


def _load(path):
    try:
        return load_model(path)
    except OSError as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from None
    except (json.JSONDecodeError, ModelError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model file {path}: {exc}") from None


def _evaluate(method, model, prior, args):
    """Return a dict of output columns for one evaluation."""
    if method == "qwwb":
        if args.h is not None:
            if len(args.h) != 1:
                raise ConfigError("qwwb takes a single --h")
            return {"h": args.h[0], "s": args.s, "qwwb": qwwb_phase(model, prior, args.s, args.h[0])}
        r = qwwb_optimized(model, prior, s=None if args.s_optimize else args.s)
        return {"h": r.h, "s": r.s, "qwwb": r.value}
    if method == "qzzb":
        if not isinstance(prior, GaussianPrior):
            raise CapabilityError("qzzb requires a Gaussian prior")
        return {"qzzb": qzzb_gaussian(model, prior)}
    if method == "qcrb":
        if not isinstance(prior, GaussianPrior):
            raise CapabilityError("qcrb requires a Gaussian prior")
        return {"qcrb": qcrb_bayes(model, prior)}
    if method == "mmse":
        return {"mmse": mmse_gaussian(model, prior)}
    if method == "generic-ww":
        if not args.h:
            raise ConfigError("generic-ww needs at least one --h")
        gm = GridHybridModel.from_phase_model(model, prior, args.grid_points, args.half_width)
        asm = assemble(gm, [TestPoint(h, args.s) for h in args.h])
        out = {"h": ";".join(format(float(tp.h[0]), ".17g") for tp in asm.testpoints),
               "s": args.s,
               "generic_ww": covariance_bound(asm)[0, 0]}
        out["max_snap_error"] = float(max(abs(e[0]) for e in asm.snap_errors))
        return out
    raise ConfigError(f"unknown method {method!r}")


def cmd_bound(args) -> int:
    spec = _load(args.model)
    model, prior = spec.model, spec.prior
    sweep = parse_sweep(args.sweep) if args.sweep else None
    rows, cols = [], None
    values = sweep[1] if sweep else [None]
    for v in values:
        m, a = model, args
        if sweep is not None:
            name = sweep[0]
            a = argparse.Namespace(**vars(args))
            if name == "h":
                a.h = [float(v)]
            elif name == "s":
                a.s = float(v)
            elif name == "E":
                if model.kind != "qubit":
                    raise ConfigError("an E sweep needs a qubit model")
                m = type(model).qubit(float(v), model.copies)
            elif name == "nu":
                m = model.with_copies(int(v))
        out = _evaluate(args.method, m, prior, a)
        if sweep is not None:
            out = {sweep[0]: v, **{k: val for k, val in out.items() if k != sweep[0]}}
        cols = cols or list(out)
        rows.append([out[c] for c in cols])
    config = {"command": "bound", "model": args.model, "method": args.method,
              "sweep": args.sweep or "", "version": __version__}
    with _output(args.out) as fh:
        write_csv(fh, cols, rows, config)
    return EXIT_OK


def cmd_heisenberg(args) -> int:
    spec = _load(args.model)
    hl = heisenberg_limit(spec.model, spec.prior)
    d = asdict(hl)
    cols = list(d)
    with _output(args.out) as fh:
        write_csv(fh, cols, [[d[c] for c in cols]],
                  {"command": "heisenberg", "model": args.model, "version": __version__})
    return EXIT_OK


def cmd_validate(args) -> int:
    results = run_suites(args.seed, args.trials, args.suite)
    ok = True
    for r in results:
        ok &= r.passed
        print(json.dumps({"suite": r.name, "passed": r.passed, "seconds": round(r.seconds, 3),
                          "details": r.details}, default=float, sort_keys=True))
    print(json.dumps({"summary": "pass" if ok else "fail",
                      "passed": sum(r.passed for r in results), "total": len(results)}))
    return EXIT_OK if ok else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # argparse would exit with 2, which is reserved for validation failures.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qbounds",
                                description="Bayesian quantum estimation error bounds.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f1 = sub.add_parser("figure1", help="qubit benchmark curves versus E")
    f1.add_argument("--sigma", type=float, default=0.1)
    f1.add_argument("--mean", type=float, default=0.0)
    f1.add_argument("--E", type=_float_list, default=None, help="comma-separated E values")
    f1.add_argument("--points", type=int, default=60, help="size of the default E grid")
    f1.add_argument("--normalized", action="store_true", help="divide bounds by sigma^2")
    f1.add_argument("--s-optimize", action="store_true", help="scan s instead of s=1/2")
    f1.add_argument("--jobs", type=int, default=1)
    f1.add_argument("--out", default=None)
    f1.set_defaults(func=cmd_figure1)

    f2 = sub.add_parser("figure2", help="bosonic-probe bounds versus number of probes")
    f2.add_argument("--sigma", type=float, default=0.5)
    f2.add_argument("--mean", type=float, default=0.0)
    f2.add_argument("--epsilon", type=float, default=0.1)
    f2.add_argument("--M", type=int, default=10)
    f2.add_argument("--nu", type=_int_list, default=None, help="comma-separated probe counts")
    f2.add_argument("--normalized", action="store_true")
    f2.add_argument("--s-optimize", action="store_true")
    f2.add_argument("--jobs", type=int, default=1)
    f2.add_argument("--out", default=None)
    f2.add_argument("--fidelity-out", default=None,
                    help="fidelity inset CSV (default: <out>_fidelity.csv)")
    f2.set_defaults(func=cmd_figure2)

    b = sub.add_parser("bound", help="evaluate one bound for a model file")
    b.add_argument("--model", required=True)
    b.add_argument("--method", required=True, choices=METHODS)
    b.add_argument("--h", type=_float_list, default=None,
                   help="test-point displacement(s); comma-separated for generic-ww")
    b.add_argument("--s", type=float, default=0.5)
    b.add_argument("--s-optimize", action="store_true")
    b.add_argument("--sweep", default=None, help="name=start:stop:num[:log] or name=v1,v2")
    b.add_argument("--grid-points", type=int, default=2001)
    b.add_argument("--half-width", type=float, default=20.0,
                   help="generic-ww grid half width in prior sigmas")
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bound)

    hz = sub.add_parser("heisenberg", help="Heisenberg-limit constants for a model file")
    hz.add_argument("--model", required=True)
    hz.add_argument("--out", default=None)
    hz.set_defaults(func=cmd_heisenberg)

    v = sub.add_parser("validate", help="run the self-check suites")
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--trials", type=int, default=100_000)
    v.add_argument("--suite", action="append", default=None, help="run only this suite")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"qbounds: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapabilityError, UnsupportedModelError, NoDynamicsError) as exc:
        print(f"qbounds: capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (DegenerateTestPointError, SingularAssemblyError, UnsolvableComponentError,
            EmptyScanError, ModelError, ValueError) as exc:
        print(f"qbounds: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
