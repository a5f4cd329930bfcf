"""Command line: ``modnls {simulate,convergence,genmod,diagnose}``.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure
(blow-up, invalid error records, inconsistent reference).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .config import ConfigError, parse_config
from .experiments import ReferenceError, RunConfig, convergence_sweep, martingale_diagnostic
from .integrators import SCHEMES, BlowUpError, RandomSequence, SchemeSpec, derive_seed, run_trajectory
from .modulation import estimate_w_norm, evaluate, make_path
from .spectral import initial_datum, write_snapshot

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2

log = logging.getLogger("modnls")


def _num(x: float) -> str:
    return f"{x:.17g}"


def _csv_list(text, cast):
    return [cast(v) for v in text.split(",") if v.strip()]


def _write_json(path: Path, record: dict) -> None:
    path.write_text(json.dumps(record, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _manifest(config: RunConfig, command: str, **extra) -> dict:
    out = {"command": command, "config": config.to_dict(), "version": __version__,
           "backend": _kernels.BACKEND}
    out.update(extra)
    return out


def _overrides(args) -> dict:
    over = {}
    for key in ("m", "base_seed", "workers", "refinement", "kind", "alpha", "modulation_seed"):
        if hasattr(args, key):
            over[key] = getattr(args, key)
    if getattr(args, "steps", None):
        over["steps"] = _csv_list(args.steps, int)
    if getattr(args, "schemes", None):
        over["schemes"] = _csv_list(args.schemes, str)
    if getattr(args, "dealias", False):
        over["dealias"] = True
    return over


# -- subcommands -----------------------------------------------------------------

def cmd_simulate(args, config: RunConfig, out: Path) -> int:
    scheme = args.scheme or config.schemes[0]
    N = args.N or max(config.steps)
    g = config.path()
    u0 = initial_datum(config.grid)
    spec = SchemeSpec(scheme, config.dealias)
    seq_seed = derive_seed(config.base_seed, args.sequence) if spec.randomized else None
    xi = RandomSequence(seq_seed) if spec.randomized else None
    started = time.perf_counter()
    try:
        res = run_trajectory(u0, g, spec, config.T, N, xi, record_norms=True)
    except BlowUpError as exc:
        log.error("%s", exc)
        _write_json(out / "manifest.json", _manifest(config, "simulate", failed=str(exc),
                                                     blowup_step=exc.step, partial=True))
        return EXIT_NUMERICAL
    write_snapshot(res.final, out / "final.csv",
                   {"time": config.T, "scheme": scheme, "N": N, "sequence_seed": seq_seed})
    with (out / "norms.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "t", "h0_norm", "h1_norm", "xi"])
        for n, t in enumerate(res.times):
            xi_n = _num(res.xi[n]) if res.xi is not None and n < N else ""
            w.writerow([n, _num(t), _num(res.norms[n, 0]), _num(res.norms[n, 1]), xi_n])
    _write_json(out / "manifest.json", _manifest(
        config, "simulate", scheme=scheme, N=N, sequence=args.sequence, sequence_seed=seq_seed,
        wall_clock_s=time.perf_counter() - started))
    return EXIT_OK


def cmd_convergence(args, config: RunConfig, out: Path) -> int:
    started = time.perf_counter()
    status = EXIT_OK
    try:
        result = convergence_sweep(config)
    except (BlowUpError, ReferenceError) as exc:
        log.error("%s", exc)
        _write_json(out / "manifest.json", _manifest(config, "convergence", failed=str(exc),
                                                     partial=True))
        return EXIT_NUMERICAL
    with (out / "sweep.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "tau", "N", "m", "rms_error", "stddev", "excluded_count"])
        for r in result.records:
            w.writerow([r.scheme, _num(r.tau), r.N, r.m, _num(r.rms), _num(r.stddev), r.excluded])
    with (out / "loglog.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "log_tau", "log_error"])
        for r in result.records:
            if r.valid and r.rms > 0:
                w.writerow([r.scheme, _num(np.log(r.tau)), _num(np.log(r.rms))])
    fits = {s: None if f is None else {"slope": f.slope, "intercept": f.intercept,
                                       "residual": f.residual}
            for s, f in result.fits.items()}
    invalid = [f"{r.scheme}:N={r.N}" for r in result.records if not r.valid]
    if not result.valid:
        status = EXIT_NUMERICAL
    _write_json(out / "manifest.json", _manifest(
        config, "convergence", fits=fits, reference_diagnostics=result.reference_diagnostics,
        invalid_records=invalid, partial=bool(invalid),
        sequence_seeds=[derive_seed(config.base_seed, k) for k in range(config.m)],
        wall_clock_s=time.perf_counter() - started))
    for s, f in fits.items():
        if f is not None:
            print(f"{s}: slope {f['slope']:.3f}")
    return status


def cmd_genmod(args, config: RunConfig, out: Path) -> int:
    g = config.path()
    horizon = g.horizon if np.isfinite(g.horizon) else config.T
    t = np.linspace(0.0, horizon, args.points)
    vals = np.asarray(evaluate(g, t))
    with (out / "modulation.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "g"])
        for ti, gi in zip(t, vals):
            w.writerow([_num(ti), _num(gi)])
    wnorms = {}
    for a in _csv_list(args.w_alphas, float) if args.w_alphas else []:
        wnorms[str(a)] = estimate_w_norm(g, a, args.resolution, horizon=horizon)
    meta = {"modulation": g.describe(), "horizon": horizon, "points": args.points,
            "w_norm_resolution": args.resolution, "w_norms": wnorms, "backend": _kernels.BACKEND}
    _write_json(out / "modulation.json", meta)
    return EXIT_OK


def cmd_diagnose(args, config: RunConfig, out: Path) -> int:
    g = config.path()
    tau = args.tau if args.tau is not None else config.T / args.n_steps
    stats = martingale_diagnostic(g, args.resonance, args.t0, tau, config.m, config.base_seed,
                                  n_steps=args.n_steps, quad_points=args.quad_points)
    with (out / "partial_sums.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["M", "rms_partial_sum"])
        for M, v in zip(stats.steps, stats.partial_rms):
            w.writerow([int(M), _num(v)])
    report = {
        "resonance": stats.resonance, "tau": stats.tau, "m": stats.m,
        "sample_mean": stats.sample_mean, "integral": stats.integral,
        "difference": stats.difference, "stddev": stats.stddev,
        "stddev_real": stats.stddev_real, "stddev_imag": stats.stddev_imag,
        "within_3_sigma": bool(
            abs(stats.difference.real) <= 3 * stats.stddev_real / np.sqrt(stats.m) + 1e-15
            and abs(stats.difference.imag) <= 3 * stats.stddev_imag / np.sqrt(stats.m) + 1e-15),
    }
    if args.n_steps >= 4:
        report["growth_exponent"] = stats.growth_exponent(lo=min(16, args.n_steps // 4))
    _write_json(out / "diagnose.json", _manifest(config, "diagnose", report=report))
    print(json.dumps(report, default=_jsonable))
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "convergence": cmd_convergence,
            "genmod": cmd_genmod, "diagnose": cmd_diagnose}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--output-dir", "-o", default=".", help="directory for outputs")
    common.add_argument("--seed", dest="base_seed", type=int, help="base seed of the xi sequences")
    common.add_argument("--m", type=int, help="number of Monte Carlo sequences")
    common.add_argument("--kind", choices=("affine", "sine", "rough_fourier", "brownian"))
    common.add_argument("--alpha", type=float, help="regularity of a rough modulation")
    common.add_argument("--modulation-seed", type=int, help="seed of the rough/Brownian path")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="modnls", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run one trajectory")
    s.add_argument("--scheme", choices=SCHEMES)
    s.add_argument("--N", type=int, help="number of time steps")
    s.add_argument("--sequence", type=int, default=0, help="index of the xi sequence")
    s.add_argument("--dealias", action="store_true")

    c = sub.add_parser("convergence", parents=[common], help="error sweep over step sizes")
    c.add_argument("--steps", help="comma-separated step counts")
    c.add_argument("--schemes", help="comma-separated scheme names")
    c.add_argument("--refinement", type=int)
    c.add_argument("--dealias", action="store_true")

    gm = sub.add_parser("genmod", parents=[common], help="write a modulation path")
    gm.add_argument("--points", type=int, default=1025, help="output grid size")
    gm.add_argument("--w-alphas", help="comma-separated exponents for W-norm estimates")
    gm.add_argument("--resolution", type=int, default=1000, help="W-norm quadrature resolution")

    d = sub.add_parser("diagnose", parents=[common], help="stratified Monte Carlo diagnostic")
    d.add_argument("--resonance", type=float, default=1.0, help="resonance number K")
    d.add_argument("--t0", type=float, default=0.0)
    d.add_argument("--tau", type=float)
    d.add_argument("--n-steps", type=int, default=1)
    d.add_argument("--quad-points", type=int, default=4096)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = parse_config(args.config, _overrides(args))
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, config, out)
    except ConfigError as exc:
        print(f"modnls: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"modnls: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
