"""Command-line front end: ``qbell <subcommand> ...``.

Exit codes: 0 on success, 1 when a computation violates a contract (or the
witness constraints are infeasible), 2 for usage and I/O problems.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import resources

import numpy as np

from . import bell, concentration, experiment, spdc, witness
from ._io import text_sink
from .errors import InfeasibleError, QBellError
from .reference import MEASURED_S11

EXIT_OK = 0
EXIT_CONTRACT = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _output(path):
    return text_sink(sys.stdout if path in (None, "-") else path)


def _write_rows(path, header, rows) -> None:
    with _output(path) as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)


def _write_json(path, obj) -> None:
    with _output(path) as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _emit(writer, path, payload) -> None:
    """Run a library writer against ``path`` or stdout."""
    writer(payload, sys.stdout if path in (None, "-") else path)


def _fixed(x: float, places: int | None = None) -> str:
    return f"{x:.{places}f}" if places is not None else f"{x:.12g}"


def _resolve_seed(seed):
    if seed is not None:
        return seed
    seed = int(np.random.SeedSequence().entropy % (2**63))
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def _check_range(name, value, lo, hi=None):
    if value < lo or (hi is not None and value > hi):
        bound = f">= {lo}" if hi is None else f"in {lo}..{hi}"
        raise UsageError(f"{name} must be {bound}, got {value}")


def cmd_violation_table(args) -> int:
    _check_range("--d-max", args.d_max, 2, bell.MAX_BELL_DIM)
    places = 4 if args.rounded else None
    rows = []
    for d in range(2, args.d_max + 1):
        rows.append((d, _fixed(bell.expectation_max_entangled(d), places), _fixed(bell.max_violation(d)[0], places)))
    _write_rows(args.out, ("d", "violation_max_entangled", "max_eigenvalue"), rows)
    return EXIT_OK


def cmd_operator(args) -> int:
    _check_range("--d", args.d, 2, bell.MAX_BELL_DIM)
    _emit(bell.write_operator_csv, args.out, bell.bell_operator(args.d))
    return EXIT_OK


def cmd_fringe(args) -> int:
    _check_range("--d", args.d, 2, 14)
    _check_range("--points", args.points, 2)
    rows = spdc.fringe_curve(args.d, spdc.fringe_grid(args.d, args.points))
    _emit(spdc.write_fringe_csv, args.out, rows)
    return EXIT_OK


def cmd_sweep(args) -> int:
    _check_range("--d-min", args.d_min, 2, bell.MAX_BELL_DIM)
    _check_range("--d-max", args.d_max, args.d_min, bell.MAX_BELL_DIM)
    seed = _resolve_seed(args.seed)
    rows = experiment.run_sd_sweep(
        gamma=args.gamma,
        d_range=range(args.d_min, args.d_max + 1),
        filtered=args.filtered,
        total_rate=args.rate,
        integration_time=args.time,
        crosstalk_epsilon=args.epsilon,
        seed=seed,
        noiseless=args.noiseless,
    )
    if args.rounded:
        out = [(r.d, _fixed(r.s, 4), _fixed(r.sigma, 4), int(r.filtered), r.gamma, r.seed) for r in rows]
        _write_rows(args.out, ("d", "s", "sigma", "filtered", "gamma", "seed"), out)
    else:
        _emit(experiment.write_sweep_csv, args.out, rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    _check_range("--d", args.d, 2, bell.MAX_BELL_DIM)
    seed = _resolve_seed(args.seed)
    state = experiment.sweep_state(args.gamma, args.d, args.filtered)
    plan = experiment.ExperimentPlan(args.d, state, args.rate, args.time, args.epsilon, seed)
    records = experiment.simulate_counts(plan)
    _emit(experiment.write_counts_csv, args.out, records)
    bv = experiment.estimate_s_with_sigma(records)
    print(f"S_{args.d} = {bv.s:.4f} +- {bv.sigma:.4f}", file=sys.stderr)
    return EXIT_OK


def _read_rates(path):
    if path is None:
        text = resources.files("qbell.data").joinpath("synthetic_spectrum.csv").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        try:
            rows.append((float(rec["ell"]), float(rec["rate"]), float(rec.get("sigma") or 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"rate file needs numeric ell and rate columns: {exc}") from exc
    return rows


def cmd_fit(args) -> int:
    fit = spdc.fit_gamma(_read_rates(args.input))
    _write_json(
        args.out,
        {
            "gamma": fit.gamma,
            "amplitude": fit.amplitude,
            "residual": fit.residual,
            "flat": fit.flat,
            "log_domain": fit.log_domain,
        },
    )
    return EXIT_OK


def cmd_filter_design(args) -> int:
    if args.preset:
        f = concentration.preset_filter_d11()
    else:
        _check_range("--d", args.d, 2, 16)
        f = concentration.design_filter(spdc.lorentzian_state(args.gamma, args.d))
    concentration.completeness_certificate(f)
    state = spdc.lorentzian_state(args.gamma, f.d)
    _, p = concentration.apply_filter_pure(state, f)
    obj = f.to_json()
    obj["success_probability"] = p
    _write_json(args.out, obj)
    return EXIT_OK


def _certificate_json(cert) -> dict:
    return {
        "bound": cert.bound,
        "measured": cert.measured,
        "sigma": cert.sigma,
        "separation_sigma": cert.separation,
        "significance": cert.significance,
        "certified": cert.certified,
    }


def cmd_witness(args) -> int:
    if args.constraints is None:
        c = witness.measured_scenario()
    else:
        c = witness.ConstraintSet.load(args.constraints)
    if args.band_multiplier is not None:
        c = c.with_band(args.band_multiplier)
    _check_range("--starts", args.starts, 1)
    seed = _resolve_seed(args.seed)
    try:
        res = witness.maximize_s11(c, starts=args.starts, seed=seed, workers=args.workers)
    except InfeasibleError as exc:
        _write_json(args.out, {"infeasible": True, "worst_residual": exc.worst_residual, "residuals": exc.residuals})
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    obj = res.to_json()
    obj["certificate"] = _certificate_json(witness.certify_dimension(res, args.measured, args.sigma, args.significance))
    _write_json(args.out, obj)
    return EXIT_OK


def cmd_certify(args) -> int:
    if args.result is not None:
        with open(args.result) as fh:
            bound = float(json.load(fh)["best_s"])
    elif args.bound is not None:
        bound = args.bound
    else:
        raise UsageError("give either --bound or --result")
    cert = witness.certify_dimension(bound, args.measured, args.sigma, args.significance)
    _write_json(args.out, _certificate_json(cert))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qbell", description="High-dimensional CGLMP Bell-test toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("-o", "--out", default=None, help="output path (default: stdout)")
        sp.set_defaults(func=func)
        return sp

    sp = add("table-s1", cmd_violation_table, "S_d for the maximally entangled state and the operator maximum")
    sp.add_argument("--d-max", type=int, default=14)
    sp.add_argument("--full", dest="rounded", action="store_false", help="12 significant digits instead of 4 decimals")

    sp = add("operator", cmd_operator, "dense Bell operator as CSV")
    sp.add_argument("--d", type=int, required=True)

    sp = add("fringe", cmd_fringe, "coincidence fringe over two periods")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--points", type=int, default=200)

    def add_source(sp):
        sp.add_argument("--gamma", type=float, default=spdc.REFERENCE_GAMMA)
        sp.add_argument("--filtered", action=argparse.BooleanOptionalAction, default=True)
        sp.add_argument("--epsilon", type=float, default=0.0, help="cross-talk weight")
        sp.add_argument("--rate", type=float, default=1e8 / experiment.DEFAULT_INTEGRATION_TIME)
        sp.add_argument("--time", type=float, default=experiment.DEFAULT_INTEGRATION_TIME)
        sp.add_argument("--seed", type=int, default=None)

    sp = add("sweep", cmd_sweep, "simulated S_d +- sigma versus d")
    add_source(sp)
    sp.add_argument("--d-min", type=int, default=2)
    sp.add_argument("--d-max", type=int, default=14)
    sp.add_argument("--noiseless", action="store_true", help="use exact probabilities instead of counts")
    sp.add_argument("--rounded", action="store_true", help="4-decimal output")

    sp = add("simulate", cmd_simulate, "Poisson coincidence counts for one d")
    add_source(sp)
    sp.add_argument("--d", type=int, required=True)

    sp = add("fit-gamma", cmd_fit, "fit the spiral bandwidth to (ell, rate, sigma) data")
    sp.add_argument("--input", default=None, help="CSV with ell, rate[, sigma] (default: shipped synthetic spectrum)")

    sp = add("filter-design", cmd_filter_design, "Procrustean filter for a Lorentzian spectrum")
    sp.add_argument("--d", type=int, default=11)
    sp.add_argument("--gamma", type=float, default=spdc.REFERENCE_GAMMA)
    sp.add_argument("--preset", action="store_true", help="emit the published d = 11 diagonal instead")

    sp = add("witness", cmd_witness, "bound S_11 over states with at most 10-dimensional entanglement")
    sp.add_argument("--constraints", default=None, help="constraint JSON (default: shipped measured scenario)")
    sp.add_argument("--starts", type=int, default=200)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--band-multiplier", type=float, default=None)
    sp.add_argument("--workers", type=int, default=None, help="process count (default: QBELL_THREADS or 1)")
    sp.add_argument("--measured", type=float, default=MEASURED_S11[0])
    sp.add_argument("--sigma", type=float, default=MEASURED_S11[1])
    sp.add_argument("--significance", type=float, default=3.0)

    sp = add("certify", cmd_certify, "separation of a measured S_11 from a witness bound")
    sp.add_argument("--bound", type=float, default=None)
    sp.add_argument("--result", default=None, help="witness result JSON")
    sp.add_argument("--measured", type=float, default=MEASURED_S11[0])
    sp.add_argument("--sigma", type=float, default=MEASURED_S11[1])
    sp.add_argument("--significance", type=float, default=3.0)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QBellError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
