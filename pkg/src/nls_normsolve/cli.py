"""Command-line driver: batch tasks, reproducible seeds, structured output.

Exit codes: 0 success, 1 malformed configuration, 2 solver non-convergence,
3 hypothesis-regime rejection.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import recordio
from .descent import ConvergenceError, SolverOptions, local_minimize, subadditivity_check
from .dynamics import BlowUpError, evolve, orbital_distance, perturbed_state, standing_wave
from .fibering import fibering_curve
from .functional import StatePair
from .minimax import linking_solve, mountain_pass
from .params import GNData, Params, RegimeError, classify_regime, compute_thresholds, conservative_gn_bound
from .recordio import ConfigError
from .scalar import GroundStateError, ground_state, sharp_gn_constant


def gn_data_for(params: Params, fallback: bool = False) -> GNData:
    """Interpolation constants for the threshold computation.

    Sharp constants come from the scalar ground states; the conservative
    closed-form bounds are available when solving is not wanted.  The cross
    constant is the one at exponent r1 + r2 (the Hoelder split is fixed so
    both mixed norms collapse there).
    """
    s = params.r1 + params.r2
    if fallback:
        return GNData(
            C_p1=conservative_gn_bound(params.N, params.p1),
            C_p2=conservative_gn_bound(params.N, params.p2),
            C_cross=conservative_gn_bound(params.N, s),
            source="conservative-bound",
        )
    return GNData(
        C_p1=sharp_gn_constant(params.N, params.p1),
        C_p2=sharp_gn_constant(params.N, params.p2),
        C_cross=sharp_gn_constant(params.N, s),
        source="ground-state",
    )


def _solver_options(args) -> SolverOptions:
    opts = SolverOptions()
    if getattr(args, "grid_n", None):
        opts.grid_n = args.grid_n
    if getattr(args, "rmax", None):
        opts.r_max = args.rmax
    if getattr(args, "tol", None):
        opts.tol = args.tol
    if getattr(args, "seed", None) is not None:
        opts.seed = args.seed
    return opts


def _load(args) -> tuple[Params, dict]:
    return recordio.load_params(Path(args.config))


def _outdir(args) -> Path:
    out = Path(getattr(args, "out", None) or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_constants(args) -> int:
    params, _ = _load(args)
    gn = gn_data_for(params, fallback=args.gn_fallback)
    consts = compute_thresholds(params, gn)
    doc = recordio.constants_dict(consts)
    doc["params"] = recordio.params_dict(params)
    doc["gn"]["source"] = gn.source
    out = _outdir(args)
    recordio.write_json(out / "constants.json", doc)
    print(recordio.dumps(doc))
    return 0


def cmd_scalar_ground(args) -> int:
    gs = ground_state(args.N, args.p)
    doc = {
        "N": gs.N,
        "p": gs.p,
        "C0": gs.C0,
        "C1": gs.C1,
        "mass": gs.M0,
        "gn_constant": sharp_gn_constant(args.N, args.p),
        "residual": gs.residual,
    }
    out = _outdir(args)
    recordio.write_profile(out / f"ground_N{args.N}_p{args.p:g}.prof", gs.w0)
    recordio.write_json(out / f"ground_N{args.N}_p{args.p:g}.json", doc)
    print(recordio.dumps(doc))
    return 0


def cmd_solve_local(args) -> int:
    params, _ = _load(args)
    gn = gn_data_for(params, fallback=args.gn_fallback)
    consts = compute_thresholds(params, gn)
    rec = local_minimize(params, consts, options=_solver_options(args))
    path = recordio.save_record(rec, _outdir(args), "local")
    print(f"wrote {path}: energy {rec.energy:.10g}, multipliers "
          f"({rec.lambda1:.6g}, {rec.lambda2:.6g})")
    return 0


def cmd_solve_mp(args) -> int:
    params, _ = _load(args)
    gn = gn_data_for(params, fallback=args.gn_fallback)
    consts = compute_thresholds(params, gn)
    opts = _solver_options(args)
    if args.local:
        local = recordio.load_record(Path(args.local))
    else:
        local = local_minimize(params, consts, options=opts)
        recordio.save_record(local, _outdir(args), "local")
    rec = mountain_pass(params, consts, local, options=opts)
    path = recordio.save_record(rec, _outdir(args), "mountain_pass")
    print(f"wrote {path}: energy {rec.energy:.10g} (local minimum {local.energy:.10g})")
    return 0


def cmd_solve_link(args) -> int:
    params, _ = _load(args)
    gn = gn_data_for(params, fallback=args.gn_fallback)
    consts = compute_thresholds(params, gn)
    rec = linking_solve(params, consts, options=_solver_options(args))
    path = recordio.save_record(rec, _outdir(args), "linking")
    print(f"wrote {path}: energy {rec.energy:.10g}, bracket "
          f"{rec.diagnostics['level_bracket']}")
    return 0


def cmd_landscape(args) -> int:
    params, _ = _load(args)
    out = _outdir(args)
    if args.state:
        rec = recordio.load_record(Path(args.state))
        state = rec.state
    else:
        from .descent import initial_ball_state

        gn = gn_data_for(params, fallback=args.gn_fallback)
        consts = compute_thresholds(params, gn)
        state = initial_ball_state(params, consts, _solver_options(args))
    curve = fibering_curve(state, params)
    recordio.write_csv(out / "landscape.csv", ["t", "theta"], curve.samples)
    doc = {
        "coefficients": {
            "kinetic": curve.coeff_a,
            "b1": curve.coeff_b1,
            "b2": curve.coeff_b2,
            "c": curve.coeff_c,
        },
        "exponents": {"p1_tilde": curve.exp_p1, "p2_tilde": curve.exp_p2, "r_tilde": curve.exp_r},
        "stationary_points": [{"t": t, "type": k} for t, k in curve.stationary_points],
    }
    recordio.write_json(out / "landscape.json", doc)
    print(recordio.dumps(doc))
    return 0


def cmd_subadd_check(args) -> int:
    params, _ = _load(args)
    gn = gn_data_for(params, fallback=args.gn_fallback)
    consts = compute_thresholds(params, gn)
    rep = subadditivity_check(params, consts, args.d1, args.d2, options=_solver_options(args))
    recordio.write_json(_outdir(args) / "subadd.json", rep)
    print(recordio.dumps(rep))
    return 0 if rep["holds"] else 2


def cmd_evolve(args) -> int:
    rec = recordio.load_record(Path(args.solution))
    params = rec.params_snapshot
    state = standing_wave(rec) if not args.perturb else perturbed_state(rec, args.perturb, seed=args.seed or 0)
    stride = max(1, int(round(args.T / args.dt)) // max(args.snapshots, 2))
    traj = evolve(state, params, T=args.T, dt=args.dt, snapshot_stride=stride)
    dists = {t: orbital_distance(s, rec) for t, s in zip(traj.snapshot_times, traj.states)}
    out = _outdir(args)
    recordio.write_csv(out / "evolution.csv", ["t", "mass1", "mass2", "energy"], traj.invariants_log)
    recordio.write_csv(
        out / "orbital_distance.csv",
        ["t", "distance"],
        [(t, d) for t, d in dists.items()],
    )
    print(f"final orbital distance {list(dists.values())[-1]:.6g} "
          f"(initial {list(dists.values())[0]:.6g})")
    return 0


def cmd_property_suite(args) -> int:
    from .properties import run_suite

    report = run_suite(scale=args.scale, seed=args.seed or 0)
    recordio.write_json(_outdir(args) / "properties.json", report)
    for r in report["results"]:
        status = "pass" if r["passed"] else "FAIL"
        print(f"[{status}] {r['name']} (margin {r['margin']:.3g})")
    return 0 if report["passed"] else 2


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nls-normsolve",
        description="Normalized two-component Schrodinger solver: local minimizer, "
        "mountain-pass and linking critical points, rearrangement and stability probes.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="flat key=value parameter file")
        p.add_argument("--grid-n", type=int, dest="grid_n")
        p.add_argument("--rmax", type=float)
        p.add_argument("--tol", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=str, default="out")
        p.add_argument("--gn-fallback", action="store_true",
                       help="use conservative closed-form interpolation bounds")

    p = sub.add_parser("constants", help="thresholds rho0/beta0 and the K constants")
    common(p)
    p.set_defaults(fn=cmd_constants)

    p = sub.add_parser("scalar-ground", help="scalar ground state and its constants")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--out", type=str, default="out")
    p.set_defaults(fn=cmd_scalar_ground)

    p = sub.add_parser("solve-local", help="local minimizer inside the gradient ball")
    common(p)
    p.set_defaults(fn=cmd_solve_local)

    p = sub.add_parser("solve-mp", help="mountain-pass critical point (regime H0)")
    common(p)
    p.add_argument("--local", type=str, help="existing local-minimizer record")
    p.set_defaults(fn=cmd_solve_mp)

    p = sub.add_parser("solve-link", help="linking critical point (regime H1)")
    common(p)
    p.set_defaults(fn=cmd_solve_link)

    p = sub.add_parser("landscape", help="fibering curve samples to CSV")
    common(p)
    p.add_argument("--state", type=str, help="solution record to analyse")
    p.set_defaults(fn=cmd_landscape)

    p = sub.add_parser("subadd-check", help="sub-additivity of the local minimum")
    common(p)
    p.add_argument("--d1", type=float, required=True)
    p.add_argument("--d2", type=float, required=True)
    p.set_defaults(fn=cmd_subadd_check)

    p = sub.add_parser("evolve", help="time evolution of a solution record")
    p.add_argument("--solution", type=str, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--perturb", type=float, default=0.0)
    p.add_argument("--snapshots", type=int, default=50)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=str, default="out")
    p.set_defaults(fn=cmd_evolve)

    p = sub.add_parser("property-suite", help="run every module invariant")
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=str, default="out")
    p.set_defaults(fn=cmd_property_suite)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except RegimeError as exc:
        print(f"regime rejection: {exc}", file=sys.stderr)
        return 3
    except (ConvergenceError, GroundStateError, BlowUpError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
