"""Batch driver.

Subcommands: profile, trajectory, evolve, decompose, validate, scan, report.
One JSON configuration file drives everything (schema in docs/); outputs go
to the --out directory.  Exit codes: 0 pass, 2 check failure, 3 input
error, 4 numerical abort.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import load_config, preflight
from .dynamics import SolitonState, integrate_trajectory
from .errors import InputError, NumericalAbort, SolwaveError
from .experiment import emit_report, run_experiment, run_scan, solve_profile_cached
from .grid import set_fft_workers
from .io import (
    ensure_dir,
    monitors_header,
    save_field,
    save_profile,
    trajectory_header,
    write_csv,
    write_json,
)
from .nls import evolve, init_soliton_field
from .params import validate_params

EXIT_OK = 0
EXIT_CHECK_FAILURE = 2
EXIT_INPUT_ERROR = 3
EXIT_NUMERICAL_ABORT = 4


def _add_common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", required=config_required, help="JSON configuration file")
    p.add_argument("--out", default="runs", help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="solwave", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("profile", "solve the radial profile and write it out"),
        ("trajectory", "integrate the effective dynamics"),
        ("evolve", "run the full field evolution with monitors"),
        ("decompose", "full pipeline with per-snapshot decomposition and checks"),
        ("validate", "check the configuration's parameter admissibility"),
        ("scan", "run the pipeline across the epsilon list and fit the scaling law"),
    ):
        _add_common(sub.add_parser(name, help=desc))
    rp = sub.add_parser("report", help="summarize a finished run directory")
    rp.add_argument("--out", required=True, help="run directory to summarize")
    return ap


def _configure(args) -> "ExperimentConfig":
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    set_fft_workers(args.threads)
    return cfg


def cmd_profile(args) -> int:
    cfg = _configure(args)
    prof = solve_profile_cached(cfg)
    ensure_dir(args.out)
    save_profile(prof, os.path.join(args.out, "profile"))
    residual = prof.info.residual if prof.info else float("nan")
    print(f"profile: omega={prof.omega:.12g} rho={prof.rho:.12g} residual={residual:.3e}")
    return EXIT_OK


def cmd_trajectory(args) -> int:
    cfg = _configure(args)
    problems = preflight(cfg)
    if problems:
        raise InputError("; ".join(problems))
    prof = solve_profile_cached(cfg)
    s0 = SolitonState(t=0.0, a=cfg.a0.copy(), xi=cfg.xi0.copy(), theta=cfg.theta0)
    T = cfg.horizon()
    traj = integrate_trajectory(s0, cfg.params, prof, cfg.potential, T=T, dt=cfg.dt,
                                n_quad=cfg.n_quad)
    ensure_dir(args.out)
    abar = np.minimum.accumulate([float(np.linalg.norm(s.a)) for s in traj.states])
    write_csv(
        os.path.join(args.out, "trajectory.csv"),
        trajectory_header(cfg.params.N),
        (
            [s.t, *s.a, *s.xi, s.theta, s.omega_eps, s.vartheta, traj.hamiltonian[i], abar[i]]
            for i, s in enumerate(traj.states)
        ),
    )
    write_json(os.path.join(args.out, "manifest.json"),
               {"config": cfg.to_dict(), "T": T, "dt": cfg.dt, "abar": traj.abar})
    print(f"trajectory: {len(traj.states)} states, abar={traj.abar:.6g}")
    return EXIT_OK


def cmd_evolve(args) -> int:
    cfg = _configure(args)
    problems = preflight(cfg)
    if problems:
        raise InputError("; ".join(problems))
    prof = solve_profile_cached(cfg)
    grid = cfg.grid()
    s0 = SolitonState(t=0.0, a=cfg.a0.copy(), xi=cfg.xi0.copy(), theta=cfg.theta0)
    psi = init_soliton_field(prof, s0, cfg.params, grid)
    res = evolve(psi, cfg.horizon(), cfg.dt, cfg.params, cfg.potential, cfg.nonlinearity,
                 snapshot_every=cfg.snapshot_every, keep_fields=cfg.save_fields)
    ensure_dir(args.out)
    write_csv(os.path.join(args.out, "monitors.csv"), monitors_header(),
              ([m.t, m.charge, m.hamiltonian, m.spectral_tail] for m in res.monitors))
    if cfg.save_fields:
        for i, (t, f) in enumerate(res.snapshots):
            save_field(f, os.path.join(args.out, f"field_{i:06d}"), t,
                       {"eps": cfg.params.eps})
    write_json(os.path.join(args.out, "manifest.json"),
               {"config": cfg.to_dict(), "grid": grid.to_config()})
    print(f"evolve: {len(res.monitors)} monitor rows written")
    return EXIT_OK


def cmd_decompose(args) -> int:
    cfg = _configure(args)
    summary = run_experiment(cfg, args.out)
    print(f"decompose: {summary.n_checks} checks, {summary.n_failed} failed, "
          f"max ||w|| = {summary.max_w:.6g}")
    return EXIT_OK if summary.n_failed == 0 else EXIT_CHECK_FAILURE


def cmd_validate(args) -> int:
    cfg = _configure(args)
    eps_values = cfg.epsilon_list if cfg.epsilon_list else [cfg.params.eps]
    ok = True
    for eps in eps_values:
        rep = validate_params(cfg.params.with_eps(eps))
        flag = "ok" if rep.admissible else "FAIL"
        print(f"eps={eps:g}: delta={rep.delta:.6g} n4={rep.n4_ok} serve3={rep.serve3_ok} "
              f"ranges={rep.ranges_ok} eta={rep.eta_ok} aiuto={rep.aiuto_ok} "
              f"par1={rep.par1_case} -> {flag}")
        for m in rep.messages:
            print(f"  - {m}")
        ok = ok and rep.admissible
    problems = preflight(cfg)
    for m in problems:
        print(f"  - {m}")
    return EXIT_OK if ok and not problems else EXIT_CHECK_FAILURE


def cmd_scan(args) -> int:
    cfg = _configure(args)
    result = run_scan(cfg, args.out, threads=args.threads)
    print(f"scan: slope={result.slope:.4f} ratios={['%.4g' % r for r in result.ratios]} "
          f"-> {'PASS' if result.passed else 'FAIL'}")
    return EXIT_OK if result.passed else EXIT_CHECK_FAILURE


def cmd_report(args) -> int:
    text = emit_report(args.out)
    sys.stdout.write(text)
    return EXIT_CHECK_FAILURE if "-> FAIL" in text else EXIT_OK


_COMMANDS = {
    "profile": cmd_profile,
    "trajectory": cmd_trajectory,
    "evolve": cmd_evolve,
    "decompose": cmd_decompose,
    "validate": cmd_validate,
    "scan": cmd_scan,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_ABORT
    except SolwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
