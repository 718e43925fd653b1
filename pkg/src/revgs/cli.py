"""Command-line entry point ``revgs``.

Exit codes: 0 success, 2 invalid input, 3 numerical abort, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .config import ConfigError, RunConfig, ensure_output_dir, initial_state, load_config
from .core import DomainError, detailed_balance_equilibrium, total_mass, trivial_equilibrium
from .envara import dissipation_identity_check, integrate_trajectories, reconstruct_concentrations, variational_derivative_check
from .functionals import global_constant, local_constant, smallness_threshold
from .grid import GridSpec
from .io import CsvDiagnosticsSink, MonitoredSink, format_value, load_snapshot, write_snapshot
from .limits import epsilon_sweep, fit_order, slow_fast_initial, slow_fast_study
from .stepper import NumericalAbort, StepConfig, integrate
from .thermo import entropy_balance_residual

log = logging.getLogger("revgs")

EXIT_OK, EXIT_INVALID, EXIT_ABORT, EXIT_IO = 0, 2, 3, 4


def _global_eq(cfg: RunConfig):
    p = cfg.variant.effective(cfg.effective_params)
    return detailed_balance_equilibrium(p) if p.reversible else None


def _write_table(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(x) for x in row])


def _print_table(header, rows) -> None:
    w = csv.writer(sys.stdout)
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(x) for x in row])


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, args.set)
    out = ensure_output_dir(cfg)
    params = cfg.effective_params
    if args.resume:
        header, state = load_snapshot(args.resume)
        if header.grid.shape != cfg.grid.shape:
            raise ConfigError("resume", f"snapshot grid {header.grid.n} does not match configured grid {cfg.grid.n}")
        clamps = header.clamp_events
    else:
        state, clamps = initial_state(cfg)
    eq = _global_eq(cfg)
    o = cfg.output
    ckpt = out / "checkpoint.bin"

    def on_step(i, s, clamp_count):
        if o.snapshot_every and i % o.snapshot_every == 0:
            write_snapshot(s, cfg.grid, out / f"snap_{i:08d}.bin", clamp_count)
        if o.checkpoint_every and i % o.checkpoint_every == 0:
            write_snapshot(s, cfg.grid, ckpt, clamp_count)

    with CsvDiagnosticsSink(out / o.diagnostics, append=bool(args.resume)) as csv_sink:
        sink = MonitoredSink(csv_sink, cfg.variant.effective(params), eq) if o.monitor else csv_sink
        try:
            res = integrate(
                state, cfg.grid, params, cfg.variant, cfg.step, sink=sink, eq=eq,
                on_step=on_step, clamp_events=clamps, sample_initial=not args.resume,
            )
        finally:
            if o.monitor:
                sink.close()
    write_snapshot(res.state, cfg.grid, out / o.final_snapshot, res.clamp_events)
    m0, m1 = total_mass(state, cfg.grid), total_mass(res.state, cfg.grid)
    print(f"variant={cfg.variant} backend={kernels.backend_name()} t={res.state.time:.6g} "
          f"samples={len(res.records)} clamp_events={res.clamp_events} "
          f"mass_drift={(m1 - m0) / m0:.3e}")
    print(f"diagnostics: {out / o.diagnostics}")
    print(f"final snapshot: {out / o.final_snapshot}")
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    cfg = load_config(args.config, args.set)
    p = cfg.effective_params
    out = {}
    if p.reversible:
        eq = detailed_balance_equilibrium(p)
        u, v, pp, q = eq.as_array()
        out["detailed_balance"] = {
            "u": u, "v": v, "p": pp, "q": q,
            "mass": u + v + pp + q,
            "residual_r0": p.k0p * u - p.k0m * q,
            "residual_r1": p.k1p * u * v * v - p.k1m * v ** 3,
            "residual_r2": p.k2p * v - p.k2m * pp,
            "C_g": global_constant(p, eq),
            "nu": smallness_threshold(p, eq),
        }
    else:
        out["detailed_balance"] = None
    t = trivial_equilibrium(p)
    out["trivial"] = dict(zip("uvpq", map(float, t.as_array())))
    out["C_L"] = local_constant(p)
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_sweep_eps(args) -> int:
    cfg = load_config(args.config, args.set)
    out = ensure_output_dir(cfg)
    eps = [float(e) for e in args.eps.split(",")] if args.eps else cfg.sweep["eps"]
    state, _ = initial_state(cfg)
    res = epsilon_sweep(state, cfg.grid, cfg.effective_params, cfg.step, eps, workers=args.workers or cfg.sweep["workers"])
    header = ("eps", "supL2", "L2tH1", "order_supL2", "order_supL2_lo", "order_supL2_hi",
              "order_L2tH1", "order_L2tH1_lo", "order_L2tH1_hi")
    a, b = res.fit_sup_l2, res.fit_l2t_h1
    rows = [(e, s, l, a.order, a.ci_low, a.ci_high, b.order, b.ci_low, b.ci_high) for e, s, l in res.rows()]
    _write_table(out / "sweep_eps.csv", header, rows)
    _print_table(header, rows)
    return EXIT_OK


def cmd_slow_fast(args) -> int:
    cfg = load_config(args.config, args.set)
    out = ensure_output_dir(cfg)
    lams = [float(x) for x in args.lam.split(",")]
    sf = cfg.slow_fast
    rows = []
    for lam in lams:
        if not lam > 0:
            raise ConfigError("lambda", f"must be > 0, got {lam}")
        init = slow_fast_initial(cfg.grid, lam, sf["feed"], cfg.params.k0p, sf["u0"], sf["v0"],
                                 perturbation=sf["perturbation"], seed=cfg.initial["seed"])
        res = slow_fast_study(cfg.params, cfg.grid, lam, init, cfg.step.t_end, cfg.step.dt,
                              sample_every=cfg.step.sample_every, positivity_floor=cfg.step.positivity_floor)
        rows.append((lam, res.feed, res.q_to_u_ratio, res.closed_form_residual, res.max_uv_deviation))
        _write_table(out / f"slow_fast_lambda_{lam:g}.csv", ("t", "s_full", "s_closed", "uv_deviation"),
                     zip(res.times, res.s_full, res.s_closed, res.uv_deviation))
    header = ("lambda", "feed", "q0_over_u0", "closed_form_residual", "max_uv_deviation")
    _write_table(out / "slow_fast.csv", header, rows)
    _print_table(header, rows)
    return EXIT_OK


def cmd_check_entropy(args) -> int:
    cfg = load_config(args.config, args.set)
    out = ensure_output_dir(cfg)
    params = cfg.variant.effective(cfg.effective_params)
    if not params.reversible:
        raise ConfigError("model.variant", "entropy check needs reversible kinetics")
    rows, hs = [], []
    for level in range(args.levels):
        f = 2 ** level
        grid = GridSpec(cfg.grid.dim, tuple(n * f for n in cfg.grid.n), cfg.grid.length)
        c = cfg.step
        step = StepConfig(c.dt / f, c.t_end, c.scheme, c.diffusion_solver, c.sample_every, c.positivity_floor)
        lcfg = RunConfig(cfg.params, grid, cfg.variant, step, cfg.initial, cfg.output, cfg.sweep,
                         cfg.slow_fast, cfg.lam, cfg.raw)
        state, _ = initial_state(lcfg)
        res = integrate(state, grid, cfg.effective_params, cfg.variant, step)
        bal = entropy_balance_residual(res.records)
        F = np.array([r.F for r in res.records])
        rise = float(np.max(np.diff(F))) if F.size > 1 else 0.0
        rows.append((grid.n[0], step.dt, bal.max_abs, rise, res.clamp_events))
        hs.append(grid.h[0])
    header = ("n", "dt", "max_residual", "max_F_increase", "clamp_events")
    _write_table(out / "entropy_check.csv", header, rows)
    _print_table(header, rows)
    if len(rows) >= 2:
        fit = fit_order(hs, [r[2] for r in rows])
        print(f"fitted order: {fit.order:.3f} (95% interval {fit.ci_low:.3f} .. {fit.ci_high:.3f})")
    return EXIT_OK


def cmd_wellmixed(args) -> int:
    cfg = load_config(args.config, args.set)
    p = cfg.variant.effective(cfg.effective_params)
    state, _ = initial_state(cfg)
    if args.c0:
        c0 = np.array([float(x) for x in args.c0.split(",")])
        if c0.shape != (4,):
            raise ConfigError("c0", "needs four comma-separated values u,v,p,q")
    else:
        c0 = state.fields.mean(axis=tuple(range(1, cfg.grid.dim + 1)))
    traj = integrate_trajectories(c0, p, cfg.step.t_end, cfg.step.dt, cfg.step.sample_every)
    recon = float(np.max(np.abs(traj.c - reconstruct_concentrations(c0, traj.R))))
    mass = traj.c.sum(axis=1)
    report = {
        "c0": c0.tolist(),
        "c_final": traj.c[-1].tolist(),
        "R_final": traj.R[-1].tolist(),
        "reconstruction_error": recon,
        "mass_drift": float(np.max(np.abs(mass - mass[0])) / mass[0]),
    }
    if p.reversible:
        positive = [c for c in traj.c if np.all(c > 0)]
        report["variational_residual_max"] = max(float(variational_derivative_check(c, p).max()) for c in positive)
        report["dissipation_identity_max"] = max(float(dissipation_identity_check(c, p).max()) for c in positive)
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_inspect(args) -> int:
    header, state = load_snapshot(args.snapshot)
    g = header.grid
    info = {
        "version": header.version,
        "dim": g.dim,
        "n": list(g.n),
        "length": list(g.length),
        "time": header.time,
        "clamp_events": header.clamp_events,
        "mass": total_mass(state, g),
        "species": {
            s: {"min": float(f.min()), "max": float(f.max()), "mean": float(f.mean())}
            for s, f in zip("uvpq", state.fields)
        },
    }
    print(json.dumps(info, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="revgs", description="Reversible Gray-Scott simulations and checks.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="YAML run configuration")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config value")
        p.set_defaults(func=func)
        return p

    p = with_config("simulate", cmd_simulate, "run, write diagnostics CSV and snapshots")
    p.add_argument("--resume", metavar="SNAPSHOT", help="continue from a checkpoint snapshot")
    with_config("equilibrium", cmd_equilibrium, "print both equilibria and derived constants")
    p = with_config("sweep-eps", cmd_sweep_eps, "reversible-to-irreversible distance sweep")
    p.add_argument("--eps", help="comma-separated eps values (default: sweep.eps)")
    p.add_argument("--workers", type=int, default=0, help="parallel runs (default: sweep.workers)")
    p = with_config("slow-fast", cmd_slow_fast, "exchange closed form and reduced-model comparison")
    p.add_argument("--lambda", dest="lam", required=True, help="comma-separated exchange rates")
    p = with_config("check-entropy", cmd_check_entropy, "free-energy balance residual under refinement")
    p.add_argument("--levels", type=int, default=1, help="number of (h, dt) halvings (default 1 = no refinement)")
    p = with_config("wellmixed", cmd_wellmixed, "spatially uniform kinetics and structure checks")
    p.add_argument("--c0", help="initial u,v,p,q (default: domain mean of the configured initial state)")
    p = sub.add_parser("inspect", help="print snapshot metadata and field statistics")
    p.add_argument("snapshot")
    p.set_defaults(func=cmd_inspect)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NumericalAbort as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (ConfigError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
