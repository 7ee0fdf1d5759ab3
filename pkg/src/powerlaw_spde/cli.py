"""Command-line entry point: simulate, ensemble, verify, pressure, report."""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, pressure as pressure_mod, verify
from .config import ConfigError, SimulationConfig
from .galerkin import IntegratorError, run_trajectory

FLOAT_FMT = "%.17g"


def _load_config(args) -> SimulationConfig:
    if args.config:
        cfg = SimulationConfig.load(args.config)
    else:
        cfg = SimulationConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _thread_count() -> int:
    raw = os.environ.get("POWERLAW_SPDE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                FLOAT_FMT % v if isinstance(v, float) else str(v) for v in row
            ) + "\n")


def _run_single(cfg: SimulationConfig, seed: int):
    params = cfg.build_params()
    space = cfg.build_space()
    model = cfg.build_noise()
    forcing = cfg.build_forcing(space)
    v0 = cfg.build_initial(space)
    return run_trajectory(params, space, model, forcing, v0,
                          cfg.build_step_config(), cfg.n_steps, seed=seed), space


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        traj, _ = _run_single(cfg, cfg.seed)
    except IntegratorError as exc:
        print(f"integrator failure: {exc}", file=sys.stderr)
        return 1

    energy = traj.energy()
    rows = [(float(traj.times[0]), float(energy[0]), 0.0, 0.0, 0.0)]
    for n in range(traj.n_steps):
        rows.append((
            float(traj.times[n + 1]),
            float(energy[n + 1]),
            float(traj.dt * traj.grad_lp[n]),
            float(traj.dt * traj.stab_int[n]),
            float(traj.qv[n]),
        ))
    _write_csv(out / "trajectory.csv",
               ["t", "energy", "grad_lp_increment", "stab_increment", "noise_qv"],
               rows)
    with open(out / "coefficients.json", "w") as fh:
        json.dump({
            "config": cfg.to_dict(),
            "times": [float(t) for t in traj.times],
            "coeffs": [[float(c) for c in row] for row in traj.coeffs],
        }, fh)
        fh.write("\n")
    cfg.dump(out / "config.json")
    return 0


def cmd_ensemble(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = cfg.build_params()
    space = cfg.build_space()
    model = cfg.build_noise()
    forcing = cfg.build_forcing(space)
    v0 = cfg.build_initial(space)
    step_cfg = cfg.build_step_config()

    if args.alpha_grid:
        alphas = [float(a) for a in args.alpha_grid.split(",")]
        rows = analysis.alpha_independence_study(
            lambda a: cfg.build_params(alpha=a), space, model, forcing, v0,
            step_cfg, cfg.n_steps, cfg.seed, cfg.n_traj, alphas)
        _write_csv(out / "alpha_study.csv", ["alpha", "ratio", "mean_total", "se_total"],
                   [(r["alpha"], r["ratio"], r["mean_total"], r["se_total"]) for r in rows])
        with open(out / "alpha_study.json", "w") as fh:
            json.dump(rows, fh, indent=2)
            fh.write("\n")
        return 0

    if args.m_grid:
        m_grid = [float(m) for m in args.m_grid.split(",")]
        rows = analysis.stabilization_convergence(
            lambda m: cfg.build_params(alpha=1.0 / m), space, model, forcing, v0,
            step_cfg, cfg.n_steps, cfg.seed, cfg.n_traj, m_grid)
        with open(out / "m_study.json", "w") as fh:
            json.dump([{"m_pair": list(r["m_pair"]), "mean_sq_diff": r["mean_sq_diff"]}
                       for r in rows], fh, indent=2)
            fh.write("\n")
        return 0

    if cfg.n_traj < 2:
        print("ensemble requires n_traj >= 2", file=sys.stderr)
        return 2

    seeds = [cfg.seed + i for i in range(cfg.n_traj)]
    workers = _thread_count()
    failures = []

    def one(seed):
        try:
            return run_trajectory(params, space, model, forcing, v0,
                                  step_cfg, cfg.n_steps, seed=seed)
        except IntegratorError as exc:
            failures.append((seed, str(exc)))
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trajs = list(pool.map(one, seeds))
    else:
        trajs = [one(s) for s in seeds]
    good = [t for t in trajs if t is not None]
    if len(good) < 2:
        print("too many trajectory failures", file=sys.stderr)
        return 1

    report = analysis.report_from_trajectories(good, beta=cfg.beta)
    summary = report.as_dict()
    if failures:
        summary["failed_trajectories"] = [{"seed": s, "error": e} for s, e in failures]
        summary["partial"] = True
    with open(out / "ensemble.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    _write_csv(out / "ensemble.csv",
               ["trajectory", "sup_l2_sq", "grad_lp", "stab_lq", "interp_lr0", "total"],
               [(i, float(report.sup_l2_sq[i]), float(report.grad_lp[i]),
                 float(report.stab_lq[i]), float(report.interp_lr0[i]),
                 float(report.total[i])) for i in range(len(good))])
    return 0


def cmd_verify(args) -> int:
    try:
        report = verify.run_suite(args.suite)
    except KeyError:
        print(f"unknown suite {args.suite!r}; choose from {verify.SUITES}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        with open(Path(args.out) / f"verify_{args.suite}.json", "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if report["passed"] else 1


def cmd_pressure(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = cfg.build_params()
    space = cfg.build_space()
    model = cfg.build_noise()
    forcing = cfg.build_forcing(space)
    v0 = cfg.build_initial(space)
    trajs = analysis.run_ensemble(params, space, model, forcing, v0,
                                  cfg.build_step_config(), cfg.n_steps,
                                  cfg.seed, cfg.n_traj)
    report = pressure_mod.estimate_check(space, params, model, forcing, trajs)
    dec = pressure_mod.decompose(space, params, model, forcing, trajs[0])
    report["max_abs_mean"] = max(
        float(np.max(np.abs(np.mean(dec.pi_H_series, axis=1)))) if dec.pi_H_series.size else 0.0,
        float(np.max(np.abs(np.mean(dec.pi_Phi_series, axis=1)))),
    )
    with open(out / "pressure.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(json.dumps(report, indent=2))
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    found = sorted(out.glob("*.json"))
    if not found:
        print(f"no reports under {out}", file=sys.stderr)
        return 1
    for path in found:
        with open(path) as fh:
            data = json.load(fh)
        status = ""
        if isinstance(data, dict) and "passed" in data:
            status = "PASS" if data["passed"] else "FAIL"
        print(f"{path.name}: {status}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="powerlaw-spde",
        description="Spectral Galerkin simulation and verification for "
                    "stochastic power-law fluids on the torus",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one trajectory and write CSV/JSON")
    sim.add_argument("--config", type=str, default=None)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", type=str, required=True)
    sim.set_defaults(func=cmd_simulate)

    ens = sub.add_parser("ensemble", help="run an ensemble and emit moment reports")
    ens.add_argument("--config", type=str, default=None)
    ens.add_argument("--seed", type=int, default=None)
    ens.add_argument("--out", type=str, required=True)
    ens.add_argument("--alpha-grid", type=str, default=None)
    ens.add_argument("--m-grid", type=str, default=None)
    ens.set_defaults(func=cmd_ensemble)

    ver = sub.add_parser("verify", help="run a property suite")
    ver.add_argument("--suite", type=str, required=True)
    ver.add_argument("--out", type=str, default=None)
    ver.set_defaults(func=cmd_verify)

    pre = sub.add_parser("pressure", help="pressure decomposition diagnostics")
    pre.add_argument("--config", type=str, default=None)
    pre.add_argument("--seed", type=int, default=None)
    pre.add_argument("--out", type=str, required=True)
    pre.set_defaults(func=cmd_pressure)

    rep = sub.add_parser("report", help="summarize report files in a directory")
    rep.add_argument("--out", type=str, required=True)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
