"""Command-line entry points.

Subcommands: kernel-table, solve-pde, simulate, estimate, converge,
uniform-time, selftest.  Exit codes: 0 pass, 1 criterion failure, 2
configuration error.
"""

import argparse
import json
import os
import sys

import numpy as np

from .errors import ConfigError, VortexLabError
from .harness import (
    SweepConfig,
    child_seed,
    run_convergence_study,
    run_selftest,
    run_uniformity_study,
    write_report_csv,
    _estimate_rows,
)


def _fmt(x):
    return f"{x:.10g}"


def cmd_kernel_table(args):
    from . import kernels
    from .torus import grid_mesh

    n = args.grid_n
    if args.variant == "mollified":
        spec = kernels.mollify_kernel(
            kernels.KernelSpec("periodized", lattice_radius=args.lattice_radius),
            args.epsilon, n,
        )
        t1, t2 = spec.tables
    elif args.variant == "spectral":
        t1, t2 = kernels.spectral_kernel_table(n)
    elif args.variant == "periodized":
        x1, x2 = grid_mesh(n)
        pts = np.stack([x1.ravel(), x2.ravel()], axis=-1)
        # the grid origin is a singular point of the raw kernel; report 0
        # there by the zero-at-zero convention
        vals = np.zeros_like(pts)
        mask = ~np.all(pts == 0.0, axis=-1)
        vals[mask] = kernels.eval_periodized_kernel(pts[mask], args.lattice_radius)
        t1 = vals[:, 0].reshape(n, n)
        t2 = vals[:, 1].reshape(n, n)
    else:
        raise ConfigError(f"unknown variant {args.variant!r}")
    x1, x2 = grid_mesh(n)
    lines = ["x1,x2,k1,k2"]
    for i in range(n):
        for j in range(n):
            lines.append(
                ",".join(_fmt(v) for v in (x1[i, j], x2[i, j], t1[i, j], t2[i, j]))
            )
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w") as f:
        f.write("\n".join(lines) + "\n")
    return 0


def cmd_solve_pde(args):
    from .meanfield import InitialDensity, initial_density, solve_meanfield
    from .torus import grid_mesh

    rho0 = initial_density(args.rho0)
    if args.lam is not None:
        rho0 = InitialDensity(rho0.form, rho0.amplitude, args.lam)
    times = np.round(np.arange(0.0, args.T + 1e-9, args.report_every), 9)
    out = solve_meanfield(rho0, args.T, args.dt, args.n, times, max_order=2)
    os.makedirs(args.out, exist_ok=True)
    x1, x2 = grid_mesh(args.n)
    norm_lines = ["t,l2,grad_l2,sup,inf,d1_sup,d2_sup,int_d1,int_d2"]
    for rho, rep in out:
        lines = ["x1,x2,rho"]
        for i in range(args.n):
            for j in range(args.n):
                lines.append(",".join(_fmt(v) for v in (x1[i, j], x2[i, j], rho.values[i, j])))
        with open(os.path.join(args.out, f"field_t{rep.t:g}.csv"), "w") as f:
            f.write("\n".join(lines) + "\n")
        np.save(os.path.join(args.out, f"field_t{rep.t:g}.npy"), rho.values)
        norm_lines.append(",".join(_fmt(v) for v in (
            rep.t, rep.l2_norm, rep.grad_l2, rep.sup_norm, rep.inf_value,
            rep.derivative_sup[1], rep.derivative_sup[2],
            rep.int_derivative_sup[1], rep.int_derivative_sup[2],
        )))
    with open(os.path.join(args.out, "norms.csv"), "w") as f:
        f.write("\n".join(norm_lines) + "\n")
    with open(os.path.join(args.out, "meta.json"), "w") as f:
        json.dump({"rho0": args.rho0, "lambda": rho0.lambda_bound, "T": args.T,
                   "dt": args.dt, "n": args.n, "times": [float(t) for t in times]},
                  f, indent=2, sort_keys=True)
    return 0


def _parse_kernel(text):
    if text.startswith("mollified:"):
        return "mollified", float(text.split(":", 1)[1])
    if text in ("raw", "zero", "mollified", "spectral", "flipped"):
        return text, 0.01
    raise ConfigError(f"unknown kernel {text!r}")


def cmd_simulate(args):
    from .meanfield import initial_density
    from .particles import make_sim_kernel, simulate

    name, eps = _parse_kernel(args.kernel)
    kernel = make_sim_kernel(name, eps)
    rho0 = initial_density(args.rho0)
    times = [float(t) for t in args.snap_times.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else [
        child_seed(args.master_seed, "sim", args.N, r) for r in range(args.replicas)
    ]
    os.makedirs(args.out, exist_ok=True)
    all_snaps = [simulate(rho0, args.N, args.T, args.dt, kernel, s, times) for s in seeds]
    for ti, t in enumerate(times):
        lines = ["replica,particle,x1,x2"]
        for r, snaps in enumerate(all_snaps):
            for p in range(args.N):
                lines.append(",".join(
                    [str(r), str(p), _fmt(snaps[ti, p, 0]), _fmt(snaps[ti, p, 1])]
                ))
        with open(os.path.join(args.out, f"snapshots_t{t:g}.csv"), "w") as f:
            f.write("\n".join(lines) + "\n")
    with open(os.path.join(args.out, "meta.json"), "w") as f:
        json.dump({"N": args.N, "T": args.T, "dt": args.dt, "kernel": args.kernel,
                   "rho0": args.rho0, "replicas": len(seeds), "seeds": seeds,
                   "snap_times": times}, f, indent=2, sort_keys=True)
    return 0


def cmd_estimate(args):
    from .meanfield import GridField

    with open(os.path.join(args.snapshots, "meta.json")) as f:
        meta = json.load(f)
    with open(os.path.join(args.pde, "meta.json")) as f:
        pmeta = json.load(f)
    times = meta["snap_times"]
    n_reps = meta["replicas"]
    N = meta["N"]
    k_orders = tuple(int(k) for k in args.k.split(","))
    cfg = SweepConfig(
        N_list=[N], times=times, replicas=max(n_reps, 8), k_orders=k_orders,
        w2_method=args.w2, rho0=meta.get("rho0", "default"),
    )
    cfg.replicas = n_reps
    rows = []
    for ti, t in enumerate(times):
        if t not in [float(x) for x in pmeta["times"]]:
            raise ConfigError(f"PDE output lacks t = {t}")
        rho = GridField(np.load(os.path.join(args.pde, f"field_t{t:g}.npy")), t)
        import csv

        by_rep = {r: np.empty((len(times), N, 2)) for r in range(n_reps)}
        with open(os.path.join(args.snapshots, f"snapshots_t{t:g}.csv")) as f:
            rd = csv.DictReader(f)
            for row in rd:
                by_rep[int(row["replica"])][ti, int(row["particle"])] = (
                    float(row["x1"]), float(row["x2"]),
                )
        # the standalone estimator has no stored twin trajectory; use a
        # fresh iid sample of the PDE density as the decoupled reference
        from .particles import _philox
        from .inequalities import _sample_density

        twins = {}
        for r in range(n_reps):
            rng = _philox(child_seed(cfg.master_seed, "est-twin", N, r, ti), 23)
            tw = np.empty((len(times), N, 2))
            tw[ti] = _sample_density(rho, N, rng)
            twins[r] = tw
        rows.extend(_estimate_rows(cfg, N, ti, t, rho, by_rep, twins))
    if args.out.endswith(".csv"):
        write_report_csv(args.out, rows)
    else:
        os.makedirs(args.out, exist_ok=True)
        write_report_csv(os.path.join(args.out, "report.csv"), rows)
    return 0


def _study(args, runner):
    cfg = SweepConfig.from_json(args.config)
    if args.out:
        cfg.out_dir = args.out
    if args.workers is not None:
        cfg.workers = args.workers
    os.makedirs(cfg.out_dir, exist_ok=True)
    result = runner(cfg)
    print(json.dumps({"flags": result.flags, "workload_steps": result.workload_steps},
                     indent=2, sort_keys=True))
    return 0 if result.passed else 1


def main(argv=None):
    ap = argparse.ArgumentParser(prog="vortexlab")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("kernel-table")
    p.add_argument("--variant", default="mollified")
    p.add_argument("--grid-n", type=int, default=256)
    p.add_argument("--lattice-radius", type=int, default=60)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--out", required=True)

    p = sub.add_parser("solve-pde")
    p.add_argument("--rho0", default="default")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=2e-3)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--report-every", type=float, default=0.5)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=2e-3)
    p.add_argument("--kernel", default="mollified:0.01")
    p.add_argument("--rho0", default="default")
    p.add_argument("--replicas", type=int, default=8)
    p.add_argument("--seeds", default=None)
    p.add_argument("--master-seed", type=int, default=2024)
    p.add_argument("--snap-times", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("estimate")
    p.add_argument("--snapshots", required=True)
    p.add_argument("--pde", required=True)
    p.add_argument("--k", default="1,2")
    p.add_argument("--w2", default="auto", choices=["exact", "entropic", "auto"])
    p.add_argument("--out", required=True)

    for name in ("converge", "uniform-time"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("selftest")
    p.add_argument("--out", default="out")

    args = ap.parse_args(argv)
    try:
        if args.cmd == "kernel-table":
            return cmd_kernel_table(args)
        if args.cmd == "solve-pde":
            return cmd_solve_pde(args)
        if args.cmd == "simulate":
            return cmd_simulate(args)
        if args.cmd == "estimate":
            return cmd_estimate(args)
        if args.cmd == "converge":
            return _study(args, run_convergence_study)
        if args.cmd == "uniform-time":
            return _study(args, run_uniformity_study)
        if args.cmd == "selftest":
            summary, digest = run_selftest(args.out)
            print(json.dumps({"passed": summary["passed"], "hash": digest}))
            return 0 if summary["passed"] else 1
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except VortexLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
