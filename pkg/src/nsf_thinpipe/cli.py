"""Command-line frontend: sweep, solve1d, solve3d, check-thermo, check-inequalities.

Exit codes: 0 success (sweep PASS, or UNDETERMINED with --allow-undetermined),
1 check failure, 2 usage/configuration/runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness, inequalities, solver1d, solver3d
from .relent import (
    EssentialWindow,
    coercivity_check,
    drho_ballistic,
    drho_ballistic_fd,
    halton_points,
)
from .thermo import ThermoModel, structural_report
from .harness import ConfigError


def _load_config(path) -> harness.SweepConfig:
    if path is None:
        return harness.SweepConfig()
    return harness.parse_config_file(path)


def _cmd_sweep(args) -> int:
    config = _load_config(args.config)
    out_dir = args.out or config.out_dir
    if out_dir is None:
        print("error: no output directory (use --out or [output] dir)", file=sys.stderr)
        return 2
    try:
        report = harness.run_sweep(config, jobs=args.jobs)
    except (solver1d.CFLError, solver1d.PositivityError) as exc:
        partial = getattr(exc, "partial_report", None)
        if partial is not None:
            harness.emit_report(partial, out_dir)
        print(f"error: sweep aborted: {exc}", file=sys.stderr)
        return 2
    harness.emit_report(report, out_dir)
    print(f"verdict: {report.verdict}")
    for name, ok in sorted(report.verdicts.items()):
        print(f"  {name}: {'PASS' if ok else 'UNDETERMINED' if ok is None else 'FAIL'}")
    if report.verdict == "PASS":
        return 0
    if report.verdict == "UNDETERMINED" and args.allow_undetermined:
        return 0
    return 1


def _cmd_solve1d(args) -> int:
    config = _load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    traj = harness.run_solver1d(config)
    diag_lines = ["t,mass,energy,entropy_production_min"]
    for t, st, diag in zip(traj.times, traj.states, traj.diagnostics):
        path = out / f"state_t{t:.6f}.csv"
        body = ["y,rho,u,theta"]
        for row in zip(st.y, st.rho, st.u, st.theta):
            body.append(",".join(f"{float(v):.17g}" for v in row))
        path.write_text("\n".join(body) + "\n", encoding="utf-8")
        diag_lines.append(
            f"{t:.17g},{diag.mass:.17g},{diag.energy:.17g},{diag.entropy_production_min:.17g}"
        )
    (out / "diagnostics.csv").write_text("\n".join(diag_lines) + "\n", encoding="utf-8")
    print(f"wrote {len(traj.states)} snapshots to {out}")
    return 0


def _cmd_solve3d(args) -> int:
    config = _load_config(args.config)
    epsilon = args.epsilon if args.epsilon is not None else config.epsilons[0]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    traj1d = harness.run_solver1d(config)
    domain = solver3d.build_domain(config.q_bounds, epsilon,
                                   (config.n1, config.n2, config.n3))
    perturbation = None
    if config.delta > 0.0:
        perturbation = solver3d.default_perturbation(
            config.delta, mode1=config.mode1, mode2=config.mode2, q_bounds=config.q_bounds
        )
    state = solver3d.lift_initial_data(domain, traj1d.states[0], perturbation)
    traj = solver3d.integrate3d(config.thermo, state, config.t_final,
                                n_outputs=config.n_outputs)
    for t, st in zip(traj.times, traj.states):
        if args.format == "csv":
            solver3d.write_snapshot_csv(out / f"state_t{t:.6f}.csv", st)
        else:
            solver3d.write_snapshot_bin(out / f"state_t{t:.6f}.bin", st)
    ledger = solver3d.dissipation_ledger(config.thermo, traj, config.theta_bar)
    print(f"wrote {len(traj.states)} snapshots to {out}; "
          f"dissipation balance drift {ledger.drift:.3e}")
    return 0


def _cmd_check_thermo(args) -> int:
    config = _load_config(args.config)
    model = config.thermo
    report = structural_report(model)
    points = halton_points(100, (0.1, 0.1), (10.0, 10.0))
    rho, theta = points[:, 0], points[:, 1]
    gibbs = float(np.max(model.gibbs_residual(rho, theta)))
    stable = bool(np.all(model.dp_drho(rho, theta) > 0)
                  and np.all(model.de_dtheta(rho, theta) > 0))
    window = EssentialWindow(0.5, 2.0, 0.5, 2.0)
    coercivity = coercivity_check(model, window, n_samples=2000)
    fd_gap = float(np.max(np.abs(
        drho_ballistic(model, rho, theta) - drho_ballistic_fd(model, rho, theta)
    ) / np.maximum(1.0, np.abs(drho_ballistic(model, rho, theta)))))
    checks = {
        "structure": report.ok,
        "gibbs_residual<1e-6": gibbs < 1e-6,
        "thermodynamic_stability": stable,
        "coercivity_positive": coercivity.all_positive(),
        "drho_ballistic_fd<1e-8": fd_gap < 1e-8,
    }
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"  max gibbs residual: {gibbs:.3e}")
    print(f"  gap ratio bound: {report.max_gap_over_z:.6g}, "
          f"P_inf estimate: {report.p_inf_estimate:.6g}")
    print(f"  coercivity: ess={coercivity.c_essential!r} res={coercivity.c_residual!r}")
    return 0 if all(checks.values()) else 1


def _cmd_check_inequalities(args) -> int:
    rng = np.random.default_rng(args.seed)
    dims = (args.size,) * 3
    lines = ["field_id,grad_sq,sym_sq,dev_sq,mixed,sym_ok,dev_ok,mixed_ok"]
    all_ok = True
    for field_id in range(args.fields):
        field = inequalities.random_trig_field(dims, rng)
        rep = inequalities.korn_report(field)
        all_ok &= rep.all_ok()
        lines.append(
            f"{field_id},{rep.grad_sq:.17g},{rep.sym_sq:.17g},{rep.dev_sq:.17g},"
            f"{rep.mixed:.17g},{int(rep.sym_ok)},{int(rep.dev_ok)},{int(rep.mixed_ok)}"
        )
    epsilons = (1.0, 0.5, 0.25, 0.125)
    reports = inequalities.poincare_sweep(
        lambda eps: inequalities.centered_linear_profile(eps), epsilons
    )
    ratios = [r.ratio for r in reports]
    poincare_ok = all(r <= ratios[0] * 1.1 for r in ratios)
    all_ok &= poincare_ok
    out_text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(out_text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(out_text, end="")
    print(f"{'PASS' if poincare_ok else 'FAIL'} poincare ratios: "
          + ", ".join(f"{r:.4e}" for r in ratios))
    print(f"{'PASS' if all_ok else 'FAIL'} overall")
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsf-thinpipe",
        description="Thin-pipe compressible-flow laboratory: solvers, "
                    "inequality checks and thickness-convergence sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run the thickness sweep and grade convergence")
    p.add_argument("--config", type=Path, help="configuration file")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel thickness cases (capped by NSF_THREADS)")
    p.add_argument("--allow-undetermined", action="store_true",
                   help="exit 0 when the verdict is UNDETERMINED")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("solve1d", help="run the 1D reference solver")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_solve1d)

    p = sub.add_parser("solve3d", help="run one 3D thin-pipe case")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--epsilon", type=float, help="thickness (default: first of the sweep list)")
    p.add_argument("--format", choices=("csv", "bin"), default="csv")
    p.set_defaults(func=_cmd_solve3d)

    p = sub.add_parser("check-thermo", help="verify the constitutive closure")
    p.add_argument("--config", type=Path)
    p.set_defaults(func=_cmd_check_thermo)

    p = sub.add_parser("check-inequalities", help="verify the discrete inequality suite")
    p.add_argument("--out", type=Path, help="CSV output path (default: stdout)")
    p.add_argument("--size", type=int, default=33, help="nodes per axis")
    p.add_argument("--fields", type=int, default=10, help="number of random fields")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_check_inequalities)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
