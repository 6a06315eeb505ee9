"""Configuration, thickness sweeps and report generation.

A sweep runs the 1D reference solver once, then the 3D solver on a sequence
of decreasing thicknesses from perturbed lifted initial data, and collects
the scaled distance norms and the kinetic + relative-entropy trace per
output time.  The verdict checks that the per-thickness suprema decrease
monotonically (with slack) and by a minimum overall factor; no convergence
rate is asserted.

Configuration files are plain ini-style text with ``[section]`` headers and
``key = value`` lines; parsing reports the offending line number on error.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import solver1d, solver3d
from .relent import ScaledNormReport, rel_entropy_integral, scaled_norms
from .thermo import ThermoModel

__all__ = [
    "ConfigError",
    "Profile1DParams",
    "SweepConfig",
    "SweepReport",
    "parse_config",
    "parse_config_file",
    "run_sweep",
    "run_solver1d",
    "convergence_verdict",
    "emit_report",
    "SCHEME_VERSION",
]

SCHEME_VERSION = "central-2/heun-2/mirror-bc r1"

PASS_SLACK = 1.05          # tolerated per-step increase in the sup sequence
PASS_TOTAL_DECREASE = 0.25  # last sup must fall below this fraction of the first
ZERO_FLOOR = 1e-12          # sequences this small count as converged outright


class ConfigError(ValueError):
    """Malformed or inconsistent configuration text."""


@dataclass(frozen=True)
class Profile1DParams:
    """Sinusoidal 1D initial profiles.

    Each field is base + amp * shape(pi * mode * y) with shape sin or cos.
    The velocity always uses sin so it vanishes at the ends; cos-shaped
    density/temperature profiles have zero slope there, matching the
    mirrored wall extension exactly.
    """

    rho_base: float = 1.0
    rho_amp: float = 0.1
    rho_mode: int = 2
    rho_shape: str = "cos"
    u_amp: float = 0.1
    u_mode: int = 1
    theta_base: float = 1.0
    theta_amp: float = 0.1
    theta_mode: int = 1
    theta_shape: str = "cos"

    def __post_init__(self):
        for name in ("rho_shape", "theta_shape"):
            if getattr(self, name) not in ("sin", "cos"):
                raise ConfigError(f"{name} must be 'sin' or 'cos'")
        if self.rho_base - abs(self.rho_amp) <= 0.0:
            raise ConfigError("density profile must stay strictly positive")
        if self.theta_base - abs(self.theta_amp) <= 0.0:
            raise ConfigError("temperature profile must stay strictly positive")

    @staticmethod
    def _shape_fn(shape):
        return np.sin if shape == "sin" else np.cos

    def rho0(self):
        fn = self._shape_fn(self.rho_shape)
        return lambda y: self.rho_base + self.rho_amp * fn(np.pi * self.rho_mode * y)

    def u0(self):
        return lambda y: self.u_amp * np.sin(np.pi * self.u_mode * y)

    def theta0(self):
        fn = self._shape_fn(self.theta_shape)
        return lambda y: self.theta_base + self.theta_amp * fn(np.pi * self.theta_mode * y)


@dataclass(frozen=True)
class SweepConfig:
    thermo: ThermoModel = ThermoModel()
    profile: Profile1DParams = Profile1DParams()
    delta: float = 0.05
    mode1: int = 1
    mode2: int = 0
    epsilons: tuple = (0.5, 0.25, 0.125)
    r_exponents: tuple = (1.0, 1.5)
    q_bounds: tuple = ((0.0, 1.0), (0.0, 1.0))
    n1: int = 16
    n2: int = 16
    n3: int = 64
    n1d: int = 64
    t_final: float = 0.25
    n_outputs: int = 8
    theta_bar: float = 1.0
    out_dir: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        eps = self.epsilons
        if not eps or any(e <= 0.0 for e in eps) or any(
            eps[i + 1] >= eps[i] for i in range(len(eps) - 1)
        ):
            raise ConfigError("epsilons must be positive and strictly decreasing")
        if not self.r_exponents or any(not 1.0 <= r < 2.0 for r in self.r_exponents):
            raise ConfigError("velocity exponents must lie in [1, 2)")
        if self.t_final <= 0.0:
            raise ConfigError("T_final must be positive")
        if self.n_outputs < 1:
            raise ConfigError("need at least one output time")
        if self.n3 % self.n1d != 0:
            raise ConfigError("n3 must be a multiple of n1d (conforming axial grids)")
        if self.delta < 0.0:
            raise ConfigError("delta must be nonnegative")
        if self.theta_bar <= 0.0:
            raise ConfigError("theta_bar must be positive")


# -- ini-style parsing with line numbers -----------------------------------------

_SECTION_KEYS = {
    "thermo": {"a", "mu0", "mu1", "eta0", "eta1", "kappa0", "kappa2", "kappa3",
               "P_closure", "S0"},
    "profile1d": {"rho_base", "rho_amp", "rho_mode", "rho_shape", "u_amp", "u_mode",
                  "theta_base", "theta_amp", "theta_mode", "theta_shape"},
    "perturbation": {"delta", "mode1", "mode2"},
    "sweep": {"epsilons", "r_exponents", "T_final", "n_outputs", "theta_bar", "seed"},
    "grid": {"n1", "n2", "n3", "n1d", "q"},
    "output": {"dir"},
}

_INT_KEYS = {"rho_mode", "u_mode", "theta_mode", "mode1", "mode2",
             "n1", "n2", "n3", "n1d", "n_outputs", "seed"}
_STR_KEYS = {"P_closure", "rho_shape", "theta_shape", "dir"}


def _parse_sections(text: str) -> dict:
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in _SECTION_KEYS:
                raise ConfigError(f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside of any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SECTION_KEYS[current]:
            raise ConfigError(f"line {lineno}: unknown key '{key}' in [{current}]")
        if key in sections[current]:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        sections[current][key] = (value, lineno)
    return sections


def _convert(section: str, key: str, value: str, lineno: int):
    if key in _STR_KEYS:
        return value
    try:
        if key in _INT_KEYS:
            return int(value)
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: cannot parse '{value}' for {section}.{key}") from exc


def _float_list(value: str, lineno: int, key: str) -> tuple:
    try:
        return tuple(float(part) for part in value.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: cannot parse list '{value}' for {key}") from exc


def parse_config(text: str) -> SweepConfig:
    """Parse and validate configuration text; defaults fill missing entries."""
    sections = _parse_sections(text)
    kwargs: dict = {}

    thermo_raw = sections.get("thermo", {})
    if thermo_raw:
        try:
            kwargs["thermo"] = ThermoModel.from_mapping(
                {k: v for k, (v, _) in thermo_raw.items()}
            )
        except ValueError as exc:
            lineno = min(ln for _, ln in thermo_raw.values())
            raise ConfigError(f"[thermo] section starting at line {lineno}: {exc}") from exc

    profile_raw = sections.get("profile1d", {})
    if profile_raw:
        fields = {k: _convert("profile1d", k, v, ln) for k, (v, ln) in profile_raw.items()}
        kwargs["profile"] = Profile1DParams(**fields)

    pert_raw = sections.get("perturbation", {})
    for key, (value, ln) in pert_raw.items():
        kwargs[key] = _convert("perturbation", key, value, ln)

    sweep_raw = sections.get("sweep", {})
    for key, (value, ln) in sweep_raw.items():
        if key == "epsilons":
            kwargs["epsilons"] = _float_list(value, ln, key)
        elif key == "r_exponents":
            values = _float_list(value, ln, key)
            for r in values:
                if not 1.0 <= r < 2.0:
                    raise ConfigError(
                        f"line {ln}: velocity exponent {r} outside [1, 2)"
                    )
            kwargs["r_exponents"] = values
        elif key == "T_final":
            kwargs["t_final"] = _convert("sweep", key, value, ln)
        else:
            kwargs[key] = _convert("sweep", key, value, ln)

    grid_raw = sections.get("grid", {})
    for key, (value, ln) in grid_raw.items():
        if key == "q":
            parts = _float_list(value, ln, key)
            if len(parts) != 4 or parts[1] <= parts[0] or parts[3] <= parts[2]:
                raise ConfigError(f"line {ln}: q must be 'a,b,c,d' with a<b, c<d")
            kwargs["q_bounds"] = ((parts[0], parts[1]), (parts[2], parts[3]))
        else:
            kwargs[key] = _convert("grid", key, value, ln)

    out_raw = sections.get("output", {})
    if "dir" in out_raw:
        kwargs["out_dir"] = out_raw["dir"][0]

    try:
        return SweepConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config_file(path) -> SweepConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# -- sweep orchestration -----------------------------------------------------------


@dataclass
class SweepReport:
    config: SweepConfig
    per_epsilon: dict = field(default_factory=dict)   # epsilon -> ScaledNormReport
    verdicts: dict = field(default_factory=dict)      # signal name -> bool | None
    verdict: str = "UNDETERMINED"
    metadata: dict = field(default_factory=dict)
    trajectory1d: Optional[solver1d.Trajectory1D] = None
    final_states: dict = field(default_factory=dict)  # epsilon -> State3D

    def rows(self):
        """One row per (epsilon, time, r): the sweep.csv payload."""
        out = []
        for eps in self.config.epsilons:
            rep = self.per_epsilon.get(eps)
            if rep is None:
                continue
            for k, t in enumerate(rep.times):
                for r in self.config.r_exponents:
                    out.append((
                        eps, t, rep.rel_entropy_trace[k], rep.density_norms[k],
                        rep.temperature_norms[k], rep.velocity_norms[r][k], r,
                    ))
        return out


def convergence_verdict(values, slack: float = PASS_SLACK,
                        total: float = PASS_TOTAL_DECREASE,
                        floor: float = ZERO_FLOOR) -> Optional[bool]:
    """Decide whether a sup sequence over decreasing thickness shows decay.

    Returns True/False, or None when the sequence is too short to judge.
    A sequence that sits entirely below ``floor`` passes outright (the
    fields coincide up to rounding, as in an unperturbed lift).
    """
    values = [float(v) for v in values]
    if len(values) < 2:
        return None
    if all(v <= floor for v in values):
        return True
    monotone = all(values[i + 1] <= slack * values[i] for i in range(len(values) - 1))
    decreased = values[-1] <= total * values[0]
    return monotone and decreased


def run_solver1d(config: SweepConfig):
    profile = config.profile
    state0 = solver1d.init_smooth(config.n1d, profile.rho0(), profile.u0(), profile.theta0())
    return solver1d.integrate(config.thermo, state0, config.t_final,
                              n_outputs=config.n_outputs)


def _run_case(config: SweepConfig, traj1d: solver1d.Trajectory1D, epsilon: float):
    model = config.thermo
    domain = solver3d.build_domain(config.q_bounds, epsilon, (config.n1, config.n2, config.n3))
    perturbation = None
    if config.delta > 0.0:
        perturbation = solver3d.default_perturbation(
            config.delta, mode1=config.mode1, mode2=config.mode2, q_bounds=config.q_bounds
        )
    state0 = solver3d.lift_initial_data(domain, traj1d.states[0], perturbation)
    traj3d = solver3d.integrate3d(model, state0, config.t_final, n_outputs=config.n_outputs)

    report = ScaledNormReport(epsilon=epsilon)
    report.velocity_norms = {r: [] for r in config.r_exponents}
    for k, t in enumerate(traj3d.times):
        ref = traj1d.states[k]
        st = traj3d.states[k]
        first = config.r_exponents[0]
        rho_n, theta_n, u_n = scaled_norms(st, ref, first)
        report.times.append(t)
        report.density_norms.append(rho_n)
        report.temperature_norms.append(theta_n)
        report.velocity_norms[first].append(u_n)
        for r in config.r_exponents[1:]:
            report.velocity_norms[r].append(scaled_norms(st, ref, r)[2])
        report.rel_entropy_trace.append(rel_entropy_integral(model, st, ref))
    report.validate()
    return epsilon, report, traj3d.states[-1], traj3d.steps


def _effective_jobs(jobs: Optional[int]) -> int:
    jobs = 1 if jobs is None else max(1, int(jobs))
    cap = os.environ.get("NSF_THREADS")
    if cap:
        try:
            jobs = min(jobs, max(1, int(cap)))
        except ValueError:
            pass
    return jobs


def run_sweep(config: SweepConfig, jobs: Optional[int] = None) -> SweepReport:
    """Run the 1D reference and one 3D case per thickness; grade the decay.

    Thickness cases are independent; ``jobs > 1`` runs them in separate
    processes (capped by the NSF_THREADS environment variable).  Case
    failures abort the sweep but the partial report is attached to the
    raised exception as ``exc.partial_report`` for post-mortem output.
    """
    t_start = time.time()
    report = SweepReport(config=config)
    report.metadata = {
        "scheme": SCHEME_VERSION,
        "grid": [config.n1, config.n2, config.n3],
        "n1d": config.n1d,
        "t_final": config.t_final,
        "n_outputs": config.n_outputs,
        "delta": config.delta,
        "epsilons": list(config.epsilons),
        "r_exponents": list(config.r_exponents),
        "seed": config.seed,
        "started_unix": int(t_start),
        "sup_convention": "max over outputs at t > 0; t = 0 recorded in the trace",
    }
    traj1d = run_solver1d(config)
    report.trajectory1d = traj1d

    jobs = _effective_jobs(jobs)
    steps = {}
    try:
        if jobs > 1 and len(config.epsilons) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_run_case, config, traj1d, eps)
                           for eps in config.epsilons]
                for fut in futures:
                    eps, rep, final, n_steps = fut.result()
                    report.per_epsilon[eps] = rep
                    report.final_states[eps] = final
                    steps[eps] = n_steps
        else:
            for eps in config.epsilons:
                eps, rep, final, n_steps = _run_case(config, traj1d, eps)
                report.per_epsilon[eps] = rep
                report.final_states[eps] = final
                steps[eps] = n_steps
    except (solver1d.CFLError, solver1d.PositivityError) as exc:
        exc.partial_report = report
        raise

    signals = {
        "rho": [report.per_epsilon[e].sup_t_density_norm for e in config.epsilons],
        "theta": [report.per_epsilon[e].sup_t_temperature_norm for e in config.epsilons],
        "rel_entropy": [report.per_epsilon[e].sup_t_rel_entropy for e in config.epsilons],
    }
    for r in config.r_exponents:
        signals[f"u_r{r:g}"] = [report.per_epsilon[e].velocity_norm_r(r)
                                for e in config.epsilons]
    report.verdicts = {name: convergence_verdict(vals) for name, vals in signals.items()}
    report.metadata["signal_sups"] = {k: [float(v) for v in vals]
                                      for k, vals in signals.items()}
    report.metadata["steps_per_epsilon"] = {f"{e:g}": steps[e] for e in steps}
    report.metadata["wall_seconds"] = round(time.time() - t_start, 3)
    if any(v is None for v in report.verdicts.values()):
        report.verdict = "UNDETERMINED"
    elif all(report.verdicts.values()):
        report.verdict = "PASS"
    else:
        report.verdict = "FAIL"
    return report


# -- persistence ---------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_with_backup(path: Path, content: str):
    if path.exists():
        path.replace(path.with_suffix(path.suffix + ".bak"))
    path.write_text(content, encoding="utf-8")


def emit_report(report: SweepReport, out_dir) -> list:
    """Write sweep.csv, verdict.txt, metadata.json and per-case snapshots.

    Existing sweep.csv / verdict.txt are rotated to ``<name>.bak`` first, so
    a rerun into the same directory stays recoverable.  Returns the list of
    files written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    lines = ["epsilon,time,E_scaled,rho_norm,theta_norm,u_norm_r,r"]
    for row in report.rows():
        lines.append(",".join(_fmt(v) for v in row))
    csv_path = out / "sweep.csv"
    _write_with_backup(csv_path, "\n".join(lines) + "\n")
    written.append(csv_path)

    verdict_lines = [f"verdict: {report.verdict}"]
    for name, ok in sorted(report.verdicts.items()):
        state = "UNDETERMINED" if ok is None else ("PASS" if ok else "FAIL")
        verdict_lines.append(f"signal {name}: {state}")
    verdict_path = out / "verdict.txt"
    _write_with_backup(verdict_path, "\n".join(verdict_lines) + "\n")
    written.append(verdict_path)

    meta_path = out / "metadata.json"
    meta_path.write_text(json.dumps(report.metadata, indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
    written.append(meta_path)

    if report.trajectory1d is not None:
        ref_dir = out / "reference1d"
        ref_dir.mkdir(exist_ok=True)
        for t, st in zip(report.trajectory1d.times, report.trajectory1d.states):
            path = ref_dir / f"state_t{t:.6f}.csv"
            body = ["y,rho,u,theta"]
            for row in zip(st.y, st.rho, st.u, st.theta):
                body.append(",".join(_fmt(float(v)) for v in row))
            path.write_text("\n".join(body) + "\n", encoding="utf-8")
            written.append(path)

    for eps, state in sorted(report.final_states.items(), reverse=True):
        case_dir = out / f"eps_{eps:g}"
        case_dir.mkdir(exist_ok=True)
        path = case_dir / f"final_t{state.t:.6f}.csv"
        solver3d.write_snapshot_csv(path, state)
        written.append(path)
    return written
