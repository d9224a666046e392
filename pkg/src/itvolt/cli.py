"""Command-line harness: single runs, table sweeps, and analytic curve data.

Subcommands
-----------
run         one solver configuration -> one CSV result row
table       Cartesian sweep over solver/step/point lists -> CSV rows
pulse-data  samples of the driving pulse
oracle-data analytic solution curves (two-level amplitudes; oscillator
            trajectory, ground-state probability, energy expectation)

Configuration is flat key=value text (same keys as the long options);
command-line flags override file values.  Output is CSV only; floats carry
17 significant digits and infinities render as the literal INF.
"""

import argparse
import csv
import math
import sys
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from itvolt import expm, models, propagator, refsolvers

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

SOLVERS = ("itvolt-jacobi", "itvolt-gauss-seidel", "itvolt-gmres",
           "sil", "chebyshev-prop", "rk4")
EXPM_CHOICES = ("analytic", "diag", "lanczos", "chebyshev")

DEFAULTS = {
    "two-level": {"e0": 2 * math.pi / 9, "t_final": 9000.0, "expm": "analytic"},
    "oscillator": {"e0": 1.0, "t_final": 100.0, "omega0": 1.0, "states": 400,
                   "expm": "chebyshev"},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model: str = "two-level"
    solver: str = "itvolt-jacobi"
    dt: float = 100.0
    points: int = 12
    tol: Optional[float] = None
    max_iters: Optional[int] = None
    expm: Optional[str] = None
    e0: Optional[float] = None
    t_final: Optional[float] = None
    omega0: float = 1.0
    states: int = 400
    lanczos_tol: float = 1e-12
    lanczos_max_iters: int = 30
    lanczos_reorth: int = 5
    cheb_coeff_tol: float = 1e-15
    cheb_max_terms: int = 1000
    repeats: int = 5
    diagnostics: bool = False
    seed: int = 0

    def validate(self):
        if self.model not in ("two-level", "oscillator"):
            raise ConfigError(f"model: unknown value {self.model!r}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver: unknown value {self.solver!r}")
        if not self.dt > 0:
            raise ConfigError("dt: must be positive")
        if self.points < 2:
            raise ConfigError("points: need at least two quadrature points")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("tol: must be positive")
        if self.repeats < 1:
            raise ConfigError("repeats: must be at least 1")
        if self.expm is not None and self.expm not in EXPM_CHOICES:
            raise ConfigError(f"expm: unknown value {self.expm!r}")
        if self.model == "oscillator" and self.states < 2:
            raise ConfigError("states: need at least two basis states")

    def resolved(self):
        """Fill model-dependent defaults (pulse parameters, backend, tol)."""
        base = DEFAULTS[self.model]
        e0 = self.e0 if self.e0 is not None else base["e0"]
        t_final = self.t_final if self.t_final is not None else base["t_final"]
        backend_name = self.expm if self.expm is not None else base["expm"]
        tol = self.tol
        if tol is None:
            tol = 1e-13 if self.solver == "itvolt-gmres" else 1e-10
        return e0, t_final, backend_name, tol


@dataclass
class ResultRow:
    model: str
    solver: str
    expm: str
    e0: float
    t_final: float
    omega0: Optional[float]
    states: Optional[int]
    dt: float
    points: Optional[int]
    tol: float
    max_iters: Optional[int]
    repeats: int
    status: str
    eps_sol: float
    eps_sol_1: Optional[float]
    eps_sol_2: Optional[float]
    eps_norm: float
    k_max: Optional[int]
    rho_max: Optional[float]
    wall_time_seconds: float


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "INF"
        return format(value, ".17g")
    return str(value)


def result_header():
    return [f.name for f in fields(ResultRow)]


def render_row(row):
    return [_fmt(getattr(row, f.name)) for f in fields(ResultRow)]


def parse_result_row(record):
    """Inverse of render_row, for CSV round-trips."""
    kwargs = {}
    for f, raw in zip(fields(ResultRow), record):
        if raw == "":
            kwargs[f.name] = None
        elif raw == "INF":
            kwargs[f.name] = math.inf
        elif f.name in ("model", "solver", "expm", "status"):
            kwargs[f.name] = raw
        elif f.name in ("states", "points", "max_iters", "repeats", "k_max"):
            kwargs[f.name] = int(raw)
        else:
            kwargs[f.name] = float(raw)
    return ResultRow(**kwargs)


def _build_model(config, e0, t_final):
    if config.model == "two-level":
        return models.TwoLevelModel(e0=e0, t_final=t_final)
    return models.OscillatorModel(e0=e0, t_final=t_final, omega0=config.omega0,
                                  states=config.states)


def _build_backend(config, name):
    if name == "analytic":
        return expm.AnalyticTwoLevel()
    if name == "diag":
        return expm.Diagonalization()
    if name == "lanczos":
        return expm.Lanczos(tol=config.lanczos_tol, max_iters=config.lanczos_max_iters,
                            reorth_depth=config.lanczos_reorth)
    return expm.Chebyshev(coeff_tol=config.cheb_coeff_tol, max_terms=config.cheb_max_terms)


def execute(config):
    """Run one configuration; returns (ResultRow, Trajectory)."""
    config.validate()
    e0, t_final, backend_name, tol = config.resolved()
    model = _build_model(config, e0, t_final)
    ham = model.hamiltonian()
    psi0 = model.initial_state()

    trajectory = None
    wall_times = []
    k_max = None
    rho_max = None
    status = "converged"
    for _ in range(config.repeats):
        if config.solver.startswith("itvolt-"):
            scheme = config.solver.removeprefix("itvolt-")
            settings = propagator.SolverSettings(
                scheme=scheme, tol=tol, max_iters=config.max_iters,
                diagnostics=config.diagnostics, seed=config.seed,
            )
            backend = _build_backend(config, backend_name)
            trajectory, report = propagator.propagate(
                ham, psi0, 0.0, t_final, config.dt, config.points, settings, backend
            )
            wall_times.append(report.wall_time)
            k_max, rho_max, status = report.k_max, report.rho_max, report.status
        else:
            if config.solver == "sil":
                method = refsolvers.SIL(dt=config.dt, tol=config.lanczos_tol,
                                        max_iters=config.lanczos_max_iters,
                                        reorth_depth=config.lanczos_reorth)
            elif config.solver == "chebyshev-prop":
                method = refsolvers.ChebyshevProp(dt=config.dt,
                                                  coeff_tol=config.cheb_coeff_tol,
                                                  max_terms=config.cheb_max_terms)
            else:
                method = refsolvers.RK4(dt=config.dt)
            trajectory, report = refsolvers.reference_propagate(
                method, ham, psi0, 0.0, t_final
            )
            wall_times.append(report.wall_time)
            status = report.status

    metrics = models.compute_metrics(trajectory, model)
    diverged = status == "diverged"
    ref_expm = {"sil": "lanczos", "chebyshev-prop": "chebyshev", "rk4": None}
    row = ResultRow(
        model=config.model,
        solver=config.solver,
        expm=backend_name if config.solver.startswith("itvolt-") else ref_expm[config.solver],
        e0=e0,
        t_final=t_final,
        omega0=config.omega0 if config.model == "oscillator" else None,
        states=config.states if config.model == "oscillator" else None,
        dt=config.dt,
        points=config.points if config.solver.startswith("itvolt-") else None,
        tol=tol,
        max_iters=config.max_iters,
        repeats=config.repeats,
        status=status,
        eps_sol=math.inf if diverged else metrics.eps_sol,
        eps_sol_1=(math.inf if diverged else metrics.eps_sol_1)
        if config.model == "two-level" else None,
        eps_sol_2=(math.inf if diverged else metrics.eps_sol_2)
        if config.model == "two-level" else None,
        eps_norm=math.inf if diverged else metrics.eps_norm,
        k_max=k_max,
        rho_max=rho_max,
        wall_time_seconds=float(np.mean(wall_times)),
    )
    return row, trajectory


def _write_csv(path, header, records):
    stream = sys.stdout if path is None else open(path, "w", newline="")
    try:
        writer = csv.writer(stream)
        writer.writerow(header)
        writer.writerows(records)
    finally:
        if path is not None:
            stream.close()


def _load_config_file(path):
    values = {}
    try:
        text = open(path).read()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config: line {lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


_BOOL_KEYS = {"diagnostics"}
_INT_KEYS = {"points", "max_iters", "states", "repeats", "seed",
             "lanczos_max_iters", "lanczos_reorth", "cheb_max_terms"}
_FLOAT_KEYS = {"dt", "tol", "e0", "t_final", "omega0", "lanczos_tol", "cheb_coeff_tol"}


def _coerce(key, value):
    try:
        if key in _BOOL_KEYS:
            return value.lower() in ("1", "true", "yes", "on")
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r}")
    return value


def _config_from(args, file_values, sweep_keys=()):
    config = RunConfig()
    for key, value in file_values.items():
        if key in sweep_keys:
            continue
        if not hasattr(config, key):
            raise ConfigError(f"config: unknown key {key!r}")
        setattr(config, key, _coerce(key, value))
    for f in fields(RunConfig):
        if f.name in sweep_keys:
            continue
        cli_value = getattr(args, f.name, None)
        if cli_value is not None:
            setattr(config, f.name, cli_value)
    return config


def _add_common_options(p, sweep=False):
    p.add_argument("--model", choices=("two-level", "oscillator"), default=None)
    if sweep:
        # sweep axes accept comma lists and are parsed by the table command
        p.add_argument("--solver", default=None)
        p.add_argument("--dt", default=None)
        p.add_argument("--points", default=None)
    else:
        p.add_argument("--solver", choices=SOLVERS, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--points", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p.add_argument("--expm", choices=EXPM_CHOICES, default=None)
    p.add_argument("--e0", type=float, default=None)
    p.add_argument("--t-final", dest="t_final", type=float, default=None)
    p.add_argument("--omega0", type=float, default=None)
    p.add_argument("--states", type=int, default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--diagnostics", action="store_const", const=True, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")


def _cmd_run(args):
    file_values = _load_config_file(args.config) if args.config else {}
    config = _config_from(args, file_values)
    row, trajectory = execute(config)
    _write_csv(args.out, result_header(), [render_row(row)])
    if args.trajectory_out:
        header = ["t"] + [f"p{i}" for i in range(trajectory.states.shape[1])]
        records = [
            [_fmt(float(t))] + [_fmt(float(p)) for p in np.abs(state) ** 2]
            for t, state in zip(trajectory.times, trajectory.states)
        ]
        _write_csv(args.trajectory_out, header, records)
    return EXIT_OK


def _parse_grid(spec):
    cells = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            dt_text, n_text = part.split(":")
            cells.append((float(dt_text), int(n_text)))
        except ValueError:
            raise ConfigError(f"grid: cannot parse cell {part!r} (want dt:points)")
    return cells


def _cmd_table(args):
    file_values = _load_config_file(args.config) if args.config else {}
    sweep_keys = ("solver", "dt", "points", "grid")
    config = _config_from(args, file_values, sweep_keys=sweep_keys)

    def axis(name, cast):
        raw = getattr(args, name, None)
        if raw is None:
            raw = file_values.get(name)
        if raw is None:
            return None
        if isinstance(raw, str):
            return [cast(part) for part in raw.split(",") if part.strip()]
        return [cast(raw)]

    try:
        solvers = axis("solver", str) or [config.solver]
        grid_raw = args.grid if args.grid is not None else file_values.get("grid")
        if grid_raw is not None:
            cells = _parse_grid(grid_raw)
        else:
            dts = axis("dt", float) or [config.dt]
            points = axis("points", int) or [config.points]
            cells = [(dt, n) for dt in dts for n in points]
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}")

    records = []
    any_ok = False
    header = result_header()
    for dt, n in cells:
        for solver in solvers:
            cell = RunConfig(**{f.name: getattr(config, f.name) for f in fields(RunConfig)})
            cell.solver = solver
            cell.dt = dt
            cell.points = n
            try:
                row, _ = execute(cell)
                records.append(render_row(row))
                any_ok = True
            except ConfigError:
                raise
            except Exception as exc:
                failed = [""] * len(header)
                failed[header.index("model")] = cell.model
                failed[header.index("solver")] = solver
                failed[header.index("dt")] = _fmt(dt)
                failed[header.index("points")] = _fmt(n)
                failed[header.index("status")] = f"error: {exc}"
                records.append(failed)
    _write_csv(args.out, result_header(), records)
    return EXIT_OK if (any_ok or not cells) else EXIT_RUNTIME


def _cmd_pulse_data(args):
    file_values = _load_config_file(args.config) if args.config else {}
    config = _config_from(args, file_values)
    config.validate()
    e0, t_final, _, _ = config.resolved()
    model = _build_model(config, e0, t_final)
    ts = np.linspace(0.0, t_final, args.samples)
    records = [[_fmt(float(t)), _fmt(float(model.pulse(t)))] for t in ts]
    _write_csv(args.out, ["t", "pulse"], records)
    return EXIT_OK


def _cmd_oracle_data(args):
    file_values = _load_config_file(args.config) if args.config else {}
    config = _config_from(args, file_values)
    config.validate()
    if args.e0_list:
        amplitudes = [float(part) for part in args.e0_list.split(",") if part.strip()]
    else:
        amplitudes = [config.resolved()[0]]
    _, t_final, _, _ = config.resolved()
    ts = np.linspace(0.0, t_final, args.samples)
    if config.model == "two-level":
        header = ["e0", "t", "p_ground", "p_excited"]
        records = []
        for e0 in amplitudes:
            cg, ce = models.two_level_analytic(ts, e0, t_final)
            for t, pg, pe in zip(ts, np.abs(cg) ** 2, np.abs(ce) ** 2):
                records.append([_fmt(float(e0)), _fmt(float(t)), _fmt(float(pg)),
                                _fmt(float(pe))])
    else:
        n_states = args.oracle_states
        header = ["e0", "t", "x0", "p0", "energy_expectation"] + [
            f"p{n}" for n in range(n_states)
        ]
        records = []
        for e0 in amplitudes:
            traj = models.classical_trajectory(ts, e0, t_final, config.omega0)
            energy = models.energy_expectation(traj)
            probs = models.population_probabilities(traj, n_states - 1) if n_states else None
            for i, t in enumerate(ts):
                rec = [_fmt(float(e0)), _fmt(float(t)), _fmt(float(traj.x0[i])),
                       _fmt(float(traj.p0[i])), _fmt(float(energy[i]))]
                if probs is not None:
                    rec += [_fmt(float(p)) for p in probs[i]]
                records.append(rec)
    _write_csv(args.out, header, records)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="itvolt",
        description="Iterative Volterra propagator benchmarks and data export",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one solver configuration")
    _add_common_options(p_run)
    p_run.add_argument("--trajectory-out", default=None,
                       help="also write per-checkpoint probabilities")
    p_run.set_defaults(func=_cmd_run)

    p_table = sub.add_parser("table", help="run a sweep and emit one row per cell")
    _add_common_options(p_table, sweep=True)
    p_table.add_argument("--grid", default=None,
                         help="comma list of dt:points cells (overrides --dt/--points)")
    p_table.set_defaults(func=_cmd_table)

    p_pulse = sub.add_parser("pulse-data", help="sample the driving pulse")
    _add_common_options(p_pulse)
    p_pulse.add_argument("--samples", type=int, default=1001)
    p_pulse.set_defaults(func=_cmd_pulse_data)

    p_oracle = sub.add_parser("oracle-data", help="sample the analytic solution")
    _add_common_options(p_oracle)
    p_oracle.add_argument("--samples", type=int, default=1001)
    p_oracle.add_argument("--e0-list", default=None,
                          help="comma list of pulse amplitudes (one curve each)")
    p_oracle.add_argument("--oracle-states", type=int, default=0,
                          help="oscillator: include the first K state probabilities")
    p_oracle.set_defaults(func=_cmd_oracle_data)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
