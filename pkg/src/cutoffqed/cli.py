"""Command-line front end.

Every subcommand writes a CSV with a ``# key=value`` header (full
parameter echo and solver tolerances) and a JSON mirror when ``--out`` is
given; otherwise the table goes to stdout. Per-point failures land in a
``.errors.log`` sidecar. Settings resolve as defaults < config file
(``--config`` or $CUTOFFQED_CONFIG) < command-line flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__, cc_modes, cf_modes, charfn, dispersive, greens, hybridize, ww
from .params import CircuitParams

__all__ = ["RunConfig", "TASKS", "build_parser", "main", "parse_grid", "run"]

TASKS = ("modes", "resonances", "green", "transmission", "dispersive", "poles", "sweep", "mspt", "ww", "validate")
CONFIG_ENV = "CUTOFFQED_CONFIG"
TOLERANCES = {
    "cc_bisect": 1e-6,
    "cc_newton_rtol": 1e-12,
    "pole_residual": charfn.RESIDUAL_TOL,
    "pole_drift": charfn.DRIFT_TOL,
    "ww_doubling": ww.DOUBLING_TOL,
    "ww_richardson": ww.RICHARDSON_TOL,
}
_GRIDS = ("omega_j_grid", "omega_grid", "chi_s_list")


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def parse_grid(text: str) -> tuple[float, ...]:
    """'a,b,c' or 'linspace:start:stop:num'."""
    text = text.strip()
    if text.startswith("linspace:"):
        parts = text.split(":")[1:]
        if len(parts) != 3:
            raise ValueError("linspace grids take start:stop:num")
        return tuple(float(v) for v in np.linspace(float(parts[0]), float(parts[1]), int(parts[2])))
    return tuple(float(v) for v in text.split(",") if v.strip())


@dataclass(frozen=True)
class RunConfig:
    params: CircuitParams = field(default_factory=CircuitParams)
    task: str = "modes"
    N: int = 200
    omega_j_grid: Optional[tuple] = None
    omega_grid: Optional[tuple] = None
    chi_s_list: Optional[tuple] = None
    output: Optional[str] = None
    format: str = "csv"
    jobs: int = 1
    x: Optional[float] = None
    x_prime: Optional[float] = None
    profile: str = "suppressed"
    t_max: float = 50.0
    dt: float = 0.02
    omega_max: float = 1e3
    include_vacuum: bool = True
    occupation: float = 0.0
    M: int = 5

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be an integer >= 1")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be 'csv' or 'json'")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if self.profile not in ("suppressed", "flat"):
            raise ValueError("profile must be 'suppressed' or 'flat'")
        if self.t_max <= 0 or self.dt <= 0 or self.dt > self.t_max:
            raise ValueError("need 0 < dt <= t_max")
        for name in _GRIDS:
            g = getattr(self, name)
            if g is None:
                continue
            arr = np.asarray(g, dtype=float)
            if arr.ndim != 1 or arr.size == 0:
                raise ValueError(f"{name} must be non-empty")
            if np.any(np.diff(arr) <= 0):
                raise ValueError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, tuple(float(v) for v in arr))

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        d["params"] = self.params.to_dict()
        for name in _GRIDS:
            if d[name] is not None:
                d[name] = list(d[name])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "params" in data and not isinstance(data["params"], CircuitParams):
            data["params"] = CircuitParams.from_dict(data["params"])
        for name in _GRIDS:
            if data.get(name) is not None:
                data[name] = tuple(data[name])
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class Table:
    name: str
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)


@dataclass
class TaskResult:
    tables: list
    errors: list = field(default_factory=list)
    attempted: int = 0
    reports: dict = field(default_factory=dict)
    failed_checks: int = 0


# ---------------------------------------------------------------- tasks


def _task_modes(cfg: RunConfig) -> TaskResult:
    t = cc_modes.mode_table(cfg.params, cfg.N)
    rows = [[int(n), w, p, g] for n, w, p, g in zip(t.n, t.omega, t.phi, t.g)]
    return TaskResult([Table("modes", ["n", "omega_n", "phi_x0", "g_n"], rows)], attempted=len(rows))


def _task_resonances(cfg: RunConfig) -> TaskResult:
    res = cf_modes.resonances(cfg.params, cfg.N)
    rows = [[r.n, r.nu_n, r.kappa_n, r.residual] for r in res]
    return TaskResult([Table("resonances", ["n", "nu_n", "kappa_n", "residual"], rows)], attempted=len(rows))


def _default_omega_grid(cfg: RunConfig) -> tuple:
    return cfg.omega_grid or tuple(np.linspace(0.5, 4.0 * np.pi, 400))


def _task_green(cfg: RunConfig) -> TaskResult:
    p = cfg.params
    x = p.x0 if cfg.x is None else cfg.x
    xp = p.x0 if cfg.x_prime is None else cfg.x_prime
    closed = p.closed
    cols = ["omega", "re_G", "im_G"] + (["re_G_spectral"] if closed else [])
    rows, errors = [], []
    for w in _default_omega_grid(cfg):
        try:
            g = greens.green_direct(p, x, xp, w)
            row = [w, g.real, g.imag]
            if closed:
                row.append(greens.green_spectral_closed(p, x, xp, w, cfg.N).real)
            rows.append(row)
        except (greens.SingularSystemError, ValueError) as exc:
            errors.append(f"omega={_fmt(w)}: {type(exc).__name__}: {exc}")
    meta = {"x": x, "x_prime": xp}
    return TaskResult([Table("green", cols, rows, meta)], errors, attempted=len(_default_omega_grid(cfg)))


def _task_transmission(cfg: RunConfig) -> TaskResult:
    grid = _default_omega_grid(cfg)
    rows, errors = [], []
    for w in grid:
        try:
            rows.append([w, float(greens.transmission(cfg.params, [w])[0])])
        except (greens.SingularSystemError, ValueError) as exc:
            errors.append(f"omega={_fmt(w)}: {type(exc).__name__}: {exc}")
    return TaskResult([Table("transmission", ["omega", "T2"], rows)], errors, attempted=len(grid))


def _task_dispersive(cfg: RunConfig) -> TaskResult:
    chis = cfg.chi_s_list if cfg.chi_s_list is not None else (cfg.params.chi_s,)
    tables, errors = [], []
    cols = ["n", "g_n", "nu_n", "kappa_n", "delta_n", "purcell_term", "lamb_term", "purcell_partial", "lamb_partial"]
    for c in chis:
        p = cfg.params.replace(chi_s_override=c)
        try:
            s = dispersive.purcell_dispersive(p, cfg.N)
        except dispersive.ResonanceCollisionError as exc:
            errors.append(f"chi_s={_fmt(c)}: {exc}")
            continue
        rows = [list(r) for r in zip(s.n.tolist(), s.g, s.nu, s.kappa, s.delta, s.purcell_term, s.lamb_term,
                                     s.purcell_partial, s.lamb_partial)]
        meta = {"chi_s": c, "tail_exponent": s.purcell_tail.exponent, "tail_verdict": s.purcell_tail.verdict,
                "tail_n_min": s.purcell_tail.n_min}
        tables.append(Table(f"dispersive_chis={_fmt(c)}", cols, rows, meta))
    return TaskResult(tables, errors, attempted=len(chis))


def _task_poles(cfg: RunConfig) -> TaskResult:
    cf = charfn.CharacteristicFunction.from_params(cfg.params, cfg.N)
    rows, errors = [], []
    try:
        q = charfn.qubit_pole(cf)
        rows.append(["qubit", 0, q.p_j.real, q.p_j.imag, q.N_used, q.residual])
    except (charfn.TruncationError, charfn.NoPoleError, charfn.PoleConvergenceError) as exc:
        errors.append(f"qubit: {type(exc).__name__}: {exc}")
    try:
        for n, p in enumerate(charfn.resonator_poles(cf, cfg.M), start=1):
            rows.append(["resonator", n, p.real, p.imag, cf.N, charfn.relative_residual(cf, p)])
    except (charfn.NoPoleError, charfn.PoleConvergenceError) as exc:
        errors.append(f"resonators: {type(exc).__name__}: {exc}")
    return TaskResult([Table("poles", ["kind", "n", "re_p", "im_p", "N_used", "residual"], rows)], errors,
                      attempted=1 + cfg.M)


def _default_sweep_grid(cfg: RunConfig) -> tuple:
    if cfg.omega_j_grid is not None:
        return cfg.omega_j_grid
    nu1 = float(cc_modes.eigenfrequencies(cfg.params, 1)[0])
    return tuple(np.unique(np.append(np.linspace(0.5 * nu1, 2.0 * nu1, 199), nu1)))


def _task_sweep(cfg: RunConfig) -> TaskResult:
    grid = _default_sweep_grid(cfg)
    pts = charfn.sweep_qubit_frequency(cfg.params, grid, N=cfg.N, jobs=cfg.jobs)
    rows, errors = [], []
    for sp in pts:
        rows.append([sp.omega_j, sp.alpha_j, sp.beta_j, sp.lamb_shift, sp.N_used, sp.residual])
        if sp.error:
            errors.append(f"omega_j={_fmt(sp.omega_j)}: {sp.error}")
    cols = ["omega_j", "alpha_j", "beta_j", "lamb_shift", "N_used", "residual"]
    return TaskResult([Table("sweep", cols, rows)], errors, attempted=len(grid))


def _task_mspt(cfg: RunConfig) -> TaskResult:
    grid = cfg.omega_j_grid or (cfg.params.omega_j,)
    rows, errors = [], []
    for wj in grid:
        p = cfg.params.replace(omega_j=wj)
        try:
            spec = hybridize.diagonalize(p, cfg.N)
            state = hybridize.BareState.thermal(cfg.N, cfg.occupation)
            m = hybridize.mspt_correction(spec, p, state, include_vacuum=cfg.include_vacuum)
            rows.append([wj, m.beta_j, m.beta_j_corrected, m.correction, spec.u_j, spec.ambiguous])
        except (hybridize.InstabilityError, ValueError) as exc:
            errors.append(f"omega_j={_fmt(wj)}: {type(exc).__name__}: {exc}")
    meta = {"occupation": cfg.occupation, "include_vacuum": cfg.include_vacuum}
    cols = ["omega_j", "beta_j", "beta_j_corrected", "correction", "u_j", "ambiguous"]
    return TaskResult([Table("mspt", cols, rows, meta)], errors, attempted=len(grid))


def _task_ww(cfg: RunConfig) -> TaskResult:
    spec = ww.WwKernelSpec.from_params(cfg.params, profile=cfg.profile, omega_max=cfg.omega_max)
    n = int(round(cfg.t_max / cfg.dt))
    t = np.arange(n + 1) * cfg.dt
    try:
        c = ww.decay_amplitude(spec, t)
    except ww.KernelDivergenceError as exc:
        report = dict(exc.report)
        report["K0"] = ww.kernel_at_zero(spec)
        report["K0_doubled"] = ww.kernel_at_zero(spec, 2 * cfg.omega_max)
        return TaskResult([], [f"{type(exc).__name__}: kernel diverges for profile {cfg.profile}"], attempted=1,
                          reports={"ww_divergence": report})
    pole = ww.laplace_pole(spec)
    meta = {"laplace_pole_re": pole.real, "laplace_pole_im": pole.imag, "markov_rate": ww.markov_rate(spec)}
    rows = [[ti, ci.real, ci.imag, abs(ci) ** 2] for ti, ci in zip(t, c)]
    return TaskResult([Table("ww", ["t", "re_c", "im_c", "abs_c2"], rows, meta)], attempted=1)


def validation_checks() -> list[tuple[str, float, float, float]]:
    """Cross-module oracle checks as (name, value, reference, tolerance)."""
    out = []
    bare = CircuitParams(chi_g=0.0, chi_R=0.0, chi_L=0.0)
    w = cc_modes.eigenfrequencies(bare, 1000)
    out.append(("bare_spectrum_max_error", float(np.max(np.abs(w - np.pi * np.arange(1, 1001)))), 0.0, 1e-10))
    cap = CircuitParams(chi_g=0.1, chi_j=0.05)
    cap = cap.replace(omega_j=float(cc_modes.eigenfrequencies(cap, 1)[0]))
    m1 = cc_modes.modes(cap, 1)[0]
    out.append(("g1_over_nu1", m1.g_n / m1.omega_n, 0.1033, 0.1033 * 0.01))
    closed = CircuitParams(chi_g=0.1, chi_j=0.05, chi_R=0.0, chi_L=0.0)
    gd = greens.green_direct(closed, 0.0, 0.0, 2.0).real
    gs = greens.green_spectral_closed(closed, 0.0, 0.0, 2.0, 10000).real
    out.append(("green_spectral_vs_direct", gs, gd, 1e-4))
    p = CircuitParams(chi_g=0.05, omega_j=2.5)
    hb = hybridize.diagonalize(p, 200).beta_j
    cb = charfn.qubit_pole(charfn.CharacteristicFunction.from_params(p, 200, lossless=True, tail=False),
                           escalate=False).beta_j
    out.append(("hybridize_vs_charfn_beta_j", hb, cb, 1e-6))
    free = CircuitParams(chi_g=0.0, omega_j=2.0, epsilon=0.1)
    mb = hybridize.mspt_correction(hybridize.diagonalize(free, 10), free).beta_j_corrected
    out.append(("duffing_limit", mb, 2.0 * (1 - np.sqrt(2) * 0.1 / 4), 1e-12))
    spec = ww.WwKernelSpec(gamma=2 / 3, chi_s=1 / 30, omega_j=3.0, profile="flat")
    out.append(("markov_rate_arithmetic", ww.markov_rate(spec), 0.2, 1e-12))
    out.append(("flat_K0_doubling_ratio", ww.kernel_at_zero(spec, 2e3) / ww.kernel_at_zero(spec, 1e3), 4.0, 0.04))
    return out


def _task_validate(cfg: RunConfig) -> TaskResult:
    rows, failed = [], 0
    for name, value, ref, tol in validation_checks():
        ok = bool(abs(value - ref) <= tol)
        failed += not ok
        rows.append([name, value, ref, tol, ok])
    return TaskResult([Table("validate", ["check", "value", "reference", "tolerance", "passed"], rows)],
                      attempted=len(rows), failed_checks=failed)


_DISPATCH = {
    "modes": _task_modes,
    "resonances": _task_resonances,
    "green": _task_green,
    "transmission": _task_transmission,
    "dispersive": _task_dispersive,
    "poles": _task_poles,
    "sweep": _task_sweep,
    "mspt": _task_mspt,
    "ww": _task_ww,
    "validate": _task_validate,
}


# ---------------------------------------------------------------- output


def _header(cfg: RunConfig, table: Table) -> list[str]:
    lines = [f"# cutoffqed={__version__}", f"# task={cfg.task}", f"# table={table.name}", f"# N={cfg.N}"]
    lines += [f"# params.{k}={_fmt(v) if v is not None else 'none'}" for k, v in cfg.params.to_dict().items()]
    lines += [f"# derived.gamma={_fmt(cfg.params.gamma)}", f"# derived.chi_s={_fmt(cfg.params.chi_s)}"]
    lines += [f"# tol.{k}={_fmt(v)}" for k, v in TOLERANCES.items()]
    lines += [f"# meta.{k}={_fmt(v)}" for k, v in table.meta.items()]
    return lines


def render_csv(cfg: RunConfig, table: Table) -> str:
    buf = io.StringIO()
    for line in _header(cfg, table):
        buf.write(line + "\n")
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else None
    return v


def render_json(cfg: RunConfig, table: Table) -> str:
    doc = {
        "version": __version__,
        "config": cfg.to_dict(),
        "tolerances": TOLERANCES,
        "table": table.name,
        "meta": {k: _jsonable(v) for k, v in table.meta.items()},
        "columns": table.columns,
        "rows": [[_jsonable(v) for v in row] for row in table.rows],
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute one task; returns the process exit status."""
    stdout = sys.stdout if stdout is None else stdout
    result = _DISPATCH[cfg.task](cfg)
    out_dir = Path(cfg.output) if cfg.output else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        for table in result.tables:
            if cfg.format == "csv":
                (out_dir / f"{table.name}.csv").write_text(render_csv(cfg, table))
            (out_dir / f"{table.name}.json").write_text(render_json(cfg, table))
        for name, report in result.reports.items():
            (out_dir / f"{name}.json").write_text(json.dumps(report, sort_keys=True, indent=1, default=_jsonable))
        log = out_dir / f"{cfg.task}.errors.log"
        if result.errors:
            log.write_text("\n".join(result.errors) + "\n")
        elif log.exists():
            log.unlink()
    else:
        for table in result.tables:
            stdout.write(render_csv(cfg, table) if cfg.format == "csv" else render_json(cfg, table) + "\n")
        for name, report in result.reports.items():
            stdout.write(json.dumps({name: report}, sort_keys=True, default=_jsonable) + "\n")
        for line in result.errors:
            print(f"error: {line}", file=sys.stderr)
    if result.failed_checks:
        return 1
    succeeded = sum(len(t.rows) for t in result.tables) + len(result.reports)
    if result.attempted and succeeded == 0:
        return 1
    return 0


# ---------------------------------------------------------------- parsing

_PARAM_FLAGS = {
    "chi_R": "--chi-R",
    "chi_L": "--chi-L",
    "chi_j": "--chi-j",
    "chi_g": "--chi-g",
    "x0": "--x0",
    "omega_j": "--omega-j",
    "epsilon": "--epsilon",
    "chi_s_override": "--chi-s-override",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON run config (default: ${CONFIG_ENV})")
    common.add_argument("--out", dest="output", help="output directory; stdout if omitted")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--jobs", type=int)
    common.add_argument("--N", type=int, help="mode truncation")
    for name, flag in _PARAM_FLAGS.items():
        common.add_argument(flag, dest=f"p_{name}", type=float)
    common.add_argument("--omega-j-grid", type=parse_grid, help="'a,b,c' or 'linspace:start:stop:num'")
    common.add_argument("--omega-grid", type=parse_grid)
    common.add_argument("--chi-s-list", type=parse_grid)
    common.add_argument("--x", type=float)
    common.add_argument("--x-prime", type=float)
    common.add_argument("--profile", choices=("suppressed", "flat"))
    common.add_argument("--t-max", type=float)
    common.add_argument("--dt", type=float)
    common.add_argument("--omega-max", type=float)
    common.add_argument("--include-vacuum", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--occupation", type=float)
    common.add_argument("--M", type=int, help="number of resonator poles")

    parser = argparse.ArgumentParser(prog="cutoffqed", description="Multimode circuit QED with a natural cutoff.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="task", required=True)
    helps = {
        "modes": "closed-resonator modes and couplings",
        "resonances": "open-resonator complex resonances",
        "green": "Green's function on a frequency grid",
        "transmission": "two-port power transmission",
        "dispersive": "dispersive Purcell and Lamb term tables",
        "poles": "qubit and resonator poles of the characteristic function",
        "sweep": "qubit pole across omega_j",
        "mspt": "anharmonic correction to the qubit-like frequency",
        "ww": "spontaneous-emission amplitude",
        "validate": "cross-module oracle checks",
    }
    for task in TASKS:
        sub.add_parser(task, parents=[common], help=helps[task])
    return parser


def config_from_args(ns: argparse.Namespace, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    path = ns.config or environ.get(CONFIG_ENV)
    base = RunConfig.from_json(Path(path).read_text()).to_dict() if path else RunConfig().to_dict()
    base["task"] = ns.task
    params = dict(base["params"])
    for name in _PARAM_FLAGS:
        v = getattr(ns, f"p_{name}")
        if v is not None:
            params[name] = v
    base["params"] = params
    for key in ("output", "format", "jobs", "N", "omega_j_grid", "omega_grid", "chi_s_list", "x", "x_prime",
                "profile", "t_max", "dt", "omega_max", "include_vacuum", "occupation", "M"):
        v = getattr(ns, key)
        if v is not None:
            base[key] = v
    return RunConfig.from_dict(base)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    return run(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
