"""Command-line scenario runner.

``chiralfiber rates|excite|flux|spectra|check --config FILE --out FILE``

Every data subcommand writes one CSV file: a block of ``#`` metadata lines
(tool version, config hash, radiation backend) followed by a header row and
numbers printed with 17 significant digits.  Output is assembled in sweep
order, so the bytes depend only on the configuration.

Exit codes: 0 success, 1 failed check, 2 configuration error, 3 numerical
failure.  A failed run leaves no partial output file behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate

from . import __version__
from .config import ConfigError, ScenarioConfig, load
from .coupling import (Channel, CouplingRouteMismatch, UndefinedAsymmetry, rate_bundle)
from .dynamics import (GridMismatchError, IntegrationError, analytic_single_photon,
                       default_step, default_t_end, effective_excitation_time, make_grid,
                       solve, solve_single_photon)
from .fiber_modes import (SINGLE_MODE_CUTOFF, ModeSolution, ModeSolverError,
                          mode_profile_quasicircular, solve_he11)
from .fluxes import flux
from .pulses import Fock, PulseSpec, Shape, envelope
from .radiation import RadiationQuadratureError
from .specfun import DomainError

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
NUMERICAL_ERRORS = (ModeSolverError, IntegrationError, RadiationQuadratureError,
                    CouplingRouteMismatch, GridMismatchError, UndefinedAsymmetry,
                    DomainError, ArithmeticError)
SIGN = {1: "+", -1: "-"}


class NumericalFailure(RuntimeError):
    pass


# ------------------------------------------------------------------ setup

def mode_solution(cfg: ScenarioConfig, corrupt_normalization: float | None = None) -> ModeSolution:
    sol = solve_he11(cfg.fiber, cfg.atom.omega)
    if corrupt_normalization is not None:
        # test hook: scale the cached profile amplitude
        sol.__dict__["amplitude"] = sol.amplitude * corrupt_normalization
    return sol


def rates_at(cfg: ScenarioConfig, sol: ModeSolution, r_over_a: float):
    return rate_bundle(cfg.atom_at(r_over_a), cfg.fiber, sol, phi_pol=cfg.phi_pol,
                       backend=cfg.gamma_r)


def channel_at(cfg: ScenarioConfig, sol: ModeSolution, r_over_a: float, f: int) -> Channel:
    if not cfg.coupled:
        # zero dipole: the atom is transparent and never excited
        return Channel(gamma=1.0, G_L=0j, gamma_fw=0.0, gamma_bw=0.0, gamma_r=1.0)
    return rates_at(cfg, sol, r_over_a).channel(f)


def _cases(cfg: ScenarioConfig):
    return [(r, f) for r in cfg.positions for f in cfg.directions]


def _tag(r, f, extra=""):
    return f"r/a={r:.17g}:f={SIGN[f]}{extra}"


def common_grid(cfg: ScenarioConfig, channels) -> np.ndarray:
    """One time grid shared by every case, fine and long enough for all of them."""
    pulse = cfg.pulse
    slow = min(channels, key=lambda c: c.gamma)
    t_end = cfg.t_stop if cfg.t_stop is not None else max(default_t_end(c, pulse) for c in channels)
    step = cfg.t_step if cfg.t_step is not None else min(default_step(c, pulse) for c in channels)
    t = make_grid(slow, pulse, t_end=t_end, step=step)
    if cfg.t_start is not None:
        if cfg.t_start < t[0]:
            n = int(np.ceil((t[0] - cfg.t_start) / step))
            t = np.concatenate([np.linspace(cfg.t_start, t[0], n + 1)[:-1], t])
        else:
            t = t[t >= cfg.t_start]
    return t


def _pool_map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


# ------------------------------------------------------------------ tables

@dataclass
class Table:
    columns: list
    rows: np.ndarray


def _rates_point(job):
    cfg, sol, r = job
    rb = rates_at(cfg, sol, r)
    row = [r, rb.gamma]
    for f in cfg.directions:
        row.append(rb.gamma_L(f))
    for f in cfg.directions:
        row.append(rb.eta_L(f))
    row.append(rb.eta_asym)
    return row


def rates_table(cfg: ScenarioConfig, sol: ModeSolution | None = None) -> Table:
    if not cfg.coupled:
        raise ConfigError(f"{cfg.source}: atom.dipole: rates need a nonzero dipole")
    sol = mode_solution(cfg) if sol is None else sol
    cols = ["r_over_a", "gamma_over_gamma0"]
    cols += [f"gamma_L{SIGN[f]}_over_gamma0" for f in cfg.directions]
    cols += [f"eta_L{SIGN[f]}" for f in cfg.directions]
    cols.append("eta_asym")
    rows = _pool_map(_rates_point, [(cfg, sol, float(r)) for r in cfg.radial], cfg.workers)
    return Table(cols, np.array(rows, float).reshape(-1, len(cols)))


def _dynamics_job(job):
    ch, pulse, t, want_flux = job
    dyn = solve(ch, pulse, t)
    if not want_flux:
        return dyn.excited
    fx = flux(dyn)
    return np.vstack([fx.I_T, fx.I_R, fx.I_rad, fx.residual])


def _time_series(cfg: ScenarioConfig, sol, want_flux: bool):
    cases = _cases(cfg)
    chans = [channel_at(cfg, sol, r, f) for r, f in cases]
    t = common_grid(cfg, chans)
    jobs = [(ch, cfg.pulse, t, want_flux) for ch in chans]
    return cases, t, _pool_map(_dynamics_job, jobs, cfg.workers)


def excite_table(cfg: ScenarioConfig, sol: ModeSolution | None = None) -> Table:
    sol = mode_solution(cfg) if sol is None else sol
    cases, t, series = _time_series(cfg, sol, False)
    cols = ["t_gamma0", "F2"] + [f"P@{_tag(r, f)}" for r, f in cases]
    data = [t, np.abs(envelope(cfg.pulse, t)) ** 2] + list(series)
    return Table(cols, np.column_stack(data))


def flux_table(cfg: ScenarioConfig, sol: ModeSolution | None = None) -> Table:
    sol = mode_solution(cfg) if sol is None else sol
    cases, t, series = _time_series(cfg, sol, True)
    photons = cfg.pulse.statistics.mean_photons
    cols = ["t_gamma0", "incident"]
    data = [t, photons * np.abs(envelope(cfg.pulse, t)) ** 2]
    for (r, f), block in zip(cases, series):
        cols += [f"{name}@{_tag(r, f)}" for name in ("I_T", "I_R", "I_rad", "residual")]
        data += list(block)
    return Table(cols, np.column_stack(data))


def _spectrum_job(job):
    ch, pulse = job
    fx = flux(solve(ch, pulse))
    return fx.P_T, fx.P_R, fx.P_rad


def spectra_table(cfg: ScenarioConfig, sol: ModeSolution | None = None) -> Table:
    sol = mode_solution(cfg) if sol is None else sol
    p = cfg.pulse
    combos = [(r, f, s) for r, f in _cases(cfg) for s in cfg.shapes]
    chans = {(r, f): channel_at(cfg, sol, r, f) for r, f in _cases(cfg)}
    jobs = [(chans[r, f], PulseSpec(s, p.T, float(D), p.statistics))
            for D in cfg.detunings for r, f, s in combos]
    vals = np.array(_pool_map(_spectrum_job, jobs, cfg.workers), float)
    cols = ["Delta_over_gamma0"]
    for r, f, s in combos:
        cols += [f"{name}@{_tag(r, f, ':shape=' + s.value)}" for name in ("P_T", "P_R", "P_rad")]
    rows = np.column_stack([cfg.detunings, vals.reshape(cfg.detunings.size, -1)]) \
        if cfg.detunings.size else np.empty((0, len(cols)))
    return Table(cols, rows)


TABLES = {"rates": rates_table, "excite": excite_table, "flux": flux_table,
          "spectra": spectra_table}


# ------------------------------------------------------------------ output

def format_csv(cfg: ScenarioConfig, command: str, table: Table) -> str:
    buf = io.StringIO()
    buf.write(f"# tool: chiralfiber {__version__}\n")
    buf.write(f"# command: {command}\n")
    buf.write(f"# config_sha256: {cfg.digest()}\n")
    buf.write(f"# gamma_r_backend: {cfg.gamma_r}\n")
    buf.write(f"# direction: {cfg.direction}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([format(float(x), ".17g") for x in row])
    return buf.getvalue()


def write_atomic(path, text: str):
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_table(cfg: ScenarioConfig, command: str, out=None) -> Path:
    table = TABLES[command](cfg)
    if table.rows.size and not np.all(np.isfinite(table.rows)):
        raise NumericalFailure(f"{command}: non-finite values in output")
    path = Path(out if out is not None else cfg.outputs[command])
    try:
        write_atomic(path, format_csv(cfg, command, table))
    except BaseException:
        if path.exists():
            path.unlink()
        raise
    return path


def cmd_rates(cfg, out=None):
    return run_table(cfg, "rates", out)


def cmd_excite(cfg, out=None):
    return run_table(cfg, "excite", out)


def cmd_flux(cfg, out=None):
    return run_table(cfg, "flux", out)


def cmd_spectra(cfg, out=None):
    return run_table(cfg, "spectra", out)


# ------------------------------------------------------------------ checks

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _profile_power(sol: ModeSolution) -> float:
    a, q = sol.fiber.a, sol.q

    def dens(r):
        e = mode_profile_quasicircular(sol, r)
        n2 = sol.fiber.index(r) ** 2
        return 2 * np.pi * n2 * sum(abs(c) ** 2 for c in e) * r

    inner = integrate.quad(dens, 0, a, epsabs=0, epsrel=1e-12, limit=200)[0]
    outer = integrate.quad(dens, a, a + 40 / q, epsabs=0, epsrel=1e-12, limit=400)[0]
    return inner + outer


def _check_suite(cfg: ScenarioConfig, sol: ModeSolution, ref_sol: ModeSolution, ref_cfg):
    r = cfg.positions[0]
    p = cfg.pulse
    one = PulseSpec(p.shape, p.T, p.detuning, Fock(1), p.table)

    yield "single-mode", lambda: (sol.V < SINGLE_MODE_CUTOFF, f"V = {sol.V:.6f}")

    def norm():
        val = _profile_power(sol)
        return abs(val - 1) < 1e-8, f"mode power = {val:.12g}"
    yield "mode-normalization", norm

    rb = rates_at(cfg, sol, r) if cfg.coupled else None

    def rate_sum():
        total = rb.gamma_r + rb.gamma_g_plus + rb.gamma_g_minus
        ok = _rel(total, rb.gamma) < 1e-12 and all(
            rb.gamma_L(f) <= rb.gamma_g(f) * (1 + 1e-12) for f in (1, -1))
        return ok, f"gamma = {rb.gamma:.10g}, gamma_r = {rb.gamma_r:.10g}"
    if rb is not None:
        yield "rate-decomposition", rate_sum

    def routes():
        worst = 0.0
        for f in (1, -1):
            ch = rb.channel(f)
            ode = solve_single_photon(ch, one)
            ana = analytic_single_photon(ch, one, ode.t)
            peak = np.max(ana.P)
            i = int(np.argmax(ana.P))
            worst = max(worst, abs(ode.P[i] - ana.P[i]) / peak,
                        abs(ode.Q[i] - ana.Q[i]) / np.sqrt(peak))
            mask = np.ones(ode.t.size, bool)
            mask[i] = False
            if np.max(np.abs(ode.P - ana.P)[mask]) > 1e-8 or np.max(np.abs(ode.Q - ana.Q)[mask]) > 1e-8:
                return False, "off-peak deviation above 1e-8"
        return worst < 1e-6, f"peak relative deviation {worst:.2e}"
    if rb is not None and p.shape is not Shape.CUSTOM:
        yield "route-equivalence", routes

    def identity():
        worst = 0.0
        for f in (1, -1):
            d = solve_single_photon(rb.channel(f), one)
            worst = max(worst, np.max(np.abs(d.P - np.abs(d.Q) ** 2)))
        return worst < 1e-10, f"max |P - |Q|^2| = {worst:.2e}"
    if rb is not None:
        yield "P-equals-Q2", identity

    def conservation():
        worst_res = worst_budget = 0.0
        for f in cfg.directions:
            fx = flux(solve(channel_at(cfg, sol, r, f), p))
            worst_res = max(worst_res, np.max(np.abs(fx.residual)) / np.max(fx.incident))
            worst_budget = max(worst_budget, abs(fx.budget - fx.photons))
        return (worst_res < 1e-6 and worst_budget < 1e-4,
                f"residual/peak = {worst_res:.2e}, |budget - N| = {worst_budget:.2e}")
    yield "energy-and-probability", conservation

    def optimal():
        ch = rb.channel(cfg.directions[0])
        d = solve_single_photon(ch, PulseSpec(Shape.RISING, 1 / ch.gamma, 0.0))
        i = int(np.argmax(d.P))
        dev = _rel(d.P[i], ch.eta_L)
        return dev < 1e-9 and abs(d.t[i]) < 1e-12, f"peak {d.P[i]:.12g} vs eta_L {ch.eta_L:.12g}"
    if rb is not None:
        yield "optimal-excitation", optimal

    def exp_pair():
        ch = rb.channel(cfg.directions[0])
        res = {}
        for s in (Shape.RISING, Shape.DECAYING):
            d = solve_single_photon(ch, PulseSpec(s, p.T, p.detuning))
            res[s] = (d.summary().tau_e, flux(d))
        tau = effective_excitation_time(ch, p.T, p.detuning)
        dev = max(_rel(res[s][0], tau) for s in res)
        dPT = abs(res[Shape.RISING][1].P_T - res[Shape.DECAYING][1].P_T)
        dPR = abs(res[Shape.RISING][1].P_R - res[Shape.DECAYING][1].P_R)
        return dev < 1e-6 and max(dPT, dPR) < 1e-4, f"tau_e dev {dev:.2e}, |dP_T| {dPT:.2e}"
    if rb is not None:
        yield "exponential-pair", exp_pair

    def asymmetry():
        dp = solve_single_photon(rb.channel(1), one)
        dm = solve_single_photon(rb.channel(-1), one, dp.t)
        s = dp.P + dm.P
        keep = s > 1e-3 * s.max()
        eta = (dp.P - dm.P)[keep] / s[keep]
        if rb.gamma_L_plus + rb.gamma_L_minus == 0:
            return True, "no guided coupling"
        ok = np.std(eta) < 1e-8 and np.max(np.abs(eta - rb.eta_asym)) < 1e-8
        return ok, f"eta_asym = {rb.eta_asym:.10g}, spread {np.ptp(eta):.2e}"
    if rb is not None and p.shape is not Shape.CUSTOM:
        yield "asymmetry-constant", asymmetry

    def reflection():
        dp = solve_single_photon(rb.channel(1), one)
        dm = solve_single_photon(rb.channel(-1), one, dp.t)
        fp, fm = flux(dp), flux(dm)
        scale = max(np.max(fp.I_R), 1e-300)
        dev = max(np.max(np.abs(fp.I_R - fm.I_R)) / scale, _rel(fp.P_R, fm.P_R))
        return dev < 1e-9, f"relative I_R/P_R difference {dev:.2e}"
    if rb is not None:
        yield "reflection-invariance", reflection

    def symmetry():
        D = p.detuning if p.detuning else 1.0
        ch = rb.channel(cfg.directions[0])
        a = flux(solve_single_photon(ch, PulseSpec(p.shape, p.T, D, Fock(1), p.table)))
        b = flux(solve_single_photon(ch, PulseSpec(p.shape, p.T, -D, Fock(1), p.table)))
        dev = max(abs(a.P_R - b.P_R), abs(a.P_T - b.P_T))
        return dev < 1e-8, f"max difference {dev:.2e} at Delta = +-{abs(D):g}"
    if rb is not None and p.shape is not Shape.CUSTOM:
        yield "detuning-symmetry", symmetry

    def bands():
        ch = rates_at(ref_cfg, ref_sol, 1.0).channel(1)
        g = analytic_single_photon(ch, PulseSpec(Shape.GAUSSIAN, 1.0)).P.max()
        e = analytic_single_photon(ch, PulseSpec(Shape.RISING, 1.0)).P.max()
        ok = 0.11 <= g <= 0.15 and 0.18 <= e <= 0.22
        return ok, f"gaussian peak {g:.4f}, rising peak {e:.4f}"
    yield "reference-figure-bands", bands


def run_checks(cfg: ScenarioConfig | None = None, corrupt_normalization: float | None = None):
    """Evaluate the invariant suite; returns a list of :class:`CheckResult`."""
    cfg = load() if cfg is None else cfg
    ref_cfg = load().with_overrides(gamma_r="exact")
    sol = mode_solution(cfg, corrupt_normalization)
    ref_sol = mode_solution(ref_cfg, corrupt_normalization)
    out = []
    for name, fn in _check_suite(cfg, sol, ref_sol, ref_cfg):
        try:
            ok, detail = fn()
        except NUMERICAL_ERRORS + (ValueError,) as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out


def format_report(results) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}" for r in results]
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"


def cmd_check(cfg=None, corrupt_normalization=None, stream=None) -> int:
    results = run_checks(cfg, corrupt_normalization)
    (stream or sys.stdout).write(format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


# ------------------------------------------------------------------ entry

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chiralfiber", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "rates": "decay rates and coupling efficiencies against r/a",
        "excite": "excitation probability against time",
        "flux": "transmitted, reflected and radiated fluxes against time",
        "spectra": "transmission and reflection probabilities against detuning",
        "check": "run the invariant suite and print a pass/fail table",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH", help="YAML scenario file (defaults if omitted)")
        p.add_argument("--out", metavar="PATH", help="output CSV (overrides run.output)")
        p.add_argument("--gamma-r", choices=["exact", "approx"], help="radiation-rate backend")
        p.add_argument("--direction", choices=["+", "-", "both"], help="probe direction")
        if name == "check":
            p.add_argument("--corrupt-normalization", type=float, default=None,
                           help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args.config)
        if args.gamma_r or args.direction:
            cfg = cfg.with_overrides(gamma_r=args.gamma_r, direction=args.direction)
        if args.command == "check":
            return cmd_check(cfg, args.corrupt_normalization)
        path = run_table(cfg, args.command, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS + (NumericalFailure,) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
