"""Scenario configuration: a YAML file with unit-suffixed keys.

Every physical quantity carries its unit in the key name (``a_nm``,
``T_over_tau0``, ``Delta_over_gamma0``; ``tau0 = 1/gamma0``).  Unknown keys
and invalid values are rejected with the file name and line of the offending
entry.  Relative paths inside a file (custom pulse table, outputs) are taken
relative to that file.  Missing keys take the defaults below, which describe a 200 nm radius
silica nanofiber probed at 852 nm.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .coupling import AtomSpec
from .fiber_modes import SINGLE_MODE_CUTOFF, FiberSpec, omega_from_wavelength, v_number
from .pulses import Coherent, CustomTable, Fock, PulseSpec, Shape

_S = float(1 / np.sqrt(2))

DEFAULTS = {
    "fiber": {"a_nm": 200.0, "n1": 1.45, "n2": 1.0},
    "atom": {
        "lambda0_nm": 852.0,
        "gamma0_over_2pi_MHz": 5.2,
        # (i x - z)/sqrt(2)
        "dipole": {"x_re": 0.0, "x_im": _S, "y_re": 0.0, "y_im": 0.0, "z_re": -_S, "z_im": 0.0},
        "r_over_a": 1.0,
        "phi_rad": 0.0,
        "z_nm": 0.0,
    },
    "pulse": {
        "shape": "gaussian",
        "T_over_tau0": 1.0,
        "Delta_over_gamma0": 0.0,
        "statistics": {"kind": "fock", "n": 1},
        "table_path": None,
    },
    "run": {
        "direction": "+",
        "phi_pol_rad": 0.0,
        "gamma_r": "exact",
        "positions_over_a": None,
        "radial_sweep": {"start_over_a": 1.0, "stop_over_a": 3.0, "num": 21},
        "detuning_sweep": {"start_over_gamma0": -5.0, "stop_over_gamma0": 5.0, "num": 21},
        "shapes": None,
        "time_grid": {"start_over_tau0": None, "stop_over_tau0": None, "step_over_tau0": None},
        "workers": 1,
        "output": {"rates": "rates.csv", "excite": "excite.csv",
                   "flux": "flux.csv", "spectra": "spectra.csv"},
    },
}

DIRECTIONS = {"+": (1,), "-": (-1,), "both": (1, -1)}
BACKENDS = ("exact", "approx")
# keys whose value is itself a mapping of known keys
_NESTED = {("atom", "dipole"), ("pulse", "statistics"), ("run", "radial_sweep"),
           ("run", "detuning_sweep"), ("run", "time_grid"), ("run", "output")}
_STAT_KEYS = {"kind", "n", "alpha_re", "alpha_im"}


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names file and line."""


# ------------------------------------------------------------ YAML + lines

def _line_map(node, path=(), out=None):
    """Map key paths to 1-based line numbers from a composed YAML node tree."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = path + (k.value,)
            out[key] = k.start_mark.line + 1
            _line_map(v, key, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            out[path + (i,)] = v.start_mark.line + 1
            _line_map(v, path + (i,), out)
    return out


class _Ctx:
    def __init__(self, source: str, lines: dict):
        self.source = source
        self.lines = lines

    def fail(self, path, msg):
        line = None
        p = tuple(path)
        while p and line is None:
            line = self.lines.get(p)
            p = p[:-1]
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: {'.'.join(str(x) for x in path)}: {msg}")

    def number(self, tree, path, positive=False, nonneg=False, minimum=None):
        val = _get(tree, path)
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(path, f"expected a number, got {val!r}")
        val = float(val)
        if not np.isfinite(val):
            self.fail(path, "must be finite")
        if positive and val <= 0:
            self.fail(path, f"must be positive, got {val}")
        if nonneg and val < 0:
            self.fail(path, f"must be non-negative, got {val}")
        if minimum is not None and val < minimum:
            self.fail(path, f"must be >= {minimum}, got {val}")
        return val

    def integer(self, tree, path, minimum=0):
        val = _get(tree, path)
        if isinstance(val, bool) or not isinstance(val, int):
            self.fail(path, f"expected an integer, got {val!r}")
        if val < minimum:
            self.fail(path, f"must be >= {minimum}, got {val}")
        return int(val)


def _get(tree, path):
    for k in path:
        tree = tree[k]
    return tree


def _merge(ctx: _Ctx, base: dict, user, path=()):
    if user is None:
        return base
    if not isinstance(user, dict):
        ctx.fail(path, "expected a mapping")
    out = copy.deepcopy(base)
    for k, v in user.items():
        key = path + (k,)
        if k not in base:
            if path == ("pulse", "statistics") and k in _STAT_KEYS:
                out[k] = v
                continue
            ctx.fail(key, f"unknown key (allowed: {', '.join(sorted(base))})")
        if key in _NESTED or (len(path) == 0):
            out[k] = _merge(ctx, base[k], v, key)
        else:
            out[k] = v
    return out


# ------------------------------------------------------------ scenario type

@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario.  ``raw`` is the fully resolved key tree."""

    fiber: FiberSpec
    atom: AtomSpec
    pulse: PulseSpec
    directions: tuple
    phi_pol: float
    gamma_r: str
    positions: tuple
    radial: np.ndarray
    detunings: np.ndarray
    shapes: tuple
    t_start: float | None
    t_stop: float | None
    t_step: float | None
    workers: int
    outputs: dict
    coupled: bool
    raw: dict
    source: str = "<defaults>"

    @property
    def direction(self) -> str:
        return {(1,): "+", (-1,): "-", (1, -1): "both"}[self.directions]

    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def atom_at(self, r_over_a: float) -> AtomSpec:
        return AtomSpec(self.atom.wavelength, self.atom.gamma0, self.atom.dipole,
                        r=r_over_a * self.fiber.a, phi=self.atom.phi, z=self.atom.z)

    def with_overrides(self, *, gamma_r=None, direction=None) -> "ScenarioConfig":
        raw = copy.deepcopy(self.raw)
        if gamma_r is not None:
            raw["run"]["gamma_r"] = gamma_r
        if direction is not None:
            raw["run"]["direction"] = direction
        return from_dict(raw, self.source, self._lines)

    _lines = None


def _sweep(ctx, tree, path, lo_key, hi_key):
    node = _get(tree, path)
    if isinstance(node, dict) and "values" in node:
        vals = node["values"]
        if not isinstance(vals, list):
            ctx.fail(path + ("values",), "expected a list")
        return np.array([ctx.number(tree, path + ("values", i)) for i in range(len(vals))])
    lo = ctx.number(tree, path + (lo_key,))
    hi = ctx.number(tree, path + (hi_key,))
    num = ctx.integer(tree, path + ("num",), minimum=0)
    return np.linspace(lo, hi, num)


def from_dict(user: dict | None, source: str = "<defaults>", lines: dict | None = None) -> ScenarioConfig:
    """Validate a (possibly partial) key tree against the defaults."""
    ctx = _Ctx(source, lines or {})
    base = copy.deepcopy(DEFAULTS)
    for sweep in ("radial_sweep", "detuning_sweep"):
        # an explicit list replaces the range form
        if isinstance(user, dict) and isinstance(user.get("run"), dict):
            node = user["run"].get(sweep)
            if isinstance(node, dict) and "values" in node:
                base["run"][sweep] = {"values": []}
    tree = _merge(ctx, base, user)

    a = ctx.number(tree, ("fiber", "a_nm"), positive=True) * 1e-9
    n2 = ctx.number(tree, ("fiber", "n2"), minimum=1.0)
    n1 = ctx.number(tree, ("fiber", "n1"))
    if n1 <= n2:
        ctx.fail(("fiber", "n1"), f"core index must exceed cladding index n2={n2}")
    fiber = FiberSpec(a, n1, n2)

    lam = ctx.number(tree, ("atom", "lambda0_nm"), positive=True) * 1e-9
    V = v_number(fiber, omega_from_wavelength(lam))
    if V >= SINGLE_MODE_CUTOFF:
        ctx.fail(("fiber", "a_nm"), f"V = {V:.6g} >= {SINGLE_MODE_CUTOFF:.6g}; fiber is not single-mode")
    g0 = 2 * np.pi * 1e6 * ctx.number(tree, ("atom", "gamma0_over_2pi_MHz"), positive=True)
    dp = ("atom", "dipole")
    comp = {}
    for c in "xyz":
        comp[c] = (ctx.number(tree, dp + (f"{c}_re",)) + 1j * ctx.number(tree, dp + (f"{c}_im",)))
    d = np.array([comp["x"], comp["y"], comp["z"]])
    norm = np.sqrt(np.vdot(d, d).real)
    coupled = norm > 0
    d = d / norm if coupled else np.array([1.0, 0.0, 0.0])
    r_over_a = ctx.number(tree, ("atom", "r_over_a"))
    if r_over_a < 1:
        ctx.fail(("atom", "r_over_a"), f"atom must sit outside the fiber (r/a >= 1), got {r_over_a}")
    atom = AtomSpec(lam, g0, tuple(d), r=r_over_a * a,
                    phi=ctx.number(tree, ("atom", "phi_rad")),
                    z=ctx.number(tree, ("atom", "z_nm")) * 1e-9)

    pulse = _pulse(ctx, tree, source)

    run = ("run",)
    direction = _get(tree, run + ("direction",))
    if direction not in DIRECTIONS:
        ctx.fail(run + ("direction",), f"expected one of + - both, got {direction!r}")
    backend = _get(tree, run + ("gamma_r",))
    if backend not in BACKENDS:
        ctx.fail(run + ("gamma_r",), f"expected exact or approx, got {backend!r}")
    positions = _get(tree, run + ("positions_over_a",))
    if positions is None:
        positions = (r_over_a,)
    else:
        if not isinstance(positions, list) or not positions:
            ctx.fail(run + ("positions_over_a",), "expected a non-empty list")
        positions = tuple(ctx.number(tree, run + ("positions_over_a", i), minimum=1.0)
                          for i in range(len(positions)))
    radial = _sweep(ctx, tree, run + ("radial_sweep",), "start_over_a", "stop_over_a")
    if radial.size and radial.min() < 1:
        ctx.fail(run + ("radial_sweep",), "radial positions must satisfy r/a >= 1")
    detunings = _sweep(ctx, tree, run + ("detuning_sweep",), "start_over_gamma0", "stop_over_gamma0")
    shapes = _get(tree, run + ("shapes",))
    if shapes is None:
        shapes = (pulse.shape,)
    else:
        if not isinstance(shapes, list) or not shapes:
            ctx.fail(run + ("shapes",), "expected a non-empty list of shapes")
        out = []
        for i, s in enumerate(shapes):
            if s not in ("gaussian", "rising", "decaying"):
                ctx.fail(run + ("shapes", i), f"spectra shapes must be analytic, got {s!r}")
            out.append(Shape(s))
        shapes = tuple(out)
    tg = run + ("time_grid",)
    t_start = t_stop = t_step = None
    if _get(tree, tg + ("start_over_tau0",)) is not None:
        t_start = ctx.number(tree, tg + ("start_over_tau0",))
    if _get(tree, tg + ("stop_over_tau0",)) is not None:
        t_stop = ctx.number(tree, tg + ("stop_over_tau0",))
    if _get(tree, tg + ("step_over_tau0",)) is not None:
        t_step = ctx.number(tree, tg + ("step_over_tau0",), positive=True)
    if t_start is not None and t_stop is not None and t_stop <= t_start:
        ctx.fail(tg + ("stop_over_tau0",), "must exceed start_over_tau0")
    workers = ctx.integer(tree, run + ("workers",), minimum=1)
    outputs = {}
    for k, v in _get(tree, run + ("output",)).items():
        if not isinstance(v, str) or not v:
            ctx.fail(run + ("output", k), "expected a file path")
        path = Path(v)
        if not path.is_absolute() and source not in ("<defaults>", "<string>"):
            path = Path(source).parent / path
        outputs[k] = str(path)

    cfg = ScenarioConfig(fiber=fiber, atom=atom, pulse=pulse, directions=DIRECTIONS[direction],
                         phi_pol=ctx.number(tree, run + ("phi_pol_rad",)), gamma_r=backend,
                         positions=positions, radial=radial, detunings=detunings, shapes=shapes,
                         t_start=t_start, t_stop=t_stop, t_step=t_step, workers=workers, outputs=outputs,
                         coupled=coupled, raw=tree, source=source)
    object.__setattr__(cfg, "_lines", lines or {})
    return cfg


def _pulse(ctx, tree, source) -> PulseSpec:
    p = ("pulse",)
    shape = _get(tree, p + ("shape",))
    if shape not in [s.value for s in Shape]:
        ctx.fail(p + ("shape",), f"expected gaussian, rising, decaying or custom, got {shape!r}")
    T = ctx.number(tree, p + ("T_over_tau0",), positive=True)
    D = ctx.number(tree, p + ("Delta_over_gamma0",))
    sp = p + ("statistics",)
    kind = _get(tree, sp + ("kind",))
    if kind == "fock":
        n = ctx.integer(tree, sp + ("n",), minimum=0)
        stats = Fock(n)
    elif kind == "coherent":
        st = _get(tree, sp)
        re = ctx.number(tree, sp + ("alpha_re",)) if "alpha_re" in st else 1.0
        im = ctx.number(tree, sp + ("alpha_im",)) if "alpha_im" in st else 0.0
        stats = Coherent(complex(re, im))
    else:
        ctx.fail(sp + ("kind",), f"expected fock or coherent, got {kind!r}")
    table = None
    if shape == "custom":
        path = _get(tree, p + ("table_path",))
        if not isinstance(path, str):
            ctx.fail(p + ("table_path",), "custom shape needs table_path")
        full = Path(path)
        if not full.is_absolute() and source not in ("<defaults>", "<string>"):
            full = Path(source).parent / full
        try:
            table = CustomTable.load(full)
        except (OSError, ValueError) as exc:
            ctx.fail(p + ("table_path",), str(exc))
    try:
        return PulseSpec(Shape(shape), T, D, stats, table)
    except (ValueError, TypeError) as exc:
        ctx.fail(p, str(exc))


def loads(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark else source
        raise ConfigError(f"{where}: malformed YAML: {getattr(exc, 'problem', exc)}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{source}:1: top level must be a mapping")
    return from_dict(data, source, _line_map(node) if node is not None else {})


def load(path=None) -> ScenarioConfig:
    """Load a config file, or the defaults when ``path`` is None."""
    if path is None:
        return from_dict(None)
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return loads(text, str(path))


def dump_defaults() -> str:
    return yaml.safe_dump(DEFAULTS, sort_keys=False)
