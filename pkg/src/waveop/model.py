"""Hamiltonians, grids and run configuration shared by every backend.

Hamiltonians are separable polynomials ``H(x, p) = T(p) + V(x)``.  Separability
makes the Weyl symbol equal to the plain polynomial and kills every mixed
derivative, which the semiclassical generator relies on.

Run configurations are read from a small INI-style text file::

    schema_version = 1

    [hamiltonian]
    label = quadratic
    kinetic_coeffs = 0, 0, 0.5
    potential_coeffs = 0, 0, 0.5
    hbar = 1.0

    [grid]
    x_min = -8
    x_max = 8
    p_min = -8
    p_max = 8
    nx = 128
    np = 128

    [run]
    mode = thermal_sweep
    step = 0.001
    n_steps = 10000
    checkpoint_every = 500

    [output]
    path = benchmark_n2

Coefficient lists are in ascending powers.  ``[grid]`` is replaced by
``basis_size`` under ``[run]`` for ``hilbert_real``.
"""
import configparser
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ConfigError

SCHEMA_VERSION = 1

MODES = (
    "real_quantum",
    "real_classical",
    "imag_quantum",
    "imag_semiclassical",
    "imag_classical",
    "hilbert_real",
    "thermal_sweep",
)
IMAG_MODES = ("imag_quantum", "imag_semiclassical", "imag_classical", "thermal_sweep")
PHASE_GENERATORS = ("zero", "minus_H", "polynomial")


def _trim(coeffs):
    c = [float(v) for v in coeffs]
    while c and c[-1] == 0.0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Separable polynomial ``T(p) + V(x)`` with ascending coefficient tuples."""

    kinetic_coeffs: tuple = ()
    potential_coeffs: tuple = ()
    hbar: float = 1.0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kinetic_coeffs", _trim(self.kinetic_coeffs))
        object.__setattr__(self, "potential_coeffs", _trim(self.potential_coeffs))
        coeffs = self.kinetic_coeffs + self.potential_coeffs
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("Hamiltonian coefficients must be finite")
        if not (math.isfinite(self.hbar) and self.hbar >= 0):
            raise ValueError("hbar must be finite and non-negative")

    @classmethod
    def benchmark(cls, n, hbar=1.0):
        """``p**2/2 + x**n/2``."""
        if n not in (2, 4):
            raise ValueError("benchmark exponent must be 2 or 4")
        v = [0.0] * (n + 1)
        v[n] = 0.5
        label = {2: "quadratic", 4: "quartic"}[n]
        return cls((0.0, 0.0, 0.5), tuple(v), hbar, label)

    @classmethod
    def polynomial(cls, kinetic=(), potential=(), hbar=1.0, label=""):
        return cls(tuple(kinetic), tuple(potential), hbar, label)

    # symbols that show up as observables
    @classmethod
    def identity(cls, hbar=1.0):
        return cls((), (1.0,), hbar, "1")

    @classmethod
    def position(cls, power=1, hbar=1.0):
        v = [0.0] * (power + 1)
        v[power] = 1.0
        return cls((), tuple(v), hbar, f"x^{power}")

    @classmethod
    def momentum(cls, power=1, hbar=1.0):
        t = [0.0] * (power + 1)
        t[power] = 1.0
        return cls(tuple(t), (), hbar, f"p^{power}")

    def with_hbar(self, hbar):
        return replace(self, hbar=float(hbar))

    def scaled(self, factor):
        return replace(
            self,
            kinetic_coeffs=tuple(factor * c for c in self.kinetic_coeffs),
            potential_coeffs=tuple(factor * c for c in self.potential_coeffs),
        )

    @property
    def degree(self):
        return max(len(self.kinetic_coeffs), len(self.potential_coeffs), 1) - 1

    @property
    def is_zero(self):
        return not self.kinetic_coeffs and not self.potential_coeffs

    def kinetic(self, p, deriv=0):
        c = self.kinetic_coeffs
        if deriv:
            c = P.polyder(c, deriv) if len(c) > deriv else ()
        return _polyval(p, c)

    def potential(self, x, deriv=0):
        c = self.potential_coeffs
        if deriv:
            c = P.polyder(c, deriv) if len(c) > deriv else ()
        return _polyval(x, c)

    def __call__(self, x, p):
        return self.kinetic(p) + self.potential(x)


def _polyval(z, coeffs):
    z = np.asarray(z)
    if len(coeffs) == 0:
        return np.zeros_like(z, dtype=np.result_type(z, float))
    return P.polyval(z, np.asarray(coeffs, dtype=float))


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite phase-space coordinate")


def eval_hamiltonian(spec, x, p):
    """Return ``T(p) + V(x)``; works elementwise on arrays."""
    _check_finite(x, p)
    out = spec(x, p)
    return float(out) if np.ndim(out) == 0 else out


def eval_derivatives(spec, x, p, orders):
    """Return the mixed partial derivative of order ``orders = (i, j)`` in ``(x, p)``."""
    i, j = orders
    if int(i) != i or int(j) != j or i < 0 or j < 0:
        raise ValueError(f"derivative orders must be non-negative integers, got {orders}")
    _check_finite(x, p)
    shape = np.broadcast(np.asarray(x), np.asarray(p)).shape
    if i > 0 and j > 0:
        out = np.zeros(shape)
    elif i == 0 and j == 0:
        out = spec(x, p)
    elif j == 0:
        out = np.broadcast_to(spec.potential(x, deriv=i), shape)
    else:
        out = np.broadcast_to(spec.kinetic(p, deriv=j), shape)
    return float(out) if np.ndim(out) == 0 else np.array(out)


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic phase-space grid; endpoints ``x_max``/``p_max`` are excluded."""

    x_min: float
    x_max: float
    p_min: float
    p_max: float
    nx: int
    np: int
    boundary: str = "periodic"

    def __post_init__(self):
        problems = grid_diagnostics(self)
        if problems:
            raise ConfigError(problems)

    @classmethod
    def square(cls, half_width, n):
        return cls(-half_width, half_width, -half_width, half_width, n, n)

    @property
    def shape(self):
        return (self.nx, self.np)

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.nx

    @property
    def dp(self):
        return (self.p_max - self.p_min) / self.np

    @property
    def x(self):
        return self.x_min + self.dx * np.arange(self.nx)

    @property
    def p(self):
        return self.p_min + self.dp * np.arange(self.np)

    @property
    def lam(self):
        """Wavenumbers conjugate to x, wraparound order."""
        return 2 * np.pi * np.fft.fftfreq(self.nx, self.dx)

    @property
    def theta(self):
        """Wavenumbers conjugate to p, wraparound order."""
        return 2 * np.pi * np.fft.fftfreq(self.np, self.dp)

    def mesh(self):
        return np.meshgrid(self.x, self.p, indexing="ij")


def grid_diagnostics(grid):
    out = []
    if not grid.x_max > grid.x_min:
        out.append(f"grid: x_max ({grid.x_max}) must exceed x_min ({grid.x_min})")
    if not grid.p_max > grid.p_min:
        out.append(f"grid: p_max ({grid.p_max}) must exceed p_min ({grid.p_min})")
    for name in ("nx", "np"):
        n = getattr(grid, name)
        if int(n) != n or n < 8:
            out.append(f"grid: {name} = {n} violates {name} >= 8")
    if grid.boundary != "periodic":
        out.append(f"grid: unsupported boundary {grid.boundary!r} (only 'periodic')")
    return out


@dataclass(frozen=True)
class RunConfig:
    hamiltonian: HamiltonianSpec
    mode: str
    step: float
    n_steps: int
    checkpoint_every: int
    grid: Optional[GridSpec] = None
    basis_size: Optional[int] = None
    phase_generator: str = "zero"
    phase_polynomial: Optional[HamiltonianSpec] = None
    x0: float = 1.0
    p0: float = 0.0
    output_path: str = "out"
    schema_version: int = SCHEMA_VERSION

    def phase_spec(self):
        """The phase generator F as a polynomial, or None for F = 0."""
        if self.phase_generator == "zero":
            return None
        if self.phase_generator == "minus_H":
            return self.hamiltonian.scaled(-1.0)
        return self.phase_polynomial

    def to_dict(self):
        h = self.hamiltonian
        out = {
            "schema_version": self.schema_version,
            "hamiltonian": {
                "label": h.label,
                "kinetic_coeffs": list(h.kinetic_coeffs),
                "potential_coeffs": list(h.potential_coeffs),
                "hbar": h.hbar,
            },
            "run": {
                "mode": self.mode,
                "step": self.step,
                "n_steps": self.n_steps,
                "checkpoint_every": self.checkpoint_every,
                "phase_generator": self.phase_generator,
                "x0": self.x0,
                "p0": self.p0,
            },
            "output": {"path": self.output_path},
        }
        if self.grid is not None:
            g = self.grid
            out["grid"] = {
                "x_min": g.x_min, "x_max": g.x_max, "p_min": g.p_min, "p_max": g.p_max,
                "nx": g.nx, "np": g.np, "boundary": g.boundary,
            }
        if self.basis_size is not None:
            out["run"]["basis_size"] = self.basis_size
        if self.phase_polynomial is not None:
            out["run"]["phase_kinetic_coeffs"] = list(self.phase_polynomial.kinetic_coeffs)
            out["run"]["phase_potential_coeffs"] = list(self.phase_polynomial.potential_coeffs)
        return out


def validate_config(config):
    """Return a list of human-readable violations; empty means the config is usable."""
    out = []
    if config.schema_version != SCHEMA_VERSION:
        out.append(f"schema_version {config.schema_version} unsupported (expected {SCHEMA_VERSION})")
    if config.mode not in MODES:
        out.append(f"run: unknown mode {config.mode!r}; valid modes: {', '.join(MODES)}")
    h = config.hamiltonian
    if not h.kinetic_coeffs:
        out.append("hamiltonian: kinetic_coeffs is empty (T(p) needs a nonzero coefficient)")
    if not h.potential_coeffs:
        out.append("hamiltonian: potential_coeffs is empty (V(x) needs a nonzero coefficient)")
    if not (math.isfinite(config.step) and config.step > 0):
        out.append(f"run: step must be positive and finite, got {config.step}")
    if int(config.n_steps) != config.n_steps or config.n_steps < 1:
        out.append(f"run: n_steps must be a positive integer, got {config.n_steps}")
    if int(config.checkpoint_every) != config.checkpoint_every or config.checkpoint_every < 1:
        out.append(f"run: checkpoint_every must be a positive integer, got {config.checkpoint_every}")
    elif config.checkpoint_every > config.n_steps:
        out.append(
            f"run: checkpoint_every ({config.checkpoint_every}) exceeds n_steps ({config.n_steps})"
        )
    if not math.isfinite(config.step * config.n_steps):
        out.append("run: step * n_steps is not finite")
    if config.phase_generator not in PHASE_GENERATORS:
        out.append(
            f"run: unknown phase_generator {config.phase_generator!r}; "
            f"valid: {', '.join(PHASE_GENERATORS)}"
        )
    elif config.phase_generator == "polynomial" and config.phase_polynomial is None:
        out.append("run: phase_generator = polynomial needs phase_kinetic_coeffs/phase_potential_coeffs")
    if config.mode in IMAG_MODES and config.phase_generator != "zero":
        out.append("run: imaginary-time modes only support phase_generator = zero")
    if config.mode == "hilbert_real":
        if config.basis_size is None or config.basis_size < 2:
            out.append(f"run: hilbert_real needs basis_size >= 2, got {config.basis_size}")
    elif config.mode in MODES:
        if config.grid is None:
            out.append("grid: section required for phase-space modes")
        else:
            out.extend(grid_diagnostics(config.grid))
    return out


def _floats(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(v) for v in text.replace(";", ",").split(","))


def parse_config(text):
    """Parse config text into a RunConfig. Raises ConfigError with every problem found."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string("[__top__]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc

    problems = []

    def get(section, key, conv=str, default=None, required=True):
        if not parser.has_option(section, key):
            if required and default is None:
                problems.append(f"{section}: missing key {key!r}")
            return default
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except ValueError:
            problems.append(f"{section}: bad value for {key!r}: {raw!r}")
            return default

    for section in ("hamiltonian", "run"):
        if not parser.has_section(section):
            raise ConfigError(f"missing [{section}] section")

    schema_version = get("__top__", "schema_version", int)
    kinetic = get("hamiltonian", "kinetic_coeffs", _floats, default=())
    potential = get("hamiltonian", "potential_coeffs", _floats, default=())
    hbar = get("hamiltonian", "hbar", float, default=1.0, required=False)
    label = get("hamiltonian", "label", str, default="", required=False)
    mode = get("run", "mode")
    step = get("run", "step", float)
    n_steps = get("run", "n_steps", int)
    checkpoint_every = get("run", "checkpoint_every", int, default=None, required=False)
    phase_generator = get("run", "phase_generator", str, default="zero", required=False)
    basis_size = get("run", "basis_size", int, default=None, required=False)
    x0 = get("run", "x0", float, default=1.0, required=False)
    p0 = get("run", "p0", float, default=0.0, required=False)

    phase_poly = None
    if parser.has_option("run", "phase_kinetic_coeffs") or parser.has_option(
        "run", "phase_potential_coeffs"
    ):
        phase_poly = HamiltonianSpec(
            get("run", "phase_kinetic_coeffs", _floats, default=(), required=False),
            get("run", "phase_potential_coeffs", _floats, default=(), required=False),
            hbar if hbar is not None else 1.0,
            "F",
        )

    grid = None
    if parser.has_section("grid"):
        vals = {k: get("grid", k, float) for k in ("x_min", "x_max", "p_min", "p_max")}
        nx = get("grid", "nx", int)
        np_ = get("grid", "np", int)
        if not problems:
            try:
                grid = GridSpec(nx=nx, np=np_, **vals)
            except ConfigError as exc:
                problems.extend(exc.diagnostics)

    out_path = "out"
    if parser.has_section("output"):
        out_path = get("output", "path", str, default="out", required=False)

    if problems:
        raise ConfigError(problems)

    try:
        ham = HamiltonianSpec(kinetic, potential, hbar, label)
    except ValueError as exc:
        raise ConfigError(f"hamiltonian: {exc}") from exc

    config = RunConfig(
        hamiltonian=ham,
        mode=mode,
        step=step,
        n_steps=n_steps,
        checkpoint_every=checkpoint_every if checkpoint_every is not None else n_steps,
        grid=grid,
        basis_size=basis_size,
        phase_generator=phase_generator,
        phase_polynomial=phase_poly,
        x0=x0,
        p0=p0,
        output_path=out_path,
        schema_version=schema_version,
    )
    return config


def load_config(path, check=True):
    """Read and (by default) validate a config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    config = parse_config(text)
    if check:
        problems = validate_config(config)
        if problems:
            raise ConfigError(problems)
    return config
