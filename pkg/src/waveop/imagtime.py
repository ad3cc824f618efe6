"""Imaginary-time (Bloch) flow of the wave field at three levels of theory.

Starting from the symbol of the identity, ``Omega(beta)`` tends to the symbol of
``exp(-beta H / 2)`` so ``|Omega|**2`` carries the Gibbs weight.  The tiers:

quantum
    ``dOmega/dbeta = -1/4 [H(x - hbar theta/2, p + hbar lambda/2)
    + H(x + hbar theta/2, p - hbar lambda/2)] Omega``
semiclassical
    ``dOmega/dbeta = -[H/2 + hbar^2/16 (V''(x) theta^2 + T''(p) lambda^2)] Omega``,
    the hbar^2-truncated expansion of the quantum generator
classical
    ``Omega(beta) = exp(-beta H / 2) Omega(0)``, observables without Bopp shifts

Quantum and semiclassical fields are renormalized every step; the norm lost in
each step is accumulated so partition-function ratios can be recovered.
"""
import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError
from .model import validate_config
from .phasespace import PhaseSpaceField, SpectralPlan, check_resolution, phase_moments, uniform_field

CSV_HEADER = ("beta", "energy", "dx", "dp", "dxdp", "norm_prerenorm", "tier")
TIERS = ("quantum", "semiclassical", "classical")


@dataclass
class ObservableSeries:
    tier: str
    axis: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    dx: list = field(default_factory=list)
    dp: list = field(default_factory=list)
    dxdp: list = field(default_factory=list)
    norm_prerenorm: list = field(default_factory=list)
    axis_name: str = "beta"

    def record(self, axis, moments, norm_prerenorm):
        self.axis.append(float(axis))
        self.energy.append(float(moments["energy"]))
        self.dx.append(float(moments["dx"]))
        self.dp.append(float(moments["dp"]))
        self.dxdp.append(float(moments["dx"] * moments["dp"]))
        self.norm_prerenorm.append(float(norm_prerenorm))

    def __len__(self):
        return len(self.axis)

    def at(self, value, tol=1e-9):
        """Row index whose axis value equals ``value``."""
        for i, a in enumerate(self.axis):
            if abs(a - value) <= tol * max(1.0, abs(value)):
                return i
        raise KeyError(f"{self.axis_name} = {value} not among checkpoints")

    def rows(self):
        for i in range(len(self)):
            yield (
                self.axis[i], self.energy[i], self.dx[i], self.dp[i], self.dxdp[i],
                self.norm_prerenorm[i], self.tier,
            )


def series_to_csv(series_list, header=CSV_HEADER):
    """Tier-tagged CSV text; floats written with ``repr`` so reruns are byte-identical."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for s in series_list:
        for row in s.rows():
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _checkpoints(n_steps, every):
    if n_steps < 1 or every < 1:
        raise ValueError("n_steps and checkpoint_every must be positive")
    return set(range(every, n_steps + 1, every)) | {n_steps}


def _split_bloch(field, kin_rate, pot_rate, d_beta, n_steps, checkpoint_every, H, tier, check):
    """Strang-split Bloch stepping: half potential, full kinetic, half potential.

    ``kin_rate`` lives on the ``(lambda, p)`` mesh and ``pot_rate`` on the
    ``(x, theta)`` mesh; ``dOmega/dbeta = -(kin_rate + pot_rate) Omega``.
    """
    plan = SpectralPlan(field.grid)
    kmin = float(np.min(kin_rate))
    vmin = float(np.min(pot_rate))
    # shift by the minima so the multipliers cannot overflow; the shift is restored in log_norm
    half_v = np.exp(-0.5 * d_beta * (pot_rate - vmin))
    full_k = np.exp(-d_beta * (kin_rate - kmin))
    shift = -d_beta * (kmin + vmin)
    values = field.normalized().values
    marks = _checkpoints(n_steps, checkpoint_every)
    series = ObservableSeries(tier)
    log_norm = 0.0
    dxdp = field.grid.dx * field.grid.dp
    for k in range(1, n_steps + 1):
        values = plan.apply_x_theta(values, half_v)
        values = plan.apply_lam_p(values, full_k)
        values = plan.apply_x_theta(values, half_v)
        nrm = math.sqrt(float(np.sum(values.real ** 2 + values.imag ** 2)) * dxdp)
        values /= nrm
        log_norm += math.log(nrm) + shift
        if k in marks:
            snap = field.with_values(values)
            if check:
                check_resolution(snap, where=f" at beta = {k * d_beta:g} ({tier})")
            series.record(k * d_beta, phase_moments(snap, H), math.exp(log_norm))
            log_norm = 0.0
    return field.with_values(values), series


def quantum_rates(plan, H, hbar):
    kin = 0.25 * (plan.kinetic_shifted(H, hbar, +1) + plan.kinetic_shifted(H, hbar, -1))
    pot = 0.25 * (plan.potential_shifted(H, hbar, -1) + plan.potential_shifted(H, hbar, +1))
    return kin, pot


def semiclassical_rates(plan, H, hbar):
    c = hbar ** 2 / 16
    kin = 0.5 * H.kinetic(plan.p) + c * H.kinetic(plan.p, deriv=2) * plan.lam ** 2
    pot = 0.5 * H.potential(plan.x) + c * H.potential(plan.x, deriv=2) * plan.theta ** 2
    return np.broadcast_to(kin, plan.grid.shape), np.broadcast_to(pot, plan.grid.shape)


def bloch_quantum(field, H, d_beta=1e-3, n_steps=1000, checkpoint_every=None, check=True):
    """Full quantum Bloch flow of the wave field; returns ``(field, series)``."""
    kin, pot = quantum_rates(SpectralPlan(field.grid), H, field.hbar)
    return _split_bloch(
        field, kin, pot, d_beta, n_steps, checkpoint_every or n_steps, H, "quantum", check
    )


def bloch_semiclassical(field, H, d_beta=1e-3, n_steps=1000, checkpoint_every=None, check=True):
    """Bloch flow truncated at order hbar^2; exact for quadratic ``H``."""
    kin, pot = semiclassical_rates(SpectralPlan(field.grid), H, field.hbar)
    return _split_bloch(
        field, kin, pot, d_beta, n_steps, checkpoint_every or n_steps, H, "semiclassical", check
    )


def bloch_classical(field, H, d_beta=1e-3, n_steps=1000, checkpoint_every=None):
    """Closed-form classical Bloch flow ``exp(-beta H / 2) Omega(0)``.

    Weights are formed in log space relative to the smallest energy on the
    support of ``Omega(0)``, so large ``beta * max(H)`` cannot underflow the
    whole field.  Observables use plain averages (no Bopp shifts).
    """
    x, p = field.grid.mesh()
    h = H(x, p)
    v0 = field.values
    support = np.abs(v0) > 0
    if not support.any():
        raise ValueError("null initial field")
    hmin = float(np.min(h[support]))
    log_w0 = np.where(support, 2 * np.log(np.abs(np.where(support, v0, 1))), -np.inf)
    marks = sorted(_checkpoints(n_steps, checkpoint_every or n_steps))
    series = ObservableSeries("classical")
    out = PhaseSpaceField(field.grid, v0, 0.0)
    prev_log_z = logsumexp(log_w0)
    for k in marks:
        beta = k * d_beta
        values = v0 * np.exp(-0.5 * beta * (h - hmin))
        out = PhaseSpaceField(field.grid, values, 0.0).normalized()
        log_z = logsumexp(log_w0 - beta * h)
        series.record(beta, phase_moments(out, H, hbar=0.0), math.exp(0.5 * (log_z - prev_log_z)))
        prev_log_z = log_z
    return out, series


def thermal_sweep(config, threads=1):
    """Run the quantum, semiclassical and classical tiers on one grid and beta schedule.

    Returns a dict ``tier -> ObservableSeries``; all series share the same axis.
    """
    problems = validate_config(config)
    if config.grid is None:
        problems.append("grid: thermal sweep needs a phase-space grid")
    if problems:
        raise ConfigError(problems)
    H = config.hamiltonian
    start = uniform_field(config.grid, H.hbar)
    args = (H, config.step, config.n_steps, config.checkpoint_every)
    jobs = {
        "quantum": lambda: bloch_quantum(start, *args)[1],
        "semiclassical": lambda: bloch_semiclassical(start, *args)[1],
        "classical": lambda: bloch_classical(start, *args)[1],
    }
    if threads > 1:
        with ThreadPoolExecutor(max_workers=min(threads, 3)) as pool:
            futures = {k: pool.submit(fn) for k, fn in jobs.items()}
            return {k: futures[k].result() for k in TIERS}
    return {k: jobs[k]() for k in TIERS}

