"""Phase-space grid backend.

A wave-operator field ``Omega(x, p)`` lives on a periodic ``(nx, np)`` grid with
``values[i, j] = Omega(x_i, p_j)``.  The Bopp operators act as

    x -> x,  p -> p,  lambda -> -i d/dx,  theta -> -i d/dp

so every separable generator is diagonal in one of the two mixed
representations: ``(lambda, p)`` after an FFT along x, or ``(x, theta)`` after
an FFT along p.  Kinetic pieces ``T(p +- hbar lambda / 2)`` are applied in the
first, potential pieces ``V(x -+ hbar theta / 2)`` in the second.

Normalization: ``sum |Omega|**2 dx dp = 1`` corresponds to ``Tr rho = 1``.
"""
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import gammaln

from .errors import ResolutionError
from .model import GridSpec, HamiltonianSpec

TAIL_TOL = 1e-4


@dataclass(frozen=True)
class PhaseSpaceField:
    grid: GridSpec
    values: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", v)

    @property
    def norm2(self):
        """``sum |Omega|**2 dx dp``."""
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx * self.grid.dp)

    @property
    def norm(self):
        return np.sqrt(self.norm2)

    def normalized(self):
        n = self.norm
        if not n > 0:
            raise ValueError("cannot normalize a null field")
        return replace(self, values=self.values / n)

    def with_values(self, values):
        return replace(self, values=values)

    def overlap(self, other):
        """``sum conj(self) * other dx dp``."""
        _check_same_grid(self, other)
        return complex(np.vdot(self.values, other.values) * self.grid.dx * self.grid.dp)

    def fidelity(self, other):
        return abs(self.overlap(other)) ** 2 / (self.norm2 * other.norm2)


def _check_same_grid(f, g):
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    if f.hbar != g.hbar:
        raise ValueError("fields carry different hbar")


class SpectralPlan:
    """Axis transforms between ``(x, p)`` and the two mixed representations.

    ``lam`` has shape ``(nx, 1)`` and ``theta`` shape ``(1, np)``, both in FFT
    wraparound order, so multipliers broadcast against transformed fields.
    """

    def __init__(self, grid):
        self.grid = grid
        self.lam = grid.lam[:, None]
        self.theta = grid.theta[None, :]
        self.x = grid.x[:, None]
        self.p = grid.p[None, :]

    # (x, p) <-> (x, theta)
    def to_x_theta(self, a):
        return np.fft.fft(a, axis=1)

    def from_x_theta(self, a):
        return np.fft.ifft(a, axis=1)

    # (x, p) <-> (lambda, p)
    def to_lam_p(self, a):
        return np.fft.fft(a, axis=0)

    def from_lam_p(self, a):
        return np.fft.ifft(a, axis=0)

    def apply_x_theta(self, a, mult):
        return self.from_x_theta(mult * self.to_x_theta(a))

    def apply_lam_p(self, a, mult):
        return self.from_lam_p(mult * self.to_lam_p(a))

    # Bopp-shifted symbol pieces, shape (nx, np)
    def kinetic_shifted(self, spec, hbar, sign):
        """``T(p + sign * hbar * lambda / 2)`` on the ``(lambda, p)`` mesh."""
        return spec.kinetic(self.p + sign * 0.5 * hbar * self.lam)

    def potential_shifted(self, spec, hbar, sign):
        """``V(x + sign * hbar * theta / 2)`` on the ``(x, theta)`` mesh."""
        return spec.potential(self.x + sign * 0.5 * hbar * self.theta)


def spectral_tail_mass(values, fraction=2.0 / 3.0):
    """Share of spectral power beyond ``fraction`` of Nyquist along either axis."""
    spec = np.abs(np.fft.fft2(values)) ** 2
    total = spec.sum()
    if total == 0:
        return 0.0
    nx, np_ = values.shape
    kx = np.abs(np.fft.fftfreq(nx))[:, None] * 2
    kp = np.abs(np.fft.fftfreq(np_))[None, :] * 2
    outer = (kx > fraction) | (kp > fraction)
    return float(spec[np.broadcast_to(outer, spec.shape)].sum() / total)


def check_resolution(field, tol=TAIL_TOL, where=""):
    tail = spectral_tail_mass(field.values)
    if tail > tol:
        raise ResolutionError(
            f"spectral tail mass {tail:.2e} exceeds {tol:.0e}{where}; refine the grid or enlarge dp/dx"
        )
    return tail


# ---------------------------------------------------------------------------
# fields from states and operators


def symbol_field(spec, grid, hbar=1.0):
    """Weyl symbol of the separable polynomial operator ``T(P) + V(X)``.

    Separable polynomials have no ordering ambiguity, so the symbol is the
    polynomial itself.
    """
    x, p = grid.mesh()
    return PhaseSpaceField(grid, spec(x, p).astype(complex), hbar)


def uniform_field(grid, hbar=1.0):
    """Symbol of the identity scaled to unit L2 norm."""
    values = np.ones(grid.shape, complex)
    return PhaseSpaceField(grid, values, hbar).normalized()


def hermite_functions(n, x, hbar=1.0):
    """Oscillator eigenfunctions ``psi_k(x)``, k < n, as rows of an ``(n, len(x))`` array."""
    x = np.asarray(x, dtype=float)
    xi = x / np.sqrt(hbar)
    out = np.zeros((n,) + x.shape)
    out[0] = (np.pi * hbar) ** -0.25 * np.exp(-xi ** 2 / 2)
    if n > 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for k in range(1, n - 1):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * xi * out[k] - np.sqrt(k / (k + 1)) * out[k - 1]
    return out


def _weyl_from_pairs(c, y, grid, hbar):
    """``sum_k c[i, k] exp(i p_j y_k / hbar) dy`` for a uniform ``y`` grid."""
    dy = y[1] - y[0] if len(y) > 1 else 1.0
    phase = np.exp(1j * np.outer(y, grid.p) / hbar)
    return (c @ phase) * dy


def wigner_weyl_of_operator(A, grid, hbar=1.0, tol=1e-6):
    """Weyl symbol ``A(x, p) = int dy <x - y/2|A|x + y/2> exp(i p y / hbar)``.

    ``A`` is either a separable polynomial (:class:`HamiltonianSpec`) or an
    ``(N, N)`` matrix in the oscillator basis.  For matrices the transform is
    checked against ``Tr(A^dagger A) = int |A(x, p)|**2 dx dp / (2 pi hbar)``;
    a relative shortfall above ``tol`` means the grid misses part of the
    operator and raises :class:`ResolutionError`.
    """
    if isinstance(A, HamiltonianSpec):
        return symbol_field(A, grid, hbar)
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    # y-sampling dual to the p grid: dy * dp = 2 pi hbar / np
    m = np.fft.fftfreq(grid.np, 1.0 / grid.np)
    y = np.sort(m) * (2 * np.pi * hbar / (grid.np * grid.dp))
    x = grid.x
    left = hermite_functions(n, x[:, None] - y[None, :] / 2, hbar)
    right = hermite_functions(n, x[:, None] + y[None, :] / 2, hbar)
    c = np.einsum("mik,mn,nik->ik", left, A, right, optimize=True)
    values = _weyl_from_pairs(c, y, grid, hbar)
    field = PhaseSpaceField(grid, values, hbar)
    hs = float(np.vdot(A, A).real)
    if hs > 0:
        captured = field.norm2 / (2 * np.pi * hbar)
        if abs(captured - hs) > tol * hs:
            raise ResolutionError(
                f"grid captures {captured / hs:.8f} of the operator's Hilbert-Schmidt norm"
            )
    return field


def wave_field_from_operator(omega, grid, hbar=1.0, tol=1e-6):
    """Phase-space wave field of a wave-operator matrix: Weyl symbol over ``sqrt(2 pi hbar)``.

    The scaling makes ``sum |Omega(x, p)|**2 dx dp = Tr(Omega^dagger Omega)``.
    """
    sym = wigner_weyl_of_operator(omega, grid, hbar, tol)
    return sym.with_values(sym.values / np.sqrt(2 * np.pi * hbar))


def _upsample2(psi):
    """Band-limited interpolation onto a grid twice as fine (same period)."""
    n = psi.size
    spec = np.fft.fft(psi)
    fine = np.zeros(2 * n, complex)
    half = n // 2
    fine[:half] = spec[:half]
    fine[-half:] = spec[-half:]
    # split the Nyquist bin so real inputs stay real
    fine[half] = 0.5 * spec[half]
    fine[-half] = 0.5 * spec[half]
    return np.fft.ifft(fine) * 2


def pure_state_wave_field(psi, grid, hbar=1.0, tol=1e-6):
    """``sqrt(2 pi hbar) W(x, p)`` for a pure state sampled on ``grid.x``.

    ``psi`` must be normalized (``sum |psi|**2 dx = 1``).  The result has unit L2
    norm when the grid resolves the state; otherwise :class:`ResolutionError`.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (grid.nx,):
        raise ValueError(f"psi must have shape ({grid.nx},)")
    nrm = np.sum(np.abs(psi) ** 2) * grid.dx
    if abs(nrm - 1) > 1e-8:
        raise ValueError(f"psi is not normalized (norm**2 = {nrm})")
    fine = _upsample2(psi)
    nf = fine.size
    k = np.arange(-grid.nx, grid.nx)
    centre = 2 * np.arange(grid.nx)
    i_lo = centre[:, None] - k[None, :]
    i_hi = centre[:, None] + k[None, :]
    # pairs leaving the domain would alias onto interior points; psi is zero there
    inside = (i_lo >= 0) & (i_lo < nf) & (i_hi >= 0) & (i_hi < nf)
    # <x - y/2|psi><psi|x + y/2> with y = k dx
    c = np.where(inside, fine[i_lo % nf] * fine[i_hi % nf].conj(), 0)
    y = k * grid.dx
    values = _weyl_from_pairs(c, y, grid, hbar) / np.sqrt(2 * np.pi * hbar)
    field = PhaseSpaceField(grid, values, hbar)
    if abs(field.norm2 - 1) > tol:
        raise ResolutionError(f"Wigner field norm {field.norm2:.10f} != 1; grid too small")
    return field


def ground_state_wave_field(grid, hbar=1.0):
    """Closed form for the harmonic ground state: ``sqrt(2 pi hbar) exp(-(x^2+p^2)/hbar) / (pi hbar)``."""
    x, p = grid.mesh()
    w = np.exp(-(x ** 2 + p ** 2) / hbar) / (np.pi * hbar)
    return PhaseSpaceField(grid, np.sqrt(2 * np.pi * hbar) * w, hbar)


def coherent_wave_field(grid, x0, p0=0.0, hbar=1.0):
    """Wave field of the coherent state centred on ``(x0, p0)``."""
    x, p = grid.mesh()
    w = np.exp(-((x - x0) ** 2 + (p - p0) ** 2) / hbar) / (np.pi * hbar)
    return PhaseSpaceField(grid, np.sqrt(2 * np.pi * hbar) * w, hbar)


def position_eigenfunction(k, grid, hbar=1.0):
    """k-th oscillator eigenfunction sampled on ``grid.x``."""
    return hermite_functions(k + 1, grid.x, hbar)[k].astype(complex)


# ---------------------------------------------------------------------------
# Moyal product


def moyal_star(f, g):
    """``f * g = f(x + i hbar/2 d_p, p - i hbar/2 d_x) g`` on the grid.

    Writing ``f`` and ``g`` in the ``(x, theta)`` representation,

        (f * g)(x, p) = sum_{theta, theta'} f(x - hbar theta'/2, theta)
                        g(x + hbar theta/2, theta') exp(i (theta + theta') p)

    where the x-shifts are applied spectrally.  Cost is O(n^3 log n) for an
    n x n grid; both fields must decay at the domain edges.
    """
    _check_same_grid(f, g)
    grid, hbar = f.grid, f.hbar
    nx, np_ = grid.shape
    theta = grid.theta
    lam = grid.lam[:, None, None]
    fh = np.fft.fft(f.values, axis=1) / np_
    gh = np.fft.fft(g.values, axis=1) / np_
    # A[x, t, t'] = fh(x - hbar theta'/2, t)
    A = np.fft.ifft(
        np.fft.fft(fh, axis=0)[:, :, None] * np.exp(-0.5j * hbar * lam * theta[None, None, :]),
        axis=0,
    )
    # B[x, t, t'] = gh(x + hbar theta/2, t')
    B = np.fft.ifft(
        np.fft.fft(gh, axis=0)[:, None, :] * np.exp(0.5j * hbar * lam * theta[None, :, None]),
        axis=0,
    )
    C = A * B
    # sum over t' -> p, then over t with the shared p phase
    E = np.fft.ifft(C, axis=2) * np_
    steps = np.arange(np_)
    phase = np.exp(1j * np.outer(theta, steps * grid.dp))
    out = np.einsum("xtj,tj->xj", E, phase)
    return f.with_values(out)


def moyal_star_poly(f, g, hbar=1.0):
    """Exact Moyal product of bivariate polynomials.

    ``f`` and ``g`` are coefficient arrays with ``c[i, j]`` multiplying
    ``x**i p**j``.  Uses the terminating series

        f * g = sum_n (i hbar/2)^n / n! sum_k C(n, k) (-1)^k
                (d_x^{n-k} d_p^k f) (d_x^k d_p^{n-k} g).
    """
    f = np.atleast_2d(np.asarray(f, dtype=complex))
    g = np.atleast_2d(np.asarray(g, dtype=complex))
    n_max = max(sum(f.shape), sum(g.shape))
    out = np.zeros((f.shape[0] + g.shape[0], f.shape[1] + g.shape[1]), complex)
    for n in range(n_max + 1):
        pref = (0.5j * hbar) ** n / np.exp(gammaln(n + 1))
        for k in range(n + 1):
            df = _pder(_pder(f, n - k, 0), k, 1)
            dg = _pder(_pder(g, k, 0), n - k, 1)
            if not df.any() or not dg.any():
                continue
            binom = np.exp(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))
            prod = _polymul2d(df, dg)
            out[: prod.shape[0], : prod.shape[1]] += pref * binom * (-1) ** k * prod
    return _trim2d(out)


def _pder(c, m, axis):
    if m == 0:
        return c
    if c.shape[axis] <= m:
        shape = list(c.shape)
        shape[axis] = 1
        return np.zeros(shape, complex)
    return P.polyder(c, m, axis=axis)


def _polymul2d(a, b):
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), complex)
    for i, j in zip(*np.nonzero(a)):
        out[i : i + b.shape[0], j : j + b.shape[1]] += a[i, j] * b
    return out


def _trim2d(c, tol=0.0):
    nz = np.argwhere(np.abs(c) > tol)
    if nz.size == 0:
        return np.zeros((1, 1), complex)
    return c[: nz[:, 0].max() + 1, : nz[:, 1].max() + 1]


def poisson_bracket_poly(f, g):
    f = np.atleast_2d(np.asarray(f, dtype=complex))
    g = np.atleast_2d(np.asarray(g, dtype=complex))
    a = _polymul2d(_pder(f, 1, 0), _pder(g, 1, 1))
    b = _polymul2d(_pder(f, 1, 1), _pder(g, 1, 0))
    shape = (max(a.shape[0], b.shape[0]), max(a.shape[1], b.shape[1]))
    out = np.zeros(shape, complex)
    out[: a.shape[0], : a.shape[1]] += a
    out[: b.shape[0], : b.shape[1]] -= b
    return _trim2d(out)


def poisson_bracket(f, g):
    """``{f, g} = f_x g_p - f_p g_x`` on the grid, derivatives taken spectrally."""
    _check_same_grid(f, g)
    plan = SpectralPlan(f.grid)

    def dx(a):
        return plan.apply_lam_p(a, 1j * plan.lam)

    def dp(a):
        return plan.apply_x_theta(a, 1j * plan.theta)

    out = dx(f.values) * dp(g.values) - dp(f.values) * dx(g.values)
    return f.with_values(out)


# ---------------------------------------------------------------------------
# expectations


def apply_bopp_symbol(field, spec, hbar=None):
    """``O(x + i hbar/2 d_p, p - i hbar/2 d_x) Omega`` for separable ``O = T(p) + V(x)``."""
    hbar = field.hbar if hbar is None else hbar
    plan = SpectralPlan(field.grid)
    out = np.zeros_like(field.values)
    if spec.kinetic_coeffs:
        out += plan.apply_lam_p(field.values, plan.kinetic_shifted(spec, hbar, +1))
    if spec.potential_coeffs:
        out += plan.apply_x_theta(field.values, plan.potential_shifted(spec, hbar, -1))
    return out


def expectation_phase(field, spec, normalize=True, hbar=None, residue_tol=1e-8, return_residue=False):
    """``int conj(Omega) O(x + i hbar/2 d_p, p - i hbar/2 d_x) Omega dx dp``.

    Returns the real part.  The imaginary residue must stay below
    ``residue_tol`` (relative to ``max(1, |value|)``).
    """
    n2 = field.norm2
    if n2 < 1e-12:
        raise ValueError(f"field norm {n2:.2e} too small for an expectation value")
    applied = apply_bopp_symbol(field, spec, hbar)
    val = np.vdot(field.values, applied) * field.grid.dx * field.grid.dp
    if normalize:
        val /= n2
    residue = abs(val.imag)
    if residue > residue_tol * max(1.0, abs(val.real)):
        raise ResolutionError(f"expectation has imaginary residue {residue:.2e}")
    if return_residue:
        return float(val.real), float(residue)
    return float(val.real)


def phase_moments(field, H, hbar=None):
    """Energy, means and spreads of a field via Parseval in the mixed representations.

    Uses the Bopp rule with the field's ``hbar`` unless overridden; ``hbar = 0``
    gives plain phase-space averages over ``|Omega|**2``.
    """
    hbar = field.hbar if hbar is None else hbar
    grid = field.grid
    plan = SpectralPlan(grid)
    w_xt = np.abs(plan.to_x_theta(field.values)) ** 2
    w_lp = np.abs(plan.to_lam_p(field.values)) ** 2
    total = w_xt.sum()
    if not total > 0:
        raise ValueError("null field")
    xs = np.broadcast_to(plan.x - 0.5 * hbar * plan.theta, w_xt.shape)
    ps = np.broadcast_to(plan.p + 0.5 * hbar * plan.lam, w_lp.shape)
    # both weight arrays sum to the same total (Parseval along one axis)
    total_lp = w_lp.sum()
    x1 = float(np.sum(w_xt * xs) / total)
    x2 = float(np.sum(w_xt * xs ** 2) / total)
    p1 = float(np.sum(w_lp * ps) / total_lp)
    p2 = float(np.sum(w_lp * ps ** 2) / total_lp)
    energy = float(
        np.sum(w_lp * H.kinetic(ps)) / total_lp + np.sum(w_xt * H.potential(xs)) / total
    )
    dx = float(np.sqrt(max(x2 - x1 ** 2, 0.0)))
    dp = float(np.sqrt(max(p2 - p1 ** 2, 0.0)))
    norm2 = float(total / grid.np * grid.dx * grid.dp)
    return {"energy": energy, "x": x1, "p": p1, "dx": dx, "dp": dp, "norm2": norm2}


# ---------------------------------------------------------------------------
# real-time propagation


def _split_phase(F):
    if F is None:
        return HamiltonianSpec()
    if isinstance(F, HamiltonianSpec):
        return F
    raise TypeError("quantum phase generator must be a separable polynomial (HamiltonianSpec)")


def _run(field, step_fn, n_steps, every, t0, dt, check):
    times = [t0]
    frames = [field]
    values = field.values
    every = n_steps if not every else every
    for k in range(1, n_steps + 1):
        values = step_fn(values)
        if k % every == 0 or k == n_steps:
            snap = field.with_values(values)
            if check:
                check_resolution(snap, where=f" at t = {t0 + k * dt:g}")
            times.append(t0 + k * dt)
            frames.append(snap)
    return np.array(times), frames


def propagate_quantum_real(field, H, F=None, dt=1e-3, n_steps=1, every=None, check=True):
    """Strang-split real-time evolution of the wave field.

    Generator: ``H(x - hbar theta/2, p + hbar lambda/2) - H(x + hbar theta/2, p - hbar lambda/2)
    - F(x + hbar theta/2, p - hbar lambda/2)``, with ``F`` a separable polynomial.
    Returns ``(times, fields)`` sampled every ``every`` steps plus the end point.
    """
    hbar = field.hbar
    if not hbar > 0:
        raise ValueError("quantum propagation needs hbar > 0")
    if dt <= 0:
        raise ValueError("dt must be positive")
    F = _split_phase(F)
    plan = SpectralPlan(field.grid)
    if check:
        check_resolution(field, where=" in the initial field")
    dv = (
        plan.potential_shifted(H, hbar, -1)
        - plan.potential_shifted(H, hbar, +1)
        - plan.potential_shifted(F, hbar, +1)
    )
    dk = (
        plan.kinetic_shifted(H, hbar, +1)
        - plan.kinetic_shifted(H, hbar, -1)
        - plan.kinetic_shifted(F, hbar, -1)
    )
    half_v = np.exp(-0.5j * dt * dv / hbar)
    full_k = np.exp(-1j * dt * dk / hbar)

    def step(a):
        a = plan.apply_x_theta(a, half_v)
        a = plan.apply_lam_p(a, full_k)
        return plan.apply_x_theta(a, half_v)

    return _run(field, step, n_steps, every, 0.0, dt, check)


def propagate_classical_real(field, H, F=None, dt=1e-3, n_steps=1, every=None, check=True):
    """Koopman-von Neumann evolution ``dOmega/dt = {H, Omega} - i F Omega``.

    ``-T'(p) d_x`` is applied exactly in ``(lambda, p)``, ``V'(x) d_p`` exactly in
    ``(x, theta)``.  ``F`` may be a separable polynomial (folded into the two
    sub-steps) or a real grid array (applied as a multiplicative phase).
    Returned fields carry ``hbar = 0``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    plan = SpectralPlan(field.grid)
    if check:
        check_resolution(field, where=" in the initial field")
    vel = H.kinetic(plan.p, deriv=1)
    force = H.potential(plan.x, deriv=1)
    pot_phase = plan.theta * force
    kin_phase = -plan.lam * vel
    edge = None
    if isinstance(F, HamiltonianSpec):
        pot_phase = pot_phase - F.potential(plan.x)
        kin_phase = kin_phase - F.kinetic(plan.p)
    elif F is not None:
        F = np.asarray(F, dtype=float)
        if F.shape != field.grid.shape:
            raise ValueError("grid phase generator must match the field grid")
        edge = np.exp(-0.5j * dt * F)
    half_v = np.exp(0.5j * dt * pot_phase)
    full_k = np.exp(1j * dt * kin_phase)

    def step(a):
        if edge is not None:
            a = a * edge
        a = plan.apply_x_theta(a, half_v)
        a = plan.apply_lam_p(a, full_k)
        a = plan.apply_x_theta(a, half_v)
        if edge is not None:
            a = a * edge
        return a

    start = replace(field, hbar=0.0)
    return _run(start, step, n_steps, every, 0.0, dt, check)


# ---------------------------------------------------------------------------
# snapshot files

FIELD_MAGIC = b"WOPF"
FIELD_VERSION = 1
_HEADER = np.dtype(
    [
        ("version", "<u4"),
        ("nx", "<u4"),
        ("np", "<u4"),
        ("x_min", "<f8"),
        ("x_max", "<f8"),
        ("p_min", "<f8"),
        ("p_max", "<f8"),
        ("hbar", "<f8"),
    ]
)


def dump_field(path, field):
    g = field.grid
    header = np.array(
        [(FIELD_VERSION, g.nx, g.np, g.x_min, g.x_max, g.p_min, g.p_max, field.hbar)], dtype=_HEADER
    )
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(field.values, dtype="<c16").tobytes())


def load_field(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != FIELD_MAGIC:
        raise ValueError(f"{path}: not a field snapshot")
    h = np.frombuffer(data[4 : 4 + _HEADER.itemsize], dtype=_HEADER)[0]
    if h["version"] != FIELD_VERSION:
        raise ValueError(f"{path}: unsupported version {h['version']}")
    grid = GridSpec(
        float(h["x_min"]), float(h["x_max"]), float(h["p_min"]), float(h["p_max"]),
        int(h["nx"]), int(h["np"]),
    )
    payload = np.frombuffer(data[4 + _HEADER.itemsize :], dtype="<c16")
    if payload.size != grid.nx * grid.np:
        raise ValueError(f"{path}: payload size mismatch")
    return PhaseSpaceField(grid, payload.reshape(grid.shape).astype(complex), float(h["hbar"]))
