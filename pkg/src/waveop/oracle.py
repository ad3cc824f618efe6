"""Reference implementations used to cross-check the propagators.

Nothing here imports the stepping code of ``hilbert``, ``phasespace`` or
``imagtime``.  Every routine builds its own matrices from scratch:

* ``exact_diag_thermal``: thermal moments from diagonalizing H in a truncated
  oscillator basis.
* ``liouville_direct``: plain RK4 on ``i hbar rho' = [H, rho]``.
* ``classical_gibbs_quadrature``: adaptive quadrature over ``exp(-beta H)``.
* ``semiclassical_dense_reference``: the hbar^2-truncated Bloch generator
  assembled as a dense matrix from explicit DFT matrices and exponentiated by
  eigendecomposition.
"""
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConfigError, InstabilityError, NumericalError

CONVERGENCE_TOL = 1e-8
DENSE_LIMIT = 64 * 64


def _ladder(n):
    a = np.zeros((n, n))
    for k in range(1, n):
        a[k - 1, k] = math.sqrt(k)
    return a


def _power_table(op, degree, n):
    """``[op**0, ..., op**degree]`` truncated to the leading n x n block."""
    out = [np.eye(n, dtype=op.dtype)]
    acc = np.eye(op.shape[0], dtype=op.dtype)
    for _ in range(degree):
        acc = acc @ op
        out.append(acc[:n, :n].copy())
    return out


def oscillator_operators(H, n):
    """Matrices of H, x, x^2, p, p^2 on the first n oscillator states.

    Powers are taken in a basis padded by the polynomial degree and then
    truncated, so every retained element is exact.
    """
    hbar = H.hbar
    if hbar <= 0:
        raise ValueError("oscillator basis needs hbar > 0")
    deg = max(H.degree, 2)
    m = n + deg
    a = _ladder(m)
    x = math.sqrt(hbar / 2) * (a + a.T)
    p = 1j * math.sqrt(hbar / 2) * (a.T - a)
    xs = _power_table(x.astype(complex), deg, n)
    ps = _power_table(p, deg, n)
    h = np.zeros((n, n), dtype=complex)
    for k, c in enumerate(H.potential_coeffs):
        h += c * xs[k]
    for k, c in enumerate(H.kinetic_coeffs):
        h += c * ps[k]
    h = 0.5 * (h + h.conj().T)
    return {"H": h, "x": xs[1], "x2": xs[2], "p": ps[1], "p2": ps[2]}


@dataclass
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    N: int
    convergence: float
    operators: dict

    def residual(self):
        h = self.operators["H"]
        v = self.eigenvectors
        return float(np.max(np.linalg.norm(h @ v - v * self.eigenvalues, axis=0)))


def _diag(H, n):
    ops = oscillator_operators(H, n)
    w, v = np.linalg.eigh(ops["H"])
    return w, v, ops


def _thermal(w, v, ops, beta):
    weights = np.exp(-beta * (w - w[0]))
    weights /= weights.sum()

    def avg(name):
        diag = np.einsum("ik,ij,jk->k", v.conj(), ops[name], v).real
        return float(np.dot(weights, diag))

    e = float(np.dot(weights, w))
    dx = math.sqrt(max(avg("x2") - avg("x") ** 2, 0.0))
    dp = math.sqrt(max(avg("p2") - avg("p") ** 2, 0.0))
    return {"energy": e, "dx": dx, "dp": dp}


def spectral_decomposition(H, N=128):
    w, v, ops = _diag(H, N)
    w_half = np.linalg.eigvalsh(oscillator_operators(H, N // 2)["H"])
    return SpectralDecomposition(w, v, N, float(abs(w[0] - w_half[0])), ops)


def exact_diag_thermal(H, N=128, beta=1.0, tol=CONVERGENCE_TOL):
    """Thermal energy and spreads of ``exp(-beta H)`` in an N-state oscillator basis.

    Convergence is judged against the same quantity at N/2; raises
    ``NumericalError`` naming a larger basis when the two disagree by more than tol.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    w, v, ops = _diag(H, N)
    res = _thermal(w, v, ops, beta)
    w2, v2, ops2 = _diag(H, N // 2)
    res2 = _thermal(w2, v2, ops2, beta)
    err = max(abs(w[0] - w2[0]), abs(res["energy"] - res2["energy"]))
    if err > tol:
        raise NumericalError(
            f"oscillator basis N = {N} not converged (change {err:.2e} > {tol:g}); try N = {2 * N}"
        )
    res["convergence"] = float(err)
    return res


def ground_state(H, N=128):
    """Lowest eigenpair; the vector is in the oscillator basis."""
    w, v, _ = _diag(H, N)
    return float(w[0]), v[:, 0]


def ground_state_wavefunction(H, x, N=128):
    """Oracle ground state sampled at positions ``x`` (normalized on a uniform ``x``)."""
    _, c = ground_state(H, N)
    x = np.asarray(x, dtype=float)
    xi = x / math.sqrt(H.hbar)
    prev = np.zeros_like(xi)
    cur = (math.pi * H.hbar) ** -0.25 * np.exp(-xi ** 2 / 2)
    psi = c[0] * cur
    for k in range(1, N):
        nxt = math.sqrt(2.0 / k) * xi * cur - math.sqrt((k - 1) / k) * prev
        prev, cur = cur, nxt
        psi = psi + c[k] * cur
    dx = x[1] - x[0]
    psi = psi / math.sqrt(np.sum(np.abs(psi) ** 2) * dx)
    # fix the global phase so the largest component is real positive
    i = np.argmax(np.abs(psi))
    return psi * (abs(psi[i]) / psi[i])


def liouville_direct(rho0, H, t, dt=1e-3, hbar=1.0, every=1):
    """RK4 integration of the von Neumann equation; returns ``(times, rhos)``."""
    rho = np.array(rho0, dtype=complex)
    H = np.asarray(H, dtype=complex)
    n_steps = int(round(t / dt))
    if n_steps < 0 or abs(n_steps * dt - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError("t must be a non-negative multiple of dt")
    scale = np.linalg.norm(rho)

    def f(r):
        return (H @ r - r @ H) / (1j * hbar)

    times, out = [0.0], [rho.copy()]
    for k in range(1, n_steps + 1):
        k1 = f(rho)
        k2 = f(rho + 0.5 * dt * k1)
        k3 = f(rho + 0.5 * dt * k2)
        k4 = f(rho + dt * k3)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.isfinite(rho).all() or np.linalg.norm(rho) > 10 * scale + 1:
            raise InstabilityError(f"Liouville RK4 unstable at step {k}; reduce dt")
        if k % every == 0 or k == n_steps:
            times.append(k * dt)
            out.append(rho.copy())
    return np.array(times), out


def _confining(coeffs):
    return len(coeffs) >= 3 and (len(coeffs) - 1) % 2 == 0 and coeffs[-1] > 0


def _moments_1d(fn, beta, start=4.0, boundary_tol=1e-12):
    """Moments 0..2 of exp(-beta (f - f_min)) on an auto-expanded interval."""
    zs = np.linspace(-50, 50, 20001)
    fmin = float(np.min(fn(zs)))
    center = float(zs[np.argmin(fn(zs))])
    half = start
    while True:
        lo, hi = center - half, center + half
        edge = max(math.exp(-beta * (fn(lo) - fmin)), math.exp(-beta * (fn(hi) - fmin)))
        if edge < boundary_tol:
            break
        half *= 1.5
        if half > 1e4:
            raise NumericalError("Gibbs weight does not decay; potential not confining")

    def moment(k, extra=None):
        g = (lambda z: z ** k * math.exp(-beta * (fn(z) - fmin))) if extra is None else (
            lambda z: extra(z) * math.exp(-beta * (fn(z) - fmin))
        )
        val, _ = integrate.quad(g, lo, hi, points=[center], limit=200, epsabs=1e-13, epsrel=1e-10)
        return val

    z = moment(0)
    m1 = moment(1) / z
    m2 = moment(2) / z
    mf = moment(0, extra=fn) / z
    return m1, m2, mf


def classical_gibbs_quadrature(H, beta):
    """Classical Gibbs moments ``energy, dx, dp``.

    The weight factorizes as ``exp(-beta T(p)) exp(-beta V(x))``, so each
    moment is a product of one-dimensional adaptive quadratures.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    for name, c in (("potential", H.potential_coeffs), ("kinetic", H.kinetic_coeffs)):
        if not _confining(c):
            raise ConfigError(f"{name} term is not confining; exp(-beta H) is not integrable")
    vx = np.polynomial.Polynomial(H.potential_coeffs)
    tp = np.polynomial.Polynomial(H.kinetic_coeffs)
    x1, x2, ev = _moments_1d(lambda z: float(vx(z)) if np.ndim(z) == 0 else vx(z), beta)
    p1, p2, et = _moments_1d(lambda z: float(tp(z)) if np.ndim(z) == 0 else tp(z), beta)
    return {
        "energy": ev + et,
        "dx": math.sqrt(max(x2 - x1 ** 2, 0.0)),
        "dp": math.sqrt(max(p2 - p1 ** 2, 0.0)),
    }


def _dft_matrices(n, d):
    """Unitary DFT matrix and the angular frequencies it diagonalizes."""
    j = np.arange(n)
    f = np.exp(-2j * np.pi * np.outer(j, j) / n) / math.sqrt(n)
    k = np.where(j < n // 2, j, j - n)
    return f, 2 * np.pi * k / (n * d)


def _spectral_operator(f, values):
    return f.conj().T @ np.diag(values) @ f


def semiclassical_dense_reference(H, grid, beta, hbar=None):
    """Semiclassical thermal moments at one ``beta``; see :func:`semiclassical_dense_series`."""
    return semiclassical_dense_series(H, grid, [beta], hbar)[0]


def semiclassical_dense_series(H, grid, betas, hbar=None):
    """Semiclassical thermal moments from a dense exponential of the Bloch generator.

    The generator ``H/2 + hbar^2/16 (V''(x) theta^2 + T''(p) lambda^2)`` is
    assembled on the flattened ``(x, p)`` grid (x-major) and exponentiated by
    symmetric eigendecomposition.  The starting field is uniform.  Observables
    are evaluated with dense Bopp-shifted matrices.
    """
    nx, np_ = grid.nx, grid.np
    if nx * np_ > DENSE_LIMIT:
        raise ConfigError(f"dense reference limited to {DENSE_LIMIT} grid points, got {nx * np_}")
    hb = H.hbar if hbar is None else float(hbar)
    x = grid.x_min + grid.dx * np.arange(nx)
    p = grid.p_min + grid.dp * np.arange(np_)
    fx, lam = _dft_matrices(nx, grid.dx)
    fp, theta = _dft_matrices(np_, grid.dp)
    lam2 = _spectral_operator(fx, lam ** 2).real
    theta2 = _spectral_operator(fp, theta ** 2).real
    vx = np.polynomial.Polynomial(H.potential_coeffs) if H.potential_coeffs else np.polynomial.Polynomial([0.0])
    tp = np.polynomial.Polynomial(H.kinetic_coeffs) if H.kinetic_coeffs else np.polynomial.Polynomial([0.0])
    h_diag = (vx(x)[:, None] + tp(p)[None, :]).ravel()
    c = hb ** 2 / 16
    gen = 0.5 * np.diag(h_diag)
    gen += c * np.kron(np.diag(vx.deriv(2)(x)), theta2)
    gen += c * np.kron(lam2, np.diag(tp.deriv(2)(p)))
    gen = 0.5 * (gen + gen.T)
    w, v = np.linalg.eigh(gen)
    coef = v.T @ np.ones(nx * np_)

    # Bopp-shifted observables: x - hbar theta/2 acts along p, p + hbar lambda/2 along x
    theta1 = _spectral_operator(fp, theta)
    lam1 = _spectral_operator(fx, lam)
    xop = np.kron(np.diag(x), np.eye(np_)) - 0.5 * hb * np.kron(np.eye(nx), theta1)
    pop = np.kron(np.eye(nx), np.diag(p)) + 0.5 * hb * np.kron(lam1, np.eye(np_))

    def moments(omega):
        def powers(op, k):
            out = [omega.astype(complex)]
            for _ in range(k):
                out.append(op @ out[-1])
            return out

        def ev(vec):
            return float(np.real(np.vdot(omega, vec)))

        xs = powers(xop, max(len(H.potential_coeffs) - 1, 2))
        ps = powers(pop, max(len(H.kinetic_coeffs) - 1, 2))
        energy = sum(ck * ev(xs[k]) for k, ck in enumerate(H.potential_coeffs))
        energy += sum(ck * ev(ps[k]) for k, ck in enumerate(H.kinetic_coeffs))
        dx = math.sqrt(max(ev(xs[2]) - ev(xs[1]) ** 2, 0.0))
        dp = math.sqrt(max(ev(ps[2]) - ev(ps[1]) ** 2, 0.0))
        return {"energy": energy, "dx": dx, "dp": dp}

    out = []
    for beta in betas:
        omega = v @ (coef * np.exp(-beta * (w - w[0])))
        out.append(moments(omega / np.linalg.norm(omega)))
    return out


def golden_entries(H, betas, tier, values, oracle, tolerance):
    return [
        {
            "hamiltonian": H.label,
            "tier": tier,
            "beta": float(b),
            "energy": float(v["energy"]),
            "dx": float(v["dx"]),
            "dp": float(v["dp"]),
            "oracle": oracle,
            "tolerance": float(tolerance),
        }
        for b, v in zip(betas, values)
    ]


def write_golden(path, entries):
    with open(path, "w") as fh:
        json.dump(entries, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_golden(path):
    with open(path) as fh:
        return json.load(fh)
