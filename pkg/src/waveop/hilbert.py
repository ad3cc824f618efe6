"""Dense matrix backend for the wave operator.

The density is carried by its square root, ``rho = Omega @ Omega^dagger``, and
``Omega`` obeys

    i hbar dOmega/dt = [H, Omega] - Omega F

for any Hermitian ``F``.  Operators are plain ``(N, N)`` complex arrays in a
truncated harmonic-oscillator basis; vectorized states are length ``N**2``
row-major flattenings, so ``vec(A @ Omega) = kron(A, 1) @ vec(Omega)`` and
``vec(Omega @ A) = kron(1, A.T) @ vec(Omega)``.  Transposes are plain
transposes in the fixed basis, never conjugate transposes.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InstabilityError

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
GROWTH_LIMIT = 1e3


def _scale(a):
    return max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0


def is_hermitian(a, tol=HERMITIAN_TOL):
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.max(np.abs(a - a.conj().T)) <= tol * _scale(a)


def _require_hermitian(a, name):
    if not is_hermitian(a):
        raise ValueError(f"{name} must be Hermitian")


def _require_square(a, name):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")


def lowering_operator(n):
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def build_position_momentum(n, hbar=1.0):
    """Truncated-oscillator position and momentum matrices.

    ``[X, P] = i hbar (1 - n |n-1><n-1|)``: the truncation defect sits in the
    last basis state only.
    """
    if n < 2:
        raise ValueError(f"basis size must be >= 2, got {n}")
    a = lowering_operator(n)
    ad = a.conj().T
    s = np.sqrt(hbar / 2)
    return s * (a + ad), 1j * s * (ad - a)


def hamiltonian_matrix(spec, n, hbar=None):
    """Matrix of a separable polynomial ``T(P) + V(X)`` on the first n oscillator states.

    Powers are formed in a basis padded by the degree so the kept block is exact.
    """
    hbar = spec.hbar if hbar is None else hbar
    m = n + max(spec.degree, 1)
    X, P = build_position_momentum(m, hbar)
    out = np.zeros((m, m), complex)
    for coeffs, op in ((spec.potential_coeffs, X), (spec.kinetic_coeffs, P)):
        acc = np.eye(m, dtype=complex)
        for k, c in enumerate(coeffs):
            if k:
                acc = acc @ op
            out += c * acc
    out = out[:n, :n]
    return 0.5 * (out + out.conj().T)


def random_hermitian(n, rng, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / (2 * np.sqrt(n))


def random_unitary(n, rng):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def density_from_wave(omega):
    omega = np.asarray(omega)
    return omega @ omega.conj().T


def expectation_wave(omega, op, normalize=False):
    """``Tr(Omega^dagger O Omega)``, optionally divided by ``Tr(Omega^dagger Omega)``."""
    omega = np.asarray(omega)
    val = np.einsum("ij,ik,kj->", omega.conj(), op, omega)
    if normalize:
        norm = np.vdot(omega, omega).real
        if norm <= 0:
            raise ValueError("cannot normalize a zero wave operator")
        val = val / norm
    return float(val.real)


def vectorize(omega):
    return np.ascontiguousarray(omega).reshape(-1).astype(complex, copy=True)


def devectorize(v):
    v = np.asarray(v)
    n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise ValueError(f"vector length {v.size} is not a perfect square")
    return v.reshape(n, n).copy()


def left_action(a):
    """Matrix of ``Omega -> A @ Omega`` on vectorized states."""
    a = np.asarray(a)
    _require_square(a, "A")
    return np.kron(a, np.eye(a.shape[0]))


def right_action(a):
    """Matrix of ``Omega -> Omega @ A`` on vectorized states."""
    a = np.asarray(a)
    _require_square(a, "A")
    return np.kron(np.eye(a.shape[0]), a.T)


def apply_left(a, v):
    if a.shape[0] ** 2 != np.asarray(v).size:
        raise ValueError("dimension mismatch between operator and vectorized state")
    return vectorize(a @ devectorize(v))


def partial_trace_recover(v):
    """``Tr' |Omega><Omega|`` computed by summing over the ancilla index."""
    v = np.asarray(v)
    n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise ValueError(f"vector length {v.size} is not a perfect square")
    outer = np.outer(v, v.conj()).reshape(n, n, n, n)
    return np.einsum("ikjk->ij", outer)


def doubled_expectation(v, op):
    """``<Omega| O (x) 1 |Omega>``."""
    v = np.asarray(v)
    return float(np.vdot(v, left_action(op) @ v).real)


@dataclass(frozen=True)
class BoppMatrices:
    x: np.ndarray
    p: np.ndarray
    theta: np.ndarray
    lam: np.ndarray
    hbar: float

    @property
    def dim(self):
        return self.x.shape[0]


def build_bopp_matrices(X, P, hbar=1.0):
    X = np.asarray(X)
    P = np.asarray(P)
    if X.shape != P.shape:
        raise ValueError("X and P must have the same shape")
    _require_square(X, "X")
    one = np.eye(X.shape[0])
    x_left = np.kron(X, one)
    x_right = np.kron(one, X.T)
    p_left = np.kron(P, one)
    p_right = np.kron(one, P.T)
    return BoppMatrices(
        x=(x_right + x_left) / 2,
        p=(p_left + p_right) / 2,
        theta=(x_right - x_left) / hbar,
        lam=(p_left - p_right) / hbar,
        hbar=hbar,
    )


def commutator(a, b):
    return a @ b - b @ a


def interior_indices(n):
    """Doubled-space indices ``m * n + k`` with both oscillator labels below ``n - 1``."""
    m, k = np.meshgrid(np.arange(n - 1), np.arange(n - 1), indexing="ij")
    return (m * n + k).ravel()


def _rk4(rhs, y, dt, n_steps, guard):
    y0_norm = max(np.linalg.norm(y), 1e-300)
    for _ in range(n_steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if guard and not np.linalg.norm(y) <= GROWTH_LIMIT * y0_norm:
            raise InstabilityError(
                f"norm grew beyond {GROWTH_LIMIT:g}x the initial value; reduce dt ({dt:g})"
            )
    return y


def _n_steps(t, dt):
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = int(round(t / dt))
    if n < 0 or abs(n * dt - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"t = {t} is not a non-negative multiple of dt = {dt}")
    return n


def _zero_like(h):
    return np.zeros_like(np.asarray(h, dtype=complex))


def evolve_wave_operator(omega0, H, F=None, t=1.0, dt=1e-3, hbar=1.0, method="rk4"):
    """Advance ``Omega`` from 0 to ``t``.

    ``method="rk4"`` takes fixed RK4 steps of size ``dt``; ``method="expm"``
    uses ``Omega(t) = exp(-iHt/hbar) Omega0 exp(i(H + F)t/hbar)``.
    """
    omega = np.asarray(omega0, dtype=complex)
    H = np.asarray(H, dtype=complex)
    F = _zero_like(H) if F is None else np.asarray(F, dtype=complex)
    _require_square(omega, "Omega")
    _require_hermitian(H, "H")
    _require_hermitian(F, "F")
    if not (H.shape == F.shape == omega.shape):
        raise ValueError("Omega, H and F must have matching shapes")
    n = _n_steps(t, dt)
    if method == "expm":
        u = scipy.linalg.expm(-1j * t * H / hbar)
        v = scipy.linalg.expm(1j * t * (H + F) / hbar)
        return u @ omega @ v
    if method != "rk4":
        raise ValueError(f"unknown method {method!r}")
    c = -1j / hbar

    def rhs(w):
        return c * (H @ w - w @ (H + F))

    return _rk4(rhs, omega, dt, n, guard=True)


def wave_operator_trajectory(omega0, H, F=None, dt=1e-3, n_steps=1000, every=1, hbar=1.0):
    """RK4 trajectory; returns ``(times, omegas)`` sampled every ``every`` steps incl. t = 0."""
    omega = np.asarray(omega0, dtype=complex)
    times = [0.0]
    out = [omega]
    done = 0
    while done < n_steps:
        k = min(every, n_steps - done)
        omega = evolve_wave_operator(omega, H, F, t=k * dt, dt=dt, hbar=hbar)
        done += k
        times.append(done * dt)
        out.append(omega)
    return np.array(times), np.array(out)


def vectorized_generator(H, F=None):
    """``H (x) 1 - 1 (x) (H + F)^T`` on the doubled space."""
    H = np.asarray(H, dtype=complex)
    F = _zero_like(H) if F is None else np.asarray(F, dtype=complex)
    return left_action(H) - right_action(H + F)


def evolve_vectorized(v, H, F=None, t=1.0, dt=1e-3, hbar=1.0, method="rk4"):
    """Same dynamics as :func:`evolve_wave_operator` on the vectorized state."""
    H = np.asarray(H, dtype=complex)
    F = _zero_like(H) if F is None else np.asarray(F, dtype=complex)
    _require_hermitian(H, "H")
    _require_hermitian(F, "F")
    if H.shape[0] ** 2 != np.asarray(v).size:
        raise ValueError("dimension mismatch between H and vectorized state")
    G = vectorized_generator(H, F)
    n = _n_steps(t, dt)
    v = np.asarray(v, dtype=complex)
    if method == "expm":
        w, U = np.linalg.eigh(G)
        return U @ (np.exp(-1j * t * w / hbar) * (U.conj().T @ v))
    if method != "rk4":
        raise ValueError(f"unknown method {method!r}")
    A = (-1j / hbar) * G
    return _rk4(lambda y: A @ y, v, dt, n, guard=True)


def gauge_transform(v, U):
    """``(1 (x) U) |Omega>``; leaves the reduced density and ``O (x) 1`` observables alone."""
    U = np.asarray(U)
    _require_square(U, "U")
    if np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) > UNITARY_TOL:
        raise ValueError("U must be unitary")
    if U.shape[0] ** 2 != np.asarray(v).size:
        raise ValueError("dimension mismatch between U and vectorized state")
    # (1 (x) U) vec(Omega) = vec(Omega U^T)
    return vectorize(devectorize(v) @ U.T)


def coherent_state(n, x0, p0=0.0, hbar=1.0):
    """Truncated coherent state with mean position ``x0`` and momentum ``p0``."""
    alpha = (x0 + 1j * p0) / np.sqrt(2 * hbar)
    amp = np.empty(n, complex)
    amp[0] = np.exp(-abs(alpha) ** 2 / 2)
    for k in range(1, n):
        amp[k] = amp[k - 1] * alpha / np.sqrt(k)
    return amp / np.linalg.norm(amp)


def bloch_wave_operator(H, beta, hbar=1.0):
    """Matrix solution of the imaginary-time wave-operator equation from ``Omega(0) = 1``.

    With ``F = 0`` the flow ``dOmega/dbeta = -(H Omega + Omega H)/4`` is solved by
    ``exp(-beta H / 2)``.
    """
    w, U = np.linalg.eigh(np.asarray(H))
    return (U * np.exp(-beta * (w - w[0]) / 2)) @ U.conj().T


def bloch_hilbert_rk4(H, beta, dbeta):
    """Step the imaginary-time wave-operator equation with RK4 and per-step renormalization."""
    H = np.asarray(H, dtype=complex)
    omega = np.eye(H.shape[0], dtype=complex)
    n = _n_steps(beta, dbeta)

    def rhs(w):
        return -0.25 * (H @ w + w @ H)

    for _ in range(n):
        omega = _rk4(rhs, omega, dbeta, 1, guard=False)
        omega /= np.linalg.norm(omega)
    return omega


MAGIC = b"WOPM"
VERSION = 1


def dump_matrix(path, a):
    """Write ``a`` as header {magic, version, N, dtype} + row-major little-endian complex128."""
    a = np.asarray(a, dtype="<c16")
    _require_square(a, "matrix")
    header = MAGIC + np.array([VERSION, a.shape[0]], dtype="<u4").tobytes() + b"c16\0"
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(a).tobytes())


def load_matrix(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a matrix dump")
    version, n = np.frombuffer(data[4:12], dtype="<u4")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    if data[12:16] != b"c16\0":
        raise ValueError(f"{path}: unsupported dtype tag {data[12:16]!r}")
    payload = np.frombuffer(data[16:], dtype="<c16")
    if payload.size != n * n:
        raise ValueError(f"{path}: payload size {payload.size} != {n}x{n}")
    return payload.reshape(n, n).astype(complex)
