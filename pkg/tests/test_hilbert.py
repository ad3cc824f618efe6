import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waveop import hilbert as hb
from waveop import oracle
from waveop.errors import InstabilityError
from waveop.model import HamiltonianSpec

seeds = st.integers(0, 2 ** 32 - 1)


def rand_complex(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def harmonic(n, hbar=1.0):
    return hb.hamiltonian_matrix(HamiltonianSpec.benchmark(2), n, hbar)


def test_position_momentum_n2():
    X, P = hb.build_position_momentum(2, 1.0)
    s = 1 / np.sqrt(2)
    assert np.allclose(X, [[0, s], [s, 0]], atol=1e-15)
    assert np.allclose(hb.commutator(X, P), 1j * np.diag([1, -1]), atol=1e-15)


@pytest.mark.parametrize("n", [2, 3, 8, 17])
def test_position_momentum_hermitian_and_defect(n):
    X, P = hb.build_position_momentum(n, 0.7)
    assert hb.is_hermitian(X) and hb.is_hermitian(P)
    defect = np.eye(n)
    defect[-1, -1] = 1 - n
    assert np.allclose(hb.commutator(X, P), 0.7j * defect, atol=1e-12)


def test_position_momentum_rejects_small():
    with pytest.raises(ValueError):
        hb.build_position_momentum(1)


def test_hamiltonian_matrix_harmonic_spectrum():
    w = np.linalg.eigvalsh(harmonic(20))
    assert np.allclose(w, np.arange(20) + 0.5, atol=1e-12)


def test_density_examples():
    om = np.array([[1, 0], [1, 0]]) / np.sqrt(2)
    rho = hb.density_from_wave(om)
    assert np.allclose(rho, 0.5 * np.ones((2, 2)))
    assert np.allclose(np.linalg.eigvalsh(rho), [0, 1])
    U = hb.random_unitary(5, np.random.default_rng(1))
    assert np.allclose(hb.density_from_wave(U / np.sqrt(5)), np.eye(5) / 5, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_density_is_psd(seed):
    rng = np.random.default_rng(seed)
    rho = hb.density_from_wave(rand_complex(rng, 8, 8))
    assert hb.is_hermitian(rho, 1e-12)
    assert np.linalg.eigvalsh(rho).min() >= -1e-12 * np.trace(rho).real


def test_expectation_examples():
    rng = np.random.default_rng(2)
    om = rand_complex(rng, 6, 6)
    om /= np.linalg.norm(om)
    assert hb.expectation_wave(om, np.eye(6)) == pytest.approx(1.0, abs=1e-14)
    H = harmonic(32)
    w, v = np.linalg.eigh(H)
    proj = np.outer(v[:, 0], v[:, 0].conj())
    assert hb.expectation_wave(proj, H) == pytest.approx(0.5, abs=1e-12)
    O = hb.random_hermitian(6, rng)
    rho = hb.density_from_wave(om)
    assert hb.expectation_wave(om, O) == pytest.approx(np.trace(rho @ O).real, abs=1e-12)
    with pytest.raises(ValueError):
        hb.expectation_wave(np.zeros((3, 3)), np.eye(3), normalize=True)


def test_vectorize_examples():
    a, b, c, d = 1.0, 2.0 + 1j, -3.0, 4j
    assert np.array_equal(hb.vectorize(np.array([[a, b], [c, d]])), [a, b, c, d])
    i2 = hb.vectorize(np.eye(2))
    assert np.vdot(i2, i2) == 2
    rng = np.random.default_rng(3)
    A, B = rand_complex(rng, 6, 6), rand_complex(rng, 6, 6)
    assert abs(np.vdot(hb.vectorize(A), hb.vectorize(B)) - np.trace(A.conj().T @ B)) < 1e-12
    assert np.array_equal(hb.devectorize(hb.vectorize(A)), A)
    with pytest.raises(ValueError):
        hb.devectorize(np.zeros(5))


def test_left_right_actions():
    rng = np.random.default_rng(4)
    A, B, om = rand_complex(rng, 4, 4), rand_complex(rng, 4, 4), rand_complex(rng, 4, 4)
    assert np.array_equal(hb.left_action(np.eye(4)), np.eye(16))
    assert np.array_equal(hb.right_action(np.eye(4)), np.eye(16))
    v = hb.vectorize(om)
    assert np.allclose(hb.devectorize(hb.left_action(A) @ v), A @ om, atol=1e-13)
    assert np.allclose(hb.devectorize(hb.right_action(A) @ v), om @ A, atol=1e-13)
    L, R = hb.left_action(A), hb.right_action(B)
    assert np.max(np.abs(L @ R - R @ L)) == 0
    with pytest.raises(ValueError):
        hb.apply_left(A, np.zeros(9))


def test_partial_trace_examples():
    v = hb.vectorize(np.eye(2) / np.sqrt(2))
    assert np.allclose(hb.partial_trace_recover(v), np.eye(2) / 2)
    rng = np.random.default_rng(5)
    om = rand_complex(rng, 4, 4)
    assert np.allclose(hb.partial_trace_recover(hb.vectorize(om)), om @ om.conj().T, atol=1e-13)
    psi, phi = rand_complex(rng, 4), rand_complex(rng, 4)
    rho = hb.partial_trace_recover(hb.vectorize(np.outer(psi, phi.conj())))
    assert np.allclose(rho, np.outer(psi, psi.conj()) * np.vdot(phi, phi), atol=1e-12)


def test_bopp_inverse_relations():
    X, P = hb.build_position_momentum(6, 0.5)
    B = hb.build_bopp_matrices(X, P, 0.5)
    I = np.eye(6)
    assert np.allclose(B.x - 0.25 * B.theta, np.kron(X, I), atol=1e-14)
    assert np.allclose(B.x + 0.25 * B.theta, np.kron(I, X.T), atol=1e-14)
    assert np.allclose(B.p + 0.25 * B.lam, np.kron(P, I), atol=1e-14)
    assert np.allclose(B.p - 0.25 * B.lam, np.kron(I, P.T), atol=1e-14)
    for m in (B.x, B.p, B.theta, B.lam):
        assert hb.is_hermitian(m)


@pytest.mark.parametrize("n", [4, 9, 16])
def test_bopp_interior_algebra(n):
    X, P = hb.build_position_momentum(n)
    B = hb.build_bopp_matrices(X, P)
    idx = hb.interior_indices(n)
    blk = np.ix_(idx, idx)
    one = np.eye(len(idx))
    assert np.max(np.abs(hb.commutator(B.x, B.p)[blk])) < 1e-12
    assert np.max(np.abs(hb.commutator(B.theta, B.lam)[blk])) < 1e-12
    assert np.max(np.abs(hb.commutator(B.p, B.theta)[blk] - 1j * one)) < 1e-12
    assert np.max(np.abs(hb.commutator(B.x, B.lam)[blk] - 1j * one)) < 1e-12
    # the defect is real: the full commutator is not the identity
    assert np.max(np.abs(hb.commutator(B.x, B.lam) - 1j * np.eye(n * n))) > 1


def test_bopp_dimension_mismatch():
    with pytest.raises(ValueError):
        hb.build_bopp_matrices(np.eye(3), np.eye(4))


def test_stationary_eigenprojector():
    rng = np.random.default_rng(6)
    H = hb.random_hermitian(6, rng)
    w, v = np.linalg.eigh(H)
    proj = np.outer(v[:, 2], v[:, 2].conj())
    out = hb.evolve_wave_operator(proj, H, None, t=2.0, dt=1e-3)
    assert np.max(np.abs(hb.density_from_wave(out) - proj)) < 1e-10
    vec = hb.evolve_vectorized(hb.vectorize(proj), H, None, t=2.0, dt=1e-3)
    assert np.max(np.abs(hb.partial_trace_recover(vec) - proj)) < 1e-10


def test_minus_h_gives_left_schrodinger():
    from scipy.linalg import expm

    rng = np.random.default_rng(7)
    H = hb.random_hermitian(5, rng)
    om = rand_complex(rng, 5, 5)
    out = hb.evolve_wave_operator(om, H, -H, t=1.5, dt=1e-3)
    assert np.max(np.abs(out - expm(-1.5j * H) @ om)) < 1e-10
    assert np.max(np.abs(hb.evolve_wave_operator(om, H, -H, t=1.5, dt=1e-3, method="expm") - out)) < 1e-10


def test_coherent_state_tracks_cosine():
    n = 16
    H = harmonic(n)
    X, _ = hb.build_position_momentum(n)
    psi = hb.coherent_state(n, 1.0)
    om = np.outer(psi, psi.conj())
    times, omegas = hb.wave_operator_trajectory(om, H, None, dt=1e-3, n_steps=6284, every=100)
    err = max(abs(hb.expectation_wave(o, X) - np.cos(t)) for t, o in zip(times, omegas))
    # truncating the coherent state at N = 16 costs ~1e-9 in <x>
    assert err < 1e-6


def test_non_hermitian_rejected():
    om = np.eye(3, dtype=complex)
    bad = np.array([[0, 1], [0, 0]], dtype=complex)
    with pytest.raises(ValueError):
        hb.evolve_wave_operator(np.eye(2), bad, None, t=0.1, dt=0.01)
    with pytest.raises(ValueError):
        hb.evolve_wave_operator(om, np.eye(3), bad, t=0.1, dt=0.01)


def test_instability_diagnostic():
    H = np.diag([0.0, 1e4]).astype(complex)
    with pytest.raises(InstabilityError):
        hb.evolve_wave_operator(np.ones((2, 2)), H, None, t=1.0, dt=0.1)


def test_vectorized_matches_matrix_route():
    rng = np.random.default_rng(8)
    H, F = hb.random_hermitian(6, rng), hb.random_hermitian(6, rng)
    om = rand_complex(rng, 6, 6)
    a = hb.evolve_wave_operator(om, H, F, t=1.0, dt=1e-3)
    b = hb.devectorize(hb.evolve_vectorized(hb.vectorize(om), H, F, t=1.0, dt=1e-3))
    c = hb.devectorize(hb.evolve_vectorized(hb.vectorize(om), H, F, t=1.0, dt=1e-3, method="expm"))
    assert np.max(np.abs(a - b)) < 1e-8
    assert np.max(np.abs(a - c)) < 1e-8
    O = hb.random_hermitian(6, rng)
    v = hb.vectorize(a)
    assert abs(hb.doubled_expectation(v, O) - hb.expectation_wave(a, O)) < 1e-10


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_gauge_invariance(seed):
    rng = np.random.default_rng(seed)
    U = hb.random_unitary(4, rng)
    v = hb.vectorize(rand_complex(rng, 4, 4))
    w = hb.gauge_transform(v, U)
    assert np.allclose(hb.partial_trace_recover(w), hb.partial_trace_recover(v), atol=1e-12)
    X, _ = hb.build_position_momentum(4)
    assert abs(hb.doubled_expectation(w, X) - hb.doubled_expectation(v, X)) < 1e-12
    assert np.array_equal(hb.gauge_transform(v, np.eye(4)), v)


def test_gauge_rejects_non_unitary():
    with pytest.raises(ValueError):
        hb.gauge_transform(np.zeros(4), 2 * np.eye(2))


@settings(max_examples=5, deadline=None)
@given(seeds)
def test_f_independence_and_trace(seed):
    rng = np.random.default_rng(seed)
    H, F1, F2 = (hb.random_hermitian(8, rng) for _ in range(3))
    om = rand_complex(rng, 8, 8)
    om /= np.linalg.norm(om)
    O = hb.random_hermitian(8, rng)
    _, a = hb.wave_operator_trajectory(om, H, F1, dt=2e-3, n_steps=1000, every=100)
    _, b = hb.wave_operator_trajectory(om, H, F2, dt=2e-3, n_steps=1000, every=100)
    for x, y in zip(a, b):
        assert abs(hb.expectation_wave(x, O) - hb.expectation_wave(y, O)) < 1e-8
        assert abs(np.trace(hb.density_from_wave(x)).real - 1) < 1e-9
        assert np.linalg.eigvalsh(hb.density_from_wave(x)).min() >= -1e-10


def test_liouville_consistency_n8():
    rng = np.random.default_rng(9)
    H, F = hb.random_hermitian(8, rng), hb.random_hermitian(8, rng)
    psi = rand_complex(rng, 8)
    om = np.outer(psi, psi.conj()) / np.vdot(psi, psi).real
    _, omegas = hb.wave_operator_trajectory(om, H, F, dt=1e-3, n_steps=5000, every=500)
    _, rhos = oracle.liouville_direct(om @ om.conj().T, H, 5.0, 1e-3, every=500)
    assert max(np.max(np.abs(hb.density_from_wave(o) - r)) for o, r in zip(omegas, rhos)) < 1e-8


def test_ehrenfest_relation():
    rng = np.random.default_rng(10)
    H, F, O = (hb.random_hermitian(6, rng) for _ in range(3))
    om = rand_complex(rng, 6, 6)
    om /= np.linalg.norm(om)
    dt = 1e-3
    before = hb.evolve_wave_operator(om, H, F, t=0.5 - dt, dt=dt / 10)
    mid = hb.evolve_wave_operator(before, H, F, t=dt, dt=dt / 10)
    after = hb.evolve_wave_operator(mid, H, F, t=dt, dt=dt / 10)
    deriv = (hb.expectation_wave(after, O) - hb.expectation_wave(before, O)) / (2 * dt)
    comm = hb.expectation_wave(mid, hb.commutator(O, H) / 1j, normalize=False)
    assert abs(deriv - comm) < 1e-6


def test_bloch_routes_agree():
    H = hb.hamiltonian_matrix(HamiltonianSpec.benchmark(4), 48)
    exact = hb.bloch_wave_operator(H, 2.0)
    stepped = hb.bloch_hilbert_rk4(H, 2.0, 1e-3)
    assert np.max(np.abs(exact / np.linalg.norm(exact) - stepped)) < 1e-8


def test_matrix_dump_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    a = rand_complex(rng, 5, 5)
    path = tmp_path / "m.bin"
    hb.dump_matrix(path, a)
    raw = path.read_bytes()
    assert raw[:4] == b"WOPM"
    assert np.array_equal(hb.load_matrix(path), a)
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        hb.load_matrix(path)
