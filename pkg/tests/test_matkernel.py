import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from qcm import matkernel as mk
from qcm.validation import DimensionError, PreconditionError

X = np.array([[0, 1], [1, 0]], dtype=complex)


def test_schatten_examples():
    M = np.diag([1.0, -1.0, 0.0])
    assert mk.schatten_norm(M, 1) == pytest.approx(2.0, abs=1e-15)
    assert mk.schatten_norm(M, 2) == pytest.approx(np.sqrt(2.0), abs=1e-15)
    assert mk.schatten_norm(np.eye(5), np.inf) == pytest.approx(1.0, abs=1e-15)
    assert mk.schatten_norm(M, 3) == pytest.approx(2 ** (1 / 3), abs=1e-15)


def test_schatten_rejects_bad_input():
    with pytest.raises(DimensionError):
        mk.schatten_norm(np.ones((2, 3)))
    with pytest.raises(PreconditionError):
        mk.schatten_norm(np.eye(2), 0.5)


def test_trace_norm_matches_schatten():
    rng = np.random.default_rng(0)
    H = mk.random_hermitian(6, rng)
    assert mk.trace_norm(H) == pytest.approx(mk.schatten_norm(H, 1), rel=1e-12)


def test_eigh_examples():
    s = mk.eigh(np.diag([1.0, 3.0]))
    assert np.allclose(s.eigenvalues, [3, 1])
    assert np.allclose(np.abs(s.eigenvectors), [[0, 1], [1, 0]])
    assert np.allclose(mk.eigh(X).eigenvalues, [1, -1])


def test_eigh_reconstructs_and_is_unitary():
    rng = np.random.default_rng(1)
    for d in (2, 5, 16):
        H = mk.random_hermitian(d, rng)
        s = mk.eigh(H)
        assert np.all(np.diff(s.eigenvalues) <= 0)
        assert np.linalg.norm(H - s.reconstruct(), 2) <= 1e-10 * np.linalg.norm(H, 2)
        V = s.eigenvectors
        assert np.max(np.abs(V.conj().T @ V - np.eye(d))) <= 1e-10


def test_eigh_rejects_non_hermitian():
    with pytest.raises(PreconditionError):
        mk.eigh(np.array([[0, 1], [0, 0]]))


def test_haar_unitary_d1_is_phase():
    u = mk.haar_unitary(1, np.random.default_rng(2))
    assert u.shape == (1, 1)
    assert abs(abs(u[0, 0]) - 1) < 1e-15


def test_haar_unitary_is_unitary():
    rng = np.random.default_rng(3)
    for _ in range(100):
        U = mk.haar_unitary(8, rng)
        assert np.max(np.abs(U.conj().T @ U - np.eye(8))) <= 1e-12


def test_haar_unitary_trace_moment():
    # E|Tr U|^2 = 1 for Haar U, any d
    rng = np.random.default_rng(4)
    n = 100_000
    vals = np.array([abs(np.trace(mk.haar_unitary(4, rng))) ** 2 for _ in range(n)])
    assert abs(vals.mean() - 1) <= 3 * vals.std(ddof=1) / np.sqrt(n)


def test_haar_unitary_left_invariance():
    # the distribution of |U_00|^2 is Beta(1, d-1) and unchanged by a fixed rotation
    rng = np.random.default_rng(5)
    V = mk.haar_unitary(3, np.random.default_rng(99))
    a = np.array([abs((V @ mk.haar_unitary(3, rng))[0, 0]) ** 2 for _ in range(20_000)])
    assert stats.kstest(a, stats.beta(1, 2).cdf).pvalue > 0.01


def test_haar_unitary_bad_dim():
    with pytest.raises(DimensionError):
        mk.haar_unitary(0, np.random.default_rng())


def test_haar_state_norms():
    rng = np.random.default_rng(6)
    for _ in range(1000):
        psi = mk.haar_state(5, rng)
        assert abs(np.linalg.norm(psi) - 1) <= 1e-14
    psi = mk.haar_state(1, rng)
    assert abs(abs(psi[0]) - 1) <= 1e-15


def test_haar_state_qubit_marginal_uniform():
    rng = np.random.default_rng(7)
    states = mk.haar_states(100_000, 2, rng)
    x = np.abs(states[:, 0]) ** 2
    assert stats.kstest(x, "uniform").pvalue > 0.01


def test_same_seed_same_unitary():
    a = mk.haar_unitary(6, mk.make_rng(11, 3, 4))
    b = mk.haar_unitary(6, mk.make_rng(11, 3, 4))
    c = mk.haar_unitary(6, mk.make_rng(11, 3, 5))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_traceless_norm_saturation():
    rep = mk.traceless_norm_check(np.diag([1.0, -1.0, 0.0, 0.0]))
    assert abs(rep.l1 / rep.l2 - np.sqrt(2)) <= 1e-14
    rep = mk.traceless_norm_check(np.diag([1.0, 1.0, -1.0, -1.0]))
    assert abs(rep.l1 - 4) <= 1e-14
    assert abs(rep.l1 - 2 * rep.l2) <= 1e-14


def test_traceless_norm_random():
    rng = np.random.default_rng(8)
    for _ in range(1000):
        d = int(rng.integers(2, 9))
        rep = mk.traceless_norm_check(mk.random_hermitian(d, rng, traceless=True))
        assert rep.lower_ok and rep.upper_ok


def test_traceless_norm_requires_traceless():
    with pytest.raises(PreconditionError):
        mk.traceless_norm_check(np.eye(2))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 6), p=st.sampled_from([1, 2, 3, np.inf]))
def test_schatten_unitary_invariance(seed, d, p):
    rng = np.random.default_rng(seed)
    M = mk.ginibre((d, d), rng)
    U, V = mk.haar_unitary(d, rng), mk.haar_unitary(d, rng)
    assert abs(mk.schatten_norm(U @ M @ V, p) - mk.schatten_norm(M, p)) <= 1e-10


def test_partial_traces():
    rng = np.random.default_rng(9)
    A, B = mk.random_hermitian(2, rng), mk.random_hermitian(3, rng)
    M = np.kron(A, B)
    assert np.allclose(mk.partial_trace_first(M, 2, 3), np.trace(A) * B)
    assert np.allclose(mk.partial_trace_second(M, 2, 3), np.trace(B) * A)


def test_swap_operator():
    rng = np.random.default_rng(10)
    a, b = mk.haar_state(3, rng), mk.haar_state(3, rng)
    assert np.allclose(mk.swap_operator(3) @ np.kron(a, b), np.kron(b, a))
