import json

import numpy as np
import pytest

from qcm import channels as chn
from qcm import diamond
from qcm import matkernel as mk
from qcm import metrics
from qcm.validation import PreconditionError, SolverError


def cvxpy_diamond_norm(J, d):
    # general-form SDP for Hermiticity-preserving maps, solved by an external solver
    cp = pytest.importorskip("cvxpy")
    Jw = d * J
    n = d * d
    X = cp.Variable((n, n), complex=True)
    r0 = cp.Variable((d, d), hermitian=True)
    r1 = cp.Variable((d, d), hermitian=True)
    I = np.eye(d)
    M = cp.bmat([[cp.kron(I, r0), X], [X.H, cp.kron(I, r1)]])
    cons = [M >> 0, cp.trace(r0) == 1, cp.trace(r1) == 1]
    obj = cp.Maximize(cp.real(cp.trace(Jw.conj().T @ X)))
    prob = cp.Problem(obj, cons)
    prob.solve(solver="CLARABEL")
    return prob.value


def entangled_output_distance(ch, psi):
    d = ch.d
    rho = np.outer(psi, psi.conj())
    out = sum(np.kron(K, np.eye(d)) @ rho @ np.kron(K, np.eye(d)).conj().T for K in ch.kraus)
    return 0.5 * mk.trace_norm(out - rho)


def test_identity_distance_zero():
    res = diamond.diamond_distance(chn.identity_channel(3))
    assert abs(res.value) <= 1e-8
    assert res.gap <= 1e-8


def test_depolarizing():
    for d in (2, 3, 4):
        for q in (0.01, 0.3):
            res = diamond.diamond_distance(chn.depolarizing(q, d))
            assert abs(res.value - (d * d - 1) * q / d**2) <= 1e-8


def test_phase_unitary_matches_sine():
    for theta in (0.05, 0.2, 0.5, 1.0, np.pi / 2, 3.0):
        E = chn.unitary_channel(chn.phase_unitary(2, theta))
        assert abs(diamond.diamond_distance(E).value - np.sin(theta / 2)) <= 1e-7


def test_phase_unitary_matches_schmidt_grid():
    # max over pure inputs of sqrt(1 - |<psi|U (x) I|psi>|^2); only the Schmidt weights matter
    x = np.linspace(0, 1, 200_001)
    for theta in (0.2, 0.5, np.pi / 2):
        overlap = np.abs(x + (1 - x) * np.exp(1j * theta)) ** 2
        grid = np.sqrt(1 - overlap.min())
        E = chn.unitary_channel(chn.phase_unitary(2, theta))
        assert abs(diamond.diamond_distance(E).value - grid) <= 1e-6


def test_unitary_analytic_matches_sdp():
    rng = np.random.default_rng(0)
    for d in (2, 3, 4):
        for _ in range(5):
            E = chn.unitary_channel(mk.haar_unitary(d, rng))
            a = diamond.diamond_distance(E, method="auto")
            assert a.method == "unitary"
            assert abs(a.value - diamond.diamond_distance(E).value) <= 1e-7


def test_pauli_channels_equal_scaled_infidelity():
    rng = np.random.default_rng(1)
    for d in (2, 4):
        for _ in range(5):
            E = chn.pauli_channel(rng.dirichlet(np.ones(d * d)))
            r = metrics.infidelity(E)
            sdp = diamond.diamond_distance(E).value
            assert abs(sdp - (d + 1) * r / d) <= 1e-7
            auto = diamond.diamond_distance(E, method="auto")
            assert auto.method == "stochastic"
            assert abs(auto.value - (d + 1) * r / d) <= 1e-12


def test_weyl_channel_auto():
    p = np.random.default_rng(2).dirichlet(np.ones(9)).reshape(3, 3)
    E = chn.weyl_channel(p)
    assert diamond.diamond_distance(E, method="auto").value == pytest.approx(1 - p[0, 0], abs=1e-12)
    assert abs(diamond.diamond_distance(E).value - (1 - p[0, 0])) <= 1e-7


def test_generic_channel_has_no_closed_form():
    assert diamond.analytic_diamond_distance(chn.amplitude_damping(0.2)) is None


def test_unitary_invariance():
    rng = np.random.default_rng(3)
    for d in (2, 3):
        E = chn.random_cptp(d, rng=rng)
        V = chn.unitary_channel(mk.haar_unitary(d, rng))
        Vd = chn.Channel([V.kraus[0].conj().T])
        rotated = chn.compose(V, chn.compose(E, Vd))
        a = diamond.diamond_distance(E).value
        b = diamond.diamond_distance(rotated).value
        assert abs(a - b) <= 1e-8


def test_data_processing():
    rng = np.random.default_rng(4)
    for d in (2, 3):
        E, F = chn.random_cptp(d, rng=rng), chn.random_cptp(d, rng=rng)
        eps = diamond.diamond_distance(E).value
        after = diamond.diamond_norm(chn.compose(F, E) - F).value / 2
        assert after <= eps + 1e-8


def test_entangled_inputs_lower_bound():
    rng = np.random.default_rng(5)
    for d in (2, 3):
        E = chn.random_cptp(d, rng=rng)
        eps = diamond.diamond_distance(E).value
        for _ in range(50):
            assert entangled_output_distance(E, mk.haar_state(d * d, rng)) <= eps + 1e-8


def test_matches_external_solver():
    pytest.importorskip("cvxpy")
    rng = np.random.default_rng(6)
    for d in (2, 3):
        for _ in range(3):
            E = chn.random_cptp(d, rng=rng)
            J = E.choi - chn.identity_channel(d).choi
            ours = diamond.diamond_norm(J).value
            assert abs(ours - cvxpy_diamond_norm(J, d)) <= 1e-6


def test_amplitude_damping_matches_external_solver():
    # non-unital channel, no closed form here: compare with the external solver
    for g in (0.1, 0.5):
        res = diamond.diamond_distance(chn.amplitude_damping(g))
        expected = cvxpy_diamond_norm(chn.amplitude_damping(g).choi - chn.identity_channel(2).choi, 2) / 2
        assert abs(res.value - expected) <= 1e-6


def test_non_hermitian_choi_raises():
    J = np.zeros((4, 4), dtype=complex)
    J[0, 1] = 1
    with pytest.raises(PreconditionError):
        diamond.diamond_norm(J)
    with pytest.raises(PreconditionError):
        diamond.diamond_norm(np.eye(3))


def test_solver_error_carries_result():
    E = chn.random_cptp(3, rng=np.random.default_rng(7))
    with pytest.raises(SolverError) as info:
        diamond.diamond_norm(E.choi - chn.identity_channel(3).choi, max_iter=2)
    assert info.value.result.gap > 1e-8


def test_result_json():
    res = diamond.diamond_distance(chn.depolarizing(0.1))
    obj = json.loads(res.to_json())
    assert set(obj) == {"value", "primal", "dual", "gap", "iterations", "method"}
    assert obj["primal"] <= obj["value"] <= obj["dual"]


def test_bound_chain_holds():
    rng = np.random.default_rng(8)
    for d in (2, 3):
        E = chn.random_cptp(d, rng=rng)
        _, checks = diamond.bound_chain(E)
        assert [c.name for c in checks] == ["eq2", "cor5", "jnorm"]
        assert all(c.ok for c in checks)


def test_bound_chain_detects_broken_bound():
    E = 0.02 * chn.random_cptp(3, rng=np.random.default_rng(9)) + 0.98 * chn.identity_channel(3)
    res = diamond.diamond_distance(E)
    lo, hi = metrics.cor5_interval(metrics.coherence_C(E), metrics.infidelity(E), 3, sign=-1.0)
    _, checks = diamond.bound_chain(E, result=res, cor5_sign=-1.0)
    cor5 = [c for c in checks if c.name == "cor5"][0]
    assert cor5.upper == pytest.approx(hi)
    assert cor5.ok == (lo - 1e-8 <= res.value <= hi + 1e-8)


def test_sandwich_for_differences_of_channels():
    rng = np.random.default_rng(10)
    for d in (2, 3):
        E, F = chn.random_cptp(d, rng=rng), chn.random_cptp(d, rng=rng)
        rep = diamond.jnorm_sandwich_check(E.choi - F.choi)
        assert rep.trace_annihilating and rep.ok


def test_sandwich_general_map_uses_unit_constant():
    rep = diamond.jnorm_sandwich_check(chn.depolarizing(0.2).choi)
    assert not rep.trace_annihilating
    assert rep.lower == pytest.approx(rep.j2)
    assert rep.norm == pytest.approx(1.0, abs=1e-8)


def test_eq2_bounds_trivial_at_zero():
    iv = diamond.eq2_bounds(0.0, 3)
    assert iv.lower == 0 and iv.upper == 0
    assert iv.contains(1e-9)
