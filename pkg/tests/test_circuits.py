import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcm import channels as chn
from qcm import circuits as circ
from qcm import matkernel as mk
from qcm.diamond import diamond_distance
from qcm.metrics import infidelity
from qcm.validation import PreconditionError


def test_t_gate_is_pi_over_8_rotation():
    assert np.allclose(circ.T, np.diag([1, np.exp(1j * np.pi / 4)]), atol=1e-15)


def test_gate_menus():
    for variant, size in (("a", 4), ("b", 14)):
        labels, gates = circ.gate_menu(variant)
        assert len(labels) == len(set(labels)) == size
        for G in gates:
            assert np.max(np.abs(G.conj().T @ G - np.eye(8))) <= 1e-12
    # variant a has only diagonal gates
    for G in circ.gate_menu("a")[1]:
        assert np.allclose(G, np.diag(np.diag(G)))
    with pytest.raises(PreconditionError):
        circ.gate_menu("c")


def test_cz_acts_on_the_right_pair():
    assert np.allclose(np.diag(circ.cz(0, 1)), [1, 1, 1, 1, 1, 1, -1, -1])
    assert np.allclose(np.diag(circ.cz(1, 2)), [1, 1, 1, -1, 1, 1, 1, -1])


def test_input_and_measurement():
    psi = circ.input_state()
    assert np.allclose(psi, np.ones(8) / np.sqrt(8))
    M = circ.measurement_effect()
    assert np.allclose(M @ M, M, atol=1e-12) and np.allclose(M, M.conj().T)
    spec = circ.sample_circuit("a", 3, np.random.default_rng(0))
    assert spec.m == 4 and spec.K == 3


def test_empty_circuit():
    spec = circ.sample_circuit("b", 0, np.random.default_rng(1))
    assert spec.K == 0
    noise = circ.make_noise("random-unitary", np.random.default_rng(2))
    assert circ.simulate_tau(spec, noise) == 0
    with pytest.raises(PreconditionError):
        circ.sample_circuit("a", -1, np.random.default_rng())


def test_noiseless_circuit():
    spec = circ.sample_circuit("b", 40, np.random.default_rng(3))
    noise = circ.NoiseModel("none", chn.identity_channel(8))
    assert circ.simulate_tau(spec, noise) <= 1e-12


def test_noise_parameters():
    th = circ.SYSTEMATIC_THETA
    E = circ.make_noise("systematic-unitary").channel
    assert infidelity(E) == pytest.approx(1 - (64 * np.cos(th) ** 2 + 8) / 72, abs=1e-15)
    E = circ.make_noise("systematic-stochastic").channel
    assert infidelity(E) == pytest.approx(8 * 0.001 / 9, abs=1e-15)
    rng = np.random.default_rng(4)
    E = circ.make_noise("random-stochastic", rng).channel
    assert abs(infidelity(E) - 2 / 300) <= 1e-12
    E = circ.make_noise("random-unitary", rng).channel
    assert infidelity(E) == pytest.approx(1 - (64 * np.cos(0.03) ** 2 + 8) / 72, abs=1e-12)
    for kind in circ.NOISE_KINDS:
        assert chn.validate_cptp(circ.make_noise(kind, rng).channel, tol=1e-9).cptp
    with pytest.raises(PreconditionError):
        circ.make_noise("thermal")


def test_single_round_depolarizing():
    q = 0.05
    rng = np.random.default_rng(5)
    noise = circ.NoiseModel("depolarizing", chn.depolarizing(q, 8))
    for _ in range(10):
        spec = circ.sample_circuit("b", 1, rng)
        Gpsi = spec.gates[0] @ spec.psi
        ideal = np.real(Gpsi.conj() @ spec.M0 @ Gpsi)
        assert abs(circ.simulate_tau(spec, noise) - q * abs(0.5 - ideal)) <= 1e-14


def test_telescoping_terms_sum_to_error():
    rng = np.random.default_rng(6)
    for kind in circ.NOISE_KINDS:
        spec = circ.sample_circuit("b", 12, rng)
        noise = circ.make_noise(kind, rng)
        terms = circ.telescoping_terms(spec, noise)
        assert len(terms) == 12
        assert abs(abs(terms.sum()) - circ.simulate_tau(spec, noise)) <= 1e-13


def test_error_at_most_k_times_diamond_distance():
    rng = np.random.default_rng(7)
    for kind in circ.NOISE_KINDS:
        noise = circ.make_noise(kind, rng)
        eps = diamond_distance(noise.channel, method="auto").value
        for K in (4, 16, 64):
            spec = circ.sample_circuit(circ.DEFAULT_VARIANT[kind], K, rng)
            assert circ.simulate_tau(spec, noise) <= K * eps + 1e-12


def test_fit_scaling_exact_power_laws():
    K = np.array([4, 8, 16, 32, 64, 128])
    slope, se = circ.fit_scaling(K, 0.3 * K)
    assert abs(slope - 1) <= 1e-12
    slope, _ = circ.fit_scaling(K, 0.3 * np.sqrt(K))
    assert abs(slope - 0.5) <= 1e-12


def test_fit_scaling_noisy():
    rng = np.random.default_rng(8)
    K = np.array([4, 8, 16, 32, 64, 128])
    tau = 0.01 * K**0.7 * (1 + 0.01 * rng.standard_normal(len(K)))
    slope, _ = circ.fit_scaling(K, tau)
    assert abs(slope - 0.7) <= 0.05


def test_fit_scaling_errors():
    with pytest.raises(PreconditionError):
        circ.fit_scaling([1, 2, 4], [0.1, 0.0, 0.3])
    with pytest.raises(PreconditionError):
        circ.fit_scaling([1, 2], [0.1, 0.2])


def test_single_row_table():
    tab = circ.figure2_run("a", "systematic-unitary", n_circuits=1, k_list=[8])
    assert len(tab.rows) == 1
    assert tab.rows[0].stderr == 0 and tab.rows[0].n == 1
    assert np.isnan(tab.slope)
    with pytest.raises(PreconditionError):
        circ.figure2_run("a", "systematic-unitary", n_circuits=0)


def test_figure2_table_shape_and_csv():
    tab = circ.figure2_run("b", "random-unitary", n_circuits=3, k_list=[4, 8, 16], seed=1)
    assert [r.K for r in tab.rows] == [4, 8, 16]
    assert all(r.mean >= 0 for r in tab.rows)
    lines = tab.csv().splitlines()
    assert lines[0] == "numgates,mean"
    assert len(lines) == 4
    assert tab.full_csv().splitlines()[0] == "numgates,mean,stderr,n"


def test_figure2_deterministic_across_workers():
    a = circ.figure2_run("b", "random-stochastic", n_circuits=4, k_list=[4, 8, 16], seed=3, threads=1)
    b = circ.figure2_run("b", "random-stochastic", n_circuits=4, k_list=[4, 8, 16], seed=3, threads=2)
    assert a.csv() == b.csv() and a.full_csv() == b.full_csv()
    c = circ.figure2_run("b", "random-stochastic", n_circuits=4, k_list=[4, 8, 16], seed=4)
    assert c.csv() != a.csv()


def test_mean_stderr_order_independent():
    rng = np.random.default_rng(9)
    v = list(rng.random(1000) * 1e-3)
    assert circ.mean_stderr(v) == circ.mean_stderr(v[::-1])
    assert circ.mean_stderr([0.5]) == (0.5, 0.0)


def test_tavg_identity_is_zero():
    est = circ.tavg_mc(chn.identity_channel(2), 1, 1000, np.random.default_rng(10))
    assert est.mean == 0 and est.stderr == 0
    assert circ.tavg_second_moment(chn.identity_channel(3), 2) == 0


def test_tavg_depolarizing():
    # t = q |1/2 - x| with x uniform on [0, 1]: mean q/4, second moment q^2/12
    q = 0.1
    est = circ.tavg_mc(chn.depolarizing(q), 1, 200_000, np.random.default_rng(11))
    assert abs(est.mean - q / 4) <= 3 * est.stderr
    assert circ.tavg_second_moment(chn.depolarizing(q), 1) == pytest.approx(q * q / 12, rel=1e-12)


def test_tavg_second_moment_matches_mc():
    rng = np.random.default_rng(12)
    for d, m in ((2, 1), (3, 1), (3, 2), (4, 2)):
        E = chn.random_cptp(d, rng=rng)
        est = circ.tavg_mc(E, m, 200_000, rng)
        exact = circ.tavg_second_moment(E, m)
        assert abs(est.second_moment - exact) <= 4 * est.second_moment_stderr
        assert exact >= est.mean**2 - 3 * est.stderr


def test_tavg_full_rank_measurement_is_zero():
    E = chn.random_cptp(3, rng=np.random.default_rng(13))
    assert abs(circ.tavg_second_moment(E, 3)) <= 1e-15


def test_tavg_rank_checks():
    with pytest.raises(PreconditionError):
        circ.tavg_mc(chn.depolarizing(0.1), 3, 10, np.random.default_rng())
    with pytest.raises(PreconditionError):
        circ.tavg_second_moment(chn.depolarizing(0.1), 0)


def test_lower_bound_constants():
    corrected, printed = circ.thm7_constants(1, 2)
    assert corrected == pytest.approx(2 / 72)
    assert printed == pytest.approx(2 * corrected)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), K=st.integers(0, 20), kind=st.sampled_from(circ.NOISE_KINDS))
def test_tau_is_a_probability_shift(seed, K, kind):
    rng = mk.make_rng(seed)
    spec = circ.sample_circuit("b", K, rng)
    tau = circ.simulate_tau(spec, circ.make_noise(kind, rng))
    assert 0 <= tau <= 1
