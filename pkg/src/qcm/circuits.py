"""Noisy three-qubit circuits, the circuit error tau and its scaling with depth.

Qubit 0 is the leftmost tensor factor.  Every round applies an ideal gate
and then the round's noise channel; the ideal circuit prepares ``|+>^3``
and measures the last qubit in the X basis.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np
from scipy import stats

from . import matkernel as mk
from .channels import Channel, random_pauli_with_infidelity, require_cptp, unitary_channel
from .parallel import ordered_map
from .validation import PreconditionError, check_positive_int

N_QUBITS = 3
DIM = 2**N_QUBITS
VARIANTS = ("a", "b")
NOISE_KINDS = ("systematic-unitary", "systematic-stochastic", "random-unitary", "random-stochastic")
DEFAULT_K = (4, 8, 16, 32, 64, 128)

SYSTEMATIC_THETA = 0.001
SYSTEMATIC_FLIP = 0.001
RANDOM_THETA = 0.03
RANDOM_INFIDELITY = 2 / 300

# file names of the figure data, indexed by noise kind
CSV_NAMES = {
    "systematic-unitary": "sumunitarynoise.csv",
    "systematic-stochastic": "sumstochasticnoise.csv",
    "random-unitary": "worstsumunitarynoise.csv",
    "random-stochastic": "worstsumstochasticnoise.csv",
}
# systematic noise is paired with the CZ/T gate set, random noise with CZ/H/T
DEFAULT_VARIANT = {
    "systematic-unitary": "a",
    "systematic-stochastic": "a",
    "random-unitary": "b",
    "random-stochastic": "b",
}

I2 = np.eye(2, dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
T = np.diag([1, np.exp(1j * np.pi / 4)])
Z = np.diag([1.0 + 0j, -1.0])
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
PAIRS = ((0, 1), (0, 2), (1, 2))


def _kron(*ops):
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def cz(i, j):
    """Controlled-Z between qubits i and j of the three-qubit register."""
    diag = np.ones(DIM, dtype=complex)
    for idx, bits in enumerate(product((0, 1), repeat=N_QUBITS)):
        if bits[i] and bits[j]:
            diag[idx] = -1
    return np.diag(diag)


def _on_qubit(op, k):
    ops = [I2] * N_QUBITS
    ops[k] = op
    return _kron(*ops)


@lru_cache(maxsize=None)
def gate_menu(variant):
    """The gate set a round is drawn from, as ``(labels, unitaries)``.

    Variant ``a``: CZ on one pair with T on the remaining qubit, or T on all
    three.  Variant ``b``: CZ on one pair with H or T on the remaining qubit,
    or H or T on each qubit independently.
    """
    labels, gates = [], []
    single = {"H": H, "T": T}
    if variant == "a":
        choices = ("T",)
    elif variant == "b":
        choices = ("H", "T")
    else:
        raise PreconditionError(f"variant must be 'a' or 'b', got {variant!r}")
    for i, j in PAIRS:
        (k,) = set(range(N_QUBITS)) - {i, j}
        for name in choices:
            labels.append(f"CZ{i}{j}.{name}{k}")
            gates.append(cz(i, j) @ _on_qubit(single[name], k))
    for names in product(choices, repeat=N_QUBITS):
        labels.append("".join(names))
        gates.append(_kron(*(single[n] for n in names)))
    gates = np.array(gates)
    gates.flags.writeable = False
    return tuple(labels), gates


def input_state():
    return _kron(PLUS[:, None], PLUS[:, None], PLUS[:, None])[:, 0]


def measurement_effect():
    """``I_4 (x) |+><+|``: outcome + of an X measurement on the last qubit."""
    return np.kron(np.eye(4), np.outer(PLUS, PLUS.conj()))


@dataclass(frozen=True)
class CircuitSpec:
    variant: str
    labels: tuple
    gates: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    M0: np.ndarray = field(repr=False)

    @property
    def K(self):
        return len(self.labels)

    @property
    def m(self):
        return int(round(np.real(np.trace(self.M0))))


def sample_circuit(variant, K, rng):
    """K rounds drawn uniformly from :func:`gate_menu` of the variant."""
    if K < 0:
        raise PreconditionError(f"K must be >= 0, got {K}")
    labels, menu = gate_menu(variant)
    idx = rng.integers(len(labels), size=K)
    gates = menu[idx] if K else np.zeros((0, DIM, DIM), dtype=complex)
    return CircuitSpec(variant, tuple(labels[i] for i in idx), gates, input_state(), measurement_effect())


def ziz():
    return _kron(Z, I2, Z)


def rotation(theta):
    """``cos(theta) I_8 + i sin(theta) ZIZ``."""
    return np.cos(theta) * np.eye(DIM) + 1j * np.sin(theta) * ziz()


@dataclass(frozen=True)
class NoiseModel:
    """Gate-independent noise applied after every round of one circuit."""

    kind: str
    channel: Channel = field(repr=False)

    def round_channel(self, k):
        return self.channel


def make_noise(kind, rng=None):
    """Noise of the given kind; the random kinds draw from ``rng`` once per call."""
    if kind == "systematic-unitary":
        ch = unitary_channel(rotation(SYSTEMATIC_THETA))
    elif kind == "systematic-stochastic":
        p = SYSTEMATIC_FLIP
        ch = Channel([np.sqrt(1 - p) * np.eye(DIM), np.sqrt(p) * ziz()], "kraus")
    elif kind == "random-unitary":
        V = mk.haar_unitary(DIM, rng)
        ch = unitary_channel(V @ rotation(RANDOM_THETA) @ V.conj().T)
    elif kind == "random-stochastic":
        ch = random_pauli_with_infidelity(DIM, RANDOM_INFIDELITY, rng)
    else:
        raise PreconditionError(f"unknown noise kind {kind!r}; expected one of {NOISE_KINDS}")
    return NoiseModel(kind, ch)


def _expect(M, rho):
    return float(np.real(np.vdot(M, rho)))


def simulate_tau(circuit, noise):
    """``|<M0, noisy(psi)> - <M0, ideal(psi)>|`` by density-matrix evolution."""
    psi = circuit.psi
    rho = np.outer(psi, psi.conj())
    for k, G in enumerate(circuit.gates):
        psi = G @ psi
        S = noise.round_channel(k).superop
        rho = (S @ (G @ rho @ G.conj().T).reshape(-1)).reshape(DIM, DIM)
    ideal = float(np.real(psi.conj() @ circuit.M0 @ psi))
    return abs(_expect(circuit.M0, rho) - ideal)


def telescoping_terms(circuit, noise):
    """Signed terms ``<M0, A_{K:k+1} (E_k - I) G_k (rho_{k-1})>`` whose sum is the error.

    ``A_j = E_j o G_j`` are the noisy rounds and ``rho_{k-1}`` the ideal
    state after k-1 rounds.  Costs O(K^2) round applications.
    """
    psi = circuit.psi
    gates = circuit.gates
    terms = []
    for k, G in enumerate(gates):
        psi = G @ psi
        ideal = np.outer(psi, psi.conj())
        S = noise.round_channel(k).superop
        X = (S @ ideal.reshape(-1)).reshape(DIM, DIM) - ideal
        for j in range(k + 1, len(gates)):
            Gj = gates[j]
            Sj = noise.round_channel(j).superop
            X = (Sj @ (Gj @ X @ Gj.conj().T).reshape(-1)).reshape(DIM, DIM)
        terms.append(_expect(circuit.M0, X))
    return np.array(terms)


# --------------------------------------------------------------------------
# Figure 2 experiment


@dataclass(frozen=True)
class ScalingRow:
    K: int
    mean: float
    stderr: float
    n: int


@dataclass(frozen=True)
class ScalingTable:
    rows: tuple
    slope: float
    slope_stderr: float
    variant: str = ""
    kind: str = ""

    def csv(self):
        """The figure data: exactly ``numgates,mean``."""
        lines = ["numgates,mean"] + [f"{r.K},{r.mean!r}" for r in self.rows]
        return "\n".join(lines) + "\n"

    def full_csv(self):
        lines = ["numgates,mean,stderr,n"] + [f"{r.K},{r.mean!r},{r.stderr!r},{r.n}" for r in self.rows]
        return "\n".join(lines) + "\n"

    def summary(self):
        return {
            "variant": self.variant,
            "kind": self.kind,
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "rows": [[r.K, r.mean, r.stderr, r.n] for r in self.rows],
        }


def mean_stderr(values):
    """Mean by exactly rounded summation (order independent) and its standard error."""
    values = list(values)
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def fit_scaling(K, tau):
    """OLS slope of log(tau) against log(K) and its standard error."""
    K = np.asarray(K, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if len(K) != len(tau):
        raise PreconditionError("K and tau must have the same length")
    if len(K) < 3:
        raise PreconditionError(f"a scaling fit needs at least 3 points, got {len(K)}")
    if np.any(tau <= 0) or np.any(K <= 0):
        raise PreconditionError("scaling fit needs strictly positive K and tau")
    res = stats.linregress(np.log(K), np.log(tau))
    return float(res.slope), float(res.stderr)


def _cell(args):
    variant, kind, K, index, seed = args
    rng = mk.make_rng(seed, K, index)
    circuit = sample_circuit(variant, K, rng)
    noise = make_noise(kind, rng)
    return simulate_tau(circuit, noise)


def figure2_run(variant, kind, n_circuits=25, k_list=DEFAULT_K, seed=0, threads=1):
    """Mean tau over ``n_circuits`` fresh circuits per depth, plus the log-log slope.

    Circuit ``i`` at depth ``K`` draws its gates and noise from the stream
    ``(seed, K, i)``, so the table does not depend on ``threads``.
    """
    n_circuits = check_positive_int(n_circuits, "n_circuits")
    if variant not in VARIANTS:
        raise PreconditionError(f"variant must be 'a' or 'b', got {variant!r}")
    if kind not in NOISE_KINDS:
        raise PreconditionError(f"unknown noise kind {kind!r}")
    k_list = sorted({int(k) for k in k_list})
    if not k_list or k_list[0] < 0:
        raise PreconditionError("depths must be non-negative")
    tasks = [(variant, kind, K, i, seed) for K in k_list for i in range(n_circuits)]
    taus = ordered_map(_cell, tasks, threads)
    rows = []
    for j, K in enumerate(k_list):
        mean, se = mean_stderr(taus[j * n_circuits : (j + 1) * n_circuits])
        rows.append(ScalingRow(K, mean, se, n_circuits))
    fit_rows = [r for r in rows if r.K > 0 and r.mean > 0]
    if len(fit_rows) >= 3:
        slope, slope_se = fit_scaling([r.K for r in fit_rows], [r.mean for r in fit_rows])
    else:
        slope, slope_se = float("nan"), float("nan")
    return ScalingTable(tuple(rows), slope, slope_se, variant, kind)


# --------------------------------------------------------------------------
# average per-round error t_avg,m


def _projector_frames(n, d, m, rng):
    # columns of Q span a Haar-random m-dimensional subspace; QQ^dag does not
    # depend on the phases of R, so no phase fix is needed here
    G = mk.ginibre((n, d, m), rng)
    Q, _ = np.linalg.qr(G)
    return Q


@dataclass(frozen=True)
class TavgEstimate:
    mean: float
    stderr: float
    second_moment: float
    second_moment_stderr: float
    n_samples: int

    def to_dict(self):
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "second_moment": self.second_moment,
            "second_moment_stderr": self.second_moment_stderr,
            "n_samples": self.n_samples,
        }


def tavg_mc(ch, m, n_samples, rng, chunk=100_000):
    """Monte-Carlo ``E |<M, E(psi) - psi>|`` over Haar psi and Haar rank-m projectors M."""
    require_cptp(ch)
    d = ch.d
    if not 1 <= m <= d:
        raise PreconditionError(f"projector rank must satisfy 1 <= m <= d, got {m}")
    n_samples = check_positive_int(n_samples, "n_samples")
    S = np.asarray(ch.superop) - np.eye(d * d)
    t_sum, t2_sum, t4_sum = [], [], []
    done = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        psi = mk.haar_states(n, d, rng)
        Q = _projector_frames(n, d, m, rng)
        vec = np.einsum("ni,nj->nij", psi, psi.conj()).reshape(n, d * d)
        out = (vec @ S.T).reshape(n, d, d)
        t = np.abs(np.real(np.einsum("nja,njk,nka->n", Q.conj(), out, Q)))
        t_sum.append(math.fsum(t))
        t2_sum.append(math.fsum(t * t))
        t4_sum.append(math.fsum(t**4))
        done += n
    N = n_samples
    mean = math.fsum(t_sum) / N
    m2 = math.fsum(t2_sum) / N
    m4 = math.fsum(t4_sum) / N
    se = math.sqrt(max(m2 - mean * mean, 0.0) / max(N - 1, 1))
    se2 = math.sqrt(max(m4 - m2 * m2, 0.0) / max(N - 1, 1))
    return TavgEstimate(mean, se, m2, se2, N)


def tavg_second_moment(ch, m):
    """Exact ``E[t^2]`` over Haar psi and Haar rank-m projectors.

    The two-copy averages are ``E[psi^{(x)2}] = (I + S)/(d^2 + d)`` and
    ``E[M^{(x)2}] = a pi_s + b pi_a`` with ``a = m(m+1)/(d(d+1))`` and
    ``b = m(m-1)/(d(d-1))``; the trace against ``Delta^{(x)2}`` is expanded
    with ``Tr (A (x) B) = Tr A Tr B`` and ``Tr S (A (x) B) = Tr AB``.
    """
    require_cptp(ch)
    d = ch.d
    if not 1 <= m <= d:
        raise PreconditionError(f"projector rank must satisfy 1 <= m <= d, got {m}")
    a = m * (m + 1) / (d * (d + 1))
    b = m * (m - 1) / (d * (d - 1)) if d > 1 else 0.0
    # E[M (x) M] = cI I + cS S
    cI, cS = (a + b) / 2, (a - b) / 2
    S = np.asarray(ch.superop) - np.eye(d * d)
    # A[j, k] = Delta(|j><k|)
    A = S.reshape(d, d, d, d).transpose(2, 3, 0, 1)
    DI = np.einsum("jjab->ab", A)
    trA = np.einsum("jkaa->jk", A)
    # Delta^{(x)2}(I) = DI (x) DI and Delta^{(x)2}(S) = sum_jk A_jk (x) A_kj
    tr_I_on_I = np.trace(DI) ** 2
    tr_S_on_I = np.trace(DI @ DI)
    tr_I_on_S = np.einsum("jk,kj->", trA, trA)
    tr_S_on_S = np.einsum("jkab,kjba->", A, A)
    V = cI * (tr_I_on_I + tr_I_on_S) + cS * (tr_S_on_I + tr_S_on_S)
    return float(np.real(V)) / (d * d + d)


def thm7_constants(m, d):
    """Lower-bound constants for ``t_avg,m >= c eps``: (exact-moment, as printed)."""
    corrected = m * (m + 1) / (d**3 * (d + 1) ** 2)
    return corrected, 2 * corrected
