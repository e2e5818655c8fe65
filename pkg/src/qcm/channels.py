"""Channel representations, conversions, constructors and the Weyl twirl.

Conventions
-----------
Operators are vectorised row-major, ``vec(A)[a*d + b] = A[a, b]``, so the
superoperator of ``rho -> K rho K^dag`` is ``kron(K, K.conj())``.

The Choi state carries a ``1/d`` normalisation,

    J(T) = (1/d) sum_{j,k} T(|j><k|) (x) |j><k|,

with the *output* system as the first tensor factor.  For a CPTP map
``Tr J = 1`` and tracing out the first factor leaves ``I/d``.

The Liouville matrix is taken in the trace-orthonormal Hermitian basis
``{I/sqrt(d), normalised generalised Gell-Mann matrices}``, so that
``L[i, j] = Tr(B_i T(B_j))`` is real for Hermiticity-preserving maps and the
unital block is ``L[1:, 1:]``.
"""

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import product

import numpy as np

from . import matkernel as mk
from .validation import (
    DimensionError,
    NotCPTPError,
    PreconditionError,
    check_probability,
    check_square,
)

REPS = ("kraus", "choi", "liouville", "superop")
KRAUS_CUTOFF = 1e-12
CPTP_TOL = 1e-9


def _freeze(a):
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@lru_cache(maxsize=None)
def gell_mann_basis(d):
    """Trace-orthonormal Hermitian basis of d x d matrices, first element I/sqrt(d).

    Returned as an array of shape (d*d, d, d).
    """
    basis = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            S = np.zeros((d, d), dtype=complex)
            S[j, k] = S[k, j] = 1 / np.sqrt(2)
            A = np.zeros((d, d), dtype=complex)
            A[j, k] = -1j / np.sqrt(2)
            A[k, j] = 1j / np.sqrt(2)
            basis += [S, A]
    for l in range(1, d):
        D = np.zeros((d, d), dtype=complex)
        D[np.arange(l), np.arange(l)] = 1.0
        D[l, l] = -l
        basis.append(D / np.sqrt(l * (l + 1)))
    out = np.array(basis)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def _basis_columns(d):
    """Unitary whose columns are vec(B_i)."""
    B = gell_mann_basis(d).reshape(d * d, d * d).T.copy()
    B.flags.writeable = False
    return B


def _reshuffle(M, d):
    # superop[(a,b),(j,k)] <-> d * choi[(a,j),(b,k)]; the permutation is an involution
    return M.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)


class Channel:
    """A linear map on d x d matrices held in one representation.

    Instances are immutable.  Other representations are computed on demand
    and cached.  The map need not be CPTP: differences of channels are
    ordinary ``Channel`` objects too, only :attr:`kraus` requires complete
    positivity.

    Parameters
    ----------
    data : array or list of arrays
        Kraus operators (``rep="kraus"``), or a d^2 x d^2 matrix.
    rep : {"kraus", "choi", "liouville", "superop"}
    """

    def __init__(self, data, rep="kraus"):
        if rep not in REPS:
            raise ValueError(f"unknown representation {rep!r}; expected one of {REPS}")
        if rep == "kraus":
            ops = np.array(data, dtype=complex)
            if ops.ndim == 2:
                ops = ops[None]
            if ops.ndim != 3 or ops.shape[1] != ops.shape[2] or ops.shape[0] == 0:
                raise DimensionError(f"Kraus operators must be square d x d matrices, got {ops.shape}")
            self._d = ops.shape[1]
            self._data = _freeze(ops)
        else:
            M = check_square(np.asarray(data, dtype=complex), rep)
            d = int(round(np.sqrt(M.shape[0])))
            if d * d != M.shape[0]:
                raise DimensionError(f"{rep} matrix side {M.shape[0]} is not a perfect square")
            self._d = d
            self._data = _freeze(M)
        self._rep = rep

    def __repr__(self):
        return f"Channel(d={self.d}, rep={self.rep!r})"

    @property
    def d(self):
        return self._d

    @property
    def rep(self):
        return self._rep

    @property
    def data(self):
        return self._data

    @cached_property
    def superop(self):
        d = self.d
        if self.rep == "kraus":
            S = sum(np.kron(K, K.conj()) for K in self._data)
        elif self.rep == "superop":
            S = self._data
        elif self.rep == "choi":
            S = d * _reshuffle(self._data, d)
        else:
            B = _basis_columns(d)
            S = B @ self._data @ B.conj().T
        return _freeze(S)

    @cached_property
    def choi(self):
        d = self.d
        if self.rep == "choi":
            return self._data
        if self.rep == "kraus":
            v = self._data.reshape(len(self._data), -1)
            return _freeze(v.T @ v.conj() / d)
        return _freeze(_reshuffle(self.superop, d) / d)

    @cached_property
    def liouville(self):
        if self.rep == "liouville":
            return self._data
        B = _basis_columns(self.d)
        return _freeze(B.conj().T @ self.superop @ B)

    @cached_property
    def kraus(self):
        """Kraus operators; raises :class:`NotCPTPError` if the map is not CP."""
        if self.rep == "kraus":
            return self._data
        d = self.d
        w, V = np.linalg.eigh(mk.hermitian_part(d * self.choi))
        herm_defect = np.max(np.abs(self.choi - self.choi.conj().T))
        if herm_defect > CPTP_TOL or w[0] < -CPTP_TOL:
            raise NotCPTPError("not completely positive: Choi matrix has negative eigenvalues")
        keep = w > KRAUS_CUTOFF
        ops = (V[:, keep] * np.sqrt(w[keep])).T.reshape(-1, d, d)
        if len(ops) == 0:
            ops = np.zeros((1, d, d))
        return _freeze(ops[::-1])

    def to(self, rep):
        if rep == self.rep:
            return self
        return Channel(getattr(self, rep), rep)

    def __call__(self, rho):
        return apply(self, rho)

    def __sub__(self, other):
        return difference(self, other)

    def __add__(self, other):
        _same_dim(self, other)
        return Channel(self.superop + other.superop, "superop")

    def __rmul__(self, scalar):
        return Channel(scalar * self.superop, "superop")


def _same_dim(a, b):
    if a.d != b.d:
        raise DimensionError(f"dimension mismatch: {a.d} vs {b.d}")


def convert(ch, target_rep):
    """Return the same map in representation ``target_rep``."""
    return ch.to(target_rep)


def choi_distance(a, b):
    """Frobenius distance between the Choi states of two maps."""
    _same_dim(a, b)
    return float(np.linalg.norm(a.choi - b.choi))


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class CPTPReport:
    complete_positivity: bool
    trace_preservation: bool
    unitality: bool
    min_choi_eigenvalue: float
    trace_defect: float
    unital_defect: float

    @property
    def cptp(self):
        return self.complete_positivity and self.trace_preservation


def validate_cptp(ch, tol=CPTP_TOL):
    """Report complete positivity, trace preservation and unitality of ``ch``."""
    d = ch.d
    J = ch.choi
    herm_defect = float(np.max(np.abs(J - J.conj().T)))
    min_eig = float(np.linalg.eigvalsh(mk.hermitian_part(J))[0])
    tp_defect = float(np.max(np.abs(mk.partial_trace_first(J, d, d) - np.eye(d) / d)))
    mixed = np.eye(d) / d
    unital_defect = float(np.linalg.norm(apply(ch, mixed) - mixed))
    return CPTPReport(
        complete_positivity=bool(herm_defect <= tol and min_eig >= -tol),
        trace_preservation=bool(tp_defect <= tol),
        unitality=bool(unital_defect <= tol),
        min_choi_eigenvalue=min_eig,
        trace_defect=tp_defect,
        unital_defect=unital_defect,
    )


def require_cptp(ch, tol=CPTP_TOL):
    rep = validate_cptp(ch, tol)
    if not rep.complete_positivity:
        raise NotCPTPError(
            f"not completely positive: min Choi eigenvalue {rep.min_choi_eigenvalue:.3e}"
        )
    if not rep.trace_preservation:
        raise NotCPTPError(
            f"not completely positive and trace preserving: trace defect {rep.trace_defect:.3e}"
        )
    return ch


# --------------------------------------------------------------------------
# action and algebra


def apply(ch, rho):
    """Apply the map to an operator ``rho`` (or a pure state vector)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    d = ch.d
    if rho.shape != (d, d):
        raise DimensionError(f"operator must be {d} x {d}, got {rho.shape}")
    if ch.rep == "kraus":
        K = ch.kraus
        return np.einsum("kab,bc,kdc->ad", K, rho, K.conj())
    return (ch.superop @ rho.reshape(-1)).reshape(d, d)


def compose(a, b):
    """The map ``a o b`` (apply ``b`` first)."""
    _same_dim(a, b)
    if a.rep == "kraus" and b.rep == "kraus":
        ops = np.einsum("iab,jbc->ijac", a.kraus, b.kraus).reshape(-1, a.d, a.d)
        return Channel(ops, "kraus")
    return Channel(a.superop @ b.superop, "superop")


def tensor(a, b):
    """The map ``a (x) b`` on the product space."""
    if a.rep == "kraus" and b.rep == "kraus":
        ops = np.array([np.kron(A, B) for A in a.kraus for B in b.kraus])
        return Channel(ops, "kraus")
    da, db = a.d, b.d
    Sa = a.superop.reshape(da, da, da, da)
    Sb = b.superop.reshape(db, db, db, db)
    # out[(a1 a2),(b1 b2)] <- in[(j1 j2),(k1 k2)]
    S = np.einsum("abjk,cdlm->acbdjlkm", Sa, Sb).reshape((da * db) ** 2, (da * db) ** 2)
    return Channel(S, "superop")


def difference(a, b):
    """The (generally non-CP) map ``a - b``."""
    _same_dim(a, b)
    return Channel(a.choi - b.choi, "choi")


def identity_channel(d):
    return Channel(np.eye(d), "kraus")


# --------------------------------------------------------------------------
# Weyl operators and twirl


@lru_cache(maxsize=None)
def _shift_clock(d):
    X = np.roll(np.eye(d), 1, axis=0)
    Z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return X, Z


def weyl_operator(d, a, b):
    """Heisenberg-Weyl operator ``W_{a,b} = X^a Z^b``."""
    if not (0 <= a < d and 0 <= b < d):
        raise PreconditionError(f"Weyl indices must lie in Z_{d}, got ({a}, {b})")
    X, Z = _shift_clock(d)
    return np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, b)


@lru_cache(maxsize=None)
def weyl_operators(d):
    """All Weyl operators, shape (d, d, d, d) indexed ``[a, b]``."""
    W = np.array([[weyl_operator(d, a, b) for b in range(d)] for a in range(d)])
    W.flags.writeable = False
    return W


@dataclass(frozen=True)
class WeylChannel:
    """Mixture ``rho -> sum p[a, b] W_ab rho W_ab^dag``."""

    d: int
    probs: np.ndarray
    offdiag: float = field(default=0.0, compare=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (self.d, self.d):
            raise DimensionError(f"probs must be {self.d} x {self.d}, got {p.shape}")
        if np.min(p) < -1e-12 or abs(p.sum() - 1) > 1e-12:
            raise PreconditionError("Weyl probabilities must form a distribution")
        p = np.clip(p, 0.0, None)
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    def to_channel(self):
        return weyl_channel(self.probs)


def weyl_channel(probs):
    p = np.asarray(probs, dtype=float)
    d = p.shape[0]
    if p.shape != (d, d) or np.min(p) < -1e-12 or abs(p.sum() - 1) > 1e-12:
        raise PreconditionError("Weyl probabilities must be a d x d distribution")
    W = weyl_operators(d).reshape(d * d, d, d)
    w = np.sqrt(np.clip(p.reshape(-1), 0.0, None))
    keep = w > 0
    return Channel(w[keep, None, None] * W[keep], "kraus")


def twirl_channel(ch):
    """The Weyl-twirled map ``(1/d^2) sum_ab W_ab^dag o ch o W_ab``."""
    d = ch.d
    S = ch.superop
    acc = np.zeros_like(S)
    for W in weyl_operators(d).reshape(d * d, d, d):
        pre = np.kron(W, W.conj())
        post = np.kron(W.conj().T, W.T)
        acc += post @ S @ pre
    return Channel(acc / d**2, "superop")


def weyl_basis_choi(ch):
    """Choi state of ``ch`` expressed in the orthonormal basis vec(W_ab)/sqrt(d)."""
    d = ch.d
    U = weyl_operators(d).reshape(d * d, d * d).T / np.sqrt(d)
    return U.conj().T @ ch.choi @ U


def weyl_twirl(ch):
    """Twirl a CPTP map over the Weyl group and return the Weyl probabilities."""
    require_cptp(ch)
    d = ch.d
    M = weyl_basis_choi(twirl_channel(ch))
    probs = np.real(np.diagonal(M)).reshape(d, d)
    off = M - np.diag(np.diagonal(M))
    return WeylChannel(d, probs / probs.sum(), offdiag=float(np.max(np.abs(off))))


# --------------------------------------------------------------------------
# constructors


def _num_qubits(d):
    n = d.bit_length() - 1
    return n if d == 1 << n else None


@lru_cache(maxsize=None)
def pauli_operators(n):
    """The 4^n n-qubit Pauli strings, ordered base-4 in I, X, Y, Z (qubit 0 leftmost)."""
    single = np.array(
        [np.eye(2), [[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
    )
    out = []
    for idx in product(range(4), repeat=n):
        P = np.ones((1, 1), dtype=complex)
        for i in idx:
            P = np.kron(P, single[i])
        out.append(P)
    arr = np.array(out)
    arr.flags.writeable = False
    return arr


def pauli_label_index(label):
    idx = 0
    for ch in label.upper():
        idx = 4 * idx + "IXYZ".index(ch)
    return idx


def pauli_channel(probs):
    """Pauli channel from 4^n probabilities (array) or a ``{"XI": p, ...}`` dict."""
    if isinstance(probs, dict):
        n = len(next(iter(probs)))
        p = np.zeros(4**n)
        for label, val in probs.items():
            if len(label) != n:
                raise PreconditionError("Pauli labels must all have the same length")
            p[pauli_label_index(label)] += val
    else:
        p = np.asarray(probs, dtype=float).reshape(-1)
        n = int(round(np.log(len(p)) / np.log(4)))
        if 4**n != len(p):
            raise DimensionError("need 4^n Pauli probabilities")
    if np.min(p) < -1e-12 or abs(p.sum() - 1) > 1e-12:
        raise PreconditionError("Pauli probabilities must form a distribution")
    P = pauli_operators(n)
    w = np.sqrt(np.clip(p, 0.0, None))
    keep = w > 0
    return Channel(w[keep, None, None] * P[keep], "kraus")


def unitary_channel(U):
    U = check_square(np.asarray(U, dtype=complex), "unitary")
    if np.max(np.abs(U.conj().T @ U - np.eye(len(U)))) > 1e-10:
        raise PreconditionError("matrix is not unitary")
    return Channel(U, "kraus")


def phase_unitary(d, theta):
    """``U_phi = I + (e^{i theta} - 1)|0><0|``."""
    U = np.eye(d, dtype=complex)
    U[0, 0] = np.exp(1j * theta)
    return U


def amplitude_damping(gamma):
    gamma = check_probability(gamma, "gamma")
    K1 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    K2 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    return Channel([K1, K2], "kraus")


def depolarizing(q, d=2):
    """``rho -> (1 - q) rho + q Tr(rho) I/d``, written as a Weyl mixture."""
    q = check_probability(q, "q")
    p = np.full((d, d), q / d**2)
    p[0, 0] = 1 - q + q / d**2
    return weyl_channel(p)


def random_cptp(d, kraus_rank=None, rng=None):
    """Random CPTP map from a Haar isometry C^d -> C^d (x) C^rank (Stinespring)."""
    rng = np.random.default_rng() if rng is None else rng
    k = d * d if kraus_rank is None else int(kraus_rank)
    if k < 1:
        raise PreconditionError("kraus_rank must be >= 1")
    V = mk.haar_isometry(d * k, d, rng)
    return Channel(V.reshape(k, d, d), "kraus")


def stochastic_operators(d):
    """Trace-orthogonal unitaries used for random stochastic noise.

    n-qubit Pauli strings when d = 2^n, Weyl operators otherwise; the
    identity is always first.
    """
    n = _num_qubits(d)
    if n is not None:
        return pauli_operators(n)
    return weyl_operators(d).reshape(d * d, d, d)


def random_pauli_with_infidelity(d, r_target, rng=None):
    """Random stochastic channel with infidelity exactly ``r_target``.

    The identity weight is ``1 - r_target (d+1)/d``; the remaining mass is
    spread over the other d^2 - 1 operators with a flat Dirichlet draw.
    """
    rng = np.random.default_rng() if rng is None else rng
    p_err = r_target * (d + 1) / d
    if not 0.0 <= p_err <= 1.0:
        raise PreconditionError(f"r_target (d+1)/d = {p_err} must lie in [0, 1]")
    p = np.empty(d * d)
    p[0] = 1.0 - p_err
    p[1:] = p_err * rng.dirichlet(np.ones(d * d - 1))
    ops = stochastic_operators(d)
    return Channel(np.sqrt(p)[:, None, None] * ops, "kraus")


def pauli_error_map(d, p):
    """``rho -> p rho + (1 - p) X rho X^dag`` with X the cyclic shift."""
    p = check_probability(p, "p")
    X = weyl_operator(d, 1, 0)
    return Channel([np.sqrt(p) * np.eye(d), np.sqrt(1 - p) * X], "kraus")
