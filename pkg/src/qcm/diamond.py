"""Diamond norm and diamond distance with certified duality gaps.

Choi matrices passed in here follow the package convention ``Tr J = 1``
for channels; the solver works with ``d * J``, the unnormalised Choi
matrix used in the SDP literature.
"""

from dataclasses import asdict, dataclass

import numpy as np

from . import metrics
from .channels import Channel, identity_channel, require_cptp, stochastic_operators
from .sdp import solve_diamond_sdp
from .validation import PreconditionError, SolverError, check_hermitian

GAP_TOL = 1e-8
BOUND_TOL = 1e-8


@dataclass(frozen=True)
class DiamondResult:
    """Certified value of a diamond norm (or of half of one, for distances).

    ``primal`` and ``dual`` bracket the exact value; ``value`` is their midpoint.
    """

    value: float
    primal: float
    dual: float
    gap: float
    iterations: int
    method: str = "sdp"

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return metrics.dumps17(self.to_dict(), **kw)

    def halved(self):
        return DiamondResult(
            self.value / 2, self.primal / 2, self.dual / 2, self.gap / 2, self.iterations, self.method
        )


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float

    def contains(self, x, slack=BOUND_TOL):
        return self.lower - slack <= x <= self.upper + slack


def _as_choi(T):
    if isinstance(T, Channel):
        return np.asarray(T.choi)
    return np.asarray(T, dtype=complex)


def diamond_norm(T, gap_tol=GAP_TOL, max_iter=100):
    """Completely bounded trace norm of a Hermiticity-preserving map.

    ``T`` is a :class:`Channel` (any linear map) or its Choi matrix with the
    ``1/d`` normalisation.  Raises :class:`SolverError` if the duality gap
    cannot be certified below ``gap_tol``.
    """
    J = check_hermitian(_as_choi(T), name="Choi matrix")
    d = int(round(np.sqrt(J.shape[0])))
    if d * d != J.shape[0]:
        raise PreconditionError(f"Choi matrix side {J.shape[0]} is not a perfect square")
    # aim one decade below the contract so the reported gap has headroom
    st = solve_diamond_sdp(d * J, d, gap_tol=gap_tol / 10, max_iter=max_iter)
    gap = max(st.dual - st.primal, 0.0)
    res = DiamondResult(0.5 * (st.primal + st.dual), st.primal, st.dual, gap, st.iterations)
    if gap > gap_tol:
        raise SolverError(f"diamond-norm SDP did not converge: duality gap {gap:.3e} > {gap_tol:.1e}", res)
    return res


def _stochastic_identity_weight(ch, tol=1e-12):
    """Identity weight if ``ch`` is a Pauli/Weyl mixture, else ``None``."""
    d = ch.d
    ops = stochastic_operators(d)
    U = ops.reshape(d * d, d * d).T / np.sqrt(d)
    M = U.conj().T @ ch.choi @ U
    if np.max(np.abs(M - np.diag(np.diagonal(M)))) > tol:
        return None
    return float(np.real(M[0, 0]))


def _unitary_arc_distance(U):
    """``sin(arc/2)`` where ``arc`` is the smallest arc holding the spectrum of U."""
    phases = np.sort(np.mod(np.angle(np.linalg.eigvals(U)), 2 * np.pi))
    gaps = np.diff(np.concatenate([phases, [phases[0] + 2 * np.pi]]))
    arc = 2 * np.pi - np.max(gaps)
    if arc >= np.pi:
        return 1.0
    return float(np.sin(arc / 2))


def analytic_diamond_distance(ch):
    """Closed-form distance for stochastic and unitary channels, else ``None``."""
    p00 = _stochastic_identity_weight(ch)
    if p00 is not None:
        eps = min(max(1.0 - p00, 0.0), 1.0)
        return DiamondResult(eps, eps, eps, 0.0, 0, "stochastic")
    K = np.asarray(ch.kraus)
    if len(K) == 1:
        eps = _unitary_arc_distance(K[0])
        return DiamondResult(eps, eps, eps, 0.0, 0, "unitary")
    return None


def diamond_distance(ch, method="sdp", gap_tol=GAP_TOL):
    """``eps = |||E - I|||_1 / 2`` for a CPTP channel.

    ``method="auto"`` uses the closed forms for stochastic and unitary
    channels and the SDP otherwise; ``"sdp"`` always solves the SDP.
    """
    require_cptp(ch)
    if method not in ("sdp", "auto"):
        raise ValueError(f"method must be 'sdp' or 'auto', got {method!r}")
    if method == "auto":
        res = analytic_diamond_distance(ch)
        if res is not None:
            return res
    return diamond_norm(ch.choi - identity_channel(ch.d).choi, gap_tol).halved()


def eq2_bounds(r, d):
    """Interval ``[(d+1) r/d, sqrt(d (d+1) r)]`` containing the diamond distance."""
    return Interval(*metrics.eq2_interval(r, d))


def cor5_bounds(ch, sign=1.0):
    """Interval ``[C/sqrt(2), sqrt(d^3 C^2/4 + (d+1)^2 r^2/2)]`` from unitarity and infidelity."""
    require_cptp(ch)
    return Interval(*metrics.cor5_interval(metrics.coherence_C(ch), metrics.infidelity(ch), ch.d, sign))


@dataclass(frozen=True)
class SandwichReport:
    d: int
    j2: float
    norm: float
    lower: float
    upper: float
    lower_ok: bool
    upper_ok: bool
    trace_annihilating: bool

    @property
    def ok(self):
        return self.lower_ok and self.upper_ok

    def to_dict(self):
        return asdict(self)


def jnorm_sandwich_check(T, norm=None, tol=BOUND_TOL):
    """Check ``c ||J(T)||_2 <= |||T|||_1 <= d^{3/2} ||J(T)||_2``.

    ``c = sqrt(2)`` when T annihilates the trace (a difference of
    trace-preserving maps), else ``c = 1``.  ``norm`` may be passed to
    reuse an already solved SDP.
    """
    J = check_hermitian(_as_choi(T), name="Choi matrix")
    d = int(round(np.sqrt(J.shape[0])))
    if norm is None:
        norm = diamond_norm(J).value
    j2 = float(np.linalg.norm(J))
    # T annihilates the trace iff Tr_out J(T) = 0
    ptr = np.einsum("aiaj->ij", J.reshape(d, d, d, d))
    annihilating = bool(np.max(np.abs(ptr)) <= 1e-10)
    c = np.sqrt(2.0) if annihilating else 1.0
    lower, upper = c * j2, d**1.5 * j2
    return SandwichReport(
        d=d,
        j2=j2,
        norm=float(norm),
        lower=float(lower),
        upper=float(upper),
        lower_ok=bool(norm - lower >= -tol),
        upper_ok=bool(upper - norm >= -tol),
        trace_annihilating=annihilating,
    )


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lower: float
    value: float
    upper: float
    ok: bool

    def to_dict(self):
        return asdict(self)


def bound_chain(ch, result=None, tol=BOUND_TOL, cor5_sign=1.0):
    """Every interval bound on the diamond distance of ``ch``, checked against the SDP.

    Returns ``(result, checks)`` with one :class:`BoundCheck` per bound.
    """
    require_cptp(ch)
    if result is None:
        result = diamond_distance(ch, method="sdp")
    eps = result.value
    d = ch.d
    r = metrics.infidelity(ch)
    checks = []
    for name, iv in (("eq2", eq2_bounds(r, d)), ("cor5", cor5_bounds(ch, cor5_sign))):
        checks.append(BoundCheck(name, iv.lower, eps, iv.upper, iv.contains(eps, tol)))
    delta = ch.choi - identity_channel(d).choi
    sw = jnorm_sandwich_check(delta, norm=2 * eps, tol=2 * tol)
    checks.append(BoundCheck("jnorm", sw.lower / 2, eps, sw.upper / 2, sw.ok))
    return result, checks
