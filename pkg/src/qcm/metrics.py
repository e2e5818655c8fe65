"""Closed-form error metrics of a channel relative to the identity.

All quantities are computed from the channel's representations; Haar
integrals only appear in the test oracles.
"""

import json
import re
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize

from . import matkernel as mk
from .channels import apply, identity_channel, require_cptp
from .validation import (
    PreconditionError,
    check_orthonormal_basis,
    check_positive_int,
    check_unit_vector,
)

BOUND_SLACK = 1e-9


def entanglement_fidelity(ch):
    """<Phi|J(E)|Phi> for the maximally entangled state Phi."""
    return float(np.real(np.trace(ch.superop))) / ch.d**2


def infidelity(ch):
    """Average gate infidelity to the identity, ``r = d (1 - F_pro) / (d + 1)``."""
    require_cptp(ch)
    d = ch.d
    return d * (1.0 - entanglement_fidelity(ch)) / (d + 1)


def state_infidelity(ch, psi):
    """``1 - <psi|E(psi psi^dag)|psi>``."""
    psi = check_unit_vector(psi)
    out = apply(ch, psi)
    return float(1.0 - np.real(psi.conj() @ out @ psi))


def basis_infidelity_sum(ch, basis):
    """Sum of the psi-infidelities over an orthonormal basis (rows of ``basis``).

    Never exceeds ``(d + 1) r``.
    """
    B = check_orthonormal_basis(basis, ch.d)
    return float(sum(state_infidelity(ch, B[:, j]) for j in range(ch.d)))


def population_matrix(ch, basis=None):
    """``c[j, k] = <j|E(|k><k|)|j>`` in the given basis (computational by default)."""
    d = ch.d
    B = np.eye(d, dtype=complex) if basis is None else check_orthonormal_basis(basis, d)
    C = np.empty((d, d))
    for k in range(d):
        out = apply(ch, B[:, k])
        C[:, k] = np.real(np.einsum("aj,ab,bj->j", B.conj(), out, B))
    return C


def _kraus_fidelity(x, K):
    # f(x) = sum_i |x^dag K_i x|^2 / |x|^4 and its Wirtinger gradient d f / d conj(x)
    n = np.real(x.conj() @ x)
    Kx = K @ x
    a = Kx @ x.conj()
    g = np.sum(np.abs(a) ** 2)
    KHx = np.einsum("iba,b->ia", K.conj(), x)
    dg = np.einsum("i,ia->a", a.conj(), Kx) + np.einsum("i,ia->a", a, KHx)
    return g / n**2, dg / n**2 - 2 * g * x / n**3


def _local_max_infidelity(K, x0, tol):
    d = len(x0)

    def fun(v):
        x = v[:d] + 1j * v[d:]
        f, grad = _kraus_fidelity(x, K)
        return f, np.concatenate([2 * grad.real, 2 * grad.imag])

    v0 = np.concatenate([x0.real, x0.imag])
    res = minimize(fun, v0, jac=True, method="L-BFGS-B", options={"ftol": tol, "gtol": tol, "maxiter": 2000})
    x = res.x[:d] + 1j * res.x[d:]
    x /= np.linalg.norm(x)
    return x


def max_infidelity_search(ch, restarts=50, rng=None, tol=1e-14):
    """Multi-start local ascent of r(E, psi) over pure states.

    Returns ``(value, psi)``; ``value`` is attained by ``psi`` and is hence a
    certified lower bound on the max-infidelity.
    """
    restarts = check_positive_int(restarts, "restarts")
    r = infidelity(ch)
    rng = np.random.default_rng() if rng is None else rng
    K = np.asarray(ch.kraus)
    d = ch.d
    best, best_psi = -np.inf, None
    for _ in range(restarts):
        psi = _local_max_infidelity(K, mk.haar_state(d, rng), tol)
        val = state_infidelity(ch, psi)
        if val > best:
            best, best_psi = val, psi
    if best > (d + 1) * r + BOUND_SLACK:
        raise RuntimeError(
            f"max-infidelity estimate {best} exceeds (d+1) r = {(d + 1) * r}; this is a bug"
        )
    return best, best_psi


def max_infidelity_estimate(ch, restarts=50, rng=None):
    """Lower estimate of max_psi r(E, psi); see :func:`max_infidelity_search`."""
    return max_infidelity_search(ch, restarts, rng)[0]


def unitarity(ch):
    """Unitarity ``||L_u||_F^2 / (d^2 - 1)`` from the unital Liouville block.

    Accepts any linear map, so ``unitarity(E - I)`` gives u(Delta).
    """
    d = ch.d
    if d < 2:
        return 1.0
    block = ch.liouville[1:, 1:]
    return float(np.real(np.vdot(block, block))) / (d * d - 1)


def rb_decay(ch):
    """Randomized-benchmarking decay constant ``p = 1 - d r / (d - 1)``."""
    d = ch.d
    return 1.0 - d * infidelity(ch) / (d - 1)


def relaxation_rate(ch):
    """``alpha = ||E(I/d) - I/d||_2``, the non-unitality of the channel."""
    d = ch.d
    mixed = np.eye(d) / d
    return float(np.linalg.norm(apply(ch, mixed) - mixed))


def relaxation_bound(ch):
    d = ch.d
    return np.sqrt(2.0) * (d + 1) * infidelity(ch) / d


def coherence_squared(u, p, d):
    c2 = (d * d - 1) / d**2 * (u - 2 * p + 1)
    if c2 < -1e-12:
        raise ArithmeticError(f"C^2 = {c2} is negative beyond rounding")
    return max(c2, 0.0)


def coherence_C(ch):
    """``C = sqrt((d^2 - 1)/d^2 (u - 2p + 1))``, the coherence of the error."""
    return float(np.sqrt(coherence_squared(unitarity(ch), rb_decay(ch), ch.d)))


def jnorm_delta(ch):
    """``||J(E - I)||_2`` computed directly from the Choi state of the difference."""
    delta = ch.choi - identity_channel(ch.d).choi
    return float(np.linalg.norm(delta))


def jnorm_delta_decomposition(ch):
    """``(d^2-1)/d^2 u(Delta) + alpha^2/d``, which equals ``||J(Delta)||_2^2``."""
    d = ch.d
    u_delta = unitarity(ch - identity_channel(d))
    return (d * d - 1) / d**2 * u_delta + relaxation_rate(ch) ** 2 / d


# --------------------------------------------------------------------------
# bound intervals (shared with the diamond module)


def eq2_interval(r, d):
    """Infidelity bounds on the diamond distance: [(d+1) r/d, sqrt(d (d+1) r)]."""
    if not -1e-15 <= r <= 1.0 + 1e-15:
        raise PreconditionError(f"infidelity must lie in [0, 1], got {r!r}")
    r = min(max(r, 0.0), 1.0)
    return (d + 1) * r / d, float(np.sqrt(d * (d + 1) * r))


def cor5_interval(C, r, d, sign=1.0):
    """[C/sqrt(2), sqrt(d^3 C^2 / 4 + (d+1)^2 r^2 / 2)].

    ``sign`` exists only for the mutation self-test of the property suite.
    """
    lower = C / np.sqrt(2.0)
    upper = np.sqrt(max(d**3 * C * C / 4 + sign * (d + 1) ** 2 * r * r / 2, 0.0))
    return float(lower), float(upper)


# --------------------------------------------------------------------------
# report


@dataclass
class MetricsReport:
    d: int
    r: float
    u: float
    p: float
    alpha: float
    C: float
    j2: float
    eq2_lower: float
    eq2_upper: float
    cor5_lower: float
    cor5_upper: float
    jnorm_lower: float
    jnorm_upper: float
    alpha_bound: float
    alpha_bound_ok: bool
    unitarity_ok: bool
    decay_ok: bool
    basis_sum: float
    basis_bound_ok: bool

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return dumps17(self.to_dict(), **kw)


def metrics_report(ch):
    """Every scalar metric of ``ch`` plus the interval bounds that follow from them."""
    require_cptp(ch)
    d = ch.d
    r = infidelity(ch)
    u = unitarity(ch)
    p = 1.0 - d * r / (d - 1)
    alpha = relaxation_rate(ch)
    C = float(np.sqrt(coherence_squared(u, p, d)))
    j2 = jnorm_delta(ch)
    eq2 = eq2_interval(r, d)
    cor5 = cor5_interval(C, r, d)
    a_bound = np.sqrt(2.0) * (d + 1) * r / d
    block_trace = float(np.real(np.trace(ch.liouville[1:, 1:]))) / (d * d - 1)
    bsum = basis_infidelity_sum(ch, np.eye(d))
    return MetricsReport(
        d=d,
        r=r,
        u=u,
        p=p,
        alpha=alpha,
        C=C,
        j2=j2,
        eq2_lower=eq2[0],
        eq2_upper=eq2[1],
        cor5_lower=cor5[0],
        cor5_upper=cor5[1],
        jnorm_lower=j2 / np.sqrt(2.0),
        jnorm_upper=d**1.5 / 2 * j2,
        alpha_bound=float(a_bound),
        alpha_bound_ok=bool(alpha <= a_bound + BOUND_SLACK),
        unitarity_ok=bool(p * p - BOUND_SLACK <= u <= 1 + BOUND_SLACK),
        decay_ok=bool(abs(p - block_trace) <= 1e-10),
        basis_sum=bsum,
        basis_bound_ok=bool(bsum <= (d + 1) * r + BOUND_SLACK),
    )


_F17 = re.compile(r'"__f17__([^"]*)"')


def _mark_floats(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return None
        return f"__f17__{x:.17g}"
    if isinstance(obj, dict):
        return {k: _mark_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_mark_floats(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps17(obj, **kw):
    """``json.dumps`` writing every float with 17 significant digits."""
    return _F17.sub(r"\1", json.dumps(_mark_floats(obj), **kw))
