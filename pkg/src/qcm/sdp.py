"""Primal-dual interior-point solver for the diamond norm of a Hermiticity-preserving map.

For a Hermiticity-preserving ``T`` with unnormalised Choi matrix ``J``
(output factor first), the completely bounded trace norm is attained on a
pure input, which gives the pair

    primal:  max  <J, X1 - X2>
             s.t. X1 + X2 = I (x) rho,  Tr rho = 1,  X1, X2, rho >= 0

    dual:    min  t
             s.t. Z - J >= 0,  Z + J >= 0,  t I - Tr_out Z >= 0.

The primal optimum over (X1, X2) for fixed rho is
``||(I (x) sqrt(rho)) J (I (x) sqrt(rho))||_1``.

The solver uses the Nesterov-Todd direction with a Mehrotra
predictor-corrector.  The Schur complement ``W1 dZ W1 + W2 dZ W2 + ...`` is
inverted in closed form by simultaneously diagonalising the two scaling
matrices, which leaves a (d^2 + 1) dense system per iteration.

Termination is decided on *certified* bounds, never on the iterate
objectives: ``rho`` is projected onto the density matrices and the primal
value above evaluated exactly, and ``Z`` is shifted by a multiple of the
identity until it is dual feasible, then ``t = lambda_max(Tr_out Z)``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize

from . import matkernel as mk


DENSE_MAX_D = 4


@dataclass
class SDPState:
    primal: float
    dual: float
    iterations: int
    converged: bool
    rho: np.ndarray
    Z: np.ndarray

    @property
    def gap(self):
        return abs(self.dual - self.primal)


def _ptr_out(M, d):
    return np.einsum("aiaj->ij", M.reshape(d, d, d, d))


def _lift(Q, d):
    return np.kron(np.eye(d), Q)


def _chol(A):
    A = mk.hermitian_part(A)
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(A)
        return V * np.sqrt(np.clip(w, 1e-300, None))


def _nt_scaling(X, S):
    """Return (G, v) with G^-1 X G^-dag = G^dag S G = diag(v)."""
    L = _chol(X)
    R = _chol(S)
    U, s, Qh = np.linalg.svd(R.conj().T @ L)
    G = (L @ Qh.conj().T) / np.sqrt(s)
    return G, s


def _max_step(X, dX):
    Li = np.linalg.inv(_chol(X))
    M = mk.hermitian_part(Li @ dX @ Li.conj().T)
    if not np.all(np.isfinite(M)):
        return 0.0
    lam = np.linalg.eigvalsh(M)[0]
    return np.inf if lam >= 0 else -1.0 / lam


def certified_primal(J, rho, d):
    w, V = np.linalg.eigh(mk.hermitian_part(rho))
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        w = np.ones_like(w)
    w = w / w.sum()
    sq = _lift((V * np.sqrt(w)) @ V.conj().T, d)
    return mk.trace_norm(mk.hermitian_part(sq @ J @ sq))


def certified_dual(J, Z, d):
    Z = mk.hermitian_part(Z)
    n = len(Z)
    shift = max(
        0.0,
        -np.linalg.eigvalsh(Z - J)[0],
        -np.linalg.eigvalsh(Z + J)[0],
    )
    return float(np.linalg.eigvalsh(_ptr_out(Z + shift * np.eye(n), d))[-1])


def polish_rho(J, rho, d, max_iter=200):
    """Locally maximise the certified primal value over the input state.

    The value ``||(I (x) sqrt(rho)) J (I (x) sqrt(rho))||_1`` is concave in
    ``rho``; writing ``rho = A A^dag / ||A||_F^2`` removes the constraints and
    a quasi-Newton ascent recovers the digits the interior-point iterate loses
    when the optimal input is rank deficient.
    """
    n = d * d
    eye = np.eye(d)

    def neg_value(v):
        A = (v[:n] + 1j * v[n:]).reshape(d, d)
        B = np.kron(eye, A)
        w, U = np.linalg.eigh(mk.hermitian_part(B.conj().T @ J @ B))
        h = np.sum(np.abs(w))
        M = _ptr_out((U * np.sign(w)) @ U.conj().T @ B.conj().T @ J, d).T
        nrm = np.real(np.vdot(A, A))
        gR = 2 * M.real / nrm - 2 * h * A.real / nrm**2
        gI = -2 * M.imag / nrm - 2 * h * A.imag / nrm**2
        return -h / nrm, -np.concatenate([gR.ravel(), gI.ravel()])

    A0 = mk.psd_sqrt(rho)
    v0 = np.concatenate([A0.real.ravel(), A0.imag.ravel()])
    res = minimize(
        neg_value, v0, jac=True, method="L-BFGS-B",
        options={"maxiter": max_iter, "ftol": 1e-16, "gtol": 1e-14},
    )
    A = (res.x[:n] + 1j * res.x[n:]).reshape(d, d)
    return A @ A.conj().T / np.real(np.vdot(A, A))


class _Newton:
    """Solves the NT Schur-complement system for the current scaling."""

    def __init__(self, W, d):
        self.d = d
        W1, W2, W3 = W
        self.W = W
        self.W3 = W3
        lam1, lam2, V = self._simultaneous(W1, W2)
        self.V = V
        self.D = np.outer(lam1, lam1) + np.outer(lam2, lam2)
        n = d * d
        Vr = V.reshape(d, d, n)
        # A[k,l,p,q] = sum_a V[(a,k),p] conj(V[(a,l),q]); N = Tr_out K^-1 (I (x) .)
        A = np.einsum("akp,alq->klpq", Vr, Vr.conj()).reshape(n, n * n)
        self.N = (A / self.D.reshape(-1)) @ A.conj().T
        W3sq = W3 @ W3
        self.W3sq = W3sq
        T3 = np.kron(W3, W3.T)
        sysm = np.zeros((n + 1, n + 1), dtype=complex)
        sysm[:n, :n] = np.eye(n) + self.N @ T3
        sysm[:n, n] = -(self.N @ W3sq.reshape(-1))
        sysm[n, :n] = -W3sq.T.reshape(-1)
        sysm[n, n] = np.trace(W3sq)
        self.lu = sla.lu_factor(sysm)

    @staticmethod
    def _simultaneous(W1, W2):
        # V^dag (W1 + W2) V = I, V^dag W1 V = diag(lam1), V^dag W2 V = diag(lam2);
        # both Rayleigh quotients are evaluated directly so neither loses
        # precision to a 1 - lam cancellation
        w, U = np.linalg.eigh(mk.hermitian_part(W1 + W2))
        Bi = (U / np.sqrt(w)) @ U.conj().T
        C1 = mk.hermitian_part(Bi @ W1 @ Bi)
        C2 = mk.hermitian_part(Bi @ W2 @ Bi)
        lam1, Q = np.linalg.eigh(C1)
        lam2 = np.real(np.einsum("ip,ij,jp->p", Q.conj(), C2, Q))
        return np.clip(lam1, 0.0, None), np.clip(lam2, 0.0, None), Bi @ Q

    def kinv(self, R):
        V = self.V
        return V @ ((V.conj().T @ R @ V) / self.D) @ V.conj().T

    def _solve_once(self, hZ, ht):
        d = self.d
        n = d * d
        a = _ptr_out(self.kinv(hZ), d)
        rhs = np.concatenate([a.reshape(-1), [ht]])
        sol = sla.lu_solve(self.lu, rhs)
        P = sol[:n].reshape(d, d)
        dt = float(np.real(sol[n]))
        W3 = self.W3
        dZ = self.kinv(hZ - _lift(W3 @ P @ W3, d) + dt * _lift(self.W3sq, d))
        return mk.hermitian_part(dZ), dt

    def apply(self, dZ, dt):
        """The Schur operator M(dZ, dt), evaluated directly."""
        d = self.d
        W1, W2, W3 = self.W
        inner = W3 @ (_ptr_out(dZ, d) - dt * np.eye(d)) @ W3
        MZ = W1 @ dZ @ W1 + W2 @ dZ @ W2 + _lift(inner, d)
        return mk.hermitian_part(MZ), -float(np.real(np.trace(inner)))

    def solve(self, hZ, ht, refine=8):
        # the closed-form inverse loses accuracy as mu -> 0; iterative
        # refinement against the directly evaluated operator restores it
        dZ, dt = self._solve_once(hZ, ht)
        scale = max(np.max(np.abs(hZ)), abs(ht), 1e-300)
        best = None
        for _ in range(refine):
            MZ, Mt = self.apply(dZ, dt)
            rZ, rt = hZ - MZ, ht - Mt
            res = max(np.max(np.abs(rZ)), abs(rt)) / scale
            if best is None or res < best[0]:
                best = (res, dZ, dt)
            if res < 1e-14:
                break
            cZ, ct = self._solve_once(rZ, rt)
            dZ, dt = dZ + cZ, dt + ct
        return best[1], best[2]


class _DenseNewton(_Newton):
    """Same system assembled as an explicit (n^2 + 1) matrix; used for small d."""

    def __init__(self, W, d):
        self.d = d
        self.W = W
        self.W3 = W[2]
        n = d * d
        W1, W2, W3 = W
        # vec is row-major, so vec(A X B) = kron(A, B^T) vec(X)
        T = np.zeros((d * d, n * n))
        for a in range(d):
            for i in range(d):
                for j in range(d):
                    T[i * d + j, (a * d + i) * n + a * d + j] = 1.0
        K3 = np.kron(W3, W3.T)
        M = np.zeros((n * n + 1, n * n + 1), dtype=complex)
        M[:-1, :-1] = np.kron(W1, W1.T) + np.kron(W2, W2.T) + T.T @ K3 @ T
        e = np.eye(d).reshape(-1)
        M[:-1, -1] = -(T.T @ (K3 @ e))
        M[-1, :-1] = -(e @ K3 @ T)
        M[-1, -1] = e @ K3 @ e
        self.lu = sla.lu_factor(M)

    def _solve_once(self, hZ, ht):
        n = self.d * self.d
        sol = sla.lu_solve(self.lu, np.concatenate([hZ.reshape(-1), [ht]]))
        return mk.hermitian_part(sol[:-1].reshape(n, n)), float(np.real(sol[-1]))


def solve_diamond_sdp(J, d, gap_tol=1e-9, max_iter=100, step=0.98, min_step=1e-6):
    """Run the interior-point method on the unnormalised Choi matrix ``J``."""
    J = mk.hermitian_part(np.asarray(J, dtype=complex))
    n = d * d
    scale = max(np.linalg.norm(J, 2), 1e-300)
    I_n, I_d = np.eye(n), np.eye(d)

    X = [I_n / (2 * d), I_n / (2 * d), I_d / d]
    Z = (scale + 1.0) * I_n
    t = d * (scale + 1.0) + 1.0
    nu = 2 * n + d

    def slacks(Z, t):
        return [Z - J, Z + J, t * I_d - _ptr_out(Z, d)]

    S = slacks(Z, t)
    primal = certified_primal(J, X[2], d)
    dual = certified_dual(J, Z, d)
    best_rho, best_Z = X[2], Z
    it = 0
    while it < max_iter:
        if dual - primal <= gap_tol:
            return SDPState(primal, dual, it, True, best_rho, best_Z)
        it += 1
        mu = sum(np.real(np.vdot(Xk, Sk)) for Xk, Sk in zip(X, S)) / nu

        # residuals
        rpZ = X[0] + X[1] - _lift(X[2], d)
        rpt = np.real(np.trace(X[2])) - 1.0
        Rd = [Zk - Sk for Zk, Sk in zip(slacks(Z, t), S)]

        scal = [_nt_scaling(Xk, Sk) for Xk, Sk in zip(X, S)]
        Gs = [g for g, _ in scal]
        vs = [v for _, v in scal]
        W = [g @ g.conj().T for g in Gs]
        newton = (_DenseNewton if d <= DENSE_MAX_D else _Newton)(W, d)

        def direction(Rc):
            # Rc_k are the right-hand sides of dX_k + W_k dS_k W_k = Rc_k
            T = [Rk - Wk @ Dk @ Wk for Rk, Wk, Dk in zip(Rc, W, Rd)]
            hZ = rpZ - (-T[0] - T[1] + _lift(T[2], d))
            ht = rpt - (-np.real(np.trace(T[2])))
            dZ, dt = newton.solve(hZ, ht)
            dS = [Rd[0] + dZ, Rd[1] + dZ, Rd[2] - _ptr_out(dZ, d) + dt * I_d]
            dX = [mk.hermitian_part(Rk - Wk @ Sk @ Wk) for Rk, Wk, Sk in zip(Rc, W, dS)]
            return dX, dZ, dt, [mk.hermitian_part(s) for s in dS]

        def centering(rhs_scaled):
            out = []
            for G, v, rhs in zip(Gs, vs, rhs_scaled):
                Dm = 2.0 * rhs / (v[:, None] + v[None, :])
                out.append(G @ Dm @ G.conj().T)
            return out

        # predictor
        Rc = centering([-np.diag(v * v) for v in vs])
        dXa, dZa, dta, dSa = direction(Rc)
        ap = min(1.0, min(_max_step(Xk, dk) for Xk, dk in zip(X, dXa)))
        ad = min(1.0, min(_max_step(Sk, dk) for Sk, dk in zip(S, dSa)))
        mu_aff = sum(
            np.real(np.vdot(Xk + ap * dxk, Sk + ad * dsk)) for Xk, dxk, Sk, dsk in zip(X, dXa, S, dSa)
        ) / nu
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3

        # corrector
        rhs = []
        for G, v, dx, ds in zip(Gs, vs, dXa, dSa):
            Gi = np.linalg.inv(G)
            dxs = Gi @ dx @ Gi.conj().T
            dss = G.conj().T @ ds @ G
            prod = dxs @ dss
            rhs.append(sigma * mu * np.eye(len(v)) - np.diag(v * v) - 0.5 * (prod + prod.conj().T))
        dX, dZ, dt, dS = direction(centering(rhs))
        ap = min(1.0, step * min(_max_step(Xk, dk) for Xk, dk in zip(X, dX)))
        ad = min(1.0, step * min(_max_step(Sk, dk) for Sk, dk in zip(S, dS)))
        if max(ap, ad) < min_step:
            # the Newton system has lost its accuracy; further steps only
            # damage the iterates, so stop with the best certificates so far
            break

        X = [mk.hermitian_part(Xk + ap * dk) for Xk, dk in zip(X, dX)]
        Z = mk.hermitian_part(Z + ad * dZ)
        t = t + ad * dt
        S = [mk.hermitian_part(Sk + ad * dk) for Sk, dk in zip(S, dS)]

        p_new = certified_primal(J, X[2], d)
        if p_new > primal:
            primal, best_rho = p_new, X[2]
        d_new = certified_dual(J, Z, d)
        if d_new < dual:
            dual, best_Z = d_new, Z
    if dual - primal > gap_tol:
        rho = polish_rho(J, best_rho, d)
        p_new = certified_primal(J, rho, d)
        if p_new > primal:
            primal, best_rho = p_new, rho
    return SDPState(primal, dual, it, dual - primal <= gap_tol, best_rho, best_Z)
