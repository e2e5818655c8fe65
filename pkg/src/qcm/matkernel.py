"""Dense complex matrix primitives.

Everything here works on small dense ``numpy`` arrays (d <= 16, so Choi
matrices are at most 256 x 256).  Random draws take a
:class:`numpy.random.Generator`; use :func:`make_rng` to derive independent
streams from a master seed and a task key.
"""

from dataclasses import dataclass

import numpy as np

from .validation import (
    HERMITIAN_TOL,
    DimensionError,
    PreconditionError,
    check_hermitian,
    check_square,
)


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


@dataclass(frozen=True)
class TracelessNormReport:
    l1: float
    l2: float
    d: int
    lower_ok: bool
    upper_ok: bool

    @property
    def lower_slack(self):
        return self.l1 - np.sqrt(2.0) * self.l2

    @property
    def upper_slack(self):
        return np.sqrt(self.d) * self.l2 - self.l1


def make_rng(seed, *key):
    """Return a Generator for the sub-stream ``(seed, *key)``.

    Streams with different keys are statistically independent, and the same
    ``(seed, key)`` always reproduces the same stream regardless of which
    worker draws it.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def schatten_norm(M, p=2):
    """Schatten p-norm of a square matrix; ``p=np.inf`` gives the operator norm."""
    M = check_square(M)
    if not (p >= 1):
        raise PreconditionError(f"Schatten index must satisfy p >= 1, got {p!r}")
    if M.size == 0:
        return 0.0
    s = np.linalg.svd(M, compute_uv=False)
    if np.isinf(p):
        return float(s[0])
    if p == 1:
        return float(np.sum(s))
    if p == 2:
        return float(np.sqrt(np.sum(s * s)))
    return float(np.sum(s**p) ** (1.0 / p))


def trace_norm(M):
    """Trace norm of a Hermitian matrix via its eigenvalues."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(M))))


def eigh(M, tol=HERMITIAN_TOL):
    """Hermitian eigen-decomposition with eigenvalues in descending order."""
    M = check_hermitian(M, tol)
    H = 0.5 * (M + M.conj().T)
    w, V = np.linalg.eigh(H)
    return Spectrum(w[::-1].copy(), V[:, ::-1].copy())


def hermitian_part(M):
    return 0.5 * (M + M.conj().T)


def psd_sqrt(M):
    """Square root of a PSD matrix; small negative eigenvalues are clipped."""
    w, V = np.linalg.eigh(hermitian_part(M))
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T


def ginibre(shape, rng):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def haar_unitary(d, rng):
    """Haar-random d x d unitary (QR of a Ginibre matrix, R-diagonal phase fix)."""
    if d < 1:
        raise DimensionError(f"dimension must be >= 1, got {d}")
    Q, R = np.linalg.qr(ginibre((d, d), rng))
    diag = np.diagonal(R)
    phases = diag / np.abs(diag)
    return Q * phases


def haar_isometry(d_out, d_in, rng):
    """Haar-random isometry C^d_in -> C^d_out (first columns of a Haar unitary)."""
    if d_out < d_in:
        raise DimensionError("an isometry needs d_out >= d_in")
    return haar_unitary(d_out, rng)[:, :d_in]


def haar_state(d, rng):
    """Haar-random pure state as a unit vector."""
    if d < 1:
        raise DimensionError(f"dimension must be >= 1, got {d}")
    v = ginibre(d, rng)
    return v / np.linalg.norm(v)


def haar_states(n, d, rng):
    """``n`` Haar-random states stacked as the rows of an (n, d) array."""
    v = ginibre((n, d), rng)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_hermitian(d, rng, traceless=False):
    G = ginibre((d, d), rng)
    H = G + G.conj().T
    if traceless:
        H = H - np.trace(H) / d * np.eye(d)
    return H


def traceless_norm_check(M, slack=1e-10):
    """Check sqrt(2)||M||_2 <= ||M||_1 <= sqrt(d)||M||_2 for traceless Hermitian M."""
    M = check_hermitian(M)
    d = M.shape[0]
    eta = np.linalg.eigvalsh(hermitian_part(M))
    l2 = float(np.sqrt(np.sum(eta * eta)))
    if abs(np.trace(M)) > 1e-10 * l2:
        raise PreconditionError(f"matrix is not traceless (Tr M = {np.trace(M)!r})")
    l1 = float(np.sum(np.abs(eta)))
    return TracelessNormReport(
        l1=l1,
        l2=l2,
        d=d,
        lower_ok=bool(l1 - np.sqrt(2.0) * l2 >= -slack),
        upper_ok=bool(np.sqrt(d) * l2 - l1 >= -slack),
    )


def partial_trace_first(M, d1, d2):
    """Trace out the first tensor factor of an operator on C^d1 (x) C^d2."""
    return np.einsum("ijik->jk", M.reshape(d1, d2, d1, d2))


def partial_trace_second(M, d1, d2):
    return np.einsum("ijkj->ik", M.reshape(d1, d2, d1, d2))


def swap_operator(d):
    """Two-qudit swap S = sum |ij><ji|."""
    S = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            S[i * d + j, j * d + i] = 1.0
    return S
