"""Exceptions and input checks shared across the package."""

import numpy as np

HERMITIAN_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when an array does not have the required shape."""


class PreconditionError(ValueError):
    """Raised when an input violates a mathematical precondition."""


class NotCPTPError(PreconditionError):
    """Raised when a channel is required to be CPTP but is not."""


class SolverError(RuntimeError):
    """Raised when the diamond-norm SDP fails to certify its answer.

    The partially converged result is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


def check_square(M, name="matrix"):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


def check_hermitian(M, tol=HERMITIAN_TOL, name="matrix"):
    M = check_square(M, name)
    defect = np.max(np.abs(M - M.conj().T)) if M.size else 0.0
    if defect > tol:
        raise PreconditionError(f"{name} is not Hermitian (max |M - M^dag| = {defect:.3e})")
    return M


def check_unit_vector(psi, tol=1e-10, name="state"):
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {psi.shape}")
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > tol:
        raise PreconditionError(f"{name} is not normalized (norm = {nrm!r})")
    return psi


def check_orthonormal_basis(basis, d, tol=1e-10):
    """Return the basis as a d x d matrix whose columns are the basis vectors."""
    B = np.asarray(basis, dtype=complex)
    if B.shape != (d, d):
        raise DimensionError(f"basis must hold {d} vectors of length {d}, got shape {B.shape}")
    # rows are taken as the vectors, matching a list-of-vectors input
    B = B.T
    defect = np.max(np.abs(B.conj().T @ B - np.eye(d)))
    if defect > tol:
        raise PreconditionError(f"basis is not orthonormal (defect {defect:.3e})")
    return B


def check_positive_int(value, name):
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise PreconditionError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_probability(value, name):
    if not 0.0 <= value <= 1.0:
        raise PreconditionError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)
