"""Dense complex matrix helpers shared by the fiber and finite-lattice code."""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import NumericalError, SingularityError, ValidationError

__all__ = ["hermitian_eig", "resolvent", "trace_product"]

HERMITIAN_TOL = 1e-10
SINGULAR_TOL = 1e-10


def _as_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValidationError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


def hermitian_eig(m, tol: float = HERMITIAN_TOL):
    """Eigen-decomposition ``m = V diag(w) V^H`` of a Hermitian matrix.

    Returns eigenvalues in ascending order and the unitary ``V``.
    Raises :class:`ValidationError` when ``max|m - m^H| >= tol``.
    """
    m = _as_square(m)
    defect = np.max(np.abs(m - m.conj().T))
    if defect >= tol:
        raise ValidationError(f"matrix is not Hermitian (defect {defect:.3e})")
    try:
        w, v = scipy.linalg.eigh(m, check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"eigensolver did not converge: {exc}") from exc
    return w, v


def resolvent(m, z: complex, tol: float = SINGULAR_TOL) -> np.ndarray:
    """``(m - z)^{-1}`` via an LU solve.

    ``z`` closer than ``tol`` to an eigenvalue of ``m`` raises
    :class:`SingularityError`.  The check uses the eigenvalues when ``m`` is
    Hermitian and the smallest singular value of ``m - z`` otherwise.
    """
    m = _as_square(m)
    n = m.shape[0]
    shifted = m - z * np.eye(n)
    if np.allclose(m, m.conj().T, rtol=0, atol=HERMITIAN_TOL):
        dist = np.min(np.abs(scipy.linalg.eigvalsh(m, check_finite=False) - z))
    else:
        dist = scipy.linalg.svdvals(shifted, check_finite=False).min()
    if dist <= tol:
        raise SingularityError(f"z={z!r} lies within {dist:.3e} of the spectrum")
    return scipy.linalg.solve(shifted, np.eye(n, dtype=complex), check_finite=False)


def trace_product(factors) -> complex:
    """Trace of the ordered product of ``factors``."""
    factors = [np.asarray(f, dtype=complex) for f in factors]
    if not factors:
        raise ValidationError("trace_product needs at least one factor")
    for left, right in zip(factors, factors[1:]):
        if left.ndim != 2 or right.ndim != 2 or left.shape[1] != right.shape[0]:
            raise ValidationError(f"dimension mismatch: {left.shape} x {right.shape}")
    if factors[0].shape[0] != factors[-1].shape[1]:
        raise ValidationError("product of factors is not square")
    if len(factors) == 1:
        return complex(np.trace(factors[0]))
    head = factors[0]
    for f in factors[1:-1]:
        head = head @ f
    # tr(A B) = sum_ij A_ij B_ji avoids forming the last product
    return complex(np.einsum("ij,ji->", head, factors[-1]))
