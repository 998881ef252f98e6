"""Dense complex-matrix primitives used throughout the transceiver design.

All matrices in this package are tiny (at most ~16x16 after real embedding),
so the routines below favour determinism and validation over speed: inputs
are symmetrized before decomposition, eigenvalues come back sorted, and the
positive-definite routines check their preconditions explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    NotHermitianError,
    NotPositiveDefiniteError,
    NumericalFailureError,
)

# Relative Frobenius tolerance for the Hermitian symmetry check.  Inputs are
# symmetrized afterwards, so this only has to absorb accumulation error from
# Gram-matrix constructions.
HERMITIAN_RTOL = 1e-10

# A matrix counts as positive definite when its smallest eigenvalue exceeds
# this fraction of the largest one.
PD_RTOL = 1e-12


@dataclass(frozen=True)
class HermEig:
    """Eigendecomposition of a Hermitian matrix.

    Attributes
    ----------
    eigenvalues : ndarray
        Real eigenvalues sorted in descending order.
    eigenvectors : ndarray
        Unit-norm eigenvector columns; column ``i`` pairs with
        ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _check_square_hermitian(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NotHermitianError("matrix has non-finite entries")
    defect = np.linalg.norm(x - x.conj().T)
    if defect > HERMITIAN_RTOL * np.linalg.norm(x):
        raise NotHermitianError(
            f"matrix is not Hermitian: defect {defect:.3e} exceeds "
            f"{HERMITIAN_RTOL:.0e} relative"
        )
    return x


def hermitian_eig(x: np.ndarray) -> HermEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    The input is validated against :data:`HERMITIAN_RTOL` and symmetrized as
    ``(X + X^H)/2`` before the decomposition.

    Parameters
    ----------
    x : ndarray
        Square Hermitian matrix.

    Returns
    -------
    HermEig
        Sorted eigenpairs with mutually orthonormal eigenvectors.
    """
    x = _check_square_hermitian(x)
    xs = (x + x.conj().T) / 2.0
    try:
        w, q = np.linalg.eigh(xs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh rarely fails
        raise NumericalFailureError(f"eigendecomposition failed: {exc}") from exc
    return HermEig(eigenvalues=w[::-1].copy(), eigenvectors=q[:, ::-1].copy())


def min_eigenvalue(x: np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    return float(hermitian_eig(x).eigenvalues[-1])


def inv_sqrt_pd(x: np.ndarray) -> np.ndarray:
    """Inverse square root of a Hermitian positive-definite matrix.

    Returns the unique Hermitian positive-definite ``Y`` with
    ``Y @ X @ Y = I``.

    Raises
    ------
    NotPositiveDefiniteError
        If the smallest eigenvalue does not exceed ``PD_RTOL`` times the
        largest.
    """
    eig = hermitian_eig(x)
    w = eig.eigenvalues
    if w[-1] <= PD_RTOL * max(abs(w[0]), 1e-300) or w[0] <= 0:
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite: eigenvalue range [{w[-1]:.3e}, {w[0]:.3e}]"
        )
    q = eig.eigenvectors
    y = (q * (1.0 / np.sqrt(w))) @ q.conj().T
    return (y + y.conj().T) / 2.0


def canonical_phase(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate a complex vector so its first significant entry is real-positive.

    Eigenvectors and extracted beam directions are phase-ambiguous; fixing the
    phase makes golden tests reproducible without affecting any quadratic form.
    """
    v = np.asarray(v, dtype=complex)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return v.copy()
    idx = np.flatnonzero(np.abs(v) > tol * norm)
    if idx.size == 0:  # pragma: no cover - unreachable for norm > 0
        return v.copy()
    pivot = v[idx[0]]
    return v * (pivot.conjugate() / abs(pivot))
