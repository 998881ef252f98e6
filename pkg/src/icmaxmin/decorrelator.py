"""Closed-form per-stream receive-filter optimization with fixed precoders.

Each stream's worst-case SINR is a generalized Rayleigh quotient
``u^H E u / u^H F u`` in its own decorrelator column, where ``E`` collects the
(error-penalized) desired-signal Gram and ``F`` the interference-plus-noise
Gram.  The optimum is reached by whitening with ``F^{-1/2}`` and taking the
principal eigenvector, independently for every stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FNotPositiveDefiniteError, NotPositiveDefiniteError
from .model import CsiView, TransceiverSet
from .numerics import canonical_phase, hermitian_eig, inv_sqrt_pd
from .sinr import StreamId


@dataclass(frozen=True)
class EfPair:
    """Quadratic-form pair defining a stream's worst-case SINR quotient.

    ``E`` is the desired-signal Gram minus the error penalty; ``F`` is the
    interference-plus-noise Gram including the noise floor, hence positive
    definite at any valid operating point.
    """

    E: np.ndarray
    F: np.ndarray


def build_ef(csi: CsiView, tx: TransceiverSet, s: StreamId, n0: float) -> EfPair:
    """Assemble the (E, F) pair for stream ``s`` from fixed precoders."""
    k, l = s
    n = csi.Hhat.shape[2]
    eps = csi.eps
    v_l = tx.V[k][:, l]
    h_kk = csi.Hhat[k, k]

    eye = np.eye(n)
    f = np.zeros((n, n), dtype=complex)
    total_power = 0.0
    for j in range(tx.K):
        hv = csi.Hhat[k, j] @ tx.V[j]
        f += hv @ hv.conj().T
        total_power += float(np.sum(np.abs(tx.V[j]) ** 2))
    own_sq = float(np.sum(np.abs(v_l) ** 2))
    a = h_kk @ v_l
    own_gram = np.outer(a, a.conj())

    f += eps * total_power * eye - own_gram - eps * own_sq * eye + n0 * eye
    f = (f + f.conj().T) / 2.0
    e = own_gram - eps * own_sq * eye
    e = (e + e.conj().T) / 2.0

    w = np.linalg.eigvalsh(f)
    if w[0] <= 0.0:
        raise FNotPositiveDefiniteError(
            f"interference-plus-noise matrix for stream {s} is not positive definite "
            f"(min eig {w[0]:.3e}); the operating point is invalid"
        )
    return EfPair(E=e, F=f)


def optimize_decorrelator(
    csi: CsiView, tx: TransceiverSet, s: StreamId, n0: float
) -> np.ndarray:
    """Optimal unit-norm decorrelator column for stream ``s``.

    Whitens with ``F^{-1/2}``, takes the principal eigenvector of the whitened
    desired-signal Gram, and maps back.  The leading significant component is
    made real-positive (SINR is phase-invariant, goldens are not).
    """
    pair = build_ef(csi, tx, s, n0)
    try:
        f_inv_sqrt = inv_sqrt_pd(pair.F)
    except NotPositiveDefiniteError as exc:  # pragma: no cover - guarded in build_ef
        raise FNotPositiveDefiniteError(str(exc)) from exc
    whitened = f_inv_sqrt @ pair.E @ f_inv_sqrt
    eig = hermitian_eig(whitened)
    w_star = eig.eigenvectors[:, 0]
    u = f_inv_sqrt @ w_star
    u = u / np.linalg.norm(u)
    return canonical_phase(u)


def optimize_all_decorrelators(
    csi: CsiView, tx: TransceiverSet, n0: float
) -> TransceiverSet:
    """Replace every decorrelator column by its per-stream optimum.

    Streams decouple, so each column is optimized independently; precoders are
    untouched.  Errors are re-raised with the offending stream attached.
    """
    new_u = []
    for k in range(tx.K):
        cols = np.zeros_like(tx.U[k])
        for l in range(tx.streams(k)):
            try:
                cols[:, l] = optimize_decorrelator(csi, tx, StreamId(k, l), n0)
            except FNotPositiveDefiniteError as exc:
                raise FNotPositiveDefiniteError(
                    f"stream {StreamId(k, l)}: {exc}"
                ) from exc
        new_u.append(cols)
    return TransceiverSet(V=[v.copy() for v in tx.V], U=new_u)
