"""SINR and rate functionals.

Two SINR notions coexist:

* the *actual* SINR of a stream under the true channels, and
* the *worst-case surrogate* the transmitters optimize: a lower bound on the
  actual SINR over every admissible estimation error in the Frobenius ball.

The surrogate's numerator can go negative when the error radius is large
relative to the desired link gain; it is returned as-is so callers can treat
the condition as a "no guaranteed rate" regime flag rather than silently
clamping it.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    NegativeSinrError,
    NonPositiveDenominatorError,
    NotPsdError,
    ZeroDecorrelatorError,
)
from .model import ChannelSet, CsiView, TransceiverSet


class StreamId(NamedTuple):
    """0-based (user, stream) index pair."""

    k: int
    l: int


def _grid(channels) -> np.ndarray:
    if isinstance(channels, ChannelSet):
        return channels.H
    if isinstance(channels, CsiView):
        return channels.Hhat
    return np.asarray(channels, dtype=complex)


def _check_u(u: np.ndarray) -> float:
    nsq = float(np.sum(np.abs(u) ** 2))
    if nsq <= 0.0:
        raise ZeroDecorrelatorError("decorrelator column is zero")
    return nsq


def actual_sinr(channels, tx: TransceiverSet, s: StreamId, n0: float) -> float:
    """SINR of stream ``s`` under the given channel grid.

    Desired power over inter-stream plus leakage plus noise power.  The same
    functional evaluates the nominal SINR when handed the estimate grid.
    """
    H = _grid(channels)
    k, l = s
    u = tx.U[k][:, l]
    _check_u(u)
    desired = abs(u.conj() @ H[k, k] @ tx.V[k][:, l]) ** 2
    interference = 0.0
    for j in range(tx.K):
        gains = np.abs(u.conj() @ H[k, j] @ tx.V[j]) ** 2
        interference += float(np.sum(gains))
        if j == k:
            interference -= float(gains[l])
    noise = n0 * float(np.sum(np.abs(u) ** 2))
    return float(desired / (interference + noise))


def mutual_info(sinr: float) -> float:
    """Instantaneous mutual information log2(1 + sinr) in bits/s/Hz."""
    if sinr < 0:
        raise NegativeSinrError(f"SINR must be non-negative, got {sinr}")
    return float(np.log2(1.0 + sinr))


def worst_case_sinr(csi: CsiView, tx: TransceiverSet, s: StreamId, n0: float) -> float:
    """Worst-case SINR surrogate of stream ``s`` over the error ball.

    Lower-bounds the actual SINR for every admissible error realization.  The
    value is homogeneous of degree zero in the decorrelator column and may be
    negative; see the module docstring.

    Raises
    ------
    NonPositiveDenominatorError
        If the surrogate denominator is non-positive (unreachable for valid
        inputs with positive noise, kept as a defensive guard).
    """
    k, l = s
    u = tx.U[k][:, l]
    u_sq = _check_u(u)
    eps = csi.eps

    desired = abs(u.conj() @ csi.Hhat[k, k] @ tx.V[k][:, l]) ** 2
    own_sq = float(np.sum(np.abs(tx.V[k][:, l]) ** 2))
    cross = 0.0
    total_power = 0.0
    for j in range(tx.K):
        cross += float(np.sum(np.abs(u.conj() @ csi.Hhat[k, j] @ tx.V[j]) ** 2))
        total_power += float(np.sum(np.abs(tx.V[j]) ** 2))

    num = desired - eps * u_sq * own_sq
    den = cross + eps * u_sq * total_power - desired - eps * u_sq * own_sq + n0 * u_sq
    if den <= 0.0:
        raise NonPositiveDenominatorError(
            f"worst-case SINR denominator {den:.3e} is non-positive for stream {s}"
        )
    return float(num / den)


def worst_case_sinr_gram(
    csi: CsiView,
    grams: Sequence[Sequence[np.ndarray]],
    u: np.ndarray,
    s: StreamId,
    n0: float,
    psd_tol: float = 1e-8,
) -> float:
    """Worst-case SINR surrogate in transmit-covariance (Gram) form.

    ``grams[j][m]`` is the M-by-M covariance of stream ``(j, m)``.  Equals
    :func:`worst_case_sinr` whenever every Gram block is ``v v^H`` for the
    matching precoder column.
    """
    k, l = s
    u = np.asarray(u, dtype=complex)
    u_sq = _check_u(u)
    eps = csi.eps

    for j, blocks in enumerate(grams):
        for m, g in enumerate(blocks):
            g = np.asarray(g)
            w = np.linalg.eigvalsh((g + g.conj().T) / 2.0)
            if w[0] < -psd_tol * max(1.0, float(w[-1])):
                raise NotPsdError(f"gram block ({j}, {m}) is not PSD: min eig {w[0]:.3e}")

    def quad(j: int, g: np.ndarray) -> float:
        w_vec = csi.Hhat[k, j].conj().T @ u
        return float(np.real(w_vec.conj() @ g @ w_vec))

    desired = quad(k, grams[k][l])
    own_tr = float(np.real(np.trace(grams[k][l])))
    cross = 0.0
    total_tr = 0.0
    for j, blocks in enumerate(grams):
        for g in blocks:
            cross += quad(j, g)
            total_tr += float(np.real(np.trace(g)))

    num = desired - eps * u_sq * own_tr
    den = cross + eps * u_sq * total_tr - desired - eps * u_sq * own_tr + n0 * u_sq
    if den <= 0.0:
        raise NonPositiveDenominatorError(
            f"worst-case SINR denominator {den:.3e} is non-positive for stream {s}"
        )
    return float(num / den)


def min_worst_case_sinr(csi: CsiView, tx: TransceiverSet, n0: float):
    """Minimum worst-case SINR over all streams.

    Returns ``(value, StreamId)``; ties break toward the lexicographically
    smallest (user, stream) pair for determinism.
    """
    best = None
    best_id = None
    for k in range(tx.K):
        for l in range(tx.streams(k)):
            val = worst_case_sinr(csi, tx, StreamId(k, l), n0)
            if best is None or val < best:
                best = val
                best_id = StreamId(k, l)
    if best is None:
        raise ZeroDecorrelatorError("transceiver set has no streams")
    return best, best_id
