"""Comparison transceiver designs consuming the same channel estimates.

Three schemes: the closed-form three-user alignment construction (cross-user
interference collapses into a common subspace at every receiver), iterative
per-stream SINR maximization over the forward/reverse networks, and iterative
aggregate-leakage minimization.  All of them treat the estimates as if they
were perfect and split each user's budget equally across streams, so their
outputs drop straight into the SINR and harness modules.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotFeasibleError, SingularChannelError, SingularCovarianceError
from .model import CsiView, SystemDims, TransceiverSet

_DOMAIN_BASELINE = 3


@dataclass(frozen=True)
class BaselineKind:
    """Tag for a comparison scheme; alignment is only feasible for exactly
    three users with an even square antenna array carrying M/2 streams each."""

    tag: str

    def __post_init__(self):
        if self.tag not in ("IA3", "MaxSinr", "MinLeakage"):
            raise ValueError(f"unknown baseline tag {self.tag!r}")


def _check_ia3_dims(dims: SystemDims):
    if dims.K != 3:
        raise NotFeasibleError(f"alignment construction needs exactly 3 users, got K={dims.K}")
    if dims.M != dims.N or dims.M % 2 != 0:
        raise NotFeasibleError(
            f"alignment construction needs square even antenna arrays, got M={dims.M}, N={dims.N}"
        )
    if any(l != dims.M // 2 for l in dims.L):
        raise NotFeasibleError(
            f"alignment construction needs L=M/2 streams per user, got L={dims.L}"
        )


def _solve_block(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise SingularChannelError("channel block required to be invertible is singular")
    return np.linalg.solve(a, b)


def _seeded_orthonormal(dims: SystemDims, seed: int, k: int, rows: int, cols: int) -> np.ndarray:
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(_DOMAIN_BASELINE, k))
    )
    g = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, _ = np.linalg.qr(g)
    return q


def ia3_closed_form(csi: CsiView, dims: SystemDims) -> TransceiverSet:
    """Closed-form three-user alignment from the estimated channels.

    The first user beams along eigenvectors of the alignment chain map; the
    other precoders follow from the chain so all cross-user interference at
    each receiver shares one L-dimensional subspace.  Receive filters null
    that subspace together with the own-stream companions, then phase-align
    with the desired stream, so every cross term vanishes at the estimates
    (residuals at the true channels stay generically positive).
    """
    _check_ia3_dims(dims)
    H = csi.Hhat
    L = dims.L[0]

    # Chain map whose eigenvectors make the three interference images collinear.
    chain = _solve_block(
        H[2, 0],
        H[2, 1] @ _solve_block(H[0, 1], H[0, 2] @ _solve_block(H[1, 2], H[1, 0])),
    )
    w, vecs = np.linalg.eig(chain)
    order = np.lexsort((-w.imag, -w.real, -np.abs(w)))
    v0 = vecs[:, order[:L]]

    raw = [
        v0,
        _solve_block(H[2, 1], H[2, 0] @ v0),
        _solve_block(H[1, 2], H[1, 0] @ v0),
    ]
    precoders = []
    for k, v in enumerate(raw):
        q, _ = np.linalg.qr(v)
        precoders.append(q * np.sqrt(dims.P[k] / L))

    decorrelators = []
    for k in range(3):
        others = [j for j in range(3) if j != k]
        interference = np.concatenate([H[k, j] @ precoders[j] for j in others], axis=1)
        cols = np.zeros((dims.N, L), dtype=complex)
        for l in range(L):
            own_others = np.delete(H[k, k] @ precoders[k], l, axis=1)
            constraints = np.concatenate([interference, own_others], axis=1)
            # Unit vector orthogonal to every constraint column: least
            # dominant eigenvector of the constraint Gram.
            gram = constraints @ constraints.conj().T
            _, q = np.linalg.eigh((gram + gram.conj().T) / 2.0)
            u = q[:, 0]
            z = complex(u.conj() @ H[k, k] @ precoders[k][:, l])
            if abs(z) > 1e-12:
                u = u * (z.conjugate() / abs(z))
            cols[:, l] = u
        decorrelators.append(cols)
    return TransceiverSet(V=precoders, U=decorrelators)


def _stream_weights(dims: SystemDims) -> list:
    return [dims.P[k] / dims.L[k] for k in range(dims.K)]


def _max_sinr_filters(H_fwd, filters_tx, dims: SystemDims, weights, n_rx: int):
    """Per-stream max-SINR receive filters against the interference-plus-noise
    covariance of the (possibly reverse) network ``H_fwd[k][j]``."""
    out = []
    eye = np.eye(n_rx)
    for k in range(dims.K):
        base = np.zeros((n_rx, n_rx), dtype=complex)
        for j in range(dims.K):
            hv = H_fwd[k][j] @ filters_tx[j]
            base += weights[j] * (hv @ hv.conj().T)
        cols = np.zeros((n_rx, dims.L[k]), dtype=complex)
        for l in range(dims.L[k]):
            hvl = H_fwd[k][k] @ filters_tx[k][:, l]
            cov = base - weights[k] * np.outer(hvl, hvl.conj()) + dims.N0 * eye
            try:
                u = np.linalg.solve(cov, hvl)
            except np.linalg.LinAlgError as exc:  # pragma: no cover - N0 > 0 keeps cov PD
                raise SingularCovarianceError(str(exc)) from exc
            norm = np.linalg.norm(u)
            if norm <= 0:
                raise SingularCovarianceError("max-SINR filter collapsed to zero")
            cols[:, l] = u / norm
        out.append(cols)
    return out


def max_sinr_baseline(
    csi: CsiView, dims: SystemDims, iters: int = 50, seed: int = 0
) -> TransceiverSet:
    """Iterative per-stream SINR maximization, alternating the forward and
    reverse networks, treating the estimates as perfect.

    Filters stay unit-norm during the sweeps; the returned precoders carry an
    equal per-stream power split summing to each user's budget.
    """
    if iters < 1:
        raise ValueError("need at least one sweep")
    H = csi.Hhat
    fwd = [[H[k, j] for j in range(dims.K)] for k in range(dims.K)]
    rev = [[H[j, k].conj().T for j in range(dims.K)] for k in range(dims.K)]
    weights = _stream_weights(dims)

    v = [_seeded_orthonormal(dims, seed, k, dims.M, dims.L[k]) for k in range(dims.K)]
    u = None
    for _ in range(iters):
        u = _max_sinr_filters(fwd, v, dims, weights, dims.N)
        v = _max_sinr_filters(rev, u, dims, weights, dims.M)
    u = _max_sinr_filters(fwd, v, dims, weights, dims.N)

    precoders = [v[k] * np.sqrt(dims.P[k] / dims.L[k]) for k in range(dims.K)]
    return TransceiverSet(V=precoders, U=u)


def _min_leakage_filters(H_fwd, filters_tx, dims: SystemDims, weights, n_rx: int):
    out = []
    for k in range(dims.K):
        cov = np.zeros((n_rx, n_rx), dtype=complex)
        for j in range(dims.K):
            if j == k:
                continue
            hv = H_fwd[k][j] @ filters_tx[j]
            cov += weights[j] * (hv @ hv.conj().T)
        _, q = np.linalg.eigh((cov + cov.conj().T) / 2.0)
        out.append(q[:, : dims.L[k]].copy())
    return out


def total_leakage(csi: CsiView, tx: TransceiverSet, dims: SystemDims) -> float:
    """Aggregate interference power landing in the receive subspaces at the
    estimates, with the baseline per-stream power weights."""
    weights = _stream_weights(dims)
    total = 0.0
    for k in range(dims.K):
        for j in range(dims.K):
            if j == k:
                continue
            total += weights[j] * float(
                np.sum(np.abs(tx.U[k].conj().T @ csi.Hhat[k, j] @ tx.V[j]) ** 2)
            )
    return total


def min_leakage_baseline(
    csi: CsiView, dims: SystemDims, iters: int = 50, seed: int = 0
) -> TransceiverSet:
    """Iterative aggregate-leakage minimization (least-dominant eigenvectors
    of the leakage covariances), alternating forward and reverse networks."""
    if iters < 1:
        raise ValueError("need at least one sweep")
    H = csi.Hhat
    fwd = [[H[k, j] for j in range(dims.K)] for k in range(dims.K)]
    rev = [[H[j, k].conj().T for j in range(dims.K)] for k in range(dims.K)]
    weights = _stream_weights(dims)

    v = [_seeded_orthonormal(dims, seed, k, dims.M, dims.L[k]) for k in range(dims.K)]
    u = None
    for _ in range(iters):
        u = _min_leakage_filters(fwd, v, dims, weights, dims.N)
        v = _min_leakage_filters(rev, u, dims, weights, dims.M)
    u = _min_leakage_filters(fwd, v, dims, weights, dims.N)

    precoders = [v[k] * np.sqrt(dims.P[k] / dims.L[k]) for k in range(dims.K)]
    return TransceiverSet(V=precoders, U=u)
