"""Power-minimization precoder step with fixed decorrelators.

For a target SINR the per-stream worst-case constraints become linear in the
transmit covariances ``V = v v^H``, so the step is posed as a block-PSD
program (semidefinite relaxation of the rank-1 constrained original), solved
with the interior-point core, and the covariances are collapsed back to beam
vectors.  At an exact optimum every covariance block is rank one and the dual
slack blocks have rank M-1; :func:`certify` reports the numerical evidence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidGammaError, ZeroBlockError
from .model import CsiView, SystemDims, TransceiverSet
from .numerics import canonical_phase
from .sdp import (
    SdpBlock,
    SdpConstraint,
    SdpOptions,
    SdpProblem,
    SdpSolution,
    SdpStatus,
    solve_sdp,
)
from .sinr import StreamId


def _decorrelator_list(u, K: int):
    if isinstance(u, TransceiverSet):
        return u.U
    if len(u) != K:
        raise ValueError("need one decorrelator matrix per user")
    return [np.asarray(ub, dtype=complex) for ub in u]


@dataclass
class QvInstance:
    """Assembled power-minimization instance.

    ``a[(k, l)][(j, m)]`` is the Hermitian M-by-M coefficient coupling stream
    ``(j, m)``'s covariance into stream ``(k, l)``'s SINR row; ``b[(k, l)]``
    is the row's right-hand side.  ``streams`` lists all (user, stream) pairs
    in block order.
    """

    a: dict
    b: dict
    rho: np.ndarray
    gamma: float
    n0: float
    streams: list
    u_norms_sq: dict = field(default_factory=dict)


def build_qv(csi: CsiView, u, gamma: float, dims: SystemDims) -> QvInstance:
    """Assemble the fixed-decorrelator power-minimization instance.

    The SINR rows reproduce the rearranged worst-case inequality exactly: for
    rank-1 covariances, ``sum Tr(A V) - b`` has the sign of
    ``worst_case_sinr - gamma``.
    """
    if gamma <= 0:
        raise InvalidGammaError(f"target SINR must be positive, got {gamma}")
    U = _decorrelator_list(u, dims.K)
    streams = [StreamId(k, l) for k in range(dims.K) for l in range(dims.L[k])]
    eye = np.eye(dims.M)

    a = {}
    b = {}
    u_norms_sq = {}
    for k, l in streams:
        u_col = U[k][:, l]
        u_sq = float(np.sum(np.abs(u_col) ** 2))
        if u_sq <= 0:
            raise ValueError(f"decorrelator column for stream {(k, l)} is zero")
        u_norms_sq[(k, l)] = u_sq
        row = {}
        for j, m in streams:
            w = csi.Hhat[k, j].conj().T @ u_col
            outer = np.outer(w, w.conj())
            if j == k and m == l:
                coeff = outer - csi.eps * u_sq * eye
            else:
                coeff = -gamma * (outer + csi.eps * u_sq * eye)
            row[(j, m)] = (coeff + coeff.conj().T) / 2.0
        a[(k, l)] = row
        b[(k, l)] = gamma * dims.N0 * u_sq
    return QvInstance(
        a=a,
        b=b,
        rho=dims.rho.copy(),
        gamma=float(gamma),
        n0=dims.N0,
        streams=streams,
        u_norms_sq=u_norms_sq,
    )


def qv_constraint_value(inst: QvInstance, grams, s: StreamId) -> float:
    """Evaluate ``sum_{j,m} Tr(A V) - b`` for stream ``s`` on given covariances."""
    total = 0.0
    for (j, m), coeff in inst.a[s].items():
        total += float(np.real(np.trace(coeff @ np.asarray(grams[j][m]))))
    return total - inst.b[s]


@dataclass
class RankCertificate:
    """Numerical evidence that the relaxation was tight.

    ``slack_residuals`` are ``|Tr(Z V)|`` normalized by ``1 + |objective|``;
    ``z_ranks`` count dual-slack eigenvalues above ``1e-6`` of each block's
    largest (expected ``M - 1``).
    """

    ratios: list
    z_ranks: list
    slack_residuals: list
    gap: float
    min_sinr_dual: float
    streams: list

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    def summary(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "z_ranks": list(self.z_ranks),
            "max_slack_residual": max(self.slack_residuals) if self.slack_residuals else 0.0,
            "gap": self.gap,
            "min_sinr_dual": self.min_sinr_dual,
        }


@dataclass
class QvSolution:
    xi: float
    grams: list
    cert: Optional[RankCertificate]
    status: SdpStatus
    sdp: SdpSolution
    y_power: np.ndarray
    y_sinr: dict


def _assemble_sdp(inst: QvInstance, dims: SystemDims) -> SdpProblem:
    streams = inst.streams
    n_stream = len(streams)
    index = {s: i for i, s in enumerate(streams)}
    blocks = [SdpBlock(dim=dims.M, field="complex") for _ in streams]
    blocks.append(SdpBlock(dim=1, field="real"))

    objective = [None] * n_stream + [1.0]

    constraints = []
    eye = np.eye(dims.M)
    for j in range(dims.K):
        coeffs = [None] * (n_stream + 1)
        for m in range(dims.L[j]):
            coeffs[index[StreamId(j, m)]] = eye
        coeffs[n_stream] = -float(inst.rho[j])
        constraints.append(SdpConstraint(coeffs=coeffs, sense="<=", rhs=0.0))
    for s in streams:
        coeffs = [None] * (n_stream + 1)
        for t, coeff in inst.a[s].items():
            coeffs[index[t]] = coeff
        constraints.append(SdpConstraint(coeffs=coeffs, sense=">=", rhs=inst.b[s]))
    return SdpProblem(blocks=blocks, objective=objective, constraints=constraints)


def solve_qv(
    inst: QvInstance, dims: SystemDims, options: Optional[SdpOptions] = None
) -> QvSolution:
    """Solve the relaxed instance and certify the solution.

    Statuses pass through from the conic core: standalone calls can come back
    ``Infeasible`` when the target SINR is unreachable; inside the alternating
    loop the incumbent transceivers guarantee feasibility.
    """
    problem = _assemble_sdp(inst, dims)
    sol = solve_sdp(problem, options)
    streams = inst.streams
    n_stream = len(streams)

    grams = [
        [np.zeros((dims.M, dims.M), dtype=complex) for _ in range(dims.L[j])]
        for j in range(dims.K)
    ]
    for i, (j, m) in enumerate(streams):
        grams[j][m] = sol.X[i]
    xi = float(sol.X[n_stream])

    y_power = sol.y[: dims.K].copy()
    y_sinr = {s: float(sol.y[dims.K + i]) for i, s in enumerate(streams)}

    cert = None
    if sol.status == SdpStatus.OPTIMAL:
        cert = certify(inst, sol, dims)
    return QvSolution(
        xi=xi,
        grams=grams,
        cert=cert,
        status=sol.status,
        sdp=sol,
        y_power=y_power,
        y_sinr=y_sinr,
    )


def extract_rank1(gram: np.ndarray):
    """Collapse a PSD covariance block to its principal beam vector.

    Returns ``(v, ratio)`` with ``v = sqrt(lam1) q1`` (leading component made
    real-positive) and ``ratio = lam2 / lam1`` (0 for 1-by-1 blocks).
    """
    gram = np.asarray(gram, dtype=complex)
    gram = (gram + gram.conj().T) / 2.0
    if float(np.real(np.trace(gram))) <= 1e-12:
        raise ZeroBlockError("covariance block is numerically zero")
    w, q = np.linalg.eigh(gram)
    lam1 = float(w[-1])
    if lam1 <= 0:
        raise ZeroBlockError("covariance block has no positive eigenvalue")
    v = np.sqrt(lam1) * canonical_phase(q[:, -1])
    ratio = 0.0
    if gram.shape[0] > 1:
        ratio = max(float(w[-2]), 0.0) / lam1
    return v, ratio


def certify(inst: QvInstance, sol: SdpSolution, dims: SystemDims) -> RankCertificate:
    """Report rank-1 evidence for a solved instance (reports, never judges).

    Covers: covariance eigenvalue ratios, dual-slack block ranks (expected
    M-1), complementary-slackness residuals, duality gap, and the smallest
    SINR-row multiplier (expected strictly positive).
    """
    streams = inst.streams
    xi = float(np.real(sol.objective))
    scale = 1.0 + abs(xi)

    ratios = []
    z_ranks = []
    residuals = []
    for i, _s in enumerate(streams):
        gram = np.asarray(sol.X[i])
        gram = (gram + gram.conj().T) / 2.0
        w = np.linalg.eigvalsh(gram)
        lam1 = max(float(w[-1]), 0.0)
        if lam1 <= 0:
            ratios.append(np.inf)
        elif gram.shape[0] == 1:
            ratios.append(0.0)
        else:
            ratios.append(max(float(w[-2]), 0.0) / lam1)

        zb = np.asarray(sol.Z[i])
        zb = (zb + zb.conj().T) / 2.0
        wz = np.linalg.eigvalsh(zb)
        zmax = max(float(wz[-1]), 0.0)
        if zmax <= 0:
            z_ranks.append(0)
        else:
            z_ranks.append(int(np.sum(wz > 1e-6 * zmax)))
        residuals.append(abs(float(np.real(np.trace(zb @ gram)))) / scale)

    y_sinr = [float(sol.y[dims.K + i]) for i in range(len(streams))]
    return RankCertificate(
        ratios=ratios,
        z_ranks=z_ranks,
        slack_residuals=residuals,
        gap=float(sol.gap),
        min_sinr_dual=min(y_sinr) if y_sinr else 0.0,
        streams=list(streams),
    )


def grams_to_precoders(grams) -> tuple:
    """Collapse every covariance block; returns (per-user precoders, max ratio)."""
    precoders = []
    worst = 0.0
    for blocks in grams:
        cols = []
        for g in blocks:
            v, ratio = extract_rank1(g)
            worst = max(worst, ratio)
            cols.append(v)
        precoders.append(np.stack(cols, axis=1))
    return precoders, worst


def repair_power_scale(
    csi: CsiView,
    u,
    gamma: float,
    dims: SystemDims,
    precoders: Sequence[np.ndarray],
    max_doublings: int = 60,
) -> float:
    """Smallest common power scale ``c >= 1`` restoring every SINR row.

    Used when rank-1 extraction degrades a solved instance below the target
    (only expected after a certificate violation).  A common scale leaves the
    interference geometry intact while shrinking the noise share, so the
    minimum worst-case SINR is monotone in ``c``.  Returns the scale; raises
    ``ZeroBlockError`` if even the saturation SINR cannot reach the target.
    """
    from .sinr import min_worst_case_sinr  # local import avoids a cycle at module load

    U = _decorrelator_list(u, dims.K)

    def min_sinr(c: float) -> float:
        tx = TransceiverSet(V=[np.sqrt(c) * v for v in precoders], U=list(U))
        return min_worst_case_sinr(csi, tx, dims.N0)[0]

    if min_sinr(1.0) >= gamma:
        return 1.0
    hi = 1.0
    for _ in range(max_doublings):
        hi *= 2.0
        if min_sinr(hi) >= gamma:
            break
    else:
        raise ZeroBlockError(
            "rank-1 extraction cannot be repaired: target SINR unreachable at any power"
        )
    lo = hi / 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if min_sinr(mid) >= gamma:
            hi = mid
        else:
            lo = mid
    return hi
