"""Alternating optimization maximizing the minimum worst-case SINR.

Each iteration refines the receive filters in closed form, re-solves the
fixed-decorrelator power-minimization step at the incumbent minimum SINR, and
rescales every precoder by a *common* factor back to the power budgets.  The
common rescale shrinks only the noise share of every stream's denominator, so
the recorded minimum-SINR sequence is nondecreasing up to solver tolerance;
the loop stops when the relative improvement drops below ``rel_tol``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .decorrelator import optimize_all_decorrelators
from .errors import NonPositiveSinrError, SolverFailureError
from .model import CsiView, SystemDims, TransceiverSet, transmit_power
from .precoder import (
    QvSolution,
    build_qv,
    grams_to_precoders,
    repair_power_scale,
    solve_qv,
)
from .sdp import SdpOptions, SdpStatus
from .sinr import min_worst_case_sinr, worst_case_sinr, StreamId

_DOMAIN_INIT = 2

RANK1_RATIO_THRESHOLD = 1e-6


@dataclass(frozen=True)
class AoConfig:
    """Loop controls: iteration cap, relative-improvement stop, precoder
    initialization mode (``right-singular`` or ``random-orthonormal``), seed."""

    max_iters: int = 50
    rel_tol: float = 1e-5
    init_mode: str = "right-singular"
    seed: int = 0
    sdp_options: Optional[SdpOptions] = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.init_mode not in ("right-singular", "random-orthonormal"):
            raise ValueError(f"unknown init mode {self.init_mode!r}")


@dataclass
class AoIteration:
    """One loop pass: minimum SINR after the receive-filter refresh, the power
    margin of the precoder step, the minimum SINR after the budget rescale,
    certificate summary and any numerical warnings."""

    index: int
    gamma_step2: float
    beta_step4: float
    gamma_step5: float
    cert: dict
    warnings: list = field(default_factory=list)
    sdp_status: str = ""
    sdp_iterations: int = 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "iter": self.index,
                "gamma_step2": self.gamma_step2,
                "beta_step4": self.beta_step4,
                "gamma_step5": self.gamma_step5,
                "cert": self.cert,
                "warnings": self.warnings,
                "sdp_status": self.sdp_status,
                "sdp_iterations": self.sdp_iterations,
            }
        )


@dataclass
class AoTrace:
    iterations: list = field(default_factory=list)
    converged: bool = False

    @property
    def final_gamma(self) -> float:
        return self.iterations[-1].gamma_step5 if self.iterations else 0.0

    def gamma_sequence(self) -> list:
        return [rec.gamma_step5 for rec in self.iterations]

    def to_jsonl(self) -> str:
        return "\n".join(rec.to_json() for rec in self.iterations)


def initialize(dims: SystemDims, csi: CsiView, cfg: AoConfig) -> TransceiverSet:
    """Full-power precoder initialization plus closed-form receive filters.

    ``right-singular`` mode beams along the top right-singular vectors of each
    user's own estimated link; ``random-orthonormal`` mode uses seeded random
    orthonormal columns.  Either way each user transmits exactly its budget,
    split equally across streams.
    """
    precoders = []
    for k in range(dims.K):
        L_k = dims.L[k]
        if cfg.init_mode == "right-singular":
            _, _, vh = np.linalg.svd(csi.Hhat[k, k])
            cols = vh[:L_k].conj().T
        else:
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=cfg.seed, spawn_key=(_DOMAIN_INIT, k))
            )
            g = rng.standard_normal((dims.M, L_k)) + 1j * rng.standard_normal((dims.M, L_k))
            cols, _ = np.linalg.qr(g)
        precoders.append(cols * np.sqrt(dims.P[k] / L_k))
    placeholder_u = [np.ones((dims.N, dims.L[k]), dtype=complex) for k in range(dims.K)]
    tx = TransceiverSet(V=precoders, U=placeholder_u)
    return optimize_all_decorrelators(csi, tx, dims.N0)


def ao_step(state: TransceiverSet, csi: CsiView, dims: SystemDims, cfg: AoConfig, index: int = 0):
    """One alternating-optimization pass; returns ``(new_state, record)``.

    Raises :class:`NonPositiveSinrError` when the refreshed minimum SINR is
    non-positive (error radius too large for a robust design at this drop) and
    :class:`SolverFailureError` when the precoder subproblem does not come
    back optimal; both carry the partial record.
    """
    warnings = []

    # Step 1: closed-form receive filters for the incumbent precoders.
    tx = optimize_all_decorrelators(csi, state, dims.N0)

    # Step 2: incumbent minimum worst-case SINR becomes the power-step target.
    per_stream = [
        worst_case_sinr(csi, tx, StreamId(k, l), dims.N0)
        for k in range(dims.K)
        for l in range(dims.L[k])
    ]
    gamma_hat = min(per_stream)
    if any(v <= 0 for v in per_stream):
        warnings.append("NegativePrincipalEigenvalue")
    record = AoIteration(
        index=index,
        gamma_step2=gamma_hat,
        beta_step4=float("nan"),
        gamma_step5=float("nan"),
        cert={},
        warnings=warnings,
    )
    if gamma_hat <= 0:
        raise NonPositiveSinrError(
            f"minimum worst-case SINR {gamma_hat:.3e} is non-positive; "
            "error radius too large for a robust design here",
            trace=[record],
        )

    # Step 3: power-minimizing precoders at the incumbent target.
    inst = build_qv(csi, tx.U, gamma_hat, dims)
    qv = solve_qv(inst, dims, cfg.sdp_options)
    record.sdp_status = qv.status.value
    record.sdp_iterations = qv.sdp.iterations
    if qv.status != SdpStatus.OPTIMAL:
        raise SolverFailureError(
            f"precoder subproblem returned {qv.status.value}", trace=[record]
        )
    record.cert = qv.cert.summary()

    precoders, max_ratio = grams_to_precoders(qv.grams)
    if max_ratio > RANK1_RATIO_THRESHOLD:
        scale = repair_power_scale(csi, tx.U, gamma_hat, dims, precoders)
        if scale > 1.0:
            precoders = [np.sqrt(scale) * v for v in precoders]
        warnings.append(
            f"rank-1 certificate violation: ratio {max_ratio:.2e}, repaired with scale {scale:.6f}"
        )

    # Step 4: required power margin (largest per-user share; budget-feasible
    # even when some power rows come back slack).
    powers = np.array([float(np.sum(np.abs(v) ** 2)) for v in precoders])
    beta = float(np.max(powers / dims.rho))
    record.beta_step4 = beta

    # Step 5: common rescale back to the budgets, re-evaluate the minimum SINR.
    scale = np.sqrt(dims.p_tilde / beta)
    new_state = TransceiverSet(V=[scale * v for v in precoders], U=[u.copy() for u in tx.U])
    gamma_5, _ = min_worst_case_sinr(csi, new_state, dims.N0)
    record.gamma_step5 = gamma_5
    return new_state, record


def solve_max_min(csi: CsiView, dims: SystemDims, cfg: Optional[AoConfig] = None):
    """Run the alternating loop to a fixed point; returns ``(tx, trace)``.

    Stops when the relative improvement of the recorded minimum SINR drops
    below ``cfg.rel_tol`` or after ``cfg.max_iters`` passes.  Step errors
    propagate with the partial trace attached.
    """
    cfg = cfg or AoConfig()
    state = initialize(dims, csi, cfg)
    trace = AoTrace()
    previous = 0.0
    for n in range(1, cfg.max_iters + 1):
        try:
            state, record = ao_step(state, csi, dims, cfg, index=n)
        except (NonPositiveSinrError, SolverFailureError) as exc:
            exc.trace = trace.iterations + list(exc.trace)
            raise
        trace.iterations.append(record)
        gamma = record.gamma_step5
        if (gamma - previous) / max(gamma, 1e-12) < cfg.rel_tol:
            trace.converged = True
            break
        previous = gamma
    return state, trace


@dataclass(frozen=True)
class InverseMapReport:
    """Power margin returned by the power-minimization problem at a target
    SINR, against the budget it should reproduce at a fixed point."""

    gamma_target: float
    beta_star: float
    p_tilde: float
    status: str

    @property
    def ratio(self) -> float:
        return self.beta_star / self.p_tilde


def inverse_map_check(
    csi: CsiView,
    dims: SystemDims,
    tx: TransceiverSet,
    gamma_target: Optional[float] = None,
    sdp_options: Optional[SdpOptions] = None,
) -> InverseMapReport:
    """Diagnostic for the max-min / power-min inverse relationship.

    At a converged max-min point with value ``gamma*``, solving the
    power-minimization problem at target ``gamma*`` (same decorrelators)
    should need exactly the smallest budget; targets below need less, targets
    above need more or are infeasible.
    """
    if gamma_target is None:
        gamma_target, _ = min_worst_case_sinr(csi, tx, dims.N0)
    inst = build_qv(csi, tx.U, gamma_target, dims)
    qv = solve_qv(inst, dims, sdp_options)
    beta = qv.xi if qv.status == SdpStatus.OPTIMAL else float("inf")
    return InverseMapReport(
        gamma_target=float(gamma_target),
        beta_star=float(beta),
        p_tilde=dims.p_tilde,
        status=qv.status.value,
    )
