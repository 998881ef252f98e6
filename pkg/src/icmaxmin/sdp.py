"""Small dense conic solver for block-PSD programs with linear inequality rows.

Problems are stated over a product of cones (complex-Hermitian PSD blocks and
nonnegative scalars) with a linear objective and linear inequality
constraints.  Complex blocks are hosted on a real-symmetric interior-point
core through the standard embedding

    T(X) = [[Re X, -Im X], [Im X, Re X]],

which preserves positive semidefiniteness and doubles traces; the factor two
is compensated during problem assembly so callers only ever see the complex
convention ``<A, V> = Tr(A V)``.

The core is an infeasible-start primal-dual path-following method with
Nesterov-Todd scaling and a Mehrotra predictor-corrector step.  Instances in
this package are tiny (blocks of order <= ~8 after embedding, tens of rows),
so each iteration uses dense factorizations throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import NotHermitianError

_HERM_RTOL = 1e-10


def embed_complex(x: np.ndarray) -> np.ndarray:
    """Real-symmetric embedding of a Hermitian matrix.

    Satisfies ``Tr(T(A) T(B)) = 2 Tr(A B)`` for Hermitian ``A, B`` and
    ``X >= 0`` iff ``T(X) >= 0``.
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {x.shape}")
    if np.linalg.norm(x - x.conj().T) > _HERM_RTOL * np.linalg.norm(x):
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    re, im = x.real, x.imag
    return np.block([[re, -im], [im, re]])


def _unembed(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`embed_complex` with symmetric averaging of rounding error."""
    n = x.shape[0] // 2
    re = (x[:n, :n] + x[n:, n:]) / 2.0
    im = (x[n:, :n] - x[:n, n:]) / 2.0
    v = re + 1j * im
    return (v + v.conj().T) / 2.0


class SdpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    MAXITER = "MaxIter"


@dataclass(frozen=True)
class SdpBlock:
    """One cone block: ``field`` is ``"complex"`` (Hermitian PSD, given dim) or
    ``"real"`` (nonnegative scalar, dim must be 1)."""

    dim: int
    field: str = "complex"

    def __post_init__(self):
        if self.field not in ("complex", "real"):
            raise ValueError(f"unknown block field {self.field!r}")
        if self.dim < 1 or (self.field == "real" and self.dim != 1):
            raise ValueError(f"invalid block dimension {self.dim} for field {self.field!r}")


@dataclass
class SdpConstraint:
    """One scalar row ``sum_b <coeff_b, X_b> (sense) rhs``.

    ``coeffs`` holds one entry per block: a Hermitian matrix for complex
    blocks, a float for real blocks, or ``None`` for an absent block.
    """

    coeffs: list
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in (">=", "<="):
            raise ValueError(f"unknown constraint sense {self.sense!r}")


@dataclass
class SdpProblem:
    blocks: list
    objective: list
    constraints: list

    def validate(self):
        if not self.blocks:
            raise ValueError("problem must have at least one block")
        if len(self.objective) != len(self.blocks):
            raise ValueError("objective must have one coefficient per block")
        for con in self.constraints:
            if len(con.coeffs) != len(self.blocks):
                raise ValueError("constraint must have one coefficient per block")
            if not np.isfinite(con.rhs):
                raise ValueError("constraint right-hand side must be finite")


@dataclass
class SdpOptions:
    """Solver knobs.

    ``tol`` is the acceptance threshold (absolute-plus-relative on residuals
    and gap); the solver keeps polishing towards ``target_tol`` while steps
    make progress, which the rank-1 certificates downstream benefit from.
    """

    max_iters: int = 200
    tol: float = 1e-8
    target_tol: float = 5e-13
    step_frac: float = 0.98


@dataclass
class SdpSolution:
    X: list
    y: np.ndarray
    Z: list
    objective: float
    dual_objective: float
    status: SdpStatus
    gap: float
    iterations: int
    primal_residual: float
    dual_residual: float


def _as_real_coeff(block: SdpBlock, coeff, name: str) -> np.ndarray:
    """Validate a per-block coefficient and map it to the embedded real core."""
    d = block.dim
    if coeff is None:
        size = 2 * d if block.field == "complex" else 1
        return np.zeros((size, size))
    if block.field == "real":
        val = float(coeff)
        if not np.isfinite(val):
            raise ValueError(f"{name}: non-finite scalar coefficient")
        return np.array([[val]])
    coeff = np.asarray(coeff, dtype=complex)
    if coeff.shape != (d, d):
        raise ValueError(f"{name}: coefficient shape {coeff.shape} does not match block dim {d}")
    if not np.all(np.isfinite(coeff)):
        raise ValueError(f"{name}: non-finite coefficient entries")
    # Halving compensates the trace doubling of the embedding, so the real
    # inner product equals the complex-form Tr(A V) exactly.
    return embed_complex(coeff) / 2.0


class _Cone:
    """Dense block-diagonal PSD cone arithmetic for the interior-point core."""

    def __init__(self, dims: Sequence[int]):
        self.dims = list(dims)
        self.order = sum(self.dims)

    def identity(self, scale: float = 1.0):
        return [scale * np.eye(d) for d in self.dims]

    @staticmethod
    def inner(a, b) -> float:
        return float(sum(np.sum(x * y) for x, y in zip(a, b)))

    @staticmethod
    def norm(a) -> float:
        return float(np.sqrt(sum(np.sum(x * x) for x in a)))

    @staticmethod
    def sym(a):
        return [(x + x.T) / 2.0 for x in a]

    @staticmethod
    def max_step(x, dx) -> float:
        """Largest alpha with x + alpha dx staying PSD (per block, conservative)."""
        alpha = np.inf
        for xb, db in zip(x, dx):
            if not np.all(np.isfinite(db)):
                return 0.0
            try:
                lx = np.linalg.cholesky(xb)
            except np.linalg.LinAlgError:
                return 0.0
            t = np.linalg.solve(lx, db)
            t = np.linalg.solve(lx, t.T)
            lam = np.linalg.eigvalsh((t + t.T) / 2.0)[0]
            if lam < 0:
                alpha = min(alpha, -1.0 / lam)
        return alpha


def _nt_scaling(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Nesterov-Todd scaling point: the unique PD W with W Z W = X."""
    wx, qx = np.linalg.eigh(x)
    wx = np.maximum(wx, 1e-300)
    x_half = (qx * np.sqrt(wx)) @ qx.T
    s = x_half @ z @ x_half
    ws, qs = np.linalg.eigh((s + s.T) / 2.0)
    ws = np.maximum(ws, 1e-300)
    s_inv_half = (qs / np.sqrt(ws)) @ qs.T
    w = x_half @ s_inv_half @ x_half
    return (w + w.T) / 2.0


def solve_sdp(problem: SdpProblem, options: Optional[SdpOptions] = None) -> SdpSolution:
    """Solve a block-PSD program; never raises on solver outcomes.

    Returns a solution whose ``status`` reports optimality, certified primal
    infeasibility, unboundedness, or iteration cap.  Deterministic for fixed
    problem data and options.
    """
    opts = options or SdpOptions()
    problem.validate()
    blocks = problem.blocks
    m = len(problem.constraints)
    if m == 0:
        raise ValueError("problem must have at least one constraint")

    # Assemble the embedded data, all rows normalized to ">=" sense.
    c_blocks = [
        _as_real_coeff(b, coeff, "objective") for b, coeff in zip(blocks, problem.objective)
    ]
    g_rows = []
    h = np.zeros(m)
    for i, con in enumerate(problem.constraints):
        sign = 1.0 if con.sense == ">=" else -1.0
        row = [
            sign * _as_real_coeff(b, coeff, f"constraint {i}")
            for b, coeff in zip(blocks, con.coeffs)
        ]
        g_rows.append(row)
        h[i] = sign * con.rhs

    # Row equilibration keeps the Schur complement well scaled across the
    # mixed power/SINR rows that differ by orders of magnitude at high SNR.
    row_scale = np.array(
        [
            max(1.0, max(np.linalg.norm(g) for g in row), abs(h[i]))
            for i, row in enumerate(g_rows)
        ]
    )
    g_rows = [[g / row_scale[i] for g in row] for i, row in enumerate(g_rows)]
    h = h / row_scale
    obj_scale = max(1.0, max(np.linalg.norm(c) for c in c_blocks))
    c_blocks = [c / obj_scale for c in c_blocks]

    cone = _Cone([g.shape[0] for g in c_blocks])
    nu = cone.order + m

    def a_op(x, s):
        return np.array(
            [sum(np.sum(g * xb) for g, xb in zip(row, x)) for row in g_rows]
        ) - s

    def at_op(y):
        return [
            sum(y[i] * g_rows[i][b] for i in range(m)) for b in range(len(c_blocks))
        ]

    # Infeasible start: identity blocks sized to the data, unit-style duals.
    data_scale = max(1.0, float(np.max(np.abs(h))))
    x = cone.identity(10.0 * data_scale)
    s = np.full(m, 10.0 * data_scale)
    z = cone.identity(max(1.0, cone.norm(c_blocks)))
    y = np.full(m, max(1.0, cone.norm(c_blocks)))

    h_norm = 1.0 + float(np.max(np.abs(h)))
    c_norm = 1.0 + cone.norm(c_blocks)

    status = SdpStatus.MAXITER
    it = 0
    stalled = 0
    best = None
    step_frac = opts.step_frac

    # Directions may overflow while polishing near machine precision; the
    # explicit finiteness guards below handle that, so keep numpy quiet.
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for it in range(1, opts.max_iters + 1):
            r_p = h - a_op(x, s)
            aty = at_op(y)
            r_d = [c - zb - g for c, zb, g in zip(c_blocks, z, aty)]
            mu = (cone.inner(x, z) + float(s @ y)) / nu

            pobj = cone.inner(c_blocks, x)
            dobj = float(h @ y)
            gap = abs(pobj - dobj)
            rel_p = float(np.max(np.abs(r_p))) / h_norm
            rel_d = cone.norm(r_d) / c_norm
            rel_gap = gap / (1.0 + abs(pobj) + abs(dobj))
            err = max(rel_p, rel_d, rel_gap, mu / (1.0 + abs(pobj)))

            if not np.isfinite(err) or mu <= 0:
                break
            if best is None or err < best[0]:
                best = (err, [xb.copy() for xb in x], s.copy(), y.copy(),
                        [zb.copy() for zb in z], pobj, dobj, gap, rel_p, rel_d, it)

            if err <= opts.target_tol:
                status = SdpStatus.OPTIMAL
                break

            # Primal infeasibility certificate: y >= 0 with A^T y (approx) <= 0 and
            # h^T y > 0.  Only meaningful while the primal residual is not closing,
            # which rules out false positives at feasible optima.
            if dobj > 0 and it >= 5 and rel_p > 10.0 * opts.tol:
                ray_norm = float(np.max(y))
                if ray_norm > 0:
                    yn = y / ray_norm
                    aty_n = [g / ray_norm for g in aty]
                    lam_max = max(float(np.linalg.eigvalsh(g)[-1]) for g in aty_n)
                    if lam_max <= 1e-9 and float(h @ yn) >= 1e-7:
                        status = SdpStatus.INFEASIBLE
                        break
            # Dual infeasibility (primal unbounded ray) heuristic.
            if pobj < -1e14 * data_scale:
                status = SdpStatus.UNBOUNDED
                break

            w = [_nt_scaling(xb, zb) for xb, zb in zip(x, z)]
            w_lp = s / y

            # Schur complement over the scaled cone, plus the slack diagonal.
            wgws = [[wb @ g @ wb for g, wb in zip(row, w)] for row in g_rows]
            schur = np.empty((m, m))
            for i in range(m):
                for j in range(i, m):
                    val = sum(np.sum(g * t) for g, t in zip(g_rows[i], wgws[j]))
                    schur[i, j] = val
                    schur[j, i] = val
            schur[np.diag_indices(m)] += w_lp

            schur_reg = schur + 1e-14 * np.trace(schur) / m * np.eye(m)
            try:
                schur_inv = np.linalg.inv(schur_reg)
            except np.linalg.LinAlgError:
                break

            def schur_solve(rhs: np.ndarray) -> np.ndarray:
                # One round of iterative refinement keeps the direction usable
                # when the complementarity gap is tiny and the system is stiff.
                sol = schur_inv @ rhs
                sol = sol + schur_inv @ (rhs - schur_reg @ sol)
                return sol

            z_inv = []
            for zb in z:
                wz, qz = np.linalg.eigh(zb)
                wz = np.maximum(wz, 1e-300)
                z_inv.append((qz / wz) @ qz.T)

            def direction(rc_blocks, rc_lp):
                # rhs_i = r_p_i - <G_i, R_c - W R_d W> + rc_lp_i
                rhs = (r_p + rc_lp).copy()
                for i in range(m):
                    rhs[i] -= sum(
                        np.sum(g * (rcb - wb @ rdb @ wb))
                        for g, rcb, wb, rdb in zip(g_rows[i], rc_blocks, w, r_d)
                    )
                dy = schur_solve(rhs)
                dz = [rdb - sum(dy[i] * g_rows[i][b] for i in range(m)) for b, rdb in enumerate(r_d)]
                dx = cone.sym([rcb - wb @ dzb @ wb for rcb, wb, dzb in zip(rc_blocks, w, dz)])
                ds = rc_lp - w_lp * dy
                return dx, ds, dy, dz

            # Predictor: pure affine step towards complementarity zero.
            rc_aff = [-xb for xb in x]
            rc_lp_aff = -s
            dx_a, ds_a, dy_a, dz_a = direction(rc_aff, rc_lp_aff)
            if not all(np.all(np.isfinite(d)) for d in dx_a + dz_a) or not (
                np.all(np.isfinite(ds_a)) and np.all(np.isfinite(dy_a))
            ):
                break

            ap_aff = min(1.0, 0.99 * min(cone.max_step(x, dx_a), _lp_step(s, ds_a)))
            ad_aff = min(1.0, 0.99 * min(cone.max_step(z, dz_a), _lp_step(y, dy_a)))
            mu_aff = (
                cone.inner(
                    [xb + ap_aff * d for xb, d in zip(x, dx_a)],
                    [zb + ad_aff * d for zb, d in zip(z, dz_a)],
                )
                + float((s + ap_aff * ds_a) @ (y + ad_aff * dy_a))
            ) / nu
            ratio = min(max(mu_aff, 0.0) / mu, 1.0)
            sigma = max(ratio**3, 1e-10)

            # Corrector with Mehrotra second-order terms.
            rc = [
                sigma * mu * zi - xb - 0.5 * (dxa @ dza @ zi + zi @ dza @ dxa)
                for zi, xb, dxa, dza in zip(z_inv, x, dx_a, dz_a)
            ]
            rc_lp = sigma * mu / y - s - ds_a * dy_a / y
            dx, ds, dy, dz = direction(cone.sym(rc), rc_lp)

            def steps(dx, ds, dy, dz):
                ap = min(cone.max_step(x, dx), _lp_step(s, ds))
                ad = min(cone.max_step(z, dz), _lp_step(y, dy))
                return min(1.0, step_frac * ap), min(1.0, step_frac * ad)

            ap, ad = steps(dx, ds, dy, dz)
            if min(ap, ad) < 0.2 * min(ap_aff, ad_aff):
                # The second-order term overshot near the boundary; fall back to a
                # plain damped-centering direction.
                rc = [sigma * mu * zi - xb for zi, xb in zip(z_inv, x)]
                rc_lp = sigma * mu / y - s
                dx, ds, dy, dz = direction(cone.sym(rc), rc_lp)
                ap, ad = steps(dx, ds, dy, dz)
            if ap <= 1e-8 or ad <= 1e-8:
                # Last resort: pure centering to pull the iterate off the boundary.
                rc = [mu * zi - xb for zi, xb in zip(z_inv, x)]
                rc_lp = mu / y - s
                dx, ds, dy, dz = direction(cone.sym(rc), rc_lp)
                ap, ad = steps(dx, ds, dy, dz)
            if ap <= 1e-8 or ad <= 1e-8:
                stalled += 1
                if stalled >= 5:
                    break
            else:
                stalled = 0
            step_frac = 0.9 + 0.09 * min(1.0, min(ap, ad))

            x = [xb + ap * d for xb, d in zip(x, dx)]
            s = s + ap * ds
            y = y + ad * dy
            z = [zb + ad * d for zb, d in zip(z, dz)]

    if best is None:  # pragma: no cover - first iterate is always finite
        best = (np.inf, x, s, y, z, cone.inner(c_blocks, x), float(h @ y),
                np.inf, np.inf, np.inf, it)
    err, x, s, y, z, pobj, dobj, gap, rel_p, rel_d, _best_it = best
    if status not in (SdpStatus.INFEASIBLE, SdpStatus.UNBOUNDED):
        status = SdpStatus.OPTIMAL if err <= opts.tol else SdpStatus.MAXITER

    # Undo scalings and return to the complex convention.
    y_out = (y / row_scale) * obj_scale
    x_out = []
    z_out = []
    for b, blk in enumerate(blocks):
        if blk.field == "real":
            x_out.append(float(x[b][0, 0]))
            z_out.append(float(z[b][0, 0]) * obj_scale)
        else:
            x_out.append(_unembed(x[b]))
            z_out.append(_unembed(z[b]) * 2.0 * obj_scale)
    return SdpSolution(
        X=x_out,
        y=y_out,
        Z=z_out,
        objective=pobj * obj_scale,
        dual_objective=dobj * obj_scale,
        status=status,
        gap=gap * obj_scale,
        iterations=it,
        primal_residual=rel_p,
        dual_residual=rel_d,
    )


def _lp_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def problem_to_json(problem: SdpProblem) -> str:
    """Debug dump of an instance (blocks and rows as re/im arrays)."""
    problem.validate()

    def coeff_doc(block: SdpBlock, coeff):
        if coeff is None:
            return None
        if block.field == "real":
            return float(coeff)
        coeff = np.asarray(coeff, dtype=complex)
        return {"re": coeff.real.tolist(), "im": coeff.imag.tolist()}

    doc = {
        "blocks": [{"dim": b.dim, "field": b.field} for b in problem.blocks],
        "objective": [coeff_doc(b, c) for b, c in zip(problem.blocks, problem.objective)],
        "constraints": [
            {
                "coeffs": [coeff_doc(b, c) for b, c in zip(problem.blocks, con.coeffs)],
                "sense": con.sense,
                "rhs": con.rhs,
            }
            for con in problem.constraints
        ],
    }
    return json.dumps(doc)


def problem_from_json(text: str) -> SdpProblem:
    doc = json.loads(text)
    blocks = [SdpBlock(dim=int(b["dim"]), field=b["field"]) for b in doc["blocks"]]

    def coeff_from(block: SdpBlock, c):
        if c is None:
            return None
        if block.field == "real":
            return float(c)
        return np.asarray(c["re"]) + 1j * np.asarray(c["im"])

    objective = [coeff_from(b, c) for b, c in zip(blocks, doc["objective"])]
    constraints = [
        SdpConstraint(
            coeffs=[coeff_from(b, c) for b, c in zip(blocks, con["coeffs"])],
            sense=con["sense"],
            rhs=float(con["rhs"]),
        )
        for con in doc["constraints"]
    ]
    return SdpProblem(blocks=blocks, objective=objective, constraints=constraints)
