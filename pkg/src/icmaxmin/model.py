"""Problem dimensions, channel generation, CSI error model and transceiver containers.

The K-pair interference channel is stored as a K-by-K grid of N-by-M complex
matrices: entry ``(k, j)`` is the channel from source ``j`` to destination
``k``.  Transmitters design against estimates that sit within a Frobenius
ball of squared radius ``eps`` around the truth; receivers see the truth.

All user and stream indices in this package are 0-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError

# Seed-sequence domains keeping the per-(k, j) sample streams for channel and
# error draws disjoint, so block sampling order can never change results.
_DOMAIN_CHANNEL = 0
_DOMAIN_DELTA = 1


def _block_rng(seed: int, domain: int, k: int, j: int) -> np.random.Generator:
    """Independent, reproducible PCG64 stream for grid block (k, j)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(domain, k, j)))


@dataclass(frozen=True)
class SystemDims:
    """Problem sizes and budgets.

    Attributes
    ----------
    K : int
        Number of source-destination pairs.
    M, N : int
        Transmit / receive antennas per node.
    L : tuple of int
        Streams per user, each within ``[1, min(M, N)]``.
    P : tuple of float
        Per-user transmit power budgets (linear units).
    N0 : float
        Noise variance at every receiver.
    eps : float
        CSI error radius in squared-Frobenius units.
    """

    K: int
    M: int
    N: int
    L: tuple = ()
    P: tuple = ()
    N0: float = 1.0
    eps: float = 0.0

    def __post_init__(self):
        L = self.L if isinstance(self.L, (tuple, list, np.ndarray)) else (self.L,) * self.K
        P = self.P if isinstance(self.P, (tuple, list, np.ndarray)) else (self.P,) * self.K
        object.__setattr__(self, "L", tuple(int(l) for l in L))
        object.__setattr__(self, "P", tuple(float(p) for p in P))
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.M < 1 or self.N < 1:
            raise ValueError("antenna counts must be positive")
        if len(self.L) != self.K or len(self.P) != self.K:
            raise ValueError("L and P must have one entry per user")
        if any(l < 1 or l > min(self.M, self.N) for l in self.L):
            raise ValueError("stream counts must lie in [1, min(M, N)]")
        if any(p <= 0 for p in self.P):
            raise ValueError("power budgets must be positive")
        if self.N0 <= 0:
            raise ValueError("noise variance must be positive")
        if self.eps < 0:
            raise ValueError("CSI error radius must be non-negative")

    @property
    def p_tilde(self) -> float:
        """Smallest power budget."""
        return min(self.P)

    @property
    def rho(self) -> np.ndarray:
        """Per-user load shares P_k / min(P)."""
        return np.asarray(self.P) / self.p_tilde

    @property
    def total_streams(self) -> int:
        return int(sum(self.L))


def _check_grid(h: np.ndarray, name: str = "grid") -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 4 or h.shape[0] != h.shape[1]:
        raise DimensionMismatchError(
            f"{name} must have shape (K, K, N, M), got {h.shape}"
        )
    if not np.all(np.isfinite(h)):
        raise DimensionMismatchError(f"{name} has non-finite entries")
    return h


@dataclass(frozen=True)
class ChannelSet:
    """The K-by-K grid of true channel matrices."""

    H: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "H", _check_grid(self.H, "channel grid"))

    @property
    def K(self) -> int:
        return self.H.shape[0]

    def block(self, k: int, j: int) -> np.ndarray:
        """Channel from source ``j`` to destination ``k``."""
        return self.H[k, j]

    def is_full_rank(self, tol: float = 1e-9) -> bool:
        """Whether every block has rank min(M, N), i.e. smallest singular value > tol."""
        K = self.K
        return all(
            np.linalg.svd(self.H[k, j], compute_uv=False)[-1] > tol
            for k in range(K)
            for j in range(K)
        )


@dataclass(frozen=True)
class CsiView:
    """Channel estimates available at the transmitters, plus the error radius."""

    Hhat: np.ndarray
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "Hhat", _check_grid(self.Hhat, "estimate grid"))
        if self.eps < 0:
            raise ValueError("CSI error radius must be non-negative")

    @property
    def K(self) -> int:
        return self.Hhat.shape[0]

    def block(self, k: int, j: int) -> np.ndarray:
        return self.Hhat[k, j]


@dataclass
class TransceiverSet:
    """Per-user precoder (M x L_k) and decorrelator (N x L_k) matrices."""

    V: list = field(default_factory=list)
    U: list = field(default_factory=list)

    def __post_init__(self):
        self.V = [np.asarray(v, dtype=complex) for v in self.V]
        self.U = [np.asarray(u, dtype=complex) for u in self.U]
        if len(self.V) != len(self.U):
            raise DimensionMismatchError("V and U must cover the same users")
        for v, u in zip(self.V, self.U):
            if v.ndim != 2 or u.ndim != 2 or v.shape[1] != u.shape[1]:
                raise DimensionMismatchError(
                    "precoder and decorrelator stream counts must match"
                )

    @property
    def K(self) -> int:
        return len(self.V)

    def streams(self, k: int) -> int:
        return self.V[k].shape[1]

    def copy(self) -> "TransceiverSet":
        return TransceiverSet(V=[v.copy() for v in self.V], U=[u.copy() for u in self.U])


def generate_channels(dims: SystemDims, seed: int) -> ChannelSet:
    """Draw an iid Rayleigh-fading channel grid, entries CN(0, 1).

    Each grid block uses its own seed-derived stream, so the result is a pure
    function of ``(dims, seed)`` regardless of sampling order.
    """
    H = np.empty((dims.K, dims.K, dims.N, dims.M), dtype=complex)
    for k in range(dims.K):
        for j in range(dims.K):
            rng = _block_rng(seed, _DOMAIN_CHANNEL, k, j)
            H[k, j] = (
                rng.standard_normal((dims.N, dims.M))
                + 1j * rng.standard_normal((dims.N, dims.M))
            ) / np.sqrt(2.0)
    return ChannelSet(H=H)


def sample_delta(dims: SystemDims, seed: int, mode: str = "boundary") -> np.ndarray:
    """Sample a grid of CSI error matrices within the Frobenius ball.

    ``boundary`` mode places every block exactly on the sphere
    ``||Delta||^2 = eps``; ``interior`` mode draws uniformly from the ball by
    scaling a random direction with ``u**(1/(2 N M))`` for uniform ``u``.
    """
    if mode not in ("interior", "boundary"):
        raise ValueError(f"unknown delta mode {mode!r}")
    delta = np.zeros((dims.K, dims.K, dims.N, dims.M), dtype=complex)
    if dims.eps == 0.0:
        return delta
    for k in range(dims.K):
        for j in range(dims.K):
            rng = _block_rng(seed, _DOMAIN_DELTA, k, j)
            g = rng.standard_normal((dims.N, dims.M)) + 1j * rng.standard_normal(
                (dims.N, dims.M)
            )
            radius = 1.0
            if mode == "interior":
                radius = rng.uniform() ** (1.0 / (2.0 * dims.N * dims.M))
            delta[k, j] = np.sqrt(dims.eps) * radius * g / np.linalg.norm(g)
    return delta


def derive_csi(channels: ChannelSet, delta: np.ndarray, eps: float) -> CsiView:
    """Form the transmitter-side estimates ``Hhat = H - Delta``.

    ``eps`` is the design radius; every block of ``delta`` must fit inside it.
    """
    delta = _check_grid(delta, "delta grid")
    if delta.shape != channels.H.shape:
        raise DimensionMismatchError(
            f"delta grid shape {delta.shape} does not match channels {channels.H.shape}"
        )
    sq = np.sum(np.abs(delta) ** 2, axis=(2, 3))
    if np.any(sq > eps * (1 + 1e-9) + 1e-15):
        raise DimensionMismatchError(
            f"delta blocks exceed the error radius: max {sq.max():.3e} > eps {eps:.3e}"
        )
    return CsiView(Hhat=channels.H - delta, eps=eps)


def transmit_power(tx: TransceiverSet, k: int) -> float:
    """Total transmit power of user ``k``: sum of squared precoder column norms."""
    return float(np.sum(np.abs(tx.V[k]) ** 2))


# ------------------------------------------------------------- serialization

def grid_to_json(grid: np.ndarray, eps: float | None = None) -> str:
    """Serialize a channel / estimate grid to the interchange JSON document.

    Block indices in the document are 0-based.
    """
    grid = _check_grid(grid)
    K, _, N, M = grid.shape
    doc = {
        "K": K,
        "M": M,
        "N": N,
        "blocks": [
            {
                "k": k,
                "j": j,
                "re": grid[k, j].real.tolist(),
                "im": grid[k, j].imag.tolist(),
            }
            for k in range(K)
            for j in range(K)
        ],
    }
    if eps is not None:
        doc["eps"] = eps
    return json.dumps(doc)


def grid_from_json(text: str):
    """Inverse of :func:`grid_to_json`. Returns ``(grid, eps-or-None)``."""
    doc = json.loads(text)
    K, M, N = int(doc["K"]), int(doc["M"]), int(doc["N"])
    grid = np.zeros((K, K, N, M), dtype=complex)
    seen = set()
    for blk in doc["blocks"]:
        k, j = int(blk["k"]), int(blk["j"])
        if not (0 <= k < K and 0 <= j < K):
            raise DimensionMismatchError(f"block index ({k}, {j}) out of range")
        grid[k, j] = np.asarray(blk["re"]) + 1j * np.asarray(blk["im"])
        seen.add((k, j))
    if len(seen) != K * K:
        raise DimensionMismatchError("JSON document does not cover the full grid")
    return grid, doc.get("eps")


def channels_to_json(channels: ChannelSet) -> str:
    return grid_to_json(channels.H)


def channels_from_json(text: str) -> ChannelSet:
    grid, _ = grid_from_json(text)
    return ChannelSet(H=grid)


def csi_to_json(csi: CsiView) -> str:
    return grid_to_json(csi.Hhat, eps=csi.eps)


def csi_from_json(text: str) -> CsiView:
    grid, eps = grid_from_json(text)
    if eps is None:
        raise DimensionMismatchError("CSI document is missing the error radius")
    return CsiView(Hhat=grid, eps=float(eps))
