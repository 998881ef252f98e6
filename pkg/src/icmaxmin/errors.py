"""Exception hierarchy for the icmaxmin package.

Every error raised on a contract violation derives from :class:`IcMaxMinError`
so callers (notably the Monte-Carlo harness) can fence off per-scheme failures
without masking genuine bugs.
"""


class IcMaxMinError(Exception):
    """Base class for all package-specific errors."""


# ---------------------------------------------------------------- numerics
class NotHermitianError(IcMaxMinError):
    """Input matrix is not Hermitian within tolerance (or not square)."""


class NotPositiveDefiniteError(IcMaxMinError):
    """Matrix fails the positive-definiteness precondition."""


class NumericalFailureError(IcMaxMinError):
    """A dense decomposition did not converge."""


# ------------------------------------------------------------------- model
class DimensionMismatchError(IcMaxMinError):
    """Array shapes are inconsistent with the declared problem sizes."""


# -------------------------------------------------------------------- sinr
class ZeroDecorrelatorError(IcMaxMinError):
    """A receive filter column is (numerically) zero."""


class NegativeSinrError(IcMaxMinError):
    """Rate requested for a negative SINR value."""


class NonPositiveDenominatorError(IcMaxMinError):
    """Worst-case SINR denominator is non-positive; the operating point is invalid."""


class NotPsdError(IcMaxMinError):
    """A matrix expected to be positive semidefinite is not."""


# ------------------------------------------------------------ decorrelator
class FNotPositiveDefiniteError(NotPositiveDefiniteError):
    """Receive-side whitening matrix lost positive definiteness (invalid operating point)."""


# ---------------------------------------------------------------- precoder
class InvalidGammaError(IcMaxMinError):
    """Target SINR for the power-minimization step must be positive."""


class ZeroBlockError(IcMaxMinError):
    """A transmit-covariance block is numerically zero; no direction can be extracted."""


# ---------------------------------------------------------------------- ao
class SolverFailureError(IcMaxMinError):
    """The precoder subproblem failed inside the alternating optimization.

    Carries the per-iteration records accumulated so far in ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class NonPositiveSinrError(IcMaxMinError):
    """Minimum worst-case SINR is non-positive: the CSI error radius is too
    large for a robust design at this operating point.

    Carries the per-iteration records accumulated so far in ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


# --------------------------------------------------------------- baselines
class NotFeasibleError(IcMaxMinError):
    """Scheme preconditions (user count, antenna parity, stream count) not met."""


class SingularChannelError(IcMaxMinError):
    """A channel block required to be invertible is singular."""


class SingularCovarianceError(IcMaxMinError):
    """A covariance matrix required to be invertible is singular."""
