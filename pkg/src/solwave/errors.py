"""Exception hierarchy shared by all solwave modules."""


class SolwaveError(Exception):
    """Base class for all solwave failures."""


class InputError(SolwaveError):
    """Bad configuration or arguments (CLI exit code 3)."""


class NumericalAbort(SolwaveError):
    """A run stopped because numerics left their validity regime (CLI exit code 4)."""


class NonConvergence(NumericalAbort):
    """Profile solver residual stayed above tolerance after max_iter."""


class SignViolation(NumericalAbort):
    """Profile iterate lost positivity (bad initialization or inadmissible exponent)."""


class GridMismatch(InputError):
    """Two fields live on different grids."""


class BoxTooSmall(InputError):
    """The periodic box cannot hold the requested datum."""


class SingularityOnTrajectory(NumericalAbort):
    """Trajectory came too close to the potential's singular point."""


class SingularityInWindow(NumericalAbort):
    """The singular point of the potential falls inside a sampled window."""


class StepRejected(NumericalAbort):
    """ODE step error estimate exceeded tolerance."""


class MonitorBreach(NumericalAbort):
    """A conservation or resolution monitor tripped during evolution."""


class UnderResolved(NumericalAbort):
    """Spectral tail too large for a trustworthy evaluation."""


class WindowClipped(InputError):
    """Requested zoom window exceeds the periodic box."""


class WindowViolation(NumericalAbort):
    """A check's validity window (norm bound) was violated."""


class KernelResidualTooLarge(NumericalAbort):
    """Profile kernel identities too inaccurate for a linearization-based check."""


class TooFewSnapshots(InputError):
    """Growth-rate fit needs at least three snapshots."""


class InsufficientEpsilons(InputError):
    """A scan needs at least three epsilon values."""


class MissingArtifacts(InputError):
    """Report requested from a run directory without the needed files."""


class CutoffWarning(UserWarning):
    """Radial cutoff too small: the outer tail still contributes to a moment."""
