"""Scaling-parameter algebra: admissibility flags, the decay exponent, rescalings.

The artifact is parametrized by (N, p, alpha, beta, gamma, eps).  A handful of
arithmetic relations between them decide whether the solitary-wave
approximation theorem applies, with what decay exponent, and over what time
horizon.  Everything here is exact arithmetic on floats; nothing touches a
grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import InputError

# tolerance for "exact" arithmetic relations between float parameters
REL_TOL = 1e-12


@dataclass(frozen=True)
class ScalingParams:
    """Dimensionless scaling parameters of a run.

    ``eta`` is the error exponent chosen by the user; it must lie in
    (0, delta) for the horizon/error bookkeeping to be meaningful, but it is
    validated by :func:`validate_params`, not at construction (reports carry
    failures, constructors don't hide them).
    """

    N: int
    p: float
    alpha: float
    beta: float
    gamma: float
    eps: float
    eta: float | None = None

    def __post_init__(self):
        if self.N < 1:
            raise InputError(f"dimension must be >= 1, got {self.N}")
        if self.eps <= 0:
            raise InputError(f"eps must be positive, got {self.eps}")
        if self.p <= 0:
            raise InputError(f"homogeneity degree must be positive, got {self.p}")

    @property
    def delta(self) -> float:
        """Decay exponent 1 + gamma + beta*(N/2 - 2)."""
        return 1.0 + self.gamma + self.beta * (self.N / 2.0 - 2.0)

    @property
    def n4_ok(self) -> bool:
        """Exponent-matching relation beta = 1 + (alpha-gamma)*p."""
        target = 1.0 + (self.alpha - self.gamma) * self.p
        scale = max(1.0, abs(self.beta), abs(target))
        return abs(self.beta - target) <= REL_TOL * scale

    @property
    def serve3_ok(self) -> bool:
        """Strict extra condition beta < 2*gamma + 2, needed only when N = 3."""
        if self.N != 3:
            return True
        return self.beta < 2.0 * self.gamma + 2.0

    @property
    def ranges_ok(self) -> bool:
        return self.beta >= 1.0 and self.alpha >= self.gamma >= 0.0

    @property
    def aiuto_ok(self) -> bool:
        """Whether delta > N/2, i.e. the zoomed rescaling still has a positive
        error exponent available."""
        return self.delta > self.N / 2.0

    @property
    def par1_case(self) -> bool:
        """Special case alpha = gamma, beta = 1 (homogeneity not load-bearing)."""
        return (
            abs(self.alpha - self.gamma) <= REL_TOL * max(1.0, abs(self.alpha))
            and abs(self.beta - 1.0) <= REL_TOL
        )

    @property
    def eps_beta(self) -> float:
        return self.eps**self.beta

    def with_eps(self, eps: float) -> "ScalingParams":
        return replace(self, eps=eps)


@dataclass
class ParamReport:
    """Outcome of validating a parameter tuple.  Carries failures, never raises."""

    params: ScalingParams
    delta: float
    n4_ok: bool
    ranges_ok: bool
    serve3_ok: bool
    delta_positive: bool
    aiuto_ok: bool
    par1_case: bool
    eta_ok: bool
    messages: list[str] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return (
            self.n4_ok
            and self.ranges_ok
            and self.serve3_ok
            and self.delta_positive
            and self.eta_ok
        )


def validate_params(params: ScalingParams) -> ParamReport:
    """Evaluate every admissibility flag and the exponent algebra.

    Boundary cases are rejected strictly: the theorem needs open conditions,
    so beta = 2*gamma + 2 at N = 3 fails, as does delta = 0 or eta on the
    boundary of (0, delta).
    """
    msgs = []
    delta = params.delta
    if not params.n4_ok:
        msgs.append(
            f"beta = {params.beta} != 1 + (alpha-gamma)*p = "
            f"{1.0 + (params.alpha - params.gamma) * params.p}"
        )
    if not params.ranges_ok:
        msgs.append(
            f"need beta >= 1 and alpha >= gamma >= 0, got "
            f"(alpha, beta, gamma) = ({params.alpha}, {params.beta}, {params.gamma})"
        )
    if not params.serve3_ok:
        msgs.append(f"N = 3 requires beta < 2*gamma + 2 strictly, got beta = {params.beta}")
    if delta <= 0:
        msgs.append(f"delta = {delta} is not positive")

    if params.eta is None:
        eta_ok = True  # nothing to check
    else:
        eta_ok = 0.0 < params.eta < delta
        if not eta_ok:
            msgs.append(f"eta = {params.eta} outside (0, delta) = (0, {delta})")

    # equivalent forms of delta > N/2, reported for cross-checking
    if params.N == 3:
        aiuto_equiv = params.beta < 2.0 * params.gamma - 1.0
    else:
        aiuto_equiv = params.beta * (params.N / 2.0 - 2.0) + params.gamma > params.N / 2.0 - 1.0
    if aiuto_equiv != params.aiuto_ok:
        msgs.append("internal inconsistency between delta > N/2 and its equivalent form")

    return ParamReport(
        params=params,
        delta=delta,
        n4_ok=params.n4_ok,
        ranges_ok=params.ranges_ok,
        serve3_ok=params.serve3_ok,
        delta_positive=delta > 0,
        aiuto_ok=params.aiuto_ok,
        par1_case=params.par1_case,
        eta_ok=eta_ok,
        messages=msgs,
    )


@dataclass
class RescaleResult:
    """A rescaled parameter tuple plus the affine map that produced it.

    The map sends new coordinates to old ones:
    ``t_old = time_scale * t_new``, ``x_old = space_scale * x_new``, and the
    new field equals ``amplitude_scale`` times the old one sampled there.
    """

    params: ScalingParams
    mode: str
    time_scale: float
    space_scale: float
    amplitude_scale: float
    horizon_exponent: float | None
    error_exponent: float | None
    feasible: bool


def rescale_problem(params: ScalingParams, mode: str) -> RescaleResult:
    """Transform the problem into one of its two equivalent formulations.

    mode "P" removes the amplitude prefactor from the nonlinearity argument
    (identity map when alpha = 0).  mode "P1" zooms space-time by eps, which
    buys a factor eps^-1 of horizon at the price of eps^-N/2 in the error
    norm; it is only useful when delta > N/2.
    """
    eta = params.eta
    delta = params.delta
    if mode == "P":
        new = replace(params, alpha=0.0, gamma=params.gamma - params.alpha)
        return RescaleResult(
            params=new,
            mode="P",
            time_scale=1.0,
            space_scale=1.0,
            amplitude_scale=params.eps ** (-params.alpha),
            horizon_exponent=None if eta is None else eta - delta,
            error_exponent=eta,
            feasible=True,
        )
    if mode == "P1":
        new = replace(params, beta=params.beta - 1.0)
        return RescaleResult(
            params=new,
            mode="P1",
            time_scale=params.eps,
            space_scale=params.eps,
            amplitude_scale=1.0,
            horizon_exponent=None if eta is None else eta - delta - 1.0,
            error_exponent=None if eta is None else eta - params.N / 2.0,
            feasible=params.aiuto_ok,
        )
    raise InputError(f"unknown rescale mode {mode!r}, want 'P' or 'P1'")
