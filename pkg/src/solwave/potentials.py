"""External potentials: the four supported kinds and their certified bounds.

Vectorized over point arrays of shape (..., N).  The singular kind exposes
cell averages so quadratures and grid samplers never evaluate at the singular
point itself: a cell that contains the singularity contributes the analytic
average of A*|x|^-zeta over the equal-volume ball about the singular point
(finite for zeta < N), and the averaged gradient of such a cell is zero by
symmetry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError


def _radii(points: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(points * points, axis=-1))


@dataclass(frozen=True)
class ZeroPotential:
    kind = "zero"
    singular = False

    def value(self, points):
        return np.zeros(np.shape(points)[:-1])

    def grad(self, points):
        return np.zeros(np.shape(points))

    @property
    def hess_bound(self) -> float:
        return 0.0

    def to_config(self):
        return {"kind": "zero"}


@dataclass(frozen=True)
class HarmonicPotential:
    """V(x) = k |x|^2.  Second derivatives are 2k exactly."""

    k: float
    kind = "harmonic"
    singular = False

    def value(self, points):
        return self.k * np.sum(np.asarray(points) ** 2, axis=-1)

    def grad(self, points):
        return 2.0 * self.k * np.asarray(points)

    @property
    def hess_bound(self) -> float:
        return 2.0 * abs(self.k)

    def to_config(self):
        return {"kind": "harmonic", "k": self.k}


@dataclass(frozen=True)
class GaussianWellPotential:
    """V(x) = -depth * exp(-|x-center|^2 / (2 width^2)).

    The largest second derivative in absolute value is attained at the center
    diagonal, giving the closed-form bound depth / width^2.
    """

    depth: float
    width: float
    center: tuple[float, ...]
    kind = "gaussian_well"
    singular = False

    def __post_init__(self):
        if self.width <= 0:
            raise InputError("gaussian well width must be positive")

    def _offsets(self, points):
        return np.asarray(points) - np.asarray(self.center)

    def value(self, points):
        y = self._offsets(points)
        return -self.depth * np.exp(-np.sum(y * y, axis=-1) / (2.0 * self.width**2))

    def grad(self, points):
        y = self._offsets(points)
        v = -self.depth * np.exp(-np.sum(y * y, axis=-1) / (2.0 * self.width**2))
        return -(v / self.width**2)[..., None] * y

    @property
    def hess_bound(self) -> float:
        return abs(self.depth) / self.width**2

    def to_config(self):
        return {
            "kind": "gaussian_well",
            "depth": self.depth,
            "width": self.width,
            "center": list(self.center),
        }


@dataclass(frozen=True)
class InversePowerPotential:
    """V(x) = amp * |x|^-zeta, singular at the origin, zeta in (0, 2).

    ``far_field_exponent`` records an m > N/2 with V in L^m(|x| >= 1); it is
    bookkeeping only (needs m*zeta > N, which the chosen value satisfies).
    """

    amp: float
    zeta: float
    kind = "inverse_power"
    singular = True

    def __post_init__(self):
        if not 0.0 < self.zeta < 2.0:
            raise InputError(f"zeta must lie in (0, 2), got {self.zeta}")

    def far_field_exponent(self, N: int) -> float:
        return max(N / 2.0, N / self.zeta) + 1.0

    def value(self, points):
        r = _radii(np.asarray(points))
        with np.errstate(divide="ignore"):
            return self.amp * r ** (-self.zeta)

    def grad(self, points):
        pts = np.asarray(points)
        r = _radii(pts)
        with np.errstate(divide="ignore", invalid="ignore"):
            mag = -self.amp * self.zeta * r ** (-self.zeta - 2.0)
        return mag[..., None] * pts

    @property
    def hess_bound(self):
        return None  # unbounded near the origin

    def ball_average(self, N: int, h: float) -> float:
        """Average of V over the ball about the origin with the volume of a
        cell of side h.  Finite because zeta < 2 <= N for N >= 2 (and < 1
        grid use is guarded by zeta < N in all supported dimensions)."""
        if self.zeta >= N:
            raise InputError(f"cell average diverges: zeta = {self.zeta} >= N = {N}")
        unit_ball_vol = math.pi ** (N / 2.0) / math.gamma(N / 2.0 + 1.0)
        radius = h * (1.0 / unit_ball_vol) ** (1.0 / N)
        return self.amp * N / (N - self.zeta) * radius ** (-self.zeta)

    def to_config(self):
        return {"kind": "inverse_power", "amp": self.amp, "zeta": self.zeta}


Potential = ZeroPotential | HarmonicPotential | GaussianWellPotential | InversePowerPotential


def potential_from_config(cfg: dict) -> Potential:
    kind = cfg.get("kind")
    if kind == "zero":
        return ZeroPotential()
    if kind == "harmonic":
        return HarmonicPotential(k=float(cfg["k"]))
    if kind == "gaussian_well":
        return GaussianWellPotential(
            depth=float(cfg["depth"]),
            width=float(cfg["width"]),
            center=tuple(float(c) for c in cfg["center"]),
        )
    if kind == "inverse_power":
        return InversePowerPotential(amp=float(cfg["amp"]), zeta=float(cfg["zeta"]))
    raise InputError(f"unknown potential kind {kind!r}")


def sample_values(pot: Potential, points: np.ndarray, cell_h: float | None = None) -> np.ndarray:
    """Potential values at quadrature/grid points, singular cells averaged.

    For a singular potential, any point whose cell (side ``cell_h``) contains
    the origin gets the analytic ball average instead of a pointwise value.
    """
    vals = pot.value(points)
    if pot.singular and cell_h is not None:
        pts = np.asarray(points)
        N = pts.shape[-1]
        near = np.all(np.abs(pts) <= 0.5 * cell_h, axis=-1)
        if np.any(near):
            vals = np.where(near, pot.ball_average(N, cell_h), vals)
    return vals


def sample_grad(pot: Potential, points: np.ndarray, cell_h: float | None = None) -> np.ndarray:
    """Potential gradients at points; a singular cell contributes zero, the
    symmetric average of the gradient over the ball about the singularity."""
    g = pot.grad(points)
    if pot.singular and cell_h is not None:
        pts = np.asarray(points)
        near = np.all(np.abs(pts) <= 0.5 * cell_h, axis=-1)
        if np.any(near):
            g = np.where(near[..., None], 0.0, g)
    return g
