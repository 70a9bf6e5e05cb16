"""Periodic Cartesian grids and complex fields.

A grid is uniform with n points per axis on [-L, L) and periodic wrap; all
spectral work (derivatives, translations) lives here so the rest of the code
never touches FFT conventions directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _sfft

from .errors import GridMismatch, InputError

# worker count for scipy.fft; results are bitwise independent of it
_FFT_WORKERS = 1


def set_fft_workers(k: int) -> None:
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(k))


def get_fft_workers() -> int:
    return _FFT_WORKERS


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic box: n points per axis on [-L, L)."""

    N: int
    n: int
    L: float

    def __post_init__(self):
        if self.N < 1:
            raise InputError(f"grid dimension must be >= 1, got {self.N}")
        if self.n < 32 or (self.n & (self.n - 1)) != 0:
            raise InputError(f"points per axis must be a power of two >= 32, got {self.n}")
        if self.L <= 0:
            raise InputError("box half-width must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.N

    @property
    def cell_volume(self) -> float:
        return self.dx**self.N

    def axis(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.n)

    def meshgrid(self) -> list[np.ndarray]:
        ax = self.axis()
        return np.meshgrid(*([ax] * self.N), indexing="ij")

    def points(self) -> np.ndarray:
        """All grid points as an array of shape (*shape, N)."""
        return np.stack(self.meshgrid(), axis=-1)

    def k_axis(self) -> np.ndarray:
        return 2.0 * np.pi * _sfft.fftfreq(self.n, d=self.dx)

    def k_meshgrid(self) -> list[np.ndarray]:
        k = self.k_axis()
        return np.meshgrid(*([k] * self.N), indexing="ij")

    def k_squared(self) -> np.ndarray:
        K = self.k_meshgrid()
        out = K[0] ** 2
        for j in range(1, self.N):
            out = out + K[j] ** 2
        return out

    def to_config(self) -> dict:
        return {"N": self.N, "n": self.n, "L": self.L}


@dataclass
class ComplexField:
    """Complex samples on a GridSpec; L2 quantities use the rectangle rule."""

    grid: GridSpec
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.complex128)
        if self.data.shape != self.grid.shape:
            raise GridMismatch(
                f"data shape {self.data.shape} does not match grid {self.grid.shape}"
            )

    @classmethod
    def zeros(cls, grid: GridSpec) -> "ComplexField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.data.copy())

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.data) ** 2) * self.grid.cell_volume))

    def inner(self, other: "ComplexField") -> complex:
        require_same_grid(self, other)
        return complex(np.sum(self.data * np.conj(other.data)) * self.grid.cell_volume)


def require_same_grid(a: ComplexField, b: ComplexField) -> None:
    if a.grid != b.grid:
        raise GridMismatch(f"fields on different grids: {a.grid} vs {b.grid}")


def fftn(data: np.ndarray) -> np.ndarray:
    return _sfft.fftn(data, workers=_FFT_WORKERS)


def ifftn(data: np.ndarray) -> np.ndarray:
    return _sfft.ifftn(data, workers=_FFT_WORKERS)


def spectral_laplacian(f: ComplexField) -> ComplexField:
    return ComplexField(f.grid, ifftn(-f.grid.k_squared() * fftn(f.data)))


def spectral_gradient(f: ComplexField) -> list[ComplexField]:
    hat = fftn(f.data)
    K = f.grid.k_meshgrid()
    return [ComplexField(f.grid, ifftn(1j * K[j] * hat)) for j in range(f.grid.N)]


def spectral_shift(f: ComplexField, delta: np.ndarray) -> ComplexField:
    """Periodic translation by an arbitrary real vector: g(x) = f(x + delta).

    Exact for band-limited fields (unitary phase multiplier in k-space).
    """
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (f.grid.N,):
        raise InputError(f"shift vector must have length {f.grid.N}")
    hat = fftn(f.data)
    K = f.grid.k_meshgrid()
    phase = K[0] * delta[0]
    for j in range(1, f.grid.N):
        phase = phase + K[j] * delta[j]
    return ComplexField(f.grid, ifftn(hat * np.exp(1j * phase)))


def spectral_tail_fraction(f: ComplexField, band: float = 0.75) -> float:
    """Fraction of the field's squared mass carried by modes with any
    |k_j| >= band * k_nyquist."""
    hat = np.abs(fftn(f.data)) ** 2
    total = float(np.sum(hat))
    if total == 0.0:
        return 0.0
    n = f.grid.n
    idx = _sfft.fftfreq(n) * n  # integer mode numbers
    outer = np.abs(idx) >= band * (n // 2)
    mask = np.zeros(f.grid.shape, dtype=bool)
    for j in range(f.grid.N):
        shape = [1] * f.grid.N
        shape[j] = n
        mask |= outer.reshape(shape)
    return float(np.sum(hat[mask])) / total
