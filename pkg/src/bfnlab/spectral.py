"""Periodic grids and Fourier-coefficient fields.

Fields are stored in the real-FFT layout (non-negative ``k_x`` only); the
negative half of the spectrum is implied by Hermitian symmetry.  Coefficients
are normalised so that ``f(x) = sum_k c_k exp(i kappa_k x)``, i.e. ``c_k`` is the
integral Fourier coefficient divided by the domain length.  With this
convention ``||f||_{L^2}^2 = L^d * sum_k |c_k|^2`` over the full spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "PeriodicGrid1D",
    "PeriodicGrid2D",
    "SpectralField1D",
    "SpectralField2D",
    "project_low_modes",
    "complement_projection",
    "dealias_two_thirds",
    "helmholtz_invert",
    "norms",
    "energy_spectrum",
]


def _check_resolution(n: int) -> None:
    if int(n) != n or n < 4 or n % 2:
        raise ValueError(f"grid resolution must be an even integer >= 4, got {n}")


@dataclass(frozen=True)
class PeriodicGrid1D:
    """Uniform periodic grid on ``[0, length)`` with ``n_points`` nodes."""

    n_points: int
    length: float = 2 * np.pi

    def __post_init__(self):
        _check_resolution(self.n_points)
        if not self.length > 0:
            raise ValueError(f"domain length must be positive, got {self.length}")

    ndim = 1

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.n_points) * (self.length / self.n_points)

    @cached_property
    def index(self) -> np.ndarray:
        """Integer wavenumbers 0..N/2 of the stored coefficients."""
        return np.arange(self.n_points // 2 + 1)

    @cached_property
    def abs_index(self) -> np.ndarray:
        return self.index.astype(float)

    @cached_property
    def kappa(self) -> np.ndarray:
        """Physical wavenumbers ``2 pi k / L``."""
        return 2 * np.pi * self.index / self.length

    @cached_property
    def kappa_odd(self) -> np.ndarray:
        """Wavenumbers for odd-order derivatives; the Nyquist entry is zero."""
        k = self.kappa.copy()
        k[-1] = 0.0
        return k

    @cached_property
    def kappa_sq(self) -> np.ndarray:
        return self.kappa**2

    @cached_property
    def weights(self) -> np.ndarray:
        """Multiplicity of each stored coefficient in the full spectrum."""
        w = np.full(self.index.shape, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        return self.index <= self.n_points // 3

    @property
    def shape(self) -> tuple[int]:
        return (self.n_points,)

    @property
    def spectral_shape(self) -> tuple[int]:
        return (self.n_points // 2 + 1,)

    @property
    def volume(self) -> float:
        return self.length

    def forward(self, values: np.ndarray) -> np.ndarray:
        return np.fft.rfft(values, norm="forward")

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.irfft(coeffs, n=self.n_points, norm="forward")

    def low_mode_mask(self, m: float) -> np.ndarray:
        return self.abs_index <= m


@dataclass(frozen=True)
class PeriodicGrid2D:
    """Uniform ``N x N`` periodic grid on ``[-pi, pi)^2`` (or a square of side ``length``).

    Spectral arrays have shape ``(N, N//2 + 1)``: axis 0 is ``k_y`` in FFT
    order, axis 1 is non-negative ``k_x``.
    """

    n_points: int
    length: float = 2 * np.pi

    def __post_init__(self):
        _check_resolution(self.n_points)
        if not self.length > 0:
            raise ValueError(f"domain length must be positive, got {self.length}")

    ndim = 2

    @cached_property
    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical coordinates (X, Y) with arrays indexed ``[iy, ix]``."""
        s = -self.length / 2 + np.arange(self.n_points) * (self.length / self.n_points)
        X, Y = np.meshgrid(s, s, indexing="xy")
        return X, Y

    @cached_property
    def index_x(self) -> np.ndarray:
        return np.broadcast_to(np.arange(self.n_points // 2 + 1)[None, :], self.spectral_shape)

    @cached_property
    def index_y(self) -> np.ndarray:
        ky = np.fft.fftfreq(self.n_points, 1.0 / self.n_points)
        return np.broadcast_to(ky[:, None], self.spectral_shape)

    @cached_property
    def abs_index(self) -> np.ndarray:
        return np.hypot(self.index_x, self.index_y)

    @cached_property
    def kappa_x(self) -> np.ndarray:
        k = 2 * np.pi * self.index_x / self.length
        k = np.array(k)
        k[:, -1] = 0.0
        return k

    @cached_property
    def kappa_y(self) -> np.ndarray:
        k = np.array(2 * np.pi * self.index_y / self.length)
        k[self.n_points // 2, :] = 0.0
        return k

    @cached_property
    def kappa_sq(self) -> np.ndarray:
        s = 2 * np.pi / self.length
        return (s * self.abs_index) ** 2

    @cached_property
    def inv_kappa_sq(self) -> np.ndarray:
        """``1/|kappa|^2`` with the mean mode mapped to zero."""
        out = np.zeros(self.spectral_shape)
        nz = self.kappa_sq > 0
        out[nz] = 1.0 / self.kappa_sq[nz]
        return out

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.spectral_shape, 2.0)
        w[:, 0] = 1.0
        w[:, -1] = 1.0
        return w

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        return self.abs_index <= self.n_points // 3

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_points, self.n_points)

    @property
    def spectral_shape(self) -> tuple[int, int]:
        return (self.n_points, self.n_points // 2 + 1)

    @property
    def volume(self) -> float:
        return self.length**2

    def forward(self, values: np.ndarray) -> np.ndarray:
        return np.fft.rfft2(values, norm="forward")

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.irfft2(coeffs, s=self.shape, norm="forward")

    def low_mode_mask(self, m: float) -> np.ndarray:
        return self.abs_index <= m


Grid = PeriodicGrid1D | PeriodicGrid2D


@dataclass(frozen=True, eq=False)
class _SpectralField:
    grid: Grid
    coeffs: np.ndarray
    mean_free: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != self.grid.spectral_shape:
            raise ValueError(
                f"coefficient array shape {c.shape} does not match grid {self.grid.spectral_shape}"
            )
        if self.mean_free:
            c[(0,) * c.ndim] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_physical(cls, grid: Grid, values, mean_free: bool = False):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"physical array shape {values.shape} does not match grid {grid.shape}")
        return cls(grid, grid.forward(values), mean_free)

    @classmethod
    def zeros(cls, grid: Grid, mean_free: bool = False):
        return cls(grid, np.zeros(grid.spectral_shape, dtype=complex), mean_free)

    def to_physical(self) -> np.ndarray:
        return self.grid.inverse(self.coeffs)

    def replace(self, coeffs: np.ndarray) -> "_SpectralField":
        return type(self)(self.grid, coeffs, self.mean_free)

    def _check_compatible(self, other) -> None:
        if not isinstance(other, _SpectralField) or other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        self._check_compatible(other)
        return type(self)(self.grid, self.coeffs + other.coeffs, self.mean_free and other.mean_free)

    def __sub__(self, other):
        self._check_compatible(other)
        return type(self)(self.grid, self.coeffs - other.coeffs, self.mean_free and other.mean_free)

    def __mul__(self, scalar: float):
        return type(self)(self.grid, self.coeffs * scalar, self.mean_free)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


class SpectralField1D(_SpectralField):
    """Real 1D periodic field held as Fourier coefficients ``c_0..c_{N/2}``."""

    @classmethod
    def single_mode(cls, grid: PeriodicGrid1D, k: int, amplitude: float = 1.0,
                    kind: str = "cos", mean_free: bool = False) -> "SpectralField1D":
        """``amplitude * cos(2 pi k x / L)`` (or ``sin``) as a spectral field."""
        if not 0 < k < grid.n_points // 2:
            raise ValueError(f"mode {k} is not representable on an N={grid.n_points} grid")
        c = np.zeros(grid.spectral_shape, dtype=complex)
        if kind == "cos":
            c[k] = amplitude / 2
        elif kind == "sin":
            c[k] = -0.5j * amplitude
        else:
            raise ValueError(f"unknown mode kind {kind!r}")
        return cls(grid, c, mean_free)

    def coeff(self, k: int) -> complex:
        """Coefficient of wavenumber ``k`` (negative ``k`` via Hermitian symmetry)."""
        c = self.coeffs[abs(k)]
        return np.conj(c) if k < 0 else c

    def full_coeffs(self) -> np.ndarray:
        """Length-N coefficient array in FFT order (k = 0, 1, ..., -1)."""
        n = self.grid.n_points
        full = np.zeros(n, dtype=complex)
        full[: n // 2 + 1] = self.coeffs
        full[n // 2 + 1:] = np.conj(self.coeffs[1: n // 2][::-1])
        return full


class SpectralField2D(_SpectralField):
    """Real 2D periodic field in the ``rfft2`` layout."""


def _as_masked(field: _SpectralField, keep: np.ndarray) -> _SpectralField:
    return field.replace(np.where(keep, field.coeffs, 0.0))


def project_low_modes(field: _SpectralField, m: float) -> _SpectralField:
    """Keep modes with ``|k| <= m`` (Euclidean index norm in 2D), zero the rest."""
    if m < 0:
        raise ValueError("projection cutoff must be non-negative")
    return _as_masked(field, field.grid.low_mode_mask(m))


def complement_projection(field: _SpectralField, m: float) -> _SpectralField:
    """``Q_M f = f - P_M f``."""
    if m < 0:
        raise ValueError("projection cutoff must be non-negative")
    return _as_masked(field, ~field.grid.low_mode_mask(m))


def dealias_two_thirds(field: _SpectralField) -> _SpectralField:
    """Zero every mode with ``|k| > floor(N/3)``."""
    return _as_masked(field, field.grid.dealias_mask)


def helmholtz_symbol(grid: Grid, alpha: float, filter_m: float | None = None) -> np.ndarray:
    """Fourier symbol of ``I - alpha^2 Laplacian`` (optionally acting on ``Q_M`` only)."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    h = 1.0 + alpha**2 * grid.kappa_sq
    if filter_m is not None:
        h = np.where(grid.low_mode_mask(filter_m), 1.0, h)
    return h


def helmholtz_invert(field: _SpectralField, alpha: float, filter_m: float | None = None) -> _SpectralField:
    """Apply ``(I - alpha^2 Laplacian)^{-1}``; with ``filter_m`` the observed modes are left alone."""
    return field.replace(field.coeffs / helmholtz_symbol(field.grid, alpha, filter_m))


def l2_norm_coeffs(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """L2 norm of one or more coefficient arrays (leading axes are batch axes)."""
    axes = tuple(range(-grid.ndim, 0))
    return np.sqrt(grid.volume * np.sum(grid.weights * np.abs(coeffs) ** 2, axis=axes))


def h1_seminorm_coeffs(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    axes = tuple(range(-grid.ndim, 0))
    return np.sqrt(grid.volume * np.sum(grid.weights * grid.kappa_sq * np.abs(coeffs) ** 2, axis=axes))


def norms(field: _SpectralField) -> tuple[float, float]:
    """Return ``(||f||_{L^2}, ||grad f||_{L^2})``."""
    return (float(l2_norm_coeffs(field.grid, field.coeffs)),
            float(h1_seminorm_coeffs(field.grid, field.coeffs)))


def energy_spectrum(field: _SpectralField) -> tuple[np.ndarray, np.ndarray]:
    """Shell-summed energy ``L^d sum |c_k|^2``.

    In 1D shell ``j`` collects ``k = +-j``; in 2D it collects
    ``j - 1/2 < |k| <= j + 1/2``.  The shell energies add up to ``||f||^2``.
    """
    grid = field.grid
    dens = grid.volume * grid.weights * np.abs(field.coeffs) ** 2
    if grid.ndim == 1:
        shells = grid.index
        return shells.copy(), dens
    shell = np.ceil(grid.abs_index - 0.5).astype(int)
    energy = np.bincount(shell.ravel(), weights=dens.ravel())
    return np.arange(energy.size), energy
