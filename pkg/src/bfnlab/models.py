"""Right-hand sides, linear symbols and closed-form solutions of the model systems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import special

from .spectral import (
    PeriodicGrid1D,
    PeriodicGrid2D,
    SpectralField1D,
    SpectralField2D,
    l2_norm_coeffs,
)

__all__ = [
    "LorenzParams",
    "lorenz_rhs",
    "lorenz_pathological",
    "lorenz_energy_bound",
    "Pde1DModel",
    "pde1d_linear_symbol",
    "pde1d_nonlinear",
    "NseModel",
    "nse_vorticity_rhs",
    "kdv_forcing",
    "default_nse_forcing",
    "scale_forcing_to_grashof",
    "velocity_l2",
    "taylor_green",
]


# --------------------------------------------------------------------------
# Lorenz 1963 (shifted third equation)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 10.0
    rho: float = 28.0
    b: float = 8.0 / 3.0

    def __post_init__(self):
        for name in ("sigma", "rho", "b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"Lorenz parameter {name} must be positive")


def lorenz_rhs(s, p: LorenzParams) -> np.ndarray:
    """Vector field of the Lorenz system with the ``-b(rho+sigma)`` shift in ``u3``."""
    u1, u2, u3 = s
    return np.array([
        -p.sigma * u1 + p.sigma * u2,
        -p.sigma * u1 - u2 - u1 * u3,
        -p.b * u3 + u1 * u2 - p.b * (p.rho + p.sigma),
    ])


def lorenz_pathological(t, a_coef: float, p: LorenzParams) -> np.ndarray:
    """Solution ``(0, 0, a e^{-bt} - (rho + sigma))``; vectorised over ``t``."""
    t = np.asarray(t, dtype=float)
    u3 = a_coef * np.exp(-p.b * t) - (p.rho + p.sigma)
    zero = np.zeros_like(u3)
    return np.stack([zero, zero, u3], axis=-1)


def lorenz_energy_bound(t, u0, p: LorenzParams) -> np.ndarray:
    """Upper bound ``e^{-2 a t}|U0|^2 + b(rho+sigma)^2/(2a)`` on ``|u(t)|^2``, ``a = min(sigma, 1, b/2)``."""
    alpha = min(p.sigma, 1.0, p.b / 2)
    u0 = np.asarray(u0, dtype=float)
    return np.exp(-2 * alpha * np.asarray(t)) * (u0 @ u0) + p.b * (p.rho + p.sigma) ** 2 / (2 * alpha)


# --------------------------------------------------------------------------
# 1D periodic PDEs
# --------------------------------------------------------------------------

Pde1DKind = Literal["heat", "transport", "burgers", "kdv_damped", "kdv_viscous"]
_NONLINEAR_KINDS = ("burgers", "kdv_damped", "kdv_viscous")


@dataclass(frozen=True, eq=False)
class Pde1DModel:
    """``u_t = nu u_xx - a u_x - gamma u - [u_xxx] - [u u_x] + f`` on a periodic interval."""

    kind: Pde1DKind
    nu: float = 0.0
    a: float = 0.0
    gamma: float = 0.0
    forcing: SpectralField1D | None = None

    def __post_init__(self):
        if self.kind not in ("heat", "transport", "burgers", "kdv_damped", "kdv_viscous"):
            raise ValueError(f"unknown 1D model kind {self.kind!r}")
        if min(self.nu, self.a, self.gamma) < 0:
            raise ValueError("nu, a and gamma must be non-negative")
        if self.kind == "heat" and not self.nu > 0:
            raise ValueError("heat equation needs nu > 0")
        if self.kind == "kdv_viscous" and not self.nu > 0:
            raise ValueError("viscous KdV needs nu > 0")
        if self.kind == "kdv_damped" and not self.gamma > 0:
            raise ValueError("damped KdV needs gamma > 0")
        if self.forcing is not None and self.mean_free and abs(self.forcing.coeffs[0]) > 0:
            raise ValueError("forcing of a mean-free model must be mean-free")

    @property
    def has_dispersion(self) -> bool:
        return self.kind.startswith("kdv")

    @property
    def is_nonlinear(self) -> bool:
        return self.kind in _NONLINEAR_KINDS

    @property
    def mean_free(self) -> bool:
        return self.has_dispersion

    def symbol(self, grid: PeriodicGrid1D) -> np.ndarray:
        """Linear symbol on every stored mode (odd-derivative parts vanish at Nyquist)."""
        return (-self.nu * grid.kappa_sq - self.gamma
                + 1j * (-self.a * grid.kappa_odd + (grid.kappa_odd**3 if self.has_dispersion else 0.0)))

    def forcing_coeffs(self, grid: PeriodicGrid1D) -> np.ndarray | None:
        if self.forcing is None:
            return None
        if self.forcing.grid != grid:
            raise ValueError("forcing lives on a different grid")
        return self.forcing.coeffs

    def nonlinear_operator(self, grid: PeriodicGrid1D):
        """Array-level ``c -> N(c) + f`` used by the integrators; ``None`` when identically zero."""
        f = self.forcing_coeffs(grid)
        if not self.is_nonlinear:
            if f is None:
                return None
            f = np.array(f)
            return lambda c: f
        return _make_burgers_term(grid, f)


def _make_burgers_term(grid: PeriodicGrid1D, forcing: np.ndarray | None):
    n = grid.n_points
    keep = grid.dealias_mask
    factor = np.where(keep, -0.5j * grid.kappa_odd, 0.0)
    rfft, irfft = np.fft.rfft, np.fft.irfft

    if forcing is None:
        def term(c):
            u = irfft(c * keep, n, norm="forward")
            return factor * rfft(u * u, norm="forward")
    else:
        f = np.array(forcing)

        def term(c):
            u = irfft(c * keep, n, norm="forward")
            return factor * rfft(u * u, norm="forward") + f
    return term


def pde1d_linear_symbol(model: Pde1DModel, kappa) -> complex | np.ndarray:
    """``-nu k^2 - i a k + i k^3 [dispersive] - gamma`` at physical wavenumber ``kappa``."""
    kappa = np.asarray(kappa, dtype=float)
    disp = kappa**3 if model.has_dispersion else 0.0
    out = -model.nu * kappa**2 - model.gamma + 1j * (-model.a * kappa + disp)
    return complex(out) if out.ndim == 0 else out


def pde1d_nonlinear(model: Pde1DModel, field: SpectralField1D) -> SpectralField1D:
    """``-(1/2) d/dx (u^2)`` with 2/3 dealiasing, or zero for the linear models."""
    if not model.is_nonlinear:
        return SpectralField1D.zeros(field.grid, field.mean_free)
    term = _make_burgers_term(field.grid, None)
    return field.replace(term(field.coeffs))


def kdv_forcing(f0: float, grid: PeriodicGrid1D) -> SpectralField1D:
    """Mean-free part of ``f0 * exp(cos x)`` on ``[0, 2 pi)``.

    Uses ``exp(cos x) = I_0(1) + 2 sum_k I_k(1) cos(k x)``.
    """
    if not np.isclose(grid.length, 2 * np.pi):
        raise ValueError("the exp(cos x) forcing needs a 2*pi-periodic domain")
    c = f0 * special.iv(grid.index, 1.0).astype(complex)
    c[0] = 0.0
    c[-1] = 0.0
    return SpectralField1D(grid, c, mean_free=True)


# --------------------------------------------------------------------------
# 2D Navier-Stokes, vorticity form
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NseModel:
    """``omega_t = nu Lap omega - u . grad omega + curl f`` with ``u = grad^perp psi``, ``omega = -Lap psi``."""

    nu: float
    forcing_vorticity: SpectralField2D
    grashof_target: float | None = None

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("NSE viscosity must be positive")
        if abs(self.forcing_vorticity.coeffs[0, 0]) > 0:
            raise ValueError("NSE forcing must be mean-free")

    @property
    def grid(self) -> PeriodicGrid2D:
        return self.forcing_vorticity.grid

    def symbol(self, grid: PeriodicGrid2D | None = None) -> np.ndarray:
        grid = grid or self.grid
        return -self.nu * grid.kappa_sq.astype(complex)

    def grashof(self) -> float:
        return velocity_l2(self.forcing_vorticity) / self.nu**2

    def nonlinear_operator(self, grid: PeriodicGrid2D | None = None):
        grid = grid or self.grid
        return _make_advection_term(grid, np.array(self.forcing_vorticity.coeffs))


def _make_advection_term(grid: PeriodicGrid2D, forcing: np.ndarray | None):
    keep = grid.dealias_mask
    ikx = 1j * grid.kappa_x
    iky = 1j * grid.kappa_y
    inv_k2 = grid.inv_kappa_sq
    s = grid.shape
    irfft2, rfft2 = np.fft.irfft2, np.fft.rfft2

    def term(w):
        w = w * keep
        psi = w * inv_k2
        u1 = irfft2(iky * psi, s, norm="forward")
        u2 = irfft2(-ikx * psi, s, norm="forward")
        wx = irfft2(ikx * w, s, norm="forward")
        wy = irfft2(iky * w, s, norm="forward")
        adv = rfft2(u1 * wx + u2 * wy, norm="forward")
        out = -adv * keep
        if forcing is not None:
            out = out + forcing
        return out
    return term


def nse_vorticity_rhs(omega: SpectralField2D, model: NseModel) -> SpectralField2D:
    """Advection plus forcing; the viscous term is left to the integrating factor."""
    if abs(omega.coeffs[0, 0]) > 1e-14 * max(1.0, float(np.max(np.abs(omega.coeffs)))):
        raise ValueError("vorticity must be mean-free")
    term = model.nonlinear_operator(omega.grid)
    return SpectralField2D(omega.grid, term(omega.coeffs), mean_free=True)


def stream_function(omega: SpectralField2D) -> SpectralField2D:
    return SpectralField2D(omega.grid, omega.coeffs * omega.grid.inv_kappa_sq, mean_free=True)


def velocity(omega: SpectralField2D) -> tuple[np.ndarray, np.ndarray]:
    """Physical velocity ``(psi_y, -psi_x)``."""
    g = omega.grid
    psi = omega.coeffs * g.inv_kappa_sq
    return g.inverse(1j * g.kappa_y * psi), g.inverse(-1j * g.kappa_x * psi)


def velocity_l2(omega: SpectralField2D) -> float:
    """``||u||_{L^2}`` of the divergence-free, mean-free field whose curl is ``omega``."""
    g = omega.grid
    return float(l2_norm_coeffs(g, omega.coeffs * np.sqrt(g.inv_kappa_sq)))


def default_nse_forcing(grid: PeriodicGrid2D, k_min: float = 4.0, k_max: float = 6.0) -> SpectralField2D:
    """Curl of a band-limited forcing on ``k_min <= |k| <= k_max`` with fixed quasi-random phases."""
    X, Y = grid.xy
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    values = np.zeros(grid.shape)
    r = int(np.ceil(k_max))
    n = 0
    for kx in range(0, r + 1):
        for ky in range(-r, r + 1):
            if kx == 0 and ky <= 0:
                continue
            if not k_min <= np.hypot(kx, ky) <= k_max:
                continue
            n += 1
            phase = 2 * np.pi * ((n * golden) % 1.0)
            values += np.cos(kx * X + ky * Y + phase)
    return SpectralField2D.from_physical(grid, values, mean_free=True)


def scale_forcing_to_grashof(forcing_vorticity: SpectralField2D, nu: float, g_target: float) -> SpectralField2D:
    """Rescale so that ``||f||_{L^2} / nu^2 = g_target`` (``f`` the velocity forcing)."""
    norm = velocity_l2(forcing_vorticity)
    if norm == 0.0:
        raise ValueError("cannot scale a zero forcing")
    return forcing_vorticity * (g_target * nu**2 / norm)


def taylor_green(grid: PeriodicGrid2D, amplitude: float = 1.0) -> SpectralField2D:
    """Vorticity ``2 A cos x cos y`` of the Taylor-Green vortex."""
    X, Y = grid.xy
    return SpectralField2D.from_physical(grid, 2 * amplitude * np.cos(X) * np.cos(Y), mean_free=True)
