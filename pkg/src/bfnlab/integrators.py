"""Time steppers for the forward and backward nudging legs.

Spectral models use integrating-factor schemes: the linear symbol is
integrated exactly, nonlinear and forcing terms explicitly.  The nudging
increment is frozen at the start of each step and added once per step, so
observations are only ever needed on the time lattice.

Backward legs are marched forward in ``tau = T - t``; the caller supplies the
already-reversed dynamics and the observations in marching order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

__all__ = [
    "TimeGrid",
    "Direction",
    "NonFiniteState",
    "Dynamics",
    "rk4_step",
    "rk4_step_nudged",
    "ifrk4_step",
    "if_euler_step",
    "IFRK4Stepper",
    "IFEulerStepper",
    "lorenz_leg",
    "spectral_leg",
]


class Direction(enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


class NonFiniteState(ArithmeticError):
    """A state coefficient became inf/nan during a leg."""

    def __init__(self, step: int, leg: int | None = None, last_finite=None, samples=None):
        self.step = step
        self.leg = leg
        self.last_finite = last_finite
        self.samples = samples
        where = f" in leg {leg}" if leg is not None else ""
        super().__init__(f"non-finite state at step {step}{where}")


@dataclass(frozen=True)
class TimeGrid:
    t_end: float
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        ratio = (self.t_end - self.t0) / self.dt
        if ratio < 0.5 or abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(
                f"interval [{self.t0}, {self.t_end}] is not a positive multiple of dt={self.dt}"
            )

    @property
    def n_steps(self) -> int:
        return int(round((self.t_end - self.t0) / self.dt))

    @property
    def length(self) -> float:
        return self.t_end - self.t0

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)


# ---------------------------------------------------------------------------
# ODE: classical RK4 with an explicit nudging increment
# ---------------------------------------------------------------------------

def rk4_step(s, rhs: Callable, dt: float):
    k1 = rhs(s)
    k2 = rhs(s + 0.5 * dt * k1)
    k3 = rhs(s + 0.5 * dt * k2)
    k4 = rhs(s + dt * k3)
    return s + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_step_nudged(s, rhs: Callable, nudge_term, dt: float):
    """One RK4 step of ``rhs`` followed by ``dt * nudge_term`` (frozen at step start)."""
    return rk4_step(s, rhs, dt) + dt * nudge_term


@njit(cache=True)
def _lorenz_f(sign, sigma, rho, b, x, y, z):
    return (sign * (-sigma * x + sigma * y),
            sign * (-sigma * x - y - x * z),
            sign * (-b * z + x * y - b * (rho + sigma)))


@njit(cache=True)
def _lorenz_leg_kernel(u0, sign, sigma, rho, b, mu, weights, obs, dt, n_steps, record_every):
    n_rec = (n_steps + record_every - 1) // record_every
    samples = np.empty((n_rec, 3))
    x, y, z = u0[0], u0[1], u0[2]
    h = 0.5 * dt
    bad = -1
    for j in range(n_steps):
        if j % record_every == 0:
            r = j // record_every
            samples[r, 0] = x
            samples[r, 1] = y
            samples[r, 2] = z
        n1 = mu * weights[j, 0] * (obs[j, 0] - x)
        n2 = mu * weights[j, 1] * (obs[j, 1] - y)
        n3 = mu * weights[j, 2] * (obs[j, 2] - z)
        a1, a2, a3 = _lorenz_f(sign, sigma, rho, b, x, y, z)
        b1, b2, b3 = _lorenz_f(sign, sigma, rho, b, x + h * a1, y + h * a2, z + h * a3)
        c1, c2, c3 = _lorenz_f(sign, sigma, rho, b, x + h * b1, y + h * b2, z + h * b3)
        d1, d2, d3 = _lorenz_f(sign, sigma, rho, b, x + dt * c1, y + dt * c2, z + dt * c3)
        x = x + dt / 6.0 * (a1 + 2.0 * b1 + 2.0 * c1 + d1) + dt * n1
        y = y + dt / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + d2) + dt * n2
        z = z + dt / 6.0 * (a3 + 2.0 * b3 + 2.0 * c3 + d3) + dt * n3
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
            bad = j + 1
            break
    return np.array([x, y, z]), samples, bad


def lorenz_leg(u0, params, *, sign: float, mu: float, weights: np.ndarray, obs: np.ndarray,
               dt: float, n_steps: int, record_every: int = 1):
    """March ``sign * F(u) + mu * chi * (obs - u)`` with RK4 plus explicit nudging.

    ``weights`` and ``obs`` have one row per step in marching order.
    Returns ``(final_state, samples)``; samples are taken every ``record_every`` steps
    starting at step 0 and excluding the terminal state.
    """
    u0 = np.asarray(u0, dtype=float)
    final, samples, bad = _lorenz_leg_kernel(
        u0, float(sign), params.sigma, params.rho, params.b, float(mu),
        np.ascontiguousarray(weights, dtype=float), np.ascontiguousarray(obs, dtype=float),
        float(dt), int(n_steps), int(record_every))
    if bad >= 0:
        raise NonFiniteState(bad, samples=samples[: (bad - 1) // record_every + 1])
    return final, samples


# ---------------------------------------------------------------------------
# Spectral integrating-factor schemes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Dynamics:
    """``dc/ds = symbol * c + nonlinear(c) + nudge_scale * mu * P(obs - c)`` in marching time ``s``."""

    symbol: np.ndarray
    nonlinear: Callable[[np.ndarray], np.ndarray] | None = None
    nudge_scale: np.ndarray | float = 1.0


def ifrk4_step(c: np.ndarray, symbol: np.ndarray, nonlinear, nudge_value, dt: float) -> np.ndarray:
    """Single IF-RK4 step (Lawson form); convenience wrapper around :class:`IFRK4Stepper`."""
    return IFRK4Stepper(symbol, nonlinear, dt).step(c, nudge_value)


def if_euler_step(c: np.ndarray, symbol: np.ndarray, nonlinear, nudge_value, dt: float) -> np.ndarray:
    return IFEulerStepper(symbol, nonlinear, dt).step(c, nudge_value)


class IFRK4Stepper:
    """Fourth-order Runge-Kutta in the integrating-factor variable.

    With ``E = exp(symbol dt)`` and ``E2 = exp(symbol dt / 2)``::

        k1 = N(c)
        k2 = N(E2 (c + dt/2 k1))
        k3 = N(E2 c + dt/2 k2)
        k4 = N(E c + dt E2 k3)
        c+ = E c + dt/6 (E k1 + 2 E2 (k2 + k3) + k4) + E dt nudge
    """

    def __init__(self, symbol: np.ndarray, nonlinear, dt: float):
        symbol = np.asarray(symbol, dtype=complex)
        self.dt = dt
        self.nonlinear = nonlinear
        self.E = np.exp(symbol * dt)
        self.E2 = np.exp(symbol * (dt / 2))
        self.E_dt = self.E * dt

    def advance(self, c: np.ndarray) -> np.ndarray:
        E, E2, dt, N = self.E, self.E2, self.dt, self.nonlinear
        if N is None:
            return E * c
        k1 = N(c)
        k2 = N(E2 * (c + (0.5 * dt) * k1))
        Ec2 = E2 * c
        k3 = N(Ec2 + (0.5 * dt) * k2)
        k4 = N(E * c + dt * (E2 * k3))
        return E * c + (dt / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)

    def step(self, c: np.ndarray, nudge_value=None) -> np.ndarray:
        out = self.advance(c)
        if nudge_value is not None:
            out = out + self.E_dt * nudge_value
        return out


class IFEulerStepper:
    """First-order integrating-factor Euler: ``c+ = E (c + dt (N(c) + nudge))``."""

    def __init__(self, symbol: np.ndarray, nonlinear, dt: float):
        symbol = np.asarray(symbol, dtype=complex)
        self.dt = dt
        self.nonlinear = nonlinear
        self.E = np.exp(symbol * dt)
        self.E_dt = self.E * dt

    def advance(self, c: np.ndarray) -> np.ndarray:
        if self.nonlinear is None:
            return self.E * c
        return self.E * (c + self.dt * self.nonlinear(c))

    def step(self, c: np.ndarray, nudge_value=None) -> np.ndarray:
        out = self.advance(c)
        if nudge_value is not None:
            out = out + self.E_dt * nudge_value
        return out


_SCHEMES = {"ifrk4": IFRK4Stepper, "if_euler": IFEulerStepper}


def make_stepper(scheme: str, dynamics: Dynamics, dt: float):
    try:
        cls = _SCHEMES[scheme]
    except KeyError:
        raise ValueError(f"unknown time scheme {scheme!r}; expected one of {sorted(_SCHEMES)}") from None
    return cls(dynamics.symbol, dynamics.nonlinear, dt)


def spectral_leg(c0: np.ndarray, dynamics: Dynamics, *, scheme: str, dt: float, n_steps: int,
                 mu: float = 0.0, slots: np.ndarray | None = None, obs: np.ndarray | None = None,
                 record_every: int = 1, post_step: Callable | None = None,
                 check_every: int = 16):
    """March a spectral state for ``n_steps``.

    ``slots`` are flat indices of the observed coefficients and ``obs`` holds
    the observed values, one row per step in marching order.  Nudging uses
    the row of the step's starting time.  Returns ``(final, samples)`` with
    samples at steps ``0, r, 2r, ... < n_steps``.
    """
    stepper = make_stepper(scheme, dynamics, dt)
    c = np.array(c0, dtype=complex)
    shape = c.shape
    nudging = mu != 0.0 and slots is not None and len(slots) > 0
    if nudging:
        slots = np.asarray(slots)
        scale = np.broadcast_to(np.asarray(dynamics.nudge_scale, dtype=complex), shape).reshape(-1)[slots]
        gain = stepper.E_dt.reshape(-1)[slots] * (mu * scale)
        if obs is None or len(obs) < n_steps:
            raise ValueError("observations do not cover the leg")
    n_rec = (n_steps + record_every - 1) // record_every
    samples = np.empty((n_rec,) + shape, dtype=complex)
    last_ok = c
    # overflow is detected explicitly below, so the floating-point warnings are noise
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(n_steps):
            if j % record_every == 0:
                samples[j // record_every] = c
            new = stepper.advance(c)
            if nudging:
                flat = new.reshape(-1)
                flat[slots] += gain * (obs[j] - c.reshape(-1)[slots])
            if post_step is not None:
                new = post_step(new)
            if (j + 1) % check_every == 0 or j + 1 == n_steps:
                if not np.isfinite(new).all():
                    raise NonFiniteState(j + 1, last_finite=last_ok,
                                         samples=samples[: j // record_every + 1])
                last_ok = new
            c = new
    return c, samples
