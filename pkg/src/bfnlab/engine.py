"""The back-and-forth nudging iteration and identical-twin plumbing.

One cycle ``n`` runs a forward leg from ``v^n(0) = v~^{n-1}(0)`` to ``T`` and a
backward leg from ``v~^n(T) = v^n(T)`` back to ``0``.  Leg ``l`` (``l = 2n - 2``
forward, ``2n - 1`` backward) is reported on the iteration-time interval
``[l, l + 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import diagnostics
from .integrators import NonFiniteState, TimeGrid, lorenz_leg, make_stepper, spectral_leg
from .models import LorenzParams, NseModel, Pde1DModel
from .observation import ObservationMask, ObservationRecord
from .spectral import Grid, PeriodicGrid2D, SpectralField1D, SpectralField2D, _SpectralField, energy_spectrum
from .variants import BackwardVariant, backward_dynamics, forward_dynamics

__all__ = [
    "BfnConfig",
    "Reference",
    "LegRecord",
    "IterationHistory",
    "generate_reference",
    "integrate_leg",
    "run_bfn",
    "run_synchronization",
    "reverse_synchronization",
    "heat_bfn_error_oracle",
    "lattice_projector",
    "GROWTH_BLOWUP_THRESHOLD",
]

# A leg whose total error grows by this factor over its roundoff floor is reported as a blow-up.
GROWTH_BLOWUP_THRESHOLD = 1e10


@dataclass(frozen=True, eq=False)
class BfnConfig:
    mu: float
    n_iterations: int
    mu_back: float | None = None
    initial_guess: Any = None
    variant: BackwardVariant = field(default_factory=BackwardVariant.standard)
    scheme: str = "ifrk4"
    record_every: int = 1
    keep_samples: bool = False

    def __post_init__(self):
        if self.mu < 0 or (self.mu_back is not None and self.mu_back < 0):
            raise ValueError("nudging strengths must be non-negative")
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be positive")

    @property
    def mu_tilde(self) -> float:
        return self.mu if self.mu_back is None else self.mu_back


@dataclass(frozen=True, eq=False)
class Reference:
    """Reference trajectory stored every ``record_every`` steps (endpoints included)."""

    times: np.ndarray
    states: np.ndarray
    record_every: int
    grid: Grid | None = None

    @property
    def initial(self) -> np.ndarray:
        return self.states[0]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


@dataclass(eq=False)
class LegRecord:
    index: int
    cycle: int
    direction: str
    iteration_times: np.ndarray
    errors: dict[str, np.ndarray]
    initial_state: np.ndarray
    final_state: np.ndarray | None
    samples: np.ndarray | None = None
    growth: float | None = None


@dataclass(eq=False)
class IterationHistory:
    legs: list[LegRecord]
    boundary_states: list[np.ndarray]
    boundary_errors: list[dict[str, float]]
    error_keys: tuple[str, ...]
    blowup: dict | None = None
    spectrum: tuple[np.ndarray, np.ndarray] | None = None
    grid: Grid | None = None

    @property
    def flagged(self) -> bool:
        return self.blowup is not None

    @property
    def recovered(self) -> np.ndarray:
        """Latest estimate of the initial state, ``v~^n(0)``."""
        return self.boundary_states[-1]

    @property
    def cycles_completed(self) -> int:
        return len(self.boundary_states) - 1

    def boundary_series(self, key: str) -> np.ndarray:
        return np.array([e[key] for e in self.boundary_errors])

    def leg_series(self, key: str) -> tuple[np.ndarray, np.ndarray]:
        t = np.concatenate([leg.iteration_times for leg in self.legs])
        v = np.concatenate([leg.errors[key] for leg in self.legs])
        return t, v


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _is_lorenz(model) -> bool:
    return isinstance(model, LorenzParams)


def _resolve_grid(model, initial, grid):
    if _is_lorenz(model):
        return None
    if isinstance(model, NseModel):
        return grid or model.grid
    if isinstance(initial, _SpectralField):
        if grid is not None and grid != initial.grid:
            raise ValueError("initial state lives on a different grid")
        return initial.grid
    if grid is None:
        raise ValueError("a grid is needed for raw coefficient arrays")
    return grid


def _coeffs(state) -> np.ndarray:
    if isinstance(state, _SpectralField):
        return np.array(state.coeffs)
    return np.array(state, dtype=complex)


def _check_record_every(time_grid: TimeGrid, r: int) -> None:
    if time_grid.n_steps % r:
        raise ValueError(f"record_every={r} does not divide the {time_grid.n_steps} steps of a leg")


def lattice_projector(grid: Grid, divisor: int):
    """Post-step map zeroing every mode whose index is not a multiple of ``divisor``."""
    if grid.ndim == 1:
        keep = grid.index % divisor == 0
    else:
        keep = (grid.index_x % divisor == 0) & (grid.index_y % divisor == 0)
    return lambda c: c * keep


# ---------------------------------------------------------------------------
# reference generation
# ---------------------------------------------------------------------------

def generate_reference(model, u0, time_grid: TimeGrid, mask: ObservationMask, *, grid: Grid | None = None,
                       scheme: str = "ifrk4", record_every: int = 1,
                       period_divisor: int | None = None) -> tuple[Reference, ObservationRecord]:
    """Integrate the un-nudged system and record masked observations at every step.

    ``period_divisor = k`` re-imposes ``L/k``-periodicity after every step
    (off-lattice modes are reset to zero), so the reference stays on the
    invariant subspace exactly instead of to roundoff.
    """
    _check_record_every(time_grid, record_every)
    S = time_grid.n_steps
    times = time_grid.times
    if _is_lorenz(model):
        if mask.is_spectral:
            raise ValueError("Lorenz observations need a component mask")
        u0 = np.asarray(u0, dtype=float)
        final, traj = lorenz_leg(u0, model, sign=1.0, mu=0.0, weights=np.zeros((S, 3)),
                                 obs=np.zeros((S, 3)), dt=time_grid.dt, n_steps=S)
        full = np.vstack([traj, final])
        weights = mask.component_weights(times, time_grid.t_end - time_grid.t0)
        record = ObservationRecord(times, full * weights, mask, weights=weights)
        ref = Reference(times[::record_every], full[::record_every], record_every)
        return ref, record

    if not mask.is_spectral:
        raise ValueError("spectral models need a spectral observation mask")
    grid = _resolve_grid(model, u0, grid)
    c = _coeffs(u0)
    if c.shape != grid.spectral_shape:
        raise ValueError("initial state does not match the grid")
    post = lattice_projector(grid, period_divisor) if period_divisor else None
    if post is not None:
        c = post(c)
    stepper = make_stepper(scheme, forward_dynamics(model, grid), time_grid.dt)
    slots = mask.slots(grid)
    obs = np.empty((S + 1, slots.size), dtype=complex)
    stored = np.empty((S // record_every + 1,) + c.shape, dtype=complex)
    for j in range(S + 1):
        obs[j] = c.reshape(-1)[slots]
        if j % record_every == 0:
            stored[j // record_every] = c
        if j == S:
            break
        c = stepper.advance(c)
        if post is not None:
            c = post(c)
        if j % 64 == 63 and not np.isfinite(c).all():
            raise NonFiniteState(j + 1)
    if not np.isfinite(c).all():
        raise NonFiniteState(S)
    record = ObservationRecord(times, obs, mask, slots=slots)
    return Reference(times[::record_every], stored, record_every, grid), record


# ---------------------------------------------------------------------------
# single legs
# ---------------------------------------------------------------------------

def integrate_leg(initial, model, direction: str, variant: BackwardVariant, observations: ObservationRecord,
                  mu: float, time_grid: TimeGrid, *, grid: Grid | None = None, scheme: str = "ifrk4",
                  record_every: int = 1):
    """March one forward leg (``direction='forward'``) or one backward leg in ``tau = T - t``.

    ``initial`` is the state at ``t = 0`` (forward) or ``t = T`` (backward).
    Returns ``(final_state, samples)`` with samples in marching order.
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    S = time_grid.n_steps
    if observations.n_steps != S:
        raise ValueError("observations do not match the time grid")
    rec = observations if direction == "forward" else observations.reversed()
    if _is_lorenz(model):
        if direction == "backward" and variant.tag != "standard":
            raise ValueError("the Lorenz system only supports the standard backward leg")
        sign = 1.0 if direction == "forward" else -1.0
        return lorenz_leg(np.asarray(initial, dtype=float), model, sign=sign, mu=mu,
                          weights=rec.weights[:S], obs=rec.values[:S], dt=time_grid.dt,
                          n_steps=S, record_every=record_every)
    grid = _resolve_grid(model, initial, grid)
    if direction == "forward":
        dyn = forward_dynamics(model, grid)
    else:
        dyn = backward_dynamics(model, variant, grid, observations.mask.mode_cutoff)
    final, samples = spectral_leg(_coeffs(initial), dyn, scheme=scheme, dt=time_grid.dt, n_steps=S,
                                  mu=mu, slots=rec.slots, obs=rec.values, record_every=record_every)
    if isinstance(initial, _SpectralField):
        final = initial.replace(final)
    return final, samples


# ---------------------------------------------------------------------------
# the BFN iteration
# ---------------------------------------------------------------------------

def run_bfn(model, config: BfnConfig, observations: ObservationRecord, time_grid: TimeGrid,
            reference: Reference | None = None, *, grid: Grid | None = None) -> IterationHistory:
    """Alternate forward and backward legs for ``config.n_iterations`` cycles.

    The observations are the only channel through which the reference
    influences the iterates; ``reference`` is used for error bookkeeping only.
    A non-finite state truncates the history and sets ``history.blowup``; a leg
    whose error grows by ``GROWTH_BLOWUP_THRESHOLD`` over its roundoff floor
    sets the flag too but the iteration continues.
    """
    S = time_grid.n_steps
    r = config.record_every
    _check_record_every(time_grid, r)
    if observations.n_steps != S:
        raise ValueError("observations do not cover the time grid")
    if reference is not None and reference.record_every != r:
        raise ValueError("reference must be stored with the same decimation as the iteration")
    lorenz = _is_lorenz(model)
    if grid is None and reference is not None:
        grid = reference.grid
    grid = None if lorenz else _resolve_grid(model, config.initial_guess, grid)
    vort = isinstance(model, NseModel)

    if config.initial_guess is None:
        state = np.zeros(3) if lorenz else np.zeros(grid.spectral_shape, dtype=complex)
    else:
        state = np.array(config.initial_guess, dtype=float) if lorenz else _coeffs(config.initial_guess)
        if not lorenz and state.shape != grid.spectral_shape:
            raise ValueError("initial guess does not match the grid")

    if lorenz:
        keys = ("total_euclid", "observed_euclid", "unobserved_euclid")
        sample_weights = observations.weights[::r]

        def errors(ref_states, est, weights):
            return diagnostics.euclidean_error_series(ref_states, est, weights)
    else:
        keys = tuple(f"{p}_{n}" for n in ("l2", "h1") for p in ("total", "observed", "unobserved"))
        observed = observations.mask.observed(grid)

        def errors(ref_states, est, _weights):
            return diagnostics.spectral_error_series(grid, ref_states, est, observed, vort)

    if lorenz:
        fwd_dyn = bwd_dyn = None
    else:
        fwd_dyn = forward_dynamics(model, grid)
        bwd_dyn = backward_dynamics(model, config.variant, grid, observations.mask.mode_cutoff)
        if config.scheme not in ("ifrk4", "if_euler"):
            raise ValueError(f"unknown time scheme {config.scheme!r}")
    if lorenz and config.variant.tag != "standard":
        raise ValueError("the Lorenz system only supports the standard backward leg")
    rev = observations.reversed()
    n_local = S // r
    local = np.arange(n_local) / n_local

    def boundary_error(st):
        if reference is None:
            return {}
        if lorenz:
            e = errors(reference.initial[None], st[None], observations.weights[:1])
        else:
            e = errors(reference.initial[None], st[None], None)
        return {k: float(v[0]) for k, v in e.items()}

    primary = keys[0]
    floors = {}
    if reference is not None:
        for end, st in (("initial", reference.initial), ("final", reference.final)):
            zero = np.zeros_like(st)
            w = observations.weights[:1] if lorenz else None
            floors[end] = np.finfo(float).eps * float(errors(st[None], zero[None], w)[primary][0])

    def growth(errs, forward):
        """Peak total error over a leg relative to ``max(start error, eps * |reference|)``."""
        if reference is None or not len(errs[primary]):
            return None
        v = errs[primary]
        finite = v[np.isfinite(v)]
        if not finite.size:
            return float("inf")
        base = max(float(v[0]), floors["initial" if forward else "final"])
        return float(finite.max()) / base if base > 0 else 0.0

    def leg_errors(samples, forward):
        if reference is None:
            return {}
        m = len(samples)
        if forward:
            ref = reference.states[:m]
            w = sample_weights[:m] if lorenz else None
        else:
            ref = reference.states[::-1][:m]
            w = sample_weights[::-1][:m] if lorenz else None
        return errors(ref, samples, w)

    def march(st, forward):
        o = observations if forward else rev
        mu = config.mu if forward else config.mu_tilde
        if lorenz:
            return lorenz_leg(st, model, sign=1.0 if forward else -1.0, mu=mu, weights=o.weights[:S],
                              obs=o.values[:S], dt=time_grid.dt, n_steps=S, record_every=r)
        return spectral_leg(st, fwd_dyn if forward else bwd_dyn, scheme=config.scheme, dt=time_grid.dt,
                            n_steps=S, mu=mu, slots=o.slots, obs=o.values, record_every=r)

    history = IterationHistory([], [state.copy()], [boundary_error(state)],
                               keys if reference is not None else (), grid=grid)
    for n in range(1, config.n_iterations + 1):
        for forward in (True, False):
            leg_index = 2 * (n - 1) + (0 if forward else 1)
            direction = "forward" if forward else "backward"
            start = state
            try:
                state, samples = march(start, forward)
            except NonFiniteState as exc:
                samples = exc.samples if exc.samples is not None else np.empty((0,) + start.shape)
                errs = leg_errors(samples, forward)
                history.legs.append(LegRecord(leg_index, n, direction, leg_index + local[:len(samples)],
                                              errs, start.copy(), None,
                                              samples if config.keep_samples else None, growth(errs, forward)))
                finite_max = {k: float(np.nanmax(np.where(np.isfinite(v), v, np.nan)))
                              if len(v) and np.isfinite(v).any() else float("nan") for k, v in errs.items()}
                history.blowup = {"kind": "non_finite", "leg": leg_index, "cycle": n, "direction": direction,
                                  "step": exc.step, "max_finite_error": finite_max}
                return _finish(history, grid)
            errs = leg_errors(samples, forward)
            history.legs.append(LegRecord(leg_index, n, direction, leg_index + local, errs, start.copy(),
                                          state.copy(), samples if config.keep_samples else None,
                                          growth(errs, forward)))
            g = history.legs[-1].growth
            if history.blowup is None and g is not None and g >= GROWTH_BLOWUP_THRESHOLD:
                history.blowup = {"kind": "growth", "leg": leg_index, "cycle": n, "direction": direction,
                                  "growth": g, "max_error": {k: float(np.max(v)) for k, v in errs.items()}}
        history.boundary_states.append(state.copy())
        history.boundary_errors.append(boundary_error(state))
    return _finish(history, grid)


def _finish(history: IterationHistory, grid) -> IterationHistory:
    if grid is not None:
        cls = SpectralField1D if grid.ndim == 1 else SpectralField2D
        history.spectrum = energy_spectrum(cls(grid, history.recovered))
    return history


# ---------------------------------------------------------------------------
# synchronization (direct insertion) for the Lorenz system
# ---------------------------------------------------------------------------

def _sync_inputs(observations: ObservationRecord, p: LorenzParams, time_grid: TimeGrid):
    if observations.weights is None:
        raise ValueError("synchronization needs component observations")
    if not np.all(observations.weights[:, :2] == 1.0):
        raise ValueError("synchronization needs u1 and u2 observed over the whole window")
    if observations.n_steps != time_grid.n_steps:
        raise ValueError("observations do not match the time grid")
    u1, u2 = observations.values[:, 0], observations.values[:, 1]
    return u1 * u2 - p.b * (p.rho + p.sigma)


def run_synchronization(observations: ObservationRecord, p: LorenzParams, w0: float,
                        time_grid: TimeGrid) -> np.ndarray:
    """Direct insertion: ``w1 = u1``, ``w2 = u2`` and ``w3' = -b w3 + w1 w2 - b(rho + sigma)``.

    ``w3`` uses the trapezoidal rule, which only needs lattice observations and
    is exactly time-symmetric.  Returns the ``(S + 1, 3)`` trajectory.
    """
    g = _sync_inputs(observations, p, time_grid)
    h = 0.5 * time_grid.dt
    a, c = 1.0 - p.b * h, 1.0 + p.b * h
    w3 = np.empty(g.size)
    w3[0] = w0
    for j in range(g.size - 1):
        w3[j + 1] = (a * w3[j] + h * (g[j] + g[j + 1])) / c
    return np.column_stack([observations.values[:, 0], observations.values[:, 1], w3])


def reverse_synchronization(observations: ObservationRecord, p: LorenzParams, w3_end: float,
                            time_grid: TimeGrid) -> np.ndarray:
    """Backward direct insertion from ``w3(T) = w3_end``; rows are in physical time order."""
    g = _sync_inputs(observations, p, time_grid)
    h = 0.5 * time_grid.dt
    a, c = 1.0 - p.b * h, 1.0 + p.b * h
    w3 = np.empty(g.size)
    w3[-1] = w3_end
    for j in range(g.size - 1, 0, -1):
        w3[j - 1] = (c * w3[j] - h * (g[j] + g[j - 1])) / a
    return np.column_stack([observations.values[:, 0], observations.values[:, 1], w3])


# ---------------------------------------------------------------------------
# closed-form error recursion for the linear models
# ---------------------------------------------------------------------------

def heat_bfn_error_oracle(w0_hat, mu: float, mu_back: float, T: float, M: float, n: int, *,
                          index=None, dt: float | None = None) -> np.ndarray:
    """Per-mode error ``w^n(k, 0)`` of the ``n``-th cycle's initial state.

    Observed modes (``|k| <= M``) contract by ``exp(-(mu + mu_back) T)`` per
    completed cycle, unobserved modes are untouched; ``n = 1`` returns the
    input.  With ``dt`` the contraction is the one produced by explicit
    nudging on that lattice, ``((1 - mu dt)(1 - mu_back dt))^(T/dt)``.
    """
    if n < 1:
        raise ValueError("cycle index n starts at 1")
    w = np.asarray(w0_hat, dtype=complex)
    k = np.arange(w.shape[-1]) if index is None else np.asarray(index)
    if dt is None:
        factor = np.exp(-(mu + mu_back) * T)
    else:
        steps = round(T / dt)
        factor = ((1.0 - mu * dt) * (1.0 - mu_back * dt)) ** steps
    observed = np.abs(k) <= M
    return np.where(observed, w * factor ** (n - 1), w)
