"""Observation operators and recorded observation time series."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import Grid

__all__ = ["ObservationMask", "ObservationRecord", "window_weights"]


@dataclass(frozen=True)
class ObservationMask:
    """Either a spectral cutoff ``M`` (observe ``|k| <= M``) or per-component time windows.

    ``component_windows`` holds ``(i, gamma_obs)`` pairs with ``i`` in ``{1, 2, 3}``:
    component ``i`` is observed on ``[(i-1)/3 T, ((i-1) + gamma_obs)/3 T)``.
    ``full_components`` lists (1-based) components observed over the whole window.
    """

    mode_cutoff: int | None = None
    component_windows: tuple[tuple[int, float], ...] = ()
    full_components: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "component_windows",
                           tuple((int(i), float(g)) for i, g in self.component_windows))
        object.__setattr__(self, "full_components", tuple(int(i) for i in self.full_components))
        spectral = self.mode_cutoff is not None
        ode = bool(self.component_windows or self.full_components)
        if spectral == ode:
            raise ValueError("exactly one of mode_cutoff or component observations must be given")
        if spectral and self.mode_cutoff < 0:
            raise ValueError("mode_cutoff must be non-negative")
        seen = set()
        for i, g in self.component_windows:
            if i not in (1, 2, 3):
                raise ValueError(f"component index {i} not in 1..3")
            if not 0.0 <= g <= 1.0:
                raise ValueError(f"gamma_obs={g} outside [0, 1]")
            seen.add(i)
        for i in self.full_components:
            if i not in (1, 2, 3):
                raise ValueError(f"component index {i} not in 1..3")
            if i in seen:
                raise ValueError(f"component {i} given both a window and full observation")

    @classmethod
    def spectral(cls, m: int) -> "ObservationMask":
        return cls(mode_cutoff=m)

    @classmethod
    def windowed(cls, gamma_obs: float) -> "ObservationMask":
        return cls(component_windows=((1, gamma_obs), (2, gamma_obs), (3, gamma_obs)))

    @classmethod
    def components(cls, *indices: int) -> "ObservationMask":
        return cls(full_components=tuple(indices))

    @property
    def is_spectral(self) -> bool:
        return self.mode_cutoff is not None

    def observed(self, grid: Grid) -> np.ndarray:
        """Boolean array over the stored spectral modes."""
        return grid.low_mode_mask(self.mode_cutoff)

    def slots(self, grid: Grid) -> np.ndarray:
        """Flat indices of the observed coefficients."""
        return np.flatnonzero(self.observed(grid).reshape(-1))

    def component_weights(self, times: np.ndarray, t_end: float) -> np.ndarray:
        return window_weights(times, t_end, self.component_windows, self.full_components)


def window_weights(times, t_end: float, windows, full=()) -> np.ndarray:
    """Indicator values ``chi_i(t)`` for each time and component (shape ``(len(times), 3)``)."""
    times = np.asarray(times, dtype=float)
    w = np.zeros((times.size, 3))
    third = t_end / 3.0
    # tolerance so lattice points that sit on a window edge are classified consistently
    eps = 1e-9 * max(t_end, 1.0)
    for i, g in windows:
        lo = (i - 1) * third
        hi = ((i - 1) + g) * third
        w[:, i - 1] = (times >= lo - eps) & (times < hi - eps)
    for i in full:
        w[:, i - 1] = 1.0
    return w


@dataclass(frozen=True, eq=False)
class ObservationRecord:
    """Masked observations on the integration lattice.

    Spectral records store only the observed coefficients (``values[j]`` is
    ``P_M u(t_j)`` restricted to ``slots``).  Component records store
    ``chi(t_j) * u(t_j)`` together with the indicator ``weights``.
    """

    times: np.ndarray
    values: np.ndarray
    mask: ObservationMask
    slots: np.ndarray | None = None
    weights: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
            raise ValueError("observation times must be strictly increasing")
        if len(self.values) != times.size:
            raise ValueError("values are not aligned with times")
        for name in ("times", "values", "slots", "weights"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def reversed(self) -> "ObservationRecord":
        """Values and weights in tau-marching order (``tau_j = T - t_{S-j}``)."""
        return ObservationRecord(self.times[-1] - self.times[::-1], self.values[::-1], self.mask,
                                 self.slots, None if self.weights is None else self.weights[::-1],
                                 dict(self.extra))
