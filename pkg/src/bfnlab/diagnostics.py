"""Error functionals, observed/unobserved decompositions and report assembly.

Spectral errors are split with the projection ``P_M`` onto observed modes and
its complement ``Q_M``; the two parts are orthogonal, so
``total**2 = observed**2 + unobserved**2``.  For the vorticity model the
``L2`` kind is the velocity (energy-level) norm and ``H1Semi`` is the
vorticity (enstrophy-level) norm, both computed from vorticity coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .observation import ObservationMask
from .spectral import Grid, _SpectralField, h1_seminorm_coeffs, l2_norm_coeffs

__all__ = [
    "ErrorSample",
    "error_decomposition",
    "spectral_error_series",
    "euclidean_error_series",
    "Report",
    "assemble_report",
]

NormKind = Literal["L2", "H1Semi", "Euclidean"]


@dataclass(frozen=True)
class ErrorSample:
    iteration_time: float
    total: float
    observed_part: float
    unobserved_part: float
    norm_kind: NormKind


def _norm(grid: Grid, coeffs: np.ndarray, kind: str, vorticity: bool) -> np.ndarray:
    if kind == "L2":
        if vorticity:
            coeffs = coeffs * np.sqrt(grid.inv_kappa_sq)
        return l2_norm_coeffs(grid, coeffs)
    if kind == "H1Semi":
        if vorticity:
            return l2_norm_coeffs(grid, coeffs)
        return h1_seminorm_coeffs(grid, coeffs)
    raise ValueError(f"norm kind {kind!r} does not apply to spectral fields")


def error_decomposition(u_state, v_state, mask, norm_kind: NormKind = "L2", *,
                        iteration_time: float = 0.0, vorticity: bool = False) -> ErrorSample:
    """Split ``u - v`` into observed and unobserved parts.

    ``mask`` is an :class:`ObservationMask` with a spectral cutoff for fields,
    or for 3-component states either an :class:`ObservationMask` listing fully
    observed components or a length-3 weight vector.
    """
    if isinstance(u_state, _SpectralField):
        if not isinstance(v_state, _SpectralField) or u_state.grid != v_state.grid:
            raise ValueError("states live on different grids")
        if not isinstance(mask, ObservationMask) or not mask.is_spectral:
            raise ValueError("spectral fields need a spectral observation mask")
        grid = u_state.grid
        diff = u_state.coeffs - v_state.coeffs
        obs = mask.observed(grid)
        total = _norm(grid, diff, norm_kind, vorticity)
        observed = _norm(grid, diff * obs, norm_kind, vorticity)
        unobserved = _norm(grid, diff * ~obs, norm_kind, vorticity)
        return ErrorSample(iteration_time, float(total), float(observed), float(unobserved), norm_kind)
    u = np.asarray(u_state, dtype=float)
    v = np.asarray(v_state, dtype=float)
    if u.shape != v.shape:
        raise ValueError("states have different shapes")
    if norm_kind != "Euclidean":
        raise ValueError("vector states only support the Euclidean norm")
    if isinstance(mask, ObservationMask):
        if mask.is_spectral:
            raise ValueError("vector states need a component mask")
        w = np.zeros(u.size)
        w[[i - 1 for i in mask.full_components]] = 1.0
    else:
        w = np.asarray(mask, dtype=float) != 0
    d = u - v
    return ErrorSample(iteration_time, float(np.linalg.norm(d)), float(np.linalg.norm(d * w)),
                       float(np.linalg.norm(d * ~np.asarray(w, bool))), "Euclidean")


def spectral_error_series(grid: Grid, reference: np.ndarray, estimate: np.ndarray, observed: np.ndarray,
                          vorticity: bool = False) -> dict[str, np.ndarray]:
    """Batched errors for stacked coefficient arrays (leading axis is time)."""
    diff = reference - estimate
    out = {}
    for kind, tag in (("L2", "l2"), ("H1Semi", "h1")):
        out[f"total_{tag}"] = _norm(grid, diff, kind, vorticity)
        out[f"observed_{tag}"] = _norm(grid, diff * observed, kind, vorticity)
        out[f"unobserved_{tag}"] = _norm(grid, diff * ~observed, kind, vorticity)
    return out


def euclidean_error_series(reference: np.ndarray, estimate: np.ndarray, weights: np.ndarray) -> dict[str, np.ndarray]:
    """Euclidean error of 3-vectors; ``weights`` marks the components observed at each sample."""
    d = reference - estimate
    obs = np.asarray(weights) != 0
    return {
        "total_euclid": np.linalg.norm(d, axis=-1),
        "observed_euclid": np.linalg.norm(d * obs, axis=-1),
        "unobserved_euclid": np.linalg.norm(d * ~obs, axis=-1),
    }


@dataclass(frozen=True, eq=False)
class Report:
    columns: tuple[str, ...]
    rows: np.ndarray
    summary_columns: tuple[str, ...]
    summary: np.ndarray
    spectrum: np.ndarray  # (shell, energy) pairs of the recovered initial state
    blowup: dict | None = None

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def summary_column(self, name: str) -> np.ndarray:
        return self.summary[:, self.summary_columns.index(name)]


def assemble_report(history) -> Report:
    """Flatten an iteration history into an error table on the iteration-time axis.

    Leg ``l`` (forward legs even, backward legs odd) occupies ``[l, l + 1)``;
    backward legs are laid out in marching order, i.e. reversed physical time.
    """
    keys = tuple(history.error_keys)
    rows = []
    for leg in history.legs:
        n = len(leg.iteration_times)
        block = np.empty((n, 3 + len(keys)))
        block[:, 0] = leg.iteration_times
        block[:, 1] = leg.index
        block[:, 2] = 0.0 if leg.direction == "forward" else 1.0
        for j, k in enumerate(keys):
            block[:, 3 + j] = leg.errors[k]
        rows.append(block)
    table = np.concatenate(rows) if rows else np.empty((0, 3 + len(keys)))
    columns = ("iteration_time", "leg", "backward") + keys

    summary_columns = ("cycle",) + keys
    summary = np.empty((len(history.boundary_errors), 1 + len(keys)))
    for n, errs in enumerate(history.boundary_errors):
        summary[n, 0] = n
        for j, k in enumerate(keys):
            summary[n, 1 + j] = errs[k]

    spectrum = np.empty((0, 2))
    if history.spectrum is not None:
        shells, energy = history.spectrum
        spectrum = np.column_stack([shells, energy])
    return Report(columns, table, summary_columns, summary, spectrum, history.blowup)
