"""Turn an :class:`ExperimentConfig` into reference data, BFN runs and result files."""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_as_dict, format_config, parse_initial
from .diagnostics import Report, assemble_report
from .engine import (BfnConfig, IterationHistory, Reference, generate_reference, heat_bfn_error_oracle,
                     reverse_synchronization, run_bfn, run_synchronization)
from .integrators import IFEulerStepper, NonFiniteState, TimeGrid
from .models import (LorenzParams, NseModel, Pde1DModel, default_nse_forcing, kdv_forcing,
                     scale_forcing_to_grashof, taylor_green)
from .observation import ObservationMask, ObservationRecord
from .spectral import PeriodicGrid1D, PeriodicGrid2D, SpectralField1D, SpectralField2D

__all__ = [
    "ExperimentResult",
    "VariantResult",
    "build_grid",
    "build_model",
    "build_mask",
    "build_state",
    "run_experiment",
    "write_outputs",
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_BLOWUP",
]

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP = 0, 2, 3
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_grid(cfg: ExperimentConfig):
    kind = cfg.model.kind
    if kind == "lorenz":
        return None
    if kind == "nse":
        return PeriodicGrid2D(cfg.grid.n_points, cfg.grid.length)
    return PeriodicGrid1D(cfg.grid.n_points, cfg.grid.length)


def build_model(cfg: ExperimentConfig, grid=None):
    m = cfg.model
    if m.kind == "lorenz":
        return LorenzParams(m.sigma, m.rho, m.b)
    grid = grid if grid is not None else build_grid(cfg)
    if m.kind == "nse":
        forcing = default_nse_forcing(grid, m.forcing_shell_min, m.forcing_shell_max)
        return NseModel(m.nu, scale_forcing_to_grashof(forcing, m.nu, m.grashof), m.grashof)
    forcing = None
    if m.forcing_f0:
        forcing = kdv_forcing(m.forcing_f0, grid)
    return Pde1DModel(m.kind, nu=m.nu, a=m.a, gamma=m.gamma, forcing=forcing)


def build_mask(cfg: ExperimentConfig) -> ObservationMask:
    o = cfg.observation
    if o.mode_cutoff >= 0:
        return ObservationMask.spectral(o.mode_cutoff)
    if o.window_fraction != -1.0:
        return ObservationMask.windowed(o.window_fraction)
    return ObservationMask.components(*o.components)


def trig_poly_coeffs(grid: PeriodicGrid1D, degree: int, seed: int) -> np.ndarray:
    """Deterministic quasi-random trigonometric polynomial of the given degree."""
    c = np.zeros(grid.spectral_shape, dtype=complex)
    k = np.arange(0, degree + 1)
    re_part = ((k + 1) * GOLDEN + seed * math.sqrt(2.0)) % 1.0 - 0.5
    im_part = ((k + 1) * GOLDEN * math.sqrt(3.0) + seed * math.sqrt(5.0)) % 1.0 - 0.5
    c[: degree + 1] = re_part + 1j * im_part
    c[0] = c[0].real
    return c


def smooth_profile_coeffs(grid: PeriodicGrid1D, max_mode: int) -> np.ndarray:
    """Mean-free profile ``sum_k 0.5 exp(-k/8) cos(k x + phi_k)`` with golden-ratio phases."""
    c = np.zeros(grid.spectral_shape, dtype=complex)
    for k in range(1, max_mode + 1):
        c[k] = 0.5 * math.exp(-k / 8.0) * np.exp(2j * math.pi * ((k * GOLDEN) % 1.0))
    return c


@functools.lru_cache(maxsize=4)
def _spinup(n: int, length: float, nu: float, grashof: float, kmin: float, kmax: float,
            t_spin: float, dt: float) -> np.ndarray:
    grid = PeriodicGrid2D(n, length)
    forcing = scale_forcing_to_grashof(default_nse_forcing(grid, kmin, kmax), nu, grashof)
    model = NseModel(nu, forcing, grashof)
    stepper = IFEulerStepper(model.symbol(grid), model.nonlinear_operator(grid), dt)
    w = np.zeros(grid.spectral_shape, dtype=complex)
    for _ in range(int(round(t_spin / dt))):
        w = stepper.advance(w)
    if not np.isfinite(w).all():
        raise NonFiniteState(int(round(t_spin / dt)))
    w.setflags(write=False)
    return w


def build_state(text: str, cfg: ExperimentConfig, grid=None, exact=None):
    """Evaluate an initial-condition expression (see :func:`bfnlab.config.parse_initial`)."""
    name, args = parse_initial(text)
    m = cfg.model
    if name == "exact":
        if exact is None:
            raise ValueError("'exact' needs the reference initial state")
        return np.array(exact, copy=True)
    if m.kind == "lorenz":
        if name == "zero":
            return np.zeros(3)
        if name == "state":
            return np.array(args, dtype=float)
        a = args[0]
        return np.array([0.0, 0.0, a - (m.rho + m.sigma)])
    if name == "zero":
        return np.zeros(grid.spectral_shape, dtype=complex)
    if name == "spinup":
        r = cfg.reference
        return np.array(_spinup(grid.n_points, grid.length, m.nu, m.grashof, m.forcing_shell_min,
                                m.forcing_shell_max, r.spinup_time, r.spinup_dt))
    if name == "taylor_green":
        return np.array(taylor_green(grid, args[0]).coeffs)
    if name == "trig_poly":
        c = trig_poly_coeffs(grid, *args)
    elif name == "smooth":
        c = smooth_profile_coeffs(grid, *args)
    else:
        c = np.zeros(grid.spectral_shape, dtype=complex)
        for kind, k, amp in args:
            c = c + SpectralField1D.single_mode(grid, k, amp, kind).coeffs
    if m.kind.startswith("kdv"):
        c[0] = 0.0
    return c


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class VariantResult:
    variant: str
    history: IterationHistory | None
    report: Report | None
    metrics: dict = field(default_factory=dict)
    series: dict | None = None  # synchronization output


@dataclass(eq=False)
class ExperimentResult:
    config: ExperimentConfig
    grid: object
    reference: Reference
    record: ObservationRecord
    variants: list[VariantResult]
    metrics: dict = field(default_factory=dict)

    @property
    def blew_up(self) -> bool:
        return any(v.history is not None and v.history.flagged for v in self.variants)

    @property
    def exit_code(self) -> int:
        return EXIT_BLOWUP if self.blew_up else EXIT_OK


def _prepare(cfg: ExperimentConfig, initial_text: str, divisor: int):
    grid = build_grid(cfg)
    model = build_model(cfg, grid)
    mask = build_mask(cfg)
    tg = TimeGrid(cfg.time.t_end, cfg.time.dt)
    u0 = build_state(initial_text, cfg, grid)
    scheme = cfg.resolved_scheme
    ref, rec = generate_reference(model, u0, tg, mask, grid=grid,
                                  scheme="ifrk4" if scheme == "rk4" else scheme,
                                  record_every=cfg.output.record_every,
                                  period_divisor=divisor or None)
    return grid, model, mask, tg, ref, rec


def oracle_deviation(history: IterationHistory, reference: Reference, cfg: ExperimentConfig, grid) -> float:
    """Largest per-mode deviation from the closed-form linear recursion, relative to the initial error."""
    w0 = history.boundary_states[0] - reference.initial
    scale = np.max(np.abs(w0))
    if scale == 0:
        return 0.0
    worst = 0.0
    for n, state in enumerate(history.boundary_states):
        expected = heat_bfn_error_oracle(w0, cfg.bfn.mu, cfg.mu_back, cfg.time.t_end,
                                         cfg.observation.mode_cutoff, n + 1, index=grid.index, dt=cfg.time.dt)
        worst = max(worst, float(np.max(np.abs((state - reference.initial) - expected)) / scale))
    return worst


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    grid, model, mask, tg, ref, rec = _prepare(cfg, cfg.reference.initial, cfg.reference.period_divisor)
    result = ExperimentResult(cfg, grid, ref, rec, [])
    result.metrics["observations_identically_zero"] = bool(rec.is_zero())

    if cfg.bfn.method == "synchronization":
        guess = build_state(cfg.bfn.initial_guess, cfg, grid, exact=ref.initial)
        fwd = run_synchronization(rec, model, float(guess[2]), tg)
        back = reverse_synchronization(rec, model, float(fwd[-1, 2]), tg)
        full_ref = _full_reference(model, ref, tg)
        metrics = {
            "w3_initial": float(guess[2]),
            "w3_returned": float(back[0, 2]),
            "round_trip_error": abs(float(back[0, 2]) - float(guess[2])),
            "final_error": abs(float(fwd[-1, 2]) - float(full_ref[-1, 2])),
        }
        series = {"time": tg.times, "w3": fwd[:, 2], "u3": full_ref[:, 2],
                  "error": np.abs(fwd[:, 2] - full_ref[:, 2])}
        result.variants.append(VariantResult("synchronization", None, None, metrics, series))
        return result

    twin = None
    if cfg.reference.twin_initial:
        twin = _prepare(cfg, cfg.reference.twin_initial, cfg.reference.twin_period_divisor)
        result.metrics["twin_observations_identically_zero"] = bool(twin[5].is_zero())
        result.metrics["twin_records_identical"] = bool(
            np.array_equal(twin[5].values, rec.values) and np.array_equal(twin[5].slots, rec.slots))

    for variant in cfg.backward_variants():
        guess = build_state(cfg.bfn.initial_guess, cfg, grid, exact=ref.initial)
        bcfg = BfnConfig(mu=cfg.bfn.mu, mu_back=cfg.mu_back, n_iterations=cfg.bfn.iterations,
                         initial_guess=guess, variant=variant,
                         scheme=cfg.resolved_scheme if grid is not None else "ifrk4",
                         record_every=cfg.output.record_every, keep_samples=twin is not None)
        hist = run_bfn(model, bcfg, rec, tg, ref, grid=grid)
        vr = VariantResult(str(variant), hist, assemble_report(hist))
        if model.__class__ is Pde1DModel and model.kind in ("heat", "transport") and not hist.flagged:
            vr.metrics["oracle_max_relative_deviation"] = oracle_deviation(hist, ref, cfg, grid)
        if twin is not None:
            tgrid, tmodel, _, _, tref, trec = twin
            h2 = run_bfn(tmodel, bcfg, trec, tg, tref, grid=tgrid)
            same = (len(h2.legs) == len(hist.legs)
                    and all(np.array_equal(a.samples, b.samples) for a, b in zip(hist.legs, h2.legs))
                    and all(np.array_equal(a, b) for a, b in zip(hist.boundary_states, h2.boundary_states)))
            vr.metrics["twin_trajectories_identical"] = bool(same)
            for leg in hist.legs:
                leg.samples = None
        result.variants.append(vr)
    return result


def _full_reference(model, ref: Reference, tg: TimeGrid) -> np.ndarray:
    if ref.record_every == 1:
        return ref.states
    from .integrators import lorenz_leg
    S = tg.n_steps
    final, traj = lorenz_leg(ref.initial, model, sign=1.0, mu=0.0, weights=np.zeros((S, 3)),
                             obs=np.zeros((S, 3)), dt=tg.dt, n_steps=S)
    return np.vstack([traj, final])


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_table(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(v) for v in row) + "\n")


def _physical_rows(state, grid, cfg: ExperimentConfig):
    if grid is None:
        return ("component", "value"), [(i + 1, v) for i, v in enumerate(np.real(state))]
    values = grid.inverse(state)
    if grid.ndim == 1:
        return ("x", "value"), zip(grid.x, values)
    X, Y = grid.xy
    return ("x", "y", "value"), zip(X.ravel(), Y.ravel(), values.ravel())


def _slug(text: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in text).strip("_")


def write_outputs(result: ExperimentResult, out_dir: str | Path) -> dict:
    """Write tables and a manifest; returns the manifest dictionary."""
    cfg = result.config
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    multi = len(result.variants) > 1
    entries = []
    for vr in result.variants:
        target = out / _slug(vr.variant) if multi else out
        target.mkdir(parents=True, exist_ok=True)
        files = []
        if vr.series is not None:
            keys = list(vr.series)
            _write_table(target / "errors.tsv", keys, zip(*(vr.series[k] for k in keys)))
            files.append("errors.tsv")
        if vr.report is not None:
            rep = vr.report
            _write_table(target / "errors.tsv", rep.columns, rep.rows)
            _write_table(target / "summary.tsv", rep.summary_columns, rep.summary)
            files += ["errors.tsv", "summary.tsv"]
            if len(rep.spectrum):
                _write_table(target / "recovered_spectrum.tsv", ("shell", "energy"), rep.spectrum)
                files.append("recovered_spectrum.tsv")
            header, rows = _physical_rows(vr.history.recovered, result.grid, cfg)
            _write_table(target / "recovered_physical.tsv", header, rows)
            files.append("recovered_physical.tsv")
        entry = {
            "variant": vr.variant,
            "directory": str(target.relative_to(out)) if multi else ".",
            "files": files,
            "metrics": vr.metrics,
            "blowup": None if vr.history is None else vr.history.blowup,
            "cycles_completed": None if vr.history is None else vr.history.cycles_completed,
            "leg_growth": None if vr.history is None else [leg.growth for leg in vr.history.legs],
        }
        if vr.history is not None and vr.history.boundary_errors and vr.history.error_keys:
            entry["final_boundary_errors"] = vr.history.boundary_errors[-1]
        entries.append(entry)
    manifest = {
        "name": cfg.name,
        "description": cfg.description,
        "figure": cfg.figure,
        "desk_scale_substitutions": list(cfg.substitutions),
        "code_version": __version__,
        "numpy_version": np.__version__,
        "time_scheme": cfg.resolved_scheme,
        "n_steps_per_leg": cfg.n_steps,
        "config": config_as_dict(cfg),
        "config_text": format_config(cfg),
        "metrics": result.metrics,
        "variants": entries,
        "status": "blowup" if result.blew_up else "ok",
        "exit_code": result.exit_code,
    }
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
