"""End-to-end acceptance checks at the stated tolerances and runtime budgets.

Each test prints one ``PASS`` or ``FAIL`` line (visible with ``pytest -s`` or
in the terminal summary) before asserting.
"""

import time

import numpy as np
import pytest

from bfnlab.config import parse_config
from bfnlab.experiment import build_grid, build_state, run_experiment
from bfnlab.integrators import IFEulerStepper, IFRK4Stepper
from bfnlab.models import NseModel, Pde1DModel, taylor_green
from bfnlab.scenarios import scenario_text
from bfnlab.spectral import PeriodicGrid1D, PeriodicGrid2D, SpectralField1D, l2_norm_coeffs

pytestmark = pytest.mark.acceptance

LINES: list[str] = []


def report(number: int, title: str, ok: bool, detail: str, elapsed: float, budget: float) -> None:
    within = elapsed < budget
    line = f"{'PASS' if ok and within else 'FAIL'} criterion {number:2d} {title}: {detail} [{elapsed:.1f} s / {budget:.0f} s]"
    LINES.append(line)
    print(line)
    assert ok, line
    assert within, line


def scenario(name: str, *overrides: str):
    return parse_config(scenario_text(name), list(overrides))


def test_01_linear_oracle_equivalence():
    t0 = time.perf_counter()
    devs = {}
    for name in ("heat-oracle", "transport-oracle"):
        for mu in (10.0, 100.0):
            result = run_experiment(scenario(name, f"bfn.mu={mu}"))
            devs[(name, mu)] = result.variants[0].metrics["oracle_max_relative_deviation"]
    worst = max(devs.values())
    report(1, "linear oracle equivalence", worst <= 1e-8, f"max relative deviation {worst:.2e}",
           time.perf_counter() - t0, 5)


def test_02_unobserved_error_floor():
    t0 = time.perf_counter()
    worst = 0.0
    for name in ("heat-oracle", "transport-oracle"):
        for mu in (10.0, 100.0):
            cfg = scenario(name, f"bfn.mu={mu}")
            result = run_experiment(cfg)
            grid = result.grid
            v0 = build_state(cfg.bfn.initial_guess, cfg, grid)
            floor = l2_norm_coeffs(grid, (v0 - result.reference.initial) * ~grid.low_mode_mask(8))
            hist = result.variants[0].history
            worst = max(worst, abs(hist.boundary_series("total_l2")[-1] / floor - 1),
                        float(np.max(np.abs(hist.boundary_series("unobserved_l2") / floor - 1))))
    report(2, "unobserved-error floor", worst <= 1e-8, f"max relative gap to |Q_M(v0 - u0)| {worst:.2e}",
           time.perf_counter() - t0, 5)


def test_03_lorenz_pathological_invariance():
    t0 = time.perf_counter()
    worst = 0.0
    for phi in (1.0, 1e-5, 1e-10):
        series = []
        for mu in (1.0, 1000.0):
            result = run_experiment(scenario("lorenz-pathological", f"bfn.mu={mu}",
                                             f"bfn.initial_guess=state(0, 0, {phi!r})"))
            e = result.variants[0].history.boundary_series("total_euclid")
            assert len(e) == 6
            worst = max(worst, float(np.max(np.abs(e - abs(phi)))))
            series.append(e)
        worst = max(worst, float(np.max(np.abs(series[0] - series[1]))))
    report(3, "Lorenz pathological invariance", worst <= 1e-9, f"max |error - phi| or mu spread {worst:.2e}",
           time.perf_counter() - t0, 30)


def test_04_lorenz_generic_recovery():
    t0 = time.perf_counter()
    e = run_experiment(scenario("lorenz-full-obs")).variants[0].history.boundary_series("total_euclid")
    below = np.flatnonzero(e < 1e-6)
    ok = below.size > 0 and bool(np.all(np.diff(e[: below[0] + 1]) < 0))
    hit = f"cycle {below[0]}" if below.size else "never"
    report(4, "Lorenz generic recovery", ok, f"below 1e-6 at {hit}, error {e[-1]:.2e} after 30 cycles",
           time.perf_counter() - t0, 180)


def test_05_lorenz_windowed_failure():
    t0 = time.perf_counter()
    ratios = []
    for gamma in (0.25, 0.5):
        e = run_experiment(scenario("lorenz-windowed-gamma", f"observation.window_fraction={gamma}")
                           ).variants[0].history.boundary_series("total_euclid")
        ratios.append(e[-1] / e[0])
    ok = min(ratios) > 0.1
    report(5, "Lorenz windowed failure", ok, "final/initial error " + ", ".join(f"{r:.3g}" for r in ratios),
           time.perf_counter() - t0, 180)


def test_06_burgers_full_observation_recovery():
    t0 = time.perf_counter()
    finals = []
    for nu in (0.0, 1e-3):
        hist = run_experiment(scenario("burgers-full-obs", f"model.nu={nu}")).variants[0].history
        finals.append(hist.boundary_series("total_l2")[-1])
    report(6, "Burgers full-observation recovery", max(finals) <= 1e-8,
           "final L2 error " + ", ".join(f"{f:.2e}" for f in finals), time.perf_counter() - t0, 60)


def test_07_burgers_partial_stagnation():
    t0 = time.perf_counter()
    result = run_experiment(scenario("burgers-partial-M16"))
    hist, grid = result.variants[0].history, result.grid
    unobs = hist.boundary_series("unobserved_l2")
    drift = float(np.max(np.abs(unobs / unobs[0] - 1)))
    high = ~grid.low_mode_mask(16)
    energy = max(float(np.sum((grid.weights * grid.volume * np.abs(s) ** 2)[high])) for s in hist.boundary_states)
    ok = not hist.flagged and drift <= 0.01 and energy <= 1e-12
    report(7, "Burgers partial-observation stagnation", ok,
           f"unobserved drift {drift:.2e}, high-mode energy {energy:.2e}", time.perf_counter() - t0, 60)


def test_08_indistinguishable_twins():
    t0 = time.perf_counter()
    result = run_experiment(scenario("burgers-twins"))
    m = {**result.metrics, **result.variants[0].metrics}
    ok = (m["observations_identically_zero"] and m["twin_observations_identically_zero"]
          and m["twin_records_identical"] and m["twin_trajectories_identical"])
    report(8, "indistinguishable-twins blindness", ok,
           f"zero records {m['observations_identically_zero'] and m['twin_observations_identically_zero']}, "
           f"bitwise identical trajectories {m['twin_trajectories_identical']}", time.perf_counter() - t0, 60)


def test_09_kdv_standard_blowup():
    t0 = time.perf_counter()
    hist = run_experiment(scenario("kdv-viscous-standard", "bfn.iterations=1")).variants[0].history
    b = hist.blowup or {}
    first_backward = b.get("leg") == 1 and b.get("direction") == "backward"
    growth = hist.legs[1].growth if len(hist.legs) > 1 else None
    ok = first_backward and (b["kind"] == "non_finite" or b["growth"] >= 1e10)
    detail = f"{b.get('kind', 'no flag')} on leg {b.get('leg')}" + (f", growth {growth:.3g}" if growth else "")
    report(9, "KdV standard-backward blow-up", ok, detail, time.perf_counter() - t0, 300)


def test_10_kdv_stabilized_boundedness():
    t0 = time.perf_counter()
    finals, ok = [], True
    for name, variants in (("kdv-viscous-diffusive", "diffusive"), ("kdv-damped-comparison", "damped"),
                           ("kdv-viscous-voigt", "voigt(0.001)")):
        hist = run_experiment(scenario(name, f"bfn.variants={variants}")).variants[0].history
        non_finite = hist.blowup is not None and hist.blowup["kind"] == "non_finite"
        final = hist.boundary_series("observed_l2")[-1]
        ok = ok and not non_finite and hist.cycles_completed == 5 and 1e-4 <= final <= 1e-1
        finals.append(f"{variants} {final:.2e}")
    report(10, "KdV stabilized boundedness", ok, "final observed error " + ", ".join(finals),
           time.perf_counter() - t0, 900)


def test_11_nse_variant_ordering():
    t0 = time.perf_counter()
    cfg = scenario("nse-variant-comparison",
                   "bfn.variants=standard | diffusive | voigt(0.001) | filtered_diffusive | filtered_voigt(0.001)")
    result = run_experiment(cfg)
    hist = {v.variant: v.history for v in result.variants}
    final = {k: (h.boundary_series("observed_l2")[-1], h.boundary_series("observed_h1")[-1]) for k, h in hist.items()}
    voigt, diffusive = final["voigt(0.001)"], final["diffusive"]
    a = not hist["standard"].flagged and not hist["voigt(0.001)"].flagged
    b = voigt[0] < diffusive[0] and voigt[1] < diffusive[1]
    c = final["filtered_diffusive"][0] < diffusive[0]
    d = all(not np.all(np.diff(h.boundary_series("unobserved_l2")) < 0) for h in hist.values())
    report(11, "NSE variant ordering", a and b and c and d,
           f"(a) {a} (b) {b} (c) {c} (d) {d}; observed L2 voigt {voigt[0]:.3e} diffusive {diffusive[0]:.3e} "
           f"filtered_diffusive {final['filtered_diffusive'][0]:.3e}", time.perf_counter() - t0, 1800)


def _slopes(errors, steps):
    return np.diff(np.log(errors)) / np.diff(np.log(steps))


def test_12_integrator_orders():
    t0 = time.perf_counter()
    grid = PeriodicGrid1D(512, 2.0)
    model = Pde1DModel("burgers", nu=1e-3)
    u0 = SpectralField1D.from_physical(grid, np.sin(np.pi * grid.x) + 0.5 * np.cos(2 * np.pi * grid.x))

    def burgers(dt, t_end=0.1):
        stepper, c = IFRK4Stepper(model.symbol(grid), model.nonlinear_operator(grid), dt), np.array(u0.coeffs)
        for _ in range(round(t_end / dt)):
            c = stepper.advance(c)
        return c

    dts = np.array([2e-3, 1e-3, 5e-4, 2.5e-4])
    fine = burgers(dts[-1] / 8)
    rk_slope = _slopes([l2_norm_coeffs(grid, burgers(d) - fine) for d in dts], dts).mean()

    g2, nu, amp = PeriodicGrid2D(32), 0.05, 0.3
    tg = taylor_green(g2)
    forced = NseModel(nu, tg * amp)
    lam = 2 * nu

    def tg_forced(dt, t_end=1.0):
        stepper, c = IFEulerStepper(forced.symbol(), forced.nonlinear_operator(), dt), np.array(tg.coeffs)
        for _ in range(round(t_end / dt)):
            c = stepper.advance(c)
        return c

    exact = tg.coeffs * (np.exp(-lam) + amp / lam * (1 - np.exp(-lam)))
    dts2 = np.array([0.1, 0.05, 0.025, 0.0125])
    euler_slope = _slopes([l2_norm_coeffs(g2, tg_forced(d) - exact) for d in dts2], dts2).mean()

    free = NseModel(1e-2, tg * 0.0)
    stepper, c = IFEulerStepper(free.symbol(), free.nonlinear_operator(), 1e-3), np.array(tg.coeffs)
    for _ in range(1000):
        c = stepper.advance(c)
    decay = float(np.abs(c - tg.coeffs * np.exp(-2e-2)).max())

    ok = abs(rk_slope - 4.0) <= 0.2 and abs(euler_slope - 1.0) <= 0.1 and decay <= 1e-6
    report(12, "integrator orders", ok,
           f"IFRK4 slope {rk_slope:.3f}, IF-Euler slope {euler_slope:.3f}, Taylor-Green deviation {decay:.1e}",
           time.perf_counter() - t0, 120)


def test_13_synchronization_self_inverse():
    t0 = time.perf_counter()
    m = run_experiment(scenario("lorenz-synchronization")).variants[0].metrics
    report(13, "synchronization self-inverse", m["round_trip_error"] <= 1e-10,
           f"|w3 returned - w3(0)| {m['round_trip_error']:.2e}", time.perf_counter() - t0, 30)
