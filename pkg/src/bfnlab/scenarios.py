"""Named experiments, one per figure family, at desk scale."""

from __future__ import annotations

from .config import ExperimentConfig, parse_config

__all__ = ["SCENARIOS", "list_scenarios", "get_scenario", "scenario_text"]


def _lorenz(name, figure, description, *, obs, mu, iterations, initial, guess, sigma=10.0, rho=28.0, b=None,
            substitutions="", method="bfn"):
    b_line = f"b = {b}\n" if b is not None else ""
    return f"""
[experiment]
name = {name}
figure = {figure}
description = {description}
substitutions = {substitutions}

[model]
kind = lorenz
sigma = {sigma}
rho = {rho}
{b_line}
[time]
t_end = 1.0
dt = 1e-5

[observation]
{obs}

[bfn]
method = {method}
mu = {mu}
iterations = {iterations}
initial_guess = {guess}

[reference]
initial = {initial}

[output]
record_every = 1000
"""


def _oned(name, figure, description, *, kind, nu=0.0, a=0.0, n=512, length=2.0, t_end, dt, m, mu,
          iterations, initial, guess="zero", variants="standard", record_every=1, substitutions="",
          extra_reference="", extra_model=""):
    return f"""
[experiment]
name = {name}
figure = {figure}
description = {description}
substitutions = {substitutions}

[model]
kind = {kind}
nu = {nu}
a = {a}
{extra_model}
[grid]
n_points = {n}
length = {length}

[time]
t_end = {t_end}
dt = {dt}

[observation]
mode_cutoff = {m}

[bfn]
mu = {mu}
iterations = {iterations}
variants = {variants}
initial_guess = {guess}

[reference]
initial = {initial}
{extra_reference}
[output]
record_every = {record_every}
"""


def _kdv(name, kind, variants, figure, description):
    model = "gamma = 0.5\nforcing_f0 = 1.0\n" if kind == "kdv_damped" else "forcing_f0 = 1.0\n"
    return _oned(name, figure, description, kind=kind, nu=1e-3 if kind == "kdv_viscous" else 0.0,
                 length="6.283185307179586", t_end=1.0, dt=1e-5, m=15, mu=1000.0, iterations=5,
                 initial="smooth(32)", guess="exact", variants=variants, record_every=100,
                 extra_model=model,
                 substitutions="reference profile smooth(32) chosen here"
                               " | error samples stored every 100 steps")


def _nse(name, variants, figure, description, m=20):
    return f"""
[experiment]
name = {name}
figure = {figure}
description = {description}
substitutions = resolution 128^2 instead of 1024^2 | Grashof 5e4 instead of 1e6 | M = {m} instead of 50 | T = 0.05 instead of 0.1 | spin-up to t = 500 instead of 25000 | shell 4-6 forcing with fixed phases | mu = 100 chosen here

[model]
kind = nse
nu = 1e-4
grashof = 5e4

[grid]
n_points = 128

[time]
t_end = 0.05
dt = 1e-3

[observation]
mode_cutoff = {m}

[bfn]
mu = 100.0
iterations = 3
variants = {variants}

[reference]
initial = spinup
spinup_time = 500.0
spinup_dt = 0.05
"""


_LINEAR_SUBS = "nu = 0.1 on [0, 2 pi) chosen here | deterministic trigonometric polynomials of degree 20"
_PAIR = "u0 = cos(pi x) + 0.05 cos(30 pi x) on [0, 2)"

SCENARIOS: dict[str, str] = {
    "lorenz-pathological": _lorenz(
        "lorenz-pathological", "Lorenz invariant-solution figure",
        "Pathological reference (0, 0, (rho+sigma) exp(-bt) - (rho+sigma)); boundary error stays at phi",
        obs="components = 1, 2", mu=1000.0, iterations=5, initial="pathological(38.0)", guess="state(0, 0, 1)"),
    "lorenz-sigma": _lorenz(
        "lorenz-sigma", "Lorenz sigma-dependence figure", "Two-component BFN with sigma = 5",
        obs="components = 1, 2", mu=100.0, iterations=30, initial="state(20, 30, 40)",
        guess="state(30, 40, 50)", sigma=5.0, substitutions="single sigma value from the sweep"),
    "lorenz-rho": _lorenz(
        "lorenz-rho", "Lorenz rho-dependence figure", "Two-component BFN with rho = 50",
        obs="components = 1, 2", mu=100.0, iterations=30, initial="state(20, 30, 40)",
        guess="state(30, 40, 50)", rho=50.0, substitutions="single rho value from the sweep"),
    "lorenz-beta": _lorenz(
        "lorenz-beta", "Lorenz b-dependence figure", "Two-component BFN with b = 4",
        obs="components = 1, 2", mu=100.0, iterations=30, initial="state(20, 30, 40)",
        guess="state(30, 40, 50)", b=4.0, substitutions="single b value from the sweep"),
    "lorenz-full-obs": _lorenz(
        "lorenz-full-obs", "Lorenz recovery under full observation",
        "All three components observed over [0, T]", obs="components = 1, 2, 3", mu=100.0, iterations=30,
        initial="state(20, 30, 40)", guess="state(30, 40, 50)"),
    "lorenz-windowed-full": _lorenz(
        "lorenz-windowed-full", "Lorenz windowed figure, gamma_obs = 1",
        "Each component observed on its own third of [0, T]", obs="window_fraction = 1.0", mu=10000.0,
        iterations=10, initial="state(20, 30, 40)", guess="state(30, 40, 50)"),
    "lorenz-windowed-gamma": _lorenz(
        "lorenz-windowed-gamma", "Lorenz windowed-gaps figure",
        "Components observed on half of their thirds; recovery fails", obs="window_fraction = 0.5",
        mu=10000.0, iterations=10, initial="state(20, 30, 40)", guess="state(30, 40, 50)"),
    "lorenz-synchronization": _lorenz(
        "lorenz-synchronization", "Direct-insertion comparison",
        "Direct insertion of u1, u2 on the pathological solution, forward then backward",
        obs="components = 1, 2", mu=0.0, iterations=1, initial="pathological(38.0)",
        guess="state(0, 0, 1)", method="synchronization"),
    "heat-oracle": _oned(
        "heat-oracle", "Linear error recursion (heat)", "Heat BFN versus the closed-form per-mode recursion",
        kind="heat", nu=0.1, n=64, length="6.283185307179586", t_end=0.1, dt=1e-4, m=8, mu=10.0,
        iterations=5, initial="trig_poly(20, 1)", guess="trig_poly(20, 2)", substitutions=_LINEAR_SUBS),
    "transport-oracle": _oned(
        "transport-oracle", "Linear error recursion (transport)",
        "Viscous transport BFN versus the closed-form per-mode recursion",
        kind="transport", nu=0.1, a=1.0, n=64, length="6.283185307179586", t_end=0.1, dt=1e-4, m=8,
        mu=100.0, iterations=5, initial="trig_poly(20, 1)", guess="trig_poly(20, 2)",
        substitutions=_LINEAR_SUBS),
    "transport-zero-obs": _oned(
        "transport-zero-obs", "Zero-observation figures (transport)",
        "u0 = 0.05 cos(30 pi x): observed modes vanish and the estimate stays zero",
        kind="transport", a=1.0, t_end=0.1, dt=1e-4, m=16, mu=100.0, iterations=5,
        initial="modes(cos 30 0.05)", record_every=10, substitutions="T = 0.1, dt = 1e-4 chosen here"),
    "burgers-zero-obs": _oned(
        "burgers-zero-obs", "Zero-observation figures (Burgers)",
        "u0 = 0.05 cos(30 pi x): observed modes vanish and the estimate stays zero",
        kind="burgers", t_end=0.1, dt=1e-4, m=16, mu=100.0, iterations=5,
        initial="modes(cos 30 0.05)", record_every=10, extra_reference="period_divisor = 30\n",
        substitutions="T = 0.1, dt = 1e-4 chosen here | reference held on the L/30-periodic subspace"),
    "transport-full-obs": _oned(
        "transport-full-obs", "Full-observation figures (transport)",
        "u0 = cos(pi x) fully observed on a short window", kind="transport", a=1.0, t_end=1e-4, dt=1e-5,
        m=16, mu=100.0, iterations=1000, initial="modes(cos 1 1.0)", record_every=10,
        substitutions="dt = 1e-5 chosen here | 1000 cycles to reach 1e-8"),
    "burgers-full-obs": _oned(
        "burgers-full-obs", "Full-observation figures (Burgers)",
        "u0 = cos(pi x) fully observed on a short window", kind="burgers", t_end=1e-4, dt=1e-5, m=16,
        mu=100.0, iterations=1000, initial="modes(cos 1 1.0)", record_every=10,
        substitutions="dt = 1e-5 chosen here | 1000 cycles to reach 1e-8"),
    "transport-partial-M16": _oned(
        "transport-partial-M16", "Low-mode observation figures (transport)", _PAIR,
        kind="transport", a=1.0, t_end=0.1, dt=1e-4, m=16, mu=100.0, iterations=5,
        initial="modes(cos 1 1.0; cos 30 0.05)", record_every=10,
        substitutions="T = 0.1, dt = 1e-4 chosen here"),
    "burgers-partial-M16": _oned(
        "burgers-partial-M16", "Low-mode observation figures (Burgers)", _PAIR,
        kind="burgers", t_end=0.1, dt=1e-4, m=16, mu=100.0, iterations=5,
        initial="modes(cos 1 1.0; cos 30 0.05)", record_every=10,
        substitutions="T = 0.1, dt = 1e-4 chosen here"),
    "burgers-partial-M16-viscous": _oned(
        "burgers-partial-M16-viscous", "Low-mode observation figures (viscous Burgers)", _PAIR,
        kind="burgers", nu=1e-3, t_end=0.1, dt=1e-4, m=16, mu=100.0, iterations=5,
        initial="modes(cos 1 1.0; cos 30 0.05)", variants="truncated_diffusion(50)", record_every=10,
        substitutions="T = 0.1, dt = 1e-4 chosen here"),
    "burgers-twins": _oned(
        "burgers-twins", "Indistinguishable L/k-periodic solutions",
        "References on modes 17Z and 19Z give identical (zero) observations for M = 16",
        kind="burgers", t_end=0.1, dt=1e-4, m=16, mu=100.0, iterations=3,
        initial="modes(cos 17 0.05)", guess="modes(cos 1 0.5)", record_every=10,
        extra_reference="period_divisor = 17\ntwin_initial = modes(cos 19 0.05)\ntwin_period_divisor = 19\n",
        substitutions="T = 0.1, dt = 1e-4 chosen here | nonzero initial guess so the estimate is not trivially zero"),
    "kdv-damped-comparison": _kdv(
        "kdv-damped-comparison", "kdv_damped", "standard | damped | voigt(0.001)",
        "Damped KdV error figures", "Standard, damped and Voigt backward legs on the damped-driven KdV"),
    "kdv-viscous-standard": _kdv(
        "kdv-viscous-standard", "kdv_viscous", "standard", "Viscous KdV standard backward figure",
        "Standard backward leg on viscous KdV; anti-diffusion amplifies roundoff"),
    "kdv-viscous-diffusive": _kdv(
        "kdv-viscous-diffusive", "kdv_viscous", "diffusive", "Viscous KdV stabilized figure",
        "Diffusive backward leg on viscous KdV"),
    "kdv-viscous-voigt": _kdv(
        "kdv-viscous-voigt", "kdv_viscous", "voigt(0.001)", "Viscous KdV Voigt figure",
        "Voigt-regularized backward leg on viscous KdV"),
    "nse-variant-comparison": _nse(
        "nse-variant-comparison", "standard | diffusive | voigt(0.001)", "NSE variant error figures",
        "Standard, diffusive and Voigt backward legs for 2D Navier-Stokes"),
    "nse-filtered-comparison": _nse(
        "nse-filtered-comparison", "diffusive | filtered_diffusive | filtered_voigt(0.001)",
        "NSE filtered-variant figures", "Filtered regularization restricted to unobserved modes"),
}


def scenario_text(name: str) -> str:
    try:
        return SCENARIOS[name].lstrip()
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; try 'bfnlab list'") from None


def get_scenario(name: str) -> ExperimentConfig:
    return parse_config(scenario_text(name))


def list_scenarios() -> list[tuple[str, str, str, tuple[str, ...]]]:
    """``(name, figure, description, substitutions)`` for every registered scenario."""
    out = []
    for name in SCENARIOS:
        cfg = get_scenario(name)
        out.append((name, cfg.figure, cfg.description, cfg.substitutions))
    return out
