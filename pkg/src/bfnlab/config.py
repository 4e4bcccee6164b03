"""Experiment configuration: an INI-style text format with validation.

Example::

    [model]
    kind = heat
    nu = 0.1

    [grid]
    n_points = 64

    [time]
    t_end = 0.1
    dt = 1e-4

    [observation]
    mode_cutoff = 8

    [bfn]
    mu = 10
    iterations = 5

    [reference]
    initial = trig_poly(20, 1)

Unspecified keys take the defaults of the dataclasses below.  Every
violation found during parsing is collected and reported at once.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
import re
import typing
from dataclasses import dataclass, field, fields

from .variants import BackwardVariant

__all__ = [
    "ConfigError",
    "ModelSpec",
    "GridSpec",
    "TimeSpec",
    "ObservationSpec",
    "BfnSpec",
    "ReferenceSpec",
    "OutputSpec",
    "ExperimentConfig",
    "parse_config",
    "parse_initial",
    "format_config",
]

MODEL_KINDS = ("lorenz", "heat", "transport", "burgers", "kdv_damped", "kdv_viscous", "nse")
SCHEMES = ("rk4", "ifrk4", "if_euler")


class ConfigError(ValueError):
    """Raised with the full list of violations (``.errors``)."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "heat"
    nu: float = 0.0
    a: float = 0.0
    gamma: float = 0.0
    sigma: float = 10.0
    rho: float = 28.0
    b: float = 8.0 / 3.0
    forcing_f0: float = 0.0
    grashof: float = 0.0
    forcing_shell_min: float = 4.0
    forcing_shell_max: float = 6.0


@dataclass(frozen=True)
class GridSpec:
    n_points: int = 0
    length: float = 2 * math.pi


@dataclass(frozen=True)
class TimeSpec:
    t_end: float = 1.0
    dt: float = 1e-3
    scheme: str = ""


@dataclass(frozen=True)
class ObservationSpec:
    mode_cutoff: int = -1
    components: tuple[int, ...] = ()
    window_fraction: float = -1.0


@dataclass(frozen=True)
class BfnSpec:
    method: str = "bfn"
    mu: float = 0.0
    mu_back: float = -1.0
    iterations: int = 1
    variants: tuple[str, ...] = ("standard",)
    initial_guess: str = "zero"


@dataclass(frozen=True)
class ReferenceSpec:
    initial: str = "zero"
    period_divisor: int = 0
    twin_initial: str = ""
    twin_period_divisor: int = 0
    spinup_time: float = 0.0
    spinup_dt: float = 0.05


@dataclass(frozen=True)
class OutputSpec:
    record_every: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    description: str = ""
    figure: str = ""
    substitutions: tuple[str, ...] = ()
    model: ModelSpec = field(default_factory=ModelSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    time: TimeSpec = field(default_factory=TimeSpec)
    observation: ObservationSpec = field(default_factory=ObservationSpec)
    bfn: BfnSpec = field(default_factory=BfnSpec)
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    @property
    def is_lorenz(self) -> bool:
        return self.model.kind == "lorenz"

    @property
    def resolved_scheme(self) -> str:
        if self.time.scheme:
            return self.time.scheme
        return {"lorenz": "rk4", "nse": "if_euler"}.get(self.model.kind, "ifrk4")

    @property
    def mu_back(self) -> float:
        return self.bfn.mu if self.bfn.mu_back < 0 else self.bfn.mu_back

    @property
    def n_steps(self) -> int:
        return int(round(self.time.t_end / self.time.dt))

    def backward_variants(self) -> list[BackwardVariant]:
        return [BackwardVariant.parse(v) for v in self.bfn.variants]

    def replace(self, **sections) -> "ExperimentConfig":
        return dataclasses.replace(self, **sections)

    def with_override(self, key: str, value: str) -> "ExperimentConfig":
        """Apply ``section.key=value`` and re-validate."""
        return parse_config(format_config(self), overrides=[f"{key}={value}"])


_SECTIONS = {
    "model": ModelSpec,
    "grid": GridSpec,
    "time": TimeSpec,
    "observation": ObservationSpec,
    "bfn": BfnSpec,
    "reference": ReferenceSpec,
    "output": OutputSpec,
}
_META_KEYS = ("name", "description", "figure", "substitutions")


# ---------------------------------------------------------------------------
# initial-condition vocabulary
# ---------------------------------------------------------------------------

_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def parse_initial(text: str) -> tuple[str, list]:
    """Split an initial-condition expression into a name and arguments.

    Supported forms::

        zero | exact
        modes(cos 1 1.0; sin 30 0.05)      1D sum of A cos/sin(2 pi k x / L)
        trig_poly(K, seed)                 deterministic trigonometric polynomial of degree K
        smooth(K)                          decaying smooth profile used for KdV
        state(u1, u2, u3)                  Lorenz state
        pathological(a)                    (0, 0, a - (rho + sigma))
        spinup                             NSE state from a spin-up (see reference.spinup_*)
        taylor_green(A)
    """
    m = _CALL.match(text)
    if not m:
        raise ValueError(f"cannot parse initial condition {text!r}")
    name, body = m.group(1), (m.group(2) or "").strip()
    if name in ("zero", "exact", "spinup"):
        if body:
            raise ValueError(f"{name} takes no arguments")
        return name, []
    if name == "modes":
        terms = []
        for part in filter(None, (p.strip() for p in body.split(";"))):
            bits = part.split()
            if len(bits) != 3 or bits[0] not in ("cos", "sin"):
                raise ValueError(f"mode term {part!r} must look like 'cos 30 0.05'")
            terms.append((bits[0], int(bits[1]), float(bits[2])))
        if not terms:
            raise ValueError("modes() needs at least one term")
        return name, terms
    args = [a.strip() for a in body.split(",")] if body else []
    if name == "trig_poly":
        if len(args) != 2:
            raise ValueError("trig_poly needs (degree, seed)")
        return name, [int(args[0]), int(args[1])]
    if name == "smooth":
        if len(args) != 1:
            raise ValueError("smooth needs (max_mode)")
        return name, [int(args[0])]
    if name == "state":
        if len(args) != 3:
            raise ValueError("state needs three components")
        return name, [float(a) for a in args]
    if name in ("pathological", "taylor_green"):
        if len(args) != 1:
            raise ValueError(f"{name} needs one coefficient")
        return name, [float(args[0])]
    raise ValueError(f"unknown initial condition {name!r}")


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _convert(raw: str, target, where: str, errors: list[str]):
    raw = raw.strip()
    try:
        if target is int:
            return int(raw)
        if target is float:
            return float(raw)
        if target == tuple[int, ...]:
            return tuple(int(x) for x in re.split(r"[,\s]+", raw) if x)
        if target == tuple[str, ...]:
            return tuple(x.strip() for x in raw.split("|") if x.strip())
        return raw
    except ValueError:
        errors.append(f"{where}: cannot read {raw!r} as {getattr(target, '__name__', target)}")
        return None


_TYPES = {name: typing.get_type_hints(cls) for name, cls in _SECTIONS.items()}


def parse_config(text: str, overrides: list[str] | None = None) -> ExperimentConfig:
    """Parse and validate a configuration; raises :class:`ConfigError` listing every violation."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                   default_section="__defaults__")
    cp.optionxform = str
    errors: list[str] = []
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            errors.append(f"override {item!r} must look like section.key=value")
            continue
        key, value = item.split("=", 1)
        section, option = key.strip().split(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, option, value.strip())

    meta = {}
    values: dict[str, dict] = {name: {} for name in _SECTIONS}
    for section in cp.sections():
        if section == "experiment":
            for key, raw in cp.items(section):
                if key not in _META_KEYS:
                    errors.append(f"experiment.{key}: unknown key")
                elif key == "substitutions":
                    meta[key] = tuple(x.strip() for x in raw.split("|") if x.strip())
                else:
                    meta[key] = raw.strip()
            continue
        if section not in _SECTIONS:
            errors.append(f"[{section}]: unknown section")
            continue
        types = _TYPES[section]
        for key, raw in cp.items(section):
            if key not in types:
                errors.append(f"{section}.{key}: unknown key")
                continue
            val = _convert(raw, types[key], f"{section}.{key}", errors)
            if val is not None:
                values[section][key] = val
    if errors:
        raise ConfigError(errors)
    cfg = ExperimentConfig(**meta, **{name: cls(**values[name]) for name, cls in _SECTIONS.items()})
    problems = validate(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def validate(cfg: ExperimentConfig) -> list[str]:
    """Return every invariant violation (empty when the config is usable)."""
    e: list[str] = []
    m, g, t, o, b, r, out = cfg.model, cfg.grid, cfg.time, cfg.observation, cfg.bfn, cfg.reference, cfg.output
    if m.kind not in MODEL_KINDS:
        e.append(f"model.kind: {m.kind!r} not one of {MODEL_KINDS}")
    for key in ("nu", "a", "gamma", "forcing_f0", "grashof"):
        if getattr(m, key) < 0:
            e.append(f"model.{key}: must be non-negative")
    if m.kind == "lorenz":
        for key in ("sigma", "rho", "b"):
            if not getattr(m, key) > 0:
                e.append(f"model.{key}: must be positive")
    if m.kind in ("heat", "kdv_viscous", "nse") and not m.nu > 0:
        e.append(f"model.nu: {m.kind} needs nu > 0")
    if m.kind == "kdv_damped" and not m.gamma > 0:
        e.append("model.gamma: damped KdV needs gamma > 0")
    if m.kind == "nse" and not m.grashof > 0:
        e.append("model.grashof: NSE needs a positive Grashof number")
    if m.kind != "lorenz":
        if g.n_points < 4 or g.n_points % 2:
            e.append("grid.n_points: must be an even integer >= 4")
        if not g.length > 0:
            e.append("grid.length: must be positive")
        if m.kind.startswith("kdv") and abs(g.length - 2 * math.pi) > 1e-12:
            e.append("grid.length: KdV forcing needs a 2*pi periodic domain")
    if not t.dt > 0:
        e.append("time.dt: must be positive")
    elif not t.t_end > 0:
        e.append("time.t_end: must be positive")
    else:
        ratio = t.t_end / t.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            e.append("time.t_end: must be an integer multiple of time.dt")
        elif out.record_every < 1 or round(ratio) % out.record_every:
            e.append("output.record_every: must divide the number of steps per leg")
    if t.scheme and t.scheme not in SCHEMES:
        e.append(f"time.scheme: {t.scheme!r} not one of {SCHEMES}")
    if t.scheme == "rk4" and m.kind != "lorenz" or m.kind == "lorenz" and t.scheme not in ("", "rk4"):
        e.append("time.scheme: rk4 is the Lorenz scheme, spectral models use ifrk4 or if_euler")

    spectral = o.mode_cutoff >= 0
    ode = bool(o.components) or o.window_fraction != -1.0
    if m.kind == "lorenz":
        if spectral:
            e.append("observation.mode_cutoff: not applicable to the Lorenz system")
        if not ode:
            e.append("observation: Lorenz needs components or window_fraction")
        if o.window_fraction != -1.0 and not 0.0 <= o.window_fraction <= 1.0:
            e.append(f"observation.window_fraction: gamma_obs={o.window_fraction} outside [0, 1]")
        if any(c not in (1, 2, 3) for c in o.components):
            e.append("observation.components: indices must be in 1..3")
        if o.components and o.window_fraction != -1.0:
            e.append("observation: give either components or window_fraction, not both")
    else:
        if ode:
            e.append("observation: component observations only apply to the Lorenz system")
        if not spectral:
            e.append("observation.mode_cutoff: spectral models need a cutoff M >= 0")

    if b.method not in ("bfn", "synchronization"):
        e.append("bfn.method: must be 'bfn' or 'synchronization'")
    if b.method == "synchronization":
        if m.kind != "lorenz":
            e.append("bfn.method: synchronization is only defined for the Lorenz system")
        elif not {1, 2} <= set(o.components):
            e.append("observation.components: synchronization needs components 1 and 2")
    if b.mu < 0:
        e.append("bfn.mu: must be non-negative")
    if b.mu_back < 0 and b.mu_back != -1.0:
        e.append("bfn.mu_back: must be non-negative")
    if b.iterations < 1:
        e.append("bfn.iterations: must be positive")
    if not b.variants:
        e.append("bfn.variants: at least one variant is needed")
    for v in b.variants:
        try:
            var = BackwardVariant.parse(v)
        except ValueError as exc:
            e.append(f"bfn.variants: {exc}")
            continue
        if m.kind == "lorenz" and var.tag != "standard":
            e.append(f"bfn.variants: {v} is not available for the Lorenz system")
        if var.tag in ("diffusive", "filtered_diffusive") and not m.nu > 0:
            e.append(f"bfn.variants: {v} needs nu > 0")
        if var.tag == "damped" and m.kind != "kdv_damped":
            e.append(f"bfn.variants: {v} is only defined for kdv_damped")
        if var.tag == "truncated_diffusion" and (m.kind in ("lorenz", "nse") or not m.nu > 0):
            e.append(f"bfn.variants: {v} needs a viscous 1D model")

    for key in ("initial", "twin_initial"):
        text = getattr(r, key)
        if key == "twin_initial" and not text:
            continue
        _check_initial(text, cfg, f"reference.{key}", e, allow_exact=False)
    _check_initial(b.initial_guess, cfg, "bfn.initial_guess", e, allow_exact=True)
    if r.period_divisor < 0 or r.twin_period_divisor < 0:
        e.append("reference.period_divisor: must be non-negative")
    if r.twin_initial and m.kind == "lorenz":
        e.append("reference.twin_initial: twins are only supported for spectral models")
    if r.spinup_time < 0 or not r.spinup_dt > 0:
        e.append("reference.spinup_time/spinup_dt: invalid spin-up")
    return e


def _check_initial(text: str, cfg: ExperimentConfig, where: str, e: list[str], allow_exact: bool) -> None:
    try:
        name, args = parse_initial(text)
    except ValueError as exc:
        e.append(f"{where}: {exc}")
        return
    kind = cfg.model.kind
    lorenz_only = ("state", "pathological")
    if name == "exact" and not allow_exact:
        e.append(f"{where}: 'exact' is only meaningful for the initial guess")
    if kind == "lorenz" and name not in lorenz_only + ("zero", "exact"):
        e.append(f"{where}: {name} is not a Lorenz state")
    if kind != "lorenz" and name in lorenz_only:
        e.append(f"{where}: {name} only applies to the Lorenz system")
    if name in ("spinup", "taylor_green") and kind != "nse":
        e.append(f"{where}: {name} only applies to the NSE model")
    if name in ("modes", "smooth", "trig_poly") and kind in ("nse", "lorenz"):
        e.append(f"{where}: {name} is a 1D profile")
    if name == "spinup" and not cfg.reference.spinup_time > 0:
        e.append(f"{where}: spinup needs reference.spinup_time > 0")
    if name == "modes" and kind != "lorenz" and cfg.grid.n_points:
        for _, k, _ in args:
            if not 0 < k < cfg.grid.n_points // 2:
                e.append(f"{where}: mode {k} not resolved on {cfg.grid.n_points} points")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if all(isinstance(v, int) for v in value):
            return ", ".join(str(v) for v in value)
        return " | ".join(value)
    return str(value)


def format_config(cfg: ExperimentConfig) -> str:
    """Serialize every field (defaults included) so the text round-trips exactly."""
    lines = ["[experiment]"]
    for key in _META_KEYS:
        val = getattr(cfg, key)
        lines.append(f"{key} = {_fmt(val) if not isinstance(val, str) else val}")
    for name in _SECTIONS:
        lines.append("")
        lines.append(f"[{name}]")
        spec = getattr(cfg, name)
        for f in fields(spec):
            lines.append(f"{f.name} = {_fmt(getattr(spec, f.name))}")
    return "\n".join(lines) + "\n"


def config_as_dict(cfg: ExperimentConfig) -> dict:
    return dataclasses.asdict(cfg)
