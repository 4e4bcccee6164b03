"""Backward-leg variants and the dynamics they induce in ``tau = T - t``.

Every backward system is written as a forward march in ``tau``.  For a forward
system ``u_t = L u + N(u)`` the standard backward leg is
``v_tau = -L v - N(v) + mu P(obs - v)``; stabilised variants modify the linear
symbol or premultiply the time derivative by a Helmholtz operator.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .integrators import Dynamics
from .models import LorenzParams, NseModel, Pde1DModel
from .spectral import Grid, helmholtz_symbol

__all__ = ["BackwardVariant", "backward_symbol", "forward_dynamics", "backward_dynamics"]

_TAGS = ("standard", "diffusive", "damped", "voigt", "filtered_diffusive",
         "filtered_voigt", "truncated_diffusion")


@dataclass(frozen=True)
class BackwardVariant:
    tag: str = "standard"
    alpha: float = 0.0
    cutoff: int = 50

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ValueError(f"unknown backward variant {self.tag!r}; expected one of {_TAGS}")
        if self.tag in ("voigt", "filtered_voigt") and not self.alpha > 0:
            raise ValueError("Voigt variants need alpha > 0")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.cutoff < 0:
            raise ValueError("cutoff must be non-negative")

    @classmethod
    def standard(cls):
        return cls("standard")

    @classmethod
    def diffusive(cls):
        return cls("diffusive")

    @classmethod
    def damped(cls):
        return cls("damped")

    @classmethod
    def voigt(cls, alpha: float):
        return cls("voigt", alpha=alpha)

    @classmethod
    def filtered_diffusive(cls):
        return cls("filtered_diffusive")

    @classmethod
    def filtered_voigt(cls, alpha: float):
        return cls("filtered_voigt", alpha=alpha)

    @classmethod
    def truncated_diffusion(cls, cutoff: int = 50):
        return cls("truncated_diffusion", cutoff=cutoff)

    @classmethod
    def parse(cls, text: str) -> "BackwardVariant":
        """Parse ``standard``, ``voigt(1e-3)``, ``truncated_diffusion(50)`` and friends."""
        m = re.fullmatch(r"\s*([a-z_-]+)\s*(?:\(\s*([^)]*?)\s*\))?\s*", text.strip().lower())
        if not m:
            raise ValueError(f"cannot parse backward variant {text!r}")
        tag, arg = m.group(1).replace("-", "_"), m.group(2)
        if tag in ("voigt", "filtered_voigt"):
            if not arg:
                raise ValueError(f"{tag} needs an alpha argument, e.g. {tag}(1e-3)")
            return cls(tag, alpha=float(arg))
        if tag == "truncated_diffusion":
            return cls(tag, cutoff=int(arg) if arg else 50)
        if arg:
            raise ValueError(f"{tag} takes no argument")
        return cls(tag)

    def __str__(self) -> str:
        if self.tag in ("voigt", "filtered_voigt"):
            return f"{self.tag}({self.alpha!r})"
        if self.tag == "truncated_diffusion":
            return f"{self.tag}({self.cutoff})"
        return self.tag

    @property
    def is_filtered(self) -> bool:
        return self.tag.startswith("filtered")


def _check_compatible(model, variant: BackwardVariant) -> None:
    if isinstance(model, LorenzParams):
        if variant.tag != "standard":
            raise ValueError("the Lorenz system only supports the standard backward leg")
        return
    nu = model.nu
    tag = variant.tag
    if tag in ("diffusive", "filtered_diffusive") and not nu > 0:
        raise ValueError(f"{tag} backward leg needs a viscous model (nu > 0)")
    if tag == "damped" and not (isinstance(model, Pde1DModel) and model.kind == "kdv_damped"):
        raise ValueError("damped backward leg is only defined for the damped KdV model")
    if tag == "truncated_diffusion":
        if not isinstance(model, Pde1DModel) or not nu > 0:
            raise ValueError("truncated diffusion needs a viscous 1D model")


def backward_symbol(model, variant: BackwardVariant, grid: Grid, mode_cutoff: int | None = None) -> np.ndarray:
    """Effective linear symbol of the tau-march for ``variant``.

    For Voigt variants the returned symbol already includes the division by
    the (filtered) Helmholtz symbol.
    """
    _check_compatible(model, variant)
    if variant.is_filtered and mode_cutoff is None:
        raise ValueError("filtered variants need the observation cutoff")
    forward = model.symbol(grid)
    tag = variant.tag
    if tag == "standard":
        return -forward
    if tag == "diffusive":
        return -forward - 2.0 * model.nu * grid.kappa_sq
    if tag == "filtered_diffusive":
        return -forward - 2.0 * model.nu * grid.kappa_sq * ~grid.low_mode_mask(mode_cutoff)
    if tag == "damped":
        return -forward - 2.0 * model.gamma
    if tag == "truncated_diffusion":
        return -forward - model.nu * grid.kappa_sq * (grid.abs_index > variant.cutoff)
    return -forward / _helmholtz(variant, grid, mode_cutoff)


def _helmholtz(variant: BackwardVariant, grid: Grid, mode_cutoff):
    return helmholtz_symbol(grid, variant.alpha, mode_cutoff if variant.tag == "filtered_voigt" else None)


def forward_dynamics(model: Pde1DModel | NseModel, grid: Grid) -> Dynamics:
    return Dynamics(model.symbol(grid), model.nonlinear_operator(grid), 1.0)


def backward_dynamics(model: Pde1DModel | NseModel, variant: BackwardVariant, grid: Grid,
                      mode_cutoff: int | None = None) -> Dynamics:
    symbol = backward_symbol(model, variant, grid, mode_cutoff)
    nonlinear = model.nonlinear_operator(grid)
    if variant.tag in ("voigt", "filtered_voigt"):
        inv_h = 1.0 / _helmholtz(variant, grid, mode_cutoff)
        neg = None if nonlinear is None else (lambda c, N=nonlinear, s=-inv_h: s * N(c))
        return Dynamics(symbol, neg, inv_h)
    neg = None if nonlinear is None else (lambda c, N=nonlinear: -N(c))
    return Dynamics(symbol, neg, 1.0)
