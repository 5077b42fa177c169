"""Time integration of u_t = lap(u) - chi div(u grad v) + u (a - b u),
with v = (I - lap)^(-1) u eliminated at every evaluation.

The update is a two-stage exponential integrator built on the exact
propagator of the linear part -(1 + |k|^2):

    predictor:  u1^ = E u^ + dt phi1 F^(u)
    corrector:  u+^ = E u^ + dt phi1 (F^(u) + F^(u1)) / 2

with E = exp(-dt (1 + |k|^2)), phi1(z) = (e^z - 1)/z, and
F(u) = -chi div(u grad v) + (a + 1) u - b u^2.  The +u hidden in F
compensates the -u folded into the propagator, so constants follow the
logistic flow and the scheme is exact on the linear problem.  Quadratic
products are formed in physical space from 2/3-rule truncated factors
and truncated again afterwards.

Runs abort (they never clamp) when a step goes non-finite, dips below
the negativity budget, or crosses the blow-up threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from .grid import (
    Field,
    Grid,
    NonFiniteFieldError,
    SpectralField,
    require_finite,
    to_physical,
)
from .params import Params

__all__ = [
    "Params",
    "State",
    "StepControl",
    "StepperError",
    "NegativityError",
    "BlowupError",
    "initial_state",
    "nonlinearity",
    "step",
    "stability_warnings",
]


class StepperError(RuntimeError):
    """Base class for aborted runs; carries the abort time."""

    def __init__(self, message: str, t: float, value: float):
        super().__init__(message)
        self.t = t
        self.value = value


class NegativityError(StepperError):
    """A step dipped below the negativity budget."""


class BlowupError(StepperError):
    """A step crossed the blow-up threshold."""


@dataclass(frozen=True)
class StepControl:
    """Fixed-step controls.  None budgets are resolved from u0 at run start:

    negativity_budget -> 1e-10 * (1 + ||u0||_inf)
    blowup_threshold  -> 1e4 * max(1, ||u0||_inf, a/b)
    """

    dt: float
    t_end: float
    dealias: bool = True
    negativity_budget: float | None = None
    blowup_threshold: float | None = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (np.isfinite(self.t_end) and self.t_end >= 0):
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        for name in ("negativity_budget", "blowup_threshold"):
            val = getattr(self, name)
            if val is not None and not (np.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive when given, got {val}")

    def resolved(self, u0: Field, p: Params) -> "StepControl":
        """Fill in the data-dependent default budgets."""
        amp = float(np.max(np.abs(u0.values)))
        neg = self.negativity_budget
        blow = self.blowup_threshold
        if neg is None:
            neg = 1e-10 * (1.0 + amp)
        if blow is None:
            blow = 1e4 * max(1.0, amp, p.a / p.b)
        return StepControl(self.dt, self.t_end, self.dealias, neg, blow)


@dataclass(frozen=True)
class State:
    """Solution snapshot.  v is always exactly the resolvent of u."""

    t: float
    u: Field
    v: Field
    step_count: int


def initial_state(u0: Field) -> State:
    from .helmholtz import solve

    return State(t=0.0, u=u0, v=solve(u0), step_count=0)


@lru_cache(maxsize=8)
def _propagators(grid: Grid, dt: float):
    z = -dt * (1.0 + grid.k2)
    E = np.exp(z)
    phi1 = np.empty_like(z)
    small = np.abs(z) < 1e-4
    zs = z[small]
    # series branch dodges the 0/0 cancellation in (e^z - 1)/z
    phi1[small] = 1.0 + zs * (0.5 + zs * (1.0 / 6.0 + zs / 24.0))
    zb = z[~small]
    phi1[~small] = np.expm1(zb) / zb
    return E, dt * phi1


def _rhs_hat(uh: np.ndarray, g: Grid, p: Params, dealias: bool) -> np.ndarray:
    """Spectral coefficients of F(u) = -chi div(u grad v) + (a+1) u - b u^2."""
    mask = g.dealias_mask if dealias else None
    vh = uh / (1.0 + g.k2)
    uh_t = uh * mask if dealias else uh
    ud = sfft.ifftn(uh_t, norm="forward").real
    out = (p.a + 1.0) * uh
    if p.chi != 0.0:
        chem = np.zeros_like(uh)
        for a_ in range(g.dim):
            gvh = g.ik[a_] * vh
            if dealias:
                gvh = gvh * mask
            gv = sfft.ifftn(gvh, norm="forward").real
            fluxh = sfft.fftn(ud * gv, norm="forward")
            if dealias:
                fluxh = fluxh * mask
            chem += g.ik[a_] * fluxh
        out = out - p.chi * chem
    sqh = sfft.fftn(ud * ud, norm="forward")
    if dealias:
        sqh = sqh * mask
    return out - p.b * sqh


def nonlinearity(u: Field, p: Params, dealias: bool = True) -> Field:
    """F(u) as a physical field, v solved internally."""
    uh = sfft.fftn(u.values, norm="forward")
    return to_physical(SpectralField(u.grid, _rhs_hat(uh, u.grid, p, dealias)))


def step(state: State, p: Params, control: StepControl) -> State:
    """Advance one dt.  Budgets must already be resolved (not None)."""
    g = state.u.grid
    if p.dim != g.dim:
        raise ValueError(f"params.dim={p.dim} does not match grid dim {g.dim}")
    if control.negativity_budget is None or control.blowup_threshold is None:
        control = control.resolved(state.u, p)
    require_finite(state.u, context=f"state at t={state.t:.6g}")
    dt = control.dt
    E, P = _propagators(g, dt)

    uh = sfft.fftn(state.u.values, norm="forward")
    fn = _rhs_hat(uh, g, p, control.dealias)
    pred = E * uh + P * fn
    fp = _rhs_hat(pred, g, p, control.dealias)
    newh = E * uh + 0.5 * P * (fn + fp)

    t_new = state.t + dt
    u_new = sfft.ifftn(newh, norm="forward").real
    if not np.all(np.isfinite(u_new)):
        raise NonFiniteFieldError(
            f"solution became non-finite at t={t_new:.6g} (step {state.step_count + 1})"
        )
    lo = float(u_new.min())
    if lo < -control.negativity_budget:
        raise NegativityError(
            f"minimum {lo:.3e} fell below the negativity budget "
            f"{control.negativity_budget:.3e} at t={t_new:.6g}; refine the grid "
            f"or widen the budget if the undershoot is resolution noise",
            t=t_new,
            value=lo,
        )
    hi = float(np.max(np.abs(u_new)))
    if hi > control.blowup_threshold:
        raise BlowupError(
            f"amplitude {hi:.3e} crossed the blow-up threshold "
            f"{control.blowup_threshold:.3e} at t={t_new:.6g}",
            t=t_new,
            value=hi,
        )
    v_new = sfft.ifftn(newh / (1.0 + g.k2), norm="forward").real
    return State(
        t=t_new,
        u=Field(g, np.ascontiguousarray(u_new)),
        v=Field(g, np.ascontiguousarray(v_new)),
        step_count=state.step_count + 1,
    )


def stability_warnings(state: State, p: Params, control: StepControl) -> list[str]:
    """Advisory step-size checks; violations degrade accuracy, not safety."""
    g = state.u.grid
    amp = float(np.max(np.abs(state.u.values)))
    out = []
    drift = p.chi * math.sqrt(g.dim) * amp
    if drift > 0:
        dt_adv = 0.25 * g.h / drift
        if control.dt > dt_adv:
            out.append(
                f"dt={control.dt:.3g} exceeds the drift limit {dt_adv:.3g} "
                f"(0.25 h / (chi sqrt(dim) ||u||_inf))"
            )
    react = p.a + 2.0 * p.b * amp
    if react > 0:
        dt_react = 0.5 / react
        if control.dt > dt_react:
            out.append(
                f"dt={control.dt:.3g} exceeds the reaction limit {dt_react:.3g} "
                f"(0.5 / (a + 2 b ||u||_inf))"
            )
    return out
