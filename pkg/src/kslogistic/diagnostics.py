"""Run-time measurements and qualitative property checks.

Checkers return a CheckResult rather than raising: a run is allowed to
finish with failed checks, and the harness decides which failures count
against the exit status (only those whose hypotheses the parameter
regime satisfies).  Margins are signed: positive means slack, negative
means violation, so mutation tests can assert that corrupted inputs
drive them below zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .grid import Field, Grid
from .helmholtz import grad_potential
from .params import Params

__all__ = [
    "CheckResult",
    "TimeSeries",
    "FrontTrace",
    "SpeedEstimate",
    "CstarScan",
    "lp_norm",
    "check_lr_growth",
    "front_radius",
    "front_trace",
    "estimate_speed",
    "cstar_functional",
    "equilibrium_distance",
    "sandwich_check",
    "boundary_guard",
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass(frozen=True)
class TimeSeries:
    label: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class FrontTrace:
    """Leading-edge radius per sample; valid turns False once the front
    enters the outer guard band of the box."""

    times: np.ndarray
    radii: np.ndarray
    valid: np.ndarray
    level: float
    guard: float


@dataclass(frozen=True)
class SpeedEstimate:
    speed: float
    stderr: float
    window: tuple
    n_samples: int


@dataclass(frozen=True)
class CstarScan:
    """Pointwise minima of the speed floor 2 sqrt(a - chi v) - chi |grad v|
    and of the positivity form 4 (a - chi v) - chi^2 |grad v|^2 over a
    region.  Points with a - chi v < 0 make the floor undefined; they are
    excluded from speed_min and counted in undefined_fraction."""

    speed_min: float
    positivity_min: float
    undefined_fraction: float
    n_points: int

    @property
    def all_defined(self) -> bool:
        return self.undefined_fraction == 0.0


@lru_cache(maxsize=16)
def _radius_mesh(grid: Grid) -> np.ndarray:
    if grid.dim == 1:
        return np.abs(grid.axes[0])
    X, Y = np.meshgrid(grid.axes[0], grid.axes[1], indexing="ij")
    return np.sqrt(X**2 + Y**2)


@lru_cache(maxsize=16)
def _box_mesh(grid: Grid) -> np.ndarray:
    """Sup-norm distance from the origin, the distance that matters for
    proximity to the box faces."""
    if grid.dim == 1:
        return np.abs(grid.axes[0])
    X, Y = np.meshgrid(grid.axes[0], grid.axes[1], indexing="ij")
    return np.maximum(np.abs(X), np.abs(Y))


def lp_norm(f: Field, p: float) -> float:
    """Quadrature L^p norm, h^dim per cell; p = inf for the sup norm."""
    if not (p >= 1.0):
        raise ValueError(f"p must be >= 1 (or inf), got {p}")
    a = np.abs(f.values)
    if math.isinf(p):
        return float(a.max())
    mx = float(a.max())
    if mx == 0.0:
        return 0.0
    # factor out the peak so large p cannot overflow
    return mx * float(
        (f.grid.cell_volume * np.sum((a / mx) ** p)) ** (1.0 / p)
    )


def check_lr_growth(
    series: TimeSeries, u0_norm: float, a: float, tol: float
) -> CheckResult:
    """Is series(t) <= u0_norm * e^(a t) * (1 + tol) at every sample?

    margin is the smallest relative slack (bound - value)/bound.
    """
    if u0_norm < 0 or tol < 0:
        raise ValueError("u0_norm and tol must be nonnegative")
    bounds = u0_norm * np.exp(a * series.times) * (1.0 + tol)
    scale = np.maximum(bounds, 1e-300)
    slack = (bounds - series.values) / scale
    worst = int(np.argmin(slack))
    margin = float(slack[worst])
    return CheckResult(
        name=f"growth[{series.label}]",
        passed=bool(margin >= 0.0),
        margin=margin,
        detail=(
            f"worst at t={series.times[worst]:.6g}: value {series.values[worst]:.6g} "
            f"vs bound {bounds[worst]:.6g}"
        ),
    )


def front_radius(u: Field, level: float) -> float:
    """Largest |x| where u >= level; 0.0 when the level set is empty."""
    if not level > 0:
        raise ValueError(f"level must be positive, got {level}")
    hit = u.values >= level
    if not hit.any():
        return 0.0
    return float(_radius_mesh(u.grid)[hit].max())


def front_trace(
    snapshots: Sequence[tuple], level: float, guard: float = 0.1
) -> FrontTrace:
    """Track the level set through (t, Field) snapshots.

    A sample is valid while the radius stays at or below
    (1 - guard) * half_width.
    """
    if not 0.0 <= guard < 1.0:
        raise ValueError(f"guard must lie in [0, 1), got {guard}")
    if len(snapshots) == 0:
        raise ValueError("no snapshots")
    times, radii = [], []
    L = snapshots[0][1].grid.half_width
    for t, f in snapshots:
        times.append(float(t))
        radii.append(front_radius(f, level))
    times = np.asarray(times)
    radii = np.asarray(radii)
    valid = radii <= (1.0 - guard) * L
    return FrontTrace(times=times, radii=radii, valid=valid, level=level, guard=guard)


def estimate_speed(trace: FrontTrace, window: Optional[tuple] = None) -> SpeedEstimate:
    """Least-squares slope of radius vs time over valid samples.

    window defaults to the last half of the valid samples.  Fewer than 8
    usable samples is an error: a two-point fit would report a speed
    with no meaningful uncertainty.
    """
    ok = trace.valid.copy()
    if window is None:
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            raise ValueError("no valid samples in trace")
        t_lo = trace.times[idx[idx.size // 2]]
        window = (float(t_lo), float(trace.times[idx[-1]]))
    ok &= (trace.times >= window[0]) & (trace.times <= window[1])
    n = int(ok.sum())
    if n < 8:
        raise ValueError(f"need at least 8 valid samples in window, have {n}")
    t = trace.times[ok]
    r = trace.radii[ok]
    fit = stats.linregress(t, r)
    stderr = 0.0 if np.isnan(fit.stderr) else float(fit.stderr)
    return SpeedEstimate(
        speed=float(fit.slope), stderr=stderr, window=window, n_samples=n
    )


def cstar_functional(
    u: Field, v: Field, p: Params, inner_radius: float
) -> CstarScan:
    """Scan the spreading-speed functionals over |x| >= inner_radius."""
    region = _radius_mesh(u.grid) >= inner_radius
    n = int(region.sum())
    if n == 0:
        raise ValueError(f"no grid points with |x| >= {inner_radius}")
    gv = grad_potential(u)
    grad_mag2 = sum(c.values**2 for c in gv)[region]
    head = (p.a - p.chi * v.values[region])
    positivity = 4.0 * head - p.chi**2 * grad_mag2
    defined = head >= 0.0
    frac_undef = 1.0 - float(defined.sum()) / n
    if defined.any():
        speed_min = float(
            np.min(2.0 * np.sqrt(head[defined]) - p.chi * np.sqrt(grad_mag2[defined]))
        )
    else:
        speed_min = -math.inf
    return CstarScan(
        speed_min=speed_min,
        positivity_min=float(positivity.min()),
        undefined_fraction=frac_undef,
        n_points=n,
    )


def equilibrium_distance(
    u: Field, v: Field, p: Params, region_radius: Optional[float] = None
) -> tuple:
    """Sup distance of (u, v) from the uniform state a/b, optionally
    restricted to the ball |x| <= region_radius."""
    target = p.a / p.b
    if region_radius is None:
        region = np.ones(u.grid.shape, dtype=bool)
    else:
        region = _radius_mesh(u.grid) <= region_radius
        if not region.any():
            raise ValueError(f"no grid points with |x| <= {region_radius}")
    du = float(np.max(np.abs(u.values[region] - target)))
    dv = float(np.max(np.abs(v.values[region] - target)))
    return du, dv


def sandwich_check(u: Field, v: Field) -> CheckResult:
    """min u <= v <= max u pointwise, with rounding budget
    1e-12 * (1 + ||u||_inf)."""
    umin, umax = float(u.values.min()), float(u.values.max())
    tol = 1e-12 * (1.0 + max(abs(umin), abs(umax)))
    low = float(v.values.min()) - (umin - tol)
    high = (umax + tol) - float(v.values.max())
    margin = min(low, high)
    side = "below min u" if low < high else "above max u"
    return CheckResult(
        name="sandwich",
        passed=bool(margin >= 0.0),
        margin=margin,
        detail=f"tightest side: {side}; u in [{umin:.6g}, {umax:.6g}]",
    )


def boundary_guard(u: Field, far_value: float, guard: float = 0.1) -> CheckResult:
    """Is the outer guard band still flat at far_value?

    The band is the set within guard * half_width of a box face; the
    budget is 1e-6 * (1 + |far_value|).
    """
    # past 1/2 the shells from opposite faces overlap and the "far
    # field" stops meaning anything
    if not 0.0 < guard < 0.5:
        raise ValueError(f"guard must lie in (0, 1/2), got {guard}")
    g = u.grid
    shell = _box_mesh(g) >= (1.0 - guard) * g.half_width
    if not shell.any():
        raise ValueError("guard band contains no grid points")
    dev = float(np.max(np.abs(u.values[shell] - far_value)))
    budget = 1e-6 * (1.0 + abs(far_value))
    return CheckResult(
        name="boundary_guard",
        passed=bool(dev <= budget),
        margin=budget - dev,
        detail=f"max deviation {dev:.3e} against budget {budget:.3e}",
    )
