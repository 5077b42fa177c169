"""Deterministic initial-condition constructors.

Every kind produces a nonnegative field, and the compactly supported
kinds are exactly zero outside center +- (radius + 3 width) so that
boundary-guard checks start from a genuinely flat tail.  Randomness is
confined to ``positive_random`` and fully determined by ``seed``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import fft as sfft

from .grid import Field, Grid

__all__ = ["ICSpec", "realize", "KINDS"]

KINDS = (
    "constant",
    "gaussian",
    "smoothed_indicator",
    "positive_random",
    "constant_plus_bump",
)

#: highest per-axis mode index carrying noise in positive_random
_NOISE_BAND = 8


@dataclass(frozen=True)
class ICSpec:
    """What to build.  Fields are read per kind:

    constant            amplitude
    gaussian            amplitude, center, width (standard deviation)
    smoothed_indicator  amplitude, center, radius (plateau), width
                        (edge scale; support ends at radius + 3 width)
    positive_random     floor (exact minimum), amplitude (band height),
                        seed
    constant_plus_bump  floor plus a smoothed_indicator bump
    """

    kind: str
    amplitude: float = 1.0
    center: Union[float, tuple] = 0.0
    radius: float = 1.0
    width: float = 0.5
    floor: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; pick one of {KINDS}")
        if not (np.isfinite(self.amplitude) and self.amplitude >= 0):
            raise ValueError(f"amplitude must be nonnegative, got {self.amplitude}")
        if not (np.isfinite(self.floor) and self.floor >= 0):
            raise ValueError(f"floor must be nonnegative, got {self.floor}")
        if self.kind in ("gaussian", "smoothed_indicator", "constant_plus_bump"):
            if not (np.isfinite(self.width) and self.width > 0):
                raise ValueError(f"width must be positive for {self.kind}")
        if self.kind in ("smoothed_indicator", "constant_plus_bump"):
            if not (np.isfinite(self.radius) and self.radius >= 0):
                raise ValueError(f"radius must be nonnegative for {self.kind}")
        if self.kind == "positive_random" and not self.floor > 0:
            raise ValueError("positive_random needs floor > 0")


def _center_of(spec: ICSpec, grid: Grid) -> tuple:
    c = spec.center
    if np.isscalar(c):
        return (float(c),) * grid.dim
    c = tuple(float(x) for x in c)
    if len(c) != grid.dim:
        raise ValueError(f"center has {len(c)} components for a {grid.dim}-D grid")
    return c


def _dist(grid: Grid, center: tuple) -> np.ndarray:
    if grid.dim == 1:
        return np.abs(grid.axes[0] - center[0])
    X, Y = np.meshgrid(grid.axes[0], grid.axes[1], indexing="ij")
    return np.sqrt((X - center[0]) ** 2 + (Y - center[1]) ** 2)


def _bump(dist: np.ndarray, amplitude: float, radius: float, width: float) -> np.ndarray:
    """Plateau with a mollifier shoulder: amplitude inside radius, the
    profile exp(1 - 1/(1 - s^2)) across s in (0, 1), identically zero
    from radius + 3 width outward."""
    s = (dist - radius) / (3.0 * width)
    out = np.zeros_like(dist)
    out[s <= 0.0] = amplitude
    edge = (s > 0.0) & (s < 1.0)
    se = s[edge]
    out[edge] = amplitude * np.exp(1.0 - 1.0 / (1.0 - se**2))
    return out


def _support_must_fit(spec: ICSpec, grid: Grid, center: tuple, extent: float, guard: float):
    limit = (1.0 - guard) * grid.half_width
    for c in center:
        if abs(c) + extent > limit:
            raise ValueError(
                f"{spec.kind} support reaches {abs(c) + extent:.4g}, beyond the "
                f"guard boundary {limit:.4g}; shrink it or enlarge the box"
            )


def realize(spec: ICSpec, grid: Grid, guard: float = 0.1) -> Field:
    """Sample the spec on the grid.

    Compactly supported kinds must fit inside the guard zone, i.e.
    within (1 - guard) * half_width of the origin along every axis.
    """
    center = _center_of(spec, grid)
    if spec.kind == "constant":
        vals = np.full(grid.shape, spec.amplitude)
    elif spec.kind == "gaussian":
        d = _dist(grid, center)
        vals = spec.amplitude * np.exp(-(d**2) / (2.0 * spec.width**2))
    elif spec.kind == "smoothed_indicator":
        _support_must_fit(spec, grid, center, spec.radius + 3 * spec.width, guard)
        vals = _bump(_dist(grid, center), spec.amplitude, spec.radius, spec.width)
    elif spec.kind == "constant_plus_bump":
        _support_must_fit(spec, grid, center, spec.radius + 3 * spec.width, guard)
        vals = spec.floor + _bump(
            _dist(grid, center), spec.amplitude, spec.radius, spec.width
        )
    elif spec.kind == "positive_random":
        rng = np.random.default_rng(spec.seed)
        white = rng.standard_normal(grid.shape)
        coef = sfft.fftn(white, norm="forward")
        j = np.rint(np.fft.fftfreq(grid.n, d=1.0 / grid.n))
        keep1 = np.abs(j) <= _NOISE_BAND
        keep = keep1.reshape([-1] + [1] * (grid.dim - 1))
        for axis in range(1, grid.dim):
            shape = [1] * grid.dim
            shape[axis] = grid.n
            keep = keep & keep1.reshape(shape)
        noise = sfft.ifftn(np.where(keep, coef, 0.0), norm="forward").real
        noise -= noise.min()
        top = noise.max()
        if top > 0:
            noise *= spec.amplitude / top
        vals = spec.floor + noise
    else:  # pragma: no cover - guarded by ICSpec validation
        raise ValueError(f"unknown kind {spec.kind!r}")
    return Field(grid, vals)
