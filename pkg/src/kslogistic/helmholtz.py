"""Screened-Poisson resolvent on the periodic box.

``solve`` inverts v - lap(v) = u, i.e. applies (I - lap)^(-1), as the
Fourier multiplier 1/(1 + |k|^2).  The underlying kernel is positive
with unit mass, so the output inherits pointwise bounds from the input:
min u <= v <= max u, and the mean is preserved exactly.

``grad_potential`` applies grad (I - lap)^(-1) in one pass.  Its
physical-space kernel has L1 norm 1 per component, which gives the
uniform bound ||grad v||_inf <= sqrt(dim) * ||u||_inf.
"""

from __future__ import annotations

import numpy as np
from scipy import fft as sfft

from .grid import Field, SpectralField, to_physical, to_spectral

__all__ = ["solve", "grad_potential"]


def solve(u: Field) -> Field:
    """Apply (I - lap)^(-1) to u."""
    s = to_spectral(u)
    vh = s.coefficients / (1.0 + u.grid.k2)
    return to_physical(SpectralField(u.grid, vh))


def grad_potential(u: Field) -> tuple[Field, ...]:
    """Components of grad (I - lap)^(-1) u.  Nyquist modes are dropped."""
    g = u.grid
    uh = sfft.fftn(u.values, norm="forward")
    vh = uh / (1.0 + g.k2)
    return tuple(to_physical(SpectralField(g, g.ik[a] * vh)) for a in range(g.dim))
