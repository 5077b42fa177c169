"""Periodic grids, physical fields, and spectral transforms.

Conventions used by every module in this package:

* The domain is the box [-L, L)^dim sampled on n uniform points per
  axis, spacing h = 2*L/n.  Arrays are C-ordered; axis i indexes
  coordinate x_i.
* Forward transforms divide by n**dim, so the k = 0 coefficient equals
  the field mean and Fourier-multiplier algebra needs no rescaling.
* Wavenumbers are k_j = pi*j/L in standard FFT ordering.  The largest
  magnitude is pi*(n/2)/L, stored as the negative frequency.
* Odd-derivative multipliers zero the Nyquist mode (it has no conjugate
  partner, so a first derivative would break Hermitian symmetry).
* Dealiasing uses the 2/3 rule: per axis, modes with |j| > n//3 are
  dropped before and after quadratic products.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import fft as sfft

__all__ = [
    "Grid",
    "Field",
    "SpectralField",
    "NonFiniteFieldError",
    "make_grid",
    "to_spectral",
    "to_physical",
    "gradient",
    "divergence",
    "laplacian",
    "require_finite",
]

#: imaginary residual above this (relative to the real part) means the
#: coefficients were not Hermitian-symmetric
_HERMITIAN_RTOL = 1e-10


class NonFiniteFieldError(ValueError):
    """A field contains NaN or Inf where finite data is required."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L, L)^dim.

    Parameters
    ----------
    dim : int
        Spatial dimension, 1 or 2.
    n : int
        Points per axis.  Must be even and at least 4 so the Nyquist
        mode and the 2/3-rule band are well defined.
    half_width : float
        L, half the box edge.  Must be positive.

    Attributes derived at construction (not constructor arguments):

    h : float
        Grid spacing 2*L/n.
    axes : tuple of ndarray
        Per-axis coordinates, each ``-L + h*arange(n)``.
    wavenumbers : tuple of ndarray
        Per-axis k_j = pi*j/L in FFT order.
    k2 : ndarray
        Dense |k|^2 mesh, shape ``shape``.
    ik : tuple of ndarray
        Broadcastable first-derivative multipliers i*k per axis with
        the Nyquist entry zeroed.
    dealias_mask : ndarray of bool
        True on modes kept by the 2/3 rule (|j| <= n//3 per axis).
    """

    dim: int
    n: int
    half_width: float

    h: float = field(init=False, repr=False, compare=False)
    axes: tuple = field(init=False, repr=False, compare=False)
    wavenumbers: tuple = field(init=False, repr=False, compare=False)
    k2: np.ndarray = field(init=False, repr=False, compare=False)
    ik: tuple = field(init=False, repr=False, compare=False)
    dealias_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 4 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 4, got {self.n}")
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError(f"half_width must be positive, got {self.half_width}")

        L = float(self.half_width)
        n = self.n
        h = 2.0 * L / n
        # integer mode numbers in FFT order: 0, 1, ..., n/2-1, -n/2, ..., -1
        j = np.rint(np.fft.fftfreq(n, d=1.0 / n)).astype(np.int64)
        k1 = (np.pi / L) * j
        kdiff = k1.copy()
        kdiff[n // 2] = 0.0  # Nyquist dropped for odd derivatives
        keep = np.abs(j) <= n // 3

        axes = tuple(-L + h * np.arange(n) for _ in range(self.dim))
        wavenumbers = tuple(k1.copy() for _ in range(self.dim))

        def along(axis: int, vec: np.ndarray) -> np.ndarray:
            shape = [1] * self.dim
            shape[axis] = n
            return vec.reshape(shape)

        k2 = sum(along(a, k1) ** 2 for a in range(self.dim))
        k2 = np.ascontiguousarray(np.broadcast_to(k2, (n,) * self.dim))
        ik = tuple(1j * along(a, kdiff) for a in range(self.dim))
        mask = along(0, keep)
        for a in range(1, self.dim):
            mask = mask & along(a, keep)
        mask = np.ascontiguousarray(np.broadcast_to(mask, (n,) * self.dim))

        object.__setattr__(self, "h", h)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "wavenumbers", wavenumbers)
        object.__setattr__(self, "k2", k2)
        object.__setattr__(self, "ik", ik)
        object.__setattr__(self, "dealias_mask", mask)

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        """Quadrature weight h**dim of one grid cell."""
        return self.h**self.dim


@dataclass(frozen=True)
class Field:
    """Real scalar samples on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise ValueError(
                f"values shape {vals.shape} does not match grid shape {self.grid.shape}"
            )
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier coefficients in standard FFT layout."""

    grid: Grid
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        coef = np.asarray(self.coefficients, dtype=np.complex128)
        if coef.shape != self.grid.shape:
            raise ValueError(
                f"coefficients shape {coef.shape} does not match grid shape {self.grid.shape}"
            )
        object.__setattr__(self, "coefficients", coef)


def make_grid(dim: int, n: int, half_width: float) -> Grid:
    """Build a periodic grid on [-half_width, half_width)^dim."""
    return Grid(dim=dim, n=n, half_width=half_width)


def require_finite(f: Field | SpectralField, context: str = "field") -> None:
    data = f.values if isinstance(f, Field) else f.coefficients
    if not np.all(np.isfinite(data)):
        bad = int(np.size(data) - np.count_nonzero(np.isfinite(data)))
        raise NonFiniteFieldError(f"{context} has {bad} non-finite entries")


def to_spectral(f: Field) -> SpectralField:
    """Forward transform.  The k = 0 coefficient equals the field mean."""
    require_finite(f)
    return SpectralField(f.grid, sfft.fftn(f.values, norm="forward"))


def to_physical(s: SpectralField) -> Field:
    """Inverse transform, returning the real part.

    Raises ValueError when the coefficients are measurably non-Hermitian
    (imaginary residual above 1e-10 relative to the real amplitude).
    """
    w = sfft.ifftn(s.coefficients, norm="forward")
    scale = float(np.max(np.abs(w.real))) if w.size else 0.0
    resid = float(np.max(np.abs(w.imag))) if w.size else 0.0
    if resid > _HERMITIAN_RTOL * (1.0 + scale):
        raise ValueError(
            f"coefficients are not Hermitian-symmetric: imaginary residual {resid:.3e} "
            f"against real amplitude {scale:.3e}"
        )
    return Field(s.grid, np.ascontiguousarray(w.real))


def _spectral_of(f: Field | SpectralField) -> tuple[Grid, np.ndarray]:
    if isinstance(f, Field):
        return f.grid, sfft.fftn(f.values, norm="forward")
    return f.grid, f.coefficients


def gradient(f: Field | SpectralField) -> tuple[Field, ...]:
    """Spectral gradient, one Field per axis.  Nyquist modes are dropped."""
    g, fh = _spectral_of(f)
    out = []
    for a in range(g.dim):
        out.append(to_physical(SpectralField(g, g.ik[a] * fh)))
    return tuple(out)


def divergence(w: Sequence[Field]) -> Field:
    """Spectral divergence of a vector field given as per-axis components."""
    if len(w) == 0:
        raise ValueError("divergence needs at least one component")
    g = w[0].grid
    if len(w) != g.dim:
        raise ValueError(f"expected {g.dim} components, got {len(w)}")
    acc = np.zeros(g.shape, dtype=np.complex128)
    for a, comp in enumerate(w):
        if comp.grid is not g and comp.grid != g:
            raise ValueError("components live on different grids")
        acc += g.ik[a] * sfft.fftn(comp.values, norm="forward")
    return to_physical(SpectralField(g, acc))


def laplacian(f: Field | SpectralField) -> Field:
    """Spectral Laplacian (multiplier -|k|^2, Nyquist retained)."""
    g, fh = _spectral_of(f)
    return to_physical(SpectralField(g, -g.k2 * fh))
