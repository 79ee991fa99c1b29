"""Fourier analysis on the doubly periodic square [0, 2*pi)^2.

Fields are stored as full ``(n, n)`` arrays of complex Fourier coefficients in
FFT index order: row index ``i`` carries wavenumber ``k1`` along ``x1``,
column index ``j`` carries ``k2`` along ``x2``.  Index ``i`` maps to ``k = i``
for ``i <= n/2`` and to ``k = i - n`` otherwise, so the Nyquist row/column is
labelled ``+n/2`` and the wavevector set is ``-n/2 < k <= n/2``.

The forward transform carries the ``1/n^2`` factor, so a band-limited field
``f(x) = sum_k c_k exp(i k.x)`` has coefficients exactly ``c_k``.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.fft

from fracmhd.errors import GridMismatch, HermitianViolation, NegativePowerOnMean

TWO_PI = 2.0 * np.pi

# Retained modes satisfy max(|k1|, |k2|) <= n * DEALIAS_FRACTION.
DEALIAS_FRACTION = 1.0 / 3.0

HERMITIAN_RTOL = 1e-10

# A zero mode below this fraction of the largest coefficient counts as rounding.
MEAN_RTOL = 1e-12


def fft_workers() -> int:
    """Thread count for transforms, taken from ``FRACMHD_THREADS`` (default 1)."""
    raw = os.environ.get("FRACMHD_THREADS", "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)


def wavenumbers(n: int) -> np.ndarray:
    """Integer wavenumbers in FFT order, Nyquist labelled ``+n/2``."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    k[n // 2] = n // 2
    return k


@functools.lru_cache(maxsize=None)
def _retained_mask(n: int, fraction: float) -> np.ndarray:
    k = np.abs(wavenumbers(n))
    kmax = np.maximum.outer(k, k)
    mask = kmax <= n * fraction
    mask.setflags(write=False)
    return mask


@dataclass(frozen=True)
class GridSpec:
    """Uniform ``n x n`` grid on the 2*pi-periodic square."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise ValueError(f"grid size must be an integer, got {self.n!r}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be even and >= 8, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def length(self) -> float:
        return TWO_PI

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n

    @functools.cached_property
    def k1(self) -> np.ndarray:
        k = wavenumbers(self.n)
        return np.broadcast_to(k[:, None], (self.n, self.n))

    @functools.cached_property
    def k2(self) -> np.ndarray:
        k = wavenumbers(self.n)
        return np.broadcast_to(k[None, :], (self.n, self.n))

    @functools.cached_property
    def kmag(self) -> np.ndarray:
        return np.hypot(self.k1, self.k2)

    @property
    def dealias_mask(self) -> np.ndarray:
        return _retained_mask(self.n, DEALIAS_FRACTION)

    @functools.cached_property
    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates ``(x1, x2)`` with ``x1`` varying along axis 0."""
        x = np.arange(self.n) * self.spacing
        return np.meshgrid(x, x, indexing="ij")

    def negated_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Index arrays mapping each wavevector ``k`` to ``-k``."""
        idx = (-np.arange(self.n)) % self.n
        return idx[:, None], idx[None, :]


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real scalar field."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if coeffs.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"coefficient array has shape {coeffs.shape}, expected {(self.grid.n, self.grid.n)}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, grid: GridSpec) -> SpectralField:
        return cls(grid, np.zeros((grid.n, grid.n), dtype=np.complex128))

    def coeff(self, k1: int, k2: int) -> complex:
        """Coefficient at integer wavevector ``(k1, k2)``."""
        n = self.grid.n
        return complex(self.coeffs[k1 % n, k2 % n])

    @property
    def mean(self) -> complex:
        return complex(self.coeffs[0, 0])

    def hermitian_defect(self) -> float:
        """Max ``|c(-k) - conj(c(k))|``."""
        ni, nj = self.grid.negated_index()
        return float(np.max(np.abs(self.coeffs[ni, nj] - np.conj(self.coeffs))))

    def _check(self, other: SpectralField) -> None:
        if other.grid != self.grid:
            raise GridMismatch(f"grid n={self.grid.n} vs n={other.grid.n}")

    def __add__(self, other: SpectralField) -> SpectralField:
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: SpectralField) -> SpectralField:
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self) -> SpectralField:
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar: float) -> SpectralField:
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class RealSamples:
    """Values of a real field at the grid nodes."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"sample array has shape {values.shape}, expected {(self.grid.n, self.grid.n)}"
            )
        object.__setattr__(self, "values", values)


def has_mean(F: SpectralField) -> bool:
    """True if the zero mode is significant relative to the other coefficients."""
    c00 = abs(F.coeffs[0, 0])
    return c00 > 0 and c00 > MEAN_RTOL * float(np.max(np.abs(F.coeffs)))


def _same_grid(*fields) -> GridSpec:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatch(f"grid n={grid.n} vs n={f.grid.n}")
    return grid


def forward_transform(f: RealSamples) -> SpectralField:
    coeffs = scipy.fft.fft2(f.values, norm="forward", workers=fft_workers())
    return SpectralField(f.grid, coeffs)


def inverse_transform(F: SpectralField) -> RealSamples:
    """Synthesize grid values, rejecting coefficients that are not Hermitian.

    Raises:
        HermitianViolation: if the imaginary residue exceeds ``1e-10`` of the
            field's magnitude.
    """
    z = scipy.fft.ifft2(F.coeffs, norm="forward", workers=fft_workers())
    residue = float(np.max(np.abs(z.imag))) if z.size else 0.0
    scale = float(np.max(np.abs(z))) if z.size else 0.0
    if residue > HERMITIAN_RTOL * scale:
        raise HermitianViolation(
            f"imaginary residue {residue:.3e} exceeds {HERMITIAN_RTOL:g} x scale {scale:.3e}"
        )
    return RealSamples(F.grid, z.real)


def power_symbol(grid: GridSpec, s: float) -> np.ndarray:
    """``|k|^s`` on the grid; ``0**s`` follows numpy except ``s < 0`` gives 0 at k=0."""
    if s == 0:
        return np.ones((grid.n, grid.n))
    with np.errstate(divide="ignore"):
        sym = np.power(grid.kmag, float(s))
    sym[0, 0] = 0.0
    return sym


def fractional_power(F: SpectralField, s: float) -> SpectralField:
    """Apply ``Lambda^s = (-Laplacian)^(s/2)``, symbol ``|k|^s``.

    ``s = 0`` is the identity. For ``s != 0`` the zero mode of the output is 0;
    for ``s < 0`` a zero mode at rounding level is discarded.

    Raises:
        NegativePowerOnMean: if ``s < 0`` and the mean is nonzero.
    """
    if s < 0 and has_mean(F):
        raise NegativePowerOnMean(f"Lambda^{s} undefined on nonzero mean {F.coeffs[0, 0]!r}")
    return SpectralField(F.grid, F.coeffs * power_symbol(F.grid, s))


def derivative_symbol(grid: GridSpec, axis: int) -> np.ndarray:
    """``i k_axis`` with the Nyquist wavenumber dropped (it has no real derivative)."""
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis!r}")
    k = (grid.k1 if axis == 1 else grid.k2).copy()
    k[np.abs(k) == grid.n // 2] = 0.0
    return 1j * k


def partial_derivative(F: SpectralField, axis: int) -> SpectralField:
    return SpectralField(F.grid, F.coeffs * derivative_symbol(F.grid, axis))


def dealias(F: SpectralField) -> SpectralField:
    """Zero every mode with ``max(|k1|, |k2|) > n/3``."""
    return SpectralField(F.grid, np.where(F.grid.dealias_mask, F.coeffs, 0.0))


def pointwise_product(F: SpectralField, G: SpectralField) -> SpectralField:
    """Dealiased pseudospectral product of two fields.

    Both inputs are expected to be dealiased already; the result then equals
    the exact convolution truncated to the retained modes.
    """
    _same_grid(F, G)
    f = inverse_transform(F)
    g = inverse_transform(G)
    return dealias(forward_transform(RealSamples(F.grid, f.values * g.values)))


def l2_norm(F: SpectralField) -> float:
    """L2 norm over the torus by Parseval: ``2*pi * sqrt(sum |c_k|^2)``."""
    return TWO_PI * math.sqrt(float(np.sum(F.coeffs.real**2 + F.coeffs.imag**2)))


def sobolev_seminorm(F: SpectralField, s: float) -> float:
    """``||Lambda^s F||_{L2}``."""
    return l2_norm(fractional_power(F, s))


def lp_norm(f: RealSamples, p: float) -> float:
    """Grid-quadrature ``L^p`` norm; ``p = inf`` gives the maximum modulus."""
    p = float(p)
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(f.values)
    if math.isinf(p):
        return float(a.max())
    h2 = f.grid.spacing**2
    if p == 2.0:
        return math.sqrt(h2 * float(np.sum(a * a)))
    scale = float(a.max())
    if scale == 0.0:
        return 0.0
    # factor out the max so large p cannot overflow
    return scale * (h2 * float(np.sum((a / scale) ** p))) ** (1.0 / p)


def sample_field(grid: GridSpec, func) -> RealSamples:
    """Evaluate ``func(x1, x2)`` on the grid nodes."""
    x1, x2 = grid.coordinates
    return RealSamples(grid, func(x1, x2))


def hermitian_part(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    """Project coefficients onto the Hermitian-symmetric subspace."""
    ni, nj = grid.negated_index()
    return 0.5 * (coeffs + np.conj(coeffs[ni, nj]))


def random_band_field(
    grid: GridSpec,
    rng: np.random.Generator,
    kmin: float = 1.0,
    kmax: float = 4.0,
) -> SpectralField:
    """Gaussian random real field with modes on ``kmin <= |k| <= kmax``."""
    n = grid.n
    raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    band = (grid.kmag >= kmin) & (grid.kmag <= kmax)
    return SpectralField(grid, hermitian_part(grid, np.where(band, raw, 0.0)))


def to_half(coeffs: np.ndarray) -> np.ndarray:
    """Keep the ``k2 >= 0`` half used by real FFTs."""
    n = coeffs.shape[0]
    return np.ascontiguousarray(coeffs[:, : n // 2 + 1])


def from_half(half: np.ndarray, n: int) -> np.ndarray:
    """Rebuild the full coefficient array from its ``k2 >= 0`` half."""
    m = n // 2 + 1
    full = np.empty((n, n), dtype=np.complex128)
    full[:, :m] = half
    rows = (-np.arange(n)) % n
    cols = n - np.arange(m, n)
    full[:, m:] = np.conj(half[rows][:, cols])
    return full
