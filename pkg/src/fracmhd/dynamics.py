"""Vorticity-current form of 2D MHD with fractional dissipation.

The evolved pair is the vorticity ``omega = -d2 u1 + d1 u2`` and the current
``j = -d2 b1 + d1 b2``::

    omega_t + u.grad(omega) = b.grad(j) - nu * Lambda^(2 alpha) omega
    j_t + u.grad(j) = b.grad(omega) + T(grad u, grad b) - kappa * Lambda^(2 beta) j

    T = 2 d1b1 (d1u2 + d2u1) + 2 d2u2 (d1b2 + d2b1)

Velocity and magnetic field are recovered by Biot-Savart inversion.  Time
stepping integrates the dissipation exactly (integrating factor) and the
quadratic terms with classical RK4.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from fracmhd import spectral
from fracmhd.errors import GridMismatch, NonFinite, NonZeroMean
from fracmhd.spectral import (
    GridSpec,
    SpectralField,
    inverse_transform,
    partial_derivative,
    pointwise_product,
)

CFL_SPEED_FLOOR = 1e-8


@dataclass(frozen=True)
class PhysParams:
    """Dissipation coefficients and exponents.

    Leaving ``nu``/``kappa`` unset applies the usual convention: ``nu = kappa
    = 1`` when ``alpha > 0`` and ``nu = 0, kappa = 1`` when ``alpha = 0``.
    """

    alpha: float
    beta: float
    nu: float | None = None
    kappa: float | None = None

    def __post_init__(self):
        alpha, beta = float(self.alpha), float(self.beta)
        nu = (1.0 if alpha > 0 else 0.0) if self.nu is None else float(self.nu)
        kappa = 1.0 if self.kappa is None else float(self.kappa)
        for name, value in (("alpha", alpha), ("beta", beta), ("nu", nu), ("kappa", kappa)):
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "kappa", kappa)

    @property
    def r(self) -> float:
        """Regularity index ``alpha + beta - 1`` of the higher-order current bound."""
        return self.alpha + self.beta - 1.0

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "nu": self.nu, "kappa": self.kappa}


@dataclass(frozen=True)
class VectorField:
    comp1: SpectralField
    comp2: SpectralField

    def __post_init__(self):
        if self.comp1.grid != self.comp2.grid:
            raise GridMismatch("vector components on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.comp1.grid

    def divergence(self) -> SpectralField:
        return partial_derivative(self.comp1, 1) + partial_derivative(self.comp2, 2)

    def curl(self) -> SpectralField:
        """Scalar curl ``-d2 v1 + d1 v2``."""
        return partial_derivative(self.comp2, 1) - partial_derivative(self.comp1, 2)

    def sup_norm(self) -> float:
        """Grid maximum of the pointwise magnitude ``|v|``."""
        v1 = inverse_transform(self.comp1).values
        v2 = inverse_transform(self.comp2).values
        return float(np.sqrt(np.max(v1 * v1 + v2 * v2)))


@dataclass(frozen=True)
class MhdState:
    omega_hat: SpectralField
    j_hat: SpectralField
    time: float = 0.0

    def __post_init__(self):
        if self.omega_hat.grid != self.j_hat.grid:
            raise GridMismatch("vorticity and current on different grids")
        if not self.time >= 0:
            raise ValueError(f"time must be >= 0, got {self.time!r}")

    @property
    def grid(self) -> GridSpec:
        return self.omega_hat.grid

    def velocity(self) -> VectorField:
        return velocity_from_vorticity(self.omega_hat)

    def magnetic(self) -> VectorField:
        return velocity_from_vorticity(self.j_hat)

    def symmetry_defect(self) -> float:
        """Largest violation of the mean-zero and Hermitian invariants."""
        return max(
            abs(self.omega_hat.mean),
            abs(self.j_hat.mean),
            self.omega_hat.hermitian_defect(),
            self.j_hat.hermitian_defect(),
        )

    def scaled(self, factor: float) -> MhdState:
        return MhdState(self.omega_hat * factor, self.j_hat * factor, self.time)


def velocity_from_vorticity(omega_hat: SpectralField) -> VectorField:
    """Divergence-free field whose scalar curl is ``omega_hat``.

    Uses the stream function ``psi = -Lap^-1 omega``, ``u = (-d2 psi, d1 psi)``.
    The same map recovers ``b`` from ``j``.

    Raises:
        NonZeroMean: if the zero mode of ``omega_hat`` is not 0.
    """
    if spectral.has_mean(omega_hat):
        raise NonZeroMean(f"zero mode is {omega_hat.coeffs[0, 0]!r}")
    grid = omega_hat.grid
    psi = _inverse_laplacian(grid) * omega_hat.coeffs
    u1 = SpectralField(grid, -spectral.derivative_symbol(grid, 2) * psi)
    u2 = SpectralField(grid, spectral.derivative_symbol(grid, 1) * psi)
    return VectorField(u1, u2)


@functools.lru_cache(maxsize=None)
def _inverse_laplacian(grid: GridSpec) -> np.ndarray:
    ksq = grid.kmag**2
    ksq[0, 0] = 1.0
    out = -1.0 / ksq
    out[0, 0] = 0.0
    return out


def advect(v: VectorField, f: SpectralField) -> SpectralField:
    """Convective derivative ``v1 d1 f + v2 d2 f``, dealiased."""
    if v.grid != f.grid:
        raise GridMismatch("advecting field and scalar on different grids")
    return pointwise_product(v.comp1, partial_derivative(f, 1)) + pointwise_product(
        v.comp2, partial_derivative(f, 2)
    )


def stretching_term(u: VectorField, b: VectorField) -> SpectralField:
    """``T = 2 d1b1 (d1u2 + d2u1) + 2 d2u2 (d1b2 + d2b1)``, dealiased."""
    if u.grid != b.grid:
        raise GridMismatch("velocity and magnetic field on different grids")
    d1b1 = partial_derivative(b.comp1, 1)
    d2u2 = partial_derivative(u.comp2, 2)
    shear_u = partial_derivative(u.comp2, 1) + partial_derivative(u.comp1, 2)
    shear_b = partial_derivative(b.comp2, 1) + partial_derivative(b.comp1, 2)
    return 2.0 * (pointwise_product(d1b1, shear_u) + pointwise_product(d2u2, shear_b))


def rhs(state: MhdState, params: PhysParams) -> tuple[SpectralField, SpectralField]:
    """Time derivatives ``(d omega/dt, d j/dt)`` assembled from the field operations."""
    omega, j = state.omega_hat, state.j_hat
    u = velocity_from_vorticity(omega)
    b = velocity_from_vorticity(j)
    lin_w = params.nu * spectral.fractional_power(omega, 2 * params.alpha)
    lin_j = params.kappa * spectral.fractional_power(j, 2 * params.beta)
    domega = advect(b, j) - advect(u, omega) - lin_w
    dj = advect(b, omega) - advect(u, j) + stretching_term(u, b) - lin_j
    return _pin_mean(domega), _pin_mean(dj)


def _pin_mean(F: SpectralField) -> SpectralField:
    coeffs = F.coeffs.copy()
    coeffs[0, 0] = 0.0
    return SpectralField(F.grid, coeffs)


class MhdOperator:
    """Precomputed half-spectrum multipliers for fast stepping on one grid.

    Arrays handled here hold the ``k2 >= 0`` half of the coefficients, as
    produced by real FFTs.  ``linear_only`` drops the quadratic terms (used to
    check the integrating factor in isolation).
    """

    def __init__(self, grid: GridSpec, params: PhysParams, linear_only: bool = False):
        self.grid = grid
        self.params = params
        self.linear_only = linear_only
        n = grid.n
        m = n // 2 + 1
        self.shape = (n, m)
        k1 = grid.k1[:, :m]
        k2 = grid.k2[:, :m]
        kmag = grid.kmag[:, :m]
        self.ik1 = spectral.derivative_symbol(grid, 1)[:, :m].copy()
        self.ik2 = spectral.derivative_symbol(grid, 2)[:, :m].copy()
        self.mask = grid.dealias_mask[:, :m].copy()
        ksq = k1**2 + k2**2
        ksq[0, 0] = 1.0
        self.inv_lap = -1.0 / ksq
        self.inv_lap[0, 0] = 0.0
        self.decay_w = params.nu * spectral.power_symbol(grid, 2 * params.alpha)[:, :m]
        self.decay_j = params.kappa * spectral.power_symbol(grid, 2 * params.beta)[:, :m]
        self.decay_w[0, 0] = 0.0
        self.decay_j[0, 0] = 0.0
        self.kmag = kmag
        self._dt = None
        self._factors = None

    def nonlinear(self, w: np.ndarray, j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Quadratic terms of both equations, dealiased, zero mean."""
        if self.linear_only:
            return np.zeros_like(w), np.zeros_like(j)
        n = self.grid.n
        ik1, ik2 = self.ik1, self.ik2
        psi = self.inv_lap * w
        phi = self.inv_lap * j
        u1, u2 = -ik2 * psi, ik1 * psi
        b1, b2 = -ik2 * phi, ik1 * phi
        stack = np.stack(
            [
                u1, u2, b1, b2,
                ik1 * w, ik2 * w, ik1 * j, ik2 * j,
                ik1 * b1, ik2 * u2,
                ik1 * u2 + ik2 * u1,
                ik1 * b2 + ik2 * b1,
            ]
        )
        r = scipy.fft.irfft2(stack, s=(n, n), norm="forward", workers=spectral.fft_workers())
        u1r, u2r, b1r, b2r, wx, wy, jx, jy, d1b1, d2u2, su, sb = r
        # overflow is caught downstream as a non-finite state, so keep quiet here
        with np.errstate(over="ignore", invalid="ignore"):
            nw = b1r * jx + b2r * jy - u1r * wx - u2r * wy
            nj = b1r * wx + b2r * wy - u1r * jx - u2r * jy + 2.0 * (d1b1 * su + d2u2 * sb)
        out = scipy.fft.rfft2(np.stack([nw, nj]), norm="forward", workers=spectral.fft_workers())
        out *= self.mask
        out[:, 0, 0] = 0.0
        return out[0], out[1]

    def tendency(self, w: np.ndarray, j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        nw, nj = self.nonlinear(w, j)
        return nw - self.decay_w * w, nj - self.decay_j * j

    def _integrating_factors(self, dt: float):
        if self._dt != dt:
            self._factors = (
                np.exp(-self.decay_w * dt),
                np.exp(-self.decay_w * (0.5 * dt)),
                np.exp(-self.decay_j * dt),
                np.exp(-self.decay_j * (0.5 * dt)),
            )
            self._dt = dt
        return self._factors

    def advance(self, w: np.ndarray, j: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
        """One integrating-factor RK4 step of size ``dt``."""
        ew, ew2, ej, ej2 = self._integrating_factors(dt)
        h2 = 0.5 * dt
        a_w, a_j = self.nonlinear(w, j)
        b_w, b_j = self.nonlinear(ew2 * (w + h2 * a_w), ej2 * (j + h2 * a_j))
        wh, jh = ew2 * w, ej2 * j
        c_w, c_j = self.nonlinear(wh + h2 * b_w, jh + h2 * b_j)
        d_w, d_j = self.nonlinear(ew * w + dt * ew2 * c_w, ej * j + dt * ej2 * c_j)
        w_new = ew * w + (dt / 6.0) * (ew * a_w + 2.0 * ew2 * (b_w + c_w) + d_w)
        j_new = ej * j + (dt / 6.0) * (ej * a_j + 2.0 * ej2 * (b_j + c_j) + d_j)
        return w_new, j_new

    @functools.cached_property
    def _half_weights(self) -> np.ndarray:
        # interior k2 columns stand for themselves and their conjugates
        n = self.grid.n
        wts = np.full(self.shape, 2.0)
        wts[:, 0] = 1.0
        wts[:, n // 2] = 1.0
        ksq = self.kmag**2
        ksq[0, 0] = np.inf
        return wts / ksq

    def quadratic_invariants(self, w: np.ndarray, j: np.ndarray) -> dict:
        """Energy, its dissipation rate, cross helicity and mean-square potential.

        ``energy`` is ``||u||^2 + ||b||^2`` and ``dissipation`` its loss rate
        ``2 nu ||Lambda^alpha u||^2 + 2 kappa ||Lambda^beta b||^2``.
        ``potential`` is ``||Lambda^-2 j||^2``; ``magnetic_energy`` is
        ``||b||^2 = ||Lambda^-1 j||^2``.
        """
        area = spectral.TWO_PI**2
        wts = self._half_weights
        aw = w.real**2 + w.imag**2
        aj = j.real**2 + j.imag**2
        ksq = self.kmag**2
        ksq[0, 0] = 1.0
        return {
            "energy": area * float(np.sum(wts * (aw + aj))),
            "dissipation": 2.0 * area * float(np.sum(wts * (self.decay_w * aw + self.decay_j * aj))),
            "cross_helicity": area * float(np.sum(wts * (w * np.conj(j)).real)),
            "potential": area * float(np.sum(wts * aj / ksq)),
            "magnetic_energy": area * float(np.sum(wts * aj)),
        }

    def sup_speed(self, w: np.ndarray, j: np.ndarray) -> float:
        """``max|u| + max|b|`` on the grid."""
        n = self.grid.n
        psi = self.inv_lap * w
        phi = self.inv_lap * j
        stack = np.stack([-self.ik2 * psi, self.ik1 * psi, -self.ik2 * phi, self.ik1 * phi])
        u1, u2, b1, b2 = scipy.fft.irfft2(stack, s=(n, n), norm="forward", workers=spectral.fft_workers())
        return float(np.sqrt(np.max(u1 * u1 + u2 * u2)) + np.sqrt(np.max(b1 * b1 + b2 * b2)))


@functools.lru_cache(maxsize=32)
def operator_for(grid: GridSpec, params: PhysParams, linear_only: bool = False) -> MhdOperator:
    return MhdOperator(grid, params, linear_only)


def state_to_half(state: MhdState) -> tuple[np.ndarray, np.ndarray]:
    return spectral.to_half(state.omega_hat.coeffs), spectral.to_half(state.j_hat.coeffs)


def state_from_half(grid: GridSpec, w: np.ndarray, j: np.ndarray, time: float) -> MhdState:
    n = grid.n
    return MhdState(
        SpectralField(grid, spectral.from_half(w, n)),
        SpectralField(grid, spectral.from_half(j, n)),
        time,
    )


def step(state: MhdState, dt: float, params: PhysParams, linear_only: bool = False) -> MhdState:
    """Advance ``state`` by ``dt``.

    Raises:
        NonFinite: if any resulting coefficient is NaN or Inf; carries the
            time reached by the failed step.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    op = operator_for(state.grid, params, linear_only)
    w, j = state_to_half(state)
    w, j = op.advance(w, j, dt)
    t_new = state.time + dt
    if not (np.isfinite(w).all() and np.isfinite(j).all()):
        raise NonFinite(t_new)
    return state_from_half(state.grid, w, j, t_new)


def cfl_dt(state: MhdState, courant: float, dt_max: float = math.inf) -> float:
    """Advective CFL step ``courant * h / max(|u|_inf + |b|_inf, 1e-8)``, capped at ``dt_max``."""
    if not 0 < courant <= 1:
        raise ValueError(f"courant must lie in (0, 1], got {courant!r}")
    op = operator_for(state.grid, PhysParams(0.0, 0.0, 0.0, 0.0))
    speed = op.sup_speed(*state_to_half(state))
    return min(courant * state.grid.spacing / max(speed, CFL_SPEED_FLOOR), dt_max)


def kinetic_energy(state: MhdState) -> float:
    """``||u||^2_{L2}``."""
    return spectral.sobolev_seminorm(state.omega_hat, -1.0) ** 2


def magnetic_energy(state: MhdState) -> float:
    """``||b||^2_{L2}``."""
    return spectral.sobolev_seminorm(state.j_hat, -1.0) ** 2


def total_energy(state: MhdState) -> float:
    return kinetic_energy(state) + magnetic_energy(state)


def energy_dissipation_rate(state: MhdState, params: PhysParams) -> float:
    """``2 nu ||Lambda^alpha u||^2 + 2 kappa ||Lambda^beta b||^2`` (rate of loss of ``||u||^2 + ||b||^2``)."""
    du = spectral.sobolev_seminorm(state.omega_hat, params.alpha - 1.0) ** 2
    db = spectral.sobolev_seminorm(state.j_hat, params.beta - 1.0) ** 2
    return 2.0 * (params.nu * du + params.kappa * db)


def cross_helicity(state: MhdState) -> float:
    """``integral u.b dx`` via Parseval."""
    u, b = state.velocity(), state.magnetic()
    s = np.sum(u.comp1.coeffs * np.conj(b.comp1.coeffs) + u.comp2.coeffs * np.conj(b.comp2.coeffs))
    return float((spectral.TWO_PI**2) * s.real)


def mean_square_potential(state: MhdState) -> float:
    """``||a||^2_{L2}`` for the magnetic potential ``a`` with ``Lap a = j``."""
    return spectral.sobolev_seminorm(state.j_hat, -2.0) ** 2


IC_KINDS = ("taylor-green", "orszag-tang-like", "random-band")


def init_condition(kind: str, grid: GridSpec, seed: int = 0, amplitude: float = 1.0) -> MhdState:
    """Smooth, band-limited, mean-zero initial data.

    * ``taylor-green``: ``omega = 2A cos x1 cos x2``, ``j = 0``.
    * ``orszag-tang-like``: stream function ``A (cos x1 + cos x2)`` and magnetic
      potential ``A (cos 2x1 / 2 + cos x2)``.
    * ``random-band``: seeded Gaussian coefficients on ``1 <= |k| <= 4`` for
      each field, each scaled to L2 norm ``A``.
    """
    A = float(amplitude)
    if kind == "taylor-green":
        w = _cosine_field(grid, [((1, 1), A), ((1, -1), A)])
        j = SpectralField.zeros(grid)
    elif kind == "orszag-tang-like":
        w = _cosine_field(grid, [((1, 0), -A), ((0, 1), -A)])
        j = _cosine_field(grid, [((2, 0), -2.0 * A), ((0, 1), -A)])
    elif kind == "random-band":
        rng = np.random.default_rng(seed)
        fields = []
        for _ in range(2):
            F = spectral.random_band_field(grid, rng, 1.0, 4.0)
            norm = spectral.l2_norm(F)
            fields.append(F * (A / norm) if norm > 0 else F)
        w, j = fields
    else:
        raise ValueError(f"unknown initial condition {kind!r}; expected one of {IC_KINDS}")
    return MhdState(w, j, 0.0)


def _cosine_field(grid: GridSpec, terms) -> SpectralField:
    """Sum of ``amp * cos(k.x)`` terms, given as ``((k1, k2), amp)`` pairs."""
    n = grid.n
    c = np.zeros((n, n), dtype=np.complex128)
    for (k1, k2), amp in terms:
        c[k1 % n, k2 % n] += 0.5 * amp
        c[-k1 % n, -k2 % n] += 0.5 * amp
    return SpectralField(grid, c)


def normalize_energy(state: MhdState, energy: float) -> MhdState:
    """Rescale both fields by one factor so that ``||u||^2 + ||b||^2 = energy``."""
    current = total_energy(state)
    if current == 0:
        raise ValueError("cannot normalize a zero state")
    return state.scaled(math.sqrt(energy / current))
