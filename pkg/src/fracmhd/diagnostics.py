"""Monitored norms and functionals of a running simulation.

A :class:`DiagnosticsRecord` is one time sample.  Time integrals (the
dissipation terms of the two a priori bounds, the BKM integral and the
energy-law residual) are advanced by the trapezoid rule between consecutive
samples and carried in a :class:`RunningIntegrals` owned by the run loop.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from fracmhd import dynamics, spectral
from fracmhd.dynamics import MhdState, PhysParams
from fracmhd.errors import DegenerateInput
from fracmhd.spectral import SpectralField, inverse_transform, lp_norm, sobolev_seminorm

TAIL_FRACTION_LIMIT = 1e-3


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    energy_u: float
    energy_b: float
    enstrophy: float
    sq_current: float
    diss_omega: float
    diss_j: float
    lemma2_norm: float | None
    lemma2_diss: float | None
    omega_inf: float
    j_inf: float
    omega_lp: float
    bkm_integral: float
    lemma1_functional: float
    lemma2_functional: float | None
    energy_balance_residual: float
    spectral_tail_fraction: float
    grad_omega_sq: float
    grad_j_sq: float

    @property
    def energy(self) -> float:
        return self.energy_u + self.energy_b

    @property
    def is_finite(self) -> bool:
        return all(
            v is None or math.isfinite(v) for v in dataclasses.astuple(self)
        )


COLUMNS = tuple(f.name for f in dataclasses.fields(DiagnosticsRecord))


@dataclass
class RunningIntegrals:
    """Trapezoid accumulators carried between samples.

    ``last_*`` hold the integrands at the previous sample; ``None`` before the
    first sample.
    """

    t: float | None = None
    initial_energy: float | None = None
    last_lemma1_rate: float = 0.0
    last_lemma2_rate: float = 0.0
    last_bkm_rate: float = 0.0
    last_energy_rate: float = 0.0
    lemma1_integral: float = 0.0
    lemma2_integral: float = 0.0
    bkm_integral: float = 0.0
    energy_integral: float = 0.0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> RunningIntegrals:
        return cls(**data)


def spectral_tail_fraction(state: MhdState) -> float:
    """Share of ``||u||^2 + ||b||^2`` held by modes with ``max(|k1|, |k2|) > n/4``."""
    grid = state.grid
    ksq = grid.kmag**2
    ksq[0, 0] = 1.0
    density = (np.abs(state.omega_hat.coeffs) ** 2 + np.abs(state.j_hat.coeffs) ** 2) / ksq
    density[0, 0] = 0.0
    total = float(density.sum())
    if total == 0.0:
        return 0.0
    tail = np.maximum(np.abs(grid.k1), np.abs(grid.k2)) > grid.n / 4
    return float(density[tail].sum()) / total


def _grad_sq(F: SpectralField) -> float:
    return sobolev_seminorm(F, 1.0) ** 2


def sample(
    state: MhdState,
    params: PhysParams,
    acc: RunningIntegrals,
    lp_exponent: float = 4.0,
) -> DiagnosticsRecord:
    """Measure ``state`` and advance the accumulators in ``acc`` to ``state.time``.

    Lemma-2 quantities (``lemma2_*``) are ``None`` when ``alpha + beta - 1 <= 0``.
    """
    omega, j = state.omega_hat, state.j_hat
    energy_u = dynamics.kinetic_energy(state)
    energy_b = dynamics.magnetic_energy(state)
    enstrophy = sobolev_seminorm(omega, 0.0) ** 2
    sq_current = sobolev_seminorm(j, 0.0) ** 2
    diss_omega = sobolev_seminorm(omega, params.alpha) ** 2
    diss_j = sobolev_seminorm(j, params.beta) ** 2
    r = params.r
    if r > 0:
        lemma2_norm = sobolev_seminorm(j, r) ** 2
        lemma2_diss = sobolev_seminorm(j, params.beta + r) ** 2
    else:
        lemma2_norm = lemma2_diss = None
    w_real = inverse_transform(omega)
    j_real = inverse_transform(j)
    omega_inf = lp_norm(w_real, math.inf)
    j_inf = lp_norm(j_real, math.inf)
    omega_lp = lp_norm(w_real, lp_exponent)
    energy_rate = dynamics.energy_dissipation_rate(state, params)

    rates = {
        "lemma1": diss_omega + diss_j,
        "lemma2": lemma2_diss if lemma2_diss is not None else 0.0,
        "bkm": omega_inf + j_inf,
        "energy": energy_rate,
    }
    if acc.t is None:
        acc.initial_energy = energy_u + energy_b
    else:
        half_dt = 0.5 * (state.time - acc.t)
        acc.lemma1_integral += half_dt * (acc.last_lemma1_rate + rates["lemma1"])
        acc.lemma2_integral += half_dt * (acc.last_lemma2_rate + rates["lemma2"])
        acc.bkm_integral += half_dt * (acc.last_bkm_rate + rates["bkm"])
        acc.energy_integral += half_dt * (acc.last_energy_rate + rates["energy"])
    acc.t = state.time
    acc.last_lemma1_rate = rates["lemma1"]
    acc.last_lemma2_rate = rates["lemma2"]
    acc.last_bkm_rate = rates["bkm"]
    acc.last_energy_rate = rates["energy"]

    return DiagnosticsRecord(
        t=state.time,
        energy_u=energy_u,
        energy_b=energy_b,
        enstrophy=enstrophy,
        sq_current=sq_current,
        diss_omega=diss_omega,
        diss_j=diss_j,
        lemma2_norm=lemma2_norm,
        lemma2_diss=lemma2_diss,
        omega_inf=omega_inf,
        j_inf=j_inf,
        omega_lp=omega_lp,
        bkm_integral=acc.bkm_integral,
        lemma1_functional=enstrophy + sq_current + acc.lemma1_integral,
        lemma2_functional=None if lemma2_norm is None else lemma2_norm + acc.lemma2_integral,
        energy_balance_residual=energy_u + energy_b - acc.initial_energy + acc.energy_integral,
        spectral_tail_fraction=spectral_tail_fraction(state),
        grad_omega_sq=_grad_sq(omega),
        grad_j_sq=_grad_sq(j),
    )


def _format(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def records_to_csv(records) -> str:
    """RFC 4180 text: header of field names, one row per record, 17 significant digits."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(COLUMNS)
    for rec in records:
        writer.writerow([_format(getattr(rec, name)) for name in COLUMNS])
    return buf.getvalue()


def write_csv(records, path: str | Path) -> None:
    Path(path).write_bytes(records_to_csv(records).encode("utf-8"))


def read_csv(path: str | Path) -> list[dict]:
    """Parse a diagnostics CSV back into dicts of floats (``None`` for NA)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (None if v == "NA" else float(v)) for k, v in row.items()} for row in rows]


# -- inequality toolkit ------------------------------------------------------


def positivity_check(omega: SpectralField, s: float, p: int) -> float:
    """Grid quadrature of ``integral (Lambda^s omega) |omega|^(p-2) omega dx``.

    The integral is nonnegative for ``0 < s <= 2`` and ``p >= 2``.  Callers
    evaluate it at ``s = alpha`` and ``s = 2 alpha``.
    """
    w = inverse_transform(omega).values
    lw = inverse_transform(spectral.fractional_power(omega, s)).values
    integrand = lw * np.abs(w) ** (p - 2) * w
    return float(omega.grid.spacing**2 * integrand.sum())


def positivity_scale(omega: SpectralField, s: float, p: int) -> float:
    """Natural magnitude ``||omega||_p^(p-1) ||Lambda^s omega||_2`` of the positivity integral."""
    w = inverse_transform(omega)
    return lp_norm(w, p) ** (p - 1) * sobolev_seminorm(omega, s)


def _lambda_lp(f: SpectralField, s: float, p: float) -> float:
    return lp_norm(inverse_transform(spectral.fractional_power(f, s)), p)


def _grad_lp(f: SpectralField, p: float) -> float:
    g1 = inverse_transform(spectral.partial_derivative(f, 1)).values
    g2 = inverse_transform(spectral.partial_derivative(f, 2)).values
    return lp_norm(spectral.RealSamples(f.grid, np.hypot(g1, g2)), p)


def _gn_table(alpha: float, beta: float, r: float, p: float) -> dict:
    s = sobolev_seminorm
    q = 2.0 * p / (p - 1.0) if p and math.isfinite(p) and p > 1 else math.nan
    return {
        "lambda_alpha_L4_by_grad": (
            "||L^a f||_4 <= C ||f||^(1/2-a) ||grad f||^(1/2+a)",
            lambda f: _lambda_lp(f, alpha, 4),
            ((lambda f: s(f, 0.0), 0.5 - alpha), (lambda f: s(f, 1.0), 0.5 + alpha)),
            0 <= alpha <= 0.5,
            "requires 0 <= alpha <= 1/2",
        ),
        "L4_by_grad": (
            "||f||_4 <= C ||f||^(1/2) ||grad f||^(1/2)",
            lambda f: _lambda_lp(f, 0.0, 4),
            ((lambda f: s(f, 0.0), 0.5), (lambda f: s(f, 1.0), 0.5)),
            True,
            "",
        ),
        "L4_by_lambda_beta": (
            "||f||_4 <= C ||f||^(1-1/(2b)) ||L^b f||^(1/(2b))",
            lambda f: _lambda_lp(f, 0.0, 4),
            ((lambda f: s(f, 0.0), 1 - 1 / (2 * beta)), (lambda f: s(f, beta), 1 / (2 * beta))),
            beta >= 0.5,
            "requires beta >= 1/2",
        ),
        "lambda_alpha_L4_by_lambda_beta": (
            "||L^a f||_4 <= C ||f||^((2b-2a-1)/(2b)) ||L^b f||^((1+2a)/(2b))",
            lambda f: _lambda_lp(f, alpha, 4),
            (
                (lambda f: s(f, 0.0), (2 * beta - 2 * alpha - 1) / (2 * beta)),
                (lambda f: s(f, beta), (1 + 2 * alpha) / (2 * beta)),
            ),
            alpha >= 0 and 2 * beta - 2 * alpha - 1 >= 0,
            "requires alpha >= 0 and 2 beta - 2 alpha - 1 >= 0",
        ),
        "lambda_alpha_Linf_by_lambda_beta1": (
            "||L^a f||_inf <= C ||f||^((b-a)/(1+b)) ||L^(b+1) f||^((1+a)/(1+b))",
            lambda f: _lambda_lp(f, alpha, math.inf),
            (
                (lambda f: s(f, 0.0), (beta - alpha) / (1 + beta)),
                (lambda f: s(f, beta + 1), (1 + alpha) / (1 + beta)),
            ),
            0 <= alpha < beta,
            "requires 0 <= alpha < beta",
        ),
        "Linf_by_lambda_1r": (
            "||f||_inf <= C ||f||^(r/(1+r)) ||L^(1+r) f||^(1/(1+r))",
            lambda f: _lambda_lp(f, 0.0, math.inf),
            ((lambda f: s(f, 0.0), r / (1 + r)), (lambda f: s(f, 1 + r), 1 / (1 + r))),
            r > 0,
            "requires r = alpha + beta - 1 > 0",
        ),
        "grad_Linf_by_lambda_br1": (
            "||grad f||_inf <= C ||grad f||^((b+r-1)/(b+r)) ||L^(b+r+1) f||^(1/(b+r))",
            lambda f: _grad_lp(f, math.inf),
            (
                (lambda f: s(f, 1.0), (beta + r - 1) / (beta + r)),
                (lambda f: s(f, beta + r + 1), 1 / (beta + r)),
            ),
            r > 0 and beta + r > 1,
            "requires r > 0 and beta + r > 1",
        ),
        "lambda_2r_L2_by_lambda_br": (
            "||L^(2r) f||_2 <= C ||f||^((b-r)/(b+r)) ||L^(b+r) f||^(2r/(b+r))",
            lambda f: s(f, 2 * r),
            (
                (lambda f: s(f, 0.0), (beta - r) / (beta + r)),
                (lambda f: s(f, beta + r), 2 * r / (beta + r)),
            ),
            r > 0 and beta >= r,
            "requires r > 0 and beta >= r",
        ),
        "grad_Lq_by_lambda_alpha_grad": (
            "||grad f||_q <= C ||grad f||^(1-1/(p a)) ||L^a grad f||^(1/(p a)), 1/p + 2/q = 1",
            lambda f: _grad_lp(f, q),
            (
                (lambda f: s(f, 1.0), 1 - 1 / (p * alpha) if alpha > 0 else math.nan),
                (lambda f: s(f, 1.0 + alpha), 1 / (p * alpha) if alpha > 0 else math.nan),
            ),
            alpha > 0 and 1 / alpha < p < math.inf,
            "requires alpha > 0 and 1/alpha < p < inf",
        ),
    }


GN_IDS = tuple(_gn_table(0.25, 1.25, 0.5, 5.0))
GN_DESCRIPTIONS = {k: v[0] for k, v in _gn_table(0.25, 1.25, 0.5, 5.0).items()}


def gn_ratio(
    f: SpectralField,
    inequality_id: str,
    alpha: float = 0.25,
    beta: float = 1.25,
    p: float = 5.0,
    r: float | None = None,
) -> float:
    """Left side over the product of right-side factors for one interpolation bound.

    ``r`` defaults to ``alpha + beta - 1``; ``p`` is only used by
    ``grad_Lq_by_lambda_alpha_grad`` (with ``q = 2p/(p-1)``).  Since both
    sides have the same homogeneity, the ratio is invariant under ``f -> c f``.

    Raises:
        KeyError: unknown ``inequality_id``.
        ValueError: the exponents violate the inequality's side conditions.
        DegenerateInput: a right-side factor is zero.
    """
    if r is None:
        r = alpha + beta - 1.0
    table = _gn_table(float(alpha), float(beta), float(r), float(p))
    if inequality_id not in table:
        raise KeyError(f"unknown inequality {inequality_id!r}; known: {', '.join(table)}")
    _, lhs, factors, ok, condition = table[inequality_id]
    if not ok:
        raise ValueError(f"{inequality_id}: {condition}")
    denom = 1.0
    for norm, exponent in factors:
        value = norm(f)
        if value == 0.0:
            raise DegenerateInput(f"{inequality_id}: a right-hand-side norm vanishes")
        denom *= value**exponent
    return lhs(f) / denom


# -- parameter-plane classification -----------------------------------------

REGIONS = ("theorem1-new", "prior-wu", "prior-tyz", "open", "outside-all")


@dataclass(frozen=True)
class RegionVerdict:
    region: str
    detail: str

    def as_dict(self) -> dict:
        return {"region": self.region, "detail": self.detail}


def _exact(x: float) -> Fraction:
    # shortest decimal repr, so 0.2 means 1/5 and boundary tests are exact
    return Fraction(repr(float(x)))


def classify_region(alpha: float, beta: float) -> RegionVerdict:
    """Place ``(alpha, beta)`` on the global-regularity map.

    Conditions are tested in the order prior-tyz, prior-wu, theorem1-new,
    open, so the new region only reports points no earlier result covers.
    Arithmetic is exact on the decimal values of the inputs.
    """
    if not (math.isfinite(alpha) and math.isfinite(beta)) or alpha < 0 or beta < 0:
        return RegionVerdict("outside-all", "exponents must be finite and nonnegative")
    a, b = _exact(alpha), _exact(beta)
    half = Fraction(1, 2)
    if a >= half and b >= 1:
        return RegionVerdict("prior-tyz", "alpha >= 1/2, beta >= 1")
    if a < half and 2 * a + b > 2:
        return RegionVerdict("prior-tyz", "0 <= alpha < 1/2, 2 alpha + beta > 2")
    if a >= 2 and b == 0:
        return RegionVerdict("prior-tyz", "alpha >= 2, beta = 0")
    if a >= 1 and b > 0 and a + b >= 2:
        return RegionVerdict("prior-wu", "alpha >= 1, beta > 0, alpha + beta >= 2")
    if a < half and b >= 1 and 3 * a + 2 * b > 3:
        return RegionVerdict("theorem1-new", "0 <= alpha < 1/2, beta >= 1, 3 alpha + 2 beta > 3")
    if (a, b) in ((0, 1), (1, 0)):
        return RegionVerdict("open", "named open case (alpha, beta) = (%s, %s)" % (a, b))
    return RegionVerdict("outside-all", "no known global regularity condition holds")


def prior_wu(alpha: float, beta: float) -> bool:
    a, b = _exact(alpha), _exact(beta)
    return a >= 1 and b > 0 and a + b >= 2


def prior_tyz(alpha: float, beta: float) -> bool:
    a, b = _exact(alpha), _exact(beta)
    half = Fraction(1, 2)
    return (a >= half and b >= 1) or (0 <= a < half and 2 * a + b > 2) or (a >= 2 and b == 0)
