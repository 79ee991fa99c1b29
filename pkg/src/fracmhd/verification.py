"""Property suite behind ``fracmhd verify``.

Every check returns one or more :class:`PropertyResult` carrying the measured
quantity and the threshold it is held to.  Nothing here depends on wall-clock
time, so two runs of the suite produce identical reports.
"""

from __future__ import annotations

import itertools
import json
import math
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.integrate

from fracmhd import diagnostics, dynamics, harness, spectral
from fracmhd.dynamics import MhdState, PhysParams
from fracmhd.spectral import GridSpec, RealSamples, SpectralField


@dataclass(frozen=True)
class PropertyResult:
    name: str
    module: str
    measured: float
    threshold: float
    # "max": measured must not exceed threshold; "min": must not fall below it
    bound: str = "max"

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.measured):
            return False
        if self.bound == "max":
            return self.measured <= self.threshold
        return self.measured >= self.threshold

    @property
    def margin(self) -> float:
        if self.bound == "max":
            return self.threshold - self.measured
        return self.measured - self.threshold

    def line(self) -> str:
        op = "<=" if self.bound == "max" else ">="
        return (
            f"{'PASS' if self.passed else 'FAIL'}  {self.module:<13} {self.name:<34} "
            f"measured={self.measured:.6e} {op} {self.threshold:.1e}  margin={self.margin:+.3e}"
        )


# -- independent oracles ---------------------------------------------------------


def brute_force_product(F: np.ndarray, G: np.ndarray, n: int) -> np.ndarray:
    """Truncated convolution on the integer lattice, no FFTs and no wraparound.

    Both inputs and the output are restricted to ``3 max(|k1|, |k2|) <= n``.
    """
    kr = n // 3
    while 3 * kr > n:
        kr -= 1
    ks = range(-kr, kr + 1)
    out = np.zeros((n, n), dtype=np.complex128)
    for k1, k2 in itertools.product(ks, ks):
        acc = 0j
        for m1, m2 in itertools.product(ks, ks):
            d1, d2 = k1 - m1, k2 - m2
            if abs(d1) <= kr and abs(d2) <= kr:
                acc += F[d1 % n, d2 % n] * G[m1 % n, m2 % n]
        out[k1 % n, k2 % n] = acc
    return out


def _retained_random(grid: GridSpec, rng) -> SpectralField:
    # band-limiting done here with integer arithmetic, independent of dealias()
    n = grid.n
    k = np.rint(grid.k1).astype(int), np.rint(grid.k2).astype(int)
    keep = 3 * np.maximum(np.abs(k[0]), np.abs(k[1])) <= n
    raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return SpectralField(grid, spectral.hermitian_part(grid, np.where(keep, raw, 0.0)))


# -- spectral-core -----------------------------------------------------------------


def check_roundtrip(seed: int = 11) -> PropertyResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (8, 16, 32, 64):
        g = GridSpec(n)
        f = RealSamples(g, rng.standard_normal((n, n)))
        back = spectral.inverse_transform(spectral.forward_transform(f))
        worst = max(worst, float(np.max(np.abs(back.values - f.values))))
    return PropertyResult("roundtrip_max_abs", "spectral-core", worst, 1e-12)


def check_parseval(seed: int = 12, trials: int = 20) -> PropertyResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (16, 32, 64):
        g = GridSpec(n)
        for _ in range(trials):
            F = spectral.random_band_field(g, rng, 0.0, n / 3)
            f = spectral.inverse_transform(F).values
            quad = math.sqrt(g.spacing**2 * float(np.sum(f * f)))
            worst = max(worst, abs(spectral.l2_norm(F) - quad) / quad)
    return PropertyResult("parseval_rel", "spectral-core", worst, 1e-12)


def check_power_composition(seed: int = 13) -> PropertyResult:
    rng = np.random.default_rng(seed)
    g = GridSpec(32)
    worst = 0.0
    for s, t in ((0.5, 0.7), (-1.0, 2.0), (1.3, -0.4), (2.0, 2.0)):
        F = spectral.random_band_field(g, rng, 1.0, 10.0)
        a = spectral.fractional_power(spectral.fractional_power(F, s), t).coeffs
        b = spectral.fractional_power(F, s + t).coeffs
        worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(b))))
    return PropertyResult("power_composition_rel", "spectral-core", worst, 1e-13)


def check_convolution_oracle(seed: int = 14) -> PropertyResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (8, 16):
        g = GridSpec(n)
        for _ in range(3):
            F, G = _retained_random(g, rng), _retained_random(g, rng)
            fast = spectral.pointwise_product(F, G).coeffs
            slow = brute_force_product(F.coeffs, G.coeffs, n)
            worst = max(worst, float(np.max(np.abs(fast - slow))))
    return PropertyResult("convolution_oracle_max_abs", "spectral-core", worst, 1e-12)


def check_dealias_projection(seed: int = 15) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    g = GridSpec(32)
    growth = idem = 0.0
    for _ in range(10):
        F = spectral.random_band_field(g, rng, 0.0, 32.0)
        D = spectral.dealias(F)
        growth = max(growth, spectral.l2_norm(D) - spectral.l2_norm(F))
        idem = max(idem, float(np.max(np.abs(spectral.dealias(D).coeffs - D.coeffs))))
    return [
        PropertyResult("dealias_norm_growth", "spectral-core", growth, 0.0),
        PropertyResult("dealias_idempotence", "spectral-core", idem, 0.0),
    ]


# -- mhd-dynamics ------------------------------------------------------------------


def _evolve_invariants(state: MhdState, params: PhysParams, dt: float, t_end: float):
    op = dynamics.operator_for(state.grid, params)
    w, j = dynamics.state_to_half(state)
    steps = int(round(t_end / dt))
    series = [op.quadratic_invariants(w, j)]
    for _ in range(steps):
        w, j = op.advance(w, j, dt)
        series.append(op.quadratic_invariants(w, j))
    times = np.arange(steps + 1) * dt
    return times, {k: np.array([q[k] for q in series]) for k in series[0]}


def energy_balance_residual(
    n: int = 128,
    alpha: float = 0.4,
    beta: float = 1.2,
    dt: float = 1e-3,
    t_end: float = 1.0,
) -> float:
    """Max over time of ``|E(t) - E(0) + int_0^t D| / E(0)`` with ``E = ||u||^2 + ||b||^2``.

    Orszag-Tang-like data at unit energy.  The dissipation integral uses
    cumulative Simpson quadrature over every step.
    """
    grid = GridSpec(n)
    state = dynamics.normalize_energy(dynamics.init_condition("orszag-tang-like", grid), 1.0)
    times, q = _evolve_invariants(state, PhysParams(alpha, beta), dt, t_end)
    lost = scipy.integrate.cumulative_simpson(q["dissipation"], x=times, initial=0.0)
    return float(np.max(np.abs(q["energy"] - q["energy"][0] + lost)) / q["energy"][0])


IDEAL_INVARIANTS = ("energy", "cross_helicity", "potential")


def ideal_invariant_drift(
    n: int = 128,
    dt: float = 5e-4,
    t_end: float = 1.0,
    keys=IDEAL_INVARIANTS,
) -> dict:
    """Max relative drift of quadratic quantities with ``nu = kappa = 0``.

    The default ``keys`` are the conserved ones: energy, cross helicity and
    mean-square potential.  ``"magnetic_energy"`` may be added for comparison;
    it is not conserved since energy moves between ``u`` and ``b``.
    """
    grid = GridSpec(n)
    state = dynamics.init_condition("orszag-tang-like", grid, amplitude=1.0)
    _, q = _evolve_invariants(state, PhysParams(0.0, 0.0, 0.0, 0.0), dt, t_end)
    out = {}
    for key in keys:
        v = q[key]
        out[key] = float(np.max(np.abs(v - v[0])) / abs(v[0]))
    return out


def integrator_order(
    n: int = 32,
    dts=(4e-3, 2e-3, 1e-3),
    dt_ref: float = 2.5e-4,
    t_end: float = 0.5,
) -> list[float]:
    """Observed convergence orders between consecutive ``dts`` against a fine reference."""
    grid = GridSpec(n)
    params = PhysParams(0.4, 1.2)
    state = dynamics.init_condition("orszag-tang-like", grid, amplitude=1.0)
    op = dynamics.operator_for(grid, params)

    def final(dt):
        w, j = dynamics.state_to_half(state)
        for _ in range(int(round(t_end / dt))):
            w, j = op.advance(w, j, dt)
        return np.concatenate([w.ravel(), j.ravel()])

    ref = final(dt_ref)
    errs = [float(np.max(np.abs(final(dt) - ref))) for dt in dts]
    return [math.log(e0 / e1) / math.log(d0 / d1) for e0, e1, d0, d1 in zip(errs, errs[1:], dts, dts[1:])]


def check_energy_balance() -> PropertyResult:
    return PropertyResult("energy_balance_rel", "mhd-dynamics", energy_balance_residual(), 1e-6)


def check_ideal_invariants() -> list[PropertyResult]:
    drift = ideal_invariant_drift()
    return [
        PropertyResult(f"ideal_{k}_drift", "mhd-dynamics", v, 1e-8) for k, v in drift.items()
    ]


def check_integrator_order() -> PropertyResult:
    return PropertyResult("integrator_order", "mhd-dynamics", min(integrator_order()), 3.8, "min")


def check_symmetry_preservation(steps: int = 50) -> PropertyResult:
    grid = GridSpec(32)
    params = PhysParams(0.3, 1.1)
    state = dynamics.init_condition("random-band", grid, seed=5, amplitude=3.0)
    worst = state.symmetry_defect()
    for _ in range(steps):
        state = dynamics.step(state, 2e-3, params)
        worst = max(worst, state.symmetry_defect())
    return PropertyResult("symmetry_defect", "mhd-dynamics", worst, 1e-13)


def check_decoupling(steps: int = 100) -> PropertyResult:
    grid = GridSpec(32)
    params = PhysParams(0.3, 1.1)
    w = dynamics.init_condition("random-band", grid, seed=6, amplitude=2.0).omega_hat
    state = MhdState(w, SpectralField.zeros(grid))
    worst = 0.0
    for _ in range(steps):
        state = dynamics.step(state, 5e-3, params)
        worst = max(worst, float(np.max(np.abs(state.j_hat.coeffs))))
    return PropertyResult("decoupled_current_max", "mhd-dynamics", worst, 0.0)


def check_monotone_dissipation(steps: int = 100) -> PropertyResult:
    grid = GridSpec(32)
    params = PhysParams(0.3, 1.1)
    state = dynamics.init_condition("random-band", grid, seed=7, amplitude=4.0)
    op = dynamics.operator_for(grid, params)
    w, j = dynamics.state_to_half(state)
    last = op.quadratic_invariants(w, j)["energy"]
    worst_increase = -math.inf
    for _ in range(steps):
        w, j = op.advance(w, j, 5e-3)
        e = op.quadratic_invariants(w, j)["energy"]
        worst_increase = max(worst_increase, e - last)
        last = e
    return PropertyResult("energy_step_increase", "mhd-dynamics", worst_increase, 0.0)


# -- diagnostics -------------------------------------------------------------------


def _diagnostic_series() -> list[diagnostics.DiagnosticsRecord]:
    grid = GridSpec(32)
    params = PhysParams(0.3, 1.2)
    state = dynamics.init_condition("random-band", grid, seed=8, amplitude=3.0)
    acc = diagnostics.RunningIntegrals()
    records = [diagnostics.sample(state, params, acc)]
    for _ in range(20):
        for _ in range(5):
            state = dynamics.step(state, 4e-3, params)
        records.append(diagnostics.sample(state, params, acc))
    return records


def check_diagnostic_series() -> list[PropertyResult]:
    recs = _diagnostic_series()
    e = [r.energy for r in recs]
    energy_rise = max((b - a) / e[0] for a, b in zip(e, e[1:]))
    bkm_drop = max(a.bkm_integral - b.bkm_integral for a, b in zip(recs, recs[1:]))
    # bookkeeping: each functional increment equals the trapezoid area of its rate
    book = 0.0
    for a, b in zip(recs, recs[1:]):
        area = 0.5 * (b.t - a.t) * (a.diss_omega + a.diss_j + b.diss_omega + b.diss_j)
        predicted = b.enstrophy + b.sq_current - a.enstrophy - a.sq_current + area
        book = max(book, abs((b.lemma1_functional - a.lemma1_functional) - predicted) / b.lemma1_functional)
    return [
        PropertyResult("sample_energy_rise_rel", "diagnostics", energy_rise, 1e-10),
        PropertyResult("bkm_decrease", "diagnostics", bkm_drop, 0.0),
        PropertyResult("lemma1_bookkeeping_rel", "diagnostics", book, 1e-13),
    ]


def positivity_ensemble(
    fields: int = 1000,
    exponents=(0.2, 0.6, 0.98),
    powers=(4, 6),
    seed: int = 2024,
    n: int = 32,
) -> tuple[float, int]:
    """Most negative scaled positivity integral and the number of violations below ``-1e-10``."""
    grid = GridSpec(n)
    rng = np.random.default_rng(seed)
    worst, violations = math.inf, 0
    for _ in range(fields):
        F = spectral.random_band_field(grid, rng, 1.0, 4.0)
        for s in exponents:
            for p in powers:
                value = diagnostics.positivity_check(F, s, p)
                scaled = value / diagnostics.positivity_scale(F, s, p)
                worst = min(worst, scaled)
                violations += scaled < -1e-10
    return worst, violations


def check_positivity() -> list[PropertyResult]:
    worst, violations = positivity_ensemble()
    return [
        PropertyResult("positivity_min_scaled", "diagnostics", worst, -1e-10, "min"),
        PropertyResult("positivity_violations", "diagnostics", float(violations), 0.0),
    ]


def check_gn_homogeneity(seed: int = 16) -> PropertyResult:
    rng = np.random.default_rng(seed)
    grid = GridSpec(64)
    worst = 0.0
    for _ in range(5):
        F = spectral.random_band_field(grid, rng, 1.0, 8.0)
        for gid in diagnostics.GN_IDS:
            base = diagnostics.gn_ratio(F, gid)
            for c in (0.1, 3.0, 100.0):
                worst = max(worst, abs(diagnostics.gn_ratio(F * c, gid) - base) / base)
    return PropertyResult("gn_amplitude_invariance_rel", "diagnostics", worst, 1e-10)


def check_gn_single_mode() -> PropertyResult:
    g = GridSpec(64)
    f = spectral.forward_transform(spectral.sample_field(g, lambda x1, x2: np.cos(x1)))
    exact = (1.5 * math.pi**2) ** 0.25 / (math.pi * math.sqrt(2.0))
    err = abs(diagnostics.gn_ratio(f, "L4_by_grad") - exact) / exact
    return PropertyResult("gn_single_mode_rel", "diagnostics", err, 1e-12)


def gn_ensemble_envelope(fields: int = 200, seed: int = 17, n: int = 64) -> dict:
    """Per-id ratio of the ensemble maximum to the single-mode ``cos x1`` value."""
    g = GridSpec(n)
    mode = spectral.forward_transform(spectral.sample_field(g, lambda x1, x2: np.cos(x1)))
    rng = np.random.default_rng(seed)
    ensemble = [spectral.random_band_field(g, rng, 1.0, 8.0) for _ in range(fields)]
    return {
        gid: max(diagnostics.gn_ratio(F, gid) for F in ensemble) / diagnostics.gn_ratio(mode, gid)
        for gid in diagnostics.GN_IDS
    }


def check_gn_envelope() -> PropertyResult:
    worst = max(gn_ensemble_envelope().values())
    return PropertyResult("gn_ensemble_over_single_mode", "diagnostics", worst, 10.0)


def check_region_classifier() -> PropertyResult:
    values = [i / 10 for i in range(21)]
    mismatches = 0
    for a, b in itertools.product(values, values):
        first = diagnostics.classify_region(a, b)
        mismatches += first != diagnostics.classify_region(a, b)
        mismatches += first.region not in diagnostics.REGIONS
    return PropertyResult("region_classifier_inconsistency", "diagnostics", float(mismatches), 0.0)


# -- cli-harness -------------------------------------------------------------------


def _small_config(out: Path, **overrides) -> dict:
    cfg = {
        "grid_n": 32,
        "alpha": 0.25,
        "beta": 1.25,
        "t_end": 0.2,
        "dt": 0.01,
        "ic": {"kind": "random-band", "seed": 3, "amplitude": 2.0},
        "diag_interval": 0.05,
        "output_dir": str(out),
    }
    cfg.update(overrides)
    return cfg


def check_run_determinism() -> PropertyResult:
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        harness.run(_small_config(tmp / "a"))
        harness.run(_small_config(tmp / "b"))
        same = all(
            (tmp / "a" / name).read_bytes() == (tmp / "b" / name).read_bytes()
            for name in ("diagnostics.csv", "checkpoint_final.bin", "checkpoint_final.json")
        )
        summaries = []
        for side in "ab":
            doc = json.loads((tmp / side / "summary.json").read_text())
            doc.pop("wall_clock_seconds")
            summaries.append(doc)
        same = same and summaries[0] == summaries[1]
    return PropertyResult("run_output_mismatch", "cli-harness", 0.0 if same else 1.0, 0.0)


def check_checkpoint_resume() -> PropertyResult:
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        full = harness.run(_small_config(tmp / "full", checkpoint_interval=0.1)).state
        harness.run(_small_config(tmp / "first", t_end=0.1))
        resumed = harness.run(
            _small_config(tmp / "second", resume_from=str(tmp / "first" / "checkpoint_final.json"))
        ).state
    diff = max(
        float(np.max(np.abs(full.omega_hat.coeffs - resumed.omega_hat.coeffs))),
        float(np.max(np.abs(full.j_hat.coeffs - resumed.j_hat.coeffs))),
    )
    return PropertyResult("checkpoint_resume_max_abs", "cli-harness", diff, 1e-12)


CHECKS = {
    "roundtrip": check_roundtrip,
    "parseval": check_parseval,
    "power_composition": check_power_composition,
    "convolution_oracle": check_convolution_oracle,
    "dealias_projection": check_dealias_projection,
    "symmetry_preservation": check_symmetry_preservation,
    "decoupling": check_decoupling,
    "monotone_dissipation": check_monotone_dissipation,
    "integrator_order": check_integrator_order,
    "energy_balance": check_energy_balance,
    "ideal_invariants": check_ideal_invariants,
    "diagnostic_series": check_diagnostic_series,
    "positivity": check_positivity,
    "gn_homogeneity": check_gn_homogeneity,
    "gn_single_mode": check_gn_single_mode,
    "gn_envelope": check_gn_envelope,
    "region_classifier": check_region_classifier,
    "run_determinism": check_run_determinism,
    "checkpoint_resume": check_checkpoint_resume,
}


def verify(name_filter: str | None = None) -> list[PropertyResult]:
    """Run every check whose name contains ``name_filter`` (all if ``None``)."""
    results: list[PropertyResult] = []
    for name, check in CHECKS.items():
        if name_filter and name_filter not in name:
            continue
        out = check()
        results.extend(out if isinstance(out, list) else [out])
    return results
