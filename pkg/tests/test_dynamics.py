import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracmhd import checkpoint, dynamics, spectral
from fracmhd.dynamics import MhdState, PhysParams, VectorField
from fracmhd.errors import GridMismatch, NonFinite, NonZeroMean
from fracmhd.spectral import GridSpec, SpectralField


def sampled(grid, func):
    return spectral.forward_transform(spectral.sample_field(grid, func))


def vector(grid, f1, f2):
    return VectorField(sampled(grid, f1), sampled(grid, f2))


def embed(F: SpectralField, n: int) -> SpectralField:
    """Same trigonometric polynomial on a finer grid (zero padding)."""
    m = F.grid.n
    k = spectral.wavenumbers(m).astype(int)
    out = np.zeros((n, n), dtype=complex)
    for a, ka in enumerate(k):
        for b, kb in enumerate(k):
            out[ka % n, kb % n] = F.coeffs[a, b]
    return SpectralField(GridSpec(n), out)


def max_abs(F, G):
    return float(np.max(np.abs(F.coeffs - G.coeffs)))


class TestPhysParams:
    def test_default_convention(self):
        p = PhysParams(0.5, 1.2)
        assert (p.nu, p.kappa) == (1.0, 1.0)
        p0 = PhysParams(0.0, 1.6)
        assert (p0.nu, p0.kappa) == (0.0, 1.0)

    def test_override_and_r(self):
        p = PhysParams(0.25, 1.25, nu=0.1, kappa=0.2)
        assert (p.nu, p.kappa) == (0.1, 0.2)
        assert p.r == pytest.approx(0.5)

    @pytest.mark.parametrize("bad", [dict(alpha=-0.1, beta=1), dict(alpha=0.1, beta=math.nan),
                                     dict(alpha=0.1, beta=1, nu=-1)])
    def test_rejects_invalid(self, bad):
        with pytest.raises(ValueError):
            PhysParams(**bad)


class TestBiotSavart:
    def test_cosine_vorticity(self):
        g = GridSpec(32)
        u = dynamics.velocity_from_vorticity(sampled(g, lambda x1, x2: np.cos(x1)))
        x1, _ = g.coordinates
        assert np.max(np.abs(spectral.inverse_transform(u.comp1).values)) < 1e-15
        assert np.max(np.abs(spectral.inverse_transform(u.comp2).values - np.sin(x1))) < 1e-15

    def test_zero(self):
        u = dynamics.velocity_from_vorticity(SpectralField.zeros(GridSpec(16)))
        assert not u.comp1.coeffs.any() and not u.comp2.coeffs.any()

    def test_mean_rejected(self):
        g = GridSpec(16)
        with pytest.raises(NonZeroMean):
            dynamics.velocity_from_vorticity(sampled(g, lambda x1, x2: 1.0 + np.cos(x1)))

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**16))
    def test_inversion(self, seed):
        w = spectral.random_band_field(GridSpec(32), np.random.default_rng(seed), 1.0, 10.0)
        u = dynamics.velocity_from_vorticity(w)
        assert max_abs(u.curl(), w) <= 1e-12 * np.max(np.abs(w.coeffs))
        assert np.max(np.abs(u.divergence().coeffs)) <= 1e-13


class TestStretching:
    def test_single_term_example(self):
        g = GridSpec(32)
        b = vector(g, lambda x1, x2: -np.sin(x1) * np.cos(x2), lambda x1, x2: np.cos(x1) * np.sin(x2))
        u = vector(g, lambda x1, x2: np.sin(x2), lambda x1, x2: 0 * x1)
        T = spectral.inverse_transform(dynamics.stretching_term(u, b)).values
        x1, x2 = g.coordinates
        assert np.max(np.abs(T + 2 * np.cos(x1) * np.cos(x2) ** 2)) < 1e-14

    def test_vanishes_with_zero_factor(self):
        g = GridSpec(16)
        w = spectral.random_band_field(g, np.random.default_rng(0), 1.0, 4.0)
        u = dynamics.velocity_from_vorticity(w)
        zero = VectorField(SpectralField.zeros(g), SpectralField.zeros(g))
        assert not dynamics.stretching_term(u, zero).coeffs.any()
        assert not dynamics.stretching_term(zero, u).coeffs.any()

    def test_grid_mismatch(self):
        u = dynamics.velocity_from_vorticity(SpectralField.zeros(GridSpec(16)))
        b = dynamics.velocity_from_vorticity(SpectralField.zeros(GridSpec(32)))
        with pytest.raises(GridMismatch):
            dynamics.stretching_term(u, b)

    def test_finite_difference_order(self):
        rng = np.random.default_rng(7)
        coarse = GridSpec(16)
        psi_w = spectral.random_band_field(coarse, rng, 1.0, 3.0)
        psi_j = spectral.random_band_field(coarse, rng, 1.0, 3.0)

        def fd_error(n):
            g = GridSpec(n)
            u = dynamics.velocity_from_vorticity(embed(psi_w, n))
            b = dynamics.velocity_from_vorticity(embed(psi_j, n))
            exact = spectral.inverse_transform(dynamics.stretching_term(u, b)).values
            h = g.spacing
            real = [spectral.inverse_transform(c).values for c in (u.comp1, u.comp2, b.comp1, b.comp2)]

            def d(f, axis):
                return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2 * h)

            u1, u2, b1, b2 = real
            T = 2 * d(b1, 0) * (d(u2, 0) + d(u1, 1)) + 2 * d(u2, 1) * (d(b2, 0) + d(b1, 1))
            return np.max(np.abs(T - exact))

        errs = [fd_error(n) for n in (32, 64, 128)]
        orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
        assert min(orders) >= 1.9


class TestAdvect:
    def test_example(self):
        g = GridSpec(32)
        v = vector(g, lambda x1, x2: 0 * x1, lambda x1, x2: np.sin(x1))
        out = spectral.inverse_transform(dynamics.advect(v, sampled(g, lambda x1, x2: np.cos(x2)))).values
        x1, x2 = g.coordinates
        assert np.max(np.abs(out + np.sin(x1) * np.sin(x2))) < 1e-14

    def test_zero_velocity(self):
        g = GridSpec(16)
        zero = VectorField(SpectralField.zeros(g), SpectralField.zeros(g))
        assert not dynamics.advect(zero, sampled(g, lambda x1, x2: np.cos(3 * x1))).coeffs.any()

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**16))
    def test_divergence_form(self, seed):
        g = GridSpec(32)
        rng = np.random.default_rng(seed)
        w = spectral.dealias(spectral.random_band_field(g, rng, 1.0, 16.0))
        f = spectral.dealias(spectral.random_band_field(g, rng, 1.0, 16.0))
        v = dynamics.velocity_from_vorticity(w)
        conv = dynamics.advect(v, f)
        div = spectral.partial_derivative(spectral.pointwise_product(v.comp1, f), 1) + \
            spectral.partial_derivative(spectral.pointwise_product(v.comp2, f), 2)
        assert max_abs(conv, div) <= 1e-11


class TestRhs:
    def test_euler_reduction(self):
        g = GridSpec(32)
        w = spectral.random_band_field(g, np.random.default_rng(1), 1.0, 6.0)
        state = MhdState(w, SpectralField.zeros(g))
        dw, dj = dynamics.rhs(state, PhysParams(0.0, 1.0, nu=0.0))
        expected = -dynamics.advect(dynamics.velocity_from_vorticity(w), w)
        assert max_abs(dw, expected) < 1e-14
        assert not dj.coeffs.any()

    def test_single_mode_dissipation(self):
        g = GridSpec(32)
        w = sampled(g, lambda x1, x2: np.cos(x1))
        dw, _ = dynamics.rhs(MhdState(w, SpectralField.zeros(g)), PhysParams(1.0, 1.0))
        assert max_abs(dw, -w) < 1e-14

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 2**16), alpha=st.floats(0.0, 1.5), beta=st.floats(0.5, 2.0))
    def test_energy_balance_identity(self, seed, alpha, beta):
        g = GridSpec(32)
        state = dynamics.init_condition("random-band", g, seed=seed, amplitude=0.5)
        params = PhysParams(alpha, beta)
        dw, dj = dynamics.rhs(state, params)
        ksq = g.kmag**2
        ksq[0, 0] = np.inf
        weight = (2 * math.pi) ** 2 / ksq
        dEdt = 2 * np.sum(weight * (dw.coeffs * np.conj(state.omega_hat.coeffs)
                                    + dj.coeffs * np.conj(state.j_hat.coeffs))).real
        expected = -dynamics.energy_dissipation_rate(state, params)
        assert abs(dEdt - expected) <= 1e-12 * abs(expected)

    def test_kernel_matches_composed_rhs(self):
        g = GridSpec(32)
        params = PhysParams(0.3, 1.1)
        state = dynamics.init_condition("random-band", g, seed=2, amplitude=2.0)
        dw, dj = dynamics.rhs(state, params)
        w, j = dynamics.state_to_half(state)
        fw, fj = dynamics.operator_for(g, params).tendency(w, j)
        assert np.max(np.abs(fw - spectral.to_half(dw.coeffs))) < 1e-13
        assert np.max(np.abs(fj - spectral.to_half(dj.coeffs))) < 1e-13


class TestStep:
    def test_linear_only_is_exact(self):
        g = GridSpec(32)
        params = PhysParams(0.7, 1.3, nu=0.5, kappa=2.0)
        state = dynamics.init_condition("random-band", g, seed=3)
        dt = 0.05
        out = dynamics.step(state, dt, params, linear_only=True)
        k = g.kmag
        ew = np.exp(-params.nu * k ** (2 * params.alpha) * dt)
        ej = np.exp(-params.kappa * k ** (2 * params.beta) * dt)
        assert np.allclose(out.omega_hat.coeffs, ew * state.omega_hat.coeffs, rtol=1e-14, atol=1e-16)
        assert np.allclose(out.j_hat.coeffs, ej * state.j_hat.coeffs, rtol=1e-14, atol=1e-16)
        assert out.time == dt

    def test_consistency_with_rhs(self):
        g = GridSpec(32)
        params = PhysParams(0.4, 1.2)
        state = dynamics.init_condition("orszag-tang-like", g)
        dw, dj = dynamics.rhs(state, params)

        def err(dt):
            s = dynamics.step(state, dt, params)
            return max(
                max_abs((s.omega_hat - state.omega_hat) * (1 / dt), dw),
                max_abs((s.j_hat - state.j_hat) * (1 / dt), dj),
            )

        errs = [err(dt) for dt in (1e-2, 5e-3, 2.5e-3)]
        orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
        assert min(orders) >= 0.99

    def test_preserves_symmetry(self):
        g = GridSpec(32)
        state = dynamics.init_condition("random-band", g, seed=4, amplitude=3.0)
        for _ in range(20):
            state = dynamics.step(state, 5e-3, PhysParams(0.2, 1.1))
            assert state.symmetry_defect() <= 1e-13

    def test_decoupled_current_stays_zero(self):
        g = GridSpec(32)
        w = dynamics.init_condition("taylor-green", g).omega_hat
        w = w + spectral.random_band_field(g, np.random.default_rng(5), 1.0, 4.0)
        state = MhdState(w, SpectralField.zeros(g))
        for _ in range(100):
            state = dynamics.step(state, 5e-3, PhysParams(0.5, 1.0))
        assert not state.j_hat.coeffs.any()

    def test_non_finite_carries_time(self):
        g = GridSpec(16)
        state = dynamics.init_condition("random-band", g, seed=1, amplitude=1e160)
        with pytest.raises(NonFinite) as info:
            dynamics.step(state, 0.1, PhysParams(0.0, 1.0))
        assert info.value.time == pytest.approx(0.1)

    def test_energy_non_increasing(self):
        g = GridSpec(32)
        params = PhysParams(0.3, 1.2)
        state = dynamics.init_condition("orszag-tang-like", g, amplitude=2.0)
        last = dynamics.total_energy(state)
        for _ in range(50):
            state = dynamics.step(state, 5e-3, params)
            e = dynamics.total_energy(state)
            assert e <= last
            last = e


class TestCfl:
    def test_unit_speed(self):
        g = GridSpec(64)
        state = MhdState(sampled(g, lambda x1, x2: np.cos(x1)), SpectralField.zeros(g))
        assert dynamics.cfl_dt(state, 0.5) == pytest.approx(0.5 * (2 * math.pi / 64), rel=1e-12)

    def test_zero_state_is_capped(self):
        g = GridSpec(16)
        state = MhdState(SpectralField.zeros(g), SpectralField.zeros(g))
        assert dynamics.cfl_dt(state, 0.5, dt_max=0.01) == 0.01
        assert dynamics.cfl_dt(state, 0.5) == pytest.approx(0.5 * g.spacing / dynamics.CFL_SPEED_FLOOR)

    def test_homogeneity(self):
        state = dynamics.init_condition("orszag-tang-like", GridSpec(32))
        assert dynamics.cfl_dt(state.scaled(2.0), 0.4) == pytest.approx(dynamics.cfl_dt(state, 0.4) / 2)

    def test_courant_range(self):
        state = dynamics.init_condition("orszag-tang-like", GridSpec(16))
        with pytest.raises(ValueError):
            dynamics.cfl_dt(state, 1.5)


class TestInitialConditions:
    def test_taylor_green_norm(self):
        g = GridSpec(32)
        state = dynamics.init_condition("taylor-green", g)
        assert spectral.l2_norm(state.omega_hat) == pytest.approx(2 * math.pi, rel=1e-15)
        x1, x2 = g.coordinates
        w = spectral.inverse_transform(state.omega_hat).values
        assert np.max(np.abs(w - 2 * np.cos(x1) * np.cos(x2))) < 1e-14
        assert not state.j_hat.coeffs.any()

    def test_orszag_tang_fields(self):
        g = GridSpec(32)
        state = dynamics.init_condition("orszag-tang-like", g, amplitude=1.5)
        x1, x2 = g.coordinates
        w = spectral.inverse_transform(state.omega_hat).values
        j = spectral.inverse_transform(state.j_hat).values
        assert np.max(np.abs(w + 1.5 * (np.cos(x1) + np.cos(x2)))) < 1e-14
        assert np.max(np.abs(j + 1.5 * (2 * np.cos(2 * x1) + np.cos(x2)))) < 1e-14

    def test_random_band_seeded(self):
        g = GridSpec(32)
        a = dynamics.init_condition("random-band", g, seed=9, amplitude=2.0)
        b = dynamics.init_condition("random-band", g, seed=9, amplitude=2.0)
        c = dynamics.init_condition("random-band", g, seed=10, amplitude=2.0)
        assert np.array_equal(a.omega_hat.coeffs, b.omega_hat.coeffs)
        assert not np.array_equal(a.omega_hat.coeffs, c.omega_hat.coeffs)
        assert spectral.l2_norm(a.j_hat) == pytest.approx(2.0)
        k = g.kmag[np.abs(a.omega_hat.coeffs) > 0]
        assert k.min() >= 1 and k.max() <= 4
        assert a.symmetry_defect() == 0.0

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            dynamics.init_condition("vortex-sheet", GridSpec(16))

    def test_normalize_energy(self):
        state = dynamics.normalize_energy(dynamics.init_condition("orszag-tang-like", GridSpec(32)), 1.0)
        assert dynamics.total_energy(state) == pytest.approx(1.0, rel=1e-14)


class TestEnergyFunctionals:
    def test_energy_of_cosine_vorticity(self):
        g = GridSpec(16)
        state = MhdState(sampled(g, lambda x1, x2: np.cos(x1)), SpectralField.zeros(g))
        # u = (0, sin x1), so ||u||^2 = 2 pi^2
        assert dynamics.kinetic_energy(state) == pytest.approx(2 * math.pi**2, rel=1e-14)
        assert dynamics.magnetic_energy(state) == 0.0

    def test_cross_helicity_matches_quadrature(self):
        g = GridSpec(32)
        state = dynamics.init_condition("random-band", g, seed=3)
        u, b = state.velocity(), state.magnetic()
        real = [spectral.inverse_transform(c).values for c in (u.comp1, u.comp2, b.comp1, b.comp2)]
        quad = g.spacing**2 * np.sum(real[0] * real[2] + real[1] * real[3])
        assert dynamics.cross_helicity(state) == pytest.approx(quad, rel=1e-12)

    def test_kernel_invariants_match_field_functionals(self):
        g = GridSpec(32)
        params = PhysParams(0.3, 1.4)
        state = dynamics.init_condition("random-band", g, seed=8)
        q = dynamics.operator_for(g, params).quadratic_invariants(*dynamics.state_to_half(state))
        assert q["energy"] == pytest.approx(dynamics.total_energy(state), rel=1e-13)
        assert q["dissipation"] == pytest.approx(dynamics.energy_dissipation_rate(state, params), rel=1e-13)
        assert q["cross_helicity"] == pytest.approx(dynamics.cross_helicity(state), rel=1e-13)
        assert q["potential"] == pytest.approx(dynamics.mean_square_potential(state), rel=1e-13)


class TestCheckpoint:
    def test_bit_exact_roundtrip(self, tmp_path):
        g = GridSpec(16)
        params = PhysParams(0.25, 1.25)
        state = dynamics.init_condition("random-band", g, seed=5)
        state = MhdState(state.omega_hat, state.j_hat, 0.1 + 0.2)
        meta, binary = checkpoint.write_checkpoint(tmp_path / "ck", state, params, {"note": 1})
        back, p2, extra = checkpoint.read_checkpoint(meta)
        assert back.omega_hat.coeffs.tobytes() == state.omega_hat.coeffs.tobytes()
        assert back.j_hat.coeffs.tobytes() == state.j_hat.coeffs.tobytes()
        assert back.time == state.time and p2 == params and extra == {"note": 1}
        assert binary.stat().st_size == 2 * 16 * 16 * 16

    def test_binary_layout(self, tmp_path):
        g = GridSpec(16)
        state = dynamics.init_condition("orszag-tang-like", g)
        _, binary = checkpoint.write_checkpoint(tmp_path / "ck", state, PhysParams(0.4, 1.2))
        raw = np.frombuffer(binary.read_bytes(), dtype="<f8")
        # vorticity coefficient at (k1, k2) = (1, 0) is -1/2: flat index 16, real part first
        assert raw[2 * 16] == -0.5 and raw[2 * 16 + 1] == 0.0

    def test_rejects_foreign_document(self, tmp_path):
        (tmp_path / "x.json").write_text('{"format": "other"}')
        with pytest.raises(ValueError):
            checkpoint.read_checkpoint(tmp_path / "x.json")
