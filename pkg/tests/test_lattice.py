import numpy as np
import pytest

from lb2d import lattice
from lb2d.lattice import (C, CS2, OPP, W, RelaxationParams, collide,
                          collide_cell, equilibrium, moments,
                          omega_from_reynolds)

from .reference import REF_C, REF_OPP, REF_W, ref_equilibrium, ref_moments


class TestConstants:
    def test_velocity_set(self):
        assert C.tolist() == [list(c) for c in REF_C]

    def test_weights(self):
        assert W.tolist() == REF_W
        assert W.sum() == pytest.approx(1.0, abs=1e-15)

    def test_opposites(self):
        assert OPP.tolist() == REF_OPP
        for i in range(9):
            assert (C[OPP[i]] == -C[i]).all()
            assert OPP[OPP[i]] == i

    def test_weight_moments(self):
        # lattice isotropy conditions up to second order
        assert np.allclose(W @ C, 0.0, atol=1e-16)
        second = np.einsum("i,ia,ib->ab", W, C.astype(float), C.astype(float))
        assert np.allclose(second, CS2 * np.eye(2), atol=1e-15)


class TestEquilibrium:
    def test_known_point(self):
        # rho=1, u=(0.1, 0): every entry is a small exact rational
        feq = equilibrium(1.0, 0.1, 0.0)
        expected = [197 / 450, 133 / 900, 197 / 1800, 73 / 900, 197 / 1800,
                    133 / 3600, 73 / 3600, 73 / 3600, 133 / 3600]
        np.testing.assert_allclose(feq, expected, rtol=1e-15)

    def test_rest_state_is_weights(self):
        np.testing.assert_allclose(equilibrium(1.0, 0.0, 0.0), W, rtol=0)

    def test_matches_naive_reference(self, rng):
        for _ in range(200):
            rho = rng.uniform(0.5, 2.0)
            ux, uy = rng.uniform(-0.15, 0.15, size=2)
            got = equilibrium(rho, ux, uy)
            np.testing.assert_allclose(got, ref_equilibrium(rho, ux, uy),
                                       rtol=5e-15)

    def test_conserves_moments(self, rng):
        for _ in range(200):
            rho = rng.uniform(0.5, 2.0)
            ux, uy = rng.uniform(-0.2, 0.2, size=2)
            feq = equilibrium(rho, ux, uy)
            r, vx, vy = moments(feq)
            assert r == pytest.approx(rho, rel=1e-14)
            assert vx == pytest.approx(ux, rel=1e-13, abs=1e-16)
            assert vy == pytest.approx(uy, rel=1e-13, abs=1e-16)

    def test_array_arguments(self, rng):
        rho = rng.uniform(0.5, 2.0, size=(4, 3))
        ux = rng.uniform(-0.1, 0.1, size=(4, 3))
        uy = rng.uniform(-0.1, 0.1, size=(4, 3))
        feq = equilibrium(rho, ux, uy)
        assert feq.shape == (9, 4, 3)
        for ix in range(4):
            for iy in range(3):
                np.testing.assert_allclose(
                    feq[:, ix, iy],
                    equilibrium(rho[ix, iy], ux[ix, iy], uy[ix, iy]),
                    rtol=0)

    def test_dtype_control(self):
        feq = equilibrium(1.0, 0.05, -0.02, dtype=np.float32)
        assert feq.dtype == np.float32
        exact = equilibrium(np.float32(1.0), np.float32(0.05),
                            np.float32(-0.02), dtype=np.float32)
        np.testing.assert_array_equal(feq, exact)


class TestMoments:
    def test_zero_density_cell(self):
        rho, ux, uy = moments(np.zeros(9))
        assert (rho, ux, uy) == (0.0, 0.0, 0.0)

    def test_batch_zero_density(self):
        f = np.zeros((9, 3))
        f[:, 1] = W
        rho, ux, uy = moments(f)
        assert rho[0] == 0.0 and ux[0] == 0.0 and uy[0] == 0.0
        assert rho[1] == pytest.approx(1.0, rel=1e-15)

    def test_rejects_non_finite(self):
        f = np.full(9, 0.1)
        f[4] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            moments(f)
        f[4] = np.inf
        with pytest.raises(ValueError, match="non-finite"):
            moments(f)

    def test_matches_reference(self, rng):
        for _ in range(200):
            f = rng.uniform(0.01, 1.0, size=9)
            got = moments(f)
            ref = ref_moments(list(f))
            np.testing.assert_allclose(got, ref, rtol=1e-14)


class TestCollide:
    def test_omega_one_lands_on_equilibrium(self, rng):
        # f - 1.0*(f - feq) re-rounds, so equality only to an ulp
        f = rng.uniform(0.01, 1.0, size=9)
        rho, ux, uy = moments(f)
        feq = equilibrium(rho, ux, uy)
        np.testing.assert_allclose(collide(f, feq, 1.0), feq,
                                   rtol=1e-15, atol=1e-16)

    def test_fixed_point(self):
        feq = equilibrium(1.2, 0.05, -0.03)
        np.testing.assert_allclose(collide(feq, feq, 1.7), feq, rtol=0)

    def test_source_term(self, rng):
        f = rng.uniform(0.01, 1.0, size=9)
        feq = equilibrium(*moments(f))
        src = rng.normal(0.0, 1e-3, size=9)
        np.testing.assert_allclose(collide(f, feq, 0.6, source=src),
                                   collide(f, feq, 0.6) + src, rtol=0)

    def test_collide_cell_agrees_with_library_ops(self, rng):
        # the scalar fused-cell expression is the same arithmetic as
        # moments -> equilibrium -> collide, in double, bit for bit
        for _ in range(100):
            g = rng.uniform(0.01, 1.0, size=9)
            omega = rng.uniform(0.2, 1.9)
            got = collide_cell([float(v) for v in g], float(omega))
            rho, ux, uy = moments(g)
            want = collide(g, equilibrium(rho, ux, uy), omega)
            np.testing.assert_array_equal(got, want)

    def test_collide_cell_conserves_mass_momentum(self, rng):
        g = [float(v) for v in rng.uniform(0.01, 1.0, size=9)]
        out = collide_cell(g, 1.3)
        assert sum(out) == pytest.approx(sum(g), rel=1e-14)
        mx_in = sum(gi * c[0] for gi, c in zip(g, REF_C))
        mx_out = sum(gi * c[0] for gi, c in zip(out, REF_C))
        assert mx_out == pytest.approx(mx_in, rel=1e-12, abs=1e-15)

    def test_collide_cell_zero_density(self):
        out = collide_cell([0.0] * 9, 1.5)
        assert out == [0.0] * 9


class TestRelaxationParams:
    def test_from_omega_roundtrip(self):
        p = RelaxationParams.from_omega(1.5)
        assert p.nu == pytest.approx(CS2 * (1 / 1.5 - 0.5), rel=1e-15)
        q = RelaxationParams.from_viscosity(p.nu)
        assert q.omega == pytest.approx(1.5, rel=1e-15)

    @pytest.mark.parametrize("omega", [0.0, 2.0, -0.3, 2.5])
    def test_rejects_unstable_omega(self, omega):
        with pytest.raises(ValueError, match="omega"):
            RelaxationParams.from_omega(omega)

    def test_rejects_inconsistent_pair(self):
        with pytest.raises(ValueError, match="inconsistent"):
            RelaxationParams(omega=1.5, nu=0.2)

    def test_rejects_nonpositive_viscosity(self):
        with pytest.raises(ValueError, match="positive"):
            RelaxationParams.from_viscosity(0.0)

    def test_source_validation(self):
        with pytest.raises(ValueError, match="shape"):
            RelaxationParams.from_omega(1.0, source=[1.0, 2.0])
        p = RelaxationParams.from_omega(1.0, source=np.zeros(9))
        assert not p.has_source
        q = RelaxationParams.from_omega(1.0, source=np.full(9, 1e-8))
        assert q.has_source
        assert not RelaxationParams.from_omega(1.0).has_source


class TestOmegaFromReynolds:
    def test_frozen_values(self):
        assert omega_from_reynolds(1000, 0.1, 100).omega == \
            pytest.approx(1.8867924528301885, rel=0, abs=0)
        assert omega_from_reynolds(6, 0.1, 10).omega == 1.0

    def test_viscosity_definition(self, rng):
        for _ in range(50):
            re = rng.uniform(1.0, 5000.0)
            u0 = rng.uniform(0.01, 0.17)
            length = rng.uniform(4.0, 4096.0)
            p = omega_from_reynolds(re, u0, length)
            assert p.nu == pytest.approx(u0 * length / re, rel=1e-15)
            assert 0.0 < p.omega < 2.0

    @pytest.mark.parametrize("args", [(0, 0.1, 10), (100, 0.0, 10),
                                      (100, 0.1, 0), (-5, 0.1, 10)])
    def test_rejects_nonpositive_inputs(self, args):
        with pytest.raises(ValueError, match="positive"):
            omega_from_reynolds(*args)
