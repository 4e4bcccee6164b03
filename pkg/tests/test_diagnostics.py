import numpy as np
import pytest
from hypothesis import given, strategies as st

from bfnlab.diagnostics import assemble_report, error_decomposition, euclidean_error_series
from bfnlab.engine import BfnConfig, generate_reference, run_bfn
from bfnlab.integrators import TimeGrid
from bfnlab.models import LorenzParams, Pde1DModel
from bfnlab.observation import ObservationMask
from bfnlab.spectral import PeriodicGrid1D, PeriodicGrid2D, SpectralField1D, SpectralField2D, norms

from conftest import random_real_field


class TestDecomposition:
    g = PeriodicGrid1D(512, 2.0)

    def test_equal_states(self, rng):
        u = SpectralField1D(self.g, random_real_field(rng, self.g))
        e = error_decomposition(u, u, ObservationMask.spectral(16))
        assert (e.total, e.observed_part, e.unobserved_part) == (0.0, 0.0, 0.0)

    def test_high_mode_difference(self):
        u = SpectralField1D.single_mode(self.g, 30, 0.05)
        v = SpectralField1D.zeros(self.g)
        e = error_decomposition(u, v, ObservationMask.spectral(16))
        assert e.observed_part == 0.0
        assert e.unobserved_part == pytest.approx(norms(u)[0], rel=1e-15)

    @given(st.integers(0, 2**31 - 1), st.sampled_from(["L2", "H1Semi"]))
    def test_orthogonal_split(self, seed, kind):
        rng = np.random.default_rng(seed)
        u = SpectralField1D(self.g, random_real_field(rng, self.g))
        v = SpectralField1D(self.g, random_real_field(rng, self.g))
        e = error_decomposition(u, v, ObservationMask.spectral(16), kind, iteration_time=2.5)
        direct = norms(u - v)[0 if kind == "L2" else 1]
        assert e.total == pytest.approx(direct, rel=1e-12)
        assert e.total**2 == pytest.approx(e.observed_part**2 + e.unobserved_part**2, rel=1e-12)
        assert e.iteration_time == 2.5 and e.norm_kind == kind

    def test_physical_quadrature(self, rng):
        u = SpectralField1D(self.g, random_real_field(rng, self.g))
        v = SpectralField1D.zeros(self.g)
        e = error_decomposition(u, v, ObservationMask.spectral(16))
        quad = np.sqrt(np.sum(u.to_physical() ** 2) * 2.0 / 512)
        assert e.total == pytest.approx(quad, rel=1e-12)

    def test_vorticity_norms(self):
        g = PeriodicGrid2D(32)
        xx, yy = g.xy
        w = SpectralField2D.from_physical(g, 2 * np.cos(xx) * np.cos(yy), mean_free=True)
        z = SpectralField2D.zeros(g, mean_free=True)
        e2 = error_decomposition(w, z, ObservationMask.spectral(20), "L2", vorticity=True)
        eh = error_decomposition(w, z, ObservationMask.spectral(20), "H1Semi", vorticity=True)
        # velocity (-cos x sin y, sin x cos y): ||u||^2 = 2 * pi^2; ||omega||^2 = 4 pi^2
        assert e2.total == pytest.approx(np.sqrt(2) * np.pi, rel=1e-12)
        assert eh.total == pytest.approx(2 * np.pi, rel=1e-12)

    def test_euclidean(self):
        e = error_decomposition([1.0, 2.0, 3.0], [1.0, 0.0, 0.0], ObservationMask.components(1, 2), "Euclidean")
        assert (e.total, e.observed_part, e.unobserved_part) == pytest.approx((np.sqrt(13), 2.0, 3.0))
        e2 = error_decomposition([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], [1, 0, 1], "Euclidean")
        assert e2.observed_part == pytest.approx(np.sqrt(10))

    def test_mismatches(self, rng):
        u = SpectralField1D(self.g, random_real_field(rng, self.g))
        with pytest.raises(ValueError):
            error_decomposition(u, u, ObservationMask.components(1))
        with pytest.raises(ValueError):
            error_decomposition(u, SpectralField1D.zeros(PeriodicGrid1D(64, 2.0)), ObservationMask.spectral(3))
        with pytest.raises(ValueError):
            error_decomposition([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], ObservationMask.components(1), "L2")

    def test_euclidean_series(self):
        out = euclidean_error_series(np.ones((2, 3)), np.zeros((2, 3)), np.array([[1, 0, 0], [0, 0, 0]]))
        np.testing.assert_allclose(out["observed_euclid"], [1, 0])
        np.testing.assert_allclose(out["total_euclid"], np.sqrt(3))


class TestReport:
    def heat_report(self, n=5):
        g = PeriodicGrid1D(64, 2 * np.pi)
        rng = np.random.default_rng(1)
        u0 = SpectralField1D(g, random_real_field(rng, g, band=20))
        tg = TimeGrid(0.1, 1e-4)
        ref, rec = generate_reference(Pde1DModel("heat", nu=0.1), u0, tg, ObservationMask.spectral(8),
                                      record_every=50)
        hist = run_bfn(Pde1DModel("heat", nu=0.1), BfnConfig(mu=10.0, n_iterations=n, record_every=50),
                       rec, tg, ref)
        return assemble_report(hist)

    def test_layout(self):
        rep = self.heat_report()
        t = rep.column("iteration_time")
        assert t.min() == 0.0 and t.max() < 10.0
        assert np.all(np.diff(t) > 0)
        assert sorted(set(rep.column("leg"))) == list(range(10))
        assert rep.summary.shape[0] == 6
        assert rep.spectrum.shape[1] == 2

    def test_geometric_boundary_sequence(self):
        rep = self.heat_report()
        obs = rep.summary_column("observed_l2")
        np.testing.assert_allclose(obs[1:] / obs[:-1], (1 - 10 * 1e-4) ** 2000, rtol=1e-8)

    def test_backward_flag(self):
        rep = self.heat_report(1)
        back = rep.column("backward")
        assert back[rep.column("leg") == 0].max() == 0 and back[rep.column("leg") == 1].min() == 1

    def test_lorenz_pathological_constant(self):
        p = LorenzParams()
        tg = TimeGrid(1.0, 1e-4)
        ref, rec = generate_reference(p, np.zeros(3), tg, ObservationMask.components(1, 2), record_every=100)
        hist = run_bfn(p, BfnConfig(mu=10.0, n_iterations=5, initial_guess=[0, 0, 0.5], record_every=100),
                       rec, tg, ref)
        rep = assemble_report(hist)
        np.testing.assert_allclose(rep.summary_column("total_euclid"), 0.5, atol=1e-12)
        assert len(rep.spectrum) == 0
