import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from swseq.ambiguity import (AmbiguityEvaluator, AmbiguityGrid, CostParams, cost_fp, nsl,
                             ridge_profile, spatio_temporal_vector, x_t_grid, x_t_raw, x_t_value,
                             x_tot_value)
from swseq.array_model import uca, ula
from swseq.errors import ConfigurationError, DomainError
from swseq.signal_sim import SounderConfig
from swseq.switching import Timing, random_schedule, uniform_schedule

SMALL = CostParams(n_phi=24, n_nu=32)


def test_self_coherence(tx, timing, rng):
    eta = random_schedule(timing, 1).eta
    for phi in rng.uniform(-np.pi, np.pi, 5):
        assert_allclose(x_t_value(tx, eta, phi, phi, 0.0), 1.0, atol=1e-14)


def test_two_element_closed_form():
    t1 = 10e-6
    tm = Timing(t0=t1 / 2, t1=t1, T0=2 * t1, M_T=2, M_R=2, M_f=4, T=1)
    eta = uniform_schedule(tm).eta
    dnu = np.linspace(0, 3 / t1, 301)
    got = np.array([abs(x_t_value(ula(2), eta, 0.0, 0.0, d)) for d in dnu])
    assert_allclose(got, np.abs(np.cos(np.pi * dnu * t1)), atol=1e-12)
    assert abs(x_t_value(ula(2), eta, 0.0, 0.0, 1 / (2 * t1))) < 1e-12


def test_uniform_alias_masquerades_as_angle(tx, timing):
    eta = uniform_schedule(timing).eta
    phi2 = np.linspace(-np.pi / 2, np.pi / 2, 20001)
    best = max(abs(x_t_value(tx, eta, 0.0, p, 1 / timing.T0)) for p in phi2)
    assert best > 1 - 1e-6
    # the alias sits where the per-element Doppler phase is undone by the steering phase
    assert abs(x_t_value(tx, eta, 0.0, np.arcsin(-0.25), 1 / timing.T0)) == pytest.approx(1, abs=1e-12)


def test_dimension_mismatch(timing):
    with pytest.raises(ConfigurationError):
        x_t_value(ula(4), uniform_schedule(timing).eta, 0.0, 0.0, 10.0)
    with pytest.raises(ConfigurationError):
        x_t_grid(ula(4), uniform_schedule(timing))


def test_grid_matches_direct(tx, timing, rng):
    s = random_schedule(timing, 7)
    ev = AmbiguityEvaluator(tx, CostParams(n_phi=36, n_nu=40), timing)
    num = ev.numerator(ev.weights(s.eta)).reshape(36, 36, 40)
    for _ in range(100):
        i, j, k = rng.integers(36), rng.integers(36), rng.integers(40)
        ref = x_t_value(tx, s.eta, ev.phi[i], ev.phi[j], ev.dnu[k])
        assert abs(num[i, j, k] - ref) < 1e-12


def test_single_element_grid_is_one():
    tm = Timing(t0=1e-6, t1=1e-5, T0=1e-4, M_T=1, M_R=1, M_f=4, T=1)
    grid = x_t_grid(ula(1), uniform_schedule(tm), SMALL)
    assert_allclose(grid.values, 1.0, atol=1e-15)
    assert cost_fp(grid, 6) == pytest.approx((2 * np.pi) ** 2 * tm.nu_up, rel=1e-12)


def test_uniform_ridge_at_snapshot_rate(tx, timing):
    grid = x_t_grid(tx, uniform_schedule(timing))
    ridge = ridge_profile(grid)
    step = grid.dnu[1]
    for k in range(1, 4):
        idx = np.flatnonzero(np.abs(grid.dnu - k / timing.T0) <= step)
        assert ridge[idx].max() > 0.95


def test_fp_matches_evaluator(tx, timing):
    s = random_schedule(timing, 3)
    ev = AmbiguityEvaluator(tx, SMALL, timing)
    grid = ev.grid(s.eta)
    for p in (2, 4, 6):
        assert_allclose(cost_fp(grid, p), ev.cost(s.eta, p), rtol=1e-10)


def test_f2_nearly_constant(tx, timing):
    ev = AmbiguityEvaluator(tx, SMALL, timing)
    f2 = [ev.cost(random_schedule(timing, i).eta, 2) for i in range(30)]
    assert max(f2) / min(f2) - 1 < 0.02


def test_cost_params_validation():
    for kw in (dict(p=3), dict(p=0), dict(n_phi=4), dict(n_nu=7)):
        with pytest.raises(ConfigurationError):
            CostParams(**kw)
    with pytest.raises(ConfigurationError):
        cost_fp(x_t_grid(ula(8), uniform_schedule(Timing()), SMALL), 5)


def test_nsl_uniform_full_grid_is_zero_db(tx, timing):
    grid = x_t_grid(tx, uniform_schedule(timing), SMALL)
    assert nsl(grid, region="doppler") == pytest.approx(0.0, abs=0.05)
    assert nsl(grid, region="full") == pytest.approx(0.0, abs=1e-9)


def test_nsl_diagonal_is_dirichlet_sidelobe(tx, timing):
    # on the diagonal every isotropic schedule collapses to sum_m sum_t exp(j 2 pi dnu eta)
    grid = x_t_grid(tx, uniform_schedule(timing), CostParams(n_phi=8, n_nu=4096))
    n = timing.M_T * timing.T
    x = np.linspace(1e-6, 0.5, 200001)
    dirichlet = np.abs(np.sin(np.pi * n * x) / (n * np.sin(np.pi * x)))
    first_side = dirichlet[x > 1 / n].max()
    assert nsl(grid) == pytest.approx(20 * np.log10(first_side), abs=0.05)


def test_nsl_floor_and_empty():
    phi = np.linspace(-np.pi, np.pi, 8, endpoint=False) + 2 * np.pi / 8
    dnu = np.linspace(0, 100, 10)
    vals = np.zeros((8, 8, 10))
    vals[np.arange(8), np.arange(8), 0] = 1.0
    grid = AmbiguityGrid(phi, dnu, vals, 100.0, 5.0)
    assert nsl(grid) == -300.0
    assert nsl(grid, region="doppler") == -300.0
    with pytest.raises(DomainError):
        nsl(grid, dnu=200.0)
    with pytest.raises(ConfigurationError):
        nsl(AmbiguityGrid(phi, dnu, vals, 100.0, np.nan))
    with pytest.raises(ConfigurationError):
        nsl(grid, region="bogus")


def test_hermitian_symmetry(tx, timing, rng):
    eta = random_schedule(timing, 9).eta
    for _ in range(20):
        p1, p2 = rng.uniform(-np.pi, np.pi, 2)
        d = rng.uniform(-5000, 5000)
        assert_allclose(x_t_value(tx, eta, p1, p2, d),
                        np.conj(x_t_value(tx, eta, p2, p1, -d)), atol=1e-13)


def test_depends_only_on_doppler_difference(rng, timing):
    model = uca(8)
    eta = random_schedule(timing, 4).eta
    for _ in range(20):
        p1, p2 = rng.uniform(-np.pi, np.pi, 2)
        nu1, nu2 = rng.uniform(-6000, 6000, 2)
        assert abs(x_t_raw(model, eta, p1, nu1, p2, nu2)
                   - x_t_value(model, eta, p1, p2, nu2 - nu1)) < 1e-12


def test_norm_identity(rng, timing):
    model = uca(8, directivity=2)
    eta = random_schedule(timing, 2).eta
    for _ in range(20):
        phi, nu = rng.uniform(-np.pi, np.pi), rng.uniform(-6000, 6000)
        v = spatio_temporal_vector(model, eta, phi, nu)
        assert_allclose(np.linalg.norm(v), np.sqrt(timing.T) * np.linalg.norm(model.response(phi)),
                        rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_grid_bounded(seed):
    tm = Timing()
    grid = x_t_grid(ula(8), random_schedule(tm, seed), SMALL)
    assert grid.values.max() <= 1 + 1e-12 and grid.values.min() >= 0
    idx = np.arange(24)
    assert_allclose(grid.values[idx, idx, 0], 1.0, atol=1e-12)


class TestXtot:
    config = SounderConfig()

    def test_identical_parameters(self, tx, rx, timing):
        mu = (600e-9, 0.2, 1.0, 1500.0)
        s = random_schedule(timing, 0)
        assert abs(x_tot_value(tx, rx, self.config, s, mu, mu) - 1) < 1e-12

    def test_bounded_by_xt(self, tx, rx, timing, rng):
        s = random_schedule(timing, 5)
        nu_max = timing.M_T / (2 * timing.T0)
        for _ in range(1000):
            mu1 = (rng.uniform(0, 2e-6), rng.uniform(-1.5, 1.5), rng.uniform(-np.pi, np.pi),
                   rng.uniform(-nu_max, nu_max))
            mu2 = (rng.uniform(0, 2e-6), rng.uniform(-1.5, 1.5), rng.uniform(-np.pi, np.pi),
                   rng.uniform(-nu_max, nu_max))
            xtot = abs(x_tot_value(tx, rx, self.config, s, mu1, mu2))
            xt = abs(x_t_value(tx, s.eta, mu1[1], mu2[1], mu2[3] - mu1[3]))
            assert xtot <= xt + 1e-10

    def test_orthogonal_delays(self, tx, rx, timing):
        s = uniform_schedule(timing)
        step = 1 / (self.config.timing.M_f * self.config.delta_f)
        for k in (1, 5, 40):
            v = x_tot_value(tx, rx, self.config, s, (100e-9, 0.3, 0.4, 200.0),
                            (100e-9 + k * step, 0.3, 0.4, 200.0))
            assert abs(v) < 1e-10

    def test_out_of_range_delay(self, tx, rx, timing):
        with pytest.raises(DomainError):
            x_tot_value(tx, rx, self.config, uniform_schedule(timing), (0.0, 0, 0, 0),
                        (5e-6, 0, 0, 0))
