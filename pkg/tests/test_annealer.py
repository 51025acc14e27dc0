import numpy as np
import pytest
from numpy.testing import assert_allclose

from swseq.ambiguity import AmbiguityEvaluator, CostParams, cost_fp, x_t_grid
from swseq.annealer import (AnnealConfig, CostEngine, anneal, best_of_chains,
                            transition_probability)
from swseq.array_model import ula
from swseq.errors import ConfigurationError, FeasibilityError
from swseq.switching import (SwitchingSchedule, Timing, apply_swap, check_feasible, neighbors,
                             random_move, random_schedule, uniform_schedule)

SMALL = CostParams(n_phi=16, n_nu=24)


def small_cfg(**kw):
    base = dict(k_max=60, seed=3, cost_params=SMALL)
    base.update(kw)
    return AnnealConfig(**base)


@pytest.fixture(scope="module")
def toy():
    """4 x 2 instance with A = 12 neighbours."""
    t1 = 77.5e-6
    tm = Timing(t0=t1 / 8, t1=t1, T0=4 * t1, M_T=4, M_R=8, M_f=16, T=2)
    return ula(4), tm


def test_config_validation():
    for kw in (dict(alpha=1.0), dict(alpha=0.0), dict(temp0=0.0), dict(k_max=0)):
        with pytest.raises(ConfigurationError):
            AnnealConfig(**kw)


def test_temperature_schedule(tx, timing):
    _, trace = anneal(uniform_schedule(timing), tx, small_cfg(k_max=200))
    k = np.asarray(trace.iteration)
    assert_allclose(trace.temperature, 100 * 0.97**k, rtol=1e-12)


def test_best_monotone_and_feasible(tx, timing):
    best, trace = anneal(random_schedule(timing, 1), tx, small_cfg())
    assert np.all(np.diff(trace.best) <= 0)
    assert trace.best[0] <= trace.initial_cost
    check_feasible(best.S)
    assert best.label == "annealed"
    ev = AmbiguityEvaluator(tx, CostParams(p=6, n_phi=16, n_nu=24), timing)
    assert_allclose(ev.cost(best.eta), trace.final_best, rtol=1e-9)


def test_deterministic(tx, timing):
    a = anneal(uniform_schedule(timing), tx, small_cfg())
    b = anneal(uniform_schedule(timing), tx, small_cfg())
    assert a[0] == b[0]
    assert a[1].cost == b[1].cost and a[1].accepted == b[1].accepted


def test_cold_chain_is_hill_climbing(tx, timing):
    _, trace = anneal(random_schedule(timing, 4), tx, small_cfg(temp0=1e-12, k_max=100))
    current = trace.initial_cost
    for cost, acc in zip(trace.cost, trace.accepted):
        if acc:
            assert cost <= current
            current = cost
        else:
            assert cost > current


def test_threshold_stops_immediately(tx, timing):
    init = random_schedule(timing, 2)
    best, trace = anneal(init, tx, small_cfg(epsilon_th=1e12))
    assert best == init and len(trace) == 0


def test_improves_on_uniform(tx, timing):
    best, trace = anneal(uniform_schedule(timing), tx, small_cfg(k_max=150))
    assert trace.final_best < trace.initial_cost


def test_infeasible_initial(tx, timing):
    class Fake:
        S = np.ones((8, 4), int)
    with pytest.raises(FeasibilityError):
        anneal(Fake(), tx, small_cfg())


def test_incremental_engine_exact(tx, timing):
    rng = np.random.default_rng(0)
    params = CostParams(n_phi=24, n_nu=32)
    engine = CostEngine(tx, random_schedule(timing, 9), 6, params)
    for _ in range(200):
        move = random_move(timing.M_T, timing.T, rng)
        cost, state = engine.propose(move)
        target = apply_swap(engine.schedule, move)
        assert_allclose(cost, cost_fp(x_t_grid(tx, target, params), 6), rtol=1e-9)
        if rng.random() < 0.5:
            engine.commit(state)
    assert_allclose(engine.cost, engine.ev.cost(engine.schedule.eta), rtol=1e-9)


def test_best_of_chains(tx, timing):
    cfg = small_cfg(k_max=30)
    best, trace = best_of_chains(uniform_schedule(timing), tx, cfg, seeds=[1, 2, 3])
    singles = [anneal(uniform_schedule(timing), tx, small_cfg(k_max=30, seed=s))[1].final_best
               for s in (1, 2, 3)]
    assert trace.final_best == min(singles)


class TestTransitionKernel:
    def test_sums_to_one(self, toy):
        tx, tm = toy
        s = random_schedule(tm, 0)
        for temp in (1e-3, 1.0, 50.0):
            total = sum(transition_probability(s, n, temp, 6, tx, SMALL) for n in neighbors(s))
            total += transition_probability(s, s, temp, 6, tx, SMALL)
            assert abs(total - 1) < 1e-12

    def test_improvement_is_one_over_a(self, toy):
        tx, tm = toy
        s = uniform_schedule(tm)
        ev = AmbiguityEvaluator(tx, SMALL, tm)
        better = [n for n in neighbors(s) if ev.cost(n.eta) < ev.cost(s.eta)]
        assert better
        assert transition_probability(s, better[0], 1.0, 6, tx, SMALL) == pytest.approx(1 / 12, abs=1e-15)

    def test_two_columns_apart_is_zero(self, toy):
        tx, tm = toy
        s = uniform_schedule(tm)
        s2 = SwitchingSchedule([[2, 2], [1, 1], [3, 3], [4, 4]], tm)
        assert transition_probability(s, s2, 1.0, 6, tx, SMALL) == 0.0

    def test_negative_temperature(self, toy):
        tx, tm = toy
        s = uniform_schedule(tm)
        with pytest.raises(ConfigurationError):
            transition_probability(s, s, 0.0, 6, tx, SMALL)
