"""Simulated annealing over the feasible set of TX switching schedules."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ambiguity import AmbiguityEvaluator, CostParams
from .array_model import ArrayModel
from .errors import ConfigurationError
from .switching import (SwitchingSchedule, apply_swap, check_feasible, is_neighbor,
                        neighborhood_size, neighbors, random_move)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnnealConfig:
    p: int = 6
    temp0: float = 100.0
    alpha: float = 0.97
    k_max: int = 500
    epsilon_th: float = 0.0   # 0 disables the threshold stop
    seed: int = 0
    cost_params: CostParams = field(default_factory=CostParams)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ConfigurationError("cooling rate alpha must lie in (0, 1)")
        if self.temp0 <= 0:
            raise ConfigurationError("initial temperature must be positive")
        if self.k_max < 1:
            raise ConfigurationError("k_max must be at least 1")


@dataclass
class AnnealTrace:
    """One row per proposal: iteration, temperature, candidate cost,
    accepted flag, best cost so far."""

    initial_cost: float
    iteration: list = field(default_factory=list)
    temperature: list = field(default_factory=list)
    cost: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    best: list = field(default_factory=list)

    def append(self, k, temp, cost, accepted, best):
        self.iteration.append(k)
        self.temperature.append(temp)
        self.cost.append(cost)
        self.accepted.append(accepted)
        self.best.append(best)

    def __len__(self):
        return len(self.iteration)

    @property
    def final_best(self) -> float:
        return self.best[-1] if self.best else self.initial_cost


class CostEngine:
    """f_p of a schedule with cheap updates for single-column swaps.

    A swap moves two antennas in one snapshot, so only two rows of the
    Doppler factor change and the ambiguity numerator is patched with two
    rank-one updates.
    """

    def __init__(self, tx: ArrayModel, schedule: SwitchingSchedule, p: int,
                 params: CostParams | None = None):
        self.ev = AmbiguityEvaluator(tx, params or CostParams(p=p), schedule.timing)
        self.p = p
        self.reset(schedule)

    def reset(self, schedule: SwitchingSchedule):
        self.schedule = schedule
        self.eta = schedule.eta.copy()
        self.W = self.ev.weights(self.eta)
        self.num = self.ev.numerator(self.W)
        self.cost = self.ev.cost_from_numerator(self.num, self.p)

    def propose(self, move):
        """Cost of the neighbour reached by ``move`` plus the state needed
        to commit it."""
        col, a, b = move
        eta = self.eta.copy()
        eta[[a, b], col] = eta[[b, a], col]
        Wa = self.ev.row_weights(eta[a])
        Wb = self.ev.row_weights(eta[b])
        num = (self.num + np.outer(self.ev.C[:, a], Wa - self.W[a])
               + np.outer(self.ev.C[:, b], Wb - self.W[b]))
        cost = self.ev.cost_from_numerator(num, self.p)
        return cost, (move, eta, Wa, Wb, num, cost)

    def commit(self, state):
        move, eta, Wa, Wb, num, cost = state
        _, a, b = move
        self.schedule = apply_swap(self.schedule, move)
        self.eta = eta
        self.W[a], self.W[b] = Wa, Wb
        self.num = num
        self.cost = cost


def anneal(initial: SwitchingSchedule, tx: ArrayModel, cfg: AnnealConfig | None = None,
           refresh_every: int = 100):
    """Minimise f_p over schedules; returns (best schedule, trace).

    Proposal k (0-based) is judged at temperature temp0 * alpha**k and
    accepted when exp((f_current - f_candidate) / temp) > U(0, 1). The run
    stops after k_max proposals or once the best cost reaches epsilon_th.
    """
    cfg = cfg or AnnealConfig()
    check_feasible(initial.S)
    params = CostParams(p=cfg.p, n_phi=cfg.cost_params.n_phi, n_nu=cfg.cost_params.n_nu,
                        nu_up=cfg.cost_params.nu_up)
    engine = CostEngine(tx, initial, cfg.p, params)
    rng = np.random.default_rng(cfg.seed)
    tm = initial.timing
    best_s, best_c = initial, engine.cost
    trace = AnnealTrace(engine.cost)
    temp = cfg.temp0
    n_acc = 0
    for k in range(cfg.k_max):
        if cfg.epsilon_th > 0 and best_c <= cfg.epsilon_th:
            break
        move = random_move(tm.M_T, tm.T, rng)
        cand, state = engine.propose(move)
        delta = engine.cost - cand
        u = rng.random()
        accepted = bool(delta >= 0 or np.exp(delta / temp) > u)
        if accepted:
            engine.commit(state)
            n_acc += 1
            if n_acc % refresh_every == 0:
                # bound round-off drift of the incremental numerator
                engine.reset(engine.schedule)
            if engine.cost < best_c:
                best_s, best_c = engine.schedule, engine.cost
        trace.append(k, temp, cand, accepted, best_c)
        temp *= cfg.alpha
    label = "annealed" if len(trace) else initial.label
    log.info("annealing: f_%d %.4g -> %.4g in %d proposals", cfg.p, trace.initial_cost,
             best_c, len(trace))
    return best_s.with_label(label), trace


def _chain(args):
    initial, tx, cfg = args
    return anneal(initial, tx, cfg)


def best_of_chains(initial: SwitchingSchedule, tx: ArrayModel, cfg: AnnealConfig,
                   seeds, workers: int = 1):
    """Run independent chains (one per seed) and keep the lowest-cost result."""
    jobs = [(initial, tx, AnnealConfig(cfg.p, cfg.temp0, cfg.alpha, cfg.k_max,
                                       cfg.epsilon_th, int(s), cfg.cost_params)) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_chain, jobs))
    else:
        results = [_chain(j) for j in jobs]
    return min(results, key=lambda r: r[1].final_best)


def transition_probability(s: SwitchingSchedule, s2: SwitchingSchedule, temp: float, p: int,
                           tx: ArrayModel, cost_params: CostParams | None = None) -> float:
    """Metropolis kernel P(s -> s2) under uniform same-column swap proposals."""
    if temp <= 0:
        raise ConfigurationError("temperature must be positive")
    params = cost_params or CostParams(p=p)
    ev = AmbiguityEvaluator(tx, params, s.timing)
    tm = s.timing
    A = neighborhood_size(tm.M_T, tm.T)
    f = ev.cost(s.eta, p)

    def accept(other):
        return min(1.0, float(np.exp(min((f - ev.cost(other.eta, p)) / temp, 0.0))))

    if s == s2:
        return 1.0 - sum(accept(n) for n in neighbors(s)) / A
    if is_neighbor(s, s2):
        return accept(s2) / A
    return 0.0
