"""Genetic search over bin-per-gene packings.

Each chromosome is a tuple of bins. A generation mutates every individual
with probability ``p_mut`` (buffer swap or next-fit-dynamic repack), scores
the population and refills it by tournament selection. There is no
crossover.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .heuristics import NfdParams, Rng, buffer_swap, nfd_repack, random_feasible
from .model import AcceleratorSpec, Constraints, CostModel, PackingSolution, solution_cost


@dataclass(frozen=True)
class GaParams:
    population_size: int = 50
    tournament_size: int = 5
    p_mut: float = 0.3
    nfd: NfdParams = field(default_factory=NfdParams)
    mutation_operator: Literal["swap", "nfd"] = "nfd"
    layer_mix_weight: float = 0.25
    max_seconds: float | None = 300.0
    max_generations: int | None = None
    stall_generations: int | None = 200

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if not 1 <= self.tournament_size <= self.population_size:
            raise ValueError("tournament_size must lie in [1, population_size]")
        if not 0.0 <= self.p_mut <= 1.0:
            raise ValueError("p_mut must lie in [0, 1]")
        if self.mutation_operator not in ("swap", "nfd"):
            raise ValueError(f"unknown mutation operator {self.mutation_operator!r}")
        if self.layer_mix_weight < 0:
            raise ValueError("layer_mix_weight must be non-negative")


@dataclass
class RunLog:
    """Improvement events of one search run.

    ``entries`` holds ``(elapsed_seconds, best_cost_so_far)`` pairs, one per
    improvement of the best BRAM count, starting with the initial state.
    """
    entries: list = field(default_factory=list)
    best: PackingSolution | None = None
    best_cost: int | None = None
    steps: int = 0
    stop_reason: str = ""

    def record(self, elapsed: float, cost: int):
        self.entries.append((elapsed, cost))


def layer_penalty(solution: PackingSolution) -> int:
    """Extra layers summed over bins (0 when every bin is single-layer)."""
    nl = solution.geometry()[3]
    return int(nl.sum()) - len(nl)


def fitness(solution: PackingSolution, layer_mix_weight: float, model: CostModel,
            constraints: Constraints | None = None) -> float:
    """BRAM cost plus ``layer_mix_weight`` per extra layer mixed into a bin."""
    cost = solution_cost(solution, model)
    if layer_mix_weight == 0 or (constraints is not None and constraints.intra_layer_only):
        return float(cost)
    return cost + layer_mix_weight * layer_penalty(solution)


def tournament_indices(scores, tournament_size: int, n_winners: int, rng: Rng) -> np.ndarray:
    """Winners of ``n_winners`` independent tournaments.

    Each tournament draws ``tournament_size`` distinct entrants uniformly
    (the first columns of a random permutation) and the lowest score wins;
    on a tie the entrant drawn first wins.
    """
    scores = np.asarray(scores, dtype=float)
    keys = rng.random((n_winners, len(scores)))
    picks = np.argsort(keys, axis=1)[:, :tournament_size]
    return picks[np.arange(n_winners), scores[picks].argmin(axis=1)]


def tournament_select(population, scores, tournament_size: int, rng: Rng):
    """Best of ``tournament_size`` distinct individuals drawn uniformly."""
    return population[int(tournament_indices(scores, tournament_size, 1, rng)[0])]


def mutate(individual: PackingSolution, params: GaParams, model: CostModel,
           constraints: Constraints, rng: Rng) -> PackingSolution:
    if params.mutation_operator == "swap":
        return buffer_swap(individual, constraints, rng)
    return nfd_repack(individual, params.nfd, model, constraints, rng)


def initial_population(spec: AcceleratorSpec, params: GaParams, model: CostModel,
                       constraints: Constraints, rng: Rng) -> list[PackingSolution]:
    single = PackingSolution.singletons(spec)
    pop = [single]
    for _ in range(params.population_size - 1):
        if params.mutation_operator == "nfd":
            shuffled = PackingSolution(tuple(single.bins[i] for i in rng.permutation(len(spec))), spec)
            # only perfectly mapped singletons may skip the first repack
            pop.append(nfd_repack(shuffled, _open_threshold(params.nfd), model, constraints, rng))
        else:
            pop.append(random_feasible(spec, constraints, rng))
    return pop


def _open_threshold(nfd: NfdParams) -> NfdParams:
    return NfdParams(1.0, nfd.p_adm_w, nfd.p_adm_h, nfd.c_max)


def evolve(spec: AcceleratorSpec, params: GaParams, model: CostModel,
           constraints: Constraints, rng: Rng) -> tuple[PackingSolution, RunLog]:
    """Run the generational loop; returns the cheapest packing ever seen."""
    t_start = time.perf_counter()
    lam = 0.0 if constraints.intra_layer_only else params.layer_mix_weight
    log = RunLog()

    def score(sol):
        cost = solution_cost(sol, model)
        return cost, cost + lam * layer_penalty(sol) if lam else float(cost)

    pop = initial_population(spec, params, model, constraints, rng)
    scored = [score(s) for s in pop]
    k = min(range(len(pop)), key=lambda i: scored[i])
    best, best_key = pop[k], scored[k]
    log.record(time.perf_counter() - t_start, best_key[0])
    stall = 0
    gen = 0
    while True:
        if params.max_generations is not None and gen >= params.max_generations:
            log.stop_reason = "generations"
            break
        if params.stall_generations is not None and stall >= params.stall_generations:
            log.stop_reason = "stall"
            break
        if params.max_seconds is not None and time.perf_counter() - t_start >= params.max_seconds:
            log.stop_reason = "time"
            break
        improved = False
        for i in np.flatnonzero(rng.random(len(pop)) < params.p_mut).tolist():
            pop[i] = mutate(pop[i], params, model, constraints, rng)
            scored[i] = score(pop[i])
            if scored[i] < best_key:
                if scored[i][0] < best_key[0]:
                    improved = True
                best, best_key = pop[i], scored[i]
        if improved:
            log.record(time.perf_counter() - t_start, best_key[0])
            stall = 0
        else:
            stall += 1
        picks = tournament_indices([s[1] for s in scored], params.tournament_size,
                                   len(pop), rng).tolist()
        pop = [pop[j] for j in picks]
        scored = [scored[j] for j in picks]
        gen += 1
    log.best = best
    log.best_cost = best_key[0]
    log.steps = gen
    return best, log
