"""Simulated annealing over packings.

One perturbation per iteration (buffer swap or next-fit-dynamic repack),
exponential cooling, Metropolis acceptance. The best packing ever visited is
returned, and the all-singleton packing seeds that record so the result is
never worse than not packing at all.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Literal

from .ga import RunLog, layer_penalty
from .heuristics import NfdParams, Rng, buffer_swap, nfd_repack, random_feasible
from .model import AcceleratorSpec, Constraints, CostModel, PackingSolution, solution_cost


@dataclass(frozen=True)
class SaParams:
    t0: float = 30.0
    cooling_rate: float = 1.0
    perturbation: Literal["swap", "nfd"] = "nfd"
    nfd: NfdParams = field(default_factory=NfdParams)
    layer_mix_weight: float = 0.25
    max_seconds: float | None = 300.0
    max_iterations: int | None = None
    stall_iterations: int | None = 20000
    t_min: float = 1e-3

    def __post_init__(self):
        if self.t0 <= 0 or self.cooling_rate <= 0:
            raise ValueError("t0 and cooling_rate must be positive")
        if self.t_min <= 0:
            raise ValueError("t_min must be positive")
        if self.perturbation not in ("swap", "nfd"):
            raise ValueError(f"unknown perturbation {self.perturbation!r}")


def acceptance_probability(delta_e: float, t: float) -> float:
    if t <= 0:
        raise ValueError("temperature must be positive")
    if delta_e <= 0:
        return 1.0
    return math.exp(-delta_e / t)


def temperature(t0: float, cooling_rate: float, iteration: int) -> float:
    return t0 * math.exp(-cooling_rate * iteration)


def anneal(spec: AcceleratorSpec, params: SaParams, model: CostModel,
           constraints: Constraints, rng: Rng, on_step=None) -> tuple[PackingSolution, RunLog]:
    """Anneal from a random feasible packing; returns the best packing visited.

    ``on_step(iteration, temperature, candidate, delta, accepted)`` is called
    after every perturbation when given (tests use it to watch the chain).
    """
    t_start = time.perf_counter()
    lam = 0.0 if constraints.intra_layer_only else params.layer_mix_weight

    def score(sol):
        cost = solution_cost(sol, model)
        return cost, cost + lam * layer_penalty(sol) if lam else float(cost)

    log = RunLog()
    current = random_feasible(spec, constraints, rng)
    cur_key = score(current)
    single = PackingSolution.singletons(spec)
    single_key = score(single)
    best, best_key = (current, cur_key) if cur_key < single_key else (single, single_key)
    log.record(time.perf_counter() - t_start, best_key[0])

    it = 0
    stall = 0
    while True:
        if params.max_iterations is not None and it >= params.max_iterations:
            log.stop_reason = "iterations"
            break
        if params.stall_iterations is not None and stall >= params.stall_iterations:
            log.stop_reason = "stall"
            break
        # the clock is polled every 16 iterations; swap moves are cheap
        if (params.max_seconds is not None and it % 16 == 0
                and time.perf_counter() - t_start >= params.max_seconds):
            log.stop_reason = "time"
            break
        t = temperature(params.t0, params.cooling_rate, it)
        if params.perturbation == "swap":
            cand = buffer_swap(current, constraints, rng)
        else:
            cand = nfd_repack(current, params.nfd, model, constraints, rng)
        key = score(cand)
        delta = key[1] - cur_key[1]
        accepted = delta < 0 or (t >= params.t_min and rng.random() < acceptance_probability(delta, t)) \
            or (t < params.t_min and delta == 0)
        if on_step is not None:
            on_step(it, t, cand, delta, accepted)
        if accepted:
            current, cur_key = cand, key
            if key < best_key:
                if key[0] < best_key[0]:
                    log.record(time.perf_counter() - t_start, key[0])
                    stall = -1
                best, best_key = cand, key
        stall += 1
        it += 1
    log.best = best
    log.best_cost = best_key[0]
    log.steps = it
    return best, log
