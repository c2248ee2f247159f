"""Running, timing and comparing the four packers.

Algorithms are identified as ``ga-s``, ``ga-nfd``, ``sa-s`` and ``sa-nfd``.
Independent runs (seeds, algorithms, population sizes) go through a process
pool whose size is capped by ``MEMBIN_THREADS``.
"""
from __future__ import annotations

import csv
import io
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

from . import _kernels
from .ga import GaParams, RunLog, evolve
from .heuristics import make_rng
from .model import (AcceleratorSpec, Constraints, CostModel, PackingSolution,
                    baseline_cost, mapping_efficiency, solution_cost)
from .sa import SaParams, anneal
from .specio import (PRESETS, BinRecord, ResultReport, builtin_hyperparams,
                     canonical_name, load_spec)

ALGORITHMS = ("ga-s", "ga-nfd", "sa-s", "sa-nfd")
DEFAULT_BUDGET = 300.0
# Within one layer the buffers are usually identical, and the waste-decrease
# rule alone cannot grow a bin through a temporarily wasteful size. Presets
# were tuned for inter-layer packing, so intra runs admit more freely.
INTRA_P_ADM_H = 0.5


def time_to_converge(log, fraction: float = 0.01) -> float:
    """Earliest time at which the best cost is within ``fraction`` of the final best."""
    entries = log.entries if isinstance(log, RunLog) else log
    if not entries:
        raise ValueError("empty convergence log")
    final = min(c for _, c in entries)
    limit = (1.0 + fraction) * final
    for t, c in entries:
        if c <= limit:
            return t
    raise AssertionError("unreachable")


def resolve_params(spec_name: str, algorithm: str, overrides: dict | None = None,
                   budget: float | None = DEFAULT_BUDGET, use_preset: bool = True,
                   intra: bool = False):
    """Preset (or default) parameters for ``algorithm`` with overrides applied.

    Recognised override keys: population_size, tournament_size, p_mut, t0,
    cooling_rate, p_adm_w, p_adm_h, efficiency_threshold, max_generations,
    max_iterations, stall (generations or iterations), layer_mix_weight.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; pick one of {', '.join(ALGORITHMS)}")
    family, op = algorithm.split("-")
    operator = "swap" if op == "s" else "nfd"
    if use_preset and canonical_name(spec_name) in PRESETS:
        params = builtin_hyperparams(spec_name, algorithm)
    elif family == "ga":
        params = GaParams(mutation_operator=operator)
    else:
        params = SaParams(perturbation=operator)
    overrides = dict(overrides or {})
    nfd_keys = {"p_adm_w", "p_adm_h", "efficiency_threshold"}
    nfd_over = {k: overrides.pop(k) for k in list(overrides) if k in nfd_keys}
    if intra and "p_adm_h" not in nfd_over:
        nfd_over["p_adm_h"] = max(params.nfd.p_adm_h, INTRA_P_ADM_H)
    if nfd_over:
        params = replace(params, nfd=replace(params.nfd, **nfd_over))
    if "stall" in overrides:
        key = "stall_generations" if family == "ga" else "stall_iterations"
        overrides[key] = overrides.pop("stall")
    ga_only = {"population_size", "tournament_size", "p_mut", "max_generations", "stall_generations"}
    sa_only = {"t0", "cooling_rate", "max_iterations", "stall_iterations", "t_min"}
    wrong = set(overrides) & (sa_only if family == "ga" else ga_only)
    if wrong:
        raise ValueError(f"{', '.join(sorted(wrong))} do not apply to {algorithm}")
    params = replace(params, max_seconds=budget, **overrides)
    return params


def run_search(spec: AcceleratorSpec, algorithm: str, params, model: CostModel,
               constraints: Constraints, seed: int | None) -> tuple[PackingSolution, RunLog]:
    """Run one search; the timed region is the search loop only."""
    _kernels.warmup()
    rng = make_rng(seed)
    if algorithm.startswith("ga"):
        return evolve(spec, params, model, constraints, rng)
    return anneal(spec, params, model, constraints, rng)


def build_report(spec: AcceleratorSpec, algorithm: str, seed, constraints: Constraints,
                 model: CostModel, solution: PackingSolution, log: RunLog | None,
                 params=None, elapsed: float = 0.0) -> ResultReport:
    n = solution_cost(solution, model)
    base = baseline_cost(spec, model)
    records = []
    for b in solution.bins:
        c = model.geometry_cost(b.width, b.depth)
        records.append(BinRecord((c.mode.width_bits, c.mode.depth_words),
                                 c.columns, c.rows, list(b.buffers)))
    return ResultReport(
        spec_name=spec.name,
        algorithm=algorithm,
        seed=seed,
        constraints=asdict(constraints),
        cost_model=model.describe(),
        n_bram=n,
        baseline_bram=base,
        total_bits=spec.total_bits,
        efficiency=mapping_efficiency(spec.total_bits, n, model) if n else 0.0,
        delta_bram=base / n if n else 1.0,
        bins=records,
        convergence=list(log.entries) if log else [],
        params=asdict(params) if params is not None else {},
        steps=log.steps if log else 0,
        stop_reason=log.stop_reason if log else "",
        elapsed_seconds=elapsed,
    )


def run_pack(spec: AcceleratorSpec | str, algorithm: str, seed: int | None = 1,
             constraints: Constraints | None = None, model: CostModel | None = None,
             overrides: dict | None = None, budget: float | None = DEFAULT_BUDGET,
             use_preset: bool = True) -> ResultReport:
    if isinstance(spec, str):
        spec = load_spec(spec)
    constraints = constraints or Constraints()
    model = model or CostModel.default()
    params = resolve_params(spec.name, algorithm, overrides, budget, use_preset,
                            constraints.intra_layer_only)
    t0 = time.perf_counter()
    best, log = run_search(spec, algorithm, params, model, constraints, seed)
    elapsed = time.perf_counter() - t0
    return build_report(spec, algorithm, seed, constraints, model, best, log, params, elapsed)


def baseline_report(spec: AcceleratorSpec, model: CostModel | None = None) -> ResultReport:
    model = model or CostModel.default()
    return build_report(spec, "baseline", None, Constraints(c_max=1), model,
                        PackingSolution.singletons(spec), None)


# --------------------------------------------------------------------------
# worker pool

def worker_count(n_jobs: int) -> int:
    cap = os.environ.get("MEMBIN_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, min(n, n_jobs))


def _run_job(job):
    spec, algorithm, seed, constraints, model_modes, overrides, budget = job
    return run_pack(spec, algorithm, seed, constraints, CostModel(model_modes),
                    overrides, budget)


def run_many(jobs: list) -> list[ResultReport]:
    """Run ``run_pack`` argument tuples, in parallel when workers allow."""
    workers = worker_count(len(jobs))
    if workers == 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs))


# --------------------------------------------------------------------------
# experiments

@dataclass
class AlgorithmSummary:
    algorithm: str
    best_bram: int
    median_bram: float
    median_ttc: float
    costs: list
    ttcs: list


@dataclass
class Comparison:
    spec_name: str
    rows: list
    reports: list = field(default_factory=list)

    def row(self, algorithm: str) -> AlgorithmSummary:
        return next(r for r in self.rows if r.algorithm == algorithm)

    def format(self) -> str:
        out = [f"{self.spec_name}",
               f"{'algorithm':<10}{'best':>8}{'median':>10}{'t_conv(s)':>12}"]
        for r in self.rows:
            out.append(f"{r.algorithm:<10}{r.best_bram:>8}{r.median_bram:>10.1f}"
                       f"{r.median_ttc:>12.3f}")
        return "\n".join(out) + "\n"

    def to_json(self) -> dict:
        return {"spec_name": self.spec_name,
                "rows": [asdict(r) for r in self.rows],
                "reports": [r.to_json() for r in self.reports]}


def compare(spec: AcceleratorSpec | str, algorithms, seeds, budget: float = DEFAULT_BUDGET,
            constraints: Constraints | None = None, model: CostModel | None = None,
            overrides: dict | None = None) -> Comparison:
    """Best/median BRAM and median time-to-convergence per algorithm over seeds."""
    algorithms = list(algorithms)
    seeds = list(seeds)
    if not algorithms:
        raise ValueError("no algorithms given")
    if not seeds:
        raise ValueError("no seeds given")
    if isinstance(spec, str):
        spec = load_spec(spec)
    constraints = constraints or Constraints()
    model = model or CostModel.default()
    jobs = [(spec, a, s, constraints, model.modes, overrides, budget)
            for a in algorithms for s in seeds]
    reports = run_many(jobs)
    rows = []
    for a in algorithms:
        rs = [r for r in reports if r.algorithm == a]
        costs = [r.n_bram for r in rs]
        ttcs = [time_to_converge(r.convergence) for r in rs]
        rows.append(AlgorithmSummary(a, min(costs), statistics.median(costs),
                                     statistics.median(ttcs), costs, ttcs))
    return Comparison(spec.name, rows, reports)


@dataclass
class EfficiencyRow:
    label: str
    spec_name: str
    mode: str
    n_bram: int
    efficiency: float
    delta_bram: float
    baseline_bram: int


def efficiency_table(spec_names, mode: str = "inter", seeds=(1,), budget: float = DEFAULT_BUDGET,
                     model: CostModel | None = None, c_max: int = 4) -> list[EfficiencyRow]:
    """Per network: BRAM, efficiency and reduction vs. the unpacked baseline.

    Packed modes keep the best GA-NFD result over ``seeds``.
    """
    if mode not in ("baseline", "intra", "inter"):
        raise ValueError(f"unknown mode {mode!r}")
    model = model or CostModel.default()
    rows = []
    for name in spec_names:
        spec = load_spec(name)
        base = baseline_cost(spec, model)
        if mode == "baseline":
            n = base
            label = spec.name
        else:
            cons = Constraints(c_max=c_max, intra_layer_only=(mode == "intra"))
            jobs = [(spec, "ga-nfd", s, cons, model.modes, None, budget) for s in seeds]
            n = min(r.n_bram for r in run_many(jobs))
            label = f"{spec.name}-{mode}"
        rows.append(EfficiencyRow(label, spec.name, mode, n,
                                  mapping_efficiency(spec.total_bits, n, model),
                                  base / n, base))
    return rows


@dataclass
class PopulationSummary:
    population_size: int
    final_costs: list
    ttcs: list

    @property
    def best(self) -> int:
        return min(self.final_costs)

    @property
    def median_ttc(self) -> float:
        return statistics.median(self.ttcs)


def sweep_population(spec: AcceleratorSpec | str, sizes, repeats: int = 5,
                     budget: float = DEFAULT_BUDGET, seeds=None,
                     constraints: Constraints | None = None,
                     model: CostModel | None = None) -> list[PopulationSummary]:
    """GA-NFD final cost and convergence time per population size.

    Repeat ``k`` of every size uses seed ``seeds[k]`` (default ``1..repeats``).
    """
    sizes = list(sizes)
    if not sizes:
        raise ValueError("no population sizes given")
    if isinstance(spec, str):
        spec = load_spec(spec)
    seeds = list(seeds) if seeds is not None else list(range(1, repeats + 1))
    constraints = constraints or Constraints()
    model = model or CostModel.default()
    jobs = []
    for n in sizes:
        tour = min(5, n)
        for s in seeds[:repeats]:
            jobs.append((spec, "ga-nfd", s, constraints, model.modes,
                         {"population_size": n, "tournament_size": tour}, budget))
    reports = run_many(jobs)
    out = []
    per = len(seeds[:repeats])
    for k, n in enumerate(sizes):
        rs = reports[k * per:(k + 1) * per]
        out.append(PopulationSummary(n, [r.n_bram for r in rs],
                                     [time_to_converge(r.convergence) for r in rs]))
    return out


def population_csv(summaries: list[PopulationSummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["population_size", "repeat", "final_cost", "t_converge_seconds"])
    for s in summaries:
        for k, (c, t) in enumerate(zip(s.final_costs, s.ttcs)):
            w.writerow([s.population_size, k, c, f"{t:.6f}"])
    return buf.getvalue()
