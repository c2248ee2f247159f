from hypothesis import given, settings, strategies as st

from membin.bench import run_pack
from membin.ga import GaParams, evolve
from membin.heuristics import NfdParams, buffer_swap, make_rng, nfd_repack, random_feasible
from membin.model import AcceleratorSpec, Constraints, CostModel, PackingSolution, solution_cost, validate
from membin.sa import SaParams, anneal

from invariants import operator_sweep

MODEL = CostModel.default()

shapes = st.lists(st.tuples(st.sampled_from([1, 2, 3, 4, 8, 9, 16, 18, 32, 36, 64, 72]),
                            st.integers(1, 20000), st.integers(0, 3)),
                  min_size=1, max_size=40)
constraints = st.builds(Constraints, c_max=st.integers(1, 6), intra_layer_only=st.booleans(),
                        strict_width_match=st.booleans())
probs = st.floats(0, 1)


def test_operator_sweep_ten_thousand():
    n, failures = operator_sweep(10_000, seed=1)
    assert n >= 10_000
    assert failures == []


@given(shapes, constraints, probs, probs, probs, st.integers(0, 2**32 - 1))
def test_nfd_preserves_partition(sh, cons, thr, pw, ph, seed):
    spec = AcceleratorSpec.from_buffers("h", sh)
    rng = make_rng(seed)
    sol = random_feasible(spec, cons, rng)
    out = nfd_repack(sol, NfdParams(thr, pw, ph), MODEL, cons, rng)
    assert validate(out, spec, cons) == []


@given(shapes, constraints, st.integers(0, 2**32 - 1))
def test_swap_chain_preserves_partition(sh, cons, seed):
    spec = AcceleratorSpec.from_buffers("h", sh)
    rng = make_rng(seed)
    sol = random_feasible(spec, cons, rng)
    for _ in range(10):
        sol = buffer_swap(sol, cons, rng)
        assert validate(sol, spec, cons) == []


@given(shapes, constraints, st.integers(0, 2**32 - 1))
def test_multi_buffer_bins_cost_at_least_largest_member(sh, cons, seed):
    spec = AcceleratorSpec.from_buffers("h", sh)
    sol = random_feasible(spec, cons, make_rng(seed))
    for b in sol.bins:
        biggest = max(MODEL.n_bram(spec.buffers[i].width_bits, spec.buffers[i].depth_words)
                      for i in b.buffers)
        assert MODEL.n_bram(b.width, b.depth) >= biggest


@settings(max_examples=25)
@given(shapes, constraints, st.sampled_from(["nfd", "swap"]), st.integers(0, 2**32 - 1))
def test_search_logs_monotone_and_valid(sh, cons, op, seed):
    spec = AcceleratorSpec.from_buffers("h", sh)
    runs = [evolve(spec, GaParams(population_size=6, tournament_size=3, mutation_operator=op,
                                  max_generations=15, max_seconds=None), MODEL, cons, make_rng(seed)),
            anneal(spec, SaParams(perturbation=op, max_iterations=150, max_seconds=None),
                   MODEL, cons, make_rng(seed))]
    for best, log in runs:
        costs = [c for _, c in log.entries]
        assert costs == sorted(costs, reverse=True)
        assert costs[-1] == solution_cost(best, MODEL)
        assert validate(best, spec, cons) == []
        assert solution_cost(best, MODEL) <= solution_cost(PackingSolution.singletons(spec), MODEL)


@settings(max_examples=10)
@given(st.sampled_from(["ga-s", "ga-nfd", "sa-s", "sa-nfd"]), st.integers(0, 1000), st.booleans())
def test_reports_bit_identical_per_seed(alg, seed, intra):
    over = {"max_generations": 10} if alg.startswith("ga") else {"max_iterations": 200}
    cons = Constraints(intra_layer_only=intra)
    a = run_pack("cnv-w2a2", alg, seed, cons, overrides=over, budget=None)
    b = run_pack("cnv-w2a2", alg, seed, cons, overrides=over, budget=None)
    assert a.deterministic_view() == b.deterministic_view()
