import pytest

from membin import bench
from membin.bench import (compare, efficiency_table, population_csv, resolve_params, run_pack,
                          sweep_population, time_to_converge, worker_count)
from membin.ga import GaParams, RunLog
from membin.model import Constraints, CostModel, mapping_efficiency, validate
from membin.sa import SaParams
from membin.specio import load_spec

QUICK = {"stall": 20}


def test_time_to_converge_examples():
    assert time_to_converge([(0, 200), (1, 100), (2, 99)]) == 2
    assert time_to_converge([(0.0, 50)]) == 0
    assert time_to_converge([(0, 100), (5, 100)]) == 0
    assert time_to_converge(RunLog(entries=[(0, 10), (3, 9)]), fraction=0.2) == 0
    with pytest.raises(ValueError):
        time_to_converge([])


def test_resolve_params():
    p = resolve_params("rn50-w1a2", "ga-nfd", {"population_size": 9, "p_adm_h": 0.3}, budget=7)
    assert isinstance(p, GaParams) and p.population_size == 9 and p.nfd.p_adm_h == 0.3
    assert p.max_seconds == 7 and p.tournament_size == 5
    s = resolve_params("rn50-w1a2", "sa-s", {"stall": 11})
    assert isinstance(s, SaParams) and s.perturbation == "swap" and s.stall_iterations == 11
    assert resolve_params("custom", "ga-s").mutation_operator == "swap"
    intra = resolve_params("rn50-w1a2", "ga-nfd", intra=True)
    assert intra.nfd.p_adm_h == bench.INTRA_P_ADM_H
    assert resolve_params("rn50-w1a2", "ga-nfd", {"p_adm_h": 0.2}, intra=True).nfd.p_adm_h == 0.2
    with pytest.raises(ValueError):
        resolve_params("cnv-w1a1", "ga-nfd", {"t0": 3})
    with pytest.raises(ValueError):
        resolve_params("cnv-w1a1", "tabu")


@pytest.mark.parametrize("alg", bench.ALGORITHMS)
def test_run_pack_report_invariants(alg):
    r = run_pack("cnv-w1a1", alg, seed=2, overrides=QUICK, budget=10)
    spec = load_spec("cnv-w1a1")
    assert r.n_bram <= r.baseline_bram
    assert r.efficiency == pytest.approx(spec.total_bits / (r.n_bram * 18432), rel=1e-12)
    assert r.delta_bram == pytest.approx(r.baseline_bram / r.n_bram)
    assert sum(b.columns * b.rows for b in r.bins) == r.n_bram
    assert sorted(i for b in r.bins for i in b.buffers) == list(range(len(spec)))
    costs = [c for _, c in r.convergence]
    assert costs == sorted(costs, reverse=True) and costs[-1] == r.n_bram


def test_run_pack_seed_determinism():
    a = run_pack("tincy-yolo", "sa-nfd", seed=4, overrides={"max_iterations": 300}, budget=None)
    b = run_pack("tincy-yolo", "sa-nfd", seed=4, overrides={"max_iterations": 300}, budget=None)
    assert a.deterministic_view() == b.deterministic_view()


def test_run_pack_intra():
    spec = load_spec("cnv-w1a1")
    r = run_pack(spec, "ga-nfd", seed=1, constraints=Constraints(intra_layer_only=True),
                 overrides=QUICK, budget=10)
    assert all(len({spec.buffers[i].layer_id for i in b.buffers}) == 1 for b in r.bins)


def test_compare():
    cmp = compare("cnv-w1a1", ["ga-nfd", "sa-nfd"], [1, 2], budget=10, overrides=QUICK)
    assert [r.algorithm for r in cmp.rows] == ["ga-nfd", "sa-nfd"]
    row = cmp.row("ga-nfd")
    assert len(row.costs) == 2 and row.best_bram == min(row.costs)
    assert "ga-nfd" in cmp.format()
    assert len(cmp.to_json()["reports"]) == 4
    with pytest.raises(ValueError):
        compare("cnv-w1a1", ["ga-nfd"], [])
    with pytest.raises(ValueError):
        compare("cnv-w1a1", [], [1])


def test_efficiency_baseline_mode():
    rows = efficiency_table(["cnv-w1a1", "rn50-w1a2"], "baseline")
    assert [r.delta_bram for r in rows] == [1.0, 1.0]
    assert rows[0].n_bram == 116
    assert rows[1].efficiency == pytest.approx(mapping_efficiency(22_020_096, 1872))
    with pytest.raises(ValueError):
        efficiency_table(["cnv-w1a1"], "mixed")


def test_efficiency_inter_cnv():
    (row,) = efficiency_table(["cnv-w1a1"], "inter", budget=10)
    assert row.efficiency >= 0.83
    assert row.label == "cnv-w1a1-inter"


def test_sweep_single_and_deterministic():
    a = sweep_population("cnv-w2a2", [6], repeats=1, budget=10)
    assert len(a) == 1 and len(a[0].final_costs) == 1
    b = sweep_population("cnv-w2a2", [6], repeats=1, budget=10)
    assert a[0].final_costs == b[0].final_costs
    text = population_csv(a)
    assert text.splitlines()[0] == "population_size,repeat,final_cost,t_converge_seconds"
    assert text.splitlines()[1].startswith("6,0,")
    with pytest.raises(ValueError):
        sweep_population("cnv-w2a2", [], repeats=1)


def test_worker_count(monkeypatch):
    monkeypatch.setattr(bench.os, "cpu_count", lambda: 8)
    monkeypatch.setenv("MEMBIN_THREADS", "3")
    assert worker_count(10) == 3
    assert worker_count(2) == 2
    monkeypatch.delenv("MEMBIN_THREADS")
    assert worker_count(100) == 8


def test_process_pool_matches_serial(monkeypatch):
    spec = load_spec("cnv-w1a1")
    jobs = [(spec, "sa-nfd", s, Constraints(), CostModel.default().modes,
             {"max_iterations": 200}, None) for s in (1, 2)]
    serial = [r.deterministic_view() for r in bench.run_many(jobs)]
    monkeypatch.setattr(bench, "worker_count", lambda n: 2)
    pooled = [r.deterministic_view() for r in bench.run_many(jobs)]
    assert serial == pooled
