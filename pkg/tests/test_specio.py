import json

import pytest
from hypothesis import given, strategies as st

from membin.ga import GaParams
from membin.sa import SaParams
from membin.specio import (BUILTIN_SPECS, PRESETS, BinRecord, ResultReport, SpecError,
                           builtin_hyperparams, builtin_spec, builtin_spec_text, convergence_csv,
                           emit_report, load_spec, parse_report, parse_spec,
                           read_convergence_csv, spec_to_dict)

# buffer counts as published for each network
PUBLISHED_BUFFERS = {"cnv-w1a1": 43, "cnv-w2a2": 28, "tincy-yolo": 137,
                     "dorefanet": 320, "rebnet": 552, "rn50-w1a2": 896}


@pytest.mark.parametrize("name", BUILTIN_SPECS)
def test_builtin_buffer_counts(name, derived):
    spec = builtin_spec(name)
    assert len(spec) == PUBLISHED_BUFFERS[name] == derived["networks"][name]["buffers"]
    assert spec.total_bits == derived["networks"][name]["total_bits"]


def test_cnv_w1a1_rows():
    spec = builtin_spec("cnv-w1a1")
    assert len(spec.layers) == 7
    first = spec.layers[0]
    assert (first.pe, first.simd, first.depth, first.width) == (16, 32, 144, 1)


def test_unknown_builtin():
    with pytest.raises(KeyError):
        builtin_spec("rn101-w1a2")


def test_aliases():
    assert builtin_spec("RN50").name == builtin_spec("rn50-w1a2").name


def test_tincy_has_provenance_note():
    assert builtin_spec("tincy-yolo").provenance


def test_parse_errors():
    with pytest.raises(SpecError):
        parse_spec("{not json")
    with pytest.raises(SpecError):
        parse_spec(json.dumps({"name": "x", "layers": []}))
    with pytest.raises(SpecError):
        parse_spec(json.dumps({"name": "x", "layers": [
            {"layer_id": 0, "pe": 0, "simd": 1, "depth": 1, "width": 1}]}))
    with pytest.raises(SpecError):
        parse_spec(json.dumps({"name": "x", "layers": [
            {"layer_id": 0, "pe": 1, "simd": 1, "depth": 1, "width": 1},
            {"layer_id": 0, "pe": 1, "simd": 1, "depth": 1, "width": 1}]}))
    with pytest.raises(SpecError):
        parse_spec(json.dumps({"name": "x", "layers": [
            {"layer_id": 0, "pe": 1.5, "simd": 1, "depth": 1, "width": 1}]}))
    with pytest.raises(SpecError):
        parse_spec(json.dumps({"name": "x", "layers": [{"layer_id": 0}]}))
    with pytest.raises(SpecError):
        parse_spec(json.dumps({"schema_version": 99, "name": "x", "layers": []}))


@pytest.mark.parametrize("name", BUILTIN_SPECS)
def test_spec_round_trip(name, tmp_path):
    spec = builtin_spec(name)
    again = parse_spec(json.dumps(spec_to_dict(spec)))
    assert again == spec and again.layers == spec.layers
    path = tmp_path / "s.json"
    path.write_text(builtin_spec_text(name))
    assert load_spec(str(path)) == spec


def test_presets():
    ga = builtin_hyperparams("rn50-w1a2", "ga")
    assert isinstance(ga, GaParams)
    assert (ga.population_size, ga.tournament_size, ga.nfd.p_adm_w, ga.nfd.p_adm_h, ga.p_mut) == \
        (75, 5, 0.0, 0.1, 0.4)
    sa = builtin_hyperparams("cnv-w1a1", "sa")
    assert isinstance(sa, SaParams) and (sa.t0, sa.cooling_rate) == (30, 1)
    assert builtin_hyperparams("rebnet", "ga").nfd.p_adm_w == 1.0
    assert builtin_hyperparams("cnv-w1a1", "ga-s").mutation_operator == "swap"
    assert builtin_hyperparams("cnv-w1a1", "sa-nfd").perturbation == "nfd"
    assert builtin_hyperparams("cnv-w1a1", "ga", efficiency_threshold=0.9).nfd.efficiency_threshold == 0.9
    with pytest.raises(KeyError):
        builtin_hyperparams("lenet", "ga")
    with pytest.raises(KeyError):
        builtin_hyperparams("cnv-w1a1", "pso")
    assert set(BUILTIN_SPECS) <= set(PRESETS)


def _report(**kw):
    base = dict(spec_name="cnv-w1a1", algorithm="ga-nfd", seed=1,
                constraints={"c_max": 4, "intra_layer_only": False, "strict_width_match": True},
                cost_model={"modes": [[18, 1024]], "nominal_capacity_bits": 18432},
                n_bram=96, baseline_bram=120, total_bits=1_531_904,
                efficiency=1_531_904 / (96 * 18432), delta_bram=120 / 96,
                bins=[BinRecord((36, 512), 1, 2, [0, 1])],
                convergence=[(0.0, 120), (0.25, 100), (1.5, 96)])
    base.update(kw)
    return ResultReport(**base)


def test_report_efficiency_field():
    assert round(_report().efficiency, 3) == 0.866


def test_report_round_trip():
    r = _report()
    again = parse_report(emit_report(r, "json"))
    assert again == r
    assert again.convergence == r.convergence


@given(n=st.integers(1, 10_000), bits=st.integers(1, 10**9), seed=st.one_of(st.none(), st.integers(0, 2**31)),
       conv=st.lists(st.tuples(st.floats(0, 1e4, allow_nan=False), st.integers(1, 10**6)), max_size=20),
       groups=st.lists(st.lists(st.integers(0, 1000), min_size=1, max_size=4), max_size=10))
def test_report_round_trip_property(n, bits, seed, conv, groups):
    r = _report(n_bram=n, total_bits=bits, seed=seed, efficiency=bits / (n * 18432),
                convergence=conv, bins=[BinRecord((18, 1024), 1, 1, g) for g in groups])
    assert parse_report(emit_report(r, "json")) == r


def test_human_report_layout():
    text = emit_report(_report(), "human")
    assert "86.6%" in text and "1.25x" in text and text.startswith("Accelerator")
    with pytest.raises(ValueError):
        emit_report(_report(), "xml")


def test_deterministic_view_drops_times():
    a = _report(elapsed_seconds=1.0)
    b = _report(elapsed_seconds=2.0, convergence=[(0.1, 120), (0.3, 100), (9.0, 96)])
    assert a.deterministic_view() == b.deterministic_view()


def test_convergence_csv_round_trip():
    entries = [(0.0, 120), (0.5, 100), (1.25, 96)]
    text = convergence_csv(entries)
    assert text.splitlines()[0] == "t_seconds,best_cost"
    assert read_convergence_csv(text) == entries
    with pytest.raises(ValueError):
        read_convergence_csv("a,b\n")
