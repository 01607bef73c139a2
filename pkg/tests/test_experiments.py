import json

import pytest

from photon_model import albireo
from photon_model.evaluator import evaluate
from photon_model.experiments import (
    ExperimentConfig,
    FusionInfeasible,
    _buffer_level,
    _insert_batch_loop,
    _sweep_layer,
    accelerator_scope,
    check_fusible,
    parse_experiment_config,
    run_experiment,
    run_memory_experiment,
    run_reuse_sweep,
)
from photon_model.mapper import SearchConfig, search
from photon_model.reuse import analyze
from photon_model.spec_model import Layer, Mapping, SpecError, canonical_json

TINY_WORKLOAD = {
    "spec_version": 1,
    "workload": {
        "name": "tiny",
        "layers": [
            {"name": "a", "kind": "conv",
             "dims": {"N": 1, "K": 8, "C": 4, "P": 7, "Q": 7, "R": 3,
                      "S": 3}},
            {"name": "b", "kind": "conv",
             "dims": {"N": 1, "K": 8, "C": 8, "P": 7, "Q": 7, "R": 3,
                      "S": 3}},
        ],
    },
}


@pytest.fixture
def tiny_workload(tmp_path):
    p = tmp_path / "tiny.spec"
    p.write_text(json.dumps(TINY_WORKLOAD))
    return str(p)


def small_layer():
    return Layer(name="toy", kind="conv",
                 dims={"N": 1, "K": 8, "C": 4, "P": 7, "Q": 7, "R": 3,
                       "S": 3})


def searched_mapping(arch, layer, budget=200, seed=3):
    cfg = SearchConfig(objective="energy", budget=budget, seed=seed,
                       strategy="pruned_random", pad_mode="pad",
                       fixed_spatial=albireo.geometry_pins(layer))
    return search(arch, layer, cfg).mapping


def test_config_validation():
    with pytest.raises(SpecError):
        ExperimentConfig(experiment="roofline")
    with pytest.raises(SpecError):
        ExperimentConfig(experiment="memory", batch_sizes=())
    with pytest.raises(SpecError):
        ExperimentConfig(experiment="memory", batch_sizes=(0,))
    with pytest.raises(SpecError):
        ExperimentConfig(experiment="reuse_sweep", sweep_values=())
    with pytest.raises(SpecError):
        ExperimentConfig(experiment="reuse_sweep", sweep_axis="laser_power")
    with pytest.raises(SpecError):
        ExperimentConfig(experiment="breakdown", profile="middling")
    with pytest.raises(SpecError):
        ExperimentConfig(experiment="breakdown", fusion="maybe")
    with pytest.raises(SpecError):
        ExperimentConfig(experiment="breakdown", budget=0)


def test_parse_experiment_config():
    cfg = parse_experiment_config({"experiment": "memory",
                                   "batch_sizes": [4, 16],
                                   "budget": 50})
    assert cfg.batch_sizes == (4, 16)
    assert cfg.budget == 50
    with pytest.raises(SpecError):
        parse_experiment_config({"experiment": "memory", "speed": 9})
    with pytest.raises(SpecError):
        parse_experiment_config({"budget": 50})


def test_accelerator_scope_drops_dram():
    scoped = accelerator_scope({"dram": 5.0, "register": 1.0})
    assert scoped == {"register": 1.0}


def test_batch_insertion_amortizes_weights_exactly():
    # Per-batch weight DRAM traffic stays constant while input and output
    # traffic scale linearly with the batch, so per-inference weight fills
    # are baseline/B.
    arch = albireo.architecture("aggressive")
    layer = small_layer()
    mapping = searched_mapping(arch, layer)
    lvl = _buffer_level(arch)
    assert arch.levels[lvl].name == "global_buffer"
    base = analyze(arch, layer, mapping)
    w0 = base.per_level[(0, "Weights")].reads
    i0 = base.per_level[(0, "Inputs")].reads
    o0 = base.per_level[(0, "Outputs")]
    for b in (1, 2, 4, 8):
        m = _insert_batch_loop(mapping, lvl, b)
        c = analyze(arch, layer, m)
        assert c.per_level[(0, "Weights")].reads == w0
        assert c.per_level[(0, "Inputs")].reads == b * i0
        assert c.per_level[(0, "Outputs")].updates == b * o0.updates
        assert c.macs == b * base.macs


def test_fusion_override_changes_only_intermediate_traffic():
    # Dropping Outputs from the DRAM keep-set on a fixed schedule must not
    # change MACs, conversions, or any inner-level count; only the DRAM and
    # buffer rows for Outputs move.
    arch = albireo.architecture("aggressive")
    layer = small_layer()
    cfg = SearchConfig(objective="energy", budget=200, seed=5,
                       strategy="pruned_random", pad_mode="pad",
                       fixed_spatial=albireo.geometry_pins(layer),
                       keep_overrides={0: ("Weights", "Inputs")})
    fused = search(arch, layer, cfg).mapping
    unfused = Mapping(levels=fused.levels, batch_size=fused.batch_size,
                      keep_overrides={}, pad=fused.pad)
    cf = analyze(arch, layer, fused)
    cu = analyze(arch, layer, unfused)
    assert cf.macs == cu.macs
    assert cf.conversions == cu.conversions
    for (lvl, t), lc in cu.per_level.items():
        if t != "Outputs" or lvl >= 2:
            assert cf.per_level.get((lvl, t)) == lc
    assert (0, "Outputs") not in cf.per_level


def test_check_fusible_gates_on_buffer_capacity():
    big = Layer(name="huge", kind="conv",
                dims={"N": 1, "K": 512, "C": 3, "P": 224, "Q": 224, "R": 3,
                      "S": 3})
    nxt = Layer(name="next", kind="conv",
                dims={"N": 1, "K": 8, "C": 512, "P": 224, "Q": 224, "R": 3,
                      "S": 3})
    capacity = 1 << 24
    with pytest.raises(FusionInfeasible) as e:
        check_fusible(big, nxt, capacity)
    assert e.value.required_bits == 512 * 224 * 224 * 8
    assert e.value.capacity == capacity
    # A batch multiplies the held intermediate.
    small = Layer(name="ok", kind="conv",
                  dims={"N": 1, "K": 8, "C": 8, "P": 16, "Q": 16, "R": 3,
                        "S": 3})
    assert check_fusible(small, nxt, capacity) == 8 * 16 * 16 * 8
    with pytest.raises(FusionInfeasible):
        check_fusible(small, nxt, 8 * 16 * 16 * 8, batch_size=2)


def test_memory_identity_configuration(tiny_workload):
    # batch_size 1 with fusion off adds a batched leg that must coincide
    # with the baseline exactly.
    cfg = ExperimentConfig(experiment="memory", workload=tiny_workload,
                           batch_sizes=(1,), fusion="off", budget=80)
    report = run_memory_experiment(cfg)
    legs = {r["leg"]: r for r in report["tables"]["legs"]}
    assert set(legs) == {"baseline", "batched"}
    assert legs["batched"]["energy_per_inference_pj"] == pytest.approx(
        legs["baseline"]["energy_per_inference_pj"])
    assert legs["batched"]["improvement_vs_baseline"] == pytest.approx(1.0)
    assert legs["baseline"]["dram_weight_reads_per_batch"] == \
        legs["batched"]["dram_weight_reads_per_batch"]


def test_memory_batching_amortizes(tiny_workload):
    cfg = ExperimentConfig(experiment="memory", workload=tiny_workload,
                           batch_sizes=(4,), fusion="off", budget=80)
    report = run_memory_experiment(cfg)
    legs = {r["leg"]: r for r in report["tables"]["legs"]}
    base = legs["baseline"]
    batched = legs["batched"]
    assert batched["batch_size"] == 4
    assert batched["dram_weight_reads_per_batch"] == \
        base["dram_weight_reads_per_batch"]
    assert batched["latency_per_batch_ms"] > base["latency_per_batch_ms"]


def test_sweep_layer_selection():
    cfg = ExperimentConfig(experiment="reuse_sweep")
    assert _sweep_layer(cfg).name == "conv1_2"


def test_reuse_sweep_targeted_counts_halve(tiny_workload):
    cfg = ExperimentConfig(experiment="reuse_sweep",
                           sweep_axis="ao_per_ae_weight",
                           sweep_values=(1, 2), budget=60, seed=7)
    report = run_reuse_sweep(cfg)
    rows = report["tables"]["sweep"]
    assert [r["value"] for r in rows] == [1, 2]
    assert rows[1]["targeted_conversions"] * 2 == \
        rows[0]["targeted_conversions"]
    assert report["targeted_converter"] == ["mzm_bank", "Weights"]


def test_reports_are_deterministic(tiny_workload):
    mem = ExperimentConfig(experiment="memory", workload=tiny_workload,
                           batch_sizes=(2,), fusion="on", budget=80)
    sweep = ExperimentConfig(experiment="reuse_sweep",
                             sweep_axis="ae_output_fanout",
                             sweep_values=(1, 2), budget=60)
    for cfg in (mem, sweep):
        a = canonical_json(run_experiment(cfg))
        b = canonical_json(run_experiment(cfg))
        assert a == b


def test_report_schema(tiny_workload):
    cfg = ExperimentConfig(experiment="memory", workload=tiny_workload,
                           batch_sizes=(2,), budget=80)
    report = run_experiment(cfg)
    assert report["schema_version"] == 1
    assert report["experiment"] == "memory"
    assert report["config"]["workload"] == tiny_workload
    assert {"legs", "fusion_pairs", "components"} <= set(report["tables"])
    json.dumps(report)
