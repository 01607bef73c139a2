import pytest

from photon_model.spec_model import (
    Architecture,
    Converter,
    Layer,
    Level,
    LevelMapping,
    Mapping,
    MappingError,
    Mesh,
    SpecError,
    canonical_json,
    input_extent,
    mapping_digest,
    parse_layer,
    parse_mapping,
    parse_spec,
    serialize_architecture,
    serialize_mapping,
    serialize_spec,
    validate_architecture,
    validate_mapping,
)
from photon_model.workloads import load_spec

import toys


def minimal_doc(mac_domain="DE", converters=()):
    return {
        "spec_version": 1,
        "components": [
            {"name": "sram", "class": "storage", "domain": "DE",
             "energy_per_action": {"read": 1.0, "write": 1.0},
             "capacity_bits": 65536},
            {"name": "mac", "class": "compute", "domain": mac_domain,
             "energy_per_action": {"compute": 0.5}},
            {"name": "dac", "class": "converter", "domain_in": "DE",
             "domain_out": "AE", "energy_per_action": {"convert": 2.0}},
            {"name": "adc", "class": "converter", "domain_in": "AE",
             "domain_out": "DE", "energy_per_action": {"convert": 2.0}},
        ],
        "architecture": {
            "name": "mini",
            "levels": [
                {"name": "store", "component": "sram",
                 "keeps": ["Weights", "Inputs", "Outputs"]},
                {"name": "pe", "component": "mac"},
            ],
            "converters": list(converters),
        },
    }


def test_minimal_two_level_document_parses():
    spec = parse_spec(minimal_doc())
    assert spec.architecture is not None
    assert len(spec.architecture.levels) == 2
    assert spec.architecture.converters == ()


def test_domain_crossing_without_converter_rejected():
    with pytest.raises(SpecError) as e:
        parse_spec(minimal_doc(mac_domain="AE"))
    assert e.value.kind == "MissingConverter"


def test_domain_crossing_with_converters_accepted():
    doc = minimal_doc(mac_domain="AE", converters=[
        {"name": "dn", "component": "dac", "between": ["store", "pe"],
         "tensors": ["Weights", "Inputs"]},
        {"name": "up", "component": "adc", "between": ["store", "pe"],
         "tensors": ["Outputs"]},
    ])
    arch = parse_spec(doc).architecture
    assert [c.name for c in arch.converters] == ["dn", "up"]
    assert arch.converters[0].edge == 1


def test_partial_converter_coverage_still_rejected():
    # Down conversion for weights only: inputs still cross uncovered.
    doc = minimal_doc(mac_domain="AE", converters=[
        {"name": "dn", "component": "dac", "between": ["store", "pe"],
         "tensors": ["Weights"]},
        {"name": "up", "component": "adc", "between": ["store", "pe"],
         "tensors": ["Outputs"]},
    ])
    with pytest.raises(SpecError) as e:
        parse_spec(doc)
    assert e.value.kind == "MissingConverter"
    assert "Inputs" in str(e.value)


def test_duplicate_converter_coverage_rejected():
    doc = minimal_doc(mac_domain="AE", converters=[
        {"name": "dn", "component": "dac", "between": ["store", "pe"],
         "tensors": ["Weights", "Inputs"]},
        {"name": "dn2", "component": "dac", "between": ["store", "pe"],
         "tensors": ["Weights"]},
        {"name": "up", "component": "adc", "between": ["store", "pe"],
         "tensors": ["Outputs"]},
    ])
    with pytest.raises(SpecError) as e:
        parse_spec(doc)
    assert e.value.kind == "MalformedDocument"


def test_spec_version_is_mandatory():
    doc = minimal_doc()
    del doc["spec_version"]
    with pytest.raises(SpecError) as e:
        parse_spec(doc)
    assert e.value.kind == "MalformedDocument"
    assert "spec_version" in e.value.path


def test_unknown_top_level_field_rejected():
    doc = minimal_doc()
    doc["architectures"] = doc.pop("architecture")
    with pytest.raises(SpecError) as e:
        parse_spec(doc)
    assert "architectures" in str(e.value)


def test_unknown_component_reference():
    doc = minimal_doc()
    doc["architecture"]["levels"][0]["component"] = "sram2"
    with pytest.raises(SpecError) as e:
        parse_spec(doc)
    assert e.value.kind == "UnknownComponent"


def test_bundled_accelerator_has_four_converter_banks():
    arch = load_spec("albireo").architecture
    crossings = {(c.component.domain_in, c.component.domain_out)
                 for c in arch.converters}
    assert crossings == {("DE", "AE"), ("AE", "DE"), ("AE", "AO"),
                         ("AO", "AE")}
    assert len(arch.converters) == 4


def test_layer_bits_shorthand():
    layer = parse_layer({"name": "l", "kind": "fully_connected",
                         "dims": {"N": 1, "K": 2, "C": 3}, "bits": 4},
                        "workload")
    assert layer.bits == {"Weights": 4, "Inputs": 4, "Outputs": 4}
    assert layer.dims["P"] == 1


def test_fully_connected_window_consistency():
    with pytest.raises(SpecError) as e:
        parse_layer({"name": "l", "kind": "fully_connected",
                     "dims": {"N": 1, "K": 2, "C": 3, "P": 2}}, "workload")
    assert e.value.kind == "BadBound"


def test_input_extent_window_arithmetic():
    assert input_extent(4, 3, 1) == 6
    assert input_extent(3, 2, 2) == 6
    assert input_extent(1, 1, 1) == 1


def test_mapping_factor_split_accepted():
    arch = toys.fanout_converter_arch(fanout=4)
    layer = Layer(name="fc", kind="fully_connected",
                  dims={"N": 1, "K": 8, "C": 1, "R": 1, "S": 1, "P": 1,
                        "Q": 1})
    m = Mapping(levels=(LevelMapping(temporal={"K": 2}),
                        LevelMapping(spatial={"K": 4})))
    validate_mapping(m, layer, arch)


def test_mapping_factor_mismatch_rejected():
    arch = toys.fanout_converter_arch(fanout=4)
    layer = Layer(name="fc", kind="fully_connected",
                  dims={"N": 1, "K": 8, "C": 1, "R": 1, "S": 1, "P": 1,
                        "Q": 1})
    m = Mapping(levels=(LevelMapping(temporal={"K": 2}),
                        LevelMapping(spatial={"K": 3})))
    with pytest.raises(MappingError) as e:
        validate_mapping(m, layer, arch)
    assert e.value.kind == "FactorMismatch"
    assert e.value.dim == "K"


def test_pad_mode_allows_overcoverage():
    arch = toys.fanout_converter_arch(fanout=4)
    layer = Layer(name="fc", kind="fully_connected",
                  dims={"N": 1, "K": 6, "C": 1, "R": 1, "S": 1, "P": 1,
                        "Q": 1})
    m = Mapping(levels=(LevelMapping(temporal={"K": 2}),
                        LevelMapping(spatial={"K": 4})), pad=True)
    validate_mapping(m, layer, arch)
    with pytest.raises(MappingError):
        validate_mapping(Mapping(levels=m.levels, pad=False), layer, arch)


def test_fanout_budget_enforced():
    arch = toys.fanout_converter_arch(fanout=4)
    layer = Layer(name="fc", kind="fully_connected",
                  dims={"N": 1, "K": 8, "C": 1, "R": 1, "S": 1, "P": 1,
                        "Q": 1})
    m = Mapping(levels=(LevelMapping(),
                        LevelMapping(spatial={"K": 8})))
    with pytest.raises(MappingError) as e:
        validate_mapping(m, layer, arch)
    assert e.value.kind == "FanoutExceeded"


def test_capacity_overflow_rejected():
    # 1024 weight values at 8 bits against a 4096-bit buffer.
    arch = toys.fc_weight_buffer(buf_bits=4096)
    layer = Layer(name="fc", kind="fully_connected",
                  dims={"N": 1, "K": 32, "C": 32, "R": 1, "S": 1, "P": 1,
                        "Q": 1})
    m = Mapping(levels=(LevelMapping(),
                        LevelMapping(),
                        LevelMapping(temporal={"K": 32, "C": 32})))
    with pytest.raises(MappingError) as e:
        validate_mapping(m, layer, arch)
    assert e.value.kind == "CapacityExceeded"
    assert e.value.level == "wbuf"
    assert e.value.tensor == "Weights"


def test_keep_override_cannot_add_tensors():
    arch = toys.fc_weight_buffer()
    m = Mapping(levels=(LevelMapping(temporal={"K": 2, "C": 3}),
                        LevelMapping(), LevelMapping()),
                keep_overrides={1: ("Inputs",)})
    with pytest.raises(MappingError) as e:
        validate_mapping(m, toys.fc_k2c3(), arch)
    assert e.value.kind == "FactorMismatch"


def test_hoisted_tensor_factors_stay_inside_origin():
    # Dropping Outputs from the store makes the buffer their origin; any
    # factor of an output dim above it (or split into it) is unmappable,
    # while the origin's own temporal loops remain fine.
    arch = Architecture(
        name="hoist", clock_ghz=1.0,
        levels=(Level("store", toys.storage("sram", "DE", 1 << 20), 1,
                      ("Weights", "Inputs", "Outputs")),
                Level("buf", toys.storage("buf", "DE", 1 << 16), 1,
                      ("Weights", "Inputs", "Outputs")),
                Level("pe", toys.compute("mac", "DE"), 4, ())),
        meshes=(Mesh(), Mesh()), converters=())
    validate_architecture(arch)
    layer = Layer(name="fc", kind="fully_connected",
                  dims={"N": 1, "K": 8, "C": 2, "R": 1, "S": 1, "P": 1,
                        "Q": 1})
    drop = {0: ("Weights", "Inputs")}

    good = Mapping(levels=(LevelMapping(temporal={"C": 2}),
                           LevelMapping(temporal={"K": 2}),
                           LevelMapping(spatial={"K": 4})),
                   keep_overrides=drop)
    validate_mapping(good, layer, arch)

    above = Mapping(levels=(LevelMapping(temporal={"K": 2, "C": 2}),
                            LevelMapping(),
                            LevelMapping(spatial={"K": 4})),
                    keep_overrides=drop)
    with pytest.raises(MappingError) as e:
        validate_mapping(above, layer, arch)
    assert e.value.kind == "FactorMismatch"
    assert e.value.tensor == "Outputs"


def test_architecture_requires_all_tensors_at_backing_store():
    with pytest.raises(SpecError):
        validate_architecture(Architecture(
            name="bad", clock_ghz=1.0,
            levels=(Level("store", toys.storage("sram", "DE", 1 << 20), 1,
                          ("Weights",)),
                    Level("pe", toys.compute("mac", "DE"), 1, ())),
            meshes=(Mesh(),), converters=()))


def test_spec_roundtrip_is_identity_on_canonical_form():
    for name in ("albireo", "vgg16", "alexnet"):
        spec = load_spec(name)
        doc = serialize_spec(spec)
        again = serialize_spec(parse_spec(doc))
        assert canonical_json(again) == canonical_json(doc)


def test_architecture_roundtrip_toy():
    arch = toys.fanout_converter_arch()
    doc = {"spec_version": 1,
           "components": [],
           "architecture": serialize_architecture(arch)}
    comps = {c.name: c for c in arch.components().values()}
    doc["components"] = [
        {"name": c.name, "class": c.cls, "domain_in": c.domain_in,
         "domain_out": c.domain_out, "energy_per_action": c.energy_per_action,
         "capacity_bits": c.capacity_bits, "bandwidth": c.bandwidth}
        for c in comps.values()]
    arch2 = parse_spec(doc).architecture
    assert serialize_architecture(arch2) == serialize_architecture(arch)


def test_mapping_roundtrip_and_digest():
    arch = toys.fc_weight_buffer()
    m = Mapping(levels=(LevelMapping(temporal={"K": 2}),
                        LevelMapping(temporal={"C": 3},
                                     permutation=("C",)),
                        LevelMapping()),
                batch_size=2, keep_overrides={1: ("Weights",)})
    doc = serialize_mapping(m, arch)
    again = parse_mapping(doc, arch)
    assert again == m
    assert mapping_digest(again) == mapping_digest(m)
    assert mapping_digest(m) != mapping_digest(
        Mapping(levels=m.levels, batch_size=1,
                keep_overrides=m.keep_overrides))
