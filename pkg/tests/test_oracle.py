import pytest

from photon_model.oracle import OracleCapExceeded, simulate
from photon_model.reuse import analyze
from photon_model.spec_model import Layer, LevelMapping, Mapping

import toys


def test_degenerate_single_iteration_nest():
    arch = toys.fanout_converter_arch(fanout=4)
    m = Mapping(levels=(LevelMapping(), LevelMapping()))
    c = simulate(arch, toys.ones_layer(), m)
    assert c.macs == 1
    assert c.real_macs == 1
    for t in ("Weights", "Inputs", "Outputs"):
        assert c.per_level[(0, t)].reads == 1
    assert c.conversions == {("dn", "Inputs"): 1, ("dn", "Weights"): 1,
                             ("up", "Outputs"): 1}


def test_padded_macs_counted_separately():
    # K=3 padded to 4 lanes: 144 padded MACs drive the nest, 108 are real.
    arch = toys.fanout_converter_arch(fanout=4)
    layer = Layer(name="sconv", kind="conv",
                  dims={"N": 1, "K": 3, "C": 1, "R": 2, "S": 2, "P": 3,
                        "Q": 3},
                  stride=(2, 2))
    m = Mapping(levels=(LevelMapping(temporal={"R": 2, "S": 2, "P": 3,
                                               "Q": 3}),
                        LevelMapping(spatial={"K": 4})),
                pad=True)
    c = simulate(arch, layer, m)
    assert c.macs == 144
    assert c.real_macs == 108


def test_interpreter_cap():
    arch = toys.fc_direct()
    layer = Layer(name="big", kind="fully_connected",
                  dims={"N": 1, "K": 64, "C": 64, "R": 1, "S": 1, "P": 1,
                        "Q": 1})
    m = Mapping(levels=(LevelMapping(temporal={"K": 64, "C": 64}),
                        LevelMapping()))
    with pytest.raises(OracleCapExceeded) as e:
        simulate(arch, layer, m, cap=1000)
    assert e.value.macs == 4096
    assert e.value.cap == 1000
    # The default cap admits it.
    assert simulate(arch, layer, m).macs == 4096


def test_oracle_matches_analyze_on_fixed_instances():
    arch = toys.fanout_converter_arch(fanout=4)
    mappings = [
        Mapping(levels=(LevelMapping(temporal={"C": 2, "R": 3, "S": 3,
                                               "P": 4, "Q": 4}),
                        LevelMapping(spatial={"K": 4}))),
        Mapping(levels=(LevelMapping(temporal={"C": 2, "R": 3, "S": 3,
                                               "P": 2, "K": 4, "Q": 4},
                                     permutation=("K", "C", "P")),
                        LevelMapping(spatial={"P": 2}))),
    ]
    for m in mappings:
        a = analyze(arch, toys.conv_k4(), m)
        s = simulate(arch, toys.conv_k4(), m)
        assert a == s
