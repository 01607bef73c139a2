"""Scratch: derive golden constants from the interpreter oracle, cross-check
against analyze, print for freezing into tests. Not part of the package."""

import sys
sys.path.insert(0, "tests")

from photon_model.spec_model import (
    Architecture, ComponentSpec, Converter, Layer, Level, LevelMapping,
    Mapping, Mesh, validate_architecture, validate_mapping,
)
from photon_model.reuse import analyze, reuse_factors
from photon_model.oracle import simulate


def storage(name, domain, cap):
    return ComponentSpec(name=name, cls="storage", domain_in=domain,
                         domain_out=domain,
                         energy_per_action={"read": 1.0, "write": 1.0,
                                            "update": 1.5},
                         capacity_bits=cap)


def compute(name, domain):
    return ComponentSpec(name=name, cls="compute", domain_in=domain,
                         domain_out=domain,
                         energy_per_action={"compute": 0.5})


def converter(name, din, dout):
    return ComponentSpec(name=name, cls="converter", domain_in=din,
                         domain_out=dout, energy_per_action={"convert": 2.0})


def both(arch, layer, mapping):
    validate_mapping(mapping, layer, arch)
    a = analyze(arch, layer, mapping)
    s = simulate(arch, layer, mapping)
    assert a.per_level == s.per_level, (a.per_level, s.per_level)
    assert a.conversions == s.conversions, (a.conversions, s.conversions)
    assert a.macs == s.macs and a.real_macs == s.real_macs
    assert a.edge_crossings == s.edge_crossings
    assert a.edge_demand == s.edge_demand
    return a


# G1: FC K=2 C=3, store feeding one MAC directly
arch1 = Architecture(
    name="fc2", clock_ghz=1.0,
    levels=(Level("store", storage("sram", "DE", 1 << 20), 1,
                  ("Weights", "Inputs", "Outputs")),
            Level("pe", compute("mac", "DE"), 1, ())),
    meshes=(Mesh(),), converters=())
validate_architecture(arch1)
fc = Layer(name="fc", kind="fully_connected",
           dims={"N": 1, "K": 2, "C": 3, "R": 1, "S": 1, "P": 1, "Q": 1})
m1 = Mapping(levels=(LevelMapping(temporal={"K": 2, "C": 3}),
                     LevelMapping()))
c1 = both(arch1, fc, m1)
print("G1 per_level:", dict(sorted(c1.per_level.items())))
print("G1 macs:", c1.macs, "compute_reads:", c1.compute_reads)

# G2: same layer, inner buffer keeping Weights entirely, C innermost
arch2 = Architecture(
    name="fc3", clock_ghz=1.0,
    levels=(Level("store", storage("sram", "DE", 1 << 20), 1,
                  ("Weights", "Inputs", "Outputs")),
            Level("wbuf", storage("wreg", "DE", 1 << 10), 1, ("Weights",)),
            Level("pe", compute("mac", "DE"), 1, ())),
    meshes=(Mesh(), Mesh()), converters=())
validate_architecture(arch2)
m2 = Mapping(levels=(LevelMapping(),
                     LevelMapping(temporal={"K": 2, "C": 3},
                                  permutation=("K", "C")),
                     LevelMapping()))
c2 = both(arch2, fc, m2)
print("G2 per_level:", dict(sorted(c2.per_level.items())))

# G3: conv K=4 C=2 R=S=3 P=Q=4, fanout 4 on K, input multicast, DE->AE edge
arch3 = Architecture(
    name="kfan", clock_ghz=1.0,
    levels=(Level("store", storage("sram", "DE", 1 << 24), 1,
                  ("Weights", "Inputs", "Outputs")),
            Level("pe", compute("amac", "AE"), 4, ())),
    meshes=(Mesh(may_multicast=True),),
    converters=(Converter("dn", converter("dac", "DE", "AE"), 1,
                          ("Weights", "Inputs"), 4),
                Converter("up", converter("adc", "AE", "DE"), 1,
                          ("Outputs",), 4)))
validate_architecture(arch3)
conv = Layer(name="conv", kind="conv",
             dims={"N": 1, "K": 4, "C": 2, "R": 3, "S": 3, "P": 4, "Q": 4})
m3 = Mapping(levels=(LevelMapping(temporal={"C": 2, "R": 3, "S": 3,
                                            "P": 4, "Q": 4}),
                     LevelMapping(spatial={"K": 4})))
c3 = both(arch3, conv, m3)
print("G3 macs:", c3.macs)
print("G3 conversions:", dict(sorted(c3.conversions.items())))
print("G3 per_level:", dict(sorted(c3.per_level.items())))
print("G3 edge_demand:", dict(sorted(c3.edge_demand.items())))
rf3 = reuse_factors(c3, arch3, m3)
for r in rf3:
    print("G3 rf:", r)

# G4: weight sharing sweep, fanout on Q at the compute level
for share in (1, 2, 4):
    lm1 = LevelMapping(temporal={"C": 2, "R": 3, "S": 3, "P": 4,
                                 "Q": 4 // share, "K": 4})
    arch4 = Architecture(
        name=f"wshare{share}", clock_ghz=1.0,
        levels=(Level("store", storage("sram", "DE", 1 << 24), 1,
                      ("Weights", "Inputs", "Outputs")),
                Level("pe", compute("amac", "AE"), share, ())),
        meshes=(Mesh(may_multicast=True),),
        converters=(Converter("dn", converter("dac", "DE", "AE"), 1,
                              ("Weights", "Inputs"), share),
                    Converter("up", converter("adc", "AE", "DE"), 1,
                              ("Outputs",), share)))
    validate_architecture(arch4)
    m4 = Mapping(levels=(lm1, LevelMapping(spatial={"Q": share})))
    c4 = both(arch4, conv, m4)
    print(f"G4 share={share} conversions:",
          dict(sorted(c4.conversions.items())))

# G5: spatial fanout 4 on N, weights multicast factor 4
arch5 = Architecture(
    name="nfan", clock_ghz=1.0,
    levels=(Level("store", storage("sram", "DE", 1 << 24), 1,
                  ("Weights", "Inputs", "Outputs")),
            Level("pe", compute("mac", "DE"), 4, ())),
    meshes=(Mesh(may_multicast=True),), converters=())
validate_architecture(arch5)
nconv = Layer(name="nconv", kind="conv",
              dims={"N": 4, "K": 2, "C": 2, "R": 1, "S": 1, "P": 2, "Q": 2})
m5 = Mapping(levels=(LevelMapping(temporal={"K": 2, "C": 2, "P": 2, "Q": 2}),
                     LevelMapping(spatial={"N": 4})))
c5 = both(arch5, nconv, m5)
for r in reuse_factors(c5, arch5, m5):
    print("G5 rf:", r)

# G6: degenerate all-ones layer on the converter arch
ones = Layer(name="one", kind="conv",
             dims={d: 1 for d in ("N", "K", "C", "R", "S", "P", "Q")})
m6 = Mapping(levels=(LevelMapping(), LevelMapping()))
c6 = both(arch3, ones, m6)
print("G6 macs:", c6.macs, "conversions:", dict(sorted(c6.conversions.items())))
print("G6 per_level:", dict(sorted(c6.per_level.items())))

# G7: stride-2 conv with padding: padded vs real MACs
sconv = Layer(name="sconv", kind="conv",
              dims={"N": 1, "K": 3, "C": 1, "R": 2, "S": 2, "P": 3, "Q": 3},
              stride=(2, 2))
m7 = Mapping(levels=(LevelMapping(temporal={"K": 1, "C": 1, "R": 2, "S": 2,
                                            "P": 3, "Q": 3}),
                     LevelMapping(spatial={"K": 4})),
             pad=True)
c7 = both(arch3, sconv, m7)
print("G7 macs:", c7.macs, "real:", c7.real_macs)
