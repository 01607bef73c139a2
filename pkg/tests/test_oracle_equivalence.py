"""Randomized equivalence between the analytical counts and the loop-nest
interpreter. Both engines must agree on every count field, and must reject
the same mappings for the same reason."""

import random

from photon_model.oracle import simulate
from photon_model.reuse import analyze
from photon_model.spec_model import MappingError

from randgen import random_instance

FIELDS = ("per_level", "conversions", "compute_reads", "macs", "real_macs",
          "edge_crossings", "edge_demand")


def outcome(fn, *args):
    try:
        return "ok", fn(*args)
    except MappingError as e:
        return e.kind, None


def run_equivalence(n_instances: int, seed: int):
    rng = random.Random(seed)
    stats = {"instances": 0, "rejected": 0, "hoisted": 0, "mismatches": []}
    for i in range(n_instances):
        arch, layer, mapping = random_instance(rng)
        stats["instances"] += 1
        if 0 in mapping.keep_overrides:
            stats["hoisted"] += 1
        a_kind, a = outcome(analyze, arch, layer, mapping)
        s_kind, s = outcome(simulate, arch, layer, mapping)
        if a_kind != s_kind:
            stats["mismatches"].append(
                (i, f"analyze {a_kind} vs simulate {s_kind}"))
            continue
        if a_kind != "ok":
            stats["rejected"] += 1
            continue
        for f in FIELDS:
            if getattr(a, f) != getattr(s, f):
                stats["mismatches"].append((i, f))
    return stats


def test_engines_agree_on_random_instances():
    stats = run_equivalence(120, seed=1234)
    assert stats["mismatches"] == []
    # The generator must actually exercise the interesting corners.
    assert stats["hoisted"] >= 5
    assert stats["rejected"] >= 1
    assert stats["instances"] - stats["rejected"] >= 80


def test_equivalence_covers_padded_and_batched():
    rng = random.Random(77)
    padded = batched = 0
    for _ in range(80):
        arch, layer, mapping = random_instance(rng)
        padded += mapping.pad
        batched += mapping.batch_size > 1
        a_kind, a = outcome(analyze, arch, layer, mapping)
        s_kind, s = outcome(simulate, arch, layer, mapping)
        assert a_kind == s_kind
        if a_kind == "ok":
            assert a == s
    assert padded >= 5
    assert batched >= 5
