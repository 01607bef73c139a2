"""Core domain types, spec-document ingestion, and mapping validation.

A system is described by three documents (JSON object trees):

* a component library: named parts with per-action energies, static power,
  area, and (for storage) capacity;
* an architecture: an ordered chain of levels from the outermost backing
  store down to the compute level, plus converters on the edges between
  levels, mesh capability flags per edge, and standalone extras such as
  lasers;
* a workload: a list of layers, each a 7-dim nest {N,K,C,R,S,P,Q} with
  strides and per-tensor value widths.

A mapping assigns every level temporal and spatial factors per dim plus a
loop order. This module also owns the loop-nest geometry (tile bounds,
tile sizes, instance counts, keeper chains) that the counting engines
build on, so that "what a tile is" has exactly one definition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

SPEC_VERSION = 1

DOMAINS = ("DE", "AE", "DO", "AO")
ACTIONS = ("read", "write", "update", "convert", "compute", "idle")
CLASSES = ("storage", "compute", "converter", "network", "source")

WEIGHTS = "Weights"
INPUTS = "Inputs"
OUTPUTS = "Outputs"
TENSORS = (WEIGHTS, INPUTS, OUTPUTS)

DIMS = ("N", "K", "C", "P", "Q", "R", "S")

# Dims that index each tensor. Inputs are addressed through the sliding
# window composition of (P,R) and (Q,S), so all six of those dims move the
# input tile.
TENSOR_DIMS = {
    WEIGHTS: frozenset({"K", "C", "R", "S"}),
    INPUTS: frozenset({"N", "C", "P", "Q", "R", "S"}),
    OUTPUTS: frozenset({"N", "K", "P", "Q"}),
}

# Dims reduced away when producing Outputs.
REDUCED_DIMS = frozenset({"C", "R", "S"})


# ============================================================================
# Errors
# ============================================================================


class SpecError(Exception):
    """A document violates the format or a structural invariant.

    kind is one of: MalformedDocument, UnknownComponent, BadBound,
    CapacityNonPositive, MissingConverter. path points at the offending
    node, e.g. "architecture.levels[2]".
    """

    def __init__(self, kind: str, path: str, message: str):
        self.kind = kind
        self.path = path
        super().__init__(f"{kind} at {path}: {message}")


class MappingError(Exception):
    """A mapping is invalid for a given architecture and layer.

    kind is one of: FactorMismatch, FanoutExceeded, CapacityExceeded,
    ConverterMissing.
    """

    def __init__(self, kind: str, message: str, *, dim: str | None = None,
                 level: str | None = None, tensor: str | None = None):
        self.kind = kind
        self.dim = dim
        self.level = level
        self.tensor = tensor
        super().__init__(f"{kind}: {message}")


# ============================================================================
# Component and architecture types
# ============================================================================


@dataclass(frozen=True)
class ComponentSpec:
    """One hardware part. Energies are pJ per action, power is mW, area um^2.

    cls is the component class ("class" is reserved in Python). Converters
    carry distinct domain_in/domain_out; every other class has
    domain_in == domain_out. bandwidth is actions per cycle per instance.
    """

    name: str
    cls: str
    domain_in: str
    domain_out: str
    energy_per_action: dict[str, float] = field(default_factory=dict)
    static_power_mw: float = 0.0
    area_um2: float = 0.0
    capacity_bits: int = 0
    width_bits: int = 8
    bandwidth: float = 1.0

    def energy(self, action: str) -> float:
        return self.energy_per_action.get(action, 0.0)


@dataclass(frozen=True)
class Level:
    """One storage or compute level. fanout is spatial copies per parent."""

    name: str
    component: ComponentSpec
    fanout: int
    keeps: tuple[str, ...]


@dataclass(frozen=True)
class Mesh:
    may_multicast: bool = False
    may_reduce: bool = False


@dataclass(frozen=True)
class Converter:
    """A converter bank on the edge between levels[edge-1] and levels[edge].

    Direction follows the component domains: domain_in matching the outer
    level's domain makes it descending (fills side), matching the inner
    level's domain makes it ascending (drains side).
    """

    name: str
    component: ComponentSpec
    edge: int
    tensors: tuple[str, ...]
    instances: int


@dataclass(frozen=True)
class Extra:
    """Standalone part with no action counts: pays static power and area."""

    name: str
    component: ComponentSpec
    instances: int


@dataclass(frozen=True)
class Architecture:
    name: str
    clock_ghz: float
    levels: tuple[Level, ...]
    meshes: tuple[Mesh, ...]          # meshes[i] sits between levels[i] and levels[i+1]
    converters: tuple[Converter, ...]
    extras: tuple[Extra, ...] = ()

    def mesh_into(self, inner: int) -> Mesh:
        return self.meshes[inner - 1]

    def level_index(self, name: str) -> int:
        for i, lv in enumerate(self.levels):
            if lv.name == name:
                return i
        raise KeyError(name)

    def components(self) -> dict[str, ComponentSpec]:
        out: dict[str, ComponentSpec] = {}
        for lv in self.levels:
            out[lv.component.name] = lv.component
        for cv in self.converters:
            out[cv.component.name] = cv.component
        for ex in self.extras:
            out[ex.component.name] = ex.component
        return out


# ============================================================================
# Workload types
# ============================================================================


@dataclass(frozen=True)
class Layer:
    """One DNN layer. dims covers all of N,K,C,R,S,P,Q; fully_connected
    layers have R=S=P=Q=1."""

    name: str
    kind: str                      # "conv" | "fully_connected"
    dims: dict[str, int]
    stride: tuple[int, int] = (1, 1)       # (stride_p, stride_q)
    bits: dict[str, int] = field(default_factory=lambda: {t: 8 for t in TENSORS})

    def macs(self) -> int:
        n = 1
        for d in DIMS:
            n *= self.dims[d]
        return n


@dataclass(frozen=True)
class Workload:
    name: str
    layers: tuple[Layer, ...]


# ============================================================================
# Mapping types
# ============================================================================


@dataclass(frozen=True)
class LevelMapping:
    """Per-level loop factors. permutation orders this level's temporal loops
    outermost-first; dims not listed run innermost in canonical DIMS order."""

    temporal: dict[str, int] = field(default_factory=dict)
    spatial: dict[str, int] = field(default_factory=dict)
    permutation: tuple[str, ...] = ()

    def t(self, d: str) -> int:
        return self.temporal.get(d, 1)

    def s(self, d: str) -> int:
        return self.spatial.get(d, 1)

    def loops(self) -> list[tuple[str, int]]:
        order = list(self.permutation)
        order += [d for d in DIMS if d not in order]
        return [(d, self.t(d)) for d in order]


@dataclass(frozen=True)
class Mapping:
    """A full schedule: one LevelMapping per architecture level.

    batch_size multiplies the layer's N bound. keep_overrides replaces a
    storage level's kept-tensor set with a subset (bypassing extra tensors);
    pad selects padded-bound validation (factor products may exceed bounds).
    """

    levels: tuple[LevelMapping, ...]
    batch_size: int = 1
    keep_overrides: dict[int, tuple[str, ...]] = field(default_factory=dict)
    pad: bool = False


def mapping_digest(m: Mapping) -> str:
    """Canonical one-line form; equal digests mean equal schedules."""

    parts = []
    for i, lm in enumerate(m.levels):
        t = ",".join(f"{d}{lm.t(d)}" for d in DIMS if lm.t(d) > 1)
        s = ",".join(f"{d}{lm.s(d)}" for d in DIMS if lm.s(d) > 1)
        perm = "".join(d for d, e in lm.loops() if e > 1)
        keep = ""
        if i in m.keep_overrides:
            keep = "|k:" + ",".join(sorted(m.keep_overrides[i]))
        parts.append(f"L{i}[t:{t}|s:{s}|o:{perm}{keep}]")
    tag = f"b{m.batch_size}" + ("p" if m.pad else "")
    return tag + " " + " ".join(parts)


# ============================================================================
# Loop-nest geometry
# ============================================================================


def effective_bounds(layer: Layer, mapping: Mapping) -> dict[str, int]:
    """True iteration bounds, with batch_size folded into N."""

    out = dict(layer.dims)
    out["N"] = out["N"] * mapping.batch_size
    return out


def padded_bounds(mapping: Mapping) -> dict[str, int]:
    """Per-dim product of all mapped factors (the iterated space)."""

    out = {}
    for d in DIMS:
        p = 1
        for lm in mapping.levels:
            p *= lm.t(d) * lm.s(d)
        out[d] = p
    return out


def input_extent(p_ext: int, r_ext: int, stride: int) -> int:
    return (p_ext - 1) * stride + r_ext


def tile_bounds(mapping: Mapping, level: int) -> dict[str, int]:
    """Per-dim extent of the tile a level-`level` instance holds: the
    product of every factor strictly inside that level."""

    out = {}
    for d in DIMS:
        p = 1
        for lm in mapping.levels[level + 1:]:
            p *= lm.t(d) * lm.s(d)
        out[d] = p
    return out


def tile_values(layer: Layer, tb: dict[str, int], tensor: str) -> int:
    """Values of one tensor covered by a tile with per-dim extents tb."""

    if tensor == WEIGHTS:
        return tb["K"] * tb["C"] * tb["R"] * tb["S"]
    if tensor == OUTPUTS:
        return tb["N"] * tb["K"] * tb["P"] * tb["Q"]
    h = input_extent(tb["P"], tb["R"], layer.stride[0])
    w = input_extent(tb["Q"], tb["S"], layer.stride[1])
    return tb["N"] * tb["C"] * h * w


def tensor_values(layer: Layer, mapping: Mapping, tensor: str) -> int:
    """Full (padded) tensor size in values."""

    return tile_values(layer, padded_bounds(mapping), tensor)


def active_instances(mapping: Mapping, level: int) -> int:
    """Mapped instances of a level: product of spatial factors at or above."""

    n = 1
    for lm in mapping.levels[: level + 1]:
        for d in DIMS:
            n *= lm.s(d)
    return n


def effective_keeps(arch: Architecture, mapping: Mapping, level: int) -> tuple[str, ...]:
    if level in mapping.keep_overrides:
        return mapping.keep_overrides[level]
    return arch.levels[level].keeps


def keeper_levels(arch: Architecture, mapping: Mapping, tensor: str) -> list[int]:
    """Storage levels holding the tensor, outermost first. Validation
    guarantees at least one keeper per tensor."""

    return [
        i
        for i in range(len(arch.levels) - 1)
        if tensor in effective_keeps(arch, mapping, i)
    ]


def multicast_width(arch: Architecture, mapping: Mapping, inner: int, tensor: str) -> int:
    """Instances of level `inner` sharing one transmission across its edge:
    the spatial factors of dims absent from the tensor, if the mesh there
    can multicast."""

    if not arch.mesh_into(inner).may_multicast:
        return 1
    w = 1
    for d in DIMS:
        if d not in TENSOR_DIMS[tensor]:
            w *= mapping.levels[inner].s(d)
    return w


def reduce_width(arch: Architecture, mapping: Mapping, inner: int) -> int:
    """Partial-output streams merged when ascending through an edge."""

    if not arch.mesh_into(inner).may_reduce:
        return 1
    w = 1
    for d in REDUCED_DIMS:
        w *= mapping.levels[inner].s(d)
    return w


# ============================================================================
# Validation
# ============================================================================


def _validate_component(c: ComponentSpec, path: str) -> None:
    if c.cls not in CLASSES:
        raise SpecError("MalformedDocument", path, f"unknown class {c.cls!r}")
    for dom in (c.domain_in, c.domain_out):
        if dom not in DOMAINS:
            raise SpecError("MalformedDocument", path, f"unknown domain {dom!r}")
    if c.cls == "converter":
        if c.domain_in == c.domain_out:
            raise SpecError(
                "MalformedDocument", path,
                "converter must change domain (domain_in == domain_out)")
    elif c.domain_in != c.domain_out:
        raise SpecError(
            "MalformedDocument", path,
            f"{c.cls} component cannot change domain")
    for a in c.energy_per_action:
        if a not in ACTIONS:
            raise SpecError("MalformedDocument", path, f"unknown action {a!r}")
    if c.cls == "storage" and c.capacity_bits <= 0:
        raise SpecError("CapacityNonPositive", path,
                        f"storage component {c.name!r} needs capacity_bits > 0")
    if c.width_bits <= 0 or c.bandwidth <= 0:
        raise SpecError("MalformedDocument", path,
                        "width_bits and bandwidth must be positive")


def _converter_direction(arch_levels: tuple[Level, ...], cv: Converter) -> str:
    """"descending" (outer -> inner) or "ascending" (inner -> outer)."""

    outer = arch_levels[cv.edge - 1].component.domain_out
    inner = arch_levels[cv.edge].component.domain_in
    if cv.component.domain_in == outer and cv.component.domain_out == inner:
        return "descending"
    if cv.component.domain_in == inner and cv.component.domain_out == outer:
        return "ascending"
    raise SpecError(
        "MalformedDocument",
        f"architecture.converters[{cv.name}]",
        f"converter domains {cv.component.domain_in}/{cv.component.domain_out} "
        f"do not match edge domains {outer}/{inner}")


def validate_architecture(arch: Architecture) -> None:
    path = f"architecture[{arch.name}]"
    if len(arch.levels) < 2:
        raise SpecError("MalformedDocument", path, "need at least storage + compute")
    names = [lv.name for lv in arch.levels]
    if len(set(names)) != len(names):
        raise SpecError("MalformedDocument", path, "duplicate level names")
    if arch.clock_ghz <= 0:
        raise SpecError("MalformedDocument", path, "clock_ghz must be positive")
    for i, lv in enumerate(arch.levels):
        lpath = f"{path}.levels[{i}]"
        want = "compute" if i == len(arch.levels) - 1 else "storage"
        if lv.component.cls != want:
            raise SpecError("MalformedDocument", lpath,
                            f"level {lv.name!r} must use a {want} component")
        if lv.fanout < 1:
            raise SpecError("BadBound", lpath, "fanout must be >= 1")
        if i == 0 and lv.fanout != 1:
            raise SpecError("BadBound", lpath, "outermost level has no parent fanout")
        bad = set(lv.keeps) - set(TENSORS)
        if bad:
            raise SpecError("MalformedDocument", lpath, f"unknown tensors {sorted(bad)}")
        if want == "compute" and lv.keeps:
            raise SpecError("MalformedDocument", lpath, "compute level keeps nothing")
    if set(arch.levels[0].keeps) != set(TENSORS):
        raise SpecError("MalformedDocument", f"{path}.levels[0]",
                        "outermost level must keep all tensors")
    if len(arch.meshes) != len(arch.levels) - 1:
        raise SpecError("MalformedDocument", path,
                        "need exactly one mesh entry per adjacent-level edge")

    claimed: set[tuple[int, str, str]] = set()
    for cv in arch.converters:
        cpath = f"{path}.converters[{cv.name}]"
        if not 1 <= cv.edge < len(arch.levels):
            raise SpecError("MalformedDocument", cpath, "edge out of range")
        if cv.component.cls != "converter":
            raise SpecError("MalformedDocument", cpath,
                            f"{cv.component.name!r} is not a converter component")
        if cv.instances < 1:
            raise SpecError("MalformedDocument", cpath, "instances must be >= 1")
        bad = set(cv.tensors) - set(TENSORS)
        if bad:
            raise SpecError("MalformedDocument", cpath, f"unknown tensors {sorted(bad)}")
        dirn = _converter_direction(arch.levels, cv)
        for t in cv.tensors:
            key = (cv.edge, t, dirn)
            if key in claimed:
                raise SpecError("MalformedDocument", cpath,
                                f"edge {cv.edge} already has a {dirn} "
                                f"converter for {t}")
            claimed.add(key)

    # Every tensor travels across every edge (the hierarchy is a chain), so a
    # domain-changing edge needs converters for all three: descending ones for
    # Weights and Inputs, an ascending one for Outputs.
    for e in range(1, len(arch.levels)):
        outer = arch.levels[e - 1].component.domain_out
        inner = arch.levels[e].component.domain_in
        if outer == inner:
            continue
        covered: set[tuple[str, str]] = set()
        for cv in arch.converters:
            if cv.edge == e:
                dirn = _converter_direction(arch.levels, cv)
                covered.update((t, dirn) for t in cv.tensors)
        epath = f"{path}.edge[{arch.levels[e - 1].name}->{arch.levels[e].name}]"
        for t in (WEIGHTS, INPUTS):
            if (t, "descending") not in covered:
                raise SpecError("MissingConverter", epath,
                                f"no {outer}->{inner} converter for {t}")
        if (OUTPUTS, "ascending") not in covered:
            raise SpecError("MissingConverter", epath,
                            f"no {inner}->{outer} converter for {OUTPUTS}")


def validate_layer(layer: Layer, path: str = "workload") -> None:
    if layer.kind not in ("conv", "fully_connected"):
        raise SpecError("MalformedDocument", path, f"unknown kind {layer.kind!r}")
    for d in DIMS:
        b = layer.dims.get(d)
        if not isinstance(b, int) or b < 1:
            raise SpecError("BadBound", path, f"dim {d} must be a positive integer")
    extra = set(layer.dims) - set(DIMS)
    if extra:
        raise SpecError("MalformedDocument", path, f"unknown dims {sorted(extra)}")
    if any(s < 1 for s in layer.stride):
        raise SpecError("BadBound", path, "strides must be >= 1")
    window = all(layer.dims[d] == 1 for d in ("R", "S", "P", "Q"))
    if (layer.kind == "fully_connected") != window:
        raise SpecError("BadBound", path,
                        "fully_connected layers must have R=S=P=Q=1 and vice versa")
    for t in TENSORS:
        if layer.bits.get(t, 0) <= 0:
            raise SpecError("BadBound", path, f"bits for {t} must be positive")


def validate_mapping(mapping: Mapping, layer: Layer, arch: Architecture) -> None:
    """Raise MappingError unless the mapping is valid for (layer, arch).

    Checks factor coverage per dim (exact in strict mode, >= bound in pad
    mode), per-level fanout budgets, keep overrides, and storage capacity
    against kept-tile footprints.
    """

    if len(mapping.levels) != len(arch.levels):
        raise MappingError("FactorMismatch",
                           f"mapping has {len(mapping.levels)} levels, "
                           f"architecture has {len(arch.levels)}")
    if mapping.batch_size < 1:
        raise MappingError("FactorMismatch", "batch_size must be >= 1")

    for i, lm in enumerate(mapping.levels):
        for src in (lm.temporal, lm.spatial):
            for d, f in src.items():
                if d not in DIMS:
                    raise MappingError("FactorMismatch", f"unknown dim {d!r}",
                                       dim=d, level=arch.levels[i].name)
                if not isinstance(f, int) or f < 1:
                    raise MappingError("FactorMismatch",
                                       f"factor {d}={f!r} at level {i} not a "
                                       "positive integer", dim=d)
        seen = set()
        for d in lm.permutation:
            if d not in DIMS or d in seen:
                raise MappingError("FactorMismatch",
                                   f"bad permutation {lm.permutation!r}")
            seen.add(d)

    bounds = effective_bounds(layer, mapping)
    padded = padded_bounds(mapping)
    for d in DIMS:
        if mapping.pad:
            if padded[d] < bounds[d]:
                raise MappingError(
                    "FactorMismatch",
                    f"dim {d}: factors cover {padded[d]} < bound {bounds[d]}",
                    dim=d)
        elif padded[d] != bounds[d]:
            raise MappingError(
                "FactorMismatch",
                f"dim {d}: factors cover {padded[d]}, bound is {bounds[d]}",
                dim=d)

    for i, (lm, lv) in enumerate(zip(mapping.levels, arch.levels)):
        s = 1
        for d in DIMS:
            s *= lm.s(d)
        if s > lv.fanout:
            raise MappingError("FanoutExceeded",
                               f"level {lv.name!r} maps {s} spatial copies, "
                               f"fanout is {lv.fanout}", level=lv.name)

    for i, ov in mapping.keep_overrides.items():
        if not 0 <= i < len(arch.levels):
            raise MappingError("FactorMismatch", f"keep override for level {i}")
        if not set(ov) <= set(arch.levels[i].keeps):
            raise MappingError("FactorMismatch",
                               f"keep override at {arch.levels[i].name!r} adds "
                               "tensors the level does not hold",
                               level=arch.levels[i].name)

    # A tensor whose outermost keeper is not the backing store (a fused
    # intermediate living in a buffer) has nowhere above to stage from:
    # its dims may not factor above the origin, nor split spatially into
    # it. The origin's own temporal loops stay legal; they walk the tensor
    # in place.
    for t in TENSORS:
        chain = keeper_levels(arch, mapping, t)
        if not chain:
            raise MappingError("FactorMismatch",
                               f"no level keeps tensor {t}", tensor=t)
        origin = chain[0]
        if origin > 0:
            for d in TENSOR_DIMS[t]:
                outside = mapping.levels[origin].s(d)
                for lm in mapping.levels[:origin]:
                    outside *= lm.t(d) * lm.s(d)
                if outside != 1:
                    raise MappingError(
                        "FactorMismatch",
                        f"tensor {t} originates at level {origin} but dim {d} "
                        "has factors outside it",
                        dim=d, tensor=t,
                        level=arch.levels[origin].name)

    for i in range(len(arch.levels) - 1):
        lv = arch.levels[i]
        keeps = effective_keeps(arch, mapping, i)
        if not keeps:
            continue
        if i == 0:
            sizes = {t: tensor_values(layer, mapping, t) * layer.bits[t]
                     for t in keeps}
        else:
            tb = tile_bounds(mapping, i)
            sizes = {t: tile_values(layer, tb, t) * layer.bits[t] for t in keeps}
        total = sum(sizes.values())
        if total > lv.component.capacity_bits:
            worst = max(sizes, key=lambda t: (sizes[t], t))
            raise MappingError(
                "CapacityExceeded",
                f"level {lv.name!r} needs {total} bits for {sorted(keeps)}, "
                f"capacity is {lv.component.capacity_bits}",
                level=lv.name, tensor=worst)


# ============================================================================
# Document parsing
# ============================================================================


@dataclass
class Spec:
    """Everything a document tree yielded."""

    library: dict[str, ComponentSpec] = field(default_factory=dict)
    architecture: Architecture | None = None
    workload: Workload | None = None


def _req(doc: dict, key: str, path: str):
    if key not in doc:
        raise SpecError("MalformedDocument", path, f"missing field {key!r}")
    return doc[key]


def _as_int(v, path: str, key: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            return int(v)
        raise SpecError("MalformedDocument", path, f"{key} must be an integer")
    return v


def parse_component(doc: dict, path: str) -> ComponentSpec:
    if not isinstance(doc, dict):
        raise SpecError("MalformedDocument", path, "component must be an object")
    name = _req(doc, "name", path)
    cls = _req(doc, "class", path)
    if "domain" in doc:
        din = dout = doc["domain"]
    else:
        din = _req(doc, "domain_in", path)
        dout = _req(doc, "domain_out", path)
    epa = doc.get("energy_per_action", {})
    if not isinstance(epa, dict):
        raise SpecError("MalformedDocument", path, "energy_per_action must be a map")
    comp = ComponentSpec(
        name=name,
        cls=cls,
        domain_in=din,
        domain_out=dout,
        energy_per_action={k: float(v) for k, v in epa.items()},
        static_power_mw=float(doc.get("static_power_mw", 0.0)),
        area_um2=float(doc.get("area_um2", 0.0)),
        capacity_bits=_as_int(doc.get("capacity_bits", 0), path, "capacity_bits"),
        width_bits=_as_int(doc.get("width_bits", 8), path, "width_bits"),
        bandwidth=float(doc.get("bandwidth", 1.0)),
    )
    _validate_component(comp, path)
    return comp


def _resolve_component(name: str, library: dict[str, ComponentSpec], path: str) -> ComponentSpec:
    if name not in library:
        raise SpecError("UnknownComponent", path, f"component {name!r} not defined")
    return library[name]


def parse_architecture(doc: dict, library: dict[str, ComponentSpec]) -> Architecture:
    path = "architecture"
    if not isinstance(doc, dict):
        raise SpecError("MalformedDocument", path, "architecture must be an object")
    lvdocs = _req(doc, "levels", path)
    if not isinstance(lvdocs, list) or not lvdocs:
        raise SpecError("MalformedDocument", path, "levels must be a non-empty list")

    levels = []
    for i, ld in enumerate(lvdocs):
        lpath = f"{path}.levels[{i}]"
        comp = _resolve_component(_req(ld, "component", lpath), library, lpath)
        levels.append(Level(
            name=_req(ld, "name", lpath),
            component=comp,
            fanout=_as_int(ld.get("fanout", 1), lpath, "fanout"),
            keeps=tuple(ld.get("keeps", ())),
        ))
    levels = tuple(levels)
    by_name = {lv.name: i for i, lv in enumerate(levels)}

    def edge_of(pair, epath) -> int:
        if (not isinstance(pair, list)) or len(pair) != 2:
            raise SpecError("MalformedDocument", epath, "between must be [outer, inner]")
        a, b = pair
        if a not in by_name or b not in by_name:
            raise SpecError("MalformedDocument", epath, f"unknown level in {pair!r}")
        if by_name[b] != by_name[a] + 1:
            raise SpecError("MalformedDocument", epath,
                            f"{a!r} and {b!r} are not adjacent outer->inner")
        return by_name[b]

    meshes = [Mesh() for _ in range(len(levels) - 1)]
    for j, md in enumerate(doc.get("meshes", ())):
        mpath = f"{path}.meshes[{j}]"
        e = edge_of(_req(md, "between", mpath), mpath)
        meshes[e - 1] = Mesh(
            may_multicast=bool(md.get("may_multicast", False)),
            may_reduce=bool(md.get("may_reduce", False)),
        )

    converters = []
    for j, cd in enumerate(doc.get("converters", ())):
        cpath = f"{path}.converters[{j}]"
        comp = _resolve_component(_req(cd, "component", cpath), library, cpath)
        edge = edge_of(_req(cd, "between", cpath), cpath)
        converters.append(Converter(
            name=cd.get("name", f"{comp.name}@{levels[edge].name}"),
            component=comp,
            edge=edge,
            tensors=tuple(_req(cd, "tensors", cpath)),
            instances=_as_int(cd.get("instances", 1), cpath, "instances"),
        ))
    cnames = [c.name for c in converters]
    if len(set(cnames)) != len(cnames):
        raise SpecError("MalformedDocument", f"{path}.converters",
                        "duplicate converter names")

    extras = []
    for j, ed in enumerate(doc.get("extras", ())):
        epath = f"{path}.extras[{j}]"
        comp = _resolve_component(_req(ed, "component", epath), library, epath)
        extras.append(Extra(
            name=ed.get("name", comp.name),
            component=comp,
            instances=_as_int(ed.get("instances", 1), epath, "instances"),
        ))

    arch = Architecture(
        name=doc.get("name", "architecture"),
        clock_ghz=float(doc.get("clock_ghz", 1.0)),
        levels=levels,
        meshes=tuple(meshes),
        converters=tuple(converters),
        extras=tuple(extras),
    )
    validate_architecture(arch)
    return arch


def parse_layer(doc: dict, path: str) -> Layer:
    dims = dict(_req(doc, "dims", path))
    for d in DIMS:
        dims.setdefault(d, 1)
    dims = {d: _as_int(v, path, f"dims.{d}") for d, v in dims.items()}
    stride = doc.get("stride", [1, 1])
    if isinstance(stride, int):
        stride = [stride, stride]
    given_bits = doc.get("bits", {})
    if isinstance(given_bits, int):
        given_bits = {t: given_bits for t in TENSORS}
    bits = {t: 8 for t in TENSORS}
    bits.update(given_bits)
    layer = Layer(
        name=_req(doc, "name", path),
        kind=doc.get("kind", "conv"),
        dims=dims,
        stride=(int(stride[0]), int(stride[1])),
        bits={t: int(b) for t, b in bits.items()},
    )
    validate_layer(layer, path)
    return layer


def parse_workload(doc: dict) -> Workload:
    path = "workload"
    layers = _req(doc, "layers", path)
    if not isinstance(layers, list) or not layers:
        raise SpecError("MalformedDocument", path, "layers must be a non-empty list")
    parsed = tuple(parse_layer(ld, f"{path}.layers[{i}]") for i, ld in enumerate(layers))
    names = [l.name for l in parsed]
    if len(set(names)) != len(names):
        raise SpecError("MalformedDocument", path, "duplicate layer names")
    return Workload(name=doc.get("name", "workload"), layers=parsed)


def parse_spec(doc: dict) -> Spec:
    """Parse a document tree into a Spec bundle.

    Recognized top-level fields: spec_version, components, use_builtin_components,
    architecture, workload. Unknown fields are rejected so typos surface.
    """

    if not isinstance(doc, dict):
        raise SpecError("MalformedDocument", "$", "document must be an object")
    known = {"spec_version", "components", "use_builtin_components",
             "architecture", "workload", "include"}
    extra = set(doc) - known
    if extra:
        raise SpecError("MalformedDocument", "$", f"unknown fields {sorted(extra)}")
    version = doc.get("spec_version")
    if version != SPEC_VERSION:
        raise SpecError("MalformedDocument", "$.spec_version",
                        f"expected spec_version {SPEC_VERSION}, got {version!r}")
    if "include" in doc:
        raise SpecError("MalformedDocument", "$.include",
                        "includes must be resolved before parsing (load_document)")

    spec = Spec()
    if "use_builtin_components" in doc:
        from . import components as _components

        profile = doc["use_builtin_components"]
        try:
            spec.library.update(_components.builtin_components(profile))
        except KeyError:
            raise SpecError("UnknownComponent", "$.use_builtin_components",
                            f"unknown profile {profile!r}") from None
    for i, cd in enumerate(doc.get("components", ())):
        path = f"$.components[{i}]"
        comp = parse_component(cd, path)
        spec.library[comp.name] = comp
    if "architecture" in doc:
        spec.architecture = parse_architecture(doc["architecture"], spec.library)
    if "workload" in doc:
        spec.workload = parse_workload(doc["workload"])
    return spec


def load_document(path: str) -> dict:
    """Load a JSON spec file, resolving its include list (paths relative to
    the including file). Included components merge; duplicate names or
    duplicate architecture/workload sections are rejected."""

    import os

    def load(p: str, seen: tuple[str, ...]) -> dict:
        rp = os.path.realpath(p)
        if rp in seen:
            raise SpecError("MalformedDocument", p, "circular include")
        try:
            with open(p) as f:
                doc = json.load(f)
        except OSError as e:
            raise SpecError("MalformedDocument", p, f"cannot read file: {e}") from None
        except json.JSONDecodeError as e:
            raise SpecError("MalformedDocument", p, f"invalid JSON: {e}") from None
        if not isinstance(doc, dict):
            raise SpecError("MalformedDocument", p, "document must be an object")
        incs = doc.pop("include", [])
        merged: dict = {}
        for inc in incs:
            sub = load(os.path.join(os.path.dirname(p), inc), seen + (rp,))
            _merge_documents(merged, sub, inc)
        _merge_documents(merged, doc, p)
        return merged

    return load(path, ())


def _merge_documents(base: dict, new: dict, path: str) -> None:
    for key, val in new.items():
        if key == "components":
            comps = base.setdefault("components", [])
            names = {c.get("name") for c in comps}
            for c in val:
                if c.get("name") in names:
                    raise SpecError("MalformedDocument", path,
                                    f"duplicate component {c.get('name')!r}")
                comps.append(c)
        elif key in base and base[key] != val:
            raise SpecError("MalformedDocument", path,
                            f"conflicting {key!r} sections")
        else:
            base[key] = val


# ============================================================================
# Serialization
# ============================================================================


def serialize_component(c: ComponentSpec) -> dict:
    return {
        "name": c.name,
        "class": c.cls,
        "domain_in": c.domain_in,
        "domain_out": c.domain_out,
        "energy_per_action": {k: c.energy_per_action[k]
                              for k in sorted(c.energy_per_action)},
        "static_power_mw": c.static_power_mw,
        "area_um2": c.area_um2,
        "capacity_bits": c.capacity_bits,
        "width_bits": c.width_bits,
        "bandwidth": c.bandwidth,
    }


def serialize_architecture(a: Architecture) -> dict:
    def edge_pair(e: int) -> list[str]:
        return [a.levels[e - 1].name, a.levels[e].name]

    return {
        "name": a.name,
        "clock_ghz": a.clock_ghz,
        "levels": [
            {"name": lv.name, "component": lv.component.name,
             "fanout": lv.fanout, "keeps": list(lv.keeps)}
            for lv in a.levels
        ],
        "meshes": [
            {"between": edge_pair(e + 1),
             "may_multicast": m.may_multicast, "may_reduce": m.may_reduce}
            for e, m in enumerate(a.meshes)
        ],
        "converters": [
            {"name": c.name, "component": c.component.name,
             "between": edge_pair(c.edge), "tensors": list(c.tensors),
             "instances": c.instances}
            for c in a.converters
        ],
        "extras": [
            {"name": x.name, "component": x.component.name,
             "instances": x.instances}
            for x in a.extras
        ],
    }


def serialize_workload(w: Workload) -> dict:
    return {
        "name": w.name,
        "layers": [
            {"name": l.name, "kind": l.kind,
             "dims": {d: l.dims[d] for d in DIMS},
             "stride": list(l.stride),
             "bits": {t: l.bits[t] for t in TENSORS}}
            for l in w.layers
        ],
    }


def serialize_spec(spec: Spec) -> dict:
    doc: dict = {"spec_version": SPEC_VERSION}
    if spec.library:
        doc["components"] = [serialize_component(spec.library[n])
                             for n in sorted(spec.library)]
    if spec.architecture is not None:
        doc["architecture"] = serialize_architecture(spec.architecture)
    if spec.workload is not None:
        doc["workload"] = serialize_workload(spec.workload)
    return doc


def serialize_mapping(m: Mapping, arch: Architecture) -> dict:
    return {
        "spec_version": SPEC_VERSION,
        "mapping": {
            "levels": [
                {"level": arch.levels[i].name,
                 "temporal": {d: lm.t(d) for d in DIMS if lm.t(d) > 1},
                 "spatial": {d: lm.s(d) for d in DIMS if lm.s(d) > 1},
                 "permutation": list(lm.permutation)}
                for i, lm in enumerate(m.levels)
            ],
            "batch_size": m.batch_size,
            "pad": m.pad,
            "keep_overrides": {str(i): sorted(ov)
                               for i, ov in sorted(m.keep_overrides.items())},
        },
    }


def parse_mapping(doc: dict, arch: Architecture) -> Mapping:
    path = "mapping"
    body = doc.get("mapping", doc)
    lvdocs = _req(body, "levels", path)
    by_name = {lv.name: i for i, lv in enumerate(arch.levels)}
    lms: list[LevelMapping | None] = [None] * len(arch.levels)
    for j, ld in enumerate(lvdocs):
        lpath = f"{path}.levels[{j}]"
        name = _req(ld, "level", lpath)
        if name not in by_name:
            raise SpecError("MalformedDocument", lpath, f"unknown level {name!r}")
        lms[by_name[name]] = LevelMapping(
            temporal={d: _as_int(v, lpath, d) for d, v in ld.get("temporal", {}).items()},
            spatial={d: _as_int(v, lpath, d) for d, v in ld.get("spatial", {}).items()},
            permutation=tuple(ld.get("permutation", ())),
        )
    filled = tuple(lm if lm is not None else LevelMapping() for lm in lms)
    overrides = {}
    for k, v in body.get("keep_overrides", {}).items():
        overrides[int(k)] = tuple(sorted(v))
    return Mapping(
        levels=filled,
        batch_size=_as_int(body.get("batch_size", 1), path, "batch_size"),
        keep_overrides=overrides,
        pad=bool(body.get("pad", False)),
    )


def canonical_json(doc: dict) -> str:
    """Stable serialized form: sorted keys, fixed separators, trailing newline."""

    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
