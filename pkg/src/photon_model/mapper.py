"""Mapping search: exhaustive, random, and pruned-random strategies over
loop factorizations, spatial placements, and loop orders.

The candidate space factors per dimension: each dim contributes a chain
[t0, s1, t1, ..., s(M-1), t(M-1)] of per-level factors. Strict mode splits
the exact bound; pad mode picks spatial widths from divisors of the bound
or of the level fanout, then pads the iterated extent minimally to a
multiple of the spatial width. Loop orders are searched only over dims with
more than one iteration at a level.

Ties on the objective break toward the lexicographically smallest mapping
digest, so every strategy is deterministic for a given seed.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field

from .evaluator import EvaluationResult, energy, evaluate
from .reuse import DOWN, analyze, converter_at
from .spec_model import (
    DIMS,
    REDUCED_DIMS,
    TENSOR_DIMS,
    TENSORS,
    Architecture,
    Layer,
    LevelMapping,
    Mapping,
    MappingError,
    tile_values,
)

OBJECTIVES = ("energy", "delay", "energy_delay_product")
STRATEGIES = ("exhaustive", "random", "pruned_random")


class NoValidMapping(Exception):
    def __init__(self, layer: str, message: str):
        self.layer = layer
        super().__init__(f"{layer}: {message}")


class SearchError(Exception):
    pass


@dataclass(frozen=True)
class SearchConfig:
    objective: str = "energy"
    budget: int = 1000
    seed: int = 0
    strategy: str = "random"
    pad_mode: str = "strict"
    batch_size: int = 1
    keep_overrides: dict = field(default_factory=dict)
    fixed_spatial: dict = field(default_factory=dict)
    reduction_floor: int | None = None
    max_space: int = 1_000_000

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.pad_mode not in ("strict", "pad"):
            raise ValueError(f"unknown pad_mode {self.pad_mode!r}")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.reduction_floor is not None and self.reduction_floor < 0:
            raise ValueError("reduction_floor must be >= 0")


@dataclass
class SearchResult:
    mapping: Mapping
    objective: float
    evaluation: EvaluationResult
    visited: int
    pruned: int
    invalid: int


def divisors(n: int) -> list[int]:
    out = []
    for d in range(1, int(math.isqrt(n)) + 1):
        if n % d == 0:
            out.append(d)
            if d != n // d:
                out.append(n // d)
    return sorted(out)


def enumerate_factorizations(bound: int, slots: int) -> list[tuple[int, ...]]:
    """All ordered tuples of `slots` positive integers whose product is
    exactly `bound`."""

    if slots == 1:
        return [(bound,)]
    out = []
    for d in divisors(bound):
        for rest in enumerate_factorizations(bound // d, slots - 1):
            out.append((d,) + rest)
    return out


def _capacity_check(arch: Architecture, layer: Layer, cfg: SearchConfig):
    """Necessary capacity condition over a partial chain assignment: dims
    not yet assigned sit at their minimum (their spatial pins). A partial
    assignment that already overflows a storage level can never extend to a
    valid mapping, so filtering on it preserves completeness."""

    m = len(arch.levels)
    mins = {}
    for lvl in range(1, m - 1):
        row = {}
        for dd in DIMS:
            p = 1
            for j in range(lvl + 1, m):
                p *= cfg.fixed_spatial.get((j, dd), 1)
            row[dd] = p
        mins[lvl] = row

    checks = []
    for lvl in range(1, m - 1):
        keeps = cfg.keep_overrides.get(lvl, arch.levels[lvl].keeps)
        if not keeps:
            continue
        checks.append((lvl, tuple(keeps), arch.levels[lvl].component.capacity_bits))

    def ok(assigned: dict[str, tuple[int, ...]]) -> bool:
        for lvl, keeps, cap in checks:
            tb = {}
            for dd in DIMS:
                chain = assigned.get(dd)
                if chain is None:
                    tb[dd] = mins[lvl][dd]
                else:
                    e = 1
                    for j in range(lvl + 1, m):
                        e *= chain[2 * j - 1] * chain[2 * j]
                    tb[dd] = e
            bits = sum(tile_values(layer, tb, t) * layer.bits[t] for t in keeps)
            if bits > cap:
                return False
        return True

    return ok


def _origin_floor(arch: Architecture, cfg: SearchConfig, d: str) -> int:
    """Leading chain positions forced to 1 for dim d: a tensor born above
    the backing store may not factor above its origin keeper or split
    spatially into it. Its own temporal slot stays open."""

    floor = 0
    for t in TENSORS:
        if d not in TENSOR_DIMS[t]:
            continue
        keepers = [j for j, lv in enumerate(arch.levels)
                   if t in cfg.keep_overrides.get(j, lv.keeps)]
        if keepers and keepers[0] > 0:
            floor = max(floor, 2 * keepers[0])
    return floor


def _dim_chains(arch: Architecture, layer: Layer, d: str,
                cfg: SearchConfig) -> list[tuple[int, ...]]:
    """Candidate factor chains [t0, s1, t1, ...] for one dim."""

    m = len(arch.levels)
    bound = layer.dims[d] * (cfg.batch_size if d == "N" else 1)
    pins = {lvl: f for (lvl, dd), f in cfg.fixed_spatial.items() if dd == d}
    cap_ok = _capacity_check(arch, layer, cfg)
    floor = _origin_floor(arch, cfg, d)
    red_floor = (cfg.reduction_floor
                 if cfg.reduction_floor is not None and d in REDUCED_DIMS
                 else 0)

    def pin_ok(chain: tuple[int, ...]) -> bool:
        if any(chain[p] != 1 for p in range(floor)):
            return False
        if any(chain[2 * j] != 1 for j in range(red_floor)):
            return False
        for j in range(1, m):
            if j in pins and chain[2 * j - 1] != pins[j]:
                return False
            if chain[2 * j - 1] > arch.levels[j].fanout:
                return False
        return cap_ok({d: chain})

    if cfg.pad_mode == "strict":
        return [c for c in enumerate_factorizations(bound, 2 * m - 1) if pin_ok(c)]

    chains = []
    menus = []
    for j in range(1, m):
        if 2 * j - 1 < floor:
            if pins.get(j, 1) != 1:
                return []
            menus.append([1])
            continue
        if j in pins:
            menus.append([pins[j]])
            continue
        fan = arch.levels[j].fanout
        vals = {1}
        vals.update(v for v in divisors(bound) if v <= fan)
        vals.update(v for v in divisors(fan) if v <= 2 * bound)
        menus.append(sorted(vals))
    t_floor = max((floor + 1) // 2, red_floor)
    for svals in itertools.product(*menus):
        s_total = math.prod(svals)
        t_total = -(-bound // s_total)
        for tvals in enumerate_factorizations(t_total, m):
            if any(tvals[j] != 1 for j in range(t_floor)):
                continue
            chain = [tvals[0]]
            for j in range(1, m):
                chain.append(svals[j - 1])
                chain.append(tvals[j])
            if cap_ok({d: tuple(chain)}):
                chains.append(tuple(chain))
    return chains


def _build_mapping(arch: Architecture, chains: dict[str, tuple[int, ...]],
                   perms: list[tuple[str, ...]], cfg: SearchConfig) -> Mapping:
    m = len(arch.levels)
    lms = []
    for j in range(m):
        temporal = {d: chains[d][2 * j] for d in DIMS}
        spatial = {} if j == 0 else {d: chains[d][2 * j - 1] for d in DIMS}
        lms.append(LevelMapping(temporal=temporal, spatial=spatial,
                                permutation=perms[j]))
    return Mapping(levels=tuple(lms), batch_size=cfg.batch_size,
                   keep_overrides=dict(cfg.keep_overrides),
                   pad=cfg.pad_mode == "pad")


def _refetch_forbidden(arch: Architecture,
                       cfg: SearchConfig) -> tuple[tuple[int, str], ...]:
    """Keeper levels whose tile can never be refetched: an edge on the
    refill path crosses signal domains with no descending converter for
    the tensor, so any mapping that revisits an evicted tile is invalid."""

    out = []
    for t in TENSORS:
        keepers = [j for j, lv in enumerate(arch.levels)
                   if t in cfg.keep_overrides.get(j, lv.keeps)]
        for a, b in zip(keepers, keepers[1:]):
            for k in range(a + 1, b + 1):
                crosses = (arch.levels[k - 1].component.domain_out
                           != arch.levels[k].component.domain_in)
                if crosses and converter_at(arch, k, t, DOWN) is None:
                    out.append((b, t))
                    break
    return tuple(out)


def _nest_ok(chains: dict[str, tuple[int, ...]],
             forbidden: tuple[tuple[int, str], ...]) -> bool:
    """Cross-level loop-order condition for refetch-forbidden keepers: one
    of the tensor's dims iterating at a level inside another dim's loop at
    an outer level would revisit evicted tiles. Checking a partial chain
    assignment is sound because adding dims only adds loops. Within-level
    order is enforced when permutations are drawn."""

    for b, t in forbidden:
        tdims = TENSOR_DIMS[t]
        for j2 in range(1, b + 1):
            if not any(c[2 * j2] > 1 for d, c in chains.items()
                       if d in tdims):
                continue
            for j in range(j2):
                if any(c[2 * j] > 1 for d, c in chains.items()
                       if d not in tdims):
                    return False
    return True


def _block_leads(perm: tuple[str, ...], dims: frozenset) -> bool:
    seen_other = False
    for d in perm:
        if d in dims:
            if seen_other:
                return False
        else:
            seen_other = True
    return True


def _valid_perms(live: tuple[str, ...], level: int,
                 forbidden: tuple[tuple[int, str], ...]) -> list[tuple[str, ...]]:
    """Orderings of this level's live loops that keep every
    refetch-forbidden tensor's dims ahead of other dims. The keeper level's
    own loops take part: its temporal loops also cycle the kept tile."""

    blocks = [TENSOR_DIMS[t] for b, t in forbidden if level <= b]
    if not blocks:
        return list(itertools.permutations(live))
    return [p for p in itertools.permutations(live)
            if all(_block_leads(p, dims) for dims in blocks)]


def _fanout_ok(arch: Architecture, chains: dict[str, tuple[int, ...]]) -> bool:
    for j in range(1, len(arch.levels)):
        s = 1
        for d in DIMS:
            s *= chains[d][2 * j - 1]
        if s > arch.levels[j].fanout:
            return False
    return True


def _objective_of(res: EvaluationResult, objective: str) -> float:
    if objective == "energy":
        return res.total_energy_pj
    if objective == "delay":
        return float(res.cycles)
    return res.total_energy_pj * res.latency_s


def _floor_objective(arch: Architecture, layer: Layer, mapping: Mapping,
                     objective: str) -> float:
    """A value never exceeding the candidate's true objective: counts with
    all refetch removed, latency with all stalls removed."""

    counts = analyze(arch, layer, mapping, optimistic=True)
    steps = 1
    for lm in mapping.levels:
        for ext in lm.temporal.values():
            steps *= ext
    latency_s = steps / (arch.clock_ghz * 1e9)
    if objective == "delay":
        return float(steps)
    per_comp = energy(counts, arch, latency_s)
    total = sum(per_comp[k] for k in sorted(per_comp))
    if objective == "energy":
        return total
    return total * latency_s


def _perm_menu(chains: dict[str, tuple[int, ...]], level: int) -> list[str]:
    return [d for d in DIMS if chains[d][2 * level] > 1]


class _Best:
    def __init__(self, objective: str):
        self.objective = objective
        self.value: float | None = None
        self.digest: str | None = None
        self.mapping: Mapping | None = None
        self.evaluation: EvaluationResult | None = None

    def offer(self, mapping: Mapping, res: EvaluationResult) -> None:
        val = _objective_of(res, self.objective)
        dig = res.mapping_digest
        if (self.value is None or val < self.value
                or (val == self.value and dig < self.digest)):
            self.value, self.digest = val, dig
            self.mapping, self.evaluation = mapping, res


def search(arch: Architecture, layer: Layer, cfg: SearchConfig) -> SearchResult:
    """Find the best mapping of `layer` onto `arch` under the configured
    objective. Raises NoValidMapping when nothing valid was found."""

    chain_menu = {d: _dim_chains(arch, layer, d, cfg) for d in DIMS}
    for d, menu in chain_menu.items():
        if not menu:
            raise NoValidMapping(
                layer.name, f"no factor chain satisfies the pins for dim {d}")

    best = _Best(cfg.objective)
    visited = pruned = invalid = 0
    prune = cfg.strategy == "pruned_random"

    def consider(chains: dict[str, tuple[int, ...]],
                 perms: list[tuple[str, ...]]) -> None:
        nonlocal visited, pruned, invalid
        mapping = _build_mapping(arch, chains, perms, cfg)
        if prune and best.value is not None:
            try:
                if _floor_objective(arch, layer, mapping, cfg.objective) >= best.value:
                    pruned += 1
                    return
            except MappingError:
                invalid += 1
                return
        try:
            res = evaluate(arch, layer, mapping)
        except MappingError:
            invalid += 1
            return
        visited += 1
        best.offer(mapping, res)

    if cfg.strategy == "exhaustive":
        m = len(arch.levels)
        fanouts = [lv.fanout for lv in arch.levels]
        space = 0

        def assign(di: int, chains: dict[str, tuple[int, ...]],
                   sprod: list[int]) -> None:
            nonlocal space
            if di == len(DIMS):
                perm_sets = [_perm_menu(chains, j) for j in range(m)]
                for perm_combo in itertools.product(
                        *(itertools.permutations(ps) for ps in perm_sets)):
                    space += 1
                    if space > cfg.max_space:
                        raise SearchError(
                            f"exhaustive space exceeds {cfg.max_space}; use "
                            "a sampling strategy")
                    consider(chains, list(perm_combo))
                return
            d = DIMS[di]
            for chain in chain_menu[d]:
                nxt = sprod[:]
                ok = True
                for j in range(1, m):
                    nxt[j] *= chain[2 * j - 1]
                    if nxt[j] > fanouts[j]:
                        ok = False
                        break
                if ok:
                    chains[d] = chain
                    assign(di + 1, chains, nxt)
                    del chains[d]

        assign(0, {}, [1] * m)
    elif cfg.strategy == "random":
        rng = random.Random(cfg.seed)
        for _ in range(cfg.budget):
            chains = {d: rng.choice(chain_menu[d]) for d in DIMS}
            if not _fanout_ok(arch, chains):
                invalid += 1
                continue
            perms = []
            for j in range(len(arch.levels)):
                ps = _perm_menu(chains, j)
                rng.shuffle(ps)
                perms.append(tuple(ps))
            consider(chains, perms)
    else:
        # pruned_random: assign dims one at a time, keeping only chains the
        # running fanout budgets and capacity condition still allow. Every
        # valid complete assignment stays reachable (the condition is
        # necessary), so with enough budget this covers the same space.
        rng = random.Random(cfg.seed)
        m = len(arch.levels)
        fanouts = [lv.fanout for lv in arch.levels]
        cap_ok = _capacity_check(arch, layer, cfg)
        forbidden = _refetch_forbidden(arch, cfg)
        perm_cache: dict[tuple[int, tuple[str, ...]], list] = {}
        feas_cache: dict[tuple, list] = {}
        for _ in range(cfg.budget):
            chains: dict[str, tuple[int, ...]] = {}
            sprod = [1] * m
            dead = False
            for di, d in enumerate(DIMS):
                prefix = (d,) + tuple(chains[dd] for dd in DIMS[:di])
                feasible = feas_cache.get(prefix)
                if feasible is None:
                    feasible = []
                    for chain in chain_menu[d]:
                        if any(sprod[j] * chain[2 * j - 1] > fanouts[j]
                               for j in range(1, m)):
                            continue
                        chains[d] = chain
                        if cap_ok(chains) and _nest_ok(chains, forbidden):
                            feasible.append(chain)
                        del chains[d]
                    feas_cache[prefix] = feasible
                if not feasible:
                    dead = True
                    break
                pick = rng.choice(feasible)
                chains[d] = pick
                for j in range(1, m):
                    sprod[j] *= pick[2 * j - 1]
            if not dead:
                perms = []
                for j in range(m):
                    live = tuple(_perm_menu(chains, j))
                    key = (j, live)
                    if key not in perm_cache:
                        perm_cache[key] = _valid_perms(live, j, forbidden)
                    options = perm_cache[key]
                    if not options:
                        dead = True
                        break
                    perms.append(options[rng.randrange(len(options))])
            if dead:
                invalid += 1
                continue
            consider(chains, perms)

    if best.mapping is None:
        raise NoValidMapping(layer.name, "no valid mapping found in budget")
    return SearchResult(mapping=best.mapping, objective=best.value,
                        evaluation=best.evaluation, visited=visited,
                        pruned=pruned, invalid=invalid)
