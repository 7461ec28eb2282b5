"""Assignments of a layer's loop nest onto an architecture.

A mapping gives every loop dimension a temporal factor at each memory
level and a spatial factor at each fanout; the product over all slots
must cover the dimension (rounding up pads it, and padded iterations
compute garbage).  Each level also carries a permutation of its active
temporal loops (outermost first) and an optional set of operands that
bypass it.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import random
from dataclasses import dataclass, replace

from .arch import ArchSpec
from .workload import DIMS, OPERANDS, RELEVANT, LayerShape

#: loop orders used as permutation templates, outermost first.  The
#: out-safe order keeps reduction loops innermost, which is the only
#: order allowed outside the output's outermost on-chip tile (partial
#: sums may not spill into the LLM).
PERM_OUT_SAFE = ("Oc", "B", "Oy", "Ox", "Ic", "Fh", "Fw")
PERM_W_STATIONARY = ("Oc", "Ic", "Fh", "Fw", "B", "Oy", "Ox")
PERM_IN_STATIONARY = ("B", "Ic", "Oy", "Ox", "Fh", "Fw", "Oc")
PERM_TEMPLATES = (PERM_OUT_SAFE, PERM_W_STATIONARY, PERM_IN_STATIONARY)

REDUCTION_DIMS = frozenset({"Ic", "Fh", "Fw"})


class MappingError(ValueError):
    """Structurally inconsistent mapping."""


@dataclass(frozen=True)
class MapspaceLimits:
    max_candidates: int = 1000
    random_seed: int = 1
    exhaustive_threshold: int = 4096

    def __post_init__(self):
        if self.max_candidates < 1 or self.exhaustive_threshold < 1:
            raise MappingError("mapspace limits must be positive")


@dataclass(frozen=True)
class Mapping:
    """temporal[level][dim], spatial[fanout][dim] (indexed like DIMS),
    perms[level] (dims with temporal factor > 1, outermost first) and
    bypass[level] (operand names skipping that level)."""

    temporal: tuple[tuple[int, ...], ...]
    spatial: tuple[tuple[int, ...], ...]
    perms: tuple[tuple[str, ...], ...]
    bypass: tuple[frozenset, ...]

    def __post_init__(self):
        object.__setattr__(self, "_extents", {})

    def t(self, level: int, dim: str) -> int:
        return self.temporal[level][DIMS.index(dim)]

    def s(self, fanout: int, dim: str) -> int:
        return self.spatial[fanout][DIMS.index(dim)]

    @property
    def num_levels(self) -> int:
        return len(self.temporal)

    def padded_dims(self) -> dict[str, int]:
        return dict(zip(DIMS, self.extents(0)))

    def extents(self, level: int) -> tuple[int, ...]:
        """Per-dim tile extents at a level: the product of all factors at
        or inside it (temporal from `level` down, spatial from fanout
        `level` down)."""
        hit = self._extents.get(level)
        if hit is not None:
            return hit
        ext = []
        for i in range(len(DIMS)):
            p = 1
            for row in self.temporal[level:]:
                p *= row[i]
            for row in self.spatial[level:]:
                p *= row[i]
            ext.append(p)
        ext = tuple(ext)
        self._extents[level] = ext
        return ext

    def factor_at_or_below(self, level: int, dim: str) -> int:
        return self.extents(level)[DIMS.index(dim)]

    def spatial_used(self, fanout: int) -> int:
        p = 1
        for v in self.spatial[fanout]:
            p *= v
        return p

    def active_macs(self) -> int:
        p = 1
        for f in range(len(self.spatial)):
            p *= self.spatial_used(f)
        return p

    def instances(self, level: int) -> int:
        """Active instances of a level under this mapping."""
        p = 1
        for f in range(level):
            p *= self.spatial_used(f)
        return p


def canonical_perm(factors: dict[str, int], template: tuple[str, ...] = PERM_OUT_SAFE) -> tuple[str, ...]:
    return tuple(d for d in template if factors.get(d, 1) > 1)


def make_mapping(arch: ArchSpec,
                 temporal: list[dict[str, int]],
                 spatial: list[dict[str, int]],
                 perms: list[tuple[str, ...]] | None = None,
                 bypass: dict[int, set] | None = None) -> Mapping:
    """Build a Mapping from sparse factor dicts (missing dims default 1)."""
    levels = len(arch.levels)
    if len(temporal) != levels or len(spatial) != levels - 1:
        raise MappingError("factor lists do not match the hierarchy")
    trows = tuple(tuple(row.get(d, 1) for d in DIMS) for row in temporal)
    srows = tuple(tuple(row.get(d, 1) for d in DIMS) for row in spatial)
    if perms is None:
        prows = tuple(canonical_perm(dict(zip(DIMS, row))) for row in trows)
    else:
        prows = tuple(tuple(p) for p in perms)
    brows = [frozenset()] * levels
    for lvl, ops in (bypass or {}).items():
        brows[lvl] = frozenset(ops)
    return Mapping(trows, srows, prows, tuple(brows))


# ---------------------------------------------------------------------------
# storage chains and footprints

def stored_at(mapping: Mapping, arch: ArchSpec, level: int, operand: str) -> bool:
    """Whether the operand is resident at this level under the mapping.

    Non-tenancy forces a bypass; the outermost and register levels always
    hold every operand.
    """
    if level == 0 or level == len(arch.levels) - 1:
        return True
    lv = arch.levels[level]
    return operand in lv.tenants and operand not in mapping.bypass[level]


def chain(mapping: Mapping, arch: ArchSpec, operand: str) -> list[int]:
    """Level indices holding the operand, outermost first."""
    return [l for l in range(len(arch.levels)) if stored_at(mapping, arch, l, operand)]


_B, _IC, _OC, _OX, _OY, _FH, _FW = range(7)


def tile_footprint(mapping: Mapping, layer: LayerShape, level: int, operand: str) -> int:
    """Words of one operand tile at a level (per instance).

    Input tiles are the full sliding-window span, including words the
    stride may skip and halo overlap with neighbouring tiles.
    """
    e = mapping.extents(level)
    if operand == "weight":
        return e[_OC] * e[_IC] * e[_FH] * e[_FW]
    if operand == "output":
        return e[_B] * e[_OC] * e[_OX] * e[_OY]
    span_x = (e[_OX] - 1) * layer.stride + e[_FH]
    span_y = (e[_OY] - 1) * layer.stride + e[_FW]
    return e[_B] * e[_IC] * span_x * span_y


def outer_loops(mapping: Mapping, level: int) -> list[tuple[str, int]]:
    """Temporal loops strictly outside a level, outermost first."""
    loops = []
    for m in range(level):
        for d in mapping.perms[m]:
            loops.append((d, mapping.t(m, d)))
    return loops


def deliveries(mapping: Mapping, level: int, operand: str) -> int:
    """Times a fresh operand tile enters one instance of the level.

    A resident tile is replaced whenever any outer loop indexing the
    operand advances; loops it does not index, nested inside the
    innermost indexing loop, leave it stationary.
    """
    loops = outer_loops(mapping, level)
    rel = RELEVANT[operand]
    last = -1
    for i, (d, _) in enumerate(loops):
        if d in rel:
            last = i
    n = 1
    for d, trip in loops[: last + 1]:
        n *= trip
    return n


def distinct_tiles(mapping: Mapping, level: int, operand: str) -> int:
    """Distinct operand tiles seen by one instance of the level."""
    n = 1
    for d, trip in outer_loops(mapping, level):
        if d in RELEVANT[operand]:
            n *= trip
    return n


# ---------------------------------------------------------------------------
# validation

def _capacity_demand(mapping: Mapping, layer: LayerShape, arch: ArchSpec, level: int) -> int:
    total = 0
    for o in OPERANDS:
        if not stored_at(mapping, arch, level, o):
            continue
        words = tile_footprint(mapping, layer, level, o)
        # staged operands are double-buffered so fills overlap compute;
        # accumulators live in place
        if arch.double_buffer and level > 0 and o != "output":
            words *= 2
        total += words * arch.word_bytes
    return total


def validate(mapping: Mapping, layer: LayerShape, arch: ArchSpec) -> list[str]:
    """Every violated legality rule, empty when the mapping is valid."""
    v: list[str] = []
    levels = len(arch.levels)
    if mapping.num_levels != levels or len(mapping.spatial) != levels - 1:
        return [f"mapping shape does not match {arch.name} hierarchy"]

    dims = layer.dims()
    padded = mapping.padded_dims()
    for d in DIMS:
        if padded[d] < dims[d]:
            v.append(f"dim {d}: factor product {padded[d]} < size {dims[d]}")

    for l in range(levels):
        active = {d for d in DIMS if mapping.t(l, d) > 1}
        if set(mapping.perms[l]) != active:
            v.append(f"level {arch.levels[l].name}: permutation must list exactly "
                     f"the dims with factor > 1")

    for f, fo in enumerate(arch.fanouts):
        used = mapping.spatial_used(f)
        if used > fo.children:
            v.append(f"fanout {f}: spatial product {used} > {fo.children} children")
        if not fo.reduction:
            for d in REDUCTION_DIMS:
                if mapping.s(f, d) > 1:
                    v.append(f"fanout {f}: cannot split {d} across units that "
                             f"do not exchange partial sums")

    for l in range(levels):
        ops = mapping.bypass[l]
        if not ops:
            continue
        if l == 0 or l == levels - 1:
            v.append(f"level {arch.levels[l].name}: cannot be bypassed")
            continue
        illegal = ops - arch.levels[l].bypassable
        if illegal:
            v.append(f"level {arch.levels[l].name}: bypass not allowed for {sorted(illegal)}")

    for l in range(levels):
        cap = arch.levels[l].capacity_bytes
        if cap is None:
            continue
        need = _capacity_demand(mapping, layer, arch, l)
        if need > cap:
            v.append(f"level {arch.levels[l].name}: tile footprint {need} B "
                     f"exceeds capacity {cap} B")

    # Partially accumulated outputs may move between on-chip levels but
    # never spill into the LLM: outside the output's outermost on-chip
    # tile no reduction loop may enclose an output loop.
    out_chain = chain(mapping, arch, "output")
    if len(out_chain) > 1:
        top_child = out_chain[1]
        if deliveries(mapping, top_child, "output") != distinct_tiles(mapping, top_child, "output"):
            v.append("partial sums would spill into the LLM (reduction loop outside "
                     "an output loop at the outermost level)")
    return v


# ---------------------------------------------------------------------------
# canonical text encoding

def encode_mapping(mapping: Mapping) -> str:
    """Stable text form: one L/P/X segment per level, F per fanout."""
    parts = []
    levels = mapping.num_levels
    for l in range(levels):
        facs = ",".join(f"{d}={mapping.t(l, d)}" for d in DIMS if mapping.t(l, d) > 1)
        parts.append(f"L{l}:{facs}")
        parts.append(f"P{l}:{','.join(mapping.perms[l])}")
        parts.append(f"X{l}:{','.join(sorted(mapping.bypass[l]))}")
        if l < levels - 1:
            facs = ",".join(f"{d}={mapping.s(l, d)}" for d in DIMS if mapping.s(l, d) > 1)
            parts.append(f"F{l}:{facs}")
    return "|".join(parts)


def parse_mapping(text: str) -> Mapping:
    temporal: dict[int, dict[str, int]] = {}
    spatial: dict[int, dict[str, int]] = {}
    perms: dict[int, tuple[str, ...]] = {}
    bypass: dict[int, frozenset] = {}

    def facdict(body: str) -> dict[str, int]:
        out = {}
        if body:
            for item in body.split(","):
                d, _, val = item.partition("=")
                if d not in DIMS:
                    raise MappingError(f"unknown dim {d!r}")
                out[d] = int(val)
        return out

    for seg in text.split("|"):
        tag, _, body = seg.partition(":")
        if len(tag) < 2 or tag[0] not in "LPXF":
            raise MappingError(f"bad segment {seg!r}")
        idx = int(tag[1:])
        if tag[0] == "L":
            temporal[idx] = facdict(body)
        elif tag[0] == "F":
            spatial[idx] = facdict(body)
        elif tag[0] == "P":
            perms[idx] = tuple(p for p in body.split(",") if p)
        else:
            bypass[idx] = frozenset(p for p in body.split(",") if p)

    levels = max(temporal) + 1 if temporal else 0
    if levels < 2 or set(temporal) != set(range(levels)):
        raise MappingError("encoding does not describe a full hierarchy")
    trows = tuple(tuple(temporal[l].get(d, 1) for d in DIMS) for l in range(levels))
    srows = tuple(tuple(spatial.get(f, {}).get(d, 1) for d in DIMS) for f in range(levels - 1))
    prows = tuple(perms.get(l, ()) for l in range(levels))
    brows = tuple(bypass.get(l, frozenset()) for l in range(levels))
    return Mapping(trows, srows, prows, brows)


# ---------------------------------------------------------------------------
# mapspace enumeration

def _divisors(n: int) -> list[int]:
    small, large = [], []
    for i in range(1, int(math.isqrt(n)) + 1):
        if n % i == 0:
            small.append(i)
            if i * i != n:
                large.append(n // i)
    return small + large[::-1]

def _prime_powers(n: int) -> list[tuple[int, int]]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            a = 0
            while n % p == 0:
                n //= p
                a += 1
            out.append((p, a))
        p += 1
    if n > 1:
        out.append((n, 1))
    return out


def count_splits(n: int, slots: int) -> int:
    """Ordered factorizations of n into `slots` positive factors."""
    total = 1
    for _, a in _prime_powers(n):
        total *= math.comb(a + slots - 1, slots - 1)
    return total


def _all_splits(n: int, slots: int):
    if slots == 1:
        yield (n,)
        return
    for d in _divisors(n):
        for rest in _all_splits(n // d, slots - 1):
            yield (d,) + rest


def _sample_split(rng: random.Random, n: int, slots: int) -> tuple[int, ...]:
    """Uniform over ordered factorizations (per prime, a uniform
    composition of its exponent via stars and bars)."""
    parts = [1] * slots
    for p, a in _prime_powers(n):
        if slots == 1:
            parts[0] *= p ** a
            continue
        bars = sorted(rng.sample(range(a + slots - 1), slots - 1))
        prev = 0
        for i, b in enumerate(bars + [a + slots - 1]):
            exp = b - prev
            parts[i] *= p ** exp
            prev = b + 1
    return tuple(parts)


def _split_to_mapping(arch: ArchSpec, split_per_dim: dict[str, tuple[int, ...]],
                      perm_templates: list[tuple[str, ...]] | None = None,
                      bypass: dict[int, set] | None = None) -> Mapping:
    """Slot order per dim: t0, s0, t1, s1, ..., t_last."""
    levels = len(arch.levels)
    temporal = [dict() for _ in range(levels)]
    spatial = [dict() for _ in range(levels - 1)]
    for d, parts in split_per_dim.items():
        for l in range(levels):
            temporal[l][d] = parts[2 * l]
        for f in range(levels - 1):
            spatial[f][d] = parts[2 * f + 1]
    perms = None
    if perm_templates is not None:
        perms = [canonical_perm(temporal[l], perm_templates[l]) for l in range(levels)]
    else:
        perms = [canonical_perm(temporal[l]) for l in range(levels)]
    return make_mapping(arch, temporal, spatial, perms, bypass)


def mapspace_size(layer: LayerShape, arch: ArchSpec) -> int:
    slots = 2 * len(arch.levels) - 1
    total = 1
    for d, n in layer.dims().items():
        total *= count_splits(n, slots)
    return total


def _repair_split(split: dict[str, list[int]], layer: LayerShape, arch: ArchSpec) -> bool:
    """Move prime factors of a sampled split up to the outermost temporal
    slot until fanout widths and level capacities fit (ignoring bypass,
    which only relaxes capacity).  Operates on slot lists in place; slot
    order is t0, s0, t1, s1, ...  Returns False when irreparable."""
    levels = len(arch.levels)

    def shrink(dim: str, slot: int):
        p = _prime_powers(split[dim][slot])[0][0]
        split[dim][slot] //= p
        split[dim][0] *= p

    for f, fo in enumerate(arch.fanouts):
        for _ in range(64):
            used = math.prod(split[d][2 * f + 1] for d in DIMS)
            if used <= fo.children:
                break
            big = max(DIMS, key=lambda d: split[d][2 * f + 1])
            shrink(big, 2 * f + 1)

    def demand(level: int) -> int:
        ext = {d: math.prod(split[d][2 * level:]) for d in DIMS}
        w = ext["Oc"] * ext["Ic"] * ext["Fh"] * ext["Fw"]
        out = ext["B"] * ext["Oc"] * ext["Ox"] * ext["Oy"]
        inp = ext["B"] * ext["Ic"] * ((ext["Ox"] - 1) * layer.stride + ext["Fh"]) \
            * ((ext["Oy"] - 1) * layer.stride + ext["Fw"])
        dbl = 2 if arch.double_buffer and level > 0 else 1
        lv = arch.levels[level]
        total = 0
        for o, wds in (("input", inp * dbl), ("weight", w * dbl), ("output", out)):
            if level in (0, levels - 1) or o in lv.tenants:
                total += wds
        return total * arch.word_bytes

    for level in range(levels - 1, 0, -1):
        cap = arch.levels[level].capacity_bytes
        if cap is None:
            continue
        for _ in range(256):
            if demand(level) <= cap:
                break
            movable = [(split[d][s], d, s) for d in DIMS
                       for s in range(2 * level, 2 * levels - 1) if split[d][s] > 1]
            if not movable:
                return False
            _, d, s = max(movable)
            shrink(d, s)
        else:
            return False
        if demand(level) > cap:
            return False
    return True


# -- handcrafted corner mappings --------------------------------------------

def _largest_divisor_leq(n: int, cap: int) -> int:
    for d in reversed(_divisors(n)):
        if d <= cap:
            return d
    return 1


_SPATIAL_ORDERS = (
    (("Oc", "Ic", "Oy", "Ox", "B", "Fh", "Fw"), False),
    (("Oc", "Oy", "Ox", "B", "Ic", "Fh", "Fw"), False),
    (("Ic", "Oc", "Oy", "Ox", "B", "Fh", "Fw"), False),
    # balanced: split each fanout between two dims, the classic
    # channels-by-channels array layout
    (("Oc", "Ic", "Oy", "Ox", "B", "Fh", "Fw"), True),
    (("Ic", "Oc", "Oy", "Ox", "B", "Fh", "Fw"), True),
)


def _greedy_spatial(layer: LayerShape, arch: ArchSpec, order: tuple[str, ...],
                    balanced: bool) -> tuple[list[dict[str, int]], dict[str, int]]:
    """Fill fanouts with divisor factors of the given dim priority; returns
    the spatial assignment and what remains of each dim.  Balanced mode
    caps each dim near the square root of the fanout width so two dims
    share the array."""
    rem = dict(layer.dims())
    spatial = [dict() for _ in arch.fanouts]
    for f, fo in enumerate(arch.fanouts):
        budget = fo.children
        cap = max(math.isqrt(fo.children), 1) if balanced else fo.children
        for d in order:
            if budget <= 1:
                break
            if d in REDUCTION_DIMS and not fo.reduction:
                continue
            g = _largest_divisor_leq(rem[d], min(budget, cap))
            if g > 1:
                spatial[f][d] = g
                rem[d] //= g
                budget //= g
    return spatial, rem


def _repair_capacity(mapping: Mapping, layer: LayerShape, arch: ArchSpec) -> Mapping | None:
    """Move prime factors of oversized tiles up to the outermost level
    until every finite level fits; None when irreparable."""
    for _ in range(512):
        bad = None
        for l in range(1, len(arch.levels)):
            cap = arch.levels[l].capacity_bytes
            if cap is not None and _capacity_demand(mapping, layer, arch, l) > cap:
                bad = l
                break
        if bad is None:
            return mapping
        moved = False
        # shrink the biggest movable temporal factor at or inside the level
        for l in range(bad, len(arch.levels)):
            cands = [(mapping.t(l, d), d) for d in DIMS if mapping.t(l, d) > 1]
            if not cands:
                continue
            _, d = max(cands)
            p = _prime_powers(mapping.t(l, d))[0][0]
            temporal = [dict(zip(DIMS, row)) for row in mapping.temporal]
            temporal[l][d] //= p
            temporal[0][d] *= p
            perms = [canonical_perm(temporal[i], _template_of(mapping.perms[i]))
                     for i in range(len(temporal))]
            mapping = make_mapping(arch, temporal,
                                   [dict(zip(DIMS, row)) for row in mapping.spatial],
                                   perms, {i: set(b) for i, b in enumerate(mapping.bypass)})
            moved = True
            break
        if not moved:
            return None
    return None


def _template_of(perm: tuple[str, ...]) -> tuple[str, ...]:
    """Closest template consistent with an observed perm order."""
    for tpl in PERM_TEMPLATES:
        order = [d for d in tpl if d in perm]
        if tuple(order) == perm:
            return tpl
    return PERM_OUT_SAFE


def corner_mappings(layer: LayerShape, arch: ArchSpec) -> list[Mapping]:
    """Deterministic corner candidates: whole-layer streaming, maximum
    spatial use, each operand pinned at each buffer level, and
    global-buffer bypass variants."""
    out: list[Mapping] = []
    levels = len(arch.levels)
    dims = layer.dims()

    def add(mapping: Mapping | None):
        if mapping is None:
            return
        if not validate(mapping, layer, arch):
            out.append(mapping)

    gb = arch.buffer_levels[0] if levels > 2 else None
    allowed = arch.levels[gb].bypassable if gb is not None else frozenset()

    def add_with_bypasses(mapping: Mapping | None):
        mapping = _repair_capacity(mapping, layer, arch) if mapping else None
        if mapping is None:
            return
        add(mapping)
        for ops in ({"weight"}, {"input", "weight"}, set(OPERANDS)):
            use = frozenset(ops) & allowed
            if not use:
                continue
            m = replace(mapping, bypass=tuple(
                use if i == gb else b for i, b in enumerate(mapping.bypass)))
            add(_repair_capacity(m, layer, arch))

    # everything temporal at the LLM
    temporal = [dict(dims)] + [dict() for _ in range(levels - 1)]
    add_with_bypasses(make_mapping(arch, temporal, [dict() for _ in arch.fanouts]))

    templates = {"input": PERM_IN_STATIONARY, "weight": PERM_W_STATIONARY,
                 "output": PERM_OUT_SAFE}
    for order, balanced in _SPATIAL_ORDERS:
        spatial, rem = _greedy_spatial(layer, arch, order, balanced)
        temporal = [dict(rem)] + [dict() for _ in range(levels - 1)]
        add_with_bypasses(make_mapping(arch, temporal, spatial))

        # one operand resident at one buffer level
        for o in OPERANDS:
            for l in arch.buffer_levels:
                if o not in arch.levels[l].tenants:
                    continue
                temporal = [dict(rem)] + [dict() for _ in range(levels - 1)]
                for d in RELEVANT[o]:
                    if temporal[0].get(d, 1) > 1:
                        temporal[l][d] = temporal[0].pop(d)
                perms = [canonical_perm(temporal[i],
                                        templates[o] if i >= l else PERM_OUT_SAFE)
                         for i in range(levels)]
                add_with_bypasses(make_mapping(arch, temporal, spatial, perms))

    # dedupe, preserving order
    seen, uniq = set(), []
    for m in out:
        key = encode_mapping(m)
        if key not in seen:
            seen.add(key)
            uniq.append(m)
    return uniq


# -- the stream ---------------------------------------------------------------

def enumerate_mapspace(layer: LayerShape, arch: ArchSpec,
                       limits: MapspaceLimits) -> "MapspaceStream":
    """Deterministic stream of valid mappings for (layer, arch, limits)."""
    return MapspaceStream(layer, arch, limits)


class MapspaceStream:
    """Deterministic iterable of valid mappings for (layer, arch, limits).

    Exhaustive below the factorization-space threshold (one mapping per
    legal factorization under the default loop order), otherwise corner
    mappings plus a seeded uniform sample, max_candidates in total.
    Consumers may partition by index; iteration is repeatable.
    """

    def __init__(self, layer: LayerShape, arch: ArchSpec, limits: MapspaceLimits):
        self.layer = layer
        self.arch = arch
        self.limits = limits
        self.space_size = mapspace_size(layer, arch)
        self.exhaustive = self.space_size <= limits.exhaustive_threshold

    def _seed(self) -> int:
        from .arch import dump_arch
        key = f"{self.limits.random_seed}|{self.layer}|{dump_arch(self.arch)}"
        return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")

    def __iter__(self):
        if self.exhaustive:
            yield from self._iter_exhaustive()
        else:
            yield from self._iter_sampled()

    def _iter_exhaustive(self):
        slots = 2 * len(self.arch.levels) - 1
        dims = self.layer.dims()
        per_dim = [list(_all_splits(dims[d], slots)) for d in DIMS]
        for combo in itertools.product(*per_dim):
            split = dict(zip(DIMS, combo))
            m = _split_to_mapping(self.arch, split)
            if not validate(m, self.layer, self.arch):
                yield m

    def _iter_sampled(self):
        rng = random.Random(self._seed())
        seen: set[str] = set()
        budget = self.limits.max_candidates
        emitted = 0
        for m in corner_mappings(self.layer, self.arch):
            if emitted >= budget:
                return
            seen.add(encode_mapping(m))
            emitted += 1
            yield m

        slots = 2 * len(self.arch.levels) - 1
        dims = self.layer.dims()
        levels = len(self.arch.levels)
        gb = self.arch.buffer_levels[0] if levels > 2 else None
        attempts = 0
        max_attempts = 40 * budget
        while emitted < budget and attempts < max_attempts:
            attempts += 1
            split = {d: list(_sample_split(rng, dims[d], slots)) for d in DIMS}
            if not _repair_split(split, self.layer, self.arch):
                continue
            tpls = [PERM_TEMPLATES[rng.randrange(len(PERM_TEMPLATES))] for _ in range(levels)]
            bypass = None
            if gb is not None and self.arch.levels[gb].bypassable:
                ops = frozenset(o for o in self.arch.levels[gb].bypassable if rng.random() < 0.25)
                if ops:
                    bypass = {gb: set(ops)}
            m = _split_to_mapping(self.arch, {d: tuple(v) for d, v in split.items()}, tpls, bypass)
            if validate(m, self.layer, self.arch):
                continue
            key = encode_mapping(m)
            if key in seen:
                continue
            seen.add(key)
            emitted += 1
            yield m
