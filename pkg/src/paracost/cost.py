"""Analytical access counting, latency, energy and utilization.

Word traffic is derived per level and per fanout from the mapping's loop
structure:

  * a tile enters a level once per delivery (outer loops that index the
    operand advance it; loops that do not, nested innermost, leave it
    stationary);
  * words read from the parent are shared across spatial siblings that
    differ only in loop dims the operand does not index, when the fanout
    multicasts; link transfers are charged per destination (a multicast
    saves the parent port, not the wire into each receiver);
  * partially accumulated output tiles drain upward at the end of each
    residence, merge across reduction-capable fanouts, and are read back
    when the same tile returns for further accumulation;
  * every MAC reads its input and weight word from the register file and
    performs a read-modify-write of its output accumulator there.

All counts are exact integers over the padded iteration space, which is
what the brute-force simulator reproduces word for word.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .arch import ArchSpec
from .mapping import Mapping, chain, deliveries, distinct_tiles, tile_footprint
from .workload import DIMS, OPERANDS, RELEVANT, LayerShape


@dataclass
class AccessProfile:
    """Exact word counts: reads/writes per (level, operand), transfers and
    multicast factors per (fanout, operand), partial-sum updates per level."""

    reads: dict = field(default_factory=dict)
    writes: dict = field(default_factory=dict)
    transferred: dict = field(default_factory=dict)
    multicast: dict = field(default_factory=dict)
    psum_updates: dict = field(default_factory=dict)
    useful_macs: int = 0
    padded_macs: int = 0

    def add(self, table: str, key, words: int):
        if words:
            d = getattr(self, table)
            d[key] = d.get(key, 0) + words

    def normalized(self) -> "AccessProfile":
        """Drop zero entries so profiles compare by content."""
        return AccessProfile(
            reads={k: v for k, v in sorted(self.reads.items()) if v},
            writes={k: v for k, v in sorted(self.writes.items()) if v},
            transferred={k: v for k, v in sorted(self.transferred.items()) if v},
            multicast={k: v for k, v in sorted(self.multicast.items()) if v != 1},
            psum_updates={k: v for k, v in sorted(self.psum_updates.items()) if v},
            useful_macs=self.useful_macs,
            padded_macs=self.padded_macs,
        )

    def level_words(self, level: int) -> int:
        return (sum(v for (l, _), v in self.reads.items() if l == level)
                + sum(v for (l, _), v in self.writes.items() if l == level))

    def fanout_words(self, fanout: int) -> int:
        return sum(v for (f, _), v in self.transferred.items() if f == fanout)


def _share(mapping: Mapping, arch: ArchSpec, fanout: int, operand: str) -> int:
    """Spatial siblings of one fanout served by a single parent word."""
    if operand == "output":
        if not arch.fanouts[fanout].reduction:
            return 1
    elif not arch.fanouts[fanout].multicast:
        return 1
    share = 1
    for d in DIMS:
        if d not in RELEVANT[operand]:
            share *= mapping.s(fanout, d)
    return share


def analyze_reuse(mapping: Mapping, layer: LayerShape, arch: ArchSpec) -> AccessProfile:
    """Closed-form access profile of a valid mapping."""
    prof = AccessProfile()
    padded = mapping.padded_dims()
    prof.padded_macs = math.prod(padded.values())
    prof.useful_macs = math.prod(layer.dims().values())
    reg = len(arch.levels) - 1

    for f in range(len(arch.fanouts)):
        for o in OPERANDS:
            prof.multicast[(f, o)] = _share(mapping, arch, f, o)

    for o in ("input", "weight"):
        levels = chain(mapping, arch, o)
        for p, c in zip(levels, levels[1:]):
            fills = mapping.instances(c) * deliveries(mapping, c, o) * tile_footprint(mapping, layer, c, o)
            prof.add("writes", (c, o), fills)
            share = 1  # copies merge above each multicasting fanout
            for f in range(c - 1, p - 1, -1):
                prof.add("transferred", (f, o), fills // share)
                share *= _share(mapping, arch, f, o)
            prof.add("reads", (p, o), fills // share)
        # operand feed into the MAC array
        prof.add("reads", (reg, o), prof.padded_macs)

    out_levels = chain(mapping, arch, "output")
    acc = out_levels[-1]
    padded_outputs = math.prod(padded[d] for d in DIMS if d in RELEVANT["output"])
    reps = 1
    for f in range(len(arch.fanouts)):
        for d in DIMS:
            if d not in RELEVANT["output"]:
                reps *= mapping.s(f, d)
    first_touch = padded_outputs * reps
    updates = prof.padded_macs - first_touch
    prof.add("psum_updates", acc, updates)
    prof.add("writes", (acc, "output"), first_touch + updates)
    prof.add("reads", (acc, "output"), updates)

    for p, c in zip(out_levels, out_levels[1:]):
        res = deliveries(mapping, c, "output")
        dist = distinct_tiles(mapping, c, "output")
        fp = tile_footprint(mapping, layer, c, "output")
        ninst = mapping.instances(c)
        drains = res * fp * ninst
        prof.add("reads", (c, "output"), drains)
        share = 1  # partials merge at the parent side of each fanout
        for f in range(c - 1, p - 1, -1):
            prof.add("transferred", (f, "output"), drains // share)
            share *= _share(mapping, arch, f, "output")
        prof.add("writes", (p, "output"), drains // share)
        readback = (res - dist) * fp * ninst // share
        if readback:
            prof.add("reads", (p, "output"), readback)
            prof.add("writes", (c, "output"), readback)
            for f in range(c - 1, p - 1, -1):
                prof.add("transferred", (f, "output"), readback)
    return prof


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CostResult:
    latency_ns: float
    bottleneck: str
    energy_pj: float
    breakdown: dict
    utilization: float
    active_macs: int
    compute_ns: float

    def sort_key(self):
        return (self.latency_ns, self.energy_pj)


def latency(profile: AccessProfile, mapping: Mapping, layer: LayerShape,
            arch: ArchSpec) -> tuple[float, str, float]:
    """(latency_ns, bottleneck, compute_ns) under perfectly overlapped
    (double-buffered) compute and transfer: the slowest channel wins and
    ties are labelled compute."""
    active = mapping.active_macs()
    compute = math.ceil(profile.padded_macs / active) * arch.mac.latency_ns
    best_name, best = "compute", compute
    wb = arch.word_bytes
    for l, lv in enumerate(arch.levels):
        words = profile.level_words(l)
        if not words:
            continue
        inst = mapping.instances(l)
        t = words * wb / (lv.bandwidth_bytes_per_s * inst) * 1e9
        if t > best:
            best_name, best = lv.name, t
    for f, fo in enumerate(arch.fanouts):
        words = profile.fanout_words(f)
        if not words:
            continue
        links = mapping.spatial_used(f) * mapping.instances(f)
        t = words * wb / (fo.link_bandwidth_bytes_per_s * links) * 1e9
        if t > best:
            best_name, best = f"{arch.levels[f + 1].name}.link", t
    return best, best_name, compute


def energy(profile: AccessProfile, arch: ArchSpec) -> tuple[float, dict]:
    """(total pJ, per-component breakdown).  Padded garbage work moves
    words and burns time but is not charged MAC energy."""
    breakdown: dict[str, float] = {}
    bits = arch.word_bits
    last = len(arch.levels) - 1
    for l, lv in enumerate(arch.levels):
        words = profile.level_words(l)
        if l == 0:
            key = "llm"
        elif l == last:
            key = "register"
        else:
            key = f"buffer:{lv.name}"
        breakdown[key] = words * bits * lv.energy_pj_per_bit
    net = 0.0
    for f, fo in enumerate(arch.fanouts):
        net += profile.fanout_words(f) * bits * fo.link_energy_pj_per_bit
    breakdown["network"] = net
    breakdown["mac"] = profile.useful_macs * bits * arch.mac.energy_pj_per_bit
    return sum(breakdown.values()), breakdown


def utilization(profile: AccessProfile, arch: ArchSpec, latency_ns: float) -> float:
    """Share of all MAC-unit time doing useful (non-padded) work."""
    return profile.useful_macs * arch.mac.latency_ns / (latency_ns * arch.total_macs)


def evaluate(mapping: Mapping, layer: LayerShape, arch: ArchSpec,
             profile: AccessProfile | None = None) -> CostResult:
    if profile is None:
        profile = analyze_reuse(mapping, layer, arch)
    lat, bottleneck, compute = latency(profile, mapping, layer, arch)
    e, breakdown = energy(profile, arch)
    return CostResult(
        latency_ns=lat,
        bottleneck=bottleneck,
        energy_pj=e,
        breakdown=breakdown,
        utilization=utilization(profile, arch, lat),
        active_macs=mapping.active_macs(),
        compute_ns=compute,
    )
