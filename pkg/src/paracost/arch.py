"""Accelerator descriptions: memory hierarchies, fanouts and MAC arrays.

An architecture is an ordered list of memory levels from the last-level
memory (LLM, outermost) down to the per-MAC register file, with exactly
one spatial fanout between each adjacent pair.  The innermost fanout is
the MAC array itself: its child count equals lanes * groups and each of
its children owns one register-file instance feeding one MAC.

Three presets model the paradigms compared throughout:

  cha  conventional ASIC accelerator: off-chip DRAM, a global buffer, a
       4x4 PE array with per-PE weight/accumulation buffers, 64 MACs/PE.
  ndp  3D-stacked near-data design: 16 vaults, each with a working-memory
       slice and a 4x4 array of single-MAC PEs on the logic die.
  pim  in-DRAM design: 16 memory chips, each with a small working buffer
       and one 8-MAC cluster built in the DRAM process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import yaml

from .workload import OPERANDS

#: SRAM access-energy anchor for the capacity-scaled buffer rule: a
#: 1 MiB array costs about 1.6 pJ/bit per access regardless of which
#: paradigm fabricated it.
BUFFER_REF_PJ_PER_BIT = 1.6
BUFFER_REF_BYTES = 1 << 20

#: per-bit register-file access energy (pJ/bit)
REGISTER_ENERGY = 0.01


class ArchError(ValueError):
    """Invalid architecture description."""


def buffer_energy(capacity_bytes: int, llm_energy: float) -> float:
    """Default per-bit access energy for an on-chip buffer of given size.

    Monotone in capacity (wordline/bitline length grows with the array):
    1.6 pJ/bit * sqrt(cap / 1 MiB), clamped to [0.01, 0.5 * llm_energy].
    """
    e = BUFFER_REF_PJ_PER_BIT * math.sqrt(capacity_bytes / BUFFER_REF_BYTES)
    return min(max(e, 0.01), 0.5 * llm_energy)


@dataclass(frozen=True)
class MacSpec:
    latency_ns: float
    energy_pj_per_bit: float
    lanes: int
    groups: int

    def __post_init__(self):
        if self.latency_ns <= 0:
            raise ArchError("MAC latency must be > 0")
        if self.energy_pj_per_bit < 0:
            raise ArchError("MAC energy must be >= 0")
        if self.lanes < 1 or self.groups < 1:
            raise ArchError("lanes and groups must be >= 1")


@dataclass(frozen=True)
class MemoryLevel:
    name: str
    capacity_bytes: int | None  # None = unbounded (LLM only)
    bandwidth_bytes_per_s: float  # per instance
    energy_pj_per_bit: float
    tenants: frozenset = frozenset(OPERANDS)
    bypassable: frozenset = frozenset()  # operands a mapping may bypass here
    energy_rule: str = "explicit"  # "derived" energies track capacity changes

    def __post_init__(self):
        if self.capacity_bytes is not None and self.capacity_bytes <= 0:
            raise ArchError(f"{self.name}: capacity must be > 0 or unbounded")
        if self.bandwidth_bytes_per_s <= 0:
            raise ArchError(f"{self.name}: bandwidth must be > 0")
        if not self.tenants:
            raise ArchError(f"{self.name}: tenant set must be non-empty")
        bad = (self.tenants | self.bypassable) - set(OPERANDS)
        if bad:
            raise ArchError(f"{self.name}: unknown operands {sorted(bad)}")


@dataclass(frozen=True)
class Fanout:
    children: int
    rows: int
    cols: int
    link_bandwidth_bytes_per_s: float  # per child link
    link_energy_pj_per_bit: float
    multicast: bool = True
    reduction: bool = True  # children can exchange/merge partial sums

    def __post_init__(self):
        if self.children < 1:
            raise ArchError("fanout child count must be >= 1")
        if self.rows * self.cols != self.children:
            raise ArchError(
                f"fanout arrangement {self.rows}x{self.cols} != child count {self.children}"
            )
        if self.link_bandwidth_bytes_per_s <= 0:
            raise ArchError("link bandwidth must be > 0")


@dataclass(frozen=True)
class ArchSpec:
    name: str
    word_bits: int
    levels: tuple[MemoryLevel, ...]  # outermost (LLM) first, registers last
    fanouts: tuple[Fanout, ...]  # fanouts[i] sits between levels[i] and levels[i+1]
    mac: MacSpec
    double_buffer: bool = True

    def __post_init__(self):
        if self.word_bits < 1:
            raise ArchError("word_bits must be >= 1")
        if len(self.levels) < 2:
            raise ArchError("need at least two levels (LLM and registers)")
        if len(self.fanouts) != len(self.levels) - 1:
            raise ArchError("need exactly one fanout between each adjacent level pair")
        if self.mac.lanes * self.mac.groups != self.fanouts[-1].children:
            raise ArchError(
                "innermost fanout children must equal MAC lanes * groups "
                f"({self.mac.lanes}*{self.mac.groups} != {self.fanouts[-1].children})"
            )
        reg = self.levels[-1]
        if reg.capacity_bytes is not None and reg.capacity_bytes < 3 * self.word_bytes:
            raise ArchError("register level must hold at least one word per operand")

    @property
    def word_bytes(self) -> int:
        return (self.word_bits + 7) // 8

    @property
    def total_macs(self) -> int:
        n = 1
        for f in self.fanouts:
            n *= f.children
        return n

    def instances(self, level: int) -> int:
        """Hardware instances of a level (product of outer fanout children)."""
        n = 1
        for f in self.fanouts[:level]:
            n *= f.children
        return n

    def level_index(self, name: str) -> int:
        for i, lv in enumerate(self.levels):
            if lv.name == name:
                return i
        raise ArchError(f"no level named {name!r}")

    @property
    def buffer_levels(self) -> tuple[int, ...]:
        """Indices of on-chip buffer levels (between LLM and registers)."""
        return tuple(range(1, len(self.levels) - 1))


def _register_level(word_bits: int, mac_latency_ns: float) -> MemoryLevel:
    word_bytes = (word_bits + 7) // 8
    # 16-entry file per MAC; port sized so operand feeding never throttles
    # the MAC (demand is at most 4 words per MAC issue).
    return MemoryLevel(
        name="REG",
        capacity_bytes=16 * word_bytes,
        bandwidth_bytes_per_s=8 * word_bytes / (mac_latency_ns * 1e-9),
        energy_pj_per_bit=REGISTER_ENERGY,
        tenants=frozenset(OPERANDS),
        energy_rule="explicit",
    )


def preset(paradigm: str, word_bits: int = 8) -> ArchSpec:
    """One of the three reference architectures: cha, ndp or pim."""
    if paradigm == "cha":
        mac = MacSpec(latency_ns=1.0, energy_pj_per_bit=0.2, lanes=8, groups=8)
        gb_cap, lb_cap = 2 * 1024 * 1024, 64 * 1024  # 3 MB split 2:1 over 16 PEs
        levels = (
            MemoryLevel("LLM", None, 25.6e9, 46.0, energy_rule="explicit"),
            # weights may stream straight from DRAM into the PE buffers;
            # activations always stage through the global buffer
            MemoryLevel("GB", gb_cap, 70e9, buffer_energy(gb_cap, 46.0),
                        bypassable=frozenset({"weight"}), energy_rule="derived"),
            # the PE buffers hold weights and accumulated outputs; inputs
            # are multicast over the NoC straight into the MAC array
            MemoryLevel("LB", lb_cap, 70e9, buffer_energy(lb_cap, 46.0),
                        tenants=frozenset({"weight", "output"}), energy_rule="derived"),
            _register_level(word_bits, 1.0),
        )
        fanouts = (
            Fanout(1, 1, 1, 25.6e9, 0.0),
            Fanout(16, 4, 4, 70e9, 0.5),  # multi-hop mesh NoC
            Fanout(64, 8, 8, 70e9, 0.3),  # in-PE operand distribution
        )
        return ArchSpec("cha", word_bits, levels, fanouts, mac)

    if paradigm == "ndp":
        mac = MacSpec(latency_ns=2.0, energy_pj_per_bit=0.2, lanes=1, groups=16)
        wm_cap = 128 * 1024  # per-vault slice of the 2 MB working memory
        levels = (
            MemoryLevel("LLM", None, 256e9, 4.2, energy_rule="explicit"),
            MemoryLevel("WM", wm_cap, 6.4e9, buffer_energy(wm_cap, 4.2),
                        bypassable=frozenset(OPERANDS), energy_rule="derived"),
            _register_level(word_bits, 2.0),
        )
        fanouts = (
            # vaults fetch from their own DRAM slice; words needed by several
            # vaults are duplicated (remote fetches priced as extra accesses),
            # but the inter-vault router does merge partial sums
            Fanout(16, 4, 4, 16e9, 0.0, multicast=False, reduction=True),
            Fanout(16, 4, 4, 16e9, 0.8),  # logic-die mesh under the stack
        )
        return ArchSpec("ndp", word_bits, levels, fanouts, mac)

    if paradigm == "pim":
        mac = MacSpec(latency_ns=40.0, energy_pj_per_bit=0.4, lanes=8, groups=1)
        wm_cap = 32 * 1024  # per-chip slice of the 512 KB working memory
        levels = (
            MemoryLevel("LLM", None, 102e9, 2.3, energy_rule="explicit"),
            MemoryLevel("WM", wm_cap, 0.8e9, buffer_energy(wm_cap, 2.3),
                        bypassable=frozenset(OPERANDS), energy_rule="derived"),
            _register_level(word_bits, 40.0),
        )
        fanouts = (
            # chips reached over the shared DDR interface: no broadcast into
            # private arrays, no partial-sum exchange between chips
            Fanout(16, 16, 1, 6.375e9, 0.0, multicast=False, reduction=False),
            Fanout(8, 8, 1, 12.8e9, 0.03),  # in-chip DMA bus feeding the MAC cluster
        )
        return ArchSpec("pim", word_bits, levels, fanouts, mac)

    raise ArchError(f"unknown paradigm {paradigm!r}; expected cha, ndp or pim")


# ---------------------------------------------------------------------------
# serialization

def dump_arch(arch: ArchSpec) -> str:
    """Serialize to the YAML config schema (round-trips through load_arch)."""
    doc = {
        "name": arch.name,
        "word_bits": arch.word_bits,
        "double_buffer": arch.double_buffer,
        "mac": {
            "units": arch.total_macs,
            "latency_ns": arch.mac.latency_ns,
            "energy_pj_per_bit": arch.mac.energy_pj_per_bit,
            "lanes": arch.mac.lanes,
            "groups": arch.mac.groups,
        },
        "levels": [
            {
                "name": lv.name,
                "capacity_bytes": "unbounded" if lv.capacity_bytes is None else lv.capacity_bytes,
                "bandwidth_bytes_per_s": lv.bandwidth_bytes_per_s,
                "energy_pj_per_bit": lv.energy_pj_per_bit,
                "tenants": sorted(lv.tenants),
                "bypass": sorted(lv.bypassable),
                "energy_rule": lv.energy_rule,
            }
            for lv in arch.levels
        ],
        "fanouts": [
            {
                "children": f.children,
                "rows": f.rows,
                "cols": f.cols,
                "link_bandwidth_bytes_per_s": f.link_bandwidth_bytes_per_s,
                "link_energy_pj_per_bit": f.link_energy_pj_per_bit,
                "multicast": f.multicast,
                "reduction": f.reduction,
            }
            for f in arch.fanouts
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False)


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ArchError(f"{path}: missing key {key!r}")
    return mapping[key]


def load_arch(text: str) -> ArchSpec:
    """Parse and validate a YAML architecture config."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ArchError(f"config is not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ArchError("config root must be a mapping")

    name = _require(doc, "name", "config")
    word_bits = int(doc.get("word_bits", 8))
    mac_doc = _require(doc, "mac", "config")
    mac = MacSpec(
        latency_ns=float(_require(mac_doc, "latency_ns", "mac")),
        energy_pj_per_bit=float(_require(mac_doc, "energy_pj_per_bit", "mac")),
        lanes=int(mac_doc.get("lanes", 1)),
        groups=int(mac_doc.get("groups", 1)),
    )

    levels = []
    for i, lv in enumerate(_require(doc, "levels", "config")):
        path = f"levels[{i}]"
        cap = _require(lv, "capacity_bytes", path)
        cap = None if cap in ("unbounded", None) else int(cap)
        levels.append(MemoryLevel(
            name=str(_require(lv, "name", path)),
            capacity_bytes=cap,
            bandwidth_bytes_per_s=float(_require(lv, "bandwidth_bytes_per_s", path)),
            energy_pj_per_bit=float(_require(lv, "energy_pj_per_bit", path)),
            tenants=frozenset(lv.get("tenants", list(OPERANDS))),
            bypassable=frozenset(lv.get("bypass", [])),
            energy_rule=str(lv.get("energy_rule", "explicit")),
        ))

    fanouts = []
    for i, f in enumerate(_require(doc, "fanouts", "config")):
        path = f"fanouts[{i}]"
        fanouts.append(Fanout(
            children=int(_require(f, "children", path)),
            rows=int(f.get("rows", _require(f, "children", path))),
            cols=int(f.get("cols", 1)),
            link_bandwidth_bytes_per_s=float(_require(f, "link_bandwidth_bytes_per_s", path)),
            link_energy_pj_per_bit=float(f.get("link_energy_pj_per_bit", 0.0)),
            multicast=bool(f.get("multicast", True)),
            reduction=bool(f.get("reduction", True)),
        ))

    arch = ArchSpec(
        name=str(name),
        word_bits=word_bits,
        levels=tuple(levels),
        fanouts=tuple(fanouts),
        mac=mac,
        double_buffer=bool(doc.get("double_buffer", True)),
    )
    units = mac_doc.get("units")
    if units is not None and int(units) != arch.total_macs:
        raise ArchError(f"mac.units={units} but fanout product gives {arch.total_macs}")
    return arch


def resolve_arch(ref: str, word_bits: int | None = None) -> ArchSpec:
    """Resolve a preset name or config file path to an ArchSpec."""
    if ref in ("cha", "ndp", "pim"):
        return preset(ref, word_bits or 8)
    try:
        with open(ref, encoding="utf-8") as fh:
            arch = load_arch(fh.read())
    except OSError as exc:
        raise ArchError(f"cannot read architecture {ref!r}: {exc}") from None
    if word_bits is not None and word_bits != arch.word_bits:
        arch = replace(arch, word_bits=word_bits)
    return arch


# ---------------------------------------------------------------------------
# sensitivity transforms

KNOBS = ("llm_bandwidth", "working_memory", "mac_count", "batch_hint")


def _rescale_level(lv: MemoryLevel, cap_factor: float, llm_energy: float) -> MemoryLevel:
    cap = int(round(lv.capacity_bytes * cap_factor))
    energy = buffer_energy(cap, llm_energy) if lv.energy_rule == "derived" else lv.energy_pj_per_bit
    return replace(lv, capacity_bytes=cap, energy_pj_per_bit=energy)


def _square_arrangement(children: int) -> tuple[int, int]:
    r = int(math.isqrt(children))
    while children % r:
        r -= 1
    return r, children // r


def scale(arch: ArchSpec, knob: str, factor: float) -> ArchSpec:
    """Return a new spec with one knob scaled; the original is unchanged.

    llm_bandwidth   multiplies the LLM port and the outermost links.
    working_memory  multiplies buffer capacities; derived access energies
                    follow the capacity rule.
    mac_count       replicates leaf subtrees (working-memory slice plus its
                    MAC array) so lanes/groups stay integral, rounding up;
                    the LLM interface is left untouched.
    batch_hint      no structural effect (batching is a workload transform).
    """
    if factor <= 0:
        raise ArchError("scale factor must be > 0")
    if knob not in KNOBS:
        raise ArchError(f"unknown knob {knob!r}; expected one of {KNOBS}")
    if factor == 1 or knob == "batch_hint":
        return arch

    if knob == "llm_bandwidth":
        levels = (replace(arch.levels[0],
                          bandwidth_bytes_per_s=arch.levels[0].bandwidth_bytes_per_s * factor),
                  ) + arch.levels[1:]
        fanouts = (replace(arch.fanouts[0],
                           link_bandwidth_bytes_per_s=arch.fanouts[0].link_bandwidth_bytes_per_s * factor),
                   ) + arch.fanouts[1:]
        return replace(arch, levels=levels, fanouts=fanouts)

    if knob == "working_memory":
        llm_energy = arch.levels[0].energy_pj_per_bit
        levels = list(arch.levels)
        for i in arch.buffer_levels:
            levels[i] = _rescale_level(levels[i], factor, llm_energy)
        return replace(arch, levels=tuple(levels))

    # mac_count: multiply the child count of the fanout above the deepest
    # buffer (more PEs/chips/vaults sharing the same LLM interface).
    fanouts = list(arch.fanouts)
    mac = arch.mac
    if len(fanouts) >= 2:
        grow = len(fanouts) - 2
        old = fanouts[grow]
        new_children = math.ceil(old.children * factor)
    else:
        # two-level hierarchy: widen the MAC array itself
        grow = 0
        old = fanouts[grow]
        new_groups = math.ceil(mac.groups * factor)
        new_children = mac.lanes * new_groups
        mac = replace(mac, groups=new_groups)
    rows, cols = _square_arrangement(new_children)
    fanouts[grow] = replace(old, children=new_children, rows=rows, cols=cols)
    return replace(arch, fanouts=tuple(fanouts), mac=mac)


def split_buffer(arch: ArchSpec, ratio_global: int, ratio_local: int) -> ArchSpec:
    """Redistribute the total on-chip buffer between global and local levels.

    Requires a two-buffer hierarchy (global + per-PE local).  Total bytes
    are preserved; the local share is divided equally among PE instances;
    derived access energies are recomputed from the new capacities.
    """
    if ratio_global < 1 or ratio_local < 1:
        raise ArchError("split ratios must be >= 1")
    if len(arch.buffer_levels) < 2:
        raise ArchError(f"{arch.name}: no local-buffer level to rebalance")
    gi, li = arch.buffer_levels[0], arch.buffer_levels[1]
    n_local = arch.instances(li)
    total = arch.levels[gi].capacity_bytes + arch.levels[li].capacity_bytes * n_local
    g_cap = total * ratio_global // (ratio_global + ratio_local)
    l_cap = (total - g_cap) // n_local
    llm_energy = arch.levels[0].energy_pj_per_bit
    levels = list(arch.levels)
    levels[gi] = _rescale_level(replace(levels[gi], capacity_bytes=1), g_cap, llm_energy)
    levels[li] = _rescale_level(replace(levels[li], capacity_bytes=1), l_cap, llm_energy)
    return replace(arch, levels=tuple(levels))
