"""Ground truth by brute force.

`simulate_accesses` walks the mapped loop nest step by step (one MAC per
register instance per innermost iteration), maintaining the resident tile
of every operand at every level it occupies.  A tile is replaced whenever
any outer loop index the operand depends on advances.  Every word crossing
every boundary is counted, with spatial sharing and partial-sum merging
derived by literally enumerating the active instance tree, so the result
is exact and independent of the closed-form path.

`reference_layer` evaluates the layer arithmetic itself on small integer
tensors.
"""

from __future__ import annotations

import math

from .arch import ArchSpec
from .cost import AccessProfile
from .mapping import Mapping, chain
from .workload import DIMS, OPERANDS, RELEVANT, LayerShape


class OracleCapError(RuntimeError):
    """Simulation request exceeds the configured MAC budget."""


def _tile_words(mapping: Mapping, layer: LayerShape, level: int, operand: str) -> int:
    """Tile size by literal index enumeration (spans from actual extents)."""
    ext = {d: mapping.factor_at_or_below(level, d) for d in DIMS}
    if operand == "weight":
        return ext["Oc"] * ext["Ic"] * ext["Fh"] * ext["Fw"]
    if operand == "output":
        return ext["B"] * ext["Oc"] * ext["Ox"] * ext["Oy"]
    xs = {ox * layer.stride + fh for ox in range(ext["Ox"]) for fh in range(ext["Fh"])}
    ys = {oy * layer.stride + fw for oy in range(ext["Oy"]) for fw in range(ext["Fw"])}
    span_x = max(xs) - min(xs) + 1
    span_y = max(ys) - min(ys) + 1
    return ext["B"] * ext["Ic"] * span_x * span_y


def _instance_tuples(mapping: Mapping, upto_fanout: int) -> list[tuple]:
    """All active spatial coordinate paths through fanouts [0, upto_fanout)."""
    paths = [()]
    for f in range(upto_fanout):
        combos = [()]
        for d in DIMS:
            combos = [c + (i,) for c in combos for i in range(mapping.s(f, d))]
        paths = [base + (c,) for base in paths for c in combos]
    return paths


def _crossing_counts(mapping: Mapping, arch: ArchSpec, p: int, c: int,
                     operand: str) -> dict[int, int]:
    """Tile copies crossing each fanout between levels p and c per fill
    event, found by bucketing destination instances literally.  A copy
    crossing fanout f is bound for one child of f; sharing applies only
    to multicast-capable fanouts strictly below f.  Key -1 is the parent
    port (copies merged across every crossed fanout)."""
    share_flag = {}
    for f in range(p, c):
        fo = arch.fanouts[f]
        share_flag[f] = fo.reduction if operand == "output" else fo.multicast
    rel = RELEVANT[operand]
    instances = _instance_tuples(mapping, c)
    out: dict[int, int] = {}

    def count(full_upto: int) -> int:
        keys = set()
        for inst in instances:
            key = [inst[:full_upto]]
            for g in range(full_upto, c):
                cg = inst[g]
                if share_flag[g]:
                    cg = tuple(v for d, v in zip(DIMS, cg) if d in rel)
                key.append(cg)
            keys.add(tuple(key))
        return len(keys)

    for f in range(p, c):
        out[f] = count(f + 1)
    out[-1] = count(p)
    return out


def simulate_accesses(mapping: Mapping, layer: LayerShape, arch: ArchSpec,
                      mac_cap: int = 10 ** 6) -> AccessProfile:
    """Exact access profile from element-by-element execution."""
    padded = mapping.padded_dims()
    padded_macs = math.prod(padded.values())
    if padded_macs > mac_cap:
        raise OracleCapError(f"{padded_macs} padded MACs exceed cap {mac_cap}")

    prof = AccessProfile()
    prof.padded_macs = padded_macs
    prof.useful_macs = math.prod(layer.dims().values())
    reg = len(arch.levels) - 1

    # flattened temporal nest, outermost first
    loops: list[tuple[int, str, int]] = []
    for l in range(mapping.num_levels):
        for d in mapping.perms[l]:
            loops.append((l, d, mapping.t(l, d)))
    n_loops = len(loops)
    idx = [0] * n_loops
    steps = math.prod(trip for _, _, trip in loops) if loops else 1

    active = mapping.active_macs()

    # trackers: one per (operand, chain level below the top)
    trackers = []
    for o in OPERANDS:
        levels = chain(mapping, arch, o)
        for p, c in zip(levels, levels[1:]):
            relevant_pos = [q for q, (lv, d, _) in enumerate(loops)
                            if lv < c and d in RELEVANT[o]]
            trackers.append({
                "operand": o,
                "parent": p,
                "level": c,
                "pos": relevant_pos,
                "words": _tile_words(mapping, layer, c, o),
                "ninst": mapping.instances(c),
                "crossing": _crossing_counts(mapping, arch, p, c, o),
                "resident": None,
                "seen": set(),
                "fills": 0,
                "drains": 0,
                "readbacks": 0,
            })

    def coords_of(tr) -> tuple:
        return tuple(idx[q] for q in tr["pos"])

    # per-step output element bookkeeping for one register instance
    out_pos = [q for q, (_, d, _) in enumerate(loops) if d in RELEVANT["output"]]
    seen_elems: set = set()
    first_touch_steps = 0

    for step in range(steps):
        for tr in trackers:
            cur = coords_of(tr)
            if cur != tr["resident"]:
                if tr["operand"] == "output":
                    if tr["resident"] is not None:
                        tr["drains"] += 1
                        tr["seen"].add(tr["resident"])
                    if cur in tr["seen"]:
                        tr["readbacks"] += 1
                else:
                    tr["fills"] += 1
                tr["resident"] = cur
        elem = tuple(idx[q] for q in out_pos)
        if elem not in seen_elems:
            seen_elems.add(elem)
            first_touch_steps += 1
        # odometer
        for q in range(n_loops - 1, -1, -1):
            idx[q] += 1
            if idx[q] < loops[q][2]:
                break
            idx[q] = 0

    for tr in trackers:  # flush the final residence
        if tr["operand"] == "output" and tr["resident"] is not None:
            tr["drains"] += 1

    for tr in trackers:
        o, p, c = tr["operand"], tr["parent"], tr["level"]
        w, ninst = tr["words"], tr["ninst"]
        cross = tr["crossing"]
        if o == "output":
            prof.add("reads", (c, o), tr["drains"] * w * ninst)
            for f in range(p, c):
                prof.add("transferred", (f, o), tr["drains"] * w * cross[f])
            prof.add("writes", (p, o), tr["drains"] * w * cross[-1])
            rb = tr["readbacks"] * w * cross[-1]
            if rb:
                prof.add("reads", (p, o), rb)
                prof.add("writes", (c, o), rb)
                for f in range(p, c):
                    prof.add("transferred", (f, o), rb)
        else:
            prof.add("writes", (c, o), tr["fills"] * w * ninst)
            for f in range(p, c):
                prof.add("transferred", (f, o), tr["fills"] * w * cross[f])
            prof.add("reads", (p, o), tr["fills"] * w * cross[-1])

    # MAC operand feeds and in-place accumulation at the innermost level
    prof.add("reads", (reg, "input"), padded_macs)
    prof.add("reads", (reg, "weight"), padded_macs)
    first_touch = first_touch_steps * active
    updates = padded_macs - first_touch
    acc = chain(mapping, arch, "output")[-1]
    prof.add("psum_updates", acc, updates)
    prof.add("writes", (acc, "output"), first_touch + updates)
    prof.add("reads", (acc, "output"), updates)

    # observed sharing ratio per fanout: delivered words / words crossing
    for f in range(len(arch.fanouts)):
        for o in OPERANDS:
            flag = arch.fanouts[f].reduction if o == "output" else arch.fanouts[f].multicast
            if not flag:
                prof.multicast[(f, o)] = 1
                continue
            rel = RELEVANT[o]
            share = 1
            for d in DIMS:
                if d not in rel:
                    share *= mapping.s(f, d)
            prof.multicast[(f, o)] = share
    return prof


# ---------------------------------------------------------------------------
# functional reference

def reference_layer(layer: LayerShape, inputs, weights):
    """Evaluate the layer on integer tensors.

    inputs:  [B][Ic][H][W] nested lists
    weights: [Oc][Ic][Fh][Fw]
    returns: [B][Oc][Oy][Ox] with out[b][oc][y][x] =
             sum_ic sum_i sum_j in[b][ic][x*s+i-pad][y*s+j-pad] * w[oc][ic][i][j]
    (zero outside the input bounds; height indexed by the first spatial axis)
    """
    d = layer.dims()
    b_, ic_, oc_ = d["B"], d["Ic"], d["Oc"]
    ox_, oy_, fh_, fw_ = d["Ox"], d["Oy"], d["Fh"], d["Fw"]
    if len(inputs) != b_ or len(inputs[0]) != ic_ or len(inputs[0][0]) != layer.h \
            or len(inputs[0][0][0]) != layer.w:
        raise ValueError("input tensor does not match layer dims")
    if len(weights) != oc_ or len(weights[0]) != ic_ or len(weights[0][0]) != layer.fh \
            or len(weights[0][0][0]) != layer.fw:
        raise ValueError("weight tensor does not match layer dims")

    out = [[[[0] * ox_ for _ in range(oy_)] for _ in range(oc_)] for _ in range(b_)]
    s, pad = layer.stride, layer.pad
    for b in range(b_):
        for oc in range(oc_):
            for y in range(oy_):
                for x in range(ox_):
                    acc = 0
                    for ic in range(ic_):
                        for i in range(fh_):
                            for j in range(fw_):
                                row = x * s + i - pad
                                col = y * s + j - pad
                                if 0 <= row < layer.h and 0 <= col < layer.w:
                                    acc += inputs[b][ic][row][col] * weights[oc][ic][i][j]
                    out[b][oc][y][x] = acc
    return out
