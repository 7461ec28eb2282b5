import pytest

from paracost.arch import ArchSpec, Fanout, MacSpec, MemoryLevel, preset
from paracost.mapping import (MappingError, MapspaceLimits, MapspaceStream,
                              _all_splits, count_splits, encode_mapping, make_mapping,
                              mapspace_size, parse_mapping, tile_footprint, validate)
from paracost.workload import LayerShape


def toy_arch(reg_bytes=64, double_buffer=False):
    return ArchSpec("toy", 8,
                    (MemoryLevel("LLM", None, 1e9, 10.0),
                     MemoryLevel("REG", reg_bytes, 1e9, 0.01)),
                    (Fanout(4, 2, 2, 1e9, 0.0),),
                    MacSpec(1.0, 0.1, 2, 2), double_buffer=double_buffer)


TOY_CONV = LayerShape("t", "conv", 1, 1, 1, 4, 4, 3, 3, 1, 0)


class TestFootprint:
    def test_whole_layer_at_llm(self):
        m = make_mapping(toy_arch(), [{}, {"Ox": 2, "Oy": 2, "Fh": 3, "Fw": 3}], [{}])
        assert tile_footprint(m, TOY_CONV, 0, "input") == 16
        assert tile_footprint(m, TOY_CONV, 0, "weight") == 9
        assert tile_footprint(m, TOY_CONV, 0, "output") == 4

    def test_unit_output_tile_is_filter_window(self):
        m = make_mapping(toy_arch(), [{"Ox": 2, "Oy": 2}, {"Fh": 3, "Fw": 3}], [{}])
        assert tile_footprint(m, TOY_CONV, 1, "input") == 9

    def test_two_by_two_tile_halo(self):
        m = make_mapping(toy_arch(), [{}, {"Ox": 2, "Oy": 2, "Fh": 3, "Fw": 3}], [{}])
        # (2-1)*1 + 3 = 4 per side
        assert tile_footprint(m, TOY_CONV, 1, "input") == 16


class TestValidate:
    def test_trivial_one_mac(self):
        layer = LayerShape("one", "fc", 1, 1, 1, 1, 1, 1, 1, 1, 0)
        m = make_mapping(toy_arch(), [{}, {}], [{}])
        assert validate(m, layer, toy_arch()) == []

    def test_capacity_violation_names_level(self):
        arch = toy_arch(reg_bytes=8)
        m = make_mapping(arch, [{}, {"Ox": 2, "Oy": 2, "Fh": 3, "Fw": 3}], [{}])
        errs = validate(m, TOY_CONV, arch)
        assert any("REG" in e and "capacity" in e for e in errs)

    def test_fanout_overflow(self):
        arch = toy_arch()
        layer = LayerShape("f", "fc", 1, 8, 8, 1, 1, 1, 1, 1, 0)
        m = make_mapping(arch, [{"Ic": 8}, {}], [{"Oc": 8}])
        errs = validate(m, layer, arch)
        assert any("spatial product" in e for e in errs)

    def test_underfactored_dim(self):
        m = make_mapping(toy_arch(), [{}, {"Ox": 2, "Oy": 2, "Fh": 3}], [{}])
        errs = validate(m, TOY_CONV, toy_arch())
        assert any("Fw" in e for e in errs)

    def test_reduction_split_needs_capable_fanout(self):
        arch = preset("pim")
        layer = LayerShape("f", "fc", 1, 16, 1, 1, 1, 1, 1, 1, 0)
        m = make_mapping(arch, [{}, {}, {}], [{"Ic": 16}, {}])
        errs = validate(m, layer, arch)
        assert any("partial sums" in e for e in errs)

    def test_no_partial_spill_into_llm(self):
        arch = toy_arch()
        layer = LayerShape("f", "fc", 1, 4, 4, 1, 1, 1, 1, 1, 0)
        bad = make_mapping(arch, [{"Ic": 4, "Oc": 4}, {}], [{}],
                           perms=[("Ic", "Oc"), ()])
        good = make_mapping(arch, [{"Ic": 4, "Oc": 4}, {}], [{}],
                            perms=[("Oc", "Ic"), ()])
        assert any("spill" in e for e in validate(bad, layer, arch))
        assert validate(good, layer, arch) == []

    def test_bypass_only_where_allowed(self):
        arch = preset("cha")
        layer = LayerShape("f", "fc", 1, 4, 4, 1, 1, 1, 1, 1, 0)
        m = make_mapping(arch, [{"Ic": 4, "Oc": 4}, {}, {}, {}], [{}, {}, {}],
                         perms=[("Oc", "Ic"), (), (), ()],
                         bypass={2: {"weight"}})
        errs = validate(m, layer, arch)
        assert any("bypass" in e for e in errs)


class TestEncoding:
    def test_round_trip(self):
        arch = preset("cha")
        m = make_mapping(arch,
                         [{"Oc": 8}, {"Ic": 128}, {}, {"Ox": 2}],
                         [{}, {"Oc": 16}, {"Ic": 8, "Oc": 8}],
                         bypass={1: {"weight"}})
        assert parse_mapping(encode_mapping(m)) == m

    def test_rejects_garbage(self):
        with pytest.raises(MappingError):
            parse_mapping("L0:Zz=3")


class TestEnumeration:
    def test_divisor_pairs(self):
        assert sorted(_all_splits(4, 2)) == [(1, 4), (2, 2), (4, 1)]
        assert count_splits(4, 2) == 3

    def test_all_unit_dims_single_mapping(self):
        layer = LayerShape("one", "fc", 1, 1, 1, 1, 1, 1, 1, 1, 0)
        stream = MapspaceStream(layer, toy_arch(), MapspaceLimits(10, 1, 100))
        assert stream.exhaustive
        assert len(list(stream)) == 1

    def test_exhaustive_matches_brute_force_count(self):
        # independent oracle: enumerate divisor products and validate each
        layer = LayerShape("f", "fc", 1, 6, 4, 1, 1, 1, 1, 1, 0)
        arch = toy_arch()
        lim = MapspaceLimits(10, 1, 10_000)
        stream = MapspaceStream(layer, arch, lim)
        assert stream.exhaustive
        got = len(list(stream))

        from paracost.mapping import _split_to_mapping
        slots = 2 * len(arch.levels) - 1
        count = 0
        for ic in _all_splits(6, slots):
            for oc in _all_splits(4, slots):
                split = {"B": (1,) * slots, "Ic": ic, "Oc": oc,
                         "Ox": (1,) * slots, "Oy": (1,) * slots,
                         "Fh": (1,) * slots, "Fw": (1,) * slots}
                m = _split_to_mapping(arch, split)
                if not validate(m, layer, arch):
                    count += 1
        assert got == count > 0

    def test_determinism(self):
        layer = LayerShape("mn_l1", "conv", 1, 3, 32, 224, 224, 3, 3, 2, 1)
        arch = preset("cha")
        lim = MapspaceLimits(50, 7, 1000)
        a = [encode_mapping(m) for m in MapspaceStream(layer, arch, lim)]
        b = [encode_mapping(m) for m in MapspaceStream(layer, arch, lim)]
        assert a == b

    def test_sampled_stream_size_is_budget(self):
        layer = LayerShape("mn_l1", "conv", 1, 3, 32, 224, 224, 3, 3, 2, 1)
        arch = preset("cha")
        assert mapspace_size(layer, arch) > 10 ** 6
        stream = MapspaceStream(layer, arch, MapspaceLimits(120, 1, 10 ** 6))
        assert not stream.exhaustive
        mappings = list(stream)
        assert len(mappings) == 120
        assert len({encode_mapping(m) for m in mappings}) == 120
        for m in mappings[:20]:
            assert validate(m, layer, arch) == []

    def test_stream_only_contains_valid(self):
        layer = LayerShape("f", "fc", 2, 12, 8, 1, 1, 1, 1, 1, 0)
        arch = toy_arch()
        for m in MapspaceStream(layer, arch, MapspaceLimits(30, 3, 10)):
            assert validate(m, layer, arch) == []


class TestLimits:
    def test_positive_required(self):
        with pytest.raises(MappingError):
            MapspaceLimits(0, 1, 10)
