import pytest

from paracost.arch import ArchSpec, Fanout, MacSpec, MemoryLevel, preset, scale
from paracost.cost import AccessProfile, analyze_reuse, energy, evaluate
from paracost.mapping import make_mapping, validate
from paracost.workload import LayerShape, derive_metrics


def toy_arch(double_buffer=False):
    return ArchSpec("toy", 8,
                    (MemoryLevel("LLM", None, 1e9, 10.0),
                     MemoryLevel("GB", 4096, 1e9, 1.0, bypassable=frozenset({"weight"})),
                     MemoryLevel("REG", 64, 1e9, 0.01)),
                    (Fanout(1, 1, 1, 1e9, 0.0),
                     Fanout(4, 2, 2, 1e9, 0.1)),
                    MacSpec(1.0, 0.1, 2, 2), double_buffer=double_buffer)


class TestAnalyzeReuse:
    def test_single_tile_fc_llm_traffic(self):
        # whole layer resident below the LLM: each operand moves once
        layer = LayerShape("f", "fc", 1, 8, 8, 1, 1, 1, 1, 1, 0)
        arch = toy_arch()
        m = make_mapping(arch, [{}, {"Ic": 8, "Oc": 2}, {"Oc": 1}],
                         [{}, {"Oc": 4}])
        assert validate(m, layer, arch) == []
        prof = analyze_reuse(m, layer, arch)
        met = derive_metrics(layer)
        assert prof.reads[(0, "input")] == met.input_words
        assert prof.reads[(0, "weight")] == met.filter_words
        assert prof.writes[(0, "output")] == met.output_words
        assert (0, "output") not in prof.reads  # no partial spill

    def test_toy_conv_halo_refetch(self):
        layer = LayerShape("t", "conv", 1, 1, 1, 4, 4, 3, 3, 1, 0)
        arch = toy_arch()
        m = make_mapping(arch, [{"Ox": 2, "Oy": 2}, {"Fh": 3, "Fw": 3}, {}],
                         [{}, {}])
        assert validate(m, layer, arch) == []
        prof = analyze_reuse(m, layer, arch)
        assert prof.reads[(0, "input")] == 36  # 4 tiles of 9 > the 16 input words

    def test_weight_stationary_batch_loop(self):
        # B innermost at the outer level leaves the weight resident
        layer = LayerShape("f", "fc", 8, 1, 1, 1, 1, 1, 1, 1, 0)
        arch = toy_arch()
        m = make_mapping(arch, [{"B": 8}, {}, {}], [{}, {}])
        prof = analyze_reuse(m, layer, arch)
        assert prof.reads[(0, "weight")] == 1
        assert prof.reads[(0, "input")] == 8

    def test_llm_reads_never_below_footprint(self):
        layer = LayerShape("c", "conv", 1, 2, 4, 6, 6, 3, 3, 1, 1)
        arch = toy_arch()
        met = derive_metrics(layer)
        from paracost.mapping import MapspaceLimits, MapspaceStream
        for m in MapspaceStream(layer, arch, MapspaceLimits(25, 5, 10)):
            prof = analyze_reuse(m, layer, arch)
            assert prof.reads[(0, "input")] >= met.input_words
            assert prof.reads[(0, "weight")] >= met.filter_words
            assert prof.writes[(0, "output")] == met.output_words


class TestLatency:
    def test_fc1024_cha_is_llm_bound(self):
        layer = LayerShape("f", "fc", 1, 1024, 1024, 1, 1, 1, 1, 1, 0)
        cha = preset("cha")
        m = make_mapping(cha,
                         [{"Oc": 8}, {"Ic": 128}, {}, {}],
                         [{}, {"Oc": 16}, {"Ic": 8, "Oc": 8}],
                         perms=[("Oc",), ("Ic",), (), ()],
                         bypass={1: {"weight"}})
        assert validate(m, layer, cha) == []
        r = evaluate(m, layer, cha)
        # 1,050,624 bytes over 25.6 GB/s
        assert r.latency_ns == pytest.approx(41040, rel=1e-3)
        assert r.bottleneck == "LLM"
        assert r.utilization == pytest.approx(0.025, rel=0.01)
        assert r.compute_ns == pytest.approx(1024, rel=1e-6)

    def test_one_mac_layer_compute_bound(self):
        layer = LayerShape("one", "fc", 1, 1, 1, 1, 1, 1, 1, 1, 0)
        for name in ("cha", "ndp", "pim"):
            arch = preset(name)
            m = make_mapping(arch, [{}] * len(arch.levels),
                             [{}] * (len(arch.levels) - 1))
            r = evaluate(m, layer, arch)
            assert r.latency_ns == arch.mac.latency_ns
            assert r.bottleneck == "compute"

    def test_fc1024_ndp_compute_bound(self):
        layer = LayerShape("f", "fc", 1, 1024, 1024, 1, 1, 1, 1, 1, 0)
        ndp = preset("ndp")
        m = make_mapping(ndp,
                         [{}, {"Ic": 1024, "Oc": 4}, {}],
                         [{"Oc": 16}, {"Oc": 16}],
                         perms=[(), ("Oc", "Ic"), ()],
                         bypass={1: {"weight"}})
        assert validate(m, layer, ndp) == []
        r = evaluate(m, layer, ndp)
        assert r.bottleneck == "compute"
        assert r.latency_ns == pytest.approx(8192, rel=1e-6)

    def test_bandwidth_monotonicity(self):
        layer = LayerShape("f", "fc", 1, 64, 64, 1, 1, 1, 1, 1, 0)
        arch = toy_arch()
        m = make_mapping(arch, [{"Oc": 4}, {"Ic": 64, "Oc": 4}, {}],
                         [{}, {"Oc": 4}], perms=[("Oc",), ("Oc", "Ic"), ()])
        base = evaluate(m, layer, arch).latency_ns
        faster = evaluate(m, layer, scale(arch, "llm_bandwidth", 4)).latency_ns
        assert faster <= base


class TestEnergy:
    def test_one_mac_energy_component(self):
        layer = LayerShape("one", "fc", 1, 1, 1, 1, 1, 1, 1, 1, 0)
        cha = preset("cha")
        m = make_mapping(cha, [{}] * 4, [{}] * 3)
        r = evaluate(m, layer, cha)
        # one useful MAC at word_bits * energy_per_bit
        assert r.breakdown["mac"] == pytest.approx(8 * 0.2)

    def test_zero_access_profile(self):
        prof = AccessProfile(useful_macs=100, padded_macs=100)
        total, breakdown = energy(prof, preset("cha"))
        assert total == breakdown["mac"] == pytest.approx(100 * 8 * 0.2)

    def test_llm_energy_rate_ratio(self):
        # the per-bit LLM rate is 20x between cha and pim
        assert preset("cha").levels[0].energy_pj_per_bit \
            == pytest.approx(20 * preset("pim").levels[0].energy_pj_per_bit)

    def test_breakdown_sums_to_total(self):
        layer = LayerShape("c", "conv", 1, 2, 4, 6, 6, 3, 3, 1, 1)
        arch = toy_arch()
        from paracost.mapping import MapspaceLimits, MapspaceStream
        for m in MapspaceStream(layer, arch, MapspaceLimits(10, 2, 5)):
            r = evaluate(m, layer, arch)
            assert sum(r.breakdown.values()) == pytest.approx(r.energy_pj)

    def test_energy_rate_monotonicity(self):
        layer = LayerShape("f", "fc", 1, 16, 16, 1, 1, 1, 1, 1, 0)
        arch = toy_arch()
        m = make_mapping(arch, [{}, {"Ic": 16, "Oc": 4}, {}], [{}, {"Oc": 4}])
        prof = analyze_reuse(m, layer, arch)
        base, _ = energy(prof, arch)
        import dataclasses
        bumped = dataclasses.replace(
            arch, levels=(dataclasses.replace(arch.levels[0], energy_pj_per_bit=20.0),)
            + arch.levels[1:])
        higher, _ = energy(prof, bumped)
        assert higher > base


def fast_toy_arch():
    """Toy hierarchy with bandwidth far above any demand (compute-bound)."""
    return ArchSpec("fast", 8,
                    (MemoryLevel("LLM", None, 1e15, 10.0),
                     MemoryLevel("GB", 4096, 1e15, 1.0),
                     MemoryLevel("REG", 64, 1e15, 0.01)),
                    (Fanout(1, 1, 1, 1e15, 0.0),
                     Fanout(4, 2, 2, 1e15, 0.1)),
                    MacSpec(1.0, 0.1, 2, 2), double_buffer=False)


class TestUtilization:
    def test_full_use(self):
        layer = LayerShape("f", "fc", 1, 2, 2, 1, 1, 1, 1, 1, 0)
        arch = fast_toy_arch()
        m = make_mapping(arch, [{}, {}, {}], [{}, {"Ic": 2, "Oc": 2}])
        r = evaluate(m, layer, arch)
        assert r.bottleneck == "compute"
        assert r.utilization == 1.0

    def test_padding_excluded_from_useful_work(self):
        layer = LayerShape("f", "fc", 1, 3, 1, 1, 1, 1, 1, 1, 0)
        arch = fast_toy_arch()
        # Ic=3 forced onto a 4-way spatial split: one lane is garbage
        m = make_mapping(arch, [{}, {}, {}], [{}, {"Ic": 4}])
        prof = analyze_reuse(m, layer, arch)
        assert prof.padded_macs == 4 and prof.useful_macs == 3
        r = evaluate(m, layer, arch)
        assert r.utilization == pytest.approx(3 / 4)
        assert r.breakdown["mac"] == pytest.approx(3 * 8 * 0.1)
