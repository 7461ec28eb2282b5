import pytest
from hypothesis import given, settings, strategies as st

from paracost.workload import (LayerShape, WorkloadError, derive_metrics,
                               load_workload, output_dims, parse_workload)


def brute_force_macs(layer):
    """Literal seven-loop enumeration of multiply-accumulates."""
    d = layer.dims()
    count = 0
    for _b in range(d["B"]):
        for _oc in range(d["Oc"]):
            for _x in range(d["Ox"]):
                for _y in range(d["Oy"]):
                    for _ic in range(d["Ic"]):
                        for _i in range(d["Fh"]):
                            for _j in range(d["Fw"]):
                                count += 1
    return count


class TestOutputDims:
    def test_strided_padded(self):
        assert output_dims(224, 224, 3, 3, 2, 1) == (112, 112)

    def test_identity(self):
        assert output_dims(1, 1, 1, 1, 1, 0) == (1, 1)

    def test_plain_window(self):
        assert output_dims(4, 4, 3, 3, 1, 0) == (2, 2)

    def test_filter_too_large(self):
        with pytest.raises(WorkloadError):
            output_dims(2, 2, 5, 5, 1, 0)


class TestDeriveMetrics:
    def test_fc_1024(self):
        layer = LayerShape("l", "fc", 1, 1024, 1024, 1, 1, 1, 1, 1, 0)
        m = derive_metrics(layer)
        assert m.mac_count == 1_048_576
        assert m.input_reuse == 1024
        assert m.filter_reuse == 1

    def test_toy_conv_counts(self):
        layer = LayerShape("l", "conv", 1, 1, 1, 4, 4, 3, 3, 1, 0)
        m = derive_metrics(layer)
        assert m.mac_count == 36 == brute_force_macs(layer)
        assert m.input_words == 16
        assert m.input_reuse == 2.25

    def test_single_word_volume(self):
        layer = LayerShape("l", "fc", 1, 1, 1, 1, 1, 1, 1, 1, 0)
        assert derive_metrics(layer).layer_volume == 3

    def test_pure_function(self):
        layer = LayerShape("l", "conv", 2, 3, 4, 8, 8, 3, 3, 1, 1)
        assert derive_metrics(layer) == derive_metrics(layer)

    @given(b=st.integers(1, 3), ic=st.integers(1, 4), oc=st.integers(1, 4),
           hw=st.integers(3, 7), f=st.integers(1, 3), stride=st.integers(1, 2),
           pad=st.integers(0, 1))
    @settings(max_examples=60, deadline=None)
    def test_mac_count_matches_loop_nest(self, b, ic, oc, hw, f, stride, pad):
        if hw + 2 * pad < f:
            return
        layer = LayerShape("l", "conv", b, ic, oc, hw, hw, f, f, stride, pad)
        m = derive_metrics(layer)
        assert m.mac_count == brute_force_macs(layer)
        assert m.filter_reuse >= 1
        if stride == 1 and pad == 0:  # every input word participates
            assert m.input_reuse >= 1

    @given(b=st.integers(1, 16), ic=st.integers(1, 64), oc=st.integers(1, 64))
    @settings(max_examples=40, deadline=None)
    def test_fc_filter_reuse_is_batch(self, b, ic, oc):
        layer = LayerShape("l", "fc", b, ic, oc, 1, 1, 1, 1, 1, 0)
        assert derive_metrics(layer).filter_reuse == b


class TestLayerShape:
    def test_fc_must_have_unit_spatial(self):
        with pytest.raises(WorkloadError):
            LayerShape("l", "fc", 1, 4, 4, 2, 2, 1, 1, 1, 0)

    def test_bad_kind(self):
        with pytest.raises(WorkloadError):
            LayerShape("l", "pool", 1, 1, 1, 1, 1, 1, 1, 1, 0)

    def test_batched(self):
        layer = LayerShape("l", "fc", 2, 4, 4, 1, 1, 1, 1, 1, 0)
        assert layer.batched(4).b == 8


class TestParseWorkload:
    def test_mobilenet_first_layer(self):
        layers = parse_workload("mn_l1,conv,1,3,32,224,224,3,3,2,1")
        assert layers == [LayerShape("mn_l1", "conv", 1, 3, 32, 224, 224, 3, 3, 2, 1)]

    def test_zero_stride_rejected(self):
        with pytest.raises(WorkloadError, match="line 1"):
            parse_workload("x,conv,1,1,1,4,4,3,3,0,0")

    def test_empty_file(self):
        assert parse_workload("") == []

    def test_comments_and_blanks(self):
        out = parse_workload("# header\n\nl1,fc,1,2,3,,,,,,\n")
        assert len(out) == 1 and out[0].ic == 2

    def test_fc_blank_fields_defaulted(self):
        (layer,) = parse_workload("l1,fc,2,8,16,,,,,,")
        assert (layer.h, layer.w, layer.fh, layer.fw, layer.stride, layer.pad) == (1, 1, 1, 1, 1, 0)

    def test_duplicate_names_rejected(self):
        with pytest.raises(WorkloadError, match="duplicate"):
            parse_workload("a,fc,1,1,1,,,,,,\na,fc,1,2,2,,,,,,")

    def test_unknown_kind_rejected(self):
        with pytest.raises(WorkloadError, match="kind"):
            parse_workload("a,relu,1,1,1,,,,,,")

    def test_order_preserved(self):
        out = parse_workload("b,fc,1,1,1,,,,,,\na,fc,1,1,1,,,,,,")
        assert [l.name for l in out] == ["b", "a"]


class TestBundles:
    @pytest.mark.parametrize("name,kind", [("mobilenet", "conv"), ("resnet", "conv"),
                                           ("bert", "fc"), ("dlrm", "fc")])
    def test_bundle_loads(self, name, kind):
        layers = load_workload(name)
        assert layers, name
        assert all(l.kind == kind for l in layers)
        for l in layers:
            m = derive_metrics(l)
            assert m.input_reuse >= 1 and m.filter_reuse >= 1

    def test_unique_shapes(self):
        for name in ("mobilenet", "resnet", "bert", "dlrm"):
            layers = load_workload(name)
            shapes = {(l.kind, l.b, l.ic, l.oc, l.h, l.w, l.fh, l.fw, l.stride, l.pad)
                      for l in layers}
            assert len(shapes) == len(layers)

    def test_missing_file(self):
        with pytest.raises(WorkloadError):
            load_workload("/does/not/exist.csv")
