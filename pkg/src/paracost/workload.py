"""Layer shapes and the per-layer quantities derived from them.

A layer is a 7-dimensional loop nest (batch, input channels, output
channels, output x/y, filter height/width).  Fully-connected layers are
the degenerate case with unit spatial dims.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources

DIMS = ("B", "Ic", "Oc", "Ox", "Oy", "Fh", "Fw")

#: loop dims whose index selects distinct words of each operand.  Output
#: x/y and filter offsets both move the input window, so all of them are
#: input-relevant.
RELEVANT = {
    "input": frozenset({"B", "Ic", "Ox", "Oy", "Fh", "Fw"}),
    "weight": frozenset({"Oc", "Ic", "Fh", "Fw"}),
    "output": frozenset({"B", "Oc", "Ox", "Oy"}),
}

OPERANDS = ("input", "weight", "output")


class WorkloadError(ValueError):
    """Malformed layer definition or workload file."""


def output_dims(h: int, w: int, fh: int, fw: int, stride: int, pad: int) -> tuple[int, int]:
    """Output width/height of a strided, padded sliding window."""
    ox = (w + 2 * pad - fw) // stride + 1
    oy = (h + 2 * pad - fh) // stride + 1
    if ox < 1 or oy < 1:
        raise WorkloadError(
            f"filter {fh}x{fw} does not fit padded input {h}x{w} (pad={pad}, stride={stride})"
        )
    return ox, oy


@dataclass(frozen=True)
class LayerShape:
    name: str
    kind: str  # "conv" | "fc"
    b: int
    ic: int
    oc: int
    h: int
    w: int
    fh: int
    fw: int
    stride: int
    pad: int

    def __post_init__(self):
        if self.kind not in ("conv", "fc"):
            raise WorkloadError(f"{self.name}: unknown layer kind {self.kind!r}")
        for field in ("b", "ic", "oc", "h", "w", "fh", "fw", "stride"):
            if getattr(self, field) < 1:
                raise WorkloadError(f"{self.name}: {field} must be >= 1")
        if self.pad < 0:
            raise WorkloadError(f"{self.name}: pad must be >= 0")
        if self.kind == "fc":
            if (self.h, self.w, self.fh, self.fw, self.stride, self.pad) != (1, 1, 1, 1, 1, 0):
                raise WorkloadError(f"{self.name}: fc layers must have unit spatial dims")
        output_dims(self.h, self.w, self.fh, self.fw, self.stride, self.pad)

    @property
    def ox(self) -> int:
        return output_dims(self.h, self.w, self.fh, self.fw, self.stride, self.pad)[0]

    @property
    def oy(self) -> int:
        return output_dims(self.h, self.w, self.fh, self.fw, self.stride, self.pad)[1]

    def dims(self) -> dict[str, int]:
        """Loop-nest bounds keyed by dim name."""
        ox, oy = output_dims(self.h, self.w, self.fh, self.fw, self.stride, self.pad)
        return {"B": self.b, "Ic": self.ic, "Oc": self.oc,
                "Ox": ox, "Oy": oy, "Fh": self.fh, "Fw": self.fw}

    def batched(self, k: int) -> "LayerShape":
        """Same layer with the batch dimension multiplied by k."""
        if k < 1:
            raise WorkloadError("batch factor must be >= 1")
        return replace(self, name=self.name, b=self.b * k)


@dataclass(frozen=True)
class LayerMetrics:
    mac_count: int
    input_words: int
    filter_words: int
    output_words: int
    layer_volume: int
    input_reuse: float
    filter_reuse: float


def derive_metrics(layer: LayerShape) -> LayerMetrics:
    """MAC count, operand volumes and reuse potential of one layer.

    Input words are the unpadded tensor; padding contributes zeros that
    are generated, not fetched.  Counts are exact (Python integers).
    """
    d = layer.dims()
    mac = d["B"] * d["Oc"] * d["Ox"] * d["Oy"] * d["Ic"] * d["Fh"] * d["Fw"]
    input_words = layer.b * layer.ic * layer.h * layer.w
    filter_words = layer.oc * layer.ic * layer.fh * layer.fw
    output_words = d["B"] * d["Oc"] * d["Ox"] * d["Oy"]
    return LayerMetrics(
        mac_count=mac,
        input_words=input_words,
        filter_words=filter_words,
        output_words=output_words,
        layer_volume=input_words + filter_words + output_words,
        input_reuse=mac / input_words,
        filter_reuse=mac / filter_words,
    )


_FIELDS = ("name", "kind", "B", "Ic", "Oc", "H", "W", "Fh", "Fw", "stride", "pad")
_FC_DEFAULTS = {"H": 1, "W": 1, "Fh": 1, "Fw": 1, "stride": 1, "pad": 0}


def parse_workload(source: str) -> list[LayerShape]:
    """Parse layer records: one comma-separated line per layer.

    Field order: name,kind,B,Ic,Oc,H,W,Fh,Fw,stride,pad.  Lines starting
    with '#' and blank lines are ignored.  fc records may leave the six
    spatial fields blank.
    """
    layers: list[LayerShape] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) > len(_FIELDS):
            raise WorkloadError(f"line {lineno}: expected at most {len(_FIELDS)} fields")
        if len(parts) < 5:
            raise WorkloadError(f"line {lineno}: expected at least name,kind,B,Ic,Oc")
        record = dict(zip(_FIELDS, parts))
        name, kind = record["name"], record["kind"]
        if not name:
            raise WorkloadError(f"line {lineno}: empty layer name")
        if name in seen:
            raise WorkloadError(f"line {lineno}: duplicate layer name {name!r}")
        if kind not in ("conv", "fc"):
            raise WorkloadError(f"line {lineno}: unknown kind {kind!r}")
        values: dict[str, int] = {}
        for field in _FIELDS[2:]:
            text = record.get(field, "")
            if text == "":
                if kind == "fc" and field in _FC_DEFAULTS:
                    values[field] = _FC_DEFAULTS[field]
                    continue
                raise WorkloadError(f"line {lineno}: missing field {field!r}")
            try:
                values[field] = int(text)
            except ValueError:
                raise WorkloadError(f"line {lineno}: field {field!r} is not an integer: {text!r}") from None
        try:
            layer = LayerShape(
                name=name, kind=kind,
                b=values["B"], ic=values["Ic"], oc=values["Oc"],
                h=values["H"], w=values["W"], fh=values["Fh"], fw=values["Fw"],
                stride=values["stride"], pad=values["pad"],
            )
        except WorkloadError as exc:
            raise WorkloadError(f"line {lineno}: {exc}") from None
        seen.add(name)
        layers.append(layer)
    return layers


BUNDLED = ("mobilenet", "resnet", "bert", "dlrm")


def load_workload(ref: str) -> list[LayerShape]:
    """Load a workload by bundled name or file path."""
    if ref in BUNDLED:
        text = resources.files("paracost.workloads").joinpath(f"{ref}.csv").read_text("utf-8")
        return parse_workload(text)
    try:
        with open(ref, encoding="utf-8") as fh:
            return parse_workload(fh.read())
    except OSError as exc:
        raise WorkloadError(f"cannot read workload {ref!r}: {exc}") from None
