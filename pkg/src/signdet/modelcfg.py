"""Model configuration files: parse the ``[from, number, module, args]`` row
syntax, apply depth/width multiples, and estimate per-variant parameter
counts.

A model file is YAML with keys ``nc``, ``depth_multiple``,
``width_multiple``, ``anchors`` (one list of w,h values per stride, small to
large), ``backbone`` and ``head`` (lists of rows). Layers are indexed
globally across backbone then head; ``from`` entries refer to earlier layers
by absolute index or negative offset, with -1 meaning the previous layer and
the network input sitting at index -1 before the first layer.

Parameter totals are self-consistent estimates from documented per-module
formulas — a complexity axis for comparing variants, not a claim about any
trained network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Sequence

import yaml

from .datasetops import ANCHOR_STRIDES, AnchorGroup, AnchorSet

KNOWN_MODULES = ("Conv", "Focus", "BottleneckCSP", "SPP", "Upsample", "Concat", "Detect")


class ModelSpecError(ValueError):
    """A model file failed structural validation."""


@dataclass(frozen=True)
class Variant:
    name: str
    depth_multiple: float
    width_multiple: float

    def __post_init__(self):
        for label, value in (("depth_multiple", self.depth_multiple), ("width_multiple", self.width_multiple)):
            if not 0.0 < value <= 1.5:
                raise ValueError(f"{label} outside (0, 1.5]: {value}")


VARIANTS = {
    "small": Variant("small", 0.33, 0.50),
    "medium": Variant("medium", 0.67, 0.75),
    "large": Variant("large", 1.0, 1.0),
}


@dataclass(frozen=True)
class Layer:
    sources: tuple[int, ...]
    repeats: int
    module: str
    args: tuple

    def resolved_sources(self, index: int) -> tuple[int, ...]:
        """Absolute indices of this layer's inputs (-1 = network input)."""
        return tuple(source if source >= 0 else index + source for source in self.sources)


@dataclass(frozen=True)
class ModelSpec:
    nc: int
    depth_multiple: float
    width_multiple: float
    anchors: AnchorSet
    backbone: tuple[Layer, ...]
    head: tuple[Layer, ...]

    @property
    def layers(self) -> tuple[Layer, ...]:
        return self.backbone + self.head

    @property
    def anchors_per_stride(self) -> int:
        return len(self.anchors.groups[0].pairs)


def _parse_row(row, index: int) -> Layer:
    if not isinstance(row, list) or len(row) != 4:
        raise ModelSpecError(f"layer {index}: expected [from, number, module, args], got {row!r}")
    raw_from, number, module, args = row
    if isinstance(raw_from, int) and not isinstance(raw_from, bool):
        sources = (raw_from,)
    elif isinstance(raw_from, list) and raw_from and all(
        isinstance(s, int) and not isinstance(s, bool) for s in raw_from
    ):
        sources = tuple(raw_from)
    else:
        raise ModelSpecError(f"layer {index}: 'from' must be an index or list of indices, got {raw_from!r}")
    if not isinstance(number, int) or isinstance(number, bool) or number < 1:
        raise ModelSpecError(f"layer {index}: repeat count must be a positive integer, got {number!r}")
    if not isinstance(module, str):
        raise ModelSpecError(f"layer {index}: module must be a name token, got {module!r}")
    if not isinstance(args, list):
        raise ModelSpecError(f"layer {index}: args must be a list, got {args!r}")
    for source in sources:
        resolved = source if source >= 0 else index + source
        if not -1 <= resolved < index:
            raise ModelSpecError(
                f"layer {index}: 'from' {source} resolves to {resolved}, outside [-1, {index})"
            )
    return Layer(sources, number, module, tuple(args))


def _parse_anchors(raw) -> AnchorSet:
    if not isinstance(raw, list) or len(raw) != len(ANCHOR_STRIDES):
        raise ModelSpecError(f"anchors must be {len(ANCHOR_STRIDES)} per-stride lists")
    groups = []
    for stride, flat in zip(ANCHOR_STRIDES, raw):
        if not isinstance(flat, list) or len(flat) < 2 or len(flat) % 2:
            raise ModelSpecError(f"stride {stride}: anchors must be an even-length list of w,h values")
        pairs = tuple((float(w), float(h)) for w, h in zip(flat[::2], flat[1::2]))
        groups.append(AnchorGroup(stride, pairs))
    return AnchorSet(tuple(groups), (640, 640))


def parse_model_spec(text: str) -> ModelSpec:
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ModelSpecError("model file must be a mapping")
    missing = [key for key in ("nc", "depth_multiple", "width_multiple", "anchors", "backbone", "head") if key not in data]
    if missing:
        raise ModelSpecError(f"missing keys: {missing}")
    nc = data["nc"]
    if not isinstance(nc, int) or isinstance(nc, bool) or nc < 1:
        raise ModelSpecError(f"nc must be a positive integer, got {nc!r}")

    backbone_rows = data["backbone"]
    head_rows = data["head"]
    if not isinstance(backbone_rows, list) or not isinstance(head_rows, list):
        raise ModelSpecError("backbone and head must be lists of rows")
    layers = []
    for index, row in enumerate([*backbone_rows, *head_rows]):
        layers.append(_parse_row(row, index))
    return ModelSpec(
        nc=nc,
        depth_multiple=float(data["depth_multiple"]),
        width_multiple=float(data["width_multiple"]),
        anchors=_parse_anchors(data["anchors"]),
        backbone=tuple(layers[: len(backbone_rows)]),
        head=tuple(layers[len(backbone_rows) :]),
    )


def _plain_number(value: float):
    return int(value) if float(value).is_integer() else float(value)


def emit_model_spec(spec: ModelSpec) -> str:
    def row_of(layer: Layer) -> list:
        source = layer.sources[0] if len(layer.sources) == 1 else list(layer.sources)
        return [source, layer.repeats, layer.module, list(layer.args)]

    data = {
        "nc": spec.nc,
        "depth_multiple": _plain_number(spec.depth_multiple),
        "width_multiple": _plain_number(spec.width_multiple),
        "anchors": [
            [_plain_number(value) for pair in group.pairs for value in pair] for group in spec.anchors.groups
        ],
        "backbone": [row_of(layer) for layer in spec.backbone],
        "head": [row_of(layer) for layer in spec.head],
    }
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None)


def load_model_spec(path: str | Path) -> ModelSpec:
    return parse_model_spec(Path(path).read_text(encoding="utf-8"))


def reference_spec() -> ModelSpec:
    """The bundled backbone+head fixture covering every known module."""
    text = resources.files("signdet.data").joinpath("reference_model.yaml").read_text(encoding="utf-8")
    return parse_model_spec(text)


def scale_depth(n: int, depth_multiple: float) -> int:
    """Scaled repeat count: max(round(n × depth_multiple), 1)."""
    if n < 1:
        raise ValueError(f"repeat count must be >= 1, got {n}")
    return max(round(n * depth_multiple), 1)


def scale_width(channels: int, width_multiple: float, divisor: int = 8) -> int:
    """Channel count scaled and rounded up to a multiple of ``divisor``."""
    if channels < 1:
        raise ValueError(f"channels must be >= 1, got {channels}")
    if divisor < 1:
        raise ValueError(f"divisor must be >= 1, got {divisor}")
    return math.ceil(Fraction(width_multiple) * channels / divisor) * divisor


def _conv_params(c_in: int, c_out: int, kernel: int) -> int:
    return kernel * kernel * c_in * c_out + c_out


@dataclass(frozen=True)
class LayerEstimate:
    index: int
    module: str
    repeats: int
    channels_out: int
    params: int


@dataclass(frozen=True)
class ParamReport:
    variant: Variant
    layers: tuple[LayerEstimate, ...]
    coverage_notes: tuple[str, ...]

    @property
    def total(self) -> int:
        return sum(layer.params for layer in self.layers)


def estimate_params(spec: ModelSpec, variant: Variant) -> ParamReport:
    """Per-layer parameter estimate after applying the variant's multiples.

    Per-module accounting (k×k convolution = k²·c_in·c_out + c_out bias):
    Conv counts one convolution; Focus counts one on 4·c_in channels (2×2
    space-to-depth); BottleneckCSP counts three 1×1 projections around n
    inner bottlenecks (1×1 + 3×3 at half width), where the row's repeat
    count is the inner n; SPP counts its two projections with a 1×1 over
    (pools+1)·c_in/2; Detect counts one 1×1 output conv per source. Upsample
    and Concat carry no parameters. Unknown modules count 0, pass their
    input channels through, and are listed in ``coverage_notes``.
    """
    wm = variant.width_multiple
    dm = variant.depth_multiple
    estimates: list[LayerEstimate] = []
    notes: list[str] = []
    channels: list[int] = []  # channels[i] = output channels of layer i

    def channels_of(source: int) -> int:
        return 3 if source == -1 else channels[source]

    for index, layer in enumerate(spec.layers):
        sources = layer.resolved_sources(index)
        c_in = channels_of(sources[0])
        repeats = scale_depth(layer.repeats, dm)
        module = layer.module

        if module == "Conv":
            c_out = scale_width(int(layer.args[0]), wm)
            kernel = int(layer.args[1]) if len(layer.args) > 1 else 1
            params = repeats * _conv_params(c_in, c_out, kernel)
        elif module == "Focus":
            c_out = scale_width(int(layer.args[0]), wm)
            kernel = int(layer.args[1]) if len(layer.args) > 1 else 1
            params = _conv_params(4 * c_in, c_out, kernel)
        elif module == "BottleneckCSP":
            c_out = scale_width(int(layer.args[0]), wm)
            hidden = c_out // 2
            projections = (
                _conv_params(c_in, hidden, 1)
                + _conv_params(c_in, hidden, 1)
                + _conv_params(2 * hidden, c_out, 1)
            )
            inner = repeats * (_conv_params(hidden, hidden, 1) + _conv_params(hidden, hidden, 3))
            params = projections + inner
        elif module == "SPP":
            c_out = scale_width(int(layer.args[0]), wm)
            pools = layer.args[1] if len(layer.args) > 1 else [5, 9, 13]
            hidden = c_in // 2
            params = _conv_params(c_in, hidden, 1) + _conv_params(hidden * (len(pools) + 1), c_out, 1)
        elif module == "Upsample":
            c_out = c_in
            params = 0
        elif module == "Concat":
            c_out = sum(channels_of(source) for source in sources)
            params = 0
        elif module == "Detect":
            per_anchor = spec.anchors_per_stride * (spec.nc + 5)
            params = sum(_conv_params(channels_of(source), per_anchor, 1) for source in sources)
            c_out = per_anchor
        else:
            c_out = c_in
            params = 0
            notes.append(f"{module}: unknown module, counted as 0 parameters")

        channels.append(c_out)
        estimates.append(LayerEstimate(index, module, repeats, c_out, params))

    return ParamReport(variant, tuple(estimates), tuple(notes))


@dataclass(frozen=True)
class RankRow:
    variant: str
    epochs: int
    map50: float
    params: int


RANK_POLICIES = ("max_map", "efficiency")


def rank_variants(
    rows: Sequence[RankRow],
    policy: str = "max_map",
    *,
    param_budget: int | None = None,
) -> list[RankRow]:
    """Order variant/epoch rows by detection quality.

    ``max_map`` sorts every row by mAP descending; ``efficiency`` first
    drops rows over ``param_budget`` then sorts the rest the same way. Ties
    break deterministically: fewer parameters, then fewer epochs.
    """
    if policy not in RANK_POLICIES:
        raise ValueError(f"policy must be one of {RANK_POLICIES}")
    candidates = list(rows)
    if policy == "efficiency":
        if param_budget is None:
            raise ValueError("efficiency policy requires param_budget")
        candidates = [row for row in candidates if row.params <= param_budget]
    return sorted(candidates, key=lambda row: (-row.map50, row.params, row.epochs))
