"""Feed-forward network description, ANN -> SNN conversion and simulation.

A :class:`NetworkSpec` is an ordered list of layers (``Dense``, ``Conv``,
``MaxPool``, ``Flatten``) over a fixed input shape. In ANN mode the weighted
layers carry a ReLU bias and slope; in SNN mode they carry LIF neuron
parameters (one set per layer, or per unit / filter). Weights are the same
arrays in both modes.
"""

from __future__ import annotations

import copy
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import layers as L
from .coding import CodingConfig, encode_raster
from .errors import ConversionError, DomainError, LifmapError, ShapeError
from .mapping import ReluParams, params_from_relu
from .neuron import NeuronParams, ResetMode
from .weights import load_weights

log = logging.getLogger(__name__)

SPEC_VERSION = 1


@dataclass
class Dense:
    name: str
    units: int
    weights: np.ndarray | None = None
    bias: np.ndarray | None = None
    slope: float = 1.0
    neuron: object = None

    kind = "dense"


@dataclass
class Conv:
    name: str
    filters: int
    kernel_size: tuple = (3, 3)
    stride: int = 1
    padding: int = 0
    weights: np.ndarray | None = None
    bias: np.ndarray | None = None
    slope: float = 1.0
    neuron: object = None

    kind = "conv"


@dataclass
class MaxPool:
    name: str = "pool"
    window: tuple = (2, 2)
    stride: int | None = None

    kind = "maxpool"

    def spec(self):
        return L.PoolLayerSpec(self.window, self.stride)


@dataclass
class Flatten:
    name: str = "flatten"

    kind = "flatten"


@dataclass
class SimConfig:
    dt: float = 0.01
    t_window: float = 3.0
    range_scale: float = 10.0
    seed: int = 0
    strict: bool = False
    batch_size: int = 16

    @property
    def coding(self):
        return CodingConfig(self.dt, self.t_window, self.range_scale)


@dataclass
class RunResult:
    """Outputs of a (possibly batched) forward pass.

    ``layer_outputs[i]`` holds decoded rates (SNN) or activations (ANN) of
    layer ``i`` with a leading batch axis.
    """

    layer_outputs: list
    labels: np.ndarray
    output_counts: np.ndarray | None = None
    batched: bool = True

    @property
    def label(self):
        return int(self.labels[0]) if not self.batched else self.labels

    @property
    def output(self):
        return self.layer_outputs[-1]


@dataclass
class NetworkSpec:
    input_shape: tuple
    layers: list = field(default_factory=list)
    mode: str = "ann"

    def __post_init__(self):
        self.input_shape = tuple(int(s) for s in self.input_shape)
        if self.mode not in ("ann", "snn"):
            raise DomainError(f"mode must be 'ann' or 'snn', got {self.mode!r}")

    def shapes(self):
        """Output shape of every layer; raises :class:`ShapeError` if they do not compose."""
        shape = self.input_shape
        out = []
        for layer in self.layers:
            if isinstance(layer, Dense):
                if len(shape) != 1:
                    raise ShapeError(f"{layer.name}: dense layer needs 1-D input, got {shape}")
                if layer.weights is not None and layer.weights.shape != (layer.units, shape[0]):
                    raise ShapeError(
                        f"{layer.name}: weights {layer.weights.shape} != {(layer.units, shape[0])}")
                shape = (layer.units,)
            elif isinstance(layer, Conv):
                if len(shape) != 3:
                    raise ShapeError(f"{layer.name}: conv layer needs (H, W, C) input, got {shape}")
                kshape = tuple(layer.kernel_size) + (shape[2], layer.filters)
                if layer.weights is not None and layer.weights.shape != kshape:
                    raise ShapeError(f"{layer.name}: kernel {layer.weights.shape} != {kshape}")
                spec = L.ConvLayerSpec(np.zeros(kshape), layer.stride, layer.padding)
                shape = spec.output_shape(shape)
            elif isinstance(layer, MaxPool):
                if len(shape) != 3:
                    raise ShapeError(f"{layer.name}: pooling needs (H, W, C) input, got {shape}")
                shape = layer.spec().output_shape(shape)
            elif isinstance(layer, Flatten):
                shape = (math.prod(shape),)
            else:
                raise ShapeError(f"unsupported layer {layer!r}")
            out.append(shape)
        return out

    @property
    def output_shape(self):
        return self.shapes()[-1] if self.layers else self.input_shape

    def weighted_layers(self):
        return [ly for ly in self.layers if isinstance(ly, (Dense, Conv))]

    def bind(self, bundle):
        """Attach weights from a :class:`WeightsBundle`, by layer name."""
        shape = self.input_shape
        for layer, out_shape in zip(self.layers, self.shapes()):
            if isinstance(layer, Dense):
                layer.weights = np.asarray(bundle.bind(layer.name, (layer.units, shape[0])),
                                           dtype=np.float64)
            elif isinstance(layer, Conv):
                kshape = tuple(layer.kernel_size) + (shape[2], layer.filters)
                layer.weights = np.asarray(bundle.bind(layer.name, kshape), dtype=np.float64)
            shape = out_shape
        return self

    def check_bound(self):
        for layer in self.weighted_layers():
            if layer.weights is None:
                raise LifmapError(f"layer {layer.name!r} has no weights bound")

    # --- JSON ---------------------------------------------------------------

    def to_dict(self, weights_manifest=None):
        doc = {"format_version": SPEC_VERSION, "mode": self.mode,
               "input_shape": list(self.input_shape), "layers": []}
        if weights_manifest is not None:
            doc["weights_manifest"] = str(weights_manifest)
        for layer in self.layers:
            d = {"kind": layer.kind, "name": layer.name}
            if isinstance(layer, (Dense, Conv)):
                if isinstance(layer, Dense):
                    d["units"] = layer.units
                else:
                    d.update(filters=layer.filters, kernel_size=list(layer.kernel_size),
                             stride=layer.stride, padding=layer.padding)
                if self.mode == "ann":
                    d["bias"] = None if layer.bias is None else np.asarray(layer.bias).tolist()
                    d["slope"] = layer.slope
                else:
                    d["neuron"] = _neuron_to_json(layer.neuron)
            elif isinstance(layer, MaxPool):
                d.update(window=list(layer.window), stride=layer.stride)
            doc["layers"].append(d)
        return doc

    @classmethod
    def from_dict(cls, doc):
        if doc.get("format_version", SPEC_VERSION) != SPEC_VERSION:
            raise LifmapError(f"unsupported network spec version {doc.get('format_version')!r}")
        mode = doc.get("mode", "ann")
        layers = []
        for d in doc["layers"]:
            kind = d["kind"].lower()
            name = d.get("name", kind)
            if kind == "dense":
                layers.append(Dense(name, int(d["units"]),
                                    bias=_opt_array(d.get("bias")), slope=float(d.get("slope", 1.0)),
                                    neuron=_neuron_from_json(d.get("neuron"))))
            elif kind == "conv":
                layers.append(Conv(name, int(d["filters"]), tuple(d.get("kernel_size", (3, 3))),
                                   int(d.get("stride", 1)), int(d.get("padding", 0)),
                                   bias=_opt_array(d.get("bias")), slope=float(d.get("slope", 1.0)),
                                   neuron=_neuron_from_json(d.get("neuron"))))
            elif kind == "maxpool":
                layers.append(MaxPool(name, tuple(d.get("window", (2, 2))), d.get("stride")))
            elif kind == "flatten":
                layers.append(Flatten(name))
            elif kind == "softmax":
                log.info("dropping softmax layer %r; labels use argmax of the preceding layer", name)
            else:
                raise ShapeError(f"unsupported layer kind {kind!r}")
        spec = cls(tuple(doc["input_shape"]), layers, mode)
        spec.shapes()
        return spec

    def save(self, path, weights_manifest=None):
        Path(path).write_text(json.dumps(self.to_dict(weights_manifest), indent=2) + "\n")

    @classmethod
    def load(cls, path, bind_weights=True):
        path = Path(path)
        doc = json.loads(path.read_text())
        spec = cls.from_dict(doc)
        if bind_weights and doc.get("weights_manifest"):
            spec.bind(load_weights(path.parent / doc["weights_manifest"]))
        return spec


def _opt_array(v):
    return None if v is None else np.asarray(v, dtype=np.float64)


def _neuron_to_json(neuron):
    if neuron is None:
        return None
    if isinstance(neuron, NeuronParams):
        return neuron.to_dict()
    neuron = list(neuron)
    d = {"reset_mode": neuron[0].reset_mode.value}
    for key in ("c_m", "g_l", "v_th"):
        vals = [getattr(p, key) for p in neuron]
        d[key] = vals[0] if all(v == vals[0] for v in vals) else vals
    return d


def _neuron_from_json(d):
    if d is None:
        return None
    lists = {k: d[k] for k in ("c_m", "g_l", "v_th") if isinstance(d.get(k), list)}
    if not lists:
        return NeuronParams.from_dict(d)
    n = len(next(iter(lists.values())))
    out = []
    for i in range(n):
        di = dict(d)
        for k, v in lists.items():
            di[k] = v[i]
        out.append(NeuronParams.from_dict(di))
    return out


# --- conversion -------------------------------------------------------------

def _fan_in_sums(layer):
    w = layer.weights
    if isinstance(layer, Dense):
        return w.sum(axis=1)
    return w.sum(axis=(0, 1, 2))


def convert(ann: NetworkSpec, mode="zero_bias", g_l=0.0, v_th=1.0,
            reset_mode=ResetMode.LINEAR, drop_bias=False) -> NetworkSpec:
    """Map a ReLU network onto linear LIF neurons.

    ``zero_bias``: every neuron gets ``c_m = 1/(k*v_th)`` and the constant
    leak ``g_l``; non-zero biases are refused unless ``drop_bias``.
    ``bias_to_conductance``: each unit / filter gets its own ``g_l`` from the
    inverse bias mapping, using the sum of its incoming weights.
    """
    if ann.mode != "ann":
        raise DomainError("convert() expects an ANN-mode network")
    if mode not in ("zero_bias", "bias_to_conductance"):
        raise DomainError(f"unknown conversion mode {mode!r}")
    ann.check_bound()
    ann.shapes()
    snn = copy.deepcopy(ann)
    snn.mode = "snn"
    offenders = []
    for layer in snn.weighted_layers():
        n_units = layer.units if isinstance(layer, Dense) else layer.filters
        bias = np.zeros(n_units) if layer.bias is None else np.broadcast_to(layer.bias, (n_units,))
        c_m = 1.0 / (layer.slope * v_th)
        if mode == "zero_bias":
            if np.any(bias != 0) and not drop_bias:
                offenders += [(layer.name, int(i), "non-zero bias") for i in np.flatnonzero(bias)]
                continue
            layer.neuron = NeuronParams(c_m=c_m, g_l=g_l, v_th=v_th, reset_mode=reset_mode)
        else:
            sums = _fan_in_sums(layer)
            neurons = []
            for j in range(n_units):
                try:
                    neurons.append(params_from_relu(
                        ReluParams(bias=float(bias[j]), slope=layer.slope),
                        sum_w=float(sums[j]), v_th=v_th, reset_mode=reset_mode))
                except DomainError as exc:
                    offenders.append((layer.name, j, str(exc)))
            layer.neuron = neurons
        layer.bias = None
    if offenders:
        head = "; ".join(f"{n}[{i}]: {r}" for n, i, r in offenders[:5])
        raise ConversionError(f"{len(offenders)} neuron(s) outside the mapping domain: {head}",
                              offenders)
    return snn


# --- forward passes ---------------------------------------------------------

def _prepare_inputs(spec, inputs, strict):
    x = np.asarray(inputs, dtype=np.float64)
    batched = x.shape != spec.input_shape
    if batched:
        if x.shape[1:] != spec.input_shape:
            raise ShapeError(f"input shape {x.shape} does not match {spec.input_shape}")
    else:
        x = x[None]
    if np.any(x < 0) or np.any(x > 1) or not np.all(np.isfinite(x)):
        if strict:
            raise DomainError("input values must lie in [0, 1]")
        x = np.clip(np.nan_to_num(x), 0.0, 1.0)
    return x, batched


def _argmax_labels(out):
    flat = out.reshape(len(out), -1)
    return np.argmax(flat, axis=1)  # first maximum wins


def ann_forward(ann: NetworkSpec, inputs, range_scale=10.0, strict=False) -> RunResult:
    """Rate-domain pass: inputs in [0, 1] are scaled to Hz and rectified layer by layer."""
    ann.check_bound()
    ann.shapes()
    x, batched = _prepare_inputs(ann, inputs, strict)
    a = x * range_scale
    outs = []
    for layer in ann.layers:
        if isinstance(layer, Dense):
            a = L.ann_dense(a, layer.weights, layer.bias, layer.slope)
        elif isinstance(layer, Conv):
            a = L.ann_conv(a, layer.weights, layer.stride, layer.padding, layer.bias, layer.slope)
        elif isinstance(layer, MaxPool):
            a = L.ann_maxpool(a, layer.spec())
        elif isinstance(layer, Flatten):
            a = a.reshape(len(a), -1)
        outs.append(a)
    return RunResult(outs, _argmax_labels(outs[-1] if outs else a), None, batched)


def _layer_neuron(layer):
    return layer.neuron if layer.neuron is not None else NeuronParams()


def _snn_chunk(snn, x, cfg):
    n_steps = cfg.coding.n_steps
    raster = encode_raster(x * cfg.range_scale, cfg.dt, n_steps)
    outs = []
    for layer in snn.layers:
        if isinstance(layer, Dense):
            spec = L.DenseLayerSpec(layer.weights, _layer_neuron(layer))
            raster = L.dense_raster(raster, spec, cfg.dt)
        elif isinstance(layer, Conv):
            spec = L.ConvLayerSpec(layer.weights, layer.stride, layer.padding, _layer_neuron(layer))
            raster = L.conv_raster(raster, spec, cfg.dt)
        elif isinstance(layer, MaxPool):
            raster = L.maxpool_raster(raster, layer.spec())
        elif isinstance(layer, Flatten):
            raster = raster.reshape(len(raster), -1, n_steps)
        outs.append(raster.sum(axis=-1, dtype=np.int64))
    return outs


def run_snn(snn: NetworkSpec, inputs, cfg: SimConfig | None = None) -> RunResult:
    """Rate-code the inputs, simulate every layer over the full window, count output spikes.

    The label is the output unit with the most spikes (first one on ties).
    Inputs are processed in chunks of ``cfg.batch_size``; chunking does not
    change any result.
    """
    cfg = cfg or SimConfig()
    if snn.mode != "snn":
        raise DomainError("run_snn() expects an SNN-mode network; use convert() first")
    snn.check_bound()
    snn.shapes()
    x, batched = _prepare_inputs(snn, inputs, cfg.strict)
    chunks = [_snn_chunk(snn, x[i:i + cfg.batch_size], cfg)
              for i in range(0, len(x), max(1, cfg.batch_size))]
    counts = [np.concatenate([c[k] for c in chunks]) for k in range(len(snn.layers))]
    t_window = cfg.dt * cfg.coding.n_steps
    rates = [c / t_window for c in counts]
    final = counts[-1] if counts else np.zeros((len(x),) + snn.input_shape, dtype=np.int64)
    return RunResult(rates, _argmax_labels(final), final, batched)
