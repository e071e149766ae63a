"""Spiking dense / convolution / max-pool layers and their ReLU counterparts.

Spike data travels between layers as uint8 rasters whose last axis is
time. A :class:`SpikeVolume` wraps an ``(H, W, C, T)`` raster; dense layers
take ``(n, T)`` rasters or lists of :class:`SpikeTrain`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coding import SpikeTrain, charge_matrix, decode_raster
from .errors import DomainError, GridMismatchError, ShapeError
from .neuron import NeuronParams, simulate


def _neuron_list(neuron, n):
    if isinstance(neuron, NeuronParams):
        return [neuron] * n
    neuron = list(neuron)
    if len(neuron) != n:
        raise ShapeError(f"{len(neuron)} neuron parameter sets for {n} units")
    return neuron


@dataclass
class DenseLayerSpec:
    weights: np.ndarray
    neuron: object = NeuronParams()

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ShapeError("dense weights must be (out_dim, in_dim)")

    @property
    def out_dim(self):
        return self.weights.shape[0]

    @property
    def in_dim(self):
        return self.weights.shape[1]


@dataclass
class ConvLayerSpec:
    kernel: np.ndarray
    stride: int = 1
    padding: int = 0
    neuron: object = NeuronParams()

    def __post_init__(self):
        self.kernel = np.asarray(self.kernel, dtype=np.float64)
        if self.kernel.ndim != 4:
            raise ShapeError("conv kernel must be (n_H, n_W, n_C, n_filters)")
        if self.stride < 1 or self.padding < 0:
            raise ShapeError("stride must be >= 1 and padding >= 0")

    @property
    def n_filters(self):
        return self.kernel.shape[3]

    def output_shape(self, in_shape):
        h, w, c = in_shape
        kh, kw, kc, nf = self.kernel.shape
        if kc != c:
            raise ShapeError(f"kernel has {kc} channels, input has {c}")
        hp, wp = h + 2 * self.padding, w + 2 * self.padding
        if kh > hp or kw > wp:
            raise ShapeError(f"kernel {kh}x{kw} larger than padded input {hp}x{wp}")
        return ((hp - kh) // self.stride + 1, (wp - kw) // self.stride + 1, nf)


@dataclass
class PoolLayerSpec:
    window: tuple = (2, 2)
    stride: int | None = None

    def __post_init__(self):
        self.window = tuple(int(v) for v in self.window)
        if len(self.window) != 2 or min(self.window) < 1:
            raise ShapeError("pool window must be two dims >= 1")
        if self.stride is None:
            self.stride = self.window[0]
        if self.stride < 1:
            raise ShapeError("pool stride must be >= 1")

    def output_shape(self, in_shape):
        h, w, c = in_shape
        ph, pw = self.window
        if ph > h or pw > w:
            raise ShapeError(f"pool window {ph}x{pw} larger than input {h}x{w}")
        return ((h - ph) // self.stride + 1, (w - pw) // self.stride + 1, c)


@dataclass(frozen=True)
class SpikeVolume:
    spikes: np.ndarray  # (H, W, C, T) uint8
    dt: float

    def __post_init__(self):
        if np.ndim(self.spikes) != 4:
            raise ShapeError("spike volume raster must be (H, W, C, T)")

    @property
    def shape(self):
        return self.spikes.shape[:3]

    @property
    def n_steps(self):
        return self.spikes.shape[3]

    def train(self, h, w, c):
        return SpikeTrain.from_raster(self.spikes[h, w, c], self.dt)

    def counts(self):
        return self.spikes.sum(axis=-1, dtype=np.int64)

    def rates(self):
        return decode_raster(self.spikes, self.dt)

    @classmethod
    def from_trains(cls, trains):
        """Build from a nested ``[H][W][C]`` list of trains on one grid."""
        arr = np.asarray(trains, dtype=object)
        if arr.ndim != 3:
            raise ShapeError("trains must be nested as [H][W][C]")
        first = arr.flat[0]
        raster = np.zeros(arr.shape + (first.n_steps,), dtype=np.uint8)
        for idx, tr in np.ndenumerate(arr):
            if not first.same_grid(tr):
                raise GridMismatchError("all trains in a volume must share a grid")
            raster[idx + (slice(None),)] = tr.to_raster()
        return cls(raster, first.dt)


def _as_raster(inputs):
    if isinstance(inputs, np.ndarray):
        return inputs, None
    trains = list(inputs)
    if not trains:
        raise ShapeError("no input trains")
    ref = trains[0]
    for tr in trains[1:]:
        if not ref.same_grid(tr):
            raise GridMismatchError("all input trains must share dt and n_steps")
    return np.stack([tr.to_raster() for tr in trains]), ref.dt


def dense_raster(raster, spec: DenseLayerSpec, dt: float) -> np.ndarray:
    """``(n_in, T)`` or ``(B, n_in, T)`` raster -> output raster of the same rank."""
    raster = np.asarray(raster)
    batched = raster.ndim == 3
    rb = raster if batched else raster[None]
    if rb.shape[1] != spec.in_dim:
        raise ShapeError(f"dense layer expects {spec.in_dim} inputs, got {rb.shape[1]}")
    q = np.concatenate([charge_matrix(spec.weights, r) for r in rb])
    neurons = _neuron_list(spec.neuron, spec.out_dim) * len(rb)
    spikes, _, _ = simulate(q, neurons, dt)
    spikes = spikes.reshape(len(rb), spec.out_dim, -1)
    return spikes if batched else spikes[0]


def dense_forward(inputs, spec: DenseLayerSpec, dt: float | None = None):
    """Spiking fully connected layer.

    ``inputs`` is a list of :class:`SpikeTrain` (returns a list of trains) or
    an ``(n_in, T)`` raster together with ``dt`` (returns a raster).
    """
    raster, grid_dt = _as_raster(inputs)
    if grid_dt is None:
        if dt is None:
            raise DomainError("dt is required for raster input")
        return dense_raster(raster, spec, dt)
    out = dense_raster(raster, spec, grid_dt)
    return [SpikeTrain.from_raster(row, grid_dt) for row in out]


def conv_charges(raster, kernel, stride, padding):
    """Per-step input charge of every conv output neuron.

    ``raster`` is ``(H, W, C, T)``; returns ``(Ho, Wo, F, T)`` float64.
    Kernel taps are accumulated in row-major ``(i, j, k)`` order so that a
    full-input kernel reproduces the dense layer bit for bit.
    """
    h, w, c, t = raster.shape
    kh, kw, kc, nf = kernel.shape
    padded = np.zeros((h + 2 * padding, w + 2 * padding, c, t), dtype=np.uint8)
    padded[padding:padding + h, padding:padding + w] = raster
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (w + 2 * padding - kw) // stride + 1
    acc = np.zeros((ho, wo, nf, t), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            for k in range(kc):
                patch = padded[i:i + stride * (ho - 1) + 1:stride,
                               j:j + stride * (wo - 1) + 1:stride, k, :]
                hit = patch.astype(bool)
                if not hit.any():
                    continue
                for f in range(nf):
                    acc[:, :, f, :][hit] += kernel[i, j, k, f]
    return acc


def conv_raster(raster, spec: ConvLayerSpec, dt: float) -> np.ndarray:
    raster = np.asarray(raster)
    batched = raster.ndim == 5
    rb = raster if batched else raster[None]
    out_shape = spec.output_shape(rb.shape[1:4])
    neurons = _neuron_list(spec.neuron, spec.n_filters)
    ho, wo, nf = out_shape
    per_item = [neurons[f] for _ in range(ho * wo) for f in range(nf)]
    q = np.concatenate([
        conv_charges(r, spec.kernel, spec.stride, spec.padding).reshape(-1, r.shape[-1])
        for r in rb])
    spikes, _, _ = simulate(q, per_item * len(rb), dt)
    spikes = spikes.reshape((len(rb),) + out_shape + (rb.shape[-1],))
    return spikes if batched else spikes[0]


def conv_forward(volume: SpikeVolume, spec: ConvLayerSpec) -> SpikeVolume:
    return SpikeVolume(conv_raster(volume.spikes, spec, volume.dt), volume.dt)


def maxpool_select(counts, spec: PoolLayerSpec):
    """Winner index (row-major within the window) for every output cell.

    ``counts`` is ``(..., H, W, C)``; ties go to the first member.
    """
    counts = np.asarray(counts)
    h, w, c = counts.shape[-3:]
    ho, wo, _ = spec.output_shape((h, w, c))
    ph, pw = spec.window
    s = spec.stride
    members = np.stack([
        counts[..., i:i + s * (ho - 1) + 1:s, j:j + s * (wo - 1) + 1:s, :]
        for i in range(ph) for j in range(pw)], axis=-1)
    return np.argmax(members, axis=-1)


def maxpool_raster(raster, spec: PoolLayerSpec) -> np.ndarray:
    """Copy, per window and channel, the member train with the largest count."""
    raster = np.asarray(raster)
    counts = raster.sum(axis=-1, dtype=np.int64)
    winner = maxpool_select(counts, spec)
    pw = spec.window[1]
    s = spec.stride
    ho, wo, c = winner.shape[-3:]
    oi = np.arange(ho)[:, None, None] * s
    oj = np.arange(wo)[None, :, None] * s
    ch = np.arange(c)[None, None, :]
    src_i = oi + winner // pw
    src_j = oj + winner % pw
    if raster.ndim == 5:
        b = np.arange(raster.shape[0])[:, None, None, None]
        return raster[b, src_i, src_j, ch]
    return raster[src_i, src_j, ch]


def maxpool_forward(volume: SpikeVolume, spec: PoolLayerSpec) -> SpikeVolume:
    return SpikeVolume(maxpool_raster(volume.spikes, spec), volume.dt)


# --- rate-domain references -------------------------------------------------

def _bias_vec(bias, n):
    if bias is None:
        return np.zeros(n)
    b = np.broadcast_to(np.asarray(bias, dtype=np.float64), (n,))
    return b


def ann_dense(x, weights, bias=None, slope=1.0):
    weights = np.asarray(weights, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != weights.shape[1]:
        raise ShapeError(f"dense layer expects {weights.shape[1]} inputs, got {x.shape[-1]}")
    return slope * np.maximum(0.0, x @ weights.T + _bias_vec(bias, weights.shape[0]))


def ann_conv(x, kernel, stride=1, padding=0, bias=None, slope=1.0):
    """Cross-correlation + bias + ReLU on an ``(H, W, C)`` (or batched) array."""
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    batched = x.ndim == 4
    xb = x if batched else x[None]
    spec = ConvLayerSpec(kernel, stride, padding)
    ho, wo, nf = spec.output_shape(xb.shape[1:])
    kh, kw, _, _ = kernel.shape
    pad = np.pad(xb, ((0, 0), (padding, padding), (padding, padding), (0, 0)))
    out = np.zeros((len(xb), ho, wo, nf))
    for i in range(kh):
        for j in range(kw):
            patch = pad[:, i:i + stride * (ho - 1) + 1:stride, j:j + stride * (wo - 1) + 1:stride, :]
            out += patch @ kernel[i, j]
    out = slope * np.maximum(0.0, out + _bias_vec(bias, nf))
    return out if batched else out[0]


def ann_maxpool(x, spec: PoolLayerSpec):
    x = np.asarray(x, dtype=np.float64)
    h, w, c = x.shape[-3:]
    ho, wo, _ = spec.output_shape((h, w, c))
    ph, pw = spec.window
    s = spec.stride
    members = np.stack([
        x[..., i:i + s * (ho - 1) + 1:s, j:j + s * (wo - 1) + 1:s, :]
        for i in range(ph) for j in range(pw)], axis=-1)
    return members.max(axis=-1)
