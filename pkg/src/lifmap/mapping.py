"""ReLU reference neuron and its parameter mapping to the linear LIF neuron.

    weight  w  <->  synaptic weight w (identity)
    slope   k  <->  1 / (v_th * c_m)
    bias    b  <->  sum_w / (tau_m * ln(1 - sum_w / (v_th * c_m)))

The bias is kept as the additive (negative) offset inside the rectifier,
``relu = k * max(0, sum(w*x) + b)``. Its magnitude is the smallest drive
``sum(w*f)`` at which an equal-rate input makes the neuron fire as the
observation window grows without bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .neuron import NeuronParams, ResetMode


@dataclass(frozen=True)
class ReluParams:
    weights: tuple = ()
    bias: float = 0.0
    slope: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.slope > 0:
            raise DomainError(f"slope must be > 0, got {self.slope}")


@dataclass(frozen=True)
class MappingResult:
    neuron: NeuronParams
    residual: float


def relu_an(inputs, p: ReluParams) -> float:
    x = np.asarray(inputs, dtype=np.float64)
    w = np.asarray(p.weights, dtype=np.float64)
    if x.shape != w.shape:
        raise DomainError(f"{x.size} inputs for {w.size} weights")
    return p.slope * max(0.0, float(np.dot(w, x)) + p.bias)


def slope_from_params(n: NeuronParams) -> float:
    return 1.0 / (n.v_th * n.c_m)


def _check_sum_w(sum_w, capacity):
    if not sum_w > 0:
        raise DomainError(f"sum of weights must be > 0, got {sum_w}")
    if not sum_w < capacity:
        raise DomainError(
            f"sum of weights {sum_w} >= v_th*c_m = {capacity}: the neuron fires on a "
            "finite number of impulses at any rate, so no bias corresponds")


def bias_from_params(sum_w: float, n: NeuronParams) -> float:
    """Asymptotic (infinite window) bias of the equivalent ReLU neuron."""
    capacity = n.v_th * n.c_m
    _check_sum_w(sum_w, capacity)
    if n.g_l == 0:
        return 0.0
    return sum_w / (n.tau_m * math.log1p(-sum_w / capacity))


def bias_from_params_finite(sum_w: float, n: NeuronParams, t_window: float) -> float:
    """Bias for a finite observation window ``t_window``.

    Uses the effective weight ``sum_w * (1 - exp(-t_window/tau_m))``; this is
    a necessary condition for at least one output spike inside the window.
    """
    if not t_window > 0:
        raise DomainError(f"t_window must be > 0, got {t_window}")
    capacity = n.v_th * n.c_m
    if not sum_w > 0:
        raise DomainError(f"sum of weights must be > 0, got {sum_w}")
    if n.g_l == 0:
        # tau_m -> inf limit of the expression below
        return -capacity / t_window
    eff = sum_w * -math.expm1(-t_window / n.tau_m)
    if not eff < capacity:
        raise DomainError(
            f"effective weight {eff} >= v_th*c_m = {capacity}; bias undefined")
    return sum_w / (n.tau_m * math.log1p(-eff / capacity))


def min_firing_frequency(weights, n: NeuronParams, t_window: float) -> float:
    """Smallest equal input rate (Hz) that can fire the neuron within ``t_window``."""
    sum_w = float(np.sum(weights))
    if math.isinf(t_window):
        return -bias_from_params(sum_w, n) / sum_w
    return -bias_from_params_finite(sum_w, n, t_window) / sum_w


def params_from_relu(p: ReluParams, sum_w: float | None = None, v_th: float = 1.0,
                     reset_mode=ResetMode.LINEAR) -> NeuronParams:
    """Invert the mapping for one neuron.

    ``sum_w`` defaults to the sum of ``p.weights``. A positive bias has no
    LIF counterpart and is rejected.
    """
    if sum_w is None:
        sum_w = float(sum(p.weights))
    if p.bias > 0:
        raise DomainError(f"bias {p.bias} > 0 is not representable by membrane leak")
    c_m = 1.0 / (p.slope * v_th)
    if p.bias == 0:
        return NeuronParams(c_m=c_m, g_l=0.0, v_th=v_th, reset_mode=reset_mode)
    _check_sum_w(sum_w, v_th * c_m)
    g_l = p.bias * c_m * math.log1p(-sum_w / (v_th * c_m)) / sum_w
    return NeuronParams(c_m=c_m, g_l=g_l, v_th=v_th, reset_mode=reset_mode)


def map_relu(p: ReluParams, sum_w: float | None = None, v_th: float = 1.0) -> MappingResult:
    """:func:`params_from_relu` plus the relative round-trip residual."""
    if sum_w is None:
        sum_w = float(sum(p.weights))
    neuron = params_from_relu(p, sum_w, v_th)
    b = bias_from_params(sum_w, neuron)
    k = slope_from_params(neuron)
    res_b = abs(b - p.bias) / abs(p.bias) if p.bias else abs(b)
    res_k = abs(k - p.slope) / p.slope
    return MappingResult(neuron=neuron, residual=max(res_b, res_k))


def opposite_sign_bias(sum_w: float, n: NeuronParams) -> float:
    """Bias with the opposite sign convention (positive offset magnitude)."""
    return -bias_from_params(sum_w, n)
