"""Single-neuron experiments: rate sweeps, slope and onset measurement,
and the equal-frequency cases used for quantization error checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coding import encode_rate
from .errors import DomainError
from .mapping import ReluParams, bias_from_params, min_firing_frequency, relu_an, slope_from_params
from .neuron import NeuronParams, ResetMode, closed_form_mp, n_steps_for, simulate


def equal_rate_charges(freqs, weights, dt, n_steps):
    """One row per frequency; every input fires at that frequency."""
    q = np.zeros((len(freqs), n_steps))
    for row, f in enumerate(freqs):
        ev = encode_rate(float(f), dt, n_steps)
        for w in weights:
            q[row, ev] += float(w)
    return q


def rate_charges(rate_rows, weights, dt, n_steps):
    """One row per case; ``rate_rows[c][i]`` is the rate of input ``i``."""
    q = np.zeros((len(rate_rows), n_steps))
    for row, rates in enumerate(rate_rows):
        for f, w in zip(rates, weights):
            q[row, encode_rate(float(f), dt, n_steps)] += float(w)
    return q


def output_rates(params, charges, dt):
    spikes, _, _ = simulate(charges, params, dt)
    return spikes.sum(axis=1) / (dt * charges.shape[1])


def fit_slope(drive, out):
    """Least-squares slope of ``out`` vs ``drive`` over the firing region (out > 0)."""
    drive = np.asarray(drive, dtype=np.float64)
    out = np.asarray(out, dtype=np.float64)
    m = out > 0
    if m.sum() < 2:
        return float("nan")
    return float(np.polyfit(drive[m], out[m], 1)[0])


def first_firing(freqs, out):
    """Smallest frequency with a non-zero output, NaN if none fires."""
    idx = np.flatnonzero(np.asarray(out) > 0)
    return float(freqs[idx[0]]) if idx.size else float("nan")


def predicted_bias(sum_w, params):
    """Asymptotic bias, 0 when the weights already exceed v_th*c_m, NaN on other domain errors."""
    try:
        return bias_from_params(sum_w, params)
    except DomainError:
        return 0.0 if sum_w >= params.v_th * params.c_m else float("nan")


@dataclass
class SweepResult:
    params: NeuronParams
    freqs: np.ndarray
    drive: np.ndarray
    output: np.ndarray
    relu: np.ndarray
    slope: float
    min_freq: float
    predicted_slope: float
    predicted_bias: float
    predicted_min_freq: float
    l2_error: float


def rate_sweep(params: NeuronParams, weights, freqs, t_window, dt=0.01) -> SweepResult:
    """Drive one neuron with equal-rate inputs at each frequency and compare to ReLU."""
    freqs = np.asarray(freqs, dtype=np.float64)
    n = n_steps_for(t_window, dt)
    sum_w = float(np.sum(weights))
    out = output_rates(params, equal_rate_charges(freqs, weights, dt, n), dt)
    k = slope_from_params(params)
    b = predicted_bias(sum_w, params)
    ref = ReluParams(weights=tuple(weights), bias=0.0 if math.isnan(b) else b, slope=k)
    relu = np.array([relu_an([f] * len(weights), ref) for f in freqs])
    try:
        f_min = min_firing_frequency(weights, params, t_window)
    except DomainError:
        f_min = float("nan")
    return SweepResult(
        params=params, freqs=freqs, drive=sum_w * freqs, output=out, relu=relu,
        slope=fit_slope(sum_w * freqs, out), min_freq=first_firing(freqs, out),
        predicted_slope=k, predicted_bias=b, predicted_min_freq=f_min,
        l2_error=float(np.linalg.norm(out - relu)))


def onset_frequencies(neurons, weight_sums, freqs, t_window, dt=0.01):
    """Smallest grid frequency that fires each neuron (single lumped input)."""
    freqs = np.asarray(freqs, dtype=np.float64)
    n = n_steps_for(t_window, dt)
    base = np.zeros((len(freqs), n))
    for row, f in enumerate(freqs):
        base[row, encode_rate(float(f), dt, n)] = 1.0
    charges = np.concatenate([base * w for w in weight_sums])
    params = [p for p in neurons for _ in freqs]
    spikes, _, _ = simulate(charges, params, dt)
    fired = spikes.reshape(len(neurons), len(freqs), n).any(axis=2)
    return np.array([first_firing(freqs, row) for row in fired])


# --- equal-frequency quantization cases --------------------------------------

def min_impulses_to_fire(params: NeuronParams, weight, f_in, limit=100000):
    """Smallest n with closed-form potential >= v_th, or None if it never fires."""
    if weight <= 0:
        return None
    if params.g_l > 0:
        # the potential saturates at weight / (c_m * (1 - a)), a = exp(-g_l / (c_m f))
        saturation_gap = -math.expm1(-params.g_l / (params.c_m * f_in))
        if weight < params.v_th * params.c_m * saturation_gap:
            return None
    n = 1
    while n <= limit:
        if closed_form_mp(params, weight, f_in, n, check_threshold=False) >= params.v_th:
            return n
        n += 1
    return None


def analytic_rate(params: NeuronParams, weight, f_in):
    """Long-run output rate for a periodic single-weight input, when closed form exists.

    Hard reset: the neuron restarts from 0 after each spike, so it fires
    every ``n`` impulses. Soft reset without leak: charge is conserved, rate
    ``weight * f_in / (v_th * c_m)``. Soft reset with leak has no closed
    form; returns None.
    """
    if params.reset_mode is ResetMode.ZERO:
        n = min_impulses_to_fire(params, weight, f_in)
        return 0.0 if n is None else f_in / n
    if params.g_l == 0:
        return max(0.0, weight) * f_in / (params.v_th * params.c_m)
    return None


@dataclass
class QuantizationCase:
    params: NeuronParams
    weight: float
    period_steps: int
    f_in: float
    expected: float
    decoded: float

    @property
    def error(self):
        return abs(self.expected - self.decoded)


def random_quantization_cases(rng, count, t_window, dt=0.01, max_rate=60.0):
    """Randomised equal-frequency cases with an analytic output rate.

    Input periods are whole grid steps that divide the window, so every
    case sees an integer number of input periods.
    """
    n = n_steps_for(t_window, dt)
    periods = [m for m in range(1, n + 1) if n % m == 0 and 1.0 / (m * dt) <= max_rate]
    cases = []
    while len(cases) < count:
        mode = ResetMode.ZERO if rng.random() < 0.5 else ResetMode.LINEAR
        g_l = 0.0 if mode is ResetMode.LINEAR or rng.random() < 0.2 else float(rng.uniform(0.1, 5.0))
        params = NeuronParams(c_m=float(rng.uniform(0.5, 2.0)), g_l=g_l,
                              v_th=float(rng.uniform(0.5, 1.5)), reset_mode=mode)
        weight = float(rng.uniform(0.05, 1.0)) * params.v_th * params.c_m
        m = int(rng.choice(periods))
        f_in = 1.0 / (m * dt)
        expected = analytic_rate(params, weight, f_in)
        if expected is None:
            continue
        cases.append(QuantizationCase(params, weight, m, f_in, expected, float("nan")))
    return simulate_cases(cases, t_window, dt)


def simulate_cases(cases, t_window, dt=0.01):
    n = n_steps_for(t_window, dt)
    for mode in (ResetMode.ZERO, ResetMode.LINEAR):
        group = [c for c in cases if c.params.reset_mode is mode]
        if not group:
            continue
        q = np.zeros((len(group), n))
        for row, c in enumerate(group):
            q[row, c.period_steps - 1::c.period_steps] = c.weight
        rates = output_rates([c.params for c in group], q, dt)
        for c, r in zip(group, rates):
            c.decoded = float(r)
    return cases
