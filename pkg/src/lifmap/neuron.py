"""Linear leaky-integrate-and-fire neuron on a fixed time grid.

Each step applies, in order: exact exponential decay of the membrane
potential, an instantaneous jump of ``charge / c_m`` for the presynaptic
impulses landing on that step, the threshold test ``H >= v_th`` and the
reset. Two reset modes are supported:

* ``ResetMode.ZERO``   -- hard reset, ``V = 0`` after a spike.
* ``ResetMode.LINEAR`` -- soft reset, ``V = H - v_th`` after a spike, so
  the residual above threshold is carried over.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DomainError


class ResetMode(str, enum.Enum):
    ZERO = "zero"
    LINEAR = "linear"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {
            "zero": cls.ZERO, "reset_to_zero": cls.ZERO, "hard": cls.ZERO,
            "linear": cls.LINEAR, "linear_reset": cls.LINEAR, "soft": cls.LINEAR,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise DomainError(f"unknown reset mode {value!r}") from None


@dataclass(frozen=True)
class NeuronParams:
    """Membrane parameters. The resting/reset potential is fixed at 0."""

    c_m: float = 1.0
    g_l: float = 0.0
    v_th: float = 1.0
    reset_mode: ResetMode = ResetMode.LINEAR

    def __post_init__(self):
        object.__setattr__(self, "reset_mode", ResetMode.parse(self.reset_mode))
        if not self.c_m > 0:
            raise DomainError(f"c_m must be > 0, got {self.c_m}")
        if not self.g_l >= 0:
            raise DomainError(f"g_l must be >= 0, got {self.g_l}")
        if not self.v_th > 0:
            raise DomainError(f"v_th must be > 0, got {self.v_th}")

    @property
    def v_rest(self):
        return 0.0

    @property
    def tau_m(self):
        if self.g_l == 0:
            return math.inf
        return self.c_m / self.g_l

    def replace(self, **changes):
        fields = dict(c_m=self.c_m, g_l=self.g_l, v_th=self.v_th,
                      reset_mode=self.reset_mode)
        fields.update(changes)
        return NeuronParams(**fields)

    def to_dict(self):
        return {"c_m": self.c_m, "g_l": self.g_l, "v_th": self.v_th,
                "reset_mode": self.reset_mode.value}

    @classmethod
    def from_dict(cls, d):
        return cls(c_m=float(d.get("c_m", 1.0)), g_l=float(d.get("g_l", 0.0)),
                   v_th=float(d.get("v_th", 1.0)),
                   reset_mode=d.get("reset_mode", "linear"))


@dataclass(frozen=True)
class NeuronState:
    v: float = 0.0
    last_h: float = 0.0


@dataclass(frozen=True)
class MembraneTrace:
    """Post-reset potential per step; step ``i`` ends at ``(i + 1) * dt``."""

    dt: float
    v: np.ndarray
    h: np.ndarray
    fire_indices: np.ndarray

    @property
    def n_steps(self):
        return len(self.v)

    @property
    def times(self):
        return (np.arange(self.n_steps) + 1) * self.dt


def decay_factor(params: NeuronParams, dt: float) -> float:
    if dt < 0:
        raise DomainError(f"dt must be >= 0, got {dt}")
    if params.g_l == 0 or dt == 0:
        return 1.0
    return math.exp(-dt * params.g_l / params.c_m)


def step(state: NeuronState, injected_charge: float, params: NeuronParams,
         dt: float) -> tuple[NeuronState, bool]:
    """Advance one grid step; returns the new state and whether it fired."""
    h = state.v * decay_factor(params, dt) + injected_charge / params.c_m
    spiked = h >= params.v_th
    if not spiked:
        v = h
    elif params.reset_mode is ResetMode.LINEAR:
        v = h - params.v_th
    else:
        v = 0.0
    return NeuronState(v=v, last_h=h), bool(spiked)


def n_steps_for(t_window: float, dt: float) -> int:
    if dt <= 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    if t_window < dt * (1 - 1e-9):
        raise DomainError(f"t_window ({t_window}) shorter than dt ({dt})")
    return int(round(t_window / dt))


def run(params: NeuronParams, weighted_input, dt: float, t_window: float,
        v0: float = 0.0):
    """Simulate one neuron over the whole window.

    ``weighted_input`` is the per-step charge sequence (sum of presynaptic
    weights arriving at each step). Returns ``(SpikeTrain, MembraneTrace)``.
    """
    from .coding import SpikeTrain

    charges = np.ascontiguousarray(weighted_input, dtype=np.float64).reshape(1, -1)
    n = n_steps_for(t_window, dt)
    if charges.shape[1] != n:
        raise DomainError(
            f"charge sequence has {charges.shape[1]} steps, window needs {n}")
    spikes, v, h = simulate(charges, params, dt, v0=v0, record=True)
    fires = np.flatnonzero(spikes[0])
    train = SpikeTrain(dt=dt, n_steps=n, events=fires)
    return train, MembraneTrace(dt=dt, v=v[0], h=h[0], fire_indices=fires)


def _param_arrays(params, n):
    if isinstance(params, NeuronParams):
        params = [params] * n
    if len(params) != n:
        raise DomainError(f"{len(params)} neuron parameter sets for {n} neurons")
    modes = {p.reset_mode for p in params}
    if len(modes) > 1:
        raise DomainError("all neurons in one simulate() call must share a reset mode")
    c_m = np.array([p.c_m for p in params], dtype=np.float64)
    v_th = np.array([p.v_th for p in params], dtype=np.float64)
    return params, c_m, v_th, modes.pop() if modes else ResetMode.LINEAR


def simulate(charges, params, dt, v0=0.0, record=False, backend=None):
    """Batch simulation of independent neurons.

    ``charges`` has shape ``(n_neurons, n_steps)``; ``params`` is one
    :class:`NeuronParams` shared by all rows or a sequence with one entry per
    row. Returns ``(spikes, v_trace, h_trace)``; traces are ``None`` unless
    ``record`` is set.
    """
    charges = np.ascontiguousarray(charges, dtype=np.float64)
    if charges.ndim != 2:
        raise DomainError("charges must be 2-D (neurons x steps)")
    n = charges.shape[0]
    plist, c_m, v_th, mode = _param_arrays(params, n)
    decay = np.array([decay_factor(p, dt) for p in plist], dtype=np.float64)
    v0 = np.ascontiguousarray(np.broadcast_to(np.asarray(v0, dtype=np.float64), (n,)))
    kernel = _backend.lif_run if backend is None else _backend.get_kernel(backend)
    return kernel(charges, decay, c_m, v_th, mode is ResetMode.LINEAR, v0, record)


def closed_form_mp(params: NeuronParams, weight: float, f_in: float, n: int,
                   check_threshold: bool = True) -> float:
    """Potential just after the ``n``-th impulse of a periodic train.

    Geometric sum ``(w/c_m) * (1 - a**n) / (1 - a)`` with
    ``a = exp(-1/(f_in * tau_m))``; ``n * w / c_m`` for a pure integrator.
    With ``check_threshold`` the call refuses cases where the neuron would
    already have fired on an earlier impulse.
    """
    if not f_in > 0:
        raise DomainError(f"f_in must be > 0, got {f_in}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")

    def value(m):
        if params.g_l == 0:
            return m * weight / params.c_m
        x = params.g_l / (params.c_m * f_in)
        if x < 1e-12:
            # near-integrator: second-order series of the geometric sum
            return (weight / params.c_m) * m * (1 - (m - 1) * x / 2)
        return (weight / params.c_m) * math.expm1(-m * x) / math.expm1(-x)

    if check_threshold and n > 1 and value(n - 1) >= params.v_th:
        raise DomainError(
            f"threshold already crossed before impulse {n}; closed form does not apply")
    return value(n)
