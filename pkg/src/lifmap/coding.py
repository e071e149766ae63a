"""Rate coding of non-negative scalars into periodic spike trains.

Grid convention: step ``i`` covers ``(i*dt, (i+1)*dt]``, so an event at
nominal time ``t`` lands on index ``round(t/dt) - 1`` (round half up).
A train of frequency ``f`` has its first spike at ``1/f``, never at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GridMismatchError
from .neuron import n_steps_for

# Absorbs binary representation error in j/f and f*T (e.g. 0.3/0.01).
_SNAP_EPS = 1e-9


@dataclass(frozen=True)
class SpikeTrain:
    dt: float
    n_steps: int
    events: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        ev = np.unique(np.asarray(self.events, dtype=np.int64))
        if ev.size and (ev[0] < 0 or ev[-1] >= self.n_steps):
            raise DomainError(f"event indices must lie in [0, {self.n_steps})")
        object.__setattr__(self, "events", ev)

    @property
    def t_window(self):
        return self.dt * self.n_steps

    @property
    def count(self):
        return int(self.events.size)

    def __len__(self):
        return self.count

    def same_grid(self, other):
        return self.n_steps == other.n_steps and math.isclose(self.dt, other.dt, rel_tol=1e-12)

    def to_raster(self):
        r = np.zeros(self.n_steps, dtype=np.uint8)
        r[self.events] = 1
        return r

    @classmethod
    def from_raster(cls, raster, dt):
        raster = np.asarray(raster)
        return cls(dt=dt, n_steps=raster.shape[-1], events=np.flatnonzero(raster))

    def __eq__(self, other):
        if not isinstance(other, SpikeTrain):
            return NotImplemented
        return self.same_grid(other) and np.array_equal(self.events, other.events)

    __hash__ = None

    def dumps(self):
        lines = [f"dt={self.dt!r} n_steps={self.n_steps}"]
        lines += [str(int(i)) for i in self.events]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text):
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise DomainError("empty spike train file")
        try:
            header = dict(tok.split("=", 1) for tok in lines[0].split())
            dt, n_steps = float(header["dt"]), int(header["n_steps"])
        except (KeyError, ValueError):
            raise DomainError(f"bad spike train header {lines[0]!r}") from None
        return cls(dt=dt, n_steps=n_steps, events=[int(x) for x in lines[1:]])


@dataclass(frozen=True)
class CodingConfig:
    dt: float = 0.01
    t_window: float = 3.0
    range_scale: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError(f"dt must be > 0, got {self.dt}")
        if self.t_window < self.dt * (1 - 1e-9):
            raise DomainError("t_window must be >= dt")
        if not self.range_scale >= 0:
            raise DomainError(f"range_scale must be >= 0, got {self.range_scale}")

    @property
    def n_steps(self):
        return n_steps_for(self.t_window, self.dt)

    @property
    def max_rate(self):
        return 1.0 / self.dt


def encode_rate(f: float, dt: float, n_steps: int) -> np.ndarray:
    """Event indices of a periodic train of ``f`` Hz on the grid."""
    if f < 0 or not math.isfinite(f):
        raise DomainError(f"rate must be a finite non-negative number, got {f}")
    if f * dt > 1 + _SNAP_EPS:
        raise DomainError(f"rate {f} Hz exceeds the grid maximum {1 / dt:g} Hz")
    if f == 0:
        return np.zeros(0, dtype=np.int64)
    t_window = dt * n_steps
    count = math.floor(f * t_window + _SNAP_EPS)
    j = np.arange(1, count + 1, dtype=np.float64)
    idx = np.floor(j / (f * dt) + 0.5 + _SNAP_EPS).astype(np.int64) - 1
    idx = np.clip(idx, 0, n_steps - 1)
    return np.unique(idx)


def encode(x: float, cfg: CodingConfig) -> SpikeTrain:
    if x < 0:
        raise DomainError(f"input must be >= 0, got {x}")
    n = cfg.n_steps
    return SpikeTrain(dt=cfg.dt, n_steps=n, events=encode_rate(cfg.range_scale * x, cfg.dt, n))


def encode_raster(rates, dt: float, n_steps: int) -> np.ndarray:
    """Encode an array of rates (Hz) into a ``rates.shape + (n_steps,)`` raster."""
    rates = np.asarray(rates, dtype=np.float64)
    flat = rates.reshape(-1)
    out = np.zeros((flat.size, n_steps), dtype=np.uint8)
    cache = {}
    for i, f in enumerate(flat):
        key = float(f)
        if key not in cache:
            cache[key] = encode_rate(key, dt, n_steps)
        out[i, cache[key]] = 1
    return out.reshape(rates.shape + (n_steps,))


def decode(train: SpikeTrain) -> float:
    return train.count / train.t_window


def decode_raster(raster, dt: float) -> np.ndarray:
    raster = np.asarray(raster)
    return raster.sum(axis=-1) / (dt * raster.shape[-1])


def weighted_charge_sequence(trains, weights) -> np.ndarray:
    """Per-step sum of the weights of the trains carrying an event.

    Summation order is input-index ascending, which fixes the floating
    point result independently of how callers batch the work.
    """
    trains = list(trains)
    weights = list(weights)
    if len(trains) != len(weights):
        raise DomainError(f"{len(trains)} trains but {len(weights)} weights")
    if not trains:
        raise DomainError("at least one input train is required")
    ref = trains[0]
    for tr in trains[1:]:
        if not ref.same_grid(tr):
            raise GridMismatchError("all input trains must share dt and n_steps")
    q = np.zeros(ref.n_steps, dtype=np.float64)
    for tr, w in zip(trains, weights):
        q[tr.events] += float(w)
    return q


def charge_matrix(weights, raster) -> np.ndarray:
    """Charges for many neurons: ``weights`` (m, n) against ``raster`` (n, T).

    Same ascending-input summation order as :func:`weighted_charge_sequence`.
    """
    weights = np.asarray(weights, dtype=np.float64)
    raster = np.asarray(raster)
    m, n = weights.shape
    if raster.shape[0] != n:
        raise DomainError(f"weights expect {n} inputs, raster has {raster.shape[0]}")
    q = np.zeros((m, raster.shape[1]), dtype=np.float64)
    for i in range(n):
        ev = np.flatnonzero(raster[i])
        if ev.size:
            q[:, ev] += weights[:, i:i + 1]
    return q
