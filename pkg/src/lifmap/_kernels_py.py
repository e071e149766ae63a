"""Pure numpy implementation of the LIF time loop.

Vectorised across neurons, sequential in time. Used when the compiled
extension is unavailable or ``LIFMAP_BACKEND=python`` is set.
"""

import numpy as np


def lif_run(charges, decay, c_m, v_th, linear_reset, v0, record=False):
    n, steps = charges.shape
    spikes = np.zeros((n, steps), dtype=np.uint8)
    v = np.array(v0, dtype=np.float64, copy=True)
    if record:
        v_tr = np.empty((n, steps), dtype=np.float64)
        h_tr = np.empty((n, steps), dtype=np.float64)
    for t in range(steps):
        h = v * decay + charges[:, t] / c_m
        fired = h >= v_th
        spikes[:, t] = fired
        if linear_reset:
            v = np.where(fired, h - v_th, h)
        else:
            v = np.where(fired, 0.0, h)
        if record:
            v_tr[:, t] = v
            h_tr[:, t] = h
    if record:
        return spikes, v_tr, h_tr
    return spikes, None, None
