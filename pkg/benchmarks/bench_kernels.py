"""Time the LIF kernel on both backends and check that they agree bit for bit.

    python benchmarks/bench_kernels.py --neurons 2000 --steps 1000 --repeat 5
"""

import argparse
import time

import numpy as np

from lifmap import _backend
from lifmap.neuron import NeuronParams, ResetMode, simulate


def workload(n, steps, seed, mode):
    rng = np.random.default_rng(seed)
    q = rng.uniform(0.0, 0.4, (n, steps)) * (rng.random((n, steps)) < 0.3)
    params = [NeuronParams(c_m=float(rng.uniform(0.5, 2.0)), g_l=float(rng.uniform(0.0, 3.0)),
                           reset_mode=mode)
              for _ in range(n)]
    return q, params


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--neurons", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--record", action="store_true", help="also record membrane traces")
    ap.add_argument("--reset-mode", choices=[m.value for m in ResetMode], default="linear")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    q, params = workload(args.neurons, args.steps, args.seed, ResetMode(args.reset_mode))
    results = {}
    for name in _backend.available():
        t, out = best_of(lambda: simulate(q, params, 0.01, record=args.record, backend=name),
                         args.repeat)
        results[name] = out
        rate = args.neurons * args.steps / t / 1e6
        print(f"{name:>7}: {1e3 * t:9.2f} ms  ({rate:7.1f} M neuron-steps/s)")

    if len(results) == 2:
        a, b = results["cython"], results["python"]
        same = all((x is None and y is None) or x.tobytes() == y.tobytes() for x, y in zip(a, b))
        print(f"bit-identical: {same}")
        return 0 if same else 1
    print("compiled backend not built; only the fallback was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
