import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lifmap import _backend
from lifmap.neuron import NeuronParams, ResetMode, simulate

needs_compiled = pytest.mark.skipif("cython" not in _backend.available(),
                                    reason="compiled kernel not built")


def test_python_backend_always_available():
    assert "python" in _backend.available()
    assert _backend.name in _backend.available()


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get_kernel("fortran")


def test_env_var_forces_fallback():
    env = dict(os.environ, LIFMAP_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "import lifmap; print(lifmap.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
@given(st.integers(1, 6), st.integers(1, 200), st.floats(0.0, 8.0), st.floats(0.2, 3.0),
       st.floats(0.3, 2.0), st.sampled_from(list(ResetMode)), st.integers(0, 2**31 - 1))
def test_backends_bit_identical(n, t, g_l, c_m, v_th, mode, seed):
    rng = np.random.default_rng(seed)
    q = rng.normal(0.2, 0.6, (n, t)) * (rng.random((n, t)) < 0.4)
    params = [NeuronParams(c_m=c_m * (1 + i), g_l=g_l, v_th=v_th, reset_mode=mode)
              for i in range(n)]
    v0 = rng.uniform(-0.5, 0.5, n)
    a = simulate(q, params, 0.01, v0=v0, record=True, backend="cython")
    b = simulate(q, params, 0.01, v0=v0, record=True, backend="python")
    for x, y in zip(a, b):
        assert x.dtype == y.dtype
        assert x.tobytes() == y.tobytes()


@needs_compiled
def test_backends_without_record():
    q = np.full((2, 50), 0.3)
    a = simulate(q, NeuronParams(), 0.01, backend="cython")
    b = simulate(q, NeuronParams(), 0.01, backend="python")
    assert a[1] is None and b[1] is None
    np.testing.assert_array_equal(a[0], b[0])


def test_benchmark_script_runs(capsys):
    import importlib.util
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    assert bench.main(["--neurons", "20", "--steps", "50", "--repeat", "1"]) == 0
    assert "python" in capsys.readouterr().out
