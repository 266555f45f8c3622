import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from mixcop import _accel, simulation as sim
from mixcop.estimator import estimate_matrix

ROOT = Path(__file__).resolve().parents[1]


def backend_in_subprocess(flag):
    env = dict(os.environ)
    env.pop("MIXCOP_DISABLE_NUMBA", None)
    if flag is not None:
        env["MIXCOP_DISABLE_NUMBA"] = flag
    out = subprocess.run([sys.executable, "-c", "from mixcop import _accel; print(_accel.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


@pytest.mark.parametrize("flag", ["1", "true", "YES"])
def test_env_flag_selects_numpy(flag):
    assert backend_in_subprocess(flag) == "numpy"


@pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("flag", [None, "0", ""])
def test_numba_default(flag):
    assert backend_in_subprocess(flag) == "numba"


def test_use_backend_restores():
    before = _accel.backend()
    with _accel.use_backend("numpy"):
        assert _accel.backend() == "numpy"
    assert _accel.backend() == before
    with pytest.raises(ValueError):
        _accel.set_backend("cuda")


@pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")
def test_matrix_agrees_across_backends():
    data = sim.sample_dataset(sim.gen_sigma_blocks([(4, 0.7), (4, 0.3)]),
                              sim.parse_margins("normal(0,1)*3; negbin(2,0.5)*3; bernoulli(0.4)*2"),
                              150, seed=9)
    with _accel.use_backend("numba"):
        a = estimate_matrix(data).values
    with _accel.use_backend("numpy"):
        b = estimate_matrix(data).values
    assert np.max(np.abs(a - b)) <= 1e-6


def test_benchmark_script_runs():
    proc = subprocess.run([sys.executable, str(ROOT / "benchmarks" / "bench_kernels.py"),
                           "--n", "2000", "--repeat", "1"], capture_output=True, text=True,
                          timeout=600)
    assert proc.returncode == 0, proc.stderr
    assert "bvn_cdf" in proc.stdout
