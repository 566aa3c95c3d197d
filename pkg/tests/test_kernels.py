import numpy as np
import pytest

from quadobs import kernels
from quadobs.harness import simulate, vehicle_scenario

needs_compiled = pytest.mark.skipif(not kernels.compiled_available(), reason="extension not built")


def test_backend_name():
    assert kernels.BACKEND in ("compiled", "python")


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_loop("fortran")


@needs_compiled
def test_backends_agree():
    sc = vehicle_scenario(horizon=3.0)
    a = simulate(sc, backend="compiled")
    b = simulate(sc, backend="python")
    assert np.allclose(a.x, b.x, rtol=1e-10, atol=1e-10)
    scale = np.abs(b.zhat).max()
    assert np.max(np.abs(a.zhat - b.zhat)) <= 1e-9 * scale
    assert np.allclose(a.M_min_eig, b.M_min_eig, rtol=1e-6, atol=1e-12)


@needs_compiled
@pytest.mark.parametrize("backend", ["compiled", "python"])
def test_blowup_status(backend):
    sc = vehicle_scenario(horizon=0.5)
    cfg = sc.observer_cfg
    loop = kernels.get_loop(backend)
    u = np.zeros((2 * 500 + 1, 3))
    aug = sc.aug
    *_, status, bad = loop(aug.base.A, aug.base.B, aug.base.C, aug.BtC, u, 1e-3, sc.x0, sc.zhat0,
                           1e-3 * np.eye(9), -np.eye(9), cfg.W_inv, 0.0)
    assert status == 2 and bad > 0
