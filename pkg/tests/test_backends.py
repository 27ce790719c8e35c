import numpy as np
import pytest

from qgate import _backend, _kernels_py

from conftest import random_hermitian

try:
    from qgate import _kernels
    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False


def stack(rng, n, d):
    hs = np.array([random_hermitian(rng, d) for _ in range(n)])
    dts = rng.uniform(0.01, 0.4, n)
    return hs, dts


class TestPythonKernel:
    def test_single_step_matches_expm(self, rng):
        h = random_hermitian(rng, 3)
        dt = 0.7
        w, v = np.linalg.eigh(h)
        expected = (v * np.exp(-1j * w * dt)) @ v.conj().T
        out = _kernels_py.propagate(h[None, :, :], np.array([dt]), np.eye(3))
        assert np.allclose(out, expected, atol=1e-14)

    def test_applies_to_initial_matrix(self, rng):
        hs, dts = stack(rng, 5, 2)
        u0 = random_hermitian(rng, 2)  # arbitrary start, not identity
        direct = _kernels_py.propagate(hs, dts, np.eye(2)) @ u0
        seeded = _kernels_py.propagate(hs, dts, u0)
        assert np.allclose(direct, seeded, atol=1e-13)

    def test_shape_validation(self, rng):
        hs, dts = stack(rng, 4, 2)
        with pytest.raises(ValueError):
            _kernels_py.propagate(hs, dts[:2], np.eye(2))


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel unavailable")
class TestCompiledKernel:
    @pytest.mark.parametrize("d", [2, 3, 4, 6, 17])
    def test_matches_python_backend(self, rng, d):
        hs, dts = stack(rng, 40, d)
        u0 = np.eye(d, dtype=complex)
        a = _kernels.propagate(hs, dts, u0)
        b = _kernels_py.propagate(hs, dts, u0)
        assert np.max(np.abs(a - b)) <= 1e-12

    def test_unitarity(self, rng):
        hs, dts = stack(rng, 300, 4)
        u = _kernels.propagate(hs, dts, np.eye(4, dtype=complex))
        assert np.max(np.abs(u.conj().T @ u - np.eye(4))) <= 1e-11

    def test_nonidentity_start(self, rng):
        hs, dts = stack(rng, 12, 5)
        q, _ = np.linalg.qr(random_hermitian(rng, 5) + 1j * random_hermitian(rng, 5))
        a = _kernels.propagate(hs, dts, q)
        b = _kernels_py.propagate(hs, dts, q)
        assert np.max(np.abs(a - b)) <= 1e-12

    def test_dts_validated(self, rng):
        hs, dts = stack(rng, 4, 3)
        with pytest.raises(ValueError):
            _kernels.propagate(hs, dts[:1], np.eye(3, dtype=complex))


class TestSelection:
    def test_backend_exposes_name(self):
        assert _backend.backend_name() in ("python", "compiled")

    def test_forced_python_env(self, monkeypatch):
        # the selection module honors QGATE_FORCE_PYTHON at import time
        import importlib
        import qgate._backend as mod
        monkeypatch.setenv("QGATE_FORCE_PYTHON", "1")
        reloaded = importlib.reload(mod)
        try:
            assert reloaded.backend_name() == "python"
        finally:
            monkeypatch.delenv("QGATE_FORCE_PYTHON")
            importlib.reload(mod)
