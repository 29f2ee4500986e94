"""Numba and numpy kernel variants must agree; results must not depend
on the numba thread count (fixed chunking, fixed tree combines)."""

import json
import os
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from cxbody import backend
from cxbody.kernels import (
    chunked_sum,
    gram_phase_average,
    jquad_pairs,
    min_abs_hermitian_pair,
)
from cxbody.spheregrid import phase_difference_grid


def _gram_inputs(seed=0):
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.05, 0.95, size=(7, 2))
    s[:, 1] = 1.0 - s[:, 0]
    t = rng.uniform(0.05, 0.95, size=(9, 2))
    t[:, 1] = 1.0 - t[:, 0]
    cosines, wd = phase_difference_grid(2, 16)
    a = np.sqrt(s[:, None, :] * t[None, :, :])
    sumsq = np.sum(s[:, None, :] * t[None, :, :], axis=2)
    cross = (2.0 * a[:, :, 0] * a[:, :, 1])[:, :, None]
    return sumsq, cross, cosines, wd


def _jquad_inputs(seed=1):
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(5, 2)) + 1j * rng.normal(size=(5, 2))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v = rng.normal(size=(300, 2)) + 1j * rng.normal(size=(300, 2))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    w = rng.uniform(0.5, 1.5, size=300)
    f = rng.normal(size=300)
    return u, v, w, f


def _run_numpy_backend(snippet: str) -> dict:
    env = dict(os.environ, CXBODY_BACKEND="numpy")
    proc = subprocess.run([sys.executable, "-c", snippet], env=env,
                          capture_output=True, text=True, timeout=240)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout.splitlines()[-1])


class TestBackendAgreement:
    def test_gram_matches_numpy_backend(self):
        sumsq, cross, cosines, wd = _gram_inputs()
        here = gram_phase_average(sumsq, cross, cosines, wd, 6, 0.0)
        doc = _run_numpy_backend(textwrap.dedent("""
            import json, numpy as np
            import tests.test_backend as tb
            from cxbody.kernels import gram_phase_average
            sumsq, cross, cosines, wd = tb._gram_inputs()
            K = gram_phase_average(sumsq, cross, cosines, wd, 6, 0.0)
            print(json.dumps({"sum": float(K.sum()), "k3": K[3].tolist()}))
        """))
        assert doc["sum"] == pytest.approx(float(here.sum()), rel=1e-13)
        np.testing.assert_allclose(here[3], np.asarray(doc["k3"]), rtol=1e-12)

    def test_jquad_matches_numpy_backend(self):
        u, v, w, f = _jquad_inputs()
        here_disc = jquad_pairs(u, v, w, f, -1.0)
        verts = np.exp(1j * np.pi * np.arange(4) / 2)
        here_poly = jquad_pairs(u, v, w, f, 0.5, verts)
        doc = _run_numpy_backend(textwrap.dedent("""
            import json, numpy as np
            import tests.test_backend as tb
            from cxbody.kernels import jquad_pairs
            u, v, w, f = tb._jquad_inputs()
            verts = np.exp(1j * np.pi * np.arange(4) / 2)
            print(json.dumps({
                "disc": jquad_pairs(u, v, w, f, -1.0).tolist(),
                "poly": jquad_pairs(u, v, w, f, 0.5, verts).tolist()}))
        """))
        np.testing.assert_allclose(here_disc, doc["disc"], rtol=1e-12)
        np.testing.assert_allclose(here_poly, doc["poly"], rtol=1e-12)

    def test_min_abs_pair_agrees(self):
        u, v, _, _ = _jquad_inputs()
        got = min_abs_hermitian_pair(u, v)
        z = np.abs(u @ v.conj().T)
        assert got == pytest.approx(float(z.min()), rel=1e-12)


class TestThreadIndependence:
    def test_chunked_sum_bitwise_stable(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=300_000) * np.exp(rng.uniform(-20, 20, size=300_000))
        backend.set_threads(1)
        s1 = chunked_sum(x)
        backend.set_threads(2)
        s2 = chunked_sum(x)
        assert s1 == s2  # bitwise; the reduction never depends on threads

    @pytest.mark.skipif(not backend.USE_NUMBA, reason="numpy backend is single-path")
    def test_gram_bitwise_stable(self):
        sumsq, cross, cosines, wd = _gram_inputs()
        backend.set_threads(1)
        k1 = gram_phase_average(sumsq, cross, cosines, wd, 5, 0.0)
        backend.set_threads(2)
        k2 = gram_phase_average(sumsq, cross, cosines, wd, 5, 0.0)
        assert np.array_equal(k1, k2)


class TestDeterministicSum:
    def test_matches_math_fsum(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=100_001)
        import math

        assert chunked_sum(x) == pytest.approx(math.fsum(x), abs=1e-9)

    def test_empty(self):
        assert chunked_sum(np.empty(0)) == 0.0
