import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from subnyq_amr import _kernels
from subnyq_amr._kernels import _pykernels


def _neighbor_sum_loop(f, l):
    n = len(f)
    out = np.zeros(n, dtype=f.dtype)
    for i in range(n):
        for j in range(1, l + 1):
            if i + j < n:
                out[i] += f[i + j]
            if i - j >= 0:
                out[i] += f[i - j]
    return out


def _complex(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


class TestBackendSelection:
    def test_backend_name(self):
        assert _kernels.BACKEND in ("cython", "python")

    def test_exports_callable(self):
        for name in ("neighbor_sum", "smooth_apply", "smooth_adjoint", "soft_threshold",
                     "project_unit_disc", "suppress_nonmax", "smo_solve"):
            assert callable(getattr(_kernels, name))


class TestNeighborSum:
    @pytest.mark.parametrize("n,l", [(1, 1), (5, 1), (16, 4), (33, 7), (10, 12)])
    def test_matches_loop(self, backend, rng, n, l):
        f = _complex(rng, n)
        np.testing.assert_allclose(backend.neighbor_sum(f, l), _neighbor_sum_loop(f, l),
                                   atol=1e-12)

    def test_real_input(self, backend, rng):
        f = rng.standard_normal(40)
        out = backend.neighbor_sum(f, 3)
        np.testing.assert_allclose(out, _neighbor_sum_loop(f, 3), atol=1e-12)


class TestSmoothing:
    def test_apply_adjoint_duality(self, backend, rng):
        n, l = 64, 4
        w = np.full(n, 1.0 / (2 * l))
        w[:3] = 0.2
        f, g = _complex(rng, n), _complex(rng, n)
        lhs = np.vdot(g, backend.smooth_apply(f, w, l))
        rhs = np.vdot(backend.smooth_adjoint(g, w, l), f)
        assert abs(lhs - rhs) < 1e-10

    def test_backends_agree(self, backend, rng):
        n, l = 200, 5
        w = rng.random(n)
        f = _complex(rng, n)
        np.testing.assert_allclose(backend.smooth_apply(f, w, l),
                                   _pykernels.smooth_apply(f, w, l), atol=1e-12)
        np.testing.assert_allclose(backend.smooth_adjoint(f, w, l),
                                   _pykernels.smooth_adjoint(f, w, l), atol=1e-12)


class TestProximal:
    def test_soft_threshold_values(self, backend):
        x = np.array([3 + 4j, 0.3 + 0.4j, 0j, -2.0 + 0j])
        out = backend.soft_threshold(x, 1.0)
        np.testing.assert_allclose(out, [2.4 + 3.2j, 0, 0, -1.0], atol=1e-15)

    def test_soft_threshold_preserves_phase(self, backend, rng):
        x = _complex(rng, 100) * 3
        out = backend.soft_threshold(x, 0.5)
        nz = np.abs(out) > 0
        np.testing.assert_allclose(np.angle(out[nz]), np.angle(x[nz]), atol=1e-12)
        np.testing.assert_allclose(np.abs(out), np.maximum(np.abs(x) - 0.5, 0), atol=1e-12)

    def test_project_unit_disc(self, backend, rng):
        x = _complex(rng, 200) * 2
        out = backend.project_unit_disc(x)
        assert np.all(np.abs(out) <= 1 + 1e-12)
        inside = np.abs(x) <= 1
        np.testing.assert_array_equal(out[inside], x[inside])
        np.testing.assert_allclose(np.angle(out), np.angle(x), atol=1e-12)


class TestSuppressNonmax:
    def test_keeps_strongest_in_radius(self, backend):
        mags = np.array([0, 5, 6, 0, 0, 0, 0, 0, 3, 0], dtype=float)
        kept = backend.suppress_nonmax(mags, np.array([1, 2, 8]), 3, False)
        assert sorted(int(k) for k in kept) == [2, 8]

    def test_circular_wrap(self, backend):
        mags = np.zeros(20)
        mags[0], mags[19] = 2.0, 1.0
        assert len(backend.suppress_nonmax(mags, np.array([0, 19]), 3, True)) == 1
        assert len(backend.suppress_nonmax(mags, np.array([0, 19]), 3, False)) == 2

    def test_backends_agree(self, backend, rng):
        mags = rng.random(500)
        cand = np.flatnonzero(mags > 0.7)
        a = sorted(int(k) for k in backend.suppress_nonmax(mags, cand, 3, True))
        b = sorted(int(k) for k in _pykernels.suppress_nonmax(mags, cand, 3, True))
        assert a == b


class TestSmo:
    def _problem(self, rng, n=60):
        X = rng.standard_normal((n, 2))
        y = np.where(X[:, 0] + 0.3 * X[:, 1] > 0, 1.0, -1.0)
        return X @ X.T, y

    def test_dual_feasible(self, backend, rng):
        K, y = self._problem(rng)
        alpha, rho, it = backend.smo_solve(K, y, 10.0, 1e-3, 100000)
        assert np.all(alpha >= 0) and np.all(alpha <= 10.0 + 1e-12)
        assert abs(alpha @ y) < 1e-6
        assert it > 0

    def test_backends_agree(self, backend, rng):
        K, y = self._problem(rng)
        a1, r1, _ = backend.smo_solve(K, y, 1.0, 1e-5, 100000)
        a2, r2, _ = _pykernels.smo_solve(K, y, 1.0, 1e-5, 100000)
        np.testing.assert_allclose(a1, a2, atol=1e-6)
        assert abs(r1 - r2) < 1e-6


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, st.integers(1, 60), elements=st.floats(-1e3, 1e3)),
    st.integers(1, 10),
)
def test_neighbor_sum_property(f, l):
    for mod in (_pykernels, _kernels):
        np.testing.assert_allclose(mod.neighbor_sum(f, l), _neighbor_sum_loop(f, l),
                                   atol=1e-8, rtol=1e-10)


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, st.integers(1, 40), elements=st.floats(-100, 100)),
    st.floats(0, 50),
)
def test_soft_threshold_is_prox(x, t):
    # prox of t|.|: output never larger in modulus, shrink is exactly t or to zero
    out = _kernels.soft_threshold(x.astype(complex), t)
    mag_in, mag_out = np.abs(x), np.abs(out)
    assert np.all(mag_out <= mag_in + 1e-12)
    np.testing.assert_allclose(mag_out, np.maximum(mag_in - t, 0), atol=1e-9)
