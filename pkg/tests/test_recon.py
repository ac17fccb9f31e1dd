import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subnyq_amr.npt import detect_peaks, line_frequencies, nyquist_spectrum, unitary_dft
from subnyq_amr.recon import (
    ConvergenceError,
    SolverConfig,
    blind_noise_estimate,
    build_smoothing,
    epsilon_for_noise,
    npt_noise_power,
    reconstruct_order,
    solve_bp,
)
from subnyq_amr.sensing import forward_operator, make_model, measure, row_selection
from subnyq_amr.sigsyn import desk_profile, synthesize


def smoothing_loop(f, l):
    """Scalar evaluation of f_i - (1/2l) * sum_{0<|j-i|<=l} f_j with truncated boundaries."""
    n = len(f)
    out = np.empty(n, dtype=complex)
    for i in range(n):
        acc = 0j
        for j in range(i - l, i + l + 1):
            if j != i and 0 <= j < n:
                acc += f[j]
        out[i] = f[i] - acc / (2 * l)
    return out


def planted(rng, L, k):
    f = np.zeros(L, complex)
    idx = rng.choice(L, k, replace=False)
    f[idx] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return f


class TestSmoothing:
    def test_matches_loop(self, rng):
        B = build_smoothing(64, 4)
        for _ in range(100):
            f = rng.standard_normal(64) + 1j * rng.standard_normal(64)
            np.testing.assert_allclose(B.apply(f), smoothing_loop(f, 4), atol=1e-12, rtol=0)

    def test_constant_interior_zero(self):
        B = build_smoothing(64, 4)
        out = B.apply(np.full(64, 3.0))
        assert np.all(out[4:60] == 0)
        assert np.all(out[:4] != 0)  # truncated rows do not renormalize

    def test_impulse_row_pattern(self):
        B = build_smoothing(32, 3)
        e = np.zeros(32)
        e[10] = 1.0
        out = B.apply(e).real
        assert out[10] == 1.0
        np.testing.assert_allclose(out[[7, 8, 9, 11, 12, 13]], -1 / 6)
        assert np.count_nonzero(out) == 7

    def test_dense_rows(self):
        D = build_smoothing(20, 2).as_dense()
        assert np.all(D.sum(axis=1)[2:18] == 0)
        np.testing.assert_allclose(D[0], [1, -0.25, -0.25] + [0] * 17)

    def test_renormalized_rows_sum_zero(self):
        D = build_smoothing(20, 3, renormalize=True).as_dense()
        np.testing.assert_allclose(D.sum(axis=1), 0, atol=1e-12)

    def test_adjoint(self, rng):
        B = build_smoothing(50, 5, renormalize=True)
        np.testing.assert_allclose(B.as_dense().T @ np.eye(50)[:, 7],
                                   B.adjoint(np.eye(50)[:, 7]).real, atol=1e-14)

    def test_norm_bound(self):
        for rn in (False, True):
            D = build_smoothing(64, 5, rn).as_dense()
            assert np.linalg.norm(D, 2) <= build_smoothing(64, 5, rn).norm_bound + 1e-12

    @pytest.mark.parametrize("l", [0, 17])
    def test_range(self, l):
        with pytest.raises(ValueError):
            build_smoothing(64, l)


class TestSolveBp:
    def test_exact_recovery(self, rng):
        L = 512
        model = make_model("row-selection", L, 0.3, seed=1)
        op = forward_operator(model)
        f = planted(rng, L, 8)
        est = solve_bp(op, op.matvec(f), max_iter=3000, tol=1e-8)
        assert np.linalg.norm(est.coeffs - f) / np.linalg.norm(f) < 1e-4
        assert np.sum(np.abs(est.coeffs)) <= np.sum(np.abs(f)) + 1e-6
        y = op.matvec(f)
        assert est.report.residual <= 1e-6 * np.linalg.norm(y)
        assert est.report.converged and est.report.method == "admm"

    def test_dense_gaussian_recovery(self, rng):
        L = 256
        op = forward_operator(make_model("dense-gaussian", L, 0.35, seed=2))
        f = planted(rng, L, 5)
        est = solve_bp(op, op.matvec(f), max_iter=5000, tol=1e-8)
        assert np.linalg.norm(est.coeffs - f) / np.linalg.norm(f) < 1e-3

    def test_zero_measurements(self):
        op = forward_operator(make_model("row-selection", 64, 0.5))
        est = solve_bp(op, np.zeros(op.shape[0]))
        assert np.all(est.coeffs == 0) and est.report.iterations == 0

    def test_identity_selection(self, rng):
        L = 64
        z = rng.standard_normal(L) + 1j * rng.standard_normal(L)
        model = row_selection(np.arange(L), L)
        est = solve_bp(forward_operator(model), measure(model, z).y)
        np.testing.assert_allclose(est.coeffs, unitary_dft(z), atol=1e-10)

    def test_residual_mode_bound(self, rng):
        L = 256
        op = forward_operator(make_model("row-selection", L, 0.4, seed=3))
        f = planted(rng, L, 6)
        y = op.matvec(f) + 0.01 * rng.standard_normal(op.shape[0])
        eps = 0.2
        est = solve_bp(op, y, "residual", eps, max_iter=3000, tol=1e-6)
        assert est.report.residual <= eps * (1 + 1e-9)

    def test_nonconvergence_carries_iterate(self, rng):
        L = 256
        op = forward_operator(make_model("row-selection", L, 0.3, seed=3))
        y = op.matvec(planted(rng, L, 40))
        with pytest.raises(ConvergenceError) as exc:
            solve_bp(op, y, max_iter=2, tol=1e-12)
        est = exc.value.estimate
        assert est.coeffs.shape == (L,) and not est.report.converged

    def test_bad_inputs(self):
        op = forward_operator(make_model("row-selection", 64, 0.5))
        with pytest.raises(ValueError):
            solve_bp(op, np.ones(5))
        with pytest.raises(ValueError):
            solve_bp(op, np.ones(op.shape[0]), "residual", -1.0)
        with pytest.raises(ValueError):
            solve_bp(op, np.ones(op.shape[0]), "lasso")

    def test_analysis_feasible(self, rng):
        L = 128
        op = forward_operator(make_model("row-selection", L, 0.4, seed=5))
        y = op.matvec(planted(rng, L, 4))
        try:
            est = solve_bp(op, y, analysis=build_smoothing(L, 3), max_iter=500)
        except ConvergenceError as exc:
            est = exc.estimate
        assert np.linalg.norm(op.matvec(est.coeffs) - y) <= 1e-8 * np.linalg.norm(y)
        np.testing.assert_allclose(est.smoothed_view, build_smoothing(L, 3).apply(est.coeffs))


class TestReconstructOrder:
    def test_bpsk_three_lines(self):
        p = desk_profile(seed=0)
        rec = synthesize("BPSK", p)
        model = make_model("row-selection", p.length, 0.3, seed=100)
        est = reconstruct_order(rec, 2, model, SolverConfig(tol=1e-6, max_iter=5000))
        top3 = np.argsort(est.magnitude)[::-1][:3] * est.bin_width
        np.testing.assert_allclose(sorted(top3), line_frequencies("BPSK", 2, 500, 800, 1),
                                   atol=est.bin_width)

    def test_deterministic(self):
        p = desk_profile(seed=1, snr_db=10.0)
        rec = synthesize("QPSK", p)
        model = make_model("row-selection", p.length, 0.3, seed=2)
        cfg = SolverConfig(mode="residual", tol=1e-4, max_iter=2000)
        a = reconstruct_order(rec, 4, model, cfg)
        b = reconstruct_order(rec, 4, model, cfg)
        np.testing.assert_array_equal(a.coeffs, b.coeffs)

    def test_order_one_has_no_lines(self):
        p = desk_profile(seed=2)
        model = make_model("row-selection", p.length, 0.3, seed=3)
        for mod in ("BPSK", "MSK"):
            rec = synthesize(mod, p)
            full = nyquist_spectrum(rec, 1)
            bpsk_ref = nyquist_spectrum(synthesize("BPSK", p), 2).magnitude.max()
            assert len(detect_peaks(full, reference=bpsk_ref)) == 0
            est = reconstruct_order(rec, 1, model, SolverConfig(tol=1e-4, max_iter=3000))
            assert est.order == 1

    def test_measurement_input_requires_fs(self):
        p = desk_profile()
        model = make_model("row-selection", p.length, 0.3)
        mv = measure(model, synthesize("BPSK", p).samples ** 2, 2)
        with pytest.raises(ValueError):
            reconstruct_order(mv, 2, model)
        est = reconstruct_order(mv, 2, model, SolverConfig(tol=1e-4), f_s=p.f_s)
        assert est.f_s == p.f_s

    def test_length_mismatch(self):
        rec = synthesize("BPSK", desk_profile())
        with pytest.raises(ValueError):
            reconstruct_order(rec, 2, make_model("row-selection", 1024, 0.3))


class TestNoiseModel:
    def test_npt_noise_power_order_one(self):
        assert npt_noise_power(1.0, 0.1, 1) == pytest.approx(0.1)

    def test_npt_noise_power_monte_carlo(self, rng):
        n = 400_000
        s = np.exp(2j * np.pi * rng.random(n))
        w = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(0.05)
        for N in (2, 4):
            emp = np.mean(np.abs((s + w) ** N - s**N) ** 2)
            assert emp == pytest.approx(npt_noise_power(1.0, 0.1, N), rel=0.03)

    def test_blind_estimate_constant_envelope(self, rng):
        n = 200_000
        s = np.exp(2j * np.pi * rng.random(n))
        w = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(0.5 * 0.1)
        ps, pn = blind_noise_estimate(s + w, 1.0)
        assert ps == pytest.approx(1.0, rel=0.02) and pn == pytest.approx(0.1, rel=0.1)

    def test_blind_estimate_kurtosis_range(self):
        with pytest.raises(ValueError):
            blind_noise_estimate(np.ones(4), 2.5)

    def test_epsilon(self):
        assert epsilon_for_noise(4.0, 100) == pytest.approx(1.1 * 20)


@pytest.mark.xfail(strict=True, reason=(
    "analysis form leaves a smooth background (B annihilates constants); measured "
    "background l1 is larger than the synthesis solution's in both constraint modes"))
def test_analysis_reduces_background_at_5db():
    wins = 0
    seeds = range(20)
    for seed in seeds:
        p = desk_profile(seed=seed, snr_db=5.0, n_symbols=128)
        rec = synthesize("BPSK", p)
        L = p.length
        model = make_model("row-selection", L, 0.3, seed=seed)
        mask = np.ones(L, bool)
        for f in line_frequencies("BPSK", 2, p.f_c, p.R_s, 1):
            k = int(round(f * L / p.f_s))
            mask[np.arange(k - 3, k + 4) % L] = False
        syn = reconstruct_order(rec, 2, model, SolverConfig(mode="residual", tol=1e-4))
        try:
            ana = reconstruct_order(rec, 2, model,
                                    SolverConfig(mode="residual", tol=1e-4, max_iter=1500, l_half=5))
        except ConvergenceError as exc:
            ana = exc.estimate
        wins += np.sum(np.abs(ana.view(True)[mask])) < np.sum(np.abs(syn.coeffs[mask]))
    assert wins >= 0.8 * len(seeds)


@settings(max_examples=25, deadline=None)
@given(st.integers(32, 160), st.integers(1, 8), st.integers(0, 10_000))
def test_smoothing_property(L, l, seed):
    l = min(l, L // 4)
    r = np.random.default_rng(seed)
    f = r.standard_normal(L) + 1j * r.standard_normal(L)
    B = build_smoothing(L, l)
    np.testing.assert_allclose(B.apply(f), smoothing_loop(f, l), atol=1e-12)
    g = r.standard_normal(L) + 1j * r.standard_normal(L)
    assert abs(np.vdot(g, B.apply(f)) - np.vdot(B.adjoint(g), f)) < 1e-9
