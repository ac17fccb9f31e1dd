import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subnyq_amr.estimate import (
    InsufficientPeaksError,
    LineAssignmentError,
    default_order,
    estimate_params,
    estimate_with_center,
    line_assignment,
)
from subnyq_amr.npt import Peak, PeakSet, detect_peaks, expected_peak_count, nyquist_spectrum
from subnyq_amr.sigsyn import ModulationType, paper_profile, synthesize

BW = 6400 / 8192


def peakset(freqs_mags, bw=BW, length=8192):
    peaks = [Peak(float(f), int(round(f / bw)), float(m)) for f, m in freqs_mags]
    peaks.sort(key=lambda p: -p.magnitude)
    return PeakSet(peaks, 0.0, 0.1, bw, length)


class TestEstimateParams:
    def test_qpsk_example(self):
        est = estimate_params(peakset([(2000, 10), (1200, 3), (2800, 3)]), "QPSK", 4)
        assert est.fc_hat == pytest.approx(500) and est.rs_hat == pytest.approx(800)
        assert est.method == "cross-check" and est.fc_side_avg == pytest.approx(500)

    def test_bpsk_example(self):
        est = estimate_params(peakset([(1000, 10), (200, 2), (1800, 2)]), "BPSK")
        assert (est.fc_hat, est.rs_hat, est.order_used) == (500, 800, 2)

    def test_center_only_partial(self):
        est = estimate_params(peakset([(2000, 10)]), "QPSK", 4)
        assert est.partial and est.rs_hat is None and est.fc_hat == 500

    def test_strict_eq16(self):
        est = estimate_params(peakset([(2000, 10), (1200, 3), (2800, 3)]), "QPSK", 4,
                              strict_eq16=True)
        assert est.rs_hat == pytest.approx(400)

    def test_msk_half_offset(self):
        est = estimate_params(peakset([(600, 5), (1400, 5)]), "MSK", 2)
        assert est.fc_hat == pytest.approx(500) and est.rs_hat == pytest.approx(800)
        assert est.method == "side-average"

    def test_empty(self):
        with pytest.raises(InsufficientPeaksError):
            estimate_params(peakset([]), "BPSK")

    def test_centerless_single_peak(self):
        with pytest.raises(InsufficientPeaksError):
            estimate_params(peakset([(600, 5)]), "MSK", 2)

    def test_asymmetric_falls_back_to_center(self):
        est = estimate_params(peakset([(1000, 10), (1300, 3), (1900, 2)]), "BPSK", 2)
        assert est.partial and est.method == "center"

    def test_default_orders(self):
        assert [default_order(m) for m in ModulationType] == [2, 4, 8, 2, 2]

    def test_no_lines(self):
        with pytest.raises(ValueError):
            estimate_params(peakset([(1, 1)]), "8PSK", 4)

    def test_scale_invariant(self):
        a = estimate_params(peakset([(2000, 10), (1200, 3), (2800, 3)]), "QPSK", 4)
        b = estimate_params(peakset([(2000, 1e-3), (1200, 3e-4), (2800, 3e-4)]), "QPSK", 4)
        assert (a.fc_hat, a.rs_hat) == (b.fc_hat, b.rs_hat)

    def test_anchor_rejects_spurious(self):
        # strongest two order-2 peaks are not the OQPSK pair; the order-4 anchor fixes it
        order2 = peakset([(400, 9), (1700, 8), (200, 6), (1800, 6)])
        order4 = peakset([(2000, 20)])
        est = estimate_with_center(order2, order4, 4, "OQPSK", 2)
        assert est.fc_hat == pytest.approx(500) and est.rs_hat == pytest.approx(800)
        plain = estimate_params(order2, "OQPSK", 2)
        assert plain.rs_hat != pytest.approx(800)


class TestLineAssignment:
    def test_canonical(self):
        lab = line_assignment(peakset([(1000, 10), (200, 2), (1800, 2)]), "BPSK", 2)
        assert {k: v.freq_hz for k, v in lab.items()} == {
            "center": 1000, "side-1": 200, "side+1": 1800}

    def test_five_lines(self):
        ps = peakset([(4000, 10), (3200, 3), (4800, 3), (2400, 1), (5600, 1)])
        lab = line_assignment(ps, "QPSK", 8)
        assert lab["side-2"].freq_hz == 2400 and lab["side+2"].freq_hz == 5600

    def test_asymmetric_failure(self):
        with pytest.raises(LineAssignmentError):
            line_assignment(peakset([(1000, 10), (1300, 3), (1900, 2)]), "BPSK", 2)

    def test_tolerance_two_bins(self):
        ps = peakset([(1000, 10), (200, 2), (1800 + 1.9 * BW, 2)])
        assert "side+1" in line_assignment(ps, "BPSK", 2)
        ps = peakset([(1000, 10), (200, 2), (1800 + 2.5 * BW, 2)])
        with pytest.raises(LineAssignmentError):
            line_assignment(ps, "BPSK", 2)


@pytest.mark.parametrize("mod,n", [("BPSK", 2), ("BPSK", 4), ("BPSK", 8), ("QPSK", 4),
                                   ("QPSK", 8), ("8PSK", 8), ("MSK", 2), ("MSK", 4),
                                   ("OQPSK", 2)])
def test_oracle_accuracy(mod, n):
    p = paper_profile(seed=0)
    spec = nyquist_spectrum(synthesize(mod, p), n)
    est = estimate_params(detect_peaks(spec), mod, n)
    L = p.length
    assert abs(est.fc_hat - p.f_c) <= p.f_s / (n * L)
    assert abs(est.rs_hat - p.R_s) <= 2 * p.f_s / L
    if est.fc_side_avg is not None:
        assert abs(est.fc_side_avg - est.fc_hat) <= p.f_s / (n * L) + 1e-9


@settings(max_examples=60, deadline=None)
@given(st.floats(100, 700), st.floats(100, 900), st.sampled_from([2, 4, 8]),
       st.floats(0.1, 10))
def test_ideal_lines_property(fc, rs, n, scale):
    centre = n * fc
    ps = peakset([(centre, 5 * scale), (centre - rs, scale), (centre + rs, scale)],
                 bw=0.5, length=100000)
    est = estimate_params(ps, "BPSK", n)
    assert est.fc_hat == pytest.approx(fc) and est.rs_hat == pytest.approx(rs)
    assert 0 <= est.fc_hat < ps.bin_width * ps.length / n
