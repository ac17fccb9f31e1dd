"""Nth-power nonlinear transform, full-rate spectra and discrete-line detection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
from scipy.ndimage import maximum_filter1d, median_filter

from . import _kernels
from .sigsyn import BasebandRecord, ModulationType

__all__ = [
    "VALID_ORDERS",
    "SpectrumEstimate",
    "Peak",
    "PeakSet",
    "UnspecifiedCellError",
    "raise_power",
    "unitary_dft",
    "unitary_idft",
    "nyquist_spectrum",
    "detect_peaks",
    "expected_peak_count",
    "line_frequencies",
]

VALID_ORDERS = (1, 2, 4, 8)

DEFAULT_ETA = 0.1
MERGE_RADIUS = 3
CONTRAST = 6.0
CONTRAST_WINDOW = 32


def _check_order(order: int) -> int:
    n = int(order)
    if n not in VALID_ORDERS:
        raise ValueError(f"NPT order must be one of {VALID_ORDERS}, got {order!r}")
    return n


def unitary_dft(x: np.ndarray) -> np.ndarray:
    return np.fft.fft(x, norm="ortho")


def unitary_idft(f: np.ndarray) -> np.ndarray:
    return np.fft.ifft(f, norm="ortho")


@dataclass
class SpectrumEstimate:
    """Length-L DFT coefficients of an Nth-power signal on the grid k*f_s/L."""

    coeffs: np.ndarray
    order: int
    f_s: float
    smoothed: bool = False
    report: Any = None
    smoothed_view: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        self.order = _check_order(self.order)

    @property
    def length(self) -> int:
        return int(self.coeffs.shape[0])

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.length) * (self.f_s / self.length)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.coeffs)

    @property
    def bin_width(self) -> float:
        return self.f_s / self.length

    def bin_of(self, freq_hz: float) -> int:
        return int(round(freq_hz / self.bin_width)) % self.length

    def view(self, smoothed: bool = False) -> np.ndarray:
        """Coefficients, or the smoothed ``B f`` view when one was computed."""
        if smoothed and self.smoothed_view is not None:
            return self.smoothed_view
        return self.coeffs


class Peak(NamedTuple):
    freq_hz: float
    bin: int
    magnitude: float


@dataclass
class PeakSet:
    peaks: list[Peak] = field(default_factory=list)
    threshold: float = 0.0
    eta: float = DEFAULT_ETA
    bin_width: float = 1.0
    length: int = 0

    def __len__(self) -> int:
        return len(self.peaks)

    def __iter__(self):
        return iter(self.peaks)

    def __getitem__(self, i: int) -> Peak:
        return self.peaks[i]

    @property
    def freqs(self) -> np.ndarray:
        return np.array([p.freq_hz for p in self.peaks])

    def to_dict(self) -> dict[str, Any]:
        return {
            "threshold": self.threshold,
            "eta": self.eta,
            "bin_width_hz": self.bin_width,
            "length": self.length,
            "count": len(self.peaks),
            "peaks": [
                {"freq_hz": p.freq_hz, "bin": p.bin, "magnitude": p.magnitude}
                for p in self.peaks
            ],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PeakSet":
        peaks = [Peak(float(p["freq_hz"]), int(p["bin"]), float(p["magnitude"])) for p in d["peaks"]]
        return cls(
            peaks=peaks,
            threshold=float(d.get("threshold", 0.0)),
            eta=float(d.get("eta", DEFAULT_ETA)),
            bin_width=float(d.get("bin_width_hz", 1.0)),
            length=int(d.get("length", 0)),
        )


def raise_power(samples: np.ndarray, order: int) -> np.ndarray:
    """Elementwise ``z**N``; ``N=1`` returns a copy."""
    n = _check_order(order)
    z = np.asarray(samples, dtype=np.complex128)
    out = z.copy()
    for _ in range(n.bit_length() - 1):  # repeated squaring, N is a power of two
        out *= out
    return out


def nyquist_spectrum(record: BasebandRecord, order: int) -> SpectrumEstimate:
    """Unitary DFT of the Nth-power full-rate record (the oracle spectrum)."""
    if record.length < 256:
        raise ValueError("record must hold at least 256 samples")
    zn = raise_power(record.samples, order)
    return SpectrumEstimate(unitary_dft(zn), order, record.params.f_s)


def detect_peaks(
    spectrum: SpectrumEstimate | np.ndarray,
    eta: float = DEFAULT_ETA,
    *,
    f_s: float | None = None,
    merge_radius: int = MERGE_RADIUS,
    contrast: float | None = CONTRAST,
    window: int = CONTRAST_WINDOW,
    reference: float | None = None,
    smoothed: bool = False,
) -> PeakSet:
    """Discrete spectral lines of ``|spectrum|``.

    A bin is kept when it is the maximum within ``merge_radius`` bins, its
    magnitude is at least ``eta * max|spectrum|`` (or ``eta * reference``),
    and, unless ``contrast`` is None, it exceeds ``contrast`` times the
    median magnitude of the surrounding ``+-window`` bins. Maxima closer than
    ``merge_radius`` are merged keeping the strongest. Frequencies wrap on
    ``[0, f_s)``.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    if isinstance(spectrum, SpectrumEstimate):
        coeffs = spectrum.view(smoothed)
        f_s = spectrum.f_s
    else:
        coeffs = np.asarray(spectrum)
        if f_s is None:
            f_s = float(coeffs.shape[0])
    mags = np.abs(coeffs).astype(np.float64)
    n = mags.shape[0]
    bw = f_s / n
    top = float(mags.max()) if n else 0.0
    if top <= 0.0:
        return PeakSet([], 0.0, eta, bw, n)

    level = top if reference is None else float(reference)
    threshold = eta * level
    local_max = mags >= maximum_filter1d(mags, size=2 * merge_radius + 1, mode="wrap")
    ok = local_max & (mags >= threshold) & (mags > 0)
    if contrast is not None:
        med = median_filter(mags, size=2 * window + 1, mode="wrap")
        ok &= mags >= contrast * med
    cand = np.flatnonzero(ok)
    kept = _kernels.suppress_nonmax(mags, cand, merge_radius, True)
    peaks = [Peak(float(k * bw), int(k), float(mags[k])) for k in kept]
    return PeakSet(peaks, threshold, eta, bw, n)


class UnspecifiedCellError(LookupError):
    """The requested (modulation, order) pair is marked '-' (unspecified)."""


# Number of discrete peaks per (modulation, order); "3(or 5)" -> {3, 5}.
_PEAK_TABLE: dict[tuple[ModulationType, int], frozenset[int] | None] = {}
for _m in ModulationType:
    _PEAK_TABLE[(_m, 1)] = frozenset({0})
_PEAK_TABLE.update(
    {
        (ModulationType.BPSK, 2): frozenset({3}),
        (ModulationType.QPSK, 2): frozenset({0}),
        (ModulationType.PSK8, 2): frozenset({0}),
        (ModulationType.OQPSK, 2): frozenset({2}),
        (ModulationType.MSK, 2): frozenset({2}),
        (ModulationType.BPSK, 4): frozenset({3, 5}),
        (ModulationType.QPSK, 4): frozenset({3, 5}),
        (ModulationType.PSK8, 4): frozenset({0}),
        (ModulationType.OQPSK, 4): frozenset({3, 5}),
        (ModulationType.MSK, 4): frozenset({2}),
        (ModulationType.BPSK, 8): frozenset({3, 5}),
        (ModulationType.QPSK, 8): frozenset({3, 5}),
        (ModulationType.PSK8, 8): frozenset({3, 5}),
        (ModulationType.OQPSK, 8): None,
        (ModulationType.MSK, 8): None,
    }
)


def expected_peak_count(modulation: ModulationType | str, order: int) -> frozenset[int]:
    """Admissible discrete-peak counts for a (modulation, order) cell."""
    mod = ModulationType.parse(modulation)
    n = _check_order(order)
    cell = _PEAK_TABLE[(mod, n)]
    if cell is None:
        raise UnspecifiedCellError(f"peak count for {mod} at order {n} is unspecified")
    return cell


def line_frequencies(
    modulation: ModulationType | str, order: int, f_c: float, R_s: float, k_max: int = 2
) -> list[float]:
    """Candidate discrete-line frequencies N f_c + k R_s (or half offsets for MSK^2)."""
    mod = ModulationType.parse(modulation)
    n = _check_order(order)
    cells = expected_peak_count(mod, n)
    if cells == frozenset({0}):
        return []
    if mod is ModulationType.MSK:
        offsets = [-0.5, 0.5] if n == 2 else [-1.0, 1.0]
    elif mod is ModulationType.OQPSK:
        offsets = [-1.0, 1.0] if n == 2 else [float(k) for k in range(-k_max, k_max + 1) if k % 2 == 0]
    else:
        offsets = [float(k) for k in range(-k_max, k_max + 1)]
    return [n * f_c + k * R_s for k in offsets]
