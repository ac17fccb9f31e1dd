"""Top-m magnitude features and the discrete-line energy ratio."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .npt import SpectrumEstimate
from .sigsyn import ModulationType

__all__ = [
    "FEATURE_ORDERS",
    "FeatureVector",
    "EnergyRatio",
    "extract_features",
    "energy_ratio",
    "ENERGY_RADIUS",
]

FEATURE_ORDERS = (2, 4, 8)
ENERGY_RADIUS = 3


@dataclass
class FeatureVector:
    values: np.ndarray
    m: int
    normalization: str = "per-record-energy"
    label: ModulationType | None = None

    def block(self, order: int) -> np.ndarray:
        k = FEATURE_ORDERS.index(order)
        return self.values[k * self.m : (k + 1) * self.m]

    def __len__(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class EnergyRatio:
    r_p: float
    peak_freq: float
    order: int


def _as_coeffs(spec: SpectrumEstimate | np.ndarray | None, smoothed: bool) -> np.ndarray | None:
    if spec is None:
        return None
    if isinstance(spec, SpectrumEstimate):
        return spec.view(smoothed)
    return np.asarray(spec)


def extract_features(
    spectra: Mapping[int, SpectrumEstimate | np.ndarray | None],
    m: int = 20,
    *,
    label: ModulationType | str | None = None,
    smoothed: bool = False,
) -> FeatureVector:
    """Concatenate, for N = 2, 4, 8, the m largest energy-normalized magnitudes.

    Orders missing from ``spectra`` (or mapped to ``None``) contribute a zero
    block so the vector length is always ``3 m``.
    """
    if not spectra:
        raise ValueError("no spectra supplied")
    if m < 5:
        raise ValueError("block size m must be >= 5")
    blocks = []
    for order in FEATURE_ORDERS:
        coeffs = _as_coeffs(spectra.get(order), smoothed)
        block = np.zeros(m)
        if coeffs is not None:
            mags = np.abs(coeffs)
            energy = float(np.sqrt(np.sum(mags * mags)))
            if energy > 0:
                top = np.sort(mags)[::-1][:m] / energy
                block[: top.shape[0]] = top
        blocks.append(block)
    lab = None if label is None else ModulationType.parse(label)
    return FeatureVector(np.concatenate(blocks), m, label=lab)


def energy_ratio(
    spectrum: SpectrumEstimate, peak_freq: float, radius_bins: int = ENERGY_RADIUS
) -> EnergyRatio:
    """Fraction of spectral energy within ``radius_bins`` of the bin nearest ``peak_freq``."""
    if not 0.0 <= peak_freq < spectrum.f_s:
        raise ValueError("peak frequency must lie in [0, f_s)")
    power = np.abs(spectrum.coeffs) ** 2
    total = float(power.sum())
    if total <= 0:
        raise ValueError("spectrum has zero energy")
    L = spectrum.length
    k = spectrum.bin_of(peak_freq)
    idx = np.arange(k - radius_bins, k + radius_bins + 1) % L
    return EnergyRatio(float(power[np.unique(idx)].sum() / total), float(peak_freq), spectrum.order)
