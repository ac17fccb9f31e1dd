"""Rough carrier-frequency and symbol-rate estimates from discrete-line positions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .npt import Peak, PeakSet
from .sigsyn import ModulationType

__all__ = [
    "ParamEstimate",
    "LineAssignmentError",
    "InsufficientPeaksError",
    "LineStructure",
    "line_structure",
    "default_order",
    "line_assignment",
    "estimate_params",
    "estimate_with_center",
]

MATCH_TOL_BINS = 2


class LineAssignmentError(ValueError):
    """No peak pair is symmetric about the centre line within tolerance."""


class InsufficientPeaksError(ValueError):
    def __init__(self, message: str, partial: "ParamEstimate | None" = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class LineStructure:
    has_center: bool
    spacing: float  # offset of the innermost side pair, in units of R_s


_STRUCTURE: dict[tuple[ModulationType, int], LineStructure] = {}
for _m in (ModulationType.BPSK, ModulationType.QPSK, ModulationType.PSK8):
    for _n in (2, 4, 8):
        if _n % _m.order == 0:  # lines need N to be a multiple of the phase count
            _STRUCTURE[(_m, _n)] = LineStructure(True, 1.0)
_STRUCTURE.update(
    {
        (ModulationType.OQPSK, 2): LineStructure(False, 1.0),
        (ModulationType.OQPSK, 4): LineStructure(True, 2.0),  # odd harmonics cancel
        (ModulationType.MSK, 2): LineStructure(False, 0.5),
        (ModulationType.MSK, 4): LineStructure(False, 1.0),
    }
)

_DEFAULT_ORDER = {
    ModulationType.BPSK: 2,
    ModulationType.QPSK: 4,
    ModulationType.PSK8: 8,
    ModulationType.OQPSK: 2,
    ModulationType.MSK: 2,
}


def line_structure(modulation: ModulationType | str, order: int) -> LineStructure:
    mod = ModulationType.parse(modulation)
    try:
        return _STRUCTURE[(mod, int(order))]
    except KeyError:
        raise ValueError(f"{mod} has no discrete lines at order {order}") from None


def default_order(modulation: ModulationType | str) -> int:
    """Lowest NPT order whose lines locate both f_c and R_s for the class."""
    return _DEFAULT_ORDER[ModulationType.parse(modulation)]


@dataclass
class ParamEstimate:
    fc_hat: float
    rs_hat: float | None
    order_used: int
    peaks_used: PeakSet
    method: str
    partial: bool = False
    fc_side_avg: float | None = None
    lines: dict[str, Peak] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "fc_hat": self.fc_hat,
            "rs_hat": self.rs_hat,
            "order_used": self.order_used,
            "method": self.method,
            "partial": self.partial,
            "fc_side_avg": self.fc_side_avg,
            "lines": {k: p.freq_hz for k, p in self.lines.items()},
            "peaks": self.peaks_used.to_dict(),
        }


def _tol_hz(peaks: PeakSet, tol_bins: float) -> float:
    return tol_bins * peaks.bin_width


def _best_pair(
    others: list[Peak], center: float, tol: float
) -> tuple[Peak, Peak] | None:
    best = None
    best_key = None
    for a in range(len(others)):
        for b in range(a + 1, len(others)):
            p, q = others[a], others[b]
            asym = abs(p.freq_hz + q.freq_hz - 2.0 * center)
            if asym > tol or abs(p.freq_hz - q.freq_hz) <= tol:
                continue
            key = (-(p.magnitude + q.magnitude), asym)
            if best_key is None or key < best_key:
                best, best_key = (p, q), key
    if best is None:
        return None
    lo, hi = sorted(best, key=lambda pk: pk.freq_hz)
    return lo, hi


def line_assignment(
    peaks: PeakSet,
    modulation: ModulationType | str,
    order: int,
    tol_bins: float = MATCH_TOL_BINS,
    center_hint: float | None = None,
) -> dict[str, Peak]:
    """Label peaks as ``center``, ``side-1``/``side+1``, ``side-2``/``side+2``.

    For classes with a centre line the strongest peak is the centre and the
    strongest pair symmetric about it gives the first side pair. Without a
    centre line (OQPSK and MSK at order 2, MSK at order 4) the two strongest
    peaks are the side pair. A centre with no symmetric partner among the
    other peaks raises :class:`LineAssignmentError`; a lone centre is
    returned as a partial assignment. ``center_hint`` (Hz, at this order)
    replaces the top-two rule for centre-less structures by the strongest
    pair symmetric about the hint.
    """
    mod = ModulationType.parse(modulation)
    struct = line_structure(mod, order)
    tol = _tol_hz(peaks, tol_bins)
    plist = sorted(peaks.peaks, key=lambda pk: -pk.magnitude)
    if not plist:
        raise LineAssignmentError("no peaks to assign")

    labels: dict[str, Peak] = {}
    if struct.has_center:
        center = plist[0]
        labels["center"] = center
        others = plist[1:]
        if not others:
            return labels
        pair = _best_pair(others, center.freq_hz, tol)
        if pair is None:
            raise LineAssignmentError(
                f"no peak pair symmetric about {center.freq_hz:.2f} Hz within {tol:.3g} Hz"
            )
        labels["side-1"], labels["side+1"] = pair
        c = center.freq_hz
    elif center_hint is not None:
        pair = _best_pair(plist, float(center_hint), tol)
        if pair is None:
            raise LineAssignmentError(
                f"no peak pair symmetric about {center_hint:.2f} Hz within {tol:.3g} Hz"
            )
        lo, hi = pair
        labels["side-1"], labels["side+1"] = lo, hi
        c = 0.5 * (lo.freq_hz + hi.freq_hz)
        others = [pk for pk in plist if pk not in pair]
    else:
        if len(plist) < 2:
            raise LineAssignmentError("a side pair needs two peaks")
        lo, hi = sorted(plist[:2], key=lambda pk: pk.freq_hz)
        labels["side-1"], labels["side+1"] = lo, hi
        c = 0.5 * (lo.freq_hz + hi.freq_hz)
        others = plist[2:]

    # outer pair at twice the inner offset (the "or 5" case)
    inner = 0.5 * (labels["side+1"].freq_hz - labels["side-1"].freq_hz)
    rest = [pk for pk in others if pk not in (labels["side-1"], labels["side+1"])]
    lo2 = [pk for pk in rest if abs(pk.freq_hz - (c - 2 * inner)) <= tol]
    hi2 = [pk for pk in rest if abs(pk.freq_hz - (c + 2 * inner)) <= tol]
    if lo2 and hi2:
        labels["side-2"] = max(lo2, key=lambda pk: pk.magnitude)
        labels["side+2"] = max(hi2, key=lambda pk: pk.magnitude)
    return labels


def estimate_params(
    peaks: PeakSet,
    modulation: ModulationType | str,
    order: int | None = None,
    *,
    strict_eq16: bool = False,
    tol_bins: float = MATCH_TOL_BINS,
    center_hint: float | None = None,
) -> ParamEstimate:
    """Estimate f_c and R_s from the line positions of one NPT order.

    With a centre line at ``N f_c``: ``fc = center / N`` cross-checked
    against ``(A2 + A3) / (2N)``; ``R_s = |A2 - A3| / (2 * spacing)`` where
    ``spacing`` is the side-pair offset in units of R_s (1 for MPSK, 2 for
    OQPSK at order 4, 0.5 for MSK at order 2). ``strict_eq16`` instead returns
    ``|center - A2| / 2``, which equals R_s/2 on ideal line positions.
    ``center_hint`` is passed to :func:`line_assignment`.
    """
    mod = ModulationType.parse(modulation)
    n = default_order(mod) if order is None else int(order)
    struct = line_structure(mod, n)
    if len(peaks) == 0:
        raise InsufficientPeaksError("no peaks detected")

    try:
        labels = line_assignment(peaks, mod, n, tol_bins, center_hint)
    except LineAssignmentError as exc:
        if struct.has_center:
            center = max(peaks.peaks, key=lambda pk: pk.magnitude)
            return ParamEstimate(center.freq_hz / n, None, n, peaks, "center", True,
                                 lines={"center": center})
        raise InsufficientPeaksError(str(exc)) from exc

    lo, hi = labels.get("side-1"), labels.get("side+1")
    if "center" in labels:
        center = labels["center"]
        fc = center.freq_hz / n
        if lo is None:
            return ParamEstimate(fc, None, n, peaks, "center", True, lines=labels)
        fc_side = (lo.freq_hz + hi.freq_hz) / (2 * n)
        if strict_eq16:
            rs = abs(center.freq_hz - lo.freq_hz) / 2.0
        else:
            rs = abs(hi.freq_hz - lo.freq_hz) / (2.0 * struct.spacing)
        return ParamEstimate(fc, rs, n, peaks, "cross-check", False, fc_side, labels)

    fc = (lo.freq_hz + hi.freq_hz) / (2 * n)
    rs = abs(hi.freq_hz - lo.freq_hz) / (2.0 * struct.spacing)
    return ParamEstimate(fc, rs, n, peaks, "side-average", False, fc, labels)


def estimate_with_center(
    peaks: PeakSet,
    center_peaks: PeakSet,
    center_order: int,
    modulation: ModulationType | str,
    order: int,
    tol_bins: float = MATCH_TOL_BINS,
) -> ParamEstimate:
    """Side-pair estimate at ``order`` anchored on the strongest line of another order.

    Used for classes whose side pair has no centre line (e.g. OQPSK at order
    2, anchored on its order-4 centre): the anchor fixes ``N f_c`` so that
    spurious peaks cannot be mistaken for the pair. Falls back to the plain
    estimate when the anchor set is empty or no symmetric pair exists.
    """
    if len(center_peaks) == 0:
        return estimate_params(peaks, modulation, order, tol_bins=tol_bins)
    anchor = max(center_peaks.peaks, key=lambda pk: pk.magnitude).freq_hz / center_order
    try:
        return estimate_params(peaks, modulation, order, tol_bins=tol_bins,
                               center_hint=anchor * order)
    except InsufficientPeaksError:
        return estimate_params(peaks, modulation, order, tol_bins=tol_bins)
