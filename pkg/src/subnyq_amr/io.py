"""On-disk formats: sample records, spectra, peak reports and measurement models."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from .npt import PeakSet, SpectrumEstimate
from .sensing import MeasurementModel, MeasurementVector
from .sigsyn import BasebandRecord, ModulationType, SignalParams

__all__ = [
    "write_record",
    "read_record",
    "write_measurement",
    "read_measurement",
    "read_samples_file",
    "write_spectrum_csv",
    "read_spectrum_csv",
    "write_peaks_json",
    "write_model_json",
    "read_model_json",
]

_LE_F64 = np.dtype("<f8")


def _write_blob(path: str | Path, header: dict[str, Any], data: np.ndarray) -> None:
    z = np.asarray(data, dtype=np.complex128)
    inter = np.empty(2 * z.shape[0], dtype=_LE_F64)
    inter[0::2] = z.real
    inter[1::2] = z.imag
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(inter.tobytes())


def _read_blob(path: str | Path) -> tuple[dict[str, Any], np.ndarray]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = fh.read()
    if len(raw) % 16:
        raise ValueError(f"{path}: payload is not a whole number of complex samples")
    inter = np.frombuffer(raw, dtype=_LE_F64)
    z = inter[0::2] + 1j * inter[1::2]
    n = header.get("length")
    if n is not None and int(n) != z.shape[0]:
        raise ValueError(f"{path}: header declares {n} samples, found {z.shape[0]}")
    return header, z


def write_record(record: BasebandRecord, path: str | Path) -> None:
    """JSON header line (params, modulation, meta) then little-endian (re, im) float64 pairs."""
    header = {
        "type": "record",
        "modulation": record.modulation.value,
        "params": record.params.to_dict(),
        "length": record.length,
        "meta": record.meta,
    }
    _write_blob(path, header, record.samples)


def read_record(path: str | Path) -> BasebandRecord:
    header, z = _read_blob(path)
    if header.get("type", "record") != "record":
        raise ValueError(f"{path} is not a sample record")
    return BasebandRecord(
        z, SignalParams.from_dict(header["params"]),
        ModulationType.parse(header["modulation"]), dict(header.get("meta", {})),
    )


def write_measurement(mv: MeasurementVector, path: str | Path, f_s: float) -> None:
    header = {
        "type": "measurement",
        "order": mv.order,
        "f_s": f_s,
        "model": mv.model.to_dict(),
        "length": int(mv.y.shape[0]),
    }
    _write_blob(path, header, mv.y)


def read_measurement(path: str | Path) -> tuple[MeasurementVector, float]:
    header, y = _read_blob(path)
    if header.get("type") != "measurement":
        raise ValueError(f"{path} is not a measurement file")
    model = MeasurementModel.from_dict(header["model"])
    return MeasurementVector(y, model, int(header["order"])), float(header["f_s"])


def read_samples_file(path: str | Path) -> tuple[str, Any]:
    """Dispatch on the header: ``("record", BasebandRecord)`` or ``("measurement", (mv, f_s))``."""
    with open(path, "rb") as fh:
        kind = json.loads(fh.readline().decode("utf-8")).get("type", "record")
    if kind == "measurement":
        return kind, read_measurement(path)
    return "record", read_record(path)


def write_spectrum_csv(spec: SpectrumEstimate, path: str | Path, smoothed: bool = False) -> None:
    """Columns ``bin, freq_hz, re, im, mag``."""
    c = spec.view(smoothed)
    freqs = spec.freqs
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin", "freq_hz", "re", "im", "mag"])
        for k in range(c.shape[0]):
            w.writerow([k, repr(float(freqs[k])), repr(float(c[k].real)),
                        repr(float(c[k].imag)), repr(float(abs(c[k])))])


def read_spectrum_csv(path: str | Path, order: int, f_s: float | None = None) -> SpectrumEstimate:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    coeffs = data[:, 2] + 1j * data[:, 3]
    if f_s is None:
        if data.shape[0] < 2:
            raise ValueError("f_s is required for a single-bin spectrum")
        f_s = float(data[1, 1] - data[0, 1]) * data.shape[0]
    return SpectrumEstimate(coeffs, int(order), float(f_s))


def write_peaks_json(peaks: PeakSet, path: str | Path, extra: dict[str, Any] | None = None) -> None:
    d = peaks.to_dict()
    if extra:
        d.update(extra)
    with open(path, "w") as fh:
        json.dump(d, fh, indent=2)


def write_model_json(model: MeasurementModel, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=2)


def read_model_json(path: str | Path) -> MeasurementModel:
    with open(path) as fh:
        return MeasurementModel.from_dict(json.load(fh))
