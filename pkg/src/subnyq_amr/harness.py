"""Monte Carlo runner: dataset generation, SNR sweeps and Nyquist/sub-Nyquist comparison."""

from __future__ import annotations

import csv
import json
import logging
import platform
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import yaml

from . import __version__
from .classify import KernelSpec, SvmModel, predict_many, train
from .estimate import (
    InsufficientPeaksError,
    ParamEstimate,
    default_order,
    estimate_params,
    estimate_with_center,
)
from .features import extract_features
from .npt import SpectrumEstimate, detect_peaks, nyquist_spectrum
from .recon import ConvergenceError, SolverConfig, reconstruct_order
from .sensing import MeasurementModel, make_model
from .sigsyn import ALL_CLASSES, BasebandRecord, ModulationType, SignalParams, add_awgn, synthesize

__all__ = [
    "ExperimentConfig",
    "TrialResult",
    "SweepResult",
    "trial_seed",
    "measurement_model",
    "spectra_for",
    "run_trial",
    "build_dataset",
    "train_model",
    "run_sweep",
    "crossing_snr",
    "write_results_csv",
    "write_dataset_csv",
    "read_dataset_csv",
]

log = logging.getLogger(__name__)

MODES = ("nyquist", "sub-nyquist")
_STREAM_TEST = 0
_STREAM_TRAIN = 1


def _default_solver() -> SolverConfig:
    return SolverConfig(mode="residual", max_iter=1500, tol=1e-4)


@dataclass
class ExperimentConfig:
    classes: list[ModulationType] = field(default_factory=lambda: list(ALL_CLASSES))
    snr_grid: list[float] = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0])
    beta: float = 0.3
    n_symbols: int = 256
    f_c: float = 500.0
    R_s: float = 800.0
    f_s: float = 6400.0
    alpha: float = 0.5
    trials_per_point: int = 100
    m: int = 20
    solver: SolverConfig = field(default_factory=_default_solver)
    base_seed: int = 2024
    sampling_mode: str = "both"  # nyquist | sub-nyquist | both
    measurement_kind: str = "row-selection"
    measurement_seed: int = 7
    train_snrs: list[float] = field(default_factory=lambda: [5.0, 10.0, 15.0, 20.0])
    train_trials: int = 50
    svm_c: float = 10.0
    strict: bool = True
    eta: float = 0.1
    orders: list[int] = field(default_factory=lambda: [2, 4, 8])
    workers: int = 1

    def __post_init__(self) -> None:
        self.classes = [ModulationType.parse(c) for c in self.classes]
        self.snr_grid = [float(s) for s in self.snr_grid]
        self.train_snrs = [float(s) for s in self.train_snrs]
        self.orders = sorted(int(o) for o in self.orders)
        if isinstance(self.solver, dict):
            self.solver = SolverConfig.from_dict(self.solver)
        self.validate()

    def validate(self) -> None:
        if self.trials_per_point < 1:
            raise ValueError("trials_per_point must be >= 1")
        if self.train_trials < 1:
            raise ValueError("train_trials must be >= 1")
        if self.sampling_mode not in MODES + ("both",):
            raise ValueError(f"unknown sampling mode {self.sampling_mode!r}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if not self.classes:
            raise ValueError("at least one class is required")
        if not set(self.orders) <= {2, 4, 8}:
            raise ValueError("feature orders must be drawn from {2, 4, 8}")
        self.params().validate()

    @property
    def modes(self) -> tuple[str, ...]:
        return MODES if self.sampling_mode == "both" else (self.sampling_mode,)

    def params(self, seed: int = 0, snr_db: float | None = None) -> SignalParams:
        return SignalParams(self.f_c, self.R_s, self.f_s, self.alpha, self.n_symbols,
                            1.0, snr_db, seed)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["classes"] = [c.value for c in self.classes]
        d["solver"] = self.solver.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**known)

    @classmethod
    def from_yaml(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh) or {})


def _snr_code(snr_db: float | None) -> int:
    if snr_db is None or not np.isfinite(snr_db):
        return 0
    return int(round((snr_db + 1000.0) * 100.0))


def trial_seed(
    base_seed: int, modulation: ModulationType, snr_db: float | None, trial_index: int,
    stream: int = _STREAM_TEST,
) -> np.random.SeedSequence:
    """Seed for one trial; a pure function of its coordinates."""
    cls_idx = list(ModulationType).index(ModulationType.parse(modulation))
    return np.random.SeedSequence(
        [int(base_seed), int(stream), cls_idx, _snr_code(snr_db), int(trial_index)]
    )


def measurement_model(config: ExperimentConfig) -> MeasurementModel:
    """The single sensing matrix shared by every trial of a config."""
    return make_model(config.measurement_kind, config.params().length, config.beta,
                      config.measurement_seed)


def _make_record(config: ExperimentConfig, mod: ModulationType, snr_db: float | None,
                 ss: np.random.SeedSequence) -> BasebandRecord:
    sym_ss, noise_ss = ss.spawn(2)
    sym_seed = int(sym_ss.generate_state(1)[0])
    rec = synthesize(mod, config.params(seed=sym_seed))
    return add_awgn(rec, snr_db, noise_ss)


def spectra_for(
    record: BasebandRecord,
    orders: Iterable[int],
    mode: str,
    model: MeasurementModel | None = None,
    solver: SolverConfig | None = None,
) -> tuple[dict[int, SpectrumEstimate], list[str]]:
    """NPT spectra per order; returns ``(spectra, failures)``.

    A reconstruction that does not converge keeps its best iterate and the
    order is listed in ``failures``.
    """
    out: dict[int, SpectrumEstimate] = {}
    failed: list[str] = []
    for n in orders:
        if mode == "nyquist":
            out[n] = nyquist_spectrum(record, n)
            continue
        if model is None:
            raise ValueError("sub-nyquist mode needs a measurement model")
        try:
            out[n] = reconstruct_order(record, n, model, solver)
        except ConvergenceError as exc:
            out[n] = exc.estimate
            failed.append(f"order {n}: {exc}")
    return out, failed


@dataclass
class TrialResult:
    modulation: ModulationType
    snr_db: float | None
    mode: str
    trial_index: int
    predicted: ModulationType | None
    estimate: ParamEstimate | None
    features: np.ndarray
    failed: bool
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def correct(self) -> bool:
        return (not self.failed) and self.predicted == self.modulation


def _features_and_estimate(
    config: ExperimentConfig, rec: BasebandRecord, mode: str, model: MeasurementModel | None,
    with_estimate: bool,
) -> tuple[np.ndarray, ParamEstimate | None, list[str], dict[str, Any]]:
    spectra, failed = spectra_for(rec, config.orders, mode, model, config.solver)
    fv = extract_features(spectra, config.m, label=rec.modulation)
    diag: dict[str, Any] = {}
    est = None
    if with_estimate:
        n = default_order(rec.modulation)
        needed = [n] + ([4] if rec.modulation is ModulationType.OQPSK else [])
        missing = [k for k in needed if k not in spectra]
        if missing:
            extra, ef = spectra_for(rec, missing, mode, model, config.solver)
            spectra.update(extra)
            failed += ef
        peaks = detect_peaks(spectra[n], config.eta)
        try:
            if rec.modulation is ModulationType.OQPSK:
                # the order-4 centre line anchors the centre-less order-2 pair
                est = estimate_with_center(peaks, detect_peaks(spectra[4], config.eta), 4,
                                           rec.modulation, n)
            else:
                est = estimate_params(peaks, rec.modulation, n)
        except InsufficientPeaksError as exc:
            diag["estimate_error"] = str(exc)
            est = exc.partial
    return fv.values, est, failed, diag


def run_trial(
    config: ExperimentConfig,
    modulation: ModulationType | str,
    snr_db: float | None,
    trial_index: int,
    mode: str,
    svm: SvmModel | None = None,
    model: MeasurementModel | None = None,
) -> TrialResult:
    """synth -> AWGN -> NPT -> (measure + reconstruct) -> features -> predict -> estimate.

    Parameter estimation uses the true class to pick the line structure, so
    estimation error is reported independently of classification error.
    """
    mod = ModulationType.parse(modulation)
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "sub-nyquist" and model is None:
        model = measurement_model(config)
    rec = _make_record(config, mod, snr_db, trial_seed(config.base_seed, mod, snr_db, trial_index))
    x, est, failed, diag = _features_and_estimate(config, rec, mode, model, True)
    diag["solver_failures"] = failed
    predicted = None
    if svm is not None:
        preds, votes = predict_many(svm, x[None, :])
        predicted = preds[0]
        diag["votes"] = {c.value: int(v) for c, v in zip(svm.classes, votes[0])}
    return TrialResult(mod, snr_db, mode, trial_index, predicted, est, x,
                       bool(failed), diag)


def _dataset_row(args: tuple) -> tuple[str, float, int, np.ndarray, bool]:
    config, mod, snr, idx, mode = args
    model = measurement_model(config) if mode == "sub-nyquist" else None
    rec = _make_record(config, mod, snr, trial_seed(config.base_seed, mod, snr, idx, _STREAM_TRAIN))
    x, _, failed, _ = _features_and_estimate(config, rec, mode, model, False)
    return mod.value, snr, idx, x, bool(failed)


def _pool_map(fn, items: list, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def build_dataset(config: ExperimentConfig, mode: str = "sub-nyquist") -> list[dict[str, Any]]:
    """Labeled training features at ``config.train_snrs``, ``train_trials`` per (class, snr).

    Rows are ordered by (class, snr, seed_index) regardless of worker count.
    Non-converged reconstructions are kept (their best iterate is a valid
    noisy feature); the ``failed`` flag records it.
    """
    items = [(config, c, s, i, mode) for c in config.classes for s in config.train_snrs
             for i in range(config.train_trials)]
    rows = _pool_map(_dataset_row, items, config.workers)
    return [
        {"label": lab, "snr_db": snr, "seed_index": idx, "values": x, "failed": f}
        for lab, snr, idx, x, f in rows
    ]


def train_model(config: ExperimentConfig, dataset: Sequence[dict[str, Any]],
                kernel: KernelSpec | None = None) -> SvmModel:
    X = np.vstack([r["values"] for r in dataset])
    y = [r["label"] for r in dataset]
    return train(
        X, y, kernel, config.svm_c,
        feature_config={"m": config.m, "normalization": "per-record-energy",
                        "orders": list(config.orders), "length": 3 * config.m},
        trained_on={"snr_db": list(config.train_snrs), "trials": config.train_trials},
    )


@dataclass
class SweepResult:
    rows: list[dict[str, Any]]
    runtime_s: float
    failures: dict[str, int]
    models: dict[str, SvmModel] = field(default_factory=dict)
    datasets: dict[str, list[dict[str, Any]]] = field(default_factory=dict)

    def r_alpha(self, mode: str, modulation: ModulationType | str) -> tuple[list[float], list[float]]:
        mod = ModulationType.parse(modulation).value
        sel = [r for r in self.rows if r["mode"] == mode and r["class"] == mod]
        sel.sort(key=lambda r: r["snr"])
        return [r["snr"] for r in sel], [r["r_alpha"] for r in sel]

    def row(self, mode: str, modulation: ModulationType | str, snr: float) -> dict[str, Any]:
        mod = ModulationType.parse(modulation).value
        for r in self.rows:
            if r["mode"] == mode and r["class"] == mod and r["snr"] == float(snr):
                return r
        raise KeyError((mode, mod, snr))


def _test_trial(args: tuple) -> tuple[str, str, float, int, bool, bool, float, float, int]:
    config, svm, mod, snr, idx, mode = args
    res = run_trial(config, mod, snr, idx, mode, svm)
    fc_err = rs_err = np.nan
    if res.estimate is not None:
        fc_err = abs(res.estimate.fc_hat - config.f_c)
        if res.estimate.rs_hat is not None:
            rs_err = abs(res.estimate.rs_hat - config.R_s)
    n_fail = len(res.diagnostics["solver_failures"])
    return mode, mod.value, snr, idx, res.correct, res.failed, fc_err, rs_err, n_fail


def _mean_finite(v: list[float]) -> float:
    a = np.asarray(v, dtype=float)
    a = a[np.isfinite(a)]
    return float(a.mean()) if a.size else float("nan")


def run_sweep(
    config: ExperimentConfig,
    models: dict[str, SvmModel] | None = None,
    datasets: dict[str, list[dict[str, Any]]] | None = None,
) -> SweepResult:
    """Train one classifier per sampling mode (unless given) and sweep the SNR grid."""
    t0 = time.perf_counter()
    models = dict(models or {})
    datasets = dict(datasets or {})
    for mode in config.modes:
        if mode not in models:
            if mode not in datasets:
                log.info("building %s training set", mode)
                datasets[mode] = build_dataset(config, mode)
            models[mode] = train_model(config, datasets[mode])

    items = [(config, models[mode], c, s, i, mode) for mode in config.modes
             for c in config.classes for s in config.snr_grid
             for i in range(config.trials_per_point)]
    outcomes = _pool_map(_test_trial, items, config.workers)

    rows = []
    failures: dict[str, int] = {}
    groups: dict[tuple[str, str, float], list] = {}
    for o in outcomes:
        groups.setdefault((o[0], o[1], o[2]), []).append(o)
    for (mode, cls, snr), g in groups.items():
        n_failed = sum(1 for o in g if o[5])
        if config.strict:
            n = len(g)
            correct = sum(1 for o in g if o[4])
        else:
            n = len(g) - n_failed
            correct = sum(1 for o in g if o[4] and not o[5])
        failures[f"{mode}/{cls}/{snr:g}"] = sum(o[8] for o in g)
        rows.append(
            {
                "class": cls,
                "snr": snr,
                "mode": mode,
                "r_alpha": correct / n if n else float("nan"),
                "n": n,
                "fc_mae": _mean_finite([o[6] for o in g]),
                "rs_mae": _mean_finite([o[7] for o in g]),
            }
        )
    return SweepResult(rows, time.perf_counter() - t0, failures, models, datasets)


def crossing_snr(snrs: Sequence[float], rates: Sequence[float], level: float = 0.9) -> float | None:
    """First grid SNR at which ``rate >= level``; None if never reached."""
    for s, r in sorted(zip(snrs, rates)):
        if r >= level:
            return float(s)
    return None


RESULT_COLUMNS = ("class", "snr", "mode", "r_alpha", "n", "fc_mae", "rs_mae")


def write_results_csv(result: SweepResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in result.rows:
            w.writerow([r["class"], repr(r["snr"]), r["mode"], repr(r["r_alpha"]), r["n"],
                        repr(r["fc_mae"]), repr(r["rs_mae"])])


def write_dataset_csv(rows: Sequence[dict[str, Any]], path: str | Path) -> None:
    """Feature CSV: ``label, snr_db, seed_index, v0 .. v{3m-1}``."""
    if not rows:
        raise ValueError("empty dataset")
    width = len(rows[0]["values"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "snr_db", "seed_index"] + [f"v{k}" for k in range(width)])
        for r in rows:
            lead = [r["label"], repr(float(r["snr_db"])), r["seed_index"]]
            w.writerow(lead + [repr(float(v)) for v in r["values"]])


def read_dataset_csv(path: str | Path) -> list[dict[str, Any]]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        head = next(reader)
        start = head.index("v0")
        for rec in reader:
            row = {
                "label": rec[0],
                "snr_db": float(rec[1]),
                "seed_index": int(rec[2]),
                "values": np.array([float(v) for v in rec[start:]]),
            }
            out.append(row)
    return out


def _git_revision() -> str | None:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True,
                             timeout=5, cwd=Path(__file__).resolve().parent)
    except (OSError, subprocess.SubprocessError):
        return None
    return out.stdout.strip() or None if out.returncode == 0 else None


def write_sweep_outputs(config: ExperimentConfig, result: SweepResult, out_dir: str | Path) -> None:
    """results.csv, dataset.csv, model.json (one entry per mode), run_manifest.json."""
    from ._kernels import BACKEND

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_results_csv(result, out / "results.csv")
    # dataset.csv holds the sub-Nyquist set when present; other modes get a suffix
    primary = "sub-nyquist" if "sub-nyquist" in result.datasets else next(iter(result.datasets), None)
    for mode, rows in result.datasets.items():
        name = "dataset.csv" if mode == primary else f"dataset_{mode}.csv"
        write_dataset_csv(rows, out / name)
    with open(out / "model.json", "w") as fh:
        json.dump({mode: m.to_dict() for mode, m in result.models.items()}, fh)
    manifest = {
        "config": config.to_dict(),
        "package_version": __version__,
        "git_revision": _git_revision(),
        "kernel_backend": BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "measurement_model": measurement_model(config).to_dict(),
        "seed_derivation": "SeedSequence([base_seed, stream, class_index, round((snr+1000)*100), trial])",
        "solver_failures": result.failures,
        "runtime_s": result.runtime_s,
    }
    with open(out / "run_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)


def with_overrides(config: ExperimentConfig, **kw: Any) -> ExperimentConfig:
    return replace(config, **kw)
