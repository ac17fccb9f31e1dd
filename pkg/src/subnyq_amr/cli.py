"""Command-line entry point: ``subnyq-amr <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io
from .classify import KernelSpec, SvmModel, predict, train
from .estimate import InsufficientPeaksError, estimate_params
from .features import extract_features
from .harness import ExperimentConfig, read_dataset_csv, run_sweep, write_sweep_outputs
from .npt import DEFAULT_ETA, detect_peaks, nyquist_spectrum
from .recon import ConvergenceError, SolverConfig, reconstruct_order, solve_bp
from .sensing import forward_operator, make_model
from .sigsyn import ModulationType, SignalParams, add_awgn, synthesize

__all__ = ["main", "build_parser"]

log = logging.getLogger("subnyq_amr")


def _cmd_synth(a: argparse.Namespace) -> int:
    params = SignalParams(a.fc, a.rs, a.fs, a.alpha, a.symbols, a.amplitude, None, a.seed)
    rec = synthesize(a.modulation, params)
    if a.snr is not None:
        rec = add_awgn(rec, a.snr, np.random.SeedSequence([a.seed, 1]))
    io.write_record(rec, a.out)
    if a.measure_beta is not None:
        from .npt import raise_power
        from .sensing import measure

        model = make_model(a.measure_kind, rec.length, a.measure_beta, a.measure_seed)
        mv = measure(model, raise_power(rec.samples, a.order), a.order)
        io.write_measurement(mv, a.measure_out or f"{a.out}.meas", rec.params.f_s)
        io.write_model_json(model, a.model_out or f"{a.out}.model.json")
    return 0


def _cmd_npt(a: argparse.Namespace) -> int:
    rec = io.read_record(a.record)
    spec = nyquist_spectrum(rec, a.order)
    io.write_spectrum_csv(spec, a.out)
    if a.peaks:
        io.write_peaks_json(detect_peaks(spec, a.eta), a.peaks,
                            {"order": a.order, "modulation": rec.modulation.value})
    return 0


def _solver_config(a: argparse.Namespace) -> SolverConfig:
    cfg = SolverConfig()
    if a.solver_config:
        with open(a.solver_config) as fh:
            cfg = SolverConfig.from_dict(json.load(fh))
    over = {k: getattr(a, k) for k in ("mode", "epsilon", "max_iter", "tol", "l_half")
            if getattr(a, k) is not None}
    return SolverConfig.from_dict({**cfg.to_dict(), **over})


def _cmd_reconstruct(a: argparse.Namespace) -> int:
    cfg = _solver_config(a)
    model = io.read_model_json(a.model)
    kind, payload = io.read_samples_file(a.input)
    status = 0
    try:
        if kind == "record":
            spec = reconstruct_order(payload, a.order, model, cfg)
        else:
            mv, f_s = payload
            if cfg.mode == "residual" and cfg.epsilon is None:
                raise SystemExit("residual mode on a measurement file needs --epsilon")
            analysis = None
            if cfg.l_half is not None:
                from .recon import build_smoothing

                analysis = build_smoothing(model.l_cols, cfg.l_half, cfg.renormalize)
            spec = solve_bp(forward_operator(model), mv, cfg.mode, cfg.epsilon or 0.0, analysis,
                            f_s=f_s, max_iter=cfg.max_iter, tol=cfg.tol, rho=cfg.rho)
    except ConvergenceError as exc:
        log.error("%s", exc)
        spec = exc.estimate
        status = 3
    io.write_spectrum_csv(spec, a.out, smoothed=a.smoothed_out)
    if a.report:
        with open(a.report, "w") as fh:
            json.dump({"order": spec.order, "smoothed": spec.smoothed, "solver": cfg.to_dict(),
                       **spec.report.to_dict()}, fh, indent=2)
    return status


def _load_spectrum(a: argparse.Namespace):
    path = Path(a.input)
    if path.suffix.lower() == ".csv":
        return io.read_spectrum_csv(path, a.order, a.fs)
    return nyquist_spectrum(io.read_record(path), a.order)


def _cmd_estimate(a: argparse.Namespace) -> int:
    spec = _load_spectrum(a)
    peaks = detect_peaks(spec, a.eta)
    try:
        est = estimate_params(peaks, a.modulation, a.order, strict_eq16=a.strict_eq16)
        out = est.to_dict()
        status = 0
    except InsufficientPeaksError as exc:
        out = {"error": str(exc), "partial": exc.partial.to_dict() if exc.partial else None}
        status = 2
    text = json.dumps(out, indent=2)
    if a.out:
        Path(a.out).write_text(text + "\n")
    else:
        print(text)
    return status


def _cmd_train(a: argparse.Namespace) -> int:
    rows = read_dataset_csv(a.dataset)
    X = np.vstack([r["values"] for r in rows])
    labels = [r["label"] for r in rows]
    kernel = None
    if a.kernel != "rbf" or a.sigma is not None:
        kernel = KernelSpec(a.kernel, gamma=a.gamma, r=a.coef0, d=a.degree,
                            sigma=a.sigma if a.sigma is not None else 1.0)
    m = X.shape[1] // 3
    model = train(X, labels, kernel, a.C,
                  feature_config={"m": m, "normalization": "per-record-energy",
                                  "length": int(X.shape[1])},
                  trained_on={"snr_db": sorted({r["snr_db"] for r in rows}),
                              "rows": len(rows)})
    model.save(a.out)
    return 0


def _load_svm(path: str, mode: str | None) -> SvmModel:
    with open(path) as fh:
        d = json.load(fh)
    if "machines" not in d:  # sweep output: one model per sampling mode
        key = mode if mode in d else next(iter(d))
        d = d[key]
    return SvmModel.from_dict(d)


def _cmd_classify(a: argparse.Namespace) -> int:
    mode = a.sampling_mode or ("sub-nyquist" if a.sensing_model else "nyquist")
    svm = _load_svm(a.model, mode)
    rec = io.read_record(a.record)
    m = int(svm.feature_config.get("m", len(svm.machines[0].support_vectors[0]) // 3))
    if a.sensing_model:
        model = io.read_model_json(a.sensing_model)
        cfg = _solver_config(a)
        spectra = {}
        for n in (2, 4, 8):
            try:
                spectra[n] = reconstruct_order(rec, n, model, cfg)
            except ConvergenceError as exc:
                log.warning("%s", exc)
                spectra[n] = exc.estimate
    else:
        spectra = {n: nyquist_spectrum(rec, n) for n in (2, 4, 8)}
    fv = extract_features(spectra, m)
    label, tally = predict(svm, fv)
    print(json.dumps({"predicted": label.value, "votes": {k.value: v for k, v in tally.items()}}))
    return 0


def _cmd_sweep(a: argparse.Namespace) -> int:
    cfg = ExperimentConfig.from_yaml(a.config)
    if a.workers is not None:
        cfg.workers = a.workers
    result = run_sweep(cfg)
    write_sweep_outputs(cfg, result, a.out)
    for r in result.rows:
        log.info("%-11s %-5s %6.1f dB  r_alpha=%.3f (n=%d)", r["mode"], r["class"], r["snr"],
                 r["r_alpha"], r["n"])
    return 0


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--solver-config", help="JSON solver config")
    p.add_argument("--mode", choices=["equality", "residual"])
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--l-half", dest="l_half", type=int, help="smoothing half-width (analysis form)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="subnyq-amr", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a baseband record")
    p.add_argument("modulation", type=ModulationType.parse)
    p.add_argument("--out", required=True)
    p.add_argument("--fc", type=float, default=500.0)
    p.add_argument("--rs", type=float, default=800.0)
    p.add_argument("--fs", type=float, default=6400.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--symbols", type=int, default=256)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--snr", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--measure-beta", dest="measure_beta", type=float,
                   help="also write sub-Nyquist measurements of the NPT record")
    p.add_argument("--measure-kind", dest="measure_kind", default="row-selection",
                   choices=["row-selection", "dense-gaussian"])
    p.add_argument("--measure-seed", dest="measure_seed", type=int, default=0)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--measure-out", dest="measure_out")
    p.add_argument("--model-out", dest="model_out")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("npt", help="full-rate NPT spectrum and peak report")
    p.add_argument("record")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--out", required=True, help="spectrum CSV")
    p.add_argument("--peaks", help="peak report JSON")
    p.add_argument("--eta", type=float, default=DEFAULT_ETA)
    p.set_defaults(func=_cmd_npt)

    p = sub.add_parser("reconstruct", help="l1 reconstruction from sub-Nyquist data")
    p.add_argument("input", help="record or measurement file")
    p.add_argument("--model", required=True, help="measurement model JSON")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--out", required=True, help="spectrum CSV")
    p.add_argument("--report", help="solver report JSON")
    p.add_argument("--smoothed-out", dest="smoothed_out", action="store_true",
                   help="write the smoothed view instead of the raw coefficients")
    _add_solver_args(p)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("estimate", help="carrier and symbol-rate estimate")
    p.add_argument("input", help="record file or spectrum CSV")
    p.add_argument("--modulation", type=ModulationType.parse, required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--fs", type=float, help="sample rate for spectrum CSV input")
    p.add_argument("--eta", type=float, default=DEFAULT_ETA)
    p.add_argument("--strict-eq16", dest="strict_eq16", action="store_true",
                   help="R_s = |centre - side| / 2")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("train", help="train the one-vs-one SVM from a feature CSV")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--C", type=float, default=10.0)
    p.add_argument("--kernel", choices=["linear", "polynomial", "rbf"], default="rbf")
    p.add_argument("--sigma", type=float, help="RBF width (default: median heuristic)")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--coef0", type=float, default=0.0)
    p.add_argument("--degree", type=int, default=3)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("classify", help="classify a record")
    p.add_argument("record")
    p.add_argument("--model", required=True, help="SVM model JSON")
    p.add_argument("--sampling-mode", dest="sampling_mode", choices=["nyquist", "sub-nyquist"],
                   help="entry to use from a multi-mode model file")
    p.add_argument("--sensing-model", dest="sensing_model",
                   help="measurement model JSON (sub-Nyquist); omit for full-rate")
    _add_solver_args(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("sweep", help="Monte Carlo SNR sweep")
    p.add_argument("--config", required=True, help="YAML experiment config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_sweep)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return int(args.func(args) or 0)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
