"""One-vs-one multiclass SVM trained by SMO, plus the NPT-order selection rule."""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from . import _kernels
from .sigsyn import ModulationType

__all__ = [
    "KernelSpec",
    "BinaryMachine",
    "SvmModel",
    "kernel_eval",
    "kernel_matrix",
    "median_heuristic",
    "train",
    "predict",
    "predict_many",
    "decision_values",
    "kkt_violation",
    "cross_validate",
    "grid_search",
    "hierarchical_orders",
]


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    gamma: float = 1.0
    r: float = 0.0
    d: int = 3
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "polynomial", "rbf"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and not self.sigma > 0:
            raise ValueError("rbf sigma must be positive")
        if self.kind == "polynomial" and self.d < 1:
            raise ValueError("polynomial degree must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "gamma": self.gamma, "r": self.r, "d": self.d, "sigma": self.sigma}


def kernel_eval(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("kernel arguments must have equal length")
    if spec.kind == "linear":
        return float(x @ y)
    if spec.kind == "polynomial":
        return float((spec.gamma * (x @ y) + spec.r) ** spec.d)
    diff = x - y
    return float(np.exp(-(diff @ diff) / (2.0 * spec.sigma**2)))


def kernel_matrix(spec: KernelSpec, X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ValueError("feature dimensions differ")
    G = X @ Y.T
    if spec.kind == "linear":
        return G
    if spec.kind == "polynomial":
        return (spec.gamma * G + spec.r) ** spec.d
    sq = np.sum(X * X, axis=1)[:, None] + np.sum(Y * Y, axis=1)[None, :] - 2.0 * G
    return np.exp(-np.maximum(sq, 0.0) / (2.0 * spec.sigma**2))


def median_heuristic(X: np.ndarray, max_points: int = 1000, seed: int = 0) -> float:
    """Median pairwise Euclidean distance (subsampled for large sets)."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] > max_points:
        idx = np.random.default_rng(seed).choice(X.shape[0], max_points, replace=False)
        X = X[np.sort(idx)]
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    iu = np.triu_indices(X.shape[0], k=1)
    d = np.sqrt(np.maximum(d2[iu], 0.0))
    med = float(np.median(d)) if d.size else 1.0
    return med if med > 0 else 1.0


@dataclass
class BinaryMachine:
    """Decision function ``sum_i coef_i K(sv_i, x) - rho``; positive votes ``pos``."""

    pos: int
    neg: int
    support_vectors: np.ndarray
    coef: np.ndarray  # alpha_i * y_i
    rho: float
    iterations: int = 0

    def decision(self, spec: KernelSpec, X: np.ndarray) -> np.ndarray:
        if self.coef.size == 0:
            return np.full(np.atleast_2d(X).shape[0], -self.rho)
        return kernel_matrix(spec, X, self.support_vectors) @ self.coef - self.rho


@dataclass
class SvmModel:
    classes: list[ModulationType]
    machines: list[BinaryMachine]
    kernel: KernelSpec
    C: float
    feature_config: dict[str, Any] = field(default_factory=dict)
    trained_on: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "classes": [c.value for c in self.classes],
            "kernel": self.kernel.to_dict(),
            "C": self.C,
            "feature_config": self.feature_config,
            "trained_on": self.trained_on,
            "machines": [
                {
                    "pos": m.pos,
                    "neg": m.neg,
                    "support_vectors": m.support_vectors.tolist(),
                    "coef": m.coef.tolist(),
                    "rho": m.rho,
                    "iterations": m.iterations,
                }
                for m in self.machines
            ],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SvmModel":
        n_feat = int(d.get("feature_config", {}).get("length", 0))
        machines = []
        for m in d["machines"]:
            sv = np.asarray(m["support_vectors"], dtype=float)
            if sv.size == 0:
                sv = sv.reshape(0, n_feat)
            machines.append(
                BinaryMachine(int(m["pos"]), int(m["neg"]), sv,
                              np.asarray(m["coef"], dtype=float), float(m["rho"]),
                              int(m.get("iterations", 0)))
            )
        return cls(
            classes=[ModulationType.parse(c) for c in d["classes"]],
            machines=machines,
            kernel=KernelSpec(**d["kernel"]),
            C=float(d["C"]),
            feature_config=dict(d.get("feature_config", {})),
            trained_on=dict(d.get("trained_on", {})),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "SvmModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _fit_binary(
    Xp: np.ndarray, Xn: np.ndarray, spec: KernelSpec, C: float, tol: float, max_iter: int
) -> tuple[np.ndarray, np.ndarray, float, int, np.ndarray]:
    X = np.vstack([Xp, Xn])
    y = np.concatenate([np.ones(len(Xp)), -np.ones(len(Xn))])
    K = kernel_matrix(spec, X)
    alpha, rho, it = _kernels.smo_solve(K, y, float(C), float(tol), int(max_iter))
    return X, y, rho, it, alpha


def train(
    X: np.ndarray,
    labels: Sequence[ModulationType | str],
    kernel: KernelSpec | None = None,
    C: float = 10.0,
    *,
    tol: float = 1e-3,
    max_iter: int = 200_000,
    feature_config: dict[str, Any] | None = None,
    trained_on: dict[str, Any] | None = None,
) -> SvmModel:
    """Train C(C-1)/2 pairwise soft-margin SVMs.

    ``kernel=None`` uses an RBF kernel with the median-heuristic width.
    Training is deterministic in the row order of ``X``.
    """
    X = np.asarray(X, dtype=float)
    labs = [ModulationType.parse(v) for v in labels]
    if X.ndim != 2 or X.shape[0] != len(labs):
        raise ValueError("X must be (n_samples, n_features) matching labels")
    classes = [c for c in ModulationType if c in set(labs)]
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    lab_arr = np.array([c.value for c in labs])
    for c in classes:
        if np.sum(lab_arr == c.value) < 10:
            raise ValueError(f"class {c} has fewer than 10 examples")
    spec = kernel or KernelSpec("rbf", sigma=median_heuristic(X))

    machines = []
    for a, b in itertools.combinations(range(len(classes)), 2):
        Xp = X[lab_arr == classes[a].value]
        Xn = X[lab_arr == classes[b].value]
        if _degenerate(Xp, Xn):
            warnings.warn(
                f"classes {classes[a]} and {classes[b]} have identical feature sets",
                RuntimeWarning,
                stacklevel=2,
            )
        Xab, y, rho, it, alpha = _fit_binary(Xp, Xn, spec, C, tol, max_iter)
        sv = alpha > 0
        machines.append(BinaryMachine(a, b, Xab[sv].copy(), alpha[sv] * y[sv], float(rho), it))

    fc = dict(feature_config or {})
    fc.setdefault("length", int(X.shape[1]))
    return SvmModel(classes, machines, spec, float(C), fc, dict(trained_on or {}))


def _degenerate(Xp: np.ndarray, Xn: np.ndarray) -> bool:
    a = np.unique(Xp, axis=0)
    b = np.unique(Xn, axis=0)
    return a.shape == b.shape and np.array_equal(a, b)


def decision_values(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """(n_samples, n_machines) pairwise decision values."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    expect = model.feature_config.get("length")
    if expect is not None and X.shape[1] != int(expect):
        raise ValueError(f"feature length {X.shape[1]} does not match model ({expect})")
    return np.column_stack([m.decision(model.kernel, X) for m in model.machines])


def predict_many(model: SvmModel, X: np.ndarray) -> tuple[list[ModulationType], np.ndarray]:
    """Majority vote; ties go to the class with the largest summed margin."""
    dv = decision_values(model, X)
    n = dv.shape[0]
    k = len(model.classes)
    votes = np.zeros((n, k), dtype=int)
    margin = np.zeros((n, k))
    for col, m in enumerate(model.machines):
        d = dv[:, col]
        win_pos = d > 0
        votes[win_pos, m.pos] += 1
        votes[~win_pos, m.neg] += 1
        margin[:, m.pos] += d
        margin[:, m.neg] -= d
    preds = []
    for i in range(n):
        top = np.flatnonzero(votes[i] == votes[i].max())
        best = top[np.argmax(margin[i, top])] if top.size > 1 else top[0]
        preds.append(model.classes[int(best)])
    return preds, votes


def predict(model: SvmModel, x) -> tuple[ModulationType, dict[ModulationType, int]]:
    values = getattr(x, "values", x)
    preds, votes = predict_many(model, np.asarray(values, dtype=float)[None, :])
    tally = {c: int(v) for c, v in zip(model.classes, votes[0])}
    return preds[0], tally


def kkt_violation(model: SvmModel, X: np.ndarray, labels: Sequence[ModulationType | str]) -> float:
    """Largest KKT violation (in margin units) over all pairwise machines."""
    X = np.asarray(X, dtype=float)
    lab_arr = np.array([ModulationType.parse(v).value for v in labels])
    worst = 0.0
    for m in model.machines:
        Xp = X[lab_arr == model.classes[m.pos].value]
        Xn = X[lab_arr == model.classes[m.neg].value]
        Xab = np.vstack([Xp, Xn])
        y = np.concatenate([np.ones(len(Xp)), -np.ones(len(Xn))])
        alpha = _alphas_for(m, Xab, y)
        f = m.decision(model.kernel, Xab)
        yf = y * f
        C = model.C
        tol_a = 1e-8 * C
        at0 = alpha <= tol_a
        atC = alpha >= C - tol_a
        free = ~(at0 | atC)
        v0 = np.max(1.0 - yf[at0], initial=0.0)
        vC = np.max(yf[atC] - 1.0, initial=0.0)
        vf = np.max(np.abs(yf[free] - 1.0), initial=0.0)
        worst = max(worst, v0, vC, vf)
    return float(worst)


def _alphas_for(m: BinaryMachine, Xab: np.ndarray, y: np.ndarray) -> np.ndarray:
    alpha = np.zeros(Xab.shape[0])
    if m.coef.size == 0:
        return alpha
    # match each support vector back to its training row
    for sv, c in zip(m.support_vectors, m.coef):
        hits = np.flatnonzero(np.all(Xab == sv, axis=1) & (np.sign(y) == np.sign(c)))
        for h in hits:
            if alpha[h] == 0.0:
                alpha[h] = abs(c)
                break
    return alpha


def _folds(labels: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    fold_of = np.empty(labels.shape[0], dtype=int)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        fold_of[idx] = np.arange(idx.size) % k
    return [np.flatnonzero(fold_of == f) for f in range(k)]


def cross_validate(
    X: np.ndarray,
    labels: Sequence[ModulationType | str],
    kernel: KernelSpec | None = None,
    C: float = 10.0,
    k: int = 5,
    seed: int = 0,
) -> float:
    """Stratified k-fold accuracy."""
    X = np.asarray(X, dtype=float)
    lab_arr = np.array([ModulationType.parse(v).value for v in labels])
    correct = 0
    for test in _folds(lab_arr, k, seed):
        train_mask = np.ones(lab_arr.size, dtype=bool)
        train_mask[test] = False
        model = train(X[train_mask], lab_arr[train_mask], kernel, C)
        preds, _ = predict_many(model, X[test])
        correct += sum(p.value == t for p, t in zip(preds, lab_arr[test]))
    return correct / lab_arr.size


def grid_search(
    X: np.ndarray,
    labels: Sequence[ModulationType | str],
    Cs: Iterable[float] = (1.0, 10.0, 100.0),
    sigma_scales: Iterable[float] = (0.5, 1.0, 2.0),
    k: int = 5,
    seed: int = 0,
) -> tuple[KernelSpec, float, float]:
    """Pick (RBF width, C) by k-fold accuracy; returns ``(kernel, C, accuracy)``."""
    med = median_heuristic(X)
    best: tuple[KernelSpec, float, float] | None = None
    for s in sigma_scales:
        spec = KernelSpec("rbf", sigma=s * med)
        for C in Cs:
            acc = cross_validate(X, labels, spec, C, k, seed)
            if best is None or acc > best[2]:
                best = (spec, float(C), acc)
    assert best is not None
    return best


def hierarchical_orders(candidates: Iterable[ModulationType | str] | None = None) -> tuple[int, ...]:
    """NPT orders needed to separate ``candidates``.

    Order 2 alone isolates BPSK; orders 2 and 4 separate QPSK, OQPSK and MSK;
    order 8 is only needed when 8PSK is a candidate. A candidate named
    ``"not-BPSK"`` (or ``"rest"``) stands for the pooled other classes in a
    BPSK-versus-rest stage. ``None`` means all five classes.
    """
    if candidates is None:
        return (2, 4, 8)
    names = {str(c).strip().upper() for c in candidates}
    if names <= {"BPSK", "NOT-BPSK", "REST", "OTHER"}:
        return (2,)
    mods = {ModulationType.parse(n) for n in names if n not in ("NOT-BPSK", "REST", "OTHER")}
    if ModulationType.PSK8 in mods:
        return (2, 4, 8)
    return (2, 4)
