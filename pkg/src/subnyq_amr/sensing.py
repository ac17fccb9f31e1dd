"""Sub-Nyquist measurement operators ``y = Phi z_N`` and the composed ``A = Phi Psi``."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Literal

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .npt import unitary_dft, unitary_idft

__all__ = [
    "MeasurementModel",
    "MeasurementVector",
    "SensingOperator",
    "make_model",
    "row_selection",
    "measure",
    "forward_operator",
]

Kind = Literal["dense-gaussian", "row-selection"]
KINDS = ("dense-gaussian", "row-selection")


@dataclass(frozen=True)
class MeasurementModel:
    """Sensing-matrix descriptor; the payload is regenerated from ``seed``."""

    kind: str
    m_rows: int
    l_cols: int
    seed: int
    beta_requested: float | None = None
    explicit_indices: tuple[int, ...] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown measurement kind {self.kind!r}")
        if not 0 < self.m_rows <= self.l_cols:
            raise ValueError("need 0 < M <= L")

    @property
    def beta(self) -> float:
        return self.m_rows / self.l_cols

    @property
    def model_id(self) -> str:
        return f"{self.kind}:M{self.m_rows}:L{self.l_cols}:s{self.seed}"

    @cached_property
    def indices(self) -> np.ndarray:
        if self.kind != "row-selection":
            raise AttributeError("dense-gaussian models have no index payload")
        if self.explicit_indices is not None:
            return np.asarray(self.explicit_indices, dtype=np.intp)
        rng = np.random.default_rng(self.seed)
        idx = rng.choice(self.l_cols, size=self.m_rows, replace=False)
        return np.sort(idx).astype(np.intp)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense ``M x L`` matrix (row-selection is materialized on demand)."""
        if self.kind == "row-selection":
            phi = np.zeros((self.m_rows, self.l_cols))
            phi[np.arange(self.m_rows), self.indices] = 1.0
            return phi
        rng = np.random.default_rng(self.seed)
        return rng.standard_normal((self.m_rows, self.l_cols)) / np.sqrt(self.m_rows)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "kind": self.kind,
            "M": self.m_rows,
            "L": self.l_cols,
            "beta": self.beta,
            "seed": self.seed,
        }
        if self.beta_requested is not None:
            d["beta_requested"] = self.beta_requested
        if self.explicit_indices is not None:
            d["indices"] = list(self.explicit_indices)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MeasurementModel":
        idx = d.get("indices")
        return cls(
            kind=d["kind"],
            m_rows=int(d["M"]),
            l_cols=int(d["L"]),
            seed=int(d["seed"]),
            beta_requested=d.get("beta_requested"),
            explicit_indices=None if idx is None else tuple(int(i) for i in idx),
        )


@dataclass
class MeasurementVector:
    y: np.ndarray
    model: MeasurementModel
    order: int

    @property
    def model_id(self) -> str:
        return self.model.model_id


def make_model(kind: str, l_cols: int, beta: float, seed: int = 0) -> MeasurementModel:
    """Measurement model with ``M = round(beta * L)`` rows."""
    if not 0.0 < beta < 1.0:
        raise ValueError(f"compression ratio beta={beta} must lie in (0, 1)")
    if int(np.floor(beta * l_cols)) < 1:
        raise ValueError("beta * L must allow at least one measurement")
    m = int(round(beta * l_cols))
    m = min(max(m, 1), l_cols - 1)
    return MeasurementModel(kind, m, int(l_cols), int(seed), beta_requested=float(beta))


def row_selection(indices: np.ndarray, l_cols: int) -> MeasurementModel:
    """Row-selection model from explicit sample indices (M = L allowed)."""
    idx = np.unique(np.asarray(indices, dtype=np.intp))
    if idx.size == 0 or idx[0] < 0 or idx[-1] >= l_cols:
        raise ValueError("indices must be distinct and inside [0, L)")
    return MeasurementModel(
        "row-selection", int(idx.size), int(l_cols), seed=-1,
        explicit_indices=tuple(int(i) for i in idx),
    )


def _apply_phi(model: MeasurementModel, x: np.ndarray) -> np.ndarray:
    if model.kind == "row-selection":
        return x[model.indices]
    return model.matrix @ x


def _apply_phi_t(model: MeasurementModel, y: np.ndarray) -> np.ndarray:
    if model.kind == "row-selection":
        out = np.zeros(model.l_cols, dtype=np.result_type(y.dtype, np.complex128))
        out[model.indices] = y
        return out
    return model.matrix.T @ y


def measure(model: MeasurementModel, z_n: np.ndarray, order: int = 1) -> MeasurementVector:
    z = np.asarray(z_n)
    if z.ndim != 1 or z.shape[0] != model.l_cols:
        raise ValueError(f"expected a length-{model.l_cols} vector, got shape {z.shape}")
    y = _apply_phi(model, z.astype(np.complex128, copy=False))
    return MeasurementVector(np.asarray(y, dtype=np.complex128), model, order)


class SensingOperator(LinearOperator):
    """Matrix-free ``A f = Phi IDFT(f)`` with adjoint ``A^H y = DFT(Phi^T y)``.

    Also provides Euclidean projection onto ``{f : ||A f - y|| <= eps}``,
    closed-form for row selection (``A A^H = I``) and via a thin SVD of
    ``Phi`` for dense matrices.
    """

    def __init__(self, model: MeasurementModel):
        self.model = model
        super().__init__(dtype=np.complex128, shape=(model.m_rows, model.l_cols))

    @property
    def tight(self) -> bool:
        """True when ``A A^H`` is the identity."""
        return self.model.kind == "row-selection"

    def _matvec(self, f):
        return _apply_phi(self.model, unitary_idft(np.ravel(f)))

    def _rmatvec(self, y):
        return unitary_dft(_apply_phi_t(self.model, np.ravel(y)))

    def _adjoint(self):
        return _AdjointSensing(self)

    @cached_property
    def _svd(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        u, s, wt = np.linalg.svd(self.model.matrix, full_matrices=False)
        return u, s, wt

    def project(self, v: np.ndarray, y: np.ndarray, eps: float = 0.0) -> np.ndarray:
        """Closest point to ``v`` satisfying ``||A f - y||_2 <= eps``."""
        if self.tight:
            r = self._matvec(v) - y
            nr = np.linalg.norm(r)
            if nr <= eps:
                return v
            shrink = r if eps <= 0 else r * (1.0 - eps / nr)
            return v - self._rmatvec(shrink)
        u, s, wt = self._svd
        g = unitary_idft(v)
        c = wt @ g
        d = u.T @ y
        resid = s * c - d
        nres = np.linalg.norm(resid)
        if nres <= eps:
            return v
        if eps <= 0:
            c_new = d / s
        else:
            lam = _secular_root(s, resid, eps)
            c_new = c - (lam * s * resid) / (1.0 + lam * s * s)
        return unitary_dft(g + wt.T @ (c_new - c))


class _AdjointSensing(LinearOperator):
    def __init__(self, op: SensingOperator):
        self._op = op
        super().__init__(dtype=np.complex128, shape=(op.shape[1], op.shape[0]))

    def _matvec(self, y):
        return self._op._rmatvec(y)

    def _rmatvec(self, f):
        return self._op._matvec(f)


def _secular_root(s: np.ndarray, resid: np.ndarray, eps: float) -> float:
    """lam >= 0 with ||resid / (1 + lam s^2)|| = eps (monotone in lam)."""
    r2 = np.abs(resid) ** 2
    s2 = s * s

    def norm(lam: float) -> float:
        return float(np.sqrt(np.sum(r2 / (1.0 + lam * s2) ** 2)))

    lo, hi = 0.0, 1.0
    while norm(hi) > eps:
        hi *= 2.0
        if hi > 1e300:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if norm(mid) > eps:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return hi


def forward_operator(model: MeasurementModel, dft_size: int | None = None) -> SensingOperator:
    if dft_size is not None and dft_size != model.l_cols:
        raise ValueError("DFT size must equal the model's column count")
    return SensingOperator(model)
