"""PSK-family signal synthesis at the uniform (full) sampling rate.

Complex passband samples are produced for BPSK, QPSK, 8PSK, OQPSK and MSK.
MPSK and OQPSK use a square-root raised cosine (SRRC) pulse; MSK uses
half-sinusoid weighted rectangular pulses on offset I/Q branches.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

__all__ = [
    "ModulationType",
    "SignalParams",
    "BasebandRecord",
    "ParameterError",
    "ALL_CLASSES",
    "srrc_pulse",
    "synthesize",
    "add_awgn",
    "paper_profile",
    "desk_profile",
]

SRRC_SPAN = 8


class ParameterError(ValueError):
    """Raised for physically inconsistent or out-of-range parameters."""


class ModulationType(str, enum.Enum):
    BPSK = "BPSK"
    QPSK = "QPSK"
    PSK8 = "8PSK"
    OQPSK = "OQPSK"
    MSK = "MSK"

    @property
    def order(self) -> int | None:
        """Number of constellation phases for MPSK, ``None`` otherwise."""
        return {"BPSK": 2, "QPSK": 4, "8PSK": 8}.get(self.value)

    @classmethod
    def parse(cls, name: "str | ModulationType") -> "ModulationType":
        if isinstance(name, cls):
            return name
        key = str(name).strip().upper()
        aliases = {"PSK8": "8PSK", "8-PSK": "8PSK"}
        return cls(aliases.get(key, key))

    def __str__(self) -> str:
        return self.value


ALL_CLASSES = (
    ModulationType.BPSK,
    ModulationType.QPSK,
    ModulationType.PSK8,
    ModulationType.OQPSK,
    ModulationType.MSK,
)


@dataclass(frozen=True)
class SignalParams:
    """Generation parameters. Frequencies in Hz; ``snr_db=None`` is noiseless."""

    f_c: float = 500.0
    R_s: float = 800.0
    f_s: float = 6400.0
    alpha: float = 0.5
    n_symbols: int = 256
    amplitude: float = 1.0
    snr_db: float | None = None
    seed: int = 0

    @property
    def sps(self) -> int:
        ratio = self.f_s / self.R_s
        sps = int(round(ratio))
        if sps < 2 or abs(ratio - sps) > 1e-9 * ratio:
            raise ParameterError(
                f"samples per symbol f_s/R_s = {ratio!r} must be an integer >= 2"
            )
        return sps

    @property
    def length(self) -> int:
        return self.n_symbols * self.sps

    def validate(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"roll-off alpha={self.alpha} outside (0, 1)")
        if self.n_symbols < 1:
            raise ParameterError("n_symbols must be positive")
        if self.f_c < 0 or self.R_s <= 0 or self.f_s <= 0:
            raise ParameterError("frequencies must be positive")
        _ = self.sps
        occupied = self.f_c + (1.0 + self.alpha) * self.R_s / 2.0
        if not self.f_s > 2.0 * occupied:
            raise ParameterError(
                f"f_s={self.f_s} does not cover 2*(f_c + (1+alpha)R_s/2) = {2 * occupied}"
            )
        # every discrete line N*f_c + k*R_s that can exist for N <= 8
        # (|k| <= 2 and |k| < N(1+alpha)/2) must sit inside [0, f_s)
        for n in (2, 4, 8):
            kmax = min(2, math.ceil(n * (1.0 + self.alpha) / 2.0) - 1)
            lo = n * self.f_c - kmax * self.R_s
            hi = n * self.f_c + kmax * self.R_s
            if lo < 0 or hi >= self.f_s:
                raise ParameterError(
                    f"order-{n} lines span [{lo}, {hi}] Hz, outside [0, f_s={self.f_s})"
                )

    def to_dict(self) -> dict[str, Any]:
        return {
            "f_c": self.f_c,
            "R_s": self.R_s,
            "f_s": self.f_s,
            "alpha": self.alpha,
            "n_symbols": self.n_symbols,
            "amplitude": self.amplitude,
            "snr_db": self.snr_db,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SignalParams":
        snr = d.get("snr_db")
        return cls(
            f_c=float(d["f_c"]),
            R_s=float(d["R_s"]),
            f_s=float(d["f_s"]),
            alpha=float(d["alpha"]),
            n_symbols=int(d["n_symbols"]),
            amplitude=float(d.get("amplitude", 1.0)),
            snr_db=None if snr is None else float(snr),
            seed=int(d.get("seed", 0)),
        )


def paper_profile(**overrides: Any) -> SignalParams:
    """1024 symbols, alpha=0.5, f_c=0.5 kHz, R_s=0.8 kHz, f_s=6.4 kHz (L=8192)."""
    base = dict(f_c=500.0, R_s=800.0, f_s=6400.0, alpha=0.5, n_symbols=1024)
    base.update(overrides)
    return SignalParams(**base)


def desk_profile(**overrides: Any) -> SignalParams:
    """Paper frequencies at 256 symbols (L=2048)."""
    base = dict(f_c=500.0, R_s=800.0, f_s=6400.0, alpha=0.5, n_symbols=256)
    base.update(overrides)
    return SignalParams(**base)


@dataclass
class BasebandRecord:
    samples: np.ndarray
    params: SignalParams
    modulation: ModulationType
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def length(self) -> int:
        return int(self.samples.shape[0])

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1:
            raise ValueError("samples must be a 1-D vector")


def srrc_pulse(alpha: float, sps: int, span_symbols: int = SRRC_SPAN) -> np.ndarray:
    """Unit-energy square-root raised cosine taps, ``span_symbols * sps + 1`` long.

    The removable singularities at t = 0 and |t| = T_s/(4 alpha) are replaced
    by their analytic limits.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"roll-off alpha={alpha} outside (0, 1)")
    if sps < 2:
        raise ParameterError("sps must be >= 2")
    if span_symbols < 6 or span_symbols % 2:
        raise ParameterError("span_symbols must be even and >= 6")

    half = span_symbols * sps // 2
    t = np.arange(-half, half + 1, dtype=float) / sps  # in symbol periods
    h = np.empty_like(t)

    at_zero = np.isclose(t, 0.0, atol=1e-12)
    at_sing = np.isclose(np.abs(4.0 * alpha * t), 1.0, rtol=0.0, atol=1e-9)
    regular = ~(at_zero | at_sing)

    tr = t[regular]
    num = np.sin(np.pi * tr * (1 - alpha)) + 4 * alpha * tr * np.cos(np.pi * tr * (1 + alpha))
    den = np.pi * tr * (1 - (4 * alpha * tr) ** 2)
    h[regular] = num / den
    h[at_zero] = 1.0 - alpha + 4.0 * alpha / np.pi
    h[at_sing] = (alpha / np.sqrt(2.0)) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * alpha))
        + (1 - 2 / np.pi) * np.cos(np.pi / (4 * alpha))
    )
    return h / np.sqrt(np.sum(h * h))


def _shape(impulses: np.ndarray, pulse: np.ndarray, length: int) -> np.ndarray:
    # full convolution trimmed to the group-delay-compensated window
    delay = (pulse.shape[0] - 1) // 2
    return np.convolve(impulses, pulse)[delay : delay + length]


def synthesize(
    modulation: ModulationType | str,
    params: SignalParams,
    *,
    symbols: np.ndarray | None = None,
) -> BasebandRecord:
    """Generate a noiseless complex passband record of ``n_symbols * sps`` samples.

    ``symbols`` overrides the random MPSK symbol indices (0-based) and is
    intended for tests. If ``params.snr_db`` is set, AWGN is added with a
    seed derived from ``params.seed``.
    """
    mod = ModulationType.parse(modulation)
    params.validate()
    sps = params.sps
    L = params.length
    rng = np.random.default_rng(params.seed)
    k = np.arange(L)
    carrier = np.exp(2j * np.pi * params.f_c * k / params.f_s)

    meta: dict[str, Any] = {}
    if mod.order is not None:
        M = mod.order
        if symbols is None:
            idx = rng.integers(0, M, size=params.n_symbols)
        else:
            idx = np.asarray(symbols, dtype=int)
            if idx.shape != (params.n_symbols,):
                raise ParameterError("symbol override must have n_symbols entries")
        train = np.zeros(L, dtype=complex)
        train[::sps] = np.exp(2j * np.pi * idx / M)
        base = _shape(train, srrc_pulse(params.alpha, sps), L) * np.sqrt(sps)
    elif mod is ModulationType.OQPSK:
        if sps % 2:
            raise ParameterError("OQPSK needs an even number of samples per symbol")
        a = rng.choice([-1.0, 1.0], size=params.n_symbols)
        b = rng.choice([-1.0, 1.0], size=params.n_symbols)
        pulse = srrc_pulse(params.alpha, sps)
        ti = np.zeros(L)
        tq = np.zeros(L)
        ti[::sps] = a
        tq[sps // 2 :: sps] = b[: len(range(sps // 2, L, sps))]
        i_branch = _shape(ti, pulse, L)
        q_branch = _shape(tq, pulse, L)
        base = (i_branch + 1j * q_branch) * np.sqrt(sps / 2.0)
    else:
        # MSK: one bit per 1/R_s, so the branch pulses last 2/R_s and the
        # squared signal carries lines at 2 f_c +- R_s/2
        t_b = sps  # bit period in samples
        n_a = (k + t_b) // (2 * t_b)  # I interval [(2n-1)T_b, (2n+1)T_b)
        n_b = k // (2 * t_b)  # Q interval [2n T_b, (2n+2)T_b)
        a = rng.choice([-1.0, 1.0], size=int(n_a[-1]) + 1)
        b = rng.choice([-1.0, 1.0], size=int(n_b[-1]) + 1)
        phase = np.pi * k / (2.0 * t_b)
        base = a[n_a] * np.cos(phase) + 1j * b[n_b] * np.sin(phase)

    samples = params.amplitude * base * carrier
    record = BasebandRecord(samples=samples, params=params, modulation=mod, meta=meta)
    if params.snr_db is not None and np.isfinite(params.snr_db):
        record = add_awgn(record, params.snr_db, seed=_noise_seed(params.seed))
    return record


def _noise_seed(seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), 0x4E015E])


def add_awgn(
    record: BasebandRecord,
    snr_db: float | None,
    seed: int | np.random.SeedSequence | None = None,
) -> BasebandRecord:
    """Add circular complex Gaussian noise at ``snr_db`` relative to mean signal power.

    ``snr_db`` of ``None`` or ``+inf`` returns an unchanged copy.
    """
    if not np.all(np.isfinite(record.samples)):
        raise ValueError("record contains non-finite samples")
    if snr_db is None or snr_db == np.inf:
        return BasebandRecord(
            record.samples.copy(), record.params, record.modulation, dict(record.meta)
        )
    x = record.samples
    p_sig = float(np.mean(np.abs(x) ** 2))
    var = p_sig / 10.0 ** (snr_db / 10.0)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(x.shape[0]) + 1j * rng.standard_normal(x.shape[0])
    noise *= np.sqrt(var / 2.0)
    p_noise = float(np.mean(np.abs(noise) ** 2))
    meta = dict(record.meta)
    meta["snr_db_requested"] = float(snr_db)
    meta["snr_db_empirical"] = 10.0 * np.log10(p_sig / p_noise) if p_noise > 0 else np.inf
    return BasebandRecord(
        x + noise, replace(record.params, snr_db=float(snr_db)), record.modulation, meta
    )
