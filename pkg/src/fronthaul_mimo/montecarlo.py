"""Link-level simulator: multipath channel draws, constant-amplitude
orthogonal pilots, AGC + quantization (true uniform quantizer or its
additive-noise surrogate), per-tap LMMSE estimation, MRC combining, and
the use-and-then-forget empirical rate.

Everything downstream of the ADC lives in the "ADC domain": each real rail
is scaled to unit variance before quantization (the complex sample is
multiplied by sqrt(2*mu) with mu = 1/P_rx), so X_int is the no-overload
half-width in units of the rail standard deviation and the additive
surrogate adds variance E per rail.  The rate statistic is scale invariant,
and the per-tap LMMSE gains below are derived in this domain, so the
closed-form predictions apply unchanged.

Reproducibility: each trial draws from its own counter-derived substream
(SeedSequence spawn keyed by trial index) and aggregates are reduced in
trial order, so results do not depend on scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigValueError, InsufficientTrialsError
from .sysmodel import DesignPoint, SystemConfig, link_budget

_LN2 = math.log(2.0)

QUANTIZE_MODES = ("uniform", "pqn")


@dataclass(frozen=True)
class PowerDelayProfile:
    """Per-tap variances of the multipath channel, normalized to sum to 1."""

    sigma2: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.sigma2, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ConfigValueError("power delay profile must be a 1-D tap vector")
        if np.any(arr < 0) or arr.sum() <= 0:
            raise ConfigValueError("tap powers must be non-negative with positive sum")
        object.__setattr__(self, "sigma2", arr / arr.sum())

    @classmethod
    def uniform(cls, n_taps: int) -> "PowerDelayProfile":
        return cls(np.full(n_taps, 1.0 / n_taps))

    @property
    def n_taps(self) -> int:
        return self.sigma2.size


@dataclass(frozen=True)
class ChannelRealization:
    """Small-scale taps h[m, k, l] with per-user large-scale gains beta[k]."""

    h: np.ndarray
    beta: np.ndarray

    @property
    def g(self) -> np.ndarray:
        """Composite taps sqrt(beta_k) * h[m, k, l]."""
        return np.sqrt(self.beta)[None, :, None] * self.h


def draw_channel(
    rng: np.random.Generator,
    n_antennas: int,
    n_users: int,
    pdp: PowerDelayProfile,
    beta: np.ndarray | None = None,
) -> ChannelRealization:
    """Draw i.i.d. circular Gaussian taps with the profile's per-tap variance."""
    shape = (n_antennas, n_users, pdp.n_taps)
    scale = np.sqrt(pdp.sigma2 / 2.0)[None, None, :]
    h = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    if beta is None:
        beta = np.ones(n_users)
    return ChannelRealization(h=h, beta=np.asarray(beta, dtype=float))


def _zadoff_chu(length: int, root: int = 1) -> np.ndarray:
    n = np.arange(length)
    phase = n * (n + 1) if length % 2 else n * n
    return np.exp(-1j * np.pi * root * phase / length)


@dataclass(frozen=True)
class PilotMatrix:
    """K constant-amplitude sequences with ideal cyclic cross/auto-correlation
    over the first L lags."""

    phi: np.ndarray
    n_taps: int

    @property
    def n_users(self) -> int:
        return self.phi.shape[0]

    @property
    def length(self) -> int:
        return self.phi.shape[1]

    def correlations(self) -> np.ndarray:
        """C[k, i, l] = sum_n phi_k[n] * conj(phi_i[(n+l) mod N_p])."""
        out = np.empty((self.n_users, self.n_users, self.n_taps), dtype=complex)
        for lag in range(self.n_taps):
            shifted = np.roll(self.phi, -lag, axis=1)
            out[:, :, lag] = self.phi @ shifted.conj().T
        return out

    def max_orthogonality_defect(self) -> float:
        """Largest deviation from the ideal correlation pattern, absolute."""
        corr = self.correlations()
        target = np.zeros_like(corr)
        target[np.arange(self.n_users), np.arange(self.n_users), 0] = self.length
        return float(np.max(np.abs(corr - target)))


def generate_pilots(n_users: int, n_taps: int, n_pilot: int) -> PilotMatrix:
    """Cyclically shifted root sequence with ideal periodic autocorrelation.

    Shift stride floor(N_p / K) >= L separates the users by more than the
    channel memory, which makes all cross-lag correlations vanish.
    """
    if n_pilot < n_users * n_taps:
        raise ConfigValueError(
            f"pilot length {n_pilot} shorter than K*L={n_users * n_taps}"
        )
    root = _zadoff_chu(n_pilot)
    stride = n_pilot // n_users
    phi = np.stack([np.roll(root, -(k * stride)) for k in range(n_users)])
    return PilotMatrix(phi=phi, n_taps=n_taps)


def midrise_quantize(u: np.ndarray, b: int, x_int: float) -> tuple[np.ndarray, int]:
    """Uniform midrise quantizer on a real array.

    Step 2*x_int/2^b over [-x_int, x_int]; inputs beyond the no-overload
    interval saturate to the outermost level and are counted as clip events.
    """
    if b < 1 or int(b) != b:
        raise ConfigValueError(f"b must be a positive integer, got {b}")
    if x_int <= 0:
        raise ConfigValueError(f"x_int must be positive, got {x_int}")
    step = 2.0 * x_int / (2**b)
    top = x_int - 0.5 * step
    q = (np.floor(u / step) + 0.5) * step
    n_clipped = int(np.count_nonzero(np.abs(u) >= x_int))
    return np.clip(q, -top, top), n_clipped


def quantize_block(
    y: np.ndarray,
    b: int,
    mu: float,
    x_int: float,
    mode: str,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, int]:
    """Quantize a block of complex samples, returning the ADC-domain output
    and the number of clipped real components.

    The AGC scales each rail to unit variance (factor sqrt(2*mu) on the
    complex sample).  ``uniform`` applies the midrise quantizer per rail;
    ``pqn`` adds independent uniform noise of variance E per rail instead.
    """
    if mode not in QUANTIZE_MODES:
        raise ConfigValueError(f"mode must be one of {QUANTIZE_MODES}, got {mode!r}")
    scale = math.sqrt(2.0 * mu)
    re = scale * y.real
    im = scale * y.imag
    if mode == "uniform":
        q_re, c_re = midrise_quantize(re, b, x_int)
        q_im, c_im = midrise_quantize(im, b, x_int)
        return q_re + 1j * q_im, c_re + c_im
    if rng is None:
        raise ConfigValueError("pqn mode needs a random generator")
    half = x_int * 2.0 ** (-b)  # uniform(-half, half) has variance E per rail
    noise = rng.uniform(-half, half, size=(2,) + y.shape)
    return (re + noise[0]) + 1j * (im + noise[1]), 0


def lmmse_estimate(
    r: np.ndarray,
    config: SystemConfig,
    design: DesignPoint,
    sigma2: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-tap LMMSE channel estimate from pilot correlations.

    Args:
        r: correlator outputs, shape (M, K, L), in the ADC domain.
        sigma2: power delay profile; uniform when omitted.

    Returns:
        (h_hat, d): estimates of the same shape and the per-tap quality
        factors d[l]; the estimation error variance per tap is (1-d[l])*sigma2[l].
    """
    if sigma2 is None:
        sigma2 = np.full(config.L, 1.0 / config.L)
    sigma2 = np.asarray(sigma2, dtype=float)
    budget = link_budget(config, design.B_w, design.b)
    a2 = 2.0 * budget.mu * (budget.P / design.B_w) * config.n_pilot
    denom = a2 * sigma2 + 2.0 * budget.E + 2.0 * budget.mu * config.N_0
    d = a2 * sigma2 / denom
    coef = math.sqrt(a2) * sigma2 / denom
    return coef[None, None, :] * r, d


def mrc_combine(y_q: np.ndarray, h_hat: np.ndarray, n_data: int) -> np.ndarray:
    """Frequency-domain MRC: x_hat[k, v] = sum_m conj(H_hat[m, k, v]) * Y[m, v]."""
    y_freq = np.fft.fft(y_q, axis=1) / math.sqrt(n_data)
    h_freq = np.fft.fft(h_hat, n=n_data, axis=2)
    return np.einsum("mkv,mv->kv", h_freq.conj(), y_freq)


def mrc_combine_time(y_q: np.ndarray, h_hat: np.ndarray, n_data: int) -> np.ndarray:
    """Time-domain FIR realization of the same combiner, returned in the
    frequency domain for comparison.  O(N^2); intended for validation."""
    h_freq = np.fft.fft(h_hat, n=n_data, axis=2)
    w_time = np.fft.ifft(h_freq.conj(), axis=2)  # (M, K, N_d)
    n = np.arange(n_data)
    idx = (n[None, :] - n[:, None]) % n_data  # [l, n] -> (n - l) mod N_d
    y_shift = y_q[:, idx]  # (M, L=N_d, N_d)
    x_time = np.einsum("mkl,mln->kn", w_time, y_shift)
    return np.fft.fft(x_time, axis=1) / math.sqrt(n_data)


@dataclass
class McBlock:
    """One simulated transmission block (pilot phase + data phase)."""

    h: np.ndarray  # (M, K, L) channel taps
    y_pilot: np.ndarray  # (M, N_p) received pilot samples, pre-ADC
    y_pilot_q: np.ndarray  # (M, N_p) quantized, ADC domain
    r: np.ndarray  # (M, K, L) pilot correlator outputs
    h_hat: np.ndarray  # (M, K, L) LMMSE tap estimates (ADC-domain scaling)
    d: np.ndarray  # (L,) per-tap estimation quality
    x: np.ndarray  # (K, N_d) unit-power data symbols
    x_freq: np.ndarray  # (K, N_d) their unitary DFT
    y_data_q: np.ndarray  # (M, N_d) quantized data samples, ADC domain
    x_hat_freq: np.ndarray  # (K, N_d) combiner outputs per subcarrier
    n_clipped: int
    n_rails: int


def simulate_block(
    config: SystemConfig,
    design: DesignPoint,
    rng: np.random.Generator,
    mode: str = "pqn",
    pilots: PilotMatrix | None = None,
    pdp: PowerDelayProfile | None = None,
) -> McBlock:
    """Simulate one coherence block at one design point.

    Channel-inversion power control is folded into a common received
    amplitude sqrt(P/B_w) per user; the AGC gain is the analytic 1/P_rx.
    """
    n_p, n_d = config.n_pilot, config.n_data
    m_ant, k_users, n_taps = design.M, config.K, config.L
    if pdp is None:
        pdp = PowerDelayProfile.uniform(n_taps)
    if pilots is None:
        pilots = generate_pilots(k_users, n_taps, n_p)
    budget = link_budget(config, design.B_w, design.b)
    amp = math.sqrt(budget.P / design.B_w)
    noise_std = math.sqrt(config.N_0 / 2.0)

    chan = draw_channel(rng, m_ant, k_users, pdp)
    h = chan.h

    # pilot phase: cyclic convolution of each user's taps with its sequence
    phi_shift = np.stack(
        [np.roll(pilots.phi, lag, axis=1) for lag in range(n_taps)], axis=1
    )  # (K, L, N_p), phi_k[(n - l) mod N_p]
    z_p = noise_std * (
        rng.standard_normal((m_ant, n_p)) + 1j * rng.standard_normal((m_ant, n_p))
    )
    y_pilot = amp * np.einsum("mkl,kln->mn", h, phi_shift) + z_p
    y_pilot_q, clip_p = quantize_block(
        y_pilot, design.b, budget.mu, config.X_int, mode, rng
    )
    r = np.einsum("mn,kln->mkl", y_pilot_q, phi_shift.conj()) / math.sqrt(n_p)
    h_hat, d = lmmse_estimate(r, config, design, pdp.sigma2)

    # data phase: unit-power Gaussian symbols, block-circular channel
    x = (
        rng.standard_normal((k_users, n_d)) + 1j * rng.standard_normal((k_users, n_d))
    ) / math.sqrt(2.0)
    idx = (np.arange(n_d)[None, :] - np.arange(n_taps)[:, None]) % n_d
    x_shift = x[:, idx]  # (K, L, N_d)
    z_d = noise_std * (
        rng.standard_normal((m_ant, n_d)) + 1j * rng.standard_normal((m_ant, n_d))
    )
    y_data = amp * np.einsum("mkl,kln->mn", h, x_shift) + z_d
    y_data_q, clip_d = quantize_block(
        y_data, design.b, budget.mu, config.X_int, mode, rng
    )

    x_hat_freq = mrc_combine(y_data_q, h_hat, n_d)
    x_freq = np.fft.fft(x, axis=1) / math.sqrt(n_d)
    return McBlock(
        h=h,
        y_pilot=y_pilot,
        y_pilot_q=y_pilot_q,
        r=r,
        h_hat=h_hat,
        d=d,
        x=x,
        x_freq=x_freq,
        y_data_q=y_data_q,
        x_hat_freq=x_hat_freq,
        n_clipped=clip_p + clip_d,
        n_rails=2 * m_ant * (n_p + n_d),
    )


@dataclass(frozen=True)
class EmpiricalRate:
    """Sample-mean rate estimate with a batch-based standard error."""

    rate_bps: float
    stderr_bps: float
    gamma: float
    clip_rate: float
    trials: int
    mode: str


def _gamma_from_moments(s1: complex, s2: float, n: int) -> float:
    mean_cross = s1 / n
    signal = abs(mean_cross) ** 2
    denom = s2 / n - signal
    if denom <= 0:
        return math.inf
    return signal / denom


def empirical_rate(
    config: SystemConfig,
    design: DesignPoint,
    trials: int,
    seed,
    mode: str = "pqn",
    n_batches: int = 10,
    stability_bound: float | None = 0.25,
) -> EmpiricalRate:
    """Empirical per-user rate from the use-and-then-forget sample statistic.

    The cross moment E[x* x_hat] and the output power E[|x_hat|^2] are
    replaced by sample means pooled over symbols, subcarriers, users and
    fading realizations; the effective SINR is |mean|^2 / (power - |mean|^2).
    Deterministic given the seed; trials use independent substreams reduced
    in index order.

    Raises InsufficientTrialsError when the batch spread of the estimate
    exceeds ``stability_bound`` relative (skipped for near-zero rates, or
    when the bound is None).
    """
    if trials < 1:
        raise ConfigValueError(f"trials must be >= 1, got {trials}")
    if mode not in QUANTIZE_MODES:
        raise ConfigValueError(f"mode must be one of {QUANTIZE_MODES}, got {mode!r}")
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = seq.spawn(trials)
    pilots = generate_pilots(config.K, config.L, config.n_pilot)
    pdp = PowerDelayProfile.uniform(config.L)

    n_batches = max(1, min(n_batches, trials))
    s1 = np.zeros(n_batches, dtype=complex)
    s2 = np.zeros(n_batches)
    n_obs = np.zeros(n_batches, dtype=np.int64)
    clipped = 0
    rails = 0
    for t in range(trials):
        rng = np.random.default_rng(children[t])
        block = simulate_block(config, design, rng, mode=mode, pilots=pilots, pdp=pdp)
        i = t * n_batches // trials
        s1[i] += np.sum(block.x_freq.conj() * block.x_hat_freq)
        s2[i] += np.sum(np.abs(block.x_hat_freq) ** 2)
        n_obs[i] += block.x_freq.size
        clipped += block.n_clipped
        rails += block.n_rails

    gamma = _gamma_from_moments(s1.sum(), s2.sum(), int(n_obs.sum()))
    prelog = design.B_w * config.n_data / config.N
    rate = prelog * math.log1p(gamma) / _LN2

    if trials >= 2 and n_batches >= 2:
        batch_rates = np.array(
            [
                prelog * math.log1p(_gamma_from_moments(s1[i], s2[i], int(n_obs[i]))) / _LN2
                for i in range(n_batches)
                if n_obs[i] > 0
            ]
        )
        batch_rates = batch_rates[np.isfinite(batch_rates)]  # single-trial batches
        # at high SINR can land on a non-finite ratio estimate
        if batch_rates.size >= 2:
            stderr = float(np.std(batch_rates, ddof=1) / math.sqrt(batch_rates.size))
        else:
            stderr = math.nan
    else:
        stderr = math.nan

    if (
        stability_bound is not None
        and math.isfinite(stderr)
        and gamma > 1e-2  # below that the link is dead and the spread is noise
        and stderr > stability_bound * rate
    ):
        raise InsufficientTrialsError(
            f"relative stderr {stderr / rate:.3f} exceeds {stability_bound} "
            f"at {trials} trials"
        )
    return EmpiricalRate(
        rate_bps=rate,
        stderr_bps=stderr,
        gamma=gamma,
        clip_rate=clipped / rails if rails else 0.0,
        trials=trials,
        mode=mode,
    )
