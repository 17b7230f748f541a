"""Fronthaul-constrained rate maximization over (B_w, M, b).

The optimum always sits on the constraint curve B_w*M*b = C_f (rate is
strictly increasing in M at fixed B_w and b), so the search space reduces
to the auxiliary variable s in (1/C_f, 1] with M = 1/s and B_w = C_f*s at
b fixed.  R(s) is unimodal in s, concave through the ascent to its
maximizer (convex only in the far noise-limited decay), so the maximizer
is found by bisection on the sign of the closed-form derivative, then
refined over the nearest integer antenna counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, PilotExcessTooSmallError
from .linkrate import RateBreakdown, achievable_rate
from .sysmodel import (
    DesignPoint,
    SystemConfig,
    link_budget,
    quantization_distortion_variance,
)

_LN2 = math.log(2.0)

DEFAULT_B_MAX = 12
S_TOLERANCE = 1e-10


def _threshold_parts(b: int, x_int: float) -> tuple[float, float]:
    """Numerator and denominator of the bit-for-bandwidth threshold."""
    al = b / (b + 1.0)
    sq = math.sqrt(al)
    e = quantization_distortion_variance(b, x_int)
    num = al * (-1.0 - e / 4.0 + 1.0 / sq + e / sq)
    den = 1.0 + e / 4.0 - sq - e * sq
    return num, den


def threshold_f(b: int, x_int: float = 1.0) -> float:
    """Interference-to-noise threshold above which trading ADC bits for
    bandwidth raises the rate.

    Only a function of the resolution (and the quantizer interval).  Above
    one bit the threshold sits below 1, i.e. any interference-dominated
    system prefers the wider band.
    """
    num, den = _threshold_parts(b, x_int)
    return num / den


def threshold_f_alt(b: int, x_int: float = 1.0) -> float:
    """Algebraically equivalent rearrangement of threshold_f, kept as an
    independent cross-check of the implementation."""
    al = b / (b + 1.0)
    sq = math.sqrt(al)
    e = quantization_distortion_variance(b, x_int)
    num = sq * (1.0 + e) - al * (1.0 + e / 4.0)
    den = (1.0 + e / 4.0) - sq * (1.0 + e)
    return num / den


def interference_noise_ratio(config: SystemConfig, B_w: float) -> float:
    """Total interference over noise, K*P/(B_w*N_0)."""
    budget = link_budget(config, B_w, 1)
    return budget.I_total / config.N_0


def bandwidth_condition(config: SystemConfig, design: DesignPoint) -> bool:
    """True when the interference-to-noise ratio strictly exceeds the
    bit-for-bandwidth threshold at this design's resolution.

    The threshold is evaluated at unit pilot excess; larger pilot excess only
    lowers it, so this test is a conservative sufficient condition.  For very
    wide quantizer intervals the threshold's denominator goes negative and
    the underlying inequality can never hold, so the test returns False.
    """
    num, den = _threshold_parts(design.b, config.X_int)
    if den <= 0.0:
        return False
    return interference_noise_ratio(config, design.B_w) > num / den


def best_fixed_bandwidth_design(config: SystemConfig, B_w: float) -> DesignPoint:
    """Best (M, b) for a fixed bandwidth: one-bit ADCs on every antenna the
    fronthaul can carry.

    Requires pilot excess >= 1; the caller falls back to an exhaustive bit
    search otherwise.
    """
    if config.theta < 1.0:
        raise PilotExcessTooSmallError(
            f"fixed-bandwidth shortcut needs theta >= 1, got theta={config.theta}"
        )
    m = int(math.floor(config.C_f / B_w))
    if m < 1:
        raise InfeasibleError(
            f"no antenna fits: C_f={config.C_f} below one bit at B_w={B_w}"
        )
    return DesignPoint(B_w=B_w, M=m, b=1)


@dataclass(frozen=True)
class FixedAntennasCandidate:
    """Candidate optimum for a fixed antenna count, plus whether the
    sufficient bandwidth condition certifies it along the whole trajectory."""

    design: DesignPoint
    applicable: bool


def best_fixed_antennas_design(
    config: SystemConfig, M: int, b_max: int = DEFAULT_B_MAX
) -> FixedAntennasCandidate:
    """Candidate best (B_w, b) for a fixed antenna count: one-bit ADCs at
    B_w = C_f/M.

    The candidate is certified (``applicable``) only when the bandwidth
    condition holds at every step of the constraint trajectory
    B_w(b) = C_f/(M*b); the condition is sufficient, not necessary, so an
    uncertified candidate may still be optimal.
    """
    candidate = DesignPoint(B_w=config.C_f / M, M=M, b=1)
    applicable = all(
        bandwidth_condition(config, DesignPoint(B_w=config.C_f / (M * b), M=M, b=b))
        for b in range(1, b_max)
    )
    return FixedAntennasCandidate(design=candidate, applicable=applicable)


@dataclass(frozen=True)
class SearchState:
    """One point of the s-parameterized search, with the derivative pieces."""

    s: float
    upsilon: float
    tau: float
    omega: float
    omega_dot: float
    m_bar: float
    bw_bar: float
    b: int


def _s_domain_check(config: SystemConfig, s) -> None:
    s = np.asarray(s, dtype=float)
    if np.any(s <= 1.0 / config.C_f) or np.any(s > 1.0):
        raise ValueError(f"s must lie in (1/C_f, 1] = ({1.0 / config.C_f}, 1]")


def _omega_terms(config: SystemConfig, s, b: int):
    """omega(s), its derivative, and tau(theta, s) for the constraint curve."""
    p = config.P_max * config.beta_edge
    kp = config.K * p
    e = quantization_distortion_variance(b, config.X_int)
    one = 1.0 + e
    te = config.theta_eff
    u = kp + config.C_f * config.N_0 * s
    u_dot = config.C_f * config.N_0
    tau = (te - 1.0) * kp * one * u
    denom = one * u * ((te - 1.0) * kp + one * u)  # = tau + (1+E)^2 u^2
    denom_dot = one * u_dot * ((te - 1.0) * kp + 2.0 * one * u)
    a = p * p * config.n_pilot / config.L
    g = s * denom
    omega = a / g
    omega_dot = -a * (denom + s * denom_dot) / (g * g)
    return omega, omega_dot, tau


def _upsilon(config: SystemConfig) -> float:
    return config.n_data * config.C_f / (config.N * _LN2)


def rate_of_s(config: SystemConfig, s, b: int):
    """Per-user rate (bit/s) on the constraint curve M=1/s, B_w=C_f*s.

    Pure evaluation; accepts a scalar or an array of s values.
    """
    _s_domain_check(config, s)
    s = np.asarray(s, dtype=float)
    omega, _, _ = _omega_terms(config, s, b)
    out = _upsilon(config) * s * np.log1p(omega)
    return float(out) if out.ndim == 0 else out


def rate_of_s_derivative(config: SystemConfig, s, b: int):
    """Closed-form dR/ds; its sign gives the ascent direction."""
    _s_domain_check(config, s)
    s = np.asarray(s, dtype=float)
    omega, omega_dot, _ = _omega_terms(config, s, b)
    out = _upsilon(config) * (np.log1p(omega) + s * omega_dot / (1.0 + omega))
    return float(out) if out.ndim == 0 else out


def search_state(config: SystemConfig, s: float, b: int) -> SearchState:
    _s_domain_check(config, s)
    omega, omega_dot, tau = _omega_terms(config, float(s), b)
    return SearchState(
        s=float(s),
        upsilon=_upsilon(config),
        tau=float(tau),
        omega=float(omega),
        omega_dot=float(omega_dot),
        m_bar=1.0 / float(s),
        bw_bar=config.C_f * float(s),
        b=b,
    )


def maximize_over_s(config: SystemConfig, b: int) -> SearchState:
    """Maximizer of R(s) by bisection on the derivative sign, valid because
    the derivative changes sign exactly once.

    Returns the boundary point when the derivative never changes sign.
    Absolute tolerance 1e-10 in s.
    """
    lo = (1.0 / config.C_f) * (1.0 + 1e-9)
    hi = 1.0
    d_lo = rate_of_s_derivative(config, lo, b)
    d_hi = rate_of_s_derivative(config, hi, b)
    if d_lo <= 0.0 and d_hi <= 0.0:
        return search_state(config, lo, b)
    if d_lo >= 0.0 and d_hi >= 0.0:
        return search_state(config, hi, b)
    while hi - lo > S_TOLERANCE:
        mid = 0.5 * (lo + hi)
        if rate_of_s_derivative(config, mid, b) > 0.0:
            lo = mid
        else:
            hi = mid
    return search_state(config, 0.5 * (lo + hi), b)


def one_bit_always_optimal(config: SystemConfig) -> bool:
    """Whether the global search may fix b = 1 outright.

    Requires the requested pilot excess >= 1 and the bandwidth condition to
    hold where it matters: at the one-bit optimum on the constraint curve.
    """
    if config.theta < 1.0:
        return False
    st = maximize_over_s(config, 1)
    m = max(1, int(round(st.m_bar)))
    return bandwidth_condition(config, DesignPoint(B_w=st.bw_bar, M=m, b=1))


def pade_bandwidth_condition(config: SystemConfig, design: DesignPoint) -> bool:
    """Sufficient condition for the rate to grow toward larger bandwidth
    (larger s) on the constraint curve.

    Derived from a rational lower bound on log(1+x); the (KP + B_w*N_0)
    factor enters squared, which keeps the test invariant under joint
    rescaling of powers and noise.
    """
    budget = link_budget(config, design.B_w, design.b)
    kp = config.K * budget.P
    u = kp + design.B_w * config.N_0
    one = 1.0 + budget.E
    lhs = kp / (design.B_w * config.N_0)
    rhs = 4.0 * one * one * u * u * config.L / (design.M * budget.P**2 * config.n_pilot) + 1.0
    return lhs > rhs


def antenna_condition(config: SystemConfig, design: DesignPoint) -> bool:
    """Sufficient condition for more antennas at less bandwidth to win
    (smaller s direction on the constraint curve)."""
    budget = link_budget(config, design.B_w, design.b)
    kp = config.K * budget.P
    u = kp + design.B_w * config.N_0
    one = 1.0 + budget.E
    rhs = 4.0 * one * one * u * design.B_w * config.N_0 * config.L / (
        budget.P**2 * config.n_pilot
    )
    return design.M < rhs


@dataclass(frozen=True)
class OptimizationResult:
    """Outcome of the full constrained search."""

    best: DesignPoint
    rate: RateBreakdown
    trace: tuple = field(repr=False, default=())
    binding: bool = True
    relaxed_s: float | None = None
    relaxed_rate_bps: float | None = None
    fixed_one_bit: bool = False


def optimize_full(
    config: SystemConfig,
    b_max: int = DEFAULT_B_MAX,
    m_neighborhood: int = 2,
) -> OptimizationResult:
    """Global maximization of the per-user rate subject to B_w*M*b <= C_f.

    Fixes b = 1 when that is provably optimal, otherwise exhausts
    b in {1..b_max}; each resolution gets a concave search over s followed
    by evaluation of the nearest integer antenna counts with B_w = C_f/(M*b).
    Ties break toward fewer bits, then fewer antennas.
    """
    if config.C_f < 1.0:
        raise InfeasibleError(
            f"fronthaul capacity C_f={config.C_f} cannot carry one antenna-bit"
        )
    fixed_one_bit = one_bit_always_optimal(config)
    bits = (1,) if fixed_one_bit else tuple(range(1, b_max + 1))

    trace: list[tuple[DesignPoint, RateBreakdown]] = []
    best: tuple | None = None
    best_state: SearchState | None = None
    for b in bits:
        if config.C_f / b < 1.0:
            continue
        st = maximize_over_s(config, b)
        m_center = st.m_bar
        m_lo = max(1, int(math.floor(m_center)) - m_neighborhood)
        m_hi = min(int(math.floor(config.C_f / b)), int(math.ceil(m_center)) + m_neighborhood)
        for m in range(m_lo, m_hi + 1):
            design = DesignPoint(B_w=config.C_f / (m * b), M=m, b=b)
            breakdown = achievable_rate(config, design)
            trace.append((design, breakdown))
            key = (-breakdown.rate_bps, b, m)
            if best is None or key < best[0]:
                best = (key, design, breakdown)
                best_state = st
    if best is None:
        raise InfeasibleError("no feasible integer design on the constraint curve")

    _, design, breakdown = best
    assert best_state is not None
    slack = abs(design.fronthaul_load - config.C_f)
    return OptimizationResult(
        best=design,
        rate=breakdown,
        trace=tuple(trace),
        binding=slack <= design.B_w * design.b,
        relaxed_s=best_state.s,
        relaxed_rate_bps=float(rate_of_s(config, best_state.s, design.b)),
        fixed_one_bit=fixed_one_bit,
    )
