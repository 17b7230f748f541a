"""Closed-form estimation quality, SINQR and achievable rate under
channel-inversion power control with MRC reception.

All log2 terms are computed from the natural log so the optimizer's
nats-based constant and these rates agree to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigValueError
from .sysmodel import DesignPoint, SystemConfig, link_budget

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class RateBreakdown:
    """Estimation quality c, SINQR gamma, and the resulting per-user rate."""

    c: float
    gamma: float
    rate_bps: float
    sum_rate_bps: float


def estimation_quality(config: SystemConfig, design: DesignPoint) -> float:
    """Channel estimation quality c in [0, 1) for a uniform power delay profile.

    c = theta*I / (theta*I + N_0 + P_rx*E); rises with pilot excess and power,
    falls with quantization distortion.
    """
    budget = link_budget(config, design.B_w, design.b)
    ti = config.theta_eff * budget.I_total
    return ti / (ti + config.N_0 + budget.P_rx * budget.E)


def estimation_quality_tapwise(
    config: SystemConfig, design: DesignPoint, sigma2: np.ndarray
) -> float:
    """c computed by summing per-tap LMMSE qualities d[l]*sigma2[l].

    Supports arbitrary power delay profiles; for the uniform profile this
    equals the closed form of estimation_quality.
    """
    sigma2 = np.asarray(sigma2, dtype=float)
    if sigma2.ndim != 1 or sigma2.size != config.L:
        raise ConfigValueError(f"power delay profile must have L={config.L} taps")
    budget = link_budget(config, design.B_w, design.b)
    rx = budget.P / design.B_w
    sig = rx * config.n_pilot * budget.mu * sigma2
    d = sig / (sig + budget.E + budget.mu * config.N_0)
    return float(np.sum(d * sigma2))


def sinqr(config: SystemConfig, design: DesignPoint) -> float:
    """Effective SINR including quantization distortion, for MRC reception."""
    budget = link_budget(config, design.B_w, design.b)
    c = estimation_quality(config, design)
    per_user = budget.P / design.B_w
    return c * design.M * per_user / (budget.I_total + config.N_0 + budget.P_rx * budget.E)


def rate_from_sinqr(config: SystemConfig, B_w: float, gamma: float) -> float:
    """Per-user rate in bit/s after bandwidth and pilot-overhead scaling."""
    if gamma < 0:
        raise ConfigValueError(f"gamma must be non-negative, got {gamma}")
    return B_w * (config.n_data / config.N) * math.log1p(gamma) / _LN2


def achievable_rate(config: SystemConfig, design: DesignPoint) -> RateBreakdown:
    """Full rate breakdown for one design point."""
    c = estimation_quality(config, design)
    g = sinqr(config, design)
    r = rate_from_sinqr(config, design.B_w, g)
    return RateBreakdown(c=c, gamma=g, rate_bps=r, sum_rate_bps=config.K * r)
