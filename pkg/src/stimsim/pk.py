"""Single-dose plasma curve for a stimulant with first-order uptake and clearance.

All times are in minutes and rates in 1/minute.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEGENERACY_TOL = 1e-12


class DegenerateRatesError(ValueError):
    """Raised when the uptake and clearance rates coincide."""


@dataclass(frozen=True)
class StimulantParams:
    d: float = 1.0
    alpha: float = 0.0121
    beta: float = 0.0071

    def __post_init__(self):
        if not (self.d >= 0 and math.isfinite(self.d)):
            raise ValueError(f"dose must be finite and >= 0, got {self.d}")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"rates must be > 0, got alpha={self.alpha}, beta={self.beta}")
        if abs(self.alpha - self.beta) < DEGENERACY_TOL:
            raise DegenerateRatesError(
                f"alpha and beta coincide (|alpha - beta| < {DEGENERACY_TOL})"
            )


def _level(t, d, alpha, beta):
    # exp(-b t) * expm1(-(a - b) t) avoids cancellation when a is close to b
    return d * (alpha * math.exp(-beta * t) * math.expm1((beta - alpha) * t) / (beta - alpha))


def _check_rates(alpha, beta):
    if abs(alpha - beta) < DEGENERACY_TOL:
        raise DegenerateRatesError(f"alpha={alpha} and beta={beta} coincide")


def drug_level(t, params: StimulantParams):
    """Plasma level ``alpha*d*(exp(-alpha t) - exp(-beta t)) / (beta - alpha)``.

    ``t`` may be a scalar or an array; negative times raise ``ValueError``
    (use :func:`shifted_drug_level` for a curve that is zero before intake).
    """
    _check_rates(params.alpha, params.beta)
    if np.ndim(t) == 0:
        t = float(t)
        if not t >= 0:
            raise ValueError(f"drug_level needs t >= 0, got {t}")
        return _level(t, params.d, params.alpha, params.beta)
    t = np.asarray(t, dtype=float)
    if np.any(~(t >= 0)):
        raise ValueError("drug_level needs t >= 0")
    a, b = params.alpha, params.beta
    return params.d * (a * np.exp(-b * t) * np.expm1((b - a) * t) / (b - a))


def shifted_drug_level(t, t0: float, params: StimulantParams):
    """Plasma level for a dose taken at ``t0``; zero before intake."""
    if t0 < 0:
        raise ValueError(f"t0 must be >= 0, got {t0}")
    if np.ndim(t) == 0:
        t = float(t)
        if t < 0:
            raise ValueError(f"t must be >= 0, got {t}")
        if t <= t0:
            return 0.0
        return drug_level(t - t0, params)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    u = np.maximum(t - t0, 0.0)
    return np.where(t > t0, drug_level(u, params), 0.0)


def peak_time(params: StimulantParams) -> float:
    """Time of maximum plasma level, ``ln(alpha/beta) / (alpha - beta)``."""
    a, b = params.alpha, params.beta
    _check_rates(a, b)
    return math.log1p((a - b) / b) / (a - b)
