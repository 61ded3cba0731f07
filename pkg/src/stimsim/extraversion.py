"""Extraversion response to a single stimulant dose.

The activation level ``y`` relaxes toward the tonic level ``b`` at rate ``a``,
is driven up by the plasma curve (excitation, weight ``p/b``) and, once the
inhibitor delay has elapsed, is pulled down by a delayed opponent term
``b*q*s(t - tau - t0)*y(t - tau - t0)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dde import DdeProblem, GridError, TimeGrid, TimeSeries, dense_eval, integrate
from .pk import StimulantParams, _level, shifted_drug_level

CANONICAL_B = {"extrovert": 0.5, "ambivert": 1.0, "introvert": 1.5}
RETURN_BAND = 0.05


@dataclass(frozen=True)
class PersonalityProfile:
    label: str
    b: float
    y0: float = None
    expert: bool = False

    def __post_init__(self):
        if not (self.b > 0 and math.isfinite(self.b)):
            raise ValueError(f"tonic level b must be > 0, got {self.b}")
        if self.y0 is None:
            object.__setattr__(self, "y0", float(self.b))
        elif self.y0 != self.b and not self.expert:
            raise ValueError("y0 differs from b; pass expert=True to override the initial value")

    @classmethod
    def canonical(cls, label: str) -> "PersonalityProfile":
        try:
            return cls(label, CANONICAL_B[label])
        except KeyError:
            raise ValueError(
                f"unknown personality {label!r}; expected one of {sorted(CANONICAL_B)}"
            ) from None


def canonical_profiles() -> list[PersonalityProfile]:
    return [PersonalityProfile.canonical(k) for k in ("extrovert", "ambivert", "introvert")]


@dataclass(frozen=True)
class DynamicsParams:
    a: float = 0.025
    p: float = 0.8
    q: float = 0.15
    tau: float = 340.0
    t0: float = 5.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"a must be > 0, got {self.a}")
        for name in ("p", "q", "tau", "t0"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


def rhs(t, y_now, y_delayed, stim: StimulantParams, dyn: DynamicsParams, prof: PersonalityProfile):
    """dy/dt at time ``t`` given the current and delayed activation."""
    b = prof.b
    out = dyn.a * (b - y_now) + dyn.p / b * shifted_drug_level(t, dyn.t0, stim)
    if t > dyn.t0 + dyn.tau:
        out -= b * dyn.q * shifted_drug_level(t - dyn.tau, dyn.t0, stim) * y_delayed
    return out


def _fast_rhs(stim: StimulantParams, dyn: DynamicsParams, prof: PersonalityProfile):
    # same arithmetic as rhs() with validation hoisted out of the inner loop
    a, b = dyn.a, prof.b
    gain = dyn.p / b
    inhib = b * dyn.q
    t0 = dyn.t0
    switch = dyn.t0 + dyn.tau
    lag = dyn.tau + dyn.t0
    d, al, be = stim.d, stim.alpha, stim.beta
    level = _level

    def f(t, y, y_lag):
        out = a * (b - y)
        if t > t0:
            out += gain * level(t - t0, d, al, be)
            if t > switch:
                out -= inhib * level(t - lag, d, al, be) * y_lag
        return out

    return f


@dataclass(frozen=True, eq=False)
class SimulationResult:
    y: TimeSeries
    s: TimeSeries
    excitation: TimeSeries
    inhibition: TimeSeries
    balance: TimeSeries
    profile: PersonalityProfile
    stim: StimulantParams
    dyn: DynamicsParams

    @property
    def grid(self) -> TimeGrid:
        return self.y.grid

    @property
    def times(self) -> np.ndarray:
        return self.grid.times()

    @property
    def balance_about_tonic(self) -> np.ndarray:
        return self.profile.b + self.balance.values


def check_grid(grid: TimeGrid, dyn: DynamicsParams) -> None:
    """Require t_start = 0 and intake / inhibitor onset times on grid nodes."""
    if grid.t_start != 0:
        raise GridError(f"simulation grid must start at 0, got {grid.t_start}")
    for name, t in (("t0", dyn.t0), ("t0 + tau", dyn.t0 + dyn.tau)):
        if t <= grid.t_end and grid.node_index(t) is None:
            raise GridError(f"step {grid.h} does not put {name}={t} on a grid node")


def simulate(
    profile: PersonalityProfile,
    stim: StimulantParams | None = None,
    dyn: DynamicsParams | None = None,
    grid: TimeGrid | None = None,
) -> SimulationResult:
    stim = stim or StimulantParams()
    dyn = dyn or DynamicsParams()
    grid = grid or TimeGrid(0.0, 725.0, 0.01)
    check_grid(grid, dyn)
    problem = DdeProblem(
        rhs=_fast_rhs(stim, dyn, profile),
        delay=dyn.tau + dyn.t0,
        y_hist=profile.b,
        y0=profile.y0,
    )
    y = integrate(problem, grid)
    t = grid.times()
    s = shifted_drug_level(t, dyn.t0, stim)
    e = excitation_series(t, stim, dyn, profile)
    i = inhibition_series(t, y, stim, dyn, profile)
    return SimulationResult(
        y=y,
        s=TimeSeries(grid, s),
        excitation=TimeSeries(grid, e),
        inhibition=TimeSeries(grid, i),
        balance=TimeSeries(grid, balance_series(e, i)),
        profile=profile,
        stim=stim,
        dyn=dyn,
    )


def excitation_series(t, stim, dyn, profile) -> np.ndarray:
    return dyn.p / profile.b * shifted_drug_level(np.asarray(t, dtype=float), dyn.t0, stim)


def inhibition_series(t, y: TimeSeries, stim, dyn, profile) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    # strictly after onset; at onset the delayed drug level is exactly zero anyway
    late = t > dyn.t0 + dyn.tau
    if np.any(late):
        tl = t[late]
        s_lag = shifted_drug_level(tl - dyn.tau, dyn.t0, stim)
        out[late] = profile.b * dyn.q * s_lag * dense_eval(y, tl - dyn.tau - dyn.t0)
    return out


def balance_series(excitation, inhibition) -> np.ndarray:
    return np.asarray(excitation) - np.asarray(inhibition)


@dataclass(frozen=True)
class Metrics:
    peak_y: float
    peak_y_time: float
    peak_excursion: float
    undershoot_min: float
    return_time: float
    negative_y: bool


def _cubic_extremum(series: TimeSeries, k: int, sign: float) -> tuple[float, float]:
    """Refine a sampled extremum at node ``k`` using the Hermite interpolant."""
    grid = series.grid
    n = grid.n_steps
    times = grid.times()
    best_t, best_v = float(times[k]), float(series.values[k])
    y, f, h = series.values, series.derivs, grid.h
    for j in (k - 1, k):
        if j < 0 or j >= n:
            continue
        # derivative of the Hermite cubic in theta is a quadratic A th^2 + B th + C
        y0, y1, f0, f1 = y[j], y[j + 1], h * f[j], h * f[j + 1]
        A = 6 * y0 + 3 * f0 - 6 * y1 + 3 * f1
        B = -6 * y0 - 4 * f0 + 6 * y1 - 2 * f1
        C = f0
        roots = np.roots([A, B, C]) if (A or B) else []
        for r in roots:
            if abs(r.imag) > 1e-12 or not 0 < r.real < 1:
                continue
            tc = float(times[j] + r.real * h)
            vc = dense_eval(series, tc)
            if sign * vc > sign * best_v:
                best_t, best_v = tc, vc
    return best_t, best_v


def _band_exit(series: TimeSeries, b: float, j: int, tol: float) -> float:
    """Time in interval j at which |y - b| falls back to tol (bisection)."""
    times = series.grid.times()
    lo, hi = float(times[j]), float(times[j + 1])
    g = lambda t: abs(dense_eval(series, t) - b) - tol
    if g(lo) <= 0:
        return lo
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def summary_metrics(result: SimulationResult, band: float = RETURN_BAND) -> Metrics:
    """Peak, undershoot and return-to-tonic time of the activation curve.

    The return time is the first moment after the peak from which ``y`` stays
    within ``band * b`` of ``b`` until the end of the run (the final time if
    it never settles, the first time if it never leaves the band).
    """
    y = result.y
    if len(y) == 0:
        raise ValueError("empty series")
    b = result.profile.b
    vals = y.values
    times = y.grid.times()
    k = int(np.argmax(vals))
    peak_t, peak_v = _cubic_extremum(y, k, 1.0)

    after = vals[k:]
    km = k + int(np.argmin(after))
    _, low = _cubic_extremum(y, km, -1.0)
    undershoot = min(low, float(after.min())) - b

    tol = band * b
    outside = np.nonzero(np.abs(vals - b) > tol)[0]
    if outside.size == 0:
        ret = float(times[0])
    elif outside[-1] == len(vals) - 1:
        ret = float(times[-1])
    else:
        ret = _band_exit(y, b, int(outside[-1]), tol)

    return Metrics(
        peak_y=peak_v,
        peak_y_time=peak_t,
        peak_excursion=peak_v - b,
        undershoot_min=undershoot,
        return_time=ret,
        negative_y=bool(np.any(vals < 0)),
    )
