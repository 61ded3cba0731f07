"""Fixed-step method-of-steps integrator for scalar DDEs with one constant delay.

The problem is ``y'(t) = f(t, y(t), y(t - delay))`` with a constant history
before ``t_start``.  Steps are classical RK4.  The delay must be zero or an
integer multiple of the step, so every delayed stage time lands either on a
stored node or on the midpoint of a stored interval; midpoints are filled by
cubic Hermite interpolation of the stored values and derivatives.

Integration proceeds one delay interval at a time: before each interval the
delayed values it needs are already known and are computed in bulk.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

NODE_TOL = 1e-9

Rhs = Callable[[float, float, float], float]


class GridError(ValueError):
    pass


class IntegrationError(RuntimeError):
    """Raised when the right-hand side produces a non-finite value."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t={time!r}")
        self.time = time


def steps_in(span: float, h: float) -> int | None:
    """Return ``span / h`` if it is an integer to within NODE_TOL, else None."""
    ratio = span / h
    k = round(ratio)
    if abs(ratio - k) <= NODE_TOL * max(1.0, abs(ratio)):
        return int(k)
    return None


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    h: float

    def __post_init__(self):
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise GridError("grid bounds must be finite")
        if not self.t_end > self.t_start:
            raise GridError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise GridError(f"step must be > 0, got {self.h}")

    @property
    def n_steps(self) -> int:
        return int(math.floor((self.t_end - self.t_start) / self.h + NODE_TOL))

    def __len__(self) -> int:
        return self.n_steps + 1

    def times(self) -> np.ndarray:
        return self.t_start + self.h * np.arange(self.n_steps + 1)

    def node_index(self, t: float) -> int | None:
        """Index of the node at time ``t``, or None if ``t`` is not a node."""
        k = steps_in(t - self.t_start, self.h)
        if k is None or not 0 <= k <= self.n_steps:
            return None
        return k


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Samples on a grid plus derivative samples for dense output."""

    grid: TimeGrid
    values: np.ndarray
    derivs: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.grid),):
            raise ValueError(f"expected {len(self.grid)} samples, got {values.shape}")
        derivs = self.derivs
        if derivs is None:
            derivs = np.gradient(values, self.grid.h) if len(values) > 1 else np.zeros(1)
        derivs = np.array(derivs, dtype=float)
        if derivs.shape != values.shape:
            raise ValueError("derivative samples must match values")
        values.flags.writeable = False
        derivs.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "derivs", derivs)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times()

    def __len__(self) -> int:
        return len(self.values)

    def __call__(self, t):
        return dense_eval(self, t)


@dataclass(frozen=True)
class DdeProblem:
    rhs: Rhs
    delay: float
    y_hist: float
    y0: float

    def __post_init__(self):
        if not (self.delay >= 0 and math.isfinite(self.delay)):
            raise ValueError(f"delay must be finite and >= 0, got {self.delay}")


def _hermite_mid(y0, y1, f0, f1, h):
    return 0.5 * (y0 + y1) + 0.125 * h * (f0 - f1)


def dense_eval(series: TimeSeries, t):
    """Cubic Hermite interpolation of ``series`` at ``t`` (scalar or array).

    Exact at grid nodes; ``t`` must lie between the first and last node.
    """
    grid = series.grid
    n = grid.n_steps
    t_arr = np.asarray(t, dtype=float)
    u = (t_arr - grid.t_start) / grid.h
    if np.any(u < -NODE_TOL) or np.any(u > n + NODE_TOL) or np.any(np.isnan(u)):
        raise ValueError(f"t outside [{grid.t_start}, {grid.t_start + n * grid.h}]")
    nearest = np.rint(u)
    on_node = np.abs(u - nearest) <= NODE_TOL * np.maximum(1.0, np.abs(u))
    i = np.clip(np.floor(u), 0, max(n - 1, 0)).astype(np.intp)
    i = np.where(on_node, np.clip(nearest, 0, n).astype(np.intp), i)
    if n == 0:
        out = np.broadcast_to(series.values[0], u.shape).astype(float)
        return float(out) if out.ndim == 0 else out

    y, f = series.values, series.derivs
    j = np.minimum(i, n - 1)
    th = np.where(on_node, 0.0, u - j)
    y0, y1, f0, f1 = y[j], y[j + 1], f[j], f[j + 1]
    th2 = th * th
    th3 = th2 * th
    h00 = 2 * th3 - 3 * th2 + 1
    h10 = th3 - 2 * th2 + th
    h01 = -2 * th3 + 3 * th2
    h11 = th3 - th2
    out = h00 * y0 + h10 * grid.h * f0 + h01 * y1 + h11 * grid.h * f1
    out = np.where(on_node, y[i], out)
    return float(out) if out.ndim == 0 else out


def integrate(problem: DdeProblem, grid: TimeGrid) -> TimeSeries:
    """Integrate ``problem`` on ``grid`` and return the sampled solution.

    Raises GridError if the delay is positive but not a whole number of
    steps, and IntegrationError when the right-hand side goes non-finite.
    """
    delay = problem.delay
    h = grid.h
    n = grid.n_steps
    if delay == 0:
        m = 0
    else:
        if delay < h * (1 - NODE_TOL):
            raise GridError(f"delay {delay} shorter than one step {h}")
        m = steps_in(delay, h)
        if m is None:
            raise GridError(f"step {h} does not divide the delay {delay}")

    rhs = problem.rhs
    t_start = grid.t_start
    y_hist = float(problem.y_hist)
    Y = [0.0] * (n + 1)
    F = [0.0] * (n + 1)
    Y[0] = float(problem.y0)
    if not math.isfinite(Y[0]):
        raise IntegrationError("non-finite initial value", t_start)

    def check(v, t):
        if not math.isfinite(v):
            raise IntegrationError("right-hand side produced a non-finite value", t)

    if m == 0:
        _integrate_ode(rhs, Y, F, t_start, h, n, check)
    else:
        _integrate_delayed(rhs, Y, F, t_start, h, n, m, y_hist, check)
    return TimeSeries(grid, np.array(Y), np.array(F))


def _integrate_ode(rhs, Y, F, t_start, h, n, check):
    half = 0.5 * h
    y = Y[0]
    comp = 0.0
    for k in range(n):
        t = t_start + k * h
        tm = t_start + (k + 0.5) * h
        t1 = t_start + (k + 1) * h
        k1 = rhs(t, y, y)
        check(k1, t)
        F[k] = k1
        ya = y + half * k1
        k2 = rhs(tm, ya, ya)
        yb = y + half * k2
        k3 = rhs(tm, yb, yb)
        yc = y + h * k3
        k4 = rhs(t1, yc, yc)
        check(k4, t1)
        y, comp = _add(y, comp, h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4))
        check(y, t1)
        Y[k + 1] = y
    t_end = t_start + n * h
    F[n] = rhs(t_end, y, y)
    check(F[n], t_end)


def _add(y, comp, incr):
    # compensated summation keeps round-off below RK4 truncation on long runs
    z = incr - comp
    s = y + z
    return s, (s - y) - z


def _integrate_delayed(rhs, Y, F, t_start, h, n, m, y_hist, check):
    half = 0.5 * h
    y = Y[0]
    comp = 0.0
    seg_start = 0
    while seg_start < n:
        seg_end = min(seg_start + m, n)
        # node seg_start's derivative is needed for the last midpoint in this segment
        d0 = Y[seg_start - m] if seg_start - m >= 0 else y_hist
        F[seg_start] = rhs(t_start + seg_start * h, y, d0)
        check(F[seg_start], t_start + seg_start * h)
        lag0, lagm, lag1 = _delayed_values(Y, F, seg_start, seg_end, m, h, y_hist)
        for k in range(seg_start, seg_end):
            t = t_start + k * h
            tm = t_start + (k + 0.5) * h
            t1 = t_start + (k + 1) * h
            i = k - seg_start
            if k == seg_start:
                k1 = F[k]
            else:
                k1 = rhs(t, y, lag0[i])
                check(k1, t)
                F[k] = k1
            dm = lagm[i]
            k2 = rhs(tm, y + half * k1, dm)
            k3 = rhs(tm, y + half * k2, dm)
            k4 = rhs(t1, y + h * k3, lag1[i])
            check(k4, t1)
            y, comp = _add(y, comp, h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4))
            check(y, t1)
            Y[k + 1] = y
        seg_start = seg_end
    t_end = t_start + n * h
    F[n] = rhs(t_end, y, Y[n - m] if n - m >= 0 else y_hist)
    check(F[n], t_end)


def _delayed_values(Y, F, lo, hi, m, h, y_hist):
    """Delayed state at the start, midpoint and end of steps lo..hi-1."""
    lag0, lagm, lag1 = [], [], []
    for k in range(lo, hi):
        j = k - m
        if j >= 0:
            lag0.append(Y[j])
            lagm.append(_hermite_mid(Y[j], Y[j + 1], F[j], F[j + 1], h))
            lag1.append(Y[j + 1])
        else:
            lag0.append(y_hist)
            lagm.append(y_hist)
            lag1.append(Y[0] if j + 1 == 0 else y_hist)
    return lag0, lagm, lag1
