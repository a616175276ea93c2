"""Fixed-step RK4 integration of the grounded Kuramoto system x' = Omega + k f(x).

The state is re-projected onto the zero-mean subspace after every step.
Each recorded sample stores L = R^2, the fixed-point residual
||Omega + k f(x)||_inf and, for homogeneous runs, the closed-form
dominating function D(t) >= L(t).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, TextIO

import numpy as np

from .errors import DivergenceError, ParameterError
from .frequencies import FrequencySpec, center
from .order_field import PhaseState, coupling_field, order_magnitude


def default_dt(k: float) -> float:
    return min(0.01, 0.1 / max(1.0, k))


@dataclass(frozen=True)
class SimConfig:
    """Run parameters. ``init=None`` draws uniform phases on [-pi, pi) from ``seed``."""

    k: float
    t_end: float
    dt: Optional[float] = None
    record_every: int = 1
    seed: int = 0
    init: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dt is None:
            object.__setattr__(self, "dt", default_dt(self.k))
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= self.dt:
            raise ParameterError(f"t_end={self.t_end} must be at least dt={self.dt}")
        if self.record_every < 1:
            raise ParameterError(f"record_every must be >= 1, got {self.record_every}")
        if not (self.k >= 0 and math.isfinite(self.k)):
            raise ParameterError(f"k must be non-negative, got {self.k}")

    def initial_state(self, n: int) -> np.ndarray:
        if self.init is None:
            rng = np.random.default_rng(self.seed)
            x = rng.uniform(-np.pi, np.pi, size=n)
        else:
            x = np.array(self.init, dtype=np.float64)
            if x.shape != (n,):
                raise ParameterError(f"initial state has shape {x.shape}, expected ({n},)")
        return x - x.mean()


@dataclass(frozen=True)
class SimTrace:
    times: np.ndarray
    L: np.ndarray
    residual: np.ndarray
    final_state: PhaseState
    converged: bool
    k: float
    D: Optional[np.ndarray] = None


def _rk4_step(x: np.ndarray, Om: np.ndarray, k: float, dt: float) -> np.ndarray:
    def rhs(y):
        return Om + k * coupling_field(y)

    k1 = rhs(x)
    k2 = rhs(x + 0.5 * dt * k1)
    k3 = rhs(x + 0.5 * dt * k2)
    k4 = rhs(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(spec: FrequencySpec, config: SimConfig) -> SimTrace:
    Om = np.asarray(spec.Omega)
    k, dt = config.k, config.dt
    steps = int(round(config.t_end / dt))
    x = config.initial_state(spec.n)

    times, Ls, res = [], [], []

    def record(t, y):
        times.append(t)
        Ls.append(min(float(order_magnitude(y)) ** 2, 1.0))
        res.append(float(np.max(np.abs(Om + k * coupling_field(y)))))

    record(0.0, x)
    for step in range(1, steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = _rk4_step(x, Om, k, dt)
        if not np.all(np.isfinite(nxt)):
            raise DivergenceError("non-finite state during integration", (step - 1) * dt)
        x = nxt - nxt.mean()
        if step % config.record_every == 0 or step == steps:
            record(step * dt, x)

    residual = np.array(res)
    return SimTrace(
        times=np.array(times),
        L=np.array(Ls),
        residual=residual,
        final_state=PhaseState(x),
        converged=bool(residual[-1] < 1e-6 * max(1.0, k)),
        k=k,
    )


def dominating_function(L0: float, k: float, t0: float, t):
    """Upper envelope of L(t) = R^2 along a homogeneous trajectory started with L(t0) = L0."""
    if not 0 < L0 <= 1:
        raise ParameterError(f"L0 must lie in (0, 1], got {L0}")
    if not k > 0:
        raise ParameterError(f"k must be positive, got {k}")
    tau = np.asarray(t, dtype=np.float64) - t0
    if np.any(tau < 0):
        raise ParameterError("t must not precede t0")
    D = 1.0 / (1.0 - np.exp(-2.0 * k * tau) * ((L0 - 1.0) / L0))
    return float(D) if D.ndim == 0 else D


def dominating_crossing_time(L0: float, k: float, t0: float, level: float) -> float:
    """Time at which D(t) reaches ``level`` (t0 if it already starts there)."""
    if not 0 < L0 <= 1 or not 0 < level <= 1:
        raise ParameterError("L0 and level must lie in (0, 1]")
    if L0 >= level:
        return t0
    # 1/level = 1 - exp(-2k tau) (L0 - 1)/L0
    ratio = (1.0 - 1.0 / level) * L0 / (L0 - 1.0)
    return t0 - math.log(ratio) / (2.0 * k)


def homogeneous_run(n: int, k: float, config: SimConfig) -> SimTrace:
    """Identical oscillators (Omega = 0); attaches D(t) when L(t0) > 0."""
    spec = center(np.zeros(n))
    if config.k != k:
        config = SimConfig(k=k, t_end=config.t_end, dt=config.dt, record_every=config.record_every,
                           seed=config.seed, init=config.init)
    trace = integrate(spec, config)
    L0 = float(trace.L[0])
    if L0 > 0 and k > 0:
        D = dominating_function(L0, k, float(trace.times[0]), trace.times)
        trace = SimTrace(trace.times, trace.L, trace.residual, trace.final_state,
                         trace.converged, trace.k, D=D)
    return trace


def convergence_time(trace: SimTrace, threshold: float) -> Optional[float]:
    """First recorded time with L >= threshold."""
    if not 0 < threshold < 1:
        raise ParameterError(f"threshold must lie in (0, 1), got {threshold}")
    hit = np.flatnonzero(trace.L >= threshold)
    return float(trace.times[hit[0]]) if hit.size else None


def write_trace_csv(trace: SimTrace, fh: TextIO) -> None:
    """CSV with header t,L,D,residual; D is blank when not populated."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "L", "D", "residual"])
    for i, t in enumerate(trace.times):
        d = "" if trace.D is None else f"{trace.D[i]:.17g}"
        w.writerow([f"{t:.17g}", f"{trace.L[i]:.17g}", d, f"{trace.residual[i]:.17g}"])
