"""Hybrid systems ``(C, F, D, G)``: fixed-step simulation on hybrid time domains.

Flows are integrated with classical fixed-step RK4.  After every step the
integrator checks whether a jump became enabled or the state left the flow
set; the crossing is then localised by bisection on the step length, so event
times are exact to ``event_tol``.  Jumps are applied only when the system's
``jump_enabled`` predicate says so; a state that leaves ``C`` with jumps
disabled ends the run as a dead solution.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .gain_laws import GainLaw, blow_up_time, contract, dilate

__all__ = [
    "Termination",
    "HybridTime",
    "HybridSystem",
    "HybridArc",
    "IntegrateOptions",
    "OutOfDomain",
    "NonFiniteDerivative",
    "integrate",
    "map_arc_time",
    "sample_at",
    "check_arc_domain",
    "write_trace_csv",
]


class Termination(str, enum.Enum):
    HORIZON = "HorizonReached"
    BLOW_UP_GUARD = "BlowUpGuard"
    JUMP_BUDGET = "JumpBudget"
    DEAD = "DeadSolution"
    CONVERGED = "Converged"


class OutOfDomain(ValueError):
    """A query lies outside the hybrid time domain of an arc."""


class NonFiniteDerivative(FloatingPointError):
    def __init__(self, state, t):
        super().__init__(f"non-finite flow derivative at t={t!r}, state={np.asarray(state).tolist()}")
        self.state = np.asarray(state)
        self.t = t


@dataclass(frozen=True, order=True)
class HybridTime:
    t: float
    j: int


@dataclass
class HybridSystem:
    """Single-valued selection of a hybrid system.

    ``flow_rhs(z, t)`` is the flow map selection, ``jump_map(z, t, j)`` the
    jump map selection.  ``jump_enabled(z, t, j)`` combines membership in the
    jump set with any policy trigger.  ``clip`` optionally projects a state
    after each step (used to hold timers at their caps).
    """

    dimension: int
    flow_rhs: Callable[[np.ndarray, float], np.ndarray]
    flow_in: Callable[[np.ndarray], bool] = lambda z: True
    jump_enabled: Callable[[np.ndarray, float, int], bool] = lambda z, t, j: False
    jump_map: Callable[[np.ndarray, float, int], np.ndarray] = lambda z, t, j: z
    clip: Optional[Callable[[np.ndarray], np.ndarray]] = None
    labels: Sequence[str] = ()


@dataclass
class HybridArc:
    """Samples of a hybrid arc, one row per stored point.

    A jump shows up as two consecutive rows with equal ``t`` and consecutive
    ``j``.
    """

    t: np.ndarray
    j: np.ndarray
    x: np.ndarray
    termination: Termination = Termination.HORIZON
    labels: Sequence[str] = ()

    @property
    def jump_count(self) -> int:
        return int(self.j[-1]) if len(self.j) else 0

    @property
    def segments(self) -> list[tuple[int, np.ndarray, np.ndarray]]:
        out = []
        for jj in range(self.jump_count + 1):
            mask = self.j == jj
            out.append((jj, self.t[mask], self.x[mask]))
        return out

    def jump_times(self) -> np.ndarray:
        idx = np.nonzero(np.diff(self.j) > 0)[0]
        return self.t[idx + 1]

    def column(self, name: str) -> np.ndarray:
        return self.x[:, list(self.labels).index(name)]

    @property
    def final(self) -> np.ndarray:
        return self.x[-1]


@dataclass
class IntegrateOptions:
    """Step size and stop conditions, all expressed in the integration variable."""

    dt: float = 1e-3
    t_max: float = math.inf
    j_max: int = 10_000
    event_tol: float = 1e-10
    # blow-up guard: never integrate past (1 - eps_stop) * T for the given gain
    law: Optional[GainLaw] = None
    mu0: float = 1.0
    eps_stop: float = 0.01
    # optional convergence stop
    error_fn: Optional[Callable[[np.ndarray], float]] = None
    converge_tol: float = 0.0


def _rk4(f, z, t, h):
    k1 = f(z, t)
    k2 = f(z + 0.5 * h * k1, t + 0.5 * h)
    k3 = f(z + 0.5 * h * k2, t + 0.5 * h)
    k4 = f(z + h * k3, t + h)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(sys: HybridSystem, z0, opts: IntegrateOptions | None = None) -> HybridArc:
    """Simulate one maximal-as-far-as-the-stop-conditions solution from ``z0``."""
    opts = opts or IntegrateOptions()
    if not opts.dt > 0:
        raise ValueError("dt must be positive")
    z = np.array(z0, dtype=float)
    if z.shape != (sys.dimension,):
        raise ValueError(f"initial state has shape {z.shape}, expected ({sys.dimension},)")

    t_stop = float(opts.t_max)
    stop_reason = Termination.HORIZON
    if opts.law is not None and opts.law.blows_up:
        guard = (1.0 - opts.eps_stop) * blow_up_time(opts.law, opts.mu0)
        if guard <= t_stop:
            t_stop, stop_reason = guard, Termination.BLOW_UP_GUARD
    if not math.isfinite(t_stop):
        raise ValueError("integration needs a finite horizon (t_max) or a blow-up law")

    def rhs(state, time):
        d = np.asarray(sys.flow_rhs(state, time), dtype=float)
        if not np.all(np.isfinite(d)):
            raise NonFiniteDerivative(state, time)
        return d

    def step(state, time, h):
        out = _rk4(rhs, state, time, h)
        return sys.clip(out) if sys.clip is not None else out

    t, j = 0.0, 0
    if not (sys.flow_in(z) or sys.jump_enabled(z, t, j)):
        raise ValueError("initial state is neither in the flow set nor in the jump set")

    ts, js, xs = [t], [j], [z.copy()]
    termination = stop_reason

    def converged(state):
        return opts.error_fn is not None and opts.error_fn(state) <= opts.converge_tol

    while True:
        if sys.jump_enabled(z, t, j):
            if j >= opts.j_max:
                termination = Termination.JUMP_BUDGET
                break
            z = np.array(sys.jump_map(z, t, j), dtype=float)
            j += 1
            ts.append(t)
            js.append(j)
            xs.append(z.copy())
            continue
        if converged(z):
            termination = Termination.CONVERGED
            break
        if t >= t_stop:
            termination = stop_reason
            break
        if not sys.flow_in(z):
            termination = Termination.DEAD
            break
        h = min(opts.dt, t_stop - t)
        # snap to the horizon when the remainder is round-off
        if t_stop - (t + h) < 1e-12 * max(1.0, abs(t_stop)):
            h = t_stop - t
        z_new = step(z, t, h)
        t_new = t + h if h < t_stop - t else t_stop

        def event(state, time):
            return sys.jump_enabled(state, time, j) or not sys.flow_in(state)

        if event(z_new, t_new):
            lo, hi = 0.0, h
            while hi - lo > opts.event_tol:
                mid = 0.5 * (lo + hi)
                if event(step(z, t, mid), t + mid):
                    hi = mid
                else:
                    lo = mid
            z_hi = step(z, t, hi)
            if sys.jump_enabled(z_hi, t + hi, j):
                z, t = z_hi, t + hi
            else:
                # left the flow set with no jump available: stop at the boundary
                if lo > 0.0:
                    z, t = step(z, t, lo), t + lo
                    ts.append(t)
                    js.append(j)
                    xs.append(z.copy())
                termination = Termination.DEAD
                break
        else:
            z, t = z_new, t_new
        ts.append(t)
        js.append(j)
        xs.append(z.copy())

    return HybridArc(np.array(ts), np.array(js, dtype=int), np.array(xs), termination, tuple(sys.labels))


def check_arc_domain(arc: HybridArc) -> None:
    """Raise ``AssertionError`` unless ``arc`` lives on a valid hybrid time domain."""
    t, j = arc.t, arc.j
    assert t[0] == 0.0 and j[0] == 0, "arcs start at (0, 0)"
    dj = np.diff(j)
    dt = np.diff(t)
    assert np.all((dj == 0) | (dj == 1)), "jump counter must increase by at most one"
    assert np.all(dt[dj == 0] > 0), "time must increase strictly within a segment"
    assert np.all(dt[dj == 1] == 0), "jumps are instantaneous"


def _map_times(times: np.ndarray, fn) -> np.ndarray:
    return np.array([fn(v) for v in times])


def map_arc_time(arc: HybridArc, law: GainLaw, mu0: float, direction: str) -> HybridArc:
    """Re-index an arc between real time ``t`` and dilated time ``s``.

    ``direction="to_dilated"`` applies ``s = D(t)``, ``"to_real"`` applies
    ``t = D^{-1}(s)``; jump indices and state values are untouched.
    """
    if direction == "to_dilated":
        fn = lambda v: dilate(law, mu0, v)  # noqa: E731
    elif direction == "to_real":
        fn = lambda v: contract(law, mu0, v)  # noqa: E731
    else:
        raise ValueError(f"unknown direction {direction!r}")
    try:
        new_t = _map_times(arc.t, fn)
    except ValueError as exc:
        raise OutOfDomain(str(exc)) from exc
    return HybridArc(new_t, arc.j.copy(), arc.x.copy(), arc.termination, arc.labels)


def sample_at(arc: HybridArc, t: float, j: int, tol: float = 0.0) -> np.ndarray:
    """Linear interpolation of the arc at hybrid time ``(t, j)``.

    ``tol`` widens the segment's time interval for queries that sit on a
    jump instant up to round-off; such queries are clamped.
    """
    mask = arc.j == j
    if not np.any(mask):
        raise OutOfDomain(f"jump index {j} not in arc (max {arc.jump_count})")
    ts = arc.t[mask]
    xs = arc.x[mask]
    if t < ts[0] - tol or t > ts[-1] + tol:
        raise OutOfDomain(f"t={t!r} outside [{ts[0]!r}, {ts[-1]!r}] for j={j}")
    t = min(max(t, ts[0]), ts[-1])
    k = int(np.searchsorted(ts, t, side="right")) - 1
    if k >= len(ts) - 1:
        return xs[-1].copy()
    if ts[k] == t:
        return xs[k].copy()
    w = (t - ts[k]) / (ts[k + 1] - ts[k])
    return (1.0 - w) * xs[k] + w * xs[k + 1]


def write_trace_csv(path, arc: HybridArc, law: GainLaw | None = None, mu0: float = 1.0,
                    extra: dict | None = None) -> None:
    """Export ``t,j,s,<state columns...>[,extra columns]``; ``s`` is blank without a law."""
    labels = list(arc.labels) or [f"x{k}" for k in range(arc.x.shape[1])]
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "j", "s", *labels, *extra])
        for k in range(len(arc.t)):
            s = "" if law is None else repr(dilate(law, mu0, arc.t[k]))
            w.writerow([repr(float(arc.t[k])), int(arc.j[k]), s,
                        *(repr(float(v)) for v in arc.x[k]),
                        *(repr(float(col[k])) for col in extra.values())])
