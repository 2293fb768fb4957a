"""Data-querying automaton: admissible switching signals and their verification.

The automaton state is ``(q, rho_d, rho_a)``: the active dataset, a dwell
budget in ``[0, N0]`` and an activation budget in ``[0, T0]``.  Its timers run
``mu`` times faster in real time, which is why the dwell/activation
constraints are stated in dilated time ``s = D(t)``.  In dilated time they are
the classical average dwell-time and average activation-time bounds, so
signals are planned there with exact budget bookkeeping and mapped back
through :func:`~spthe_cl.gain_laws.contract`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

import numpy as np

from .gain_laws import GainLaw, blow_up_time, contract, dilate, gain_rate
from .hybrid import HybridArc, HybridSystem

__all__ = [
    "AutomatonParams",
    "AutomatonState",
    "SwitchingSignal",
    "ScriptedPolicy",
    "RandomPolicy",
    "PolicyInfeasible",
    "ConstraintReport",
    "VERIFY_TOL",
    "generate_switching",
    "verify_dadt",
    "verify_daat",
    "automaton_hds",
    "automaton_flow_rates",
    "signal_from_arc",
]

VERIFY_TOL = 1e-9
# tolerance on rho_d >= 1 when a scheduled jump is attempted after numerical flow
JUMP_SET_TOL = 1e-6
# absorbs round-off in the planner's closed-form budget arithmetic
_PLAN_EPS = 1e-12
# budget the planner keeps in hand so that verification margins stay >= 0
# after the round trip through contract() and dilate()
_RESERVE = 1e-8


class PolicyInfeasible(ValueError):
    """A switching request cannot be realised within the automaton budgets."""


@dataclass(frozen=True)
class AutomatonParams:
    tau_d: float
    tau_a: float
    n0: float
    t0: float
    modes: tuple[int, ...]
    uninformative: frozenset = frozenset()

    def __post_init__(self):
        if not self.tau_d > 0:
            raise ValueError(f"tau_d must be > 0, got {self.tau_d}")
        if not self.tau_a > 1:
            raise ValueError(f"tau_a must be > 1, got {self.tau_a}")
        if not self.n0 >= 1:
            raise ValueError(f"N0 must be >= 1, got {self.n0}")
        if not self.t0 > 0:
            raise ValueError(f"T0 must be > 0, got {self.t0}")
        modes = tuple(sorted(int(q) for q in self.modes))
        if not modes:
            raise ValueError("the automaton needs at least one mode")
        object.__setattr__(self, "modes", modes)
        bad = frozenset(int(q) for q in self.uninformative)
        if not bad <= set(modes):
            raise ValueError(f"uninformative modes {sorted(bad - set(modes))} are not automaton modes")
        object.__setattr__(self, "uninformative", bad)

    @classmethod
    def for_registry(cls, registry, tau_d, tau_a, n0, t0) -> "AutomatonParams":
        return cls(tau_d, tau_a, n0, t0, registry.modes, registry.uninformative)

    @property
    def informative(self) -> tuple[int, ...]:
        return tuple(q for q in self.modes if q not in self.uninformative)

    @property
    def drain_rate(self) -> float:
        """Dilated-time decrease rate of ``rho_a`` in uninformative modes."""
        return 1.0 - 1.0 / self.tau_a

    @property
    def max_uninformative_dwell(self) -> float:
        """Longest dilated stay in an uninformative mode, from a full budget."""
        return self.t0 / self.drain_rate


@dataclass(frozen=True)
class AutomatonState:
    q: int
    rho_d: float
    rho_a: float


@dataclass(frozen=True)
class SwitchingSignal:
    """Piecewise-constant mode signal ``q(t, j)``.

    ``jumps`` holds ``(t_j, new_mode)`` in non-decreasing time order; several
    jumps may share an instant.  ``dilated`` optionally records the planning
    times ``s_j`` the real times were obtained from.
    """

    initial_mode: int
    jumps: tuple[tuple[float, int], ...]
    horizon: float
    dilated: Optional[tuple[float, ...]] = None
    dilated_horizon: Optional[float] = None

    def __post_init__(self):
        jumps = tuple((float(t), int(m)) for t, m in self.jumps)
        object.__setattr__(self, "jumps", jumps)
        times = [t for t, _ in jumps]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("jump times must be non-decreasing")
        if times and (times[0] < 0 or times[-1] >= self.horizon):
            raise ValueError("jump times must lie in [0, horizon)")
        prev = self.initial_mode
        for _, m in jumps:
            if m == prev:
                raise ValueError(f"jump to the already active mode {m}")
            prev = m

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.jumps])

    @property
    def modes(self) -> list[int]:
        """Mode of every segment ``j = 0..J``."""
        return [self.initial_mode] + [m for _, m in self.jumps]

    def mode_at(self, t: float, j: Optional[int] = None) -> int:
        if j is not None:
            return self.modes[j]
        k = int(np.searchsorted(self.times, t, side="right"))
        return self.modes[k]


# --------------------------------------------------------------------------
# policies


@dataclass(frozen=True)
class ScriptedPolicy:
    """Cycle through ``(dilated dwell, mode)`` steps.

    The mode of each step is held for (at least) its dwell, then the next step
    begins.  Informative segments are lengthened when the budgets require it;
    uninformative dwells are never altered.
    """

    steps: tuple[tuple[float, int], ...]
    cycle: bool = True

    def __post_init__(self):
        steps = tuple((float(d), int(m)) for d, m in self.steps)
        if not steps:
            raise ValueError("a scripted policy needs at least one step")
        if any(d < 0 for d, _ in steps):
            raise ValueError("dwell times must be >= 0")
        object.__setattr__(self, "steps", steps)


@dataclass(frozen=True)
class RandomPolicy:
    """Uniform dilated dwells in ``[min_dwell, max_dwell]``, next mode by weight.

    Uninformative dwells are truncated to what the activation budget allows,
    and a mode that cannot be entered is replaced by an informative one.
    """

    min_dwell: float
    max_dwell: float
    seed: int = 0
    weights: Optional[Mapping[int, float]] = None
    initial_mode: Optional[int] = None

    def __post_init__(self):
        if not 0 <= self.min_dwell <= self.max_dwell:
            raise ValueError("need 0 <= min_dwell <= max_dwell")


Policy = Union[ScriptedPolicy, RandomPolicy]


class _Planner:
    """Exact dilated-time bookkeeping of the automaton timers."""

    def __init__(self, params: AutomatonParams, rho_d: float, rho_a: float):
        self.p = params
        self.rho_d = rho_d
        self.rho_a = rho_a

    def bad(self, q: int) -> bool:
        return q in self.p.uninformative

    def exit_state(self, q: int, dur: float) -> tuple[float, float]:
        p = self.p
        rd = min(p.n0, self.rho_d + dur / p.tau_d)
        if self.bad(q):
            ra = self.rho_a - dur * p.drain_rate
        else:
            ra = min(p.t0, self.rho_a + dur / p.tau_a)
        return rd, ra

    def entry_ok(self, rd: float, ra: float, next_mode: int, next_dwell: float) -> bool:
        """Can we jump now (budgets ``rd``, ``ra``) into ``next_mode`` for ``next_dwell``?"""
        if rd < 1.0 - _PLAN_EPS:
            return False
        if not self.bad(next_mode):
            return True
        if ra < next_dwell * self.p.drain_rate - _PLAN_EPS:
            return False
        # the uninformative segment cannot be lengthened, so it must earn its own exit jump
        return min(self.p.n0, rd - 1.0 + next_dwell / self.p.tau_d) >= 1.0 - _PLAN_EPS

    def required_dwell(self, q: int, dwell: float, next_mode: int, next_dwell: float) -> float:
        """Smallest dwell >= ``dwell`` in informative mode ``q`` that admits the next jump."""
        p = self.p
        r_need = 1.0
        a_need = 0.0
        if self.bad(next_mode):
            r_need = max(1.0, 2.0 - next_dwell / p.tau_d)
            a_need = next_dwell * p.drain_rate
        if r_need > p.n0 + _PLAN_EPS or a_need > p.t0 + _PLAN_EPS:
            raise PolicyInfeasible(
                f"entering mode {next_mode} for dilated dwell {next_dwell} exceeds the "
                f"budgets N0={p.n0}, T0={p.t0}"
            )
        r_need = min(p.n0, r_need + _RESERVE)
        a_need = min(p.t0, a_need + _RESERVE)
        need = dwell
        if self.rho_d < r_need:
            need = max(need, p.tau_d * (r_need - self.rho_d))
        if self.rho_a < a_need:
            need = max(need, p.tau_a * (a_need - self.rho_a))
        return need

    def advance(self, q: int, dur: float) -> None:
        self.rho_d, self.rho_a = self.exit_state(q, dur)

    def jump(self) -> None:
        self.rho_d -= 1.0


def _scripted_requests(policy: ScriptedPolicy):
    k = 0
    steps = policy.steps
    while True:
        if k >= len(steps):
            if not policy.cycle:
                return
            k = 0
        yield steps[k]
        k += 1


def generate_switching(
    params: AutomatonParams,
    law: GainLaw,
    mu0: float,
    policy: Policy,
    dilated_horizon: float,
    rho_d0: Optional[float] = None,
    rho_a0: Optional[float] = None,
) -> SwitchingSignal:
    """Plan an admissible signal on ``[0, dilated_horizon)`` and map it to real time.

    Budgets start full unless ``rho_d0``/``rho_a0`` are given.  The result
    satisfies both dilated constraints by construction.
    """
    if not dilated_horizon > 0 or math.isinf(dilated_horizon):
        raise ValueError("dilated_horizon must be positive and finite")
    plan = _Planner(params, params.n0 if rho_d0 is None else rho_d0,
                    params.t0 if rho_a0 is None else rho_a0)
    jumps: list[tuple[float, int]] = []

    if isinstance(policy, ScriptedPolicy):
        requests = _scripted_requests(policy)
        dwell, q = next(requests)
        _check_mode(params, q)
        if plan.bad(q) and dwell * params.drain_rate > plan.rho_a:
            raise PolicyInfeasible(f"initial dwell {dwell} in mode {q} exceeds the activation budget")
        initial = q
        s = 0.0
        for nxt_dwell, nxt in requests:
            _check_mode(params, nxt)
            if nxt == q:
                dwell += nxt_dwell
                if s + dwell >= dilated_horizon or nxt_dwell <= 0.0:
                    break
                continue
            if plan.bad(q):
                rd, ra = plan.exit_state(q, dwell)
                if ra < -_PLAN_EPS:
                    raise PolicyInfeasible(f"dwell {dwell} in mode {q} exhausts the activation budget")
                if not plan.entry_ok(rd, ra, nxt, nxt_dwell):
                    raise PolicyInfeasible(
                        f"cannot leave mode {q} at s={s + dwell:.6g} into mode {nxt}: budgets "
                        f"rho_d={rd:.6g}, rho_a={ra:.6g}"
                    )
            else:
                dwell = plan.required_dwell(q, dwell, nxt, nxt_dwell)
            if s + dwell >= dilated_horizon:
                break
            plan.advance(q, dwell)
            plan.jump()
            s += dwell
            jumps.append((s, nxt))
            q, dwell = nxt, nxt_dwell
    elif isinstance(policy, RandomPolicy):
        rng = np.random.default_rng(policy.seed)
        modes = params.modes
        informative = params.informative
        if not informative:
            raise PolicyInfeasible("no informative mode to recharge the budgets")
        q = policy.initial_mode if policy.initial_mode is not None else informative[0]
        _check_mode(params, q)
        initial = q
        cap = (params.t0 - 2 * _RESERVE) / params.drain_rate

        def draw_dwell(mode):
            d = float(rng.uniform(policy.min_dwell, policy.max_dwell))
            return min(d, cap) if plan.bad(mode) else d

        def draw_mode(cur, only_informative=False):
            pool = [m for m in (informative if only_informative else modes) if m != cur]
            if not pool:
                return None
            w = np.array([1.0 if policy.weights is None else float(policy.weights.get(m, 0.0)) for m in pool])
            if w.sum() <= 0:
                w = np.ones(len(pool))
            return int(pool[rng.choice(len(pool), p=w / w.sum())])

        dwell = draw_dwell(q)
        if plan.bad(q):
            dwell = min(dwell, (plan.rho_a - _RESERVE) / params.drain_rate)
        s = 0.0
        while True:
            nxt = draw_mode(q)
            if nxt is None:
                break
            nxt_dwell = draw_dwell(nxt)
            if plan.bad(q):
                rd, ra = plan.exit_state(q, dwell)
                if plan.bad(nxt):
                    nxt_dwell = min(nxt_dwell, max(0.0, (ra - _RESERVE) / params.drain_rate))
                if not plan.entry_ok(rd, ra, nxt, nxt_dwell):
                    nxt = draw_mode(q, only_informative=True)
                    if nxt is None or not plan.entry_ok(rd, ra, nxt, nxt_dwell):
                        # stay longer is impossible in a draining mode; the plan was built to avoid this
                        raise PolicyInfeasible(f"stuck in mode {q} at s={s + dwell:.6g}")
                    nxt_dwell = draw_dwell(nxt)
            else:
                dwell = plan.required_dwell(q, dwell, nxt, nxt_dwell)
            if s + dwell >= dilated_horizon:
                break
            plan.advance(q, dwell)
            plan.jump()
            s += dwell
            jumps.append((s, nxt))
            q, dwell = nxt, nxt_dwell
    else:
        raise TypeError(f"unsupported policy {policy!r}")

    s_times = tuple(sj for sj, _ in jumps)
    real = tuple((contract(law, mu0, sj), m) for sj, m in jumps)
    horizon = contract(law, mu0, dilated_horizon)
    return SwitchingSignal(initial, real, horizon, s_times, float(dilated_horizon))


def _check_mode(params: AutomatonParams, q: int) -> None:
    if q not in params.modes:
        raise PolicyInfeasible(f"mode {q} is not one of the automaton modes {params.modes}")


# --------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class ConstraintReport:
    """Outcome of a dwell/activation check.

    ``worst_margin`` is the smallest slack over all checked interval pairs;
    ``witness`` is ``((t1, j1), (t2, j2))`` for the worst pair when the check
    fails (``None`` on success).
    """

    name: str
    ok: bool
    worst_margin: float
    witness: Optional[tuple[tuple[float, int], tuple[float, int]]] = None

    def __str__(self):
        status = "ok" if self.ok else "VIOLATED"
        text = f"{self.name}: {status}, worst margin {self.worst_margin:.6g}"
        if self.witness is not None:
            (t1, j1), (t2, j2) = self.witness
            text += f", witness (t1={t1:.9g}, j1={j1}) -> (t2={t2:.9g}, j2={j2})"
        return text


def _dilated_times(sig: SwitchingSignal, law: GainLaw, mu0: float) -> tuple[np.ndarray, float]:
    T = blow_up_time(law, mu0)
    if len(sig.jumps) and sig.times[-1] >= T:
        raise ValueError(f"jump at t={sig.times[-1]} is at or after the blow-up time {T}")
    s = np.array([dilate(law, mu0, t) for t in sig.times])
    horizon = min(sig.horizon, T * (1.0 - 1e-9)) if math.isfinite(T) else sig.horizon
    return s, dilate(law, mu0, horizon)


def verify_dadt(sig: SwitchingSignal, law: GainLaw, mu0: float, tau_d: float, n0: float) -> ConstraintReport:
    """Check ``j2 - j1 <= (D(t2) - D(t1)) / tau_d + N0`` over all domain pairs.

    The jump count is piecewise constant, so the worst pairs start just
    before a jump ``a`` and end just after a jump ``b >= a``.
    """
    s, _ = _dilated_times(sig, law, mu0)
    worst = float(n0)
    witness = None
    times = sig.times
    for a in range(len(s)):
        # slack for the pair (a, b): (s_b - s_a)/tau_d + N0 - (b - a + 1)
        slack = (s[a:] - s[a]) / tau_d + n0 - (np.arange(a, len(s)) - a + 1)
        k = int(np.argmin(slack))
        if slack[k] < worst:
            worst = float(slack[k])
            b = a + k
            witness = ((float(times[a]), a), (float(times[b]), b + 1))
    ok = worst >= -VERIFY_TOL
    return ConstraintReport("D-ADT", ok, worst, None if ok else witness)


def verify_daat(sig: SwitchingSignal, law: GainLaw, mu0: float, tau_a: float, t0: float,
                iq_modes: Iterable[int]) -> ConstraintReport:
    """Check ``int mu 1{q uninformative} dt <= (D(t2) - D(t1)) / tau_a + T0``.

    Because ``dD/dt = mu``, the integral over a segment is the dilated length
    of that segment, so the activation is evaluated exactly.
    """
    bad = set(int(q) for q in iq_modes)
    s, s_end = _dilated_times(sig, law, mu0)
    real = np.concatenate([[0.0], sig.times, [sig.horizon]])
    pts = np.concatenate([[0.0], s, [s_end]])
    modes = sig.modes
    # g(s) = activation(s) - s/tau_a at every breakpoint; the bound is g(s2) - g(s1) <= T0
    act = np.zeros(len(pts))
    for k in range(len(modes)):
        seg = pts[k + 1] - pts[k]
        act[k + 1] = act[k] + (seg if modes[k] in bad else 0.0)
    g = act - pts / tau_a
    worst = float(t0)
    witness = None
    running_min, arg_min = g[0], 0
    for k in range(1, len(g)):
        slack = t0 - (g[k] - running_min)
        if slack < worst:
            worst = float(slack)
            witness = ((float(real[arg_min]), arg_min), (float(real[k]), k - 1))
        if g[k] < running_min:
            running_min, arg_min = g[k], k
    ok = worst >= -VERIFY_TOL
    return ConstraintReport("D-AAT", ok, worst, None if ok else witness)


# --------------------------------------------------------------------------
# the automaton as a hybrid system


def automaton_flow_rates(params: AutomatonParams, q: int, rho_d: float, rho_a: float) -> tuple[float, float]:
    """Dilated-time timer rates of the default selection.

    Timers run at the maximal admissible rate and stop at their caps; in an
    uninformative mode ``rho_a`` drains at ``1 - 1/tau_a``.
    """
    rd = 1.0 / params.tau_d if rho_d < params.n0 else 0.0
    if q in params.uninformative:
        ra = 1.0 / params.tau_a - 1.0
    else:
        ra = 1.0 / params.tau_a if rho_a < params.t0 else 0.0
    return rd, ra


def automaton_hds(
    params: AutomatonParams,
    schedule: SwitchingSignal,
    law: GainLaw,
    dilated: bool = False,
) -> HybridSystem:
    """Automaton over the state ``(q, rho_d, rho_a, mu)``.

    Jumps fire when the integration time reaches the next scheduled jump of
    ``schedule`` and ``rho_d >= 1``; the new mode is taken from the schedule.
    With ``dilated=True`` the integration variable is ``s`` and the schedule's
    dilated times are used.
    """
    if dilated and schedule.dilated is None:
        raise ValueError("a dilated automaton needs a schedule with dilated jump times")
    times = list(schedule.dilated if dilated else schedule.times)
    modes = [m for _, m in schedule.jumps]
    mode_set = set(params.modes)

    def flow_rhs(z, t):
        q, rd, ra, mu = z
        r_d, r_a = automaton_flow_rates(params, int(round(q)), rd, ra)
        if dilated:
            return np.array([0.0, r_d, r_a, gain_rate(law, mu) / mu])
        return np.array([0.0, mu * r_d, mu * r_a, gain_rate(law, mu)])

    def flow_in(z):
        q, rd, ra, mu = z
        return (int(round(q)) in mode_set and -VERIFY_TOL <= rd <= params.n0 + VERIFY_TOL
                and -VERIFY_TOL <= ra <= params.t0 + VERIFY_TOL and mu >= 1.0)

    def jump_enabled(z, t, j):
        return j < len(times) and t >= times[j] and z[1] >= 1.0 - JUMP_SET_TOL

    def jump_map(z, t, j):
        return np.array([float(modes[j]), z[1] - 1.0, z[2], z[3]])

    def clip(z):
        z = z.copy()
        z[1] = min(z[1], params.n0)
        z[2] = min(z[2], params.t0)
        return z

    return HybridSystem(4, flow_rhs, flow_in, jump_enabled, jump_map, clip, ("q", "rho_d", "rho_a", "mu"))


def signal_from_arc(arc: HybridArc, q_column: int | str = "q", horizon: Optional[float] = None) -> SwitchingSignal:
    """Project the mode component of an arc onto a switching signal."""
    col = arc.column(q_column) if isinstance(q_column, str) else arc.x[:, q_column]
    q = np.rint(col).astype(int)
    idx = np.nonzero(np.diff(arc.j) > 0)[0] + 1
    jumps = tuple((float(arc.t[k]), int(q[k])) for k in idx)
    end = float(arc.t[-1]) if horizon is None else float(horizon)
    if jumps and jumps[-1][0] >= end:
        end = math.nextafter(jumps[-1][0], math.inf)
    return SwitchingSignal(int(q[0]), jumps, end)
