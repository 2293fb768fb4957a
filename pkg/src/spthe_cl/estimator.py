"""Switched concurrent learning with dynamic gains.

The closed loop flows as ``theta' = mu * Omega_q(theta, tau)`` with

    Omega_q(theta, tau) = -k_t chi(theta, tau) - k_r (Phi_q theta - Psi_q),

while the data-querying automaton selects ``q`` and the gain ``mu`` grows
according to the chosen :class:`~spthe_cl.gain_laws.GainLaw`.  The same loop
written in dilated time ``s`` (the target loop) has bounded right-hand sides
all the way to the blow-up time, so it is the default way of simulating
blow-up gains; the real-time loop is kept for cross-validation.

This module also evaluates the convergence certificate: the constants of the
ISS-type bound, the bound curve itself, and Lyapunov diagnostics.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .datasets import (
    CORRUPTED,
    Dataset,
    DatasetRegistry,
    corruption_offset,
    recorded_noise,
    residual,
    section5_registry,
)
from .gain_laws import GainLaw, blow_up_time, dilate, dilated_gain_rate, gain_rate
from .hybrid import HybridArc, HybridSystem, IntegrateOptions, Termination, integrate, map_arc_time
from .linalg import spectral_norm
from .signal_model import RegressorModel, TrueSystem, chi, section5_model
from .switching import (
    JUMP_SET_TOL,
    VERIFY_TOL,
    AutomatonParams,
    ConstraintReport,
    RandomPolicy,
    ScriptedPolicy,
    SwitchingSignal,
    automaton_flow_rates,
    generate_switching,
    signal_from_arc,
    verify_daat,
    verify_dadt,
)

__all__ = [
    "EstimatorConfig",
    "section5_config",
    "TheoremConstants",
    "RunResult",
    "EmptySufficientSet",
    "NegativeLambda",
    "omega",
    "error_rhs",
    "build_closed_loop",
    "build_target_loop",
    "run",
    "theorem_constants",
    "input_bound",
    "bound_curve",
    "lyapunov_diagnostics",
    "diagnostics_columns",
    "write_diagnostics_csv",
]


class EmptySufficientSet(ValueError):
    """No sufficiently rich dataset is available: the certificate cannot hold."""


class NegativeLambda(ValueError):
    """The activation-rate condition fails, so the decay rate is not positive."""


@dataclass(frozen=True, eq=False)
class EstimatorConfig:
    system: TrueSystem
    regressor: RegressorModel
    registry: DatasetRegistry
    law: GainLaw
    mu0: float
    automaton: AutomatonParams
    k_t: float = 1.0
    k_r: float = 1.0
    theta0: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.regressor.dimension
        theta0 = np.zeros(n) if self.theta0 is None else np.array(self.theta0, dtype=float)
        if theta0.shape != (n,):
            raise ValueError(f"theta0 has shape {theta0.shape}, expected ({n},)")
        object.__setattr__(self, "theta0", theta0)
        if self.system.dimension != n or self.registry.dimension != n:
            raise ValueError("system, regressor and datasets must share one dimension")
        if self.k_t < 0 or self.k_r <= 0:
            raise ValueError("weights need k_t >= 0 and k_r > 0")
        if self.mu0 < 1:
            raise ValueError("mu0 must be >= 1")
        if set(self.automaton.modes) != set(self.registry.modes):
            raise ValueError("automaton modes must match the registry modes")
        if self.automaton.uninformative != self.registry.uninformative:
            raise ValueError("automaton uninformative modes must be the registry's IR and corrupted modes")

    @property
    def dimension(self) -> int:
        return self.regressor.dimension

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f"theta_{k + 1}" for k in range(self.dimension)) + ("q", "rho_d", "rho_a", "tau", "mu")

    def initial_state(self, q: int, rho_d: Optional[float] = None, rho_a: Optional[float] = None) -> np.ndarray:
        a = self.automaton
        return np.concatenate([
            self.theta0,
            [float(q), a.n0 if rho_d is None else rho_d, a.t0 if rho_a is None else rho_a, 0.0, self.mu0],
        ])


SECTION5_AUTOMATON = dict(tau_d=2.0, tau_a=25.0, n0=2.0, t0=1.0)


def section5_config(law: Optional[GainLaw] = None, mu0: float = 1.0, disturbed: bool = True,
                    modes=(1, 2, 3, 4), theta0=None, k_t: float = 1.0, k_r: float = 1.0,
                    **automaton) -> EstimatorConfig:
    """Benchmark configuration: theta* = (1, -2, 1), Upsilon = 8, tau_d = 2, tau_a = 25.

    ``law`` defaults to the prescribed-time law with ``Upsilon = 8``, which
    blows up at ``T = 8`` for ``mu0 = 1``.  ``modes`` selects which of the
    four recorded datasets are available; ``theta0`` defaults to zero.
    """
    law = GainLaw.prescribed(8.0) if law is None else law
    sys, reg = section5_model(disturbed)
    registry = section5_registry(disturbed, modes)
    params = dict(SECTION5_AUTOMATON, **automaton)
    auto = AutomatonParams.for_registry(registry, **params)
    return EstimatorConfig(sys, reg, registry, law, mu0, auto, k_t, k_r, theta0)


def omega(cfg: EstimatorConfig, theta, tau: float, ds: Dataset) -> np.ndarray:
    """Learning map ``-k_t chi(theta, tau) - k_r (Phi_q theta - Psi_q)``."""
    return -cfg.k_t * chi(cfg.system, cfg.regressor, theta, tau) - cfg.k_r * residual(ds, theta)


def error_rhs(cfg: EstimatorConfig, vartheta, tau: float, q: int, u1: float = 0.0,
              u2=None, u3=None, mask_corrupt: bool = False) -> np.ndarray:
    """Estimation-error vector field with the disturbances as explicit inputs.

    ``u1`` is the real-time disturbance, ``u2`` the recorded disturbances of
    dataset ``q`` (one per sample, used in SR/IR modes) and ``u3`` the
    corruption offset ``Psi_q - Phi_q theta*`` (used in corrupted modes).

    The data-matrix term acts in every mode, which makes the field coincide
    with ``Omega_q(theta* + vartheta)`` after substituting the true inputs.
    ``mask_corrupt=True`` drops it in corrupted modes instead.
    """
    n = cfg.dimension
    vartheta = np.asarray(vartheta, dtype=float)
    if vartheta.shape != (n,):
        raise ValueError(f"error has shape {vartheta.shape}, expected ({n},)")
    ds = cfg.registry[q]
    corrupt = ds.kind == CORRUPTED
    p = cfg.regressor(tau)
    mat = cfg.k_t * np.outer(p, p)
    if not (corrupt and mask_corrupt):
        mat = mat + cfg.k_r * ds.data_matrix
    eta = cfg.k_t * p * float(u1)
    if corrupt:
        u3 = np.zeros(n) if u3 is None else np.asarray(u3, dtype=float)
        if u3.shape != (n,):
            raise ValueError(f"u3 has shape {u3.shape}, expected ({n},)")
        eta = eta + cfg.k_r * u3
    else:
        k = len(ds.samples)
        u2 = np.zeros(k) if u2 is None else np.asarray(u2, dtype=float)
        if u2.shape != (k,):
            raise ValueError(f"u2 has shape {u2.shape}, expected ({k},)")
        if k:
            phis = np.array([s.phi for s in ds.samples])
            eta = eta + cfg.k_r * phis.T @ u2
    return -mat @ vartheta + eta


def _loop(cfg: EstimatorConfig, schedule: SwitchingSignal, dilated: bool) -> HybridSystem:
    n = cfg.dimension
    a = cfg.automaton
    law = cfg.law
    phi_fn = cfg.regressor.phi
    theta_star = cfg.system.theta_star
    dist = cfg.system.disturbance
    k_t, k_r = cfg.k_t, cfg.k_r
    mats = {q: np.asarray(ds.data_matrix) for q, ds in cfg.registry.datasets.items()}
    vecs = {q: np.asarray(ds.data_vector) for q, ds in cfg.registry.datasets.items()}
    modes = set(cfg.registry.modes)
    times = list(schedule.dilated if dilated else schedule.times)
    if dilated and schedule.dilated is None:
        times = [dilate(law, cfg.mu0, t) for t in schedule.times]
    targets = [m for _, m in schedule.jumps]

    def flow_rhs(z, t):
        theta = z[:n]
        q = int(round(z[n]))
        rho_d, rho_a, tau, mu = z[n + 1], z[n + 2], z[n + 3], z[n + 4]
        p = np.asarray(phi_fn(tau), dtype=float)
        psi = p @ theta_star + dist(tau)
        om = -k_t * p * (p @ theta - psi) - k_r * (mats[q] @ theta - vecs[q])
        r_d, r_a = automaton_flow_rates(a, q, rho_d, rho_a)
        out = np.empty(n + 5)
        if dilated:
            out[:n] = om
            out[n:n + 3] = (0.0, r_d, r_a)
            out[n + 3] = 1.0 / mu
            out[n + 4] = dilated_gain_rate(law, mu)
        else:
            out[:n] = mu * om
            out[n:n + 3] = (0.0, mu * r_d, mu * r_a)
            out[n + 3] = 1.0
            out[n + 4] = gain_rate(law, mu)
        return out

    def flow_in(z):
        return (int(round(z[n])) in modes and -VERIFY_TOL <= z[n + 1] <= a.n0 + VERIFY_TOL
                and -VERIFY_TOL <= z[n + 2] <= a.t0 + VERIFY_TOL and z[n + 4] >= 1.0)

    def jump_enabled(z, t, j):
        return j < len(times) and t >= times[j] and z[n + 1] >= 1.0 - JUMP_SET_TOL

    def jump_map(z, t, j):
        out = z.copy()
        out[n] = float(targets[j])
        out[n + 1] = z[n + 1] - 1.0
        return out

    def clip(z):
        z[n + 1] = min(z[n + 1], a.n0)
        z[n + 2] = min(z[n + 2], a.t0)
        return z

    return HybridSystem(n + 5, flow_rhs, flow_in, jump_enabled, jump_map, clip, cfg.labels)


def build_closed_loop(cfg: EstimatorConfig, schedule: SwitchingSignal) -> HybridSystem:
    """Real-time closed loop; jumps follow ``schedule``'s real jump times."""
    return _loop(cfg, schedule, dilated=False)


def build_target_loop(cfg: EstimatorConfig, schedule: SwitchingSignal) -> HybridSystem:
    """Dilated-time loop: unscaled learning and timer flows, ``tau' = 1/mu``, ``mu' = F(mu)/mu``."""
    return _loop(cfg, schedule, dilated=True)


@dataclass
class RunResult:
    cfg: EstimatorConfig
    arc: HybridArc
    dilated_t: np.ndarray
    signal: SwitchingSignal
    schedule: SwitchingSignal
    run_mode: str
    dadt: ConstraintReport
    daat: ConstraintReport

    @property
    def theta(self) -> np.ndarray:
        return self.arc.x[:, : self.cfg.dimension]

    @property
    def error(self) -> np.ndarray:
        return np.linalg.norm(self.theta - self.cfg.system.theta_star, axis=1)

    @property
    def final_error(self) -> float:
        return float(self.error[-1])

    def error_at(self, t: float) -> float:
        """Error at the last stored sample with time <= ``t``."""
        k = int(np.searchsorted(self.arc.t, t, side="right")) - 1
        return float(self.error[max(k, 0)])


def _end_time(cfg: EstimatorConfig, horizon: Optional[float], eps_stop: float) -> float:
    T = blow_up_time(cfg.law, cfg.mu0)
    if math.isfinite(T):
        guard = (1.0 - eps_stop) * T
        return guard if horizon is None else min(horizon, guard)
    if horizon is None:
        raise ValueError("laws without blow-up need an explicit horizon")
    return float(horizon)


def run(
    cfg: EstimatorConfig,
    policy: Union[SwitchingSignal, ScriptedPolicy, RandomPolicy, None] = None,
    mode: Optional[str] = None,
    dt: float = 1e-3,
    eps_stop: float = 0.01,
    horizon: Optional[float] = None,
    initial_mode: Optional[int] = None,
) -> RunResult:
    """Simulate the closed loop.

    ``policy`` is a precomputed switching signal, a policy to plan one, or
    ``None`` to stay in ``initial_mode`` (default: the first SR mode).
    ``mode`` is ``"dilated"`` (default for blow-up laws) or ``"direct"``;
    ``dt`` is the step in the chosen integration variable.
    """
    if mode is None:
        mode = "dilated" if cfg.law.blows_up else "direct"
    if mode not in ("dilated", "direct"):
        raise ValueError(f"unknown run mode {mode!r}")
    t_end = _end_time(cfg, horizon, eps_stop)
    s_end = dilate(cfg.law, cfg.mu0, t_end)
    guarded = cfg.law.blows_up and horizon is None or (
        cfg.law.blows_up and t_end < horizon)

    if isinstance(policy, SwitchingSignal):
        schedule = policy
    elif isinstance(policy, (ScriptedPolicy, RandomPolicy)):
        schedule = generate_switching(cfg.automaton, cfg.law, cfg.mu0, policy, s_end)
    elif policy is None:
        q0 = initial_mode if initial_mode is not None else min(cfg.registry.sufficient or cfg.registry.modes)
        schedule = SwitchingSignal(q0, (), t_end, (), s_end)
    else:
        raise TypeError(f"unsupported policy {policy!r}")

    z0 = cfg.initial_state(schedule.initial_mode)
    if mode == "dilated":
        sys = build_target_loop(cfg, schedule)
        arc_s = integrate(sys, z0, IntegrateOptions(dt=dt, t_max=s_end))
        arc = map_arc_time(arc_s, cfg.law, cfg.mu0, "to_real")
        s_col = arc_s.t
    else:
        sys = build_closed_loop(cfg, schedule)
        arc = integrate(sys, z0, IntegrateOptions(dt=dt, t_max=t_end))
        s_col = np.array([dilate(cfg.law, cfg.mu0, t) for t in arc.t])
    if arc.termination == Termination.HORIZON and guarded:
        arc.termination = Termination.BLOW_UP_GUARD
    signal = signal_from_arc(arc, "q", horizon=float(arc.t[-1]))
    a = cfg.automaton
    dadt = verify_dadt(signal, cfg.law, cfg.mu0, a.tau_d, a.n0)
    daat = verify_daat(signal, cfg.law, cfg.mu0, a.tau_a, a.t0, a.uninformative)
    return RunResult(cfg, arc, s_col, signal, schedule, mode, dadt, daat)


# --------------------------------------------------------------------------
# certificate


@dataclass(frozen=True)
class TheoremConstants:
    kappa_lower: float
    varpi: float
    zeta: float
    lam: float
    c_lower: float
    c_upper: float
    eta_bar: float
    gamma: float
    kappa1: float
    kappa2: float
    kappa3: float
    certified: bool
    tau_a_threshold: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def theorem_constants(cfg: EstimatorConfig) -> TheoremConstants:
    """Constants of the ISS bound for this configuration.

    ``certified`` is False (and ``kappa2``/``kappa3`` are NaN) when
    ``tau_a <= 1 + varpi / (k_r * alpha_min)``.
    """
    reg = cfg.registry
    if not reg.sufficient:
        raise EmptySufficientSet("no sufficiently rich dataset: the set of SR modes is empty")
    a = cfg.automaton
    alpha_min = min(reg[q].alpha for q in reg.sufficient)
    kappa = cfg.k_r * alpha_min
    worst = max((spectral_norm(reg[q].data_matrix) for q in reg.corrupted), default=0.0)
    varpi = 1.0 + cfg.k_r * worst
    zeta = (kappa + varpi) / a.tau_a
    lam = kappa - zeta
    c_upper = math.exp((varpi + kappa) * a.t0) / 2.0
    sums = [sum(math.sqrt(sum(v * v for v in s.phi)) for s in reg[q].samples)
            for q in reg.sufficient | reg.insufficient]
    eta_bar = cfg.k_t * cfg.regressor.phi_bound + cfg.k_r * max([1.0, *sums])
    gamma = c_upper * eta_bar ** 2 / min(1.0, kappa)
    certified = lam > 0
    if certified:
        kappa2 = lam / 4.0 * a.tau_d / (1.0 + a.tau_d)
        kappa1 = math.exp(kappa2 * (varpi + kappa) * a.t0 / 2.0 * a.n0)
        kappa3 = 2.0 * math.sqrt(gamma / lam)
    else:
        kappa1 = kappa2 = kappa3 = math.nan
    threshold = 1.0 + varpi / (cfg.k_r * alpha_min)
    return TheoremConstants(kappa, varpi, zeta, lam, 0.5, c_upper, eta_bar, gamma,
                            kappa1, kappa2, kappa3, certified, threshold)


def check_conditions(cfg: EstimatorConfig) -> TheoremConstants:
    """Compute the constants, warning (not failing) when the rate condition is violated."""
    c = theorem_constants(cfg)
    if not c.certified:
        warnings.warn(
            f"tau_a={cfg.automaton.tau_a} does not exceed {c.tau_a_threshold:.6g}: "
            "condition (b) violated, no convergence certificate",
            stacklevel=2,
        )
    return c


def input_bound(cfg: EstimatorConfig) -> float:
    """Euclidean size of the stacked disturbance input.

    Combines the real-time disturbance bound, the recorded noise of every SR
    and IR dataset, and the largest corruption offset.
    """
    reg = cfg.registry
    theta_star = cfg.system.theta_star
    u1 = cfg.system.disturbance_bound
    u2 = np.concatenate([recorded_noise(reg[q], theta_star) for q in sorted(reg.sufficient | reg.insufficient)]
                        or [np.zeros(0)])
    u3 = max((corruption_offset(reg[q], theta_star) for q in reg.corrupted), default=0.0)
    return math.sqrt(u1 ** 2 + float(u2 @ u2) + u3 ** 2)


def bound_curve(constants: TheoremConstants, law: GainLaw, mu0: float, vartheta0_norm: float, u_sup: float):
    """``(t, j) -> kappa1 |vartheta0| exp(-kappa2 (D(t) + j)) + kappa3 u_sup``."""
    if not constants.certified:
        raise NegativeLambda(f"lambda = {constants.lam:.6g} <= 0; the bound is not certified")
    k1, k2, k3 = constants.kappa1, constants.kappa2, constants.kappa3

    def curve(t: float, j: int = 0) -> float:
        return k1 * vartheta0_norm * math.exp(-k2 * (dilate(law, mu0, t) + j)) + k3 * u_sup

    return curve


def lyapunov_diagnostics(cfg: EstimatorConfig, arc: HybridArc) -> tuple[np.ndarray, np.ndarray]:
    """``W = |theta - theta*|^2 / 2`` and ``V = W exp((kappa + varpi) rho_a)`` along an arc."""
    c = theorem_constants(cfg)
    n = cfg.dimension
    err = arc.x[:, :n] - cfg.system.theta_star
    w = 0.5 * np.sum(err * err, axis=1)
    v = w * np.exp((c.kappa_lower + c.varpi) * arc.x[:, n + 2])
    return w, v


def diagnostics_columns(result: RunResult) -> dict[str, np.ndarray]:
    """Columns ``t, j, s, theta_*, err, mu, q, rho_d, rho_a, W, V, bound``."""
    cfg = result.cfg
    arc = result.arc
    n = cfg.dimension
    cols = {"t": arc.t, "j": arc.j, "s": result.dilated_t}
    for k in range(n):
        cols[f"theta_{k + 1}"] = arc.x[:, k]
    cols["err"] = result.error
    cols["mu"] = arc.x[:, n + 4]
    cols["q"] = np.rint(arc.x[:, n]).astype(int)
    cols["rho_d"] = arc.x[:, n + 1]
    cols["rho_a"] = arc.x[:, n + 2]
    try:
        w, v = lyapunov_diagnostics(cfg, arc)
        c = theorem_constants(cfg)
    except EmptySufficientSet:
        w = 0.5 * result.error ** 2
        v = np.full_like(w, math.nan)
        c = None
    cols["W"] = w
    cols["V"] = v
    if c is not None and c.certified:
        e0 = float(np.linalg.norm(cfg.theta0 - cfg.system.theta_star))
        k1, k2, k3 = c.kappa1, c.kappa2, c.kappa3
        cols["bound"] = k1 * e0 * np.exp(-k2 * (result.dilated_t + arc.j)) + k3 * input_bound(cfg)
    else:
        cols["bound"] = np.full_like(w, math.nan)
    return cols


def write_diagnostics_csv(path, result: RunResult) -> None:
    cols = diagnostics_columns(result)
    names = list(cols)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for k in range(len(result.arc.t)):
            row = []
            for name in names:
                v = cols[name][k]
                row.append(int(v) if name in ("j", "q") else repr(float(v)))
            w.writerow(row)
