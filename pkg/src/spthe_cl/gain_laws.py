"""Dynamic gains and the time dilation they induce.

A :class:`GainLaw` selects one member of the family of gain ODEs
``mu' = F(mu)``: exponential growth for ``ell == 1``, finite-time blow-up for
``ell > 1`` (with ``ell == inf`` the classical prescribed-time gain), plus a
frozen variant (``mu' = 0``) used to express standard concurrent learning.

Every law comes with a dilation ``D_c : [0, T_c) -> [0, inf)`` satisfying
``dD/dt = mu(t)`` when ``c = mu(0)``, and its inverse ``contract``.  All
closed forms are written with ``expm1``/``log1p`` so they stay accurate both
near ``t = 0`` and near the blow-up time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "GainLaw",
    "GainDomainError",
    "gain_rate",
    "gain_solution",
    "blow_up_time",
    "dilate",
    "contract",
    "dilated_gain_rate",
    "dilated_gain_solution",
    "prescribed_mu0",
]

# relative distance to the blow-up time below which evaluations are refused
BLOW_UP_GUARD = 1e-12


class GainDomainError(ValueError):
    """Raised when a gain or dilation is evaluated outside its domain."""


@dataclass(frozen=True)
class GainLaw:
    """Member of the dynamic-gain family.

    Parameters
    ----------
    ell : float
        Exponent parameter, ``ell >= 1``.  ``math.inf`` is a distinguished
        value and is dispatched exactly (never treated as a large float).
    upsilon : float
        Time constant ``Upsilon > 0``.
    frozen : bool
        If True the gain does not evolve (``mu' = 0``); ``ell`` is ignored.
    """

    ell: float = math.inf
    upsilon: float = 1.0
    frozen: bool = False

    def __post_init__(self):
        ell = float(self.ell)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "upsilon", float(self.upsilon))
        if math.isnan(ell) or ell < 1.0:
            raise ValueError(f"ell must be >= 1 or inf, got {self.ell!r}")
        if not (self.upsilon > 0.0 and math.isfinite(self.upsilon)):
            raise ValueError(f"upsilon must be positive and finite, got {self.upsilon!r}")

    @classmethod
    def exponential(cls, upsilon: float) -> "GainLaw":
        return cls(1.0, upsilon)

    @classmethod
    def prescribed(cls, upsilon: float) -> "GainLaw":
        return cls(math.inf, upsilon)

    @classmethod
    def constant(cls) -> "GainLaw":
        """Frozen gain, ``mu == mu0`` for all time."""
        return cls(1.0, 1.0, frozen=True)

    @property
    def kind(self) -> str:
        if self.frozen:
            return "frozen"
        if self.ell == 1.0:
            return "exponential"
        if math.isinf(self.ell):
            return "prescribed"
        return "power"

    @property
    def blows_up(self) -> bool:
        return self.kind in ("power", "prescribed")

    def label(self) -> str:
        if self.frozen:
            return "frozen"
        return "inf" if math.isinf(self.ell) else repr(self.ell)

    @classmethod
    def parse(cls, text: str, upsilon: float = 1.0) -> "GainLaw":
        """Build a law from a CLI/config token: ``"inf"``, ``"frozen"`` or a number."""
        token = str(text).strip().lower()
        if token == "frozen":
            return cls.constant()
        if token in ("inf", "infinity", "∞"):
            return cls(math.inf, upsilon)
        return cls(float(token), upsilon)


def _check_mu(mu: float) -> float:
    mu = float(mu)
    if not math.isfinite(mu) or mu < 1.0:
        raise GainDomainError(f"gain must be finite and >= 1, got {mu!r}")
    return mu


def gain_rate(law: GainLaw, mu: float) -> float:
    """Right-hand side ``F(mu)`` of the gain ODE."""
    mu = _check_mu(mu)
    kind = law.kind
    if kind == "frozen":
        return 0.0
    if kind == "exponential":
        return mu / law.upsilon
    if kind == "prescribed":
        return mu * mu / law.upsilon
    ell = law.ell
    return ell / (ell - 1.0) * mu ** (2.0 - 1.0 / ell) / law.upsilon


def blow_up_time(law: GainLaw, mu0: float) -> float:
    """Escape time ``T`` of the gain started at ``mu0`` (``inf`` if none)."""
    mu0 = _check_mu(mu0)
    kind = law.kind
    if kind in ("frozen", "exponential"):
        return math.inf
    if kind == "prescribed":
        return law.upsilon / mu0
    return law.upsilon * mu0 ** ((1.0 - law.ell) / law.ell)


def prescribed_mu0(law: GainLaw, horizon: float) -> float:
    """Initial gain placing the blow-up exactly at ``horizon``.

    Raises if no ``mu0 >= 1`` achieves it (the horizon is larger than the
    blow-up time reached from ``mu0 = 1``).
    """
    if not law.blows_up:
        raise ValueError("only blow-up laws have a prescribed time")
    if law.kind == "prescribed":
        mu0 = law.upsilon / horizon
    else:
        mu0 = (horizon / law.upsilon) ** (law.ell / (1.0 - law.ell))
    if mu0 < 1.0 - 1e-12:
        raise ValueError(
            f"prescribed time {horizon} exceeds the maximal value {law.upsilon} "
            f"for this law; decrease it or increase upsilon"
        )
    return max(mu0, 1.0)


def _check_time(law: GainLaw, c: float, t: float, what: str = "t") -> float:
    t = float(t)
    if not (t >= 0.0):
        raise GainDomainError(f"{what} must be >= 0, got {t!r}")
    T = blow_up_time(law, c)
    if math.isfinite(T) and t >= T * (1.0 - BLOW_UP_GUARD):
        raise GainDomainError(f"{what}={t!r} is at or beyond the blow-up time {T!r}")
    if math.isinf(t):
        raise GainDomainError(f"{what} must be finite")
    return t


def gain_solution(law: GainLaw, mu0: float, t: float) -> float:
    """Closed-form gain ``mu(t)`` from ``mu(0) = mu0``."""
    mu0 = _check_mu(mu0)
    t = _check_time(law, mu0, t)
    kind = law.kind
    if kind == "frozen":
        return mu0
    if kind == "exponential":
        return mu0 * math.exp(t / law.upsilon)
    T = blow_up_time(law, mu0)
    # mu0 * (T / (T - t))**p with p = ell/(ell-1); p = 1 for ell = inf
    p = 1.0 if kind == "prescribed" else law.ell / (law.ell - 1.0)
    return mu0 * math.exp(-p * math.log1p(-t / T))


def dilate(law: GainLaw, c: float, t: float) -> float:
    """Dilated time ``s = D_c(t)``; ``D_c(0) = 0`` and ``dD_c/dt = mu(t)`` for ``mu(0) = c``."""
    c = _check_mu(c)
    t = _check_time(law, c, t)
    kind = law.kind
    ups = law.upsilon
    if kind == "frozen":
        return c * t
    if kind == "exponential":
        return ups * c * math.expm1(t / ups)
    T = blow_up_time(law, c)
    if kind == "prescribed":
        return -ups * math.log1p(-t / T)
    ell = law.ell
    return (ell - 1.0) * ups * c ** (1.0 / ell) * math.expm1(-math.log1p(-t / T) / (ell - 1.0))


def contract(law: GainLaw, c: float, s: float) -> float:
    """Inverse dilation ``t = D_c^{-1}(s)``."""
    c = _check_mu(c)
    s = float(s)
    if not (s >= 0.0) or math.isinf(s):
        raise GainDomainError(f"dilated time must be finite and >= 0, got {s!r}")
    kind = law.kind
    ups = law.upsilon
    if kind == "frozen":
        return s / c
    if kind == "exponential":
        return ups * math.log1p(s / (ups * c))
    T = blow_up_time(law, c)
    if kind == "prescribed":
        return -T * math.expm1(-s / ups)
    ell = law.ell
    return -T * math.expm1(-(ell - 1.0) * math.log1p(s / ((ell - 1.0) * ups * c ** (1.0 / ell))))


def dilated_gain_rate(law: GainLaw, mu_hat: float) -> float:
    """Right-hand side ``F(mu_hat) / mu_hat`` of the gain in dilated time."""
    mu_hat = _check_mu(mu_hat)
    return gain_rate(law, mu_hat) / mu_hat


def dilated_gain_solution(law: GainLaw, mu0: float, s: float) -> float:
    """Closed-form solution of ``d mu_hat / ds = F(mu_hat) / mu_hat``.

    It is complete (finite for every ``s >= 0``) for every law.
    """
    mu0 = _check_mu(mu0)
    s = float(s)
    if not (s >= 0.0):
        raise GainDomainError(f"dilated time must be >= 0, got {s!r}")
    kind = law.kind
    ups = law.upsilon
    if kind == "frozen":
        return mu0
    if kind == "exponential":
        return mu0 + s / ups
    if kind == "prescribed":
        return mu0 * math.exp(s / ups)
    ell = law.ell
    return (mu0 ** (1.0 / ell) + s / ((ell - 1.0) * ups)) ** ell
