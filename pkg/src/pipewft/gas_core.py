"""Pressure laws, gas states, eigenstructure and the energy pair of the p-system.

The system is written in the conservative variables ``(rho, q)`` with
``q = rho * v``:

    rho_t + q_x = 0,   q_t + (q**2/rho + p(rho))_x = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import DomainError

RHO_MIN = K.RHO_MIN


@dataclass(frozen=True)
class PressureLaw:
    """Barotropic pressure law ``p(rho) = k * rho**gamma``.

    Use :meth:`isothermal` or :meth:`gamma_law` to build one.  ``rho_star``
    is the reference density of the internal-energy integral; it only
    shifts the energy by a term linear in ``rho``.
    """

    kind: str
    k: float
    gamma: float
    rho_star: float = 1.0

    def __post_init__(self):
        if self.kind not in ("isothermal", "gamma_law"):
            raise DomainError("unknown pressure law kind", kind=self.kind)
        if not (self.k > 0 and math.isfinite(self.k)):
            raise DomainError("pressure coefficient must be positive", k=self.k)
        if not (self.gamma >= 1.0 and math.isfinite(self.gamma)):
            raise DomainError("adiabatic exponent must be >= 1", gamma=self.gamma)
        if self.kind == "isothermal" and self.gamma != 1.0:
            raise DomainError("isothermal law has gamma = 1", gamma=self.gamma)
        if not self.rho_star > 0:
            raise DomainError("reference density must be positive", rho_star=self.rho_star)

    @classmethod
    def isothermal(cls, c: float = 1.0, rho_star: float = 1.0) -> "PressureLaw":
        if not c > 0:
            raise DomainError("sound speed must be positive", c=c)
        return cls("isothermal", float(c) ** 2, 1.0, float(rho_star))

    @classmethod
    def gamma_law(cls, k: float, gamma: float, rho_star: float = 1.0) -> "PressureLaw":
        return cls("gamma_law", float(k), float(gamma), float(rho_star))

    @property
    def c(self) -> float | None:
        """Constant sound speed of an isothermal law, else ``None``."""
        return math.sqrt(self.k) if self.kind == "isothermal" else None

    @property
    def params(self) -> tuple[float, float]:
        """``(k, gamma)`` as consumed by the compiled kernels."""
        return self.k, self.gamma

    @property
    def is_isothermal(self) -> bool:
        return self.gamma == 1.0

    def p(self, rho):
        rho = _check_density(rho)
        return self.k * rho if self.gamma == 1.0 else self.k * rho**self.gamma

    def dp(self, rho):
        rho = _check_density(rho)
        if self.gamma == 1.0:
            return self.k + 0.0 * rho
        return self.k * self.gamma * rho ** (self.gamma - 1.0)

    def d2p(self, rho):
        rho = _check_density(rho)
        if self.gamma == 1.0:
            return 0.0 * rho
        return self.k * self.gamma * (self.gamma - 1.0) * rho ** (self.gamma - 2.0)

    def h(self, rho):
        """Riemann-invariant integral, an antiderivative of ``c(rho)/rho``."""
        rho = _check_density(rho)
        k, g = self.params
        if g == 1.0:
            return math.sqrt(k) * np.log(rho)
        return 2.0 * math.sqrt(k * g) / (g - 1.0) * rho ** (0.5 * (g - 1.0))

    def enthalpy(self, rho):
        """Antiderivative of ``p'(rho)/rho`` (Bernoulli potential)."""
        rho = _check_density(rho)
        k, g = self.params
        if g == 1.0:
            return k * np.log(rho)
        return k * g / (g - 1.0) * rho ** (g - 1.0)

    def to_dict(self) -> dict:
        if self.kind == "isothermal":
            return {"kind": "isothermal", "c": self.c, "rho_star": self.rho_star}
        return {"kind": "gamma_law", "k": self.k, "gamma": self.gamma, "rho_star": self.rho_star}

    @classmethod
    def from_dict(cls, d: dict) -> "PressureLaw":
        d = dict(d)
        kind = d.pop("kind")
        if kind == "isothermal":
            return cls.isothermal(d["c"], d.get("rho_star", 1.0))
        return cls.gamma_law(d["k"], d["gamma"], d.get("rho_star", 1.0))


@dataclass(frozen=True)
class GasState:
    """Density and momentum density at a point."""

    rho: float
    q: float

    def __post_init__(self):
        if not (self.rho > RHO_MIN and math.isfinite(self.rho)):
            raise DomainError("density must exceed the vacuum floor", rho=self.rho)
        if not math.isfinite(self.q):
            raise DomainError("momentum must be finite", q=self.q)

    @property
    def v(self) -> float:
        return self.q / self.rho

    def __iter__(self):
        yield self.rho
        yield self.q

    def as_array(self) -> np.ndarray:
        return np.array([self.rho, self.q])

    def distance(self, other: "GasState") -> float:
        """Euclidean distance in the conservative variables."""
        return math.hypot(self.rho - other.rho, self.q - other.q)


def as_state(u) -> GasState:
    """Coerce a ``GasState`` or a ``(rho, q)`` pair."""
    if isinstance(u, GasState):
        return u
    rho, q = u
    return GasState(float(rho), float(q))


def _check_density(rho):
    if isinstance(rho, (float, int)):
        if not rho > RHO_MIN:
            raise DomainError("density must exceed the vacuum floor", rho=rho)
        return float(rho)
    arr = np.asarray(rho, dtype=float)
    if np.any(~(arr > RHO_MIN)):
        raise DomainError("density must exceed the vacuum floor", rho=rho)
    return rho if arr.ndim else float(arr)


def sound_speed(law: PressureLaw, rho):
    """Sound speed ``sqrt(p'(rho))``."""
    return np.sqrt(law.dp(rho)) if np.ndim(rho) else math.sqrt(law.dp(rho))


def sound_speed_derivative(law: PressureLaw, rho):
    """``c'(rho) = p''(rho) / (2 c(rho))``."""
    return law.d2p(rho) / (2.0 * sound_speed(law, rho))


def eigenvalues(law: PressureLaw, u) -> tuple[float, float]:
    """Characteristic speeds ``(v - c, v + c)``."""
    u = as_state(u)
    c = sound_speed(law, u.rho)
    return u.v - c, u.v + c


def eigenvectors(law: PressureLaw, u) -> tuple[np.ndarray, np.ndarray]:
    """Right eigenvectors normalized so that the density component is -1 and +1.

    These are the tangents of the wave curves at zero size.
    """
    l1, l2 = eigenvalues(law, u)
    return np.array([-1.0, -l1]), np.array([1.0, l2])


def is_subsonic(law: PressureLaw, u) -> bool:
    """True iff ``lambda1(u) < 0 < lambda2(u)``."""
    l1, l2 = eigenvalues(law, u)
    return bool(l1 < 0.0 < l2)


def mach(law: PressureLaw, u) -> float:
    """``|v| / c``."""
    u = as_state(u)
    return abs(u.v) / sound_speed(law, u.rho)


def momentum_flux(law: PressureLaw, u) -> float:
    """``P(u) = q**2/rho + p(rho)``."""
    u = as_state(u)
    return u.q * u.q / u.rho + law.p(u.rho)


def flux(law: PressureLaw, u) -> np.ndarray:
    """Flux of the p-system, ``(q, P(u))``."""
    u = as_state(u)
    return np.array([u.q, momentum_flux(law, u)])


def entropy_pair(law: PressureLaw, u) -> tuple[float, float]:
    """Total energy density ``E`` and its flux ``F = v (E + p)``."""
    u = as_state(u)
    E = 0.5 * u.q * u.q / u.rho + K.energy_potential(law.k, law.gamma, u.rho, law.rho_star)
    F = u.v * (E + law.p(u.rho))
    return E, F
