"""Pipe-section profiles, closed-form bounds, and stationary data.

A :class:`PipeProfile` is a staircase section with junctions at
``positions``.  A :class:`SmoothProfile` is a continuous piecewise-linear
section, constant outside ``[-X, X]``; :func:`pc_approximate` turns it
into staircases that converge in L1.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NeighborhoodError, ProfileError, SonicError, UsageError
from .gas_core import GasState, PressureLaw, as_state, is_subsonic
from .junction import CouplingLaw, dsigma_da, first_order_coeffs, t_map

E = math.e


@dataclass(frozen=True)
class PipeProfile:
    """Piecewise-constant section.

    ``sections[j]`` holds on ``[positions[j-1], positions[j])``, with the
    first and last sections extending to infinity.  ``a_bar`` and
    ``delta`` describe the box ``(a_bar - delta, a_bar + delta)`` that
    every section value must lie in.
    """

    positions: tuple[float, ...]
    sections: tuple[float, ...]
    a_bar: float | None = None
    delta: float | None = None

    def __post_init__(self):
        pos = tuple(float(x) for x in self.positions)
        sec = tuple(float(a) for a in self.sections)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "sections", sec)
        if len(sec) != len(pos) + 1:
            raise ProfileError("need one more section value than junctions", junctions=len(pos), sections=len(sec))
        if any(not (b > a) for a, b in zip(pos[:-1], pos[1:])):
            raise ProfileError("junction positions must be strictly increasing")
        if any(not (a > 0 and math.isfinite(a)) for a in sec):
            raise ProfileError("sections must be positive and finite")
        if self.a_bar is None:
            object.__setattr__(self, "a_bar", 0.5 * (min(sec) + max(sec)))
        if self.delta is None:
            object.__setattr__(self, "delta", 0.25 * self.a_bar)
        if any(abs(a - self.a_bar) >= self.delta for a in sec):
            raise ProfileError("section value outside the admissible box", a_bar=self.a_bar, delta=self.delta)

    @classmethod
    def uniform(cls, a: float = 1.0) -> "PipeProfile":
        return cls((), (a,), a)

    @property
    def n_junctions(self) -> int:
        return len(self.positions)

    @property
    def jumps(self) -> np.ndarray:
        return np.diff(np.asarray(self.sections))

    @property
    def tv(self) -> float:
        return float(np.abs(self.jumps).sum())

    def pipe_index(self, x: float) -> int:
        """Index of the pipe containing ``x``; junction points belong to the right pipe."""
        return bisect.bisect_right(self.positions, x)

    def section_at(self, x):
        idx = np.searchsorted(np.asarray(self.positions), x, side="right")
        return np.asarray(self.sections)[idx]

    def table(self) -> list[tuple[float, float]]:
        """Staircase as ``(x, a)`` pairs: the section right of each junction."""
        rows = [(-math.inf, self.sections[0])]
        rows += [(x, a) for x, a in zip(self.positions, self.sections[1:])]
        return rows

    def l1_distance(self, other: "PipeProfile | SmoothProfile", window: tuple[float, float], n: int = 20001) -> float:
        """L1 distance to another profile on a window, by dense midpoint sampling."""
        x0, x1 = window
        xs = np.linspace(x0, x1, n + 1)
        mid = 0.5 * (xs[1:] + xs[:-1])
        return float(np.sum(np.abs(self.section_at(mid) - other.section_at(mid))) * (x1 - x0) / n)

    def to_dict(self) -> dict:
        return {
            "kind": "pc",
            "positions": list(self.positions),
            "sections": list(self.sections),
            "a_bar": self.a_bar,
            "delta": self.delta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipeProfile":
        return cls(tuple(d["positions"]), tuple(d["sections"]), d.get("a_bar"), d.get("delta"))


@dataclass(frozen=True)
class SmoothProfile:
    """Continuous piecewise-linear section on ``[-X, X]``, constant outside.

    ``knots`` must start at ``-X`` and end at ``X``.
    """

    knots: tuple[float, ...]
    values: tuple[float, ...]
    a_bar: float | None = None
    delta: float | None = None
    _slopes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        k = tuple(float(x) for x in self.knots)
        v = tuple(float(a) for a in self.values)
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)
        if len(k) < 2 or len(k) != len(v):
            raise ProfileError("need at least two knots with one value each")
        if any(not (b > a) for a, b in zip(k[:-1], k[1:])):
            raise ProfileError("knots must be strictly increasing")
        if any(not (a > 0) for a in v):
            raise ProfileError("sections must be positive")
        if self.a_bar is None:
            object.__setattr__(self, "a_bar", 0.5 * (min(v) + max(v)))
        if self.delta is None:
            object.__setattr__(self, "delta", 0.25 * self.a_bar)
        if any(abs(a - self.a_bar) >= self.delta for a in v):
            raise ProfileError("section value outside the admissible box", a_bar=self.a_bar, delta=self.delta)
        object.__setattr__(self, "_slopes", np.diff(v) / np.diff(k))

    @classmethod
    def ramp(cls, X: float, a_left: float, a_right: float, **kw) -> "SmoothProfile":
        return cls((-X, X), (a_left, a_right), **kw)

    @property
    def X(self) -> float:
        return max(abs(self.knots[0]), abs(self.knots[-1]))

    @property
    def breaks(self) -> tuple[float, ...]:
        return self.knots

    @property
    def tv(self) -> float:
        return float(np.abs(np.diff(self.values)).sum())

    def a(self, x):
        return np.interp(x, self.knots, self.values)

    def da(self, x):
        """Right derivative of the section."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.knots, x, side="right") - 1
        inside = (idx >= 0) & (idx < len(self._slopes))
        out = np.where(inside, self._slopes[np.clip(idx, 0, len(self._slopes) - 1)], 0.0)
        return float(out) if out.ndim == 0 else out

    def section_at(self, x):
        return self.a(x)

    def integral(self, x0: float, x1: float) -> float:
        """Exact integral of the section over ``[x0, x1]``."""
        pts = [x0] + [k for k in self.knots if x0 < k < x1] + [x1]
        vals = self.a(np.asarray(pts))
        return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(pts)))

    def to_dict(self) -> dict:
        return {"kind": "smooth", "knots": list(self.knots), "values": list(self.values), "a_bar": self.a_bar, "delta": self.delta}

    @classmethod
    def from_dict(cls, d: dict) -> "SmoothProfile":
        return cls(tuple(d["knots"]), tuple(d["values"]), d.get("a_bar"), d.get("delta"))


@dataclass(frozen=True)
class Staircase:
    """Output of :func:`pc_approximate`: the staircase and its construction data."""

    profile: PipeProfile
    mesh: np.ndarray
    beta: np.ndarray
    alpha_at_mesh: np.ndarray


def pc_approximate(smooth: SmoothProfile, n: int) -> Staircase:
    """Staircase approximation with mesh at most ``1/n``.

    The derivative surrogate ``beta`` is the cell average of ``a'`` on a
    uniform mesh of ``[-X, X]``; ``alpha(x) = a(-X) + int beta`` therefore
    interpolates ``a`` at the mesh points.  One junction sits at each cell
    midpoint, and the section right of it is ``alpha`` at the cell's right
    end.  Cells where ``a`` does not change produce no junction.
    """
    if n < 1:
        raise UsageError("resolution must be a positive integer", n=n)
    lo, hi = smooth.knots[0], smooth.knots[-1]
    cells = max(1, math.ceil((hi - lo) * n - 1e-12))
    mesh = np.linspace(lo, hi, cells + 1)
    alpha = smooth.a(mesh)
    alpha[0], alpha[-1] = smooth.values[0], smooth.values[-1]
    beta = np.diff(alpha) / np.diff(mesh)
    positions, sections = [], [smooth.values[0]]
    for j in range(cells):
        if alpha[j + 1] == alpha[j]:
            continue
        positions.append(0.5 * (mesh[j] + mesh[j + 1]))
        sections.append(float(alpha[j + 1]))
    prof = PipeProfile(tuple(positions), tuple(sections), smooth.a_bar, smooth.delta)
    return Staircase(prof, mesh, beta, alpha)


# ------------------------------------------------------- closed forms


def kgrande(xi: float) -> float:
    """Leading-order amplification coefficient of an up-down section pair.

    ``(-1 + 8 xi^2 - 7 xi^4 + 2 xi^6) / (2 (1 - xi)^3 (1 + xi)^3)``.
    """
    if not (0.0 <= xi < 1.0):
        raise DomainError("speed ratio must lie in [0, 1)", xi=xi)
    x2 = xi * xi
    return (-1.0 + 8.0 * x2 - 7.0 * x2 * x2 + 2.0 * x2**3) / (2.0 * (1.0 - xi) ** 3 * (1.0 + xi) ** 3)


def bound_M(law: PressureLaw, a_bar: float, v_over_c: float) -> float:
    """Total-variation bound on the section for the isothermal law."""
    if not law.is_isothermal:
        raise UsageError("closed-form bound is for the isothermal law; use bound_M_general")
    xi = abs(v_over_c)
    if not (0.0 <= xi < 1.0):
        raise DomainError("speed ratio must lie in [0, 1)", xi=v_over_c)
    base = a_bar / (4.0 * E)
    if xi <= 1.0 / math.sqrt(2.0):
        return base
    return base * (1.0 - xi * xi) / (xi * xi)


def bound_M_general(law: PressureLaw, a_bar: float, u, dSigma_da: float | None = None) -> float:
    """``1 / (4 (K1 + K2) e)`` with ``K1, K2`` from :func:`first_order_coeffs`."""
    u = as_state(u)
    if dSigma_da is None:
        dSigma_da = float(law.p(u.rho))
    co = first_order_coeffs(law, a_bar, u, dSigma_da)
    return 1.0 / (4.0 * (co.K1 + co.K2) * E)


# ---------------------------------------------------- stationary data


@dataclass(frozen=True)
class StationaryDatum:
    """Piecewise-constant stationary solution over a staircase profile."""

    profile: PipeProfile
    states: tuple[GasState, ...]
    tv_u: float
    tv_a: float
    transfer_constant: float

    @property
    def ratio(self) -> float:
        return self.tv_u / self.tv_a if self.tv_a > 0 else 0.0

    def state_at(self, x: float) -> GasState:
        return self.states[self.profile.pipe_index(x)]

    def l1_distance(self, other: "StationaryDatum", window: tuple[float, float], n: int = 20001) -> float:
        """L1 distance (1-norm in (rho, q)) to another stationary datum on a window."""
        x0, x1 = window
        xs = np.linspace(x0, x1, n + 1)
        mid = 0.5 * (xs[1:] + xs[:-1])
        a = np.array([tuple(self.state_at(x)) for x in mid])
        b = np.array([tuple(other.state_at(x)) for x in mid])
        return float(np.abs(a - b).sum() * (x1 - x0) / n)


def hat_stationary(law: PressureLaw, claw: CouplingLaw, profile: PipeProfile, u_left) -> StationaryDatum:
    """Stationary datum obtained by transferring ``u_left`` across every junction.

    ``transfer_constant`` is the largest observed ``|T(a, a'; u) - u| / |a' - a|``
    along the construction; ``tv_u <= transfer_constant * tv_a`` by the
    triangle inequality.
    """
    u = as_state(u_left)
    if not is_subsonic(law, u):
        raise SonicError("left state must be subsonic", u=tuple(u))
    states = [u]
    tv_u = 0.0
    best = 0.0
    for j, (a0, a1) in enumerate(zip(profile.sections[:-1], profile.sections[1:])):
        try:
            nxt = t_map(claw, law, a0, a1, states[-1])
        except (SonicError, NeighborhoodError) as exc:
            raise type(exc)(f"stationary transfer failed at junction {j}", junction=j, **exc.context) from exc
        d = nxt.distance(states[-1])
        tv_u += d
        if a1 != a0:
            best = max(best, d / abs(a1 - a0))
        states.append(nxt)
    return StationaryDatum(profile, tuple(states), tv_u, profile.tv, best)


def transfer_lipschitz(law: PressureLaw, claw: CouplingLaw, a_bar: float, states, jump: float) -> float:
    """Largest ``|T(a, a +- jump; u) - u| / jump`` over the given states."""
    best = 0.0
    for u in states:
        u = as_state(u)
        for a1 in (a_bar + jump, a_bar - jump):
            best = max(best, t_map(claw, law, a_bar, a1, u).distance(u) / jump)
    return best


def junction_constants(law: PressureLaw, claw: CouplingLaw, datum: StationaryDatum):
    """Largest closed-form ``K1, K2`` over the pipes of a stationary datum."""
    K1 = K2 = 0.0
    for a, u in zip(datum.profile.sections, datum.states):
        co = first_order_coeffs(law, a, u, dsigma_da(claw, law, a, u))
        K1 = max(K1, co.K1)
        K2 = max(K2, co.K2)
    return K1, K2
