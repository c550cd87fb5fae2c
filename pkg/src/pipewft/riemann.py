"""Lax curves, the exact Riemann solver, and rarefaction fans.

Wave sizes are density increments.  A family-1 wave of size ``sigma``
moves the density from ``rho`` to ``rho - sigma``, a family-2 wave from
``rho`` to ``rho + sigma``.  With this choice ``sigma > 0`` is a
rarefaction and ``sigma < 0`` a shock in both families, and to first
order

    L1(u; sigma) = (rho - sigma, q - lambda1 * sigma),
    L2(u; sigma) = (rho + sigma, q + lambda2 * sigma).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.optimize import brentq

from . import _kernels as K
from .errors import SolverError, UsageError, VacuumError
from .gas_core import GasState, PressureLaw, as_state, eigenvalues, sound_speed

# sizes below this multiple of the local density are rounding noise
SNAP = 8.0 * 2.220446049250313e-16


class WaveFamily(enum.IntEnum):
    FIRST = 1
    SECOND = 2
    NONPHYSICAL = 3

    @property
    def is_physical(self) -> bool:
        return self is not WaveFamily.NONPHYSICAL


def _physical(family) -> int:
    fam = WaveFamily(family)
    if not fam.is_physical:
        raise UsageError("wave curves exist only for the two physical families", family=fam)
    return int(fam)


def lax_curve(law: PressureLaw, family, u0, sigma: float) -> GasState:
    """State reached from ``u0`` by a single wave of the given family and size."""
    fam = _physical(family)
    u0 = as_state(u0)
    r, q, status = K.lax_state(law.k, law.gamma, fam, u0.rho, u0.q, float(sigma))
    if status != K.OK:
        raise VacuumError("wave curve reaches vacuum", family=fam, u0=(u0.rho, u0.q), sigma=sigma)
    return GasState(r, q)


def curve_parameter(family, u_left, u_right) -> float:
    """Size of the wave of the given family joining ``u_left`` to ``u_right``.

    Only the density components are used; see :func:`curve_residual` for
    whether ``u_right`` actually lies on the curve.
    """
    fam = _physical(family)
    u_left = as_state(u_left)
    u_right = as_state(u_right)
    if fam == 1:
        return u_left.rho - u_right.rho
    return u_right.rho - u_left.rho


def curve_residual(law: PressureLaw, family, u_left, u_right) -> float:
    """Relative momentum mismatch of ``u_right`` against the curve through ``u_left``."""
    sigma = curve_parameter(family, u_left, u_right)
    w = lax_curve(law, family, u_left, sigma)
    u_right = as_state(u_right)
    scale = max(1.0, abs(u_right.q), u_right.rho)
    return abs(w.q - u_right.q) / scale


def characteristic_speed(law: PressureLaw, family, u) -> float:
    fam = _physical(family)
    return eigenvalues(law, u)[fam - 1]


def wave_speed(law: PressureLaw, family, u_left, u_right, sigma: float) -> float:
    """Front speed used by front tracking.

    Shocks travel with the Rankine-Hugoniot speed, rarefaction jumps with
    the characteristic speed of the state on their right.
    """
    u_left = as_state(u_left)
    u_right = as_state(u_right)
    if sigma < 0.0 and u_right.rho != u_left.rho:
        return (u_right.q - u_left.q) / (u_right.rho - u_left.rho)
    return characteristic_speed(law, family, u_right)


@dataclass(frozen=True)
class Wave:
    """One elementary wave of a self-similar solution.

    ``speeds`` is the pair of characteristic speeds bounding a rarefaction
    (equal entries for a shock or a discretized jump).
    """

    family: WaveFamily
    sigma: float
    left: GasState
    right: GasState
    speeds: tuple[float, float]

    @property
    def is_shock(self) -> bool:
        return self.sigma < 0.0

    @property
    def is_rarefaction(self) -> bool:
        return self.sigma > 0.0

    @property
    def speed(self) -> float:
        """Front-tracking speed: RH speed for shocks, right edge for rarefactions."""
        return self.speeds[1]


def _exact_wave(law, family, u_left, u_right, sigma):
    if sigma < 0.0:
        s = wave_speed(law, family, u_left, u_right, sigma)
        return Wave(WaveFamily(family), sigma, u_left, u_right, (s, s))
    s0 = characteristic_speed(law, family, u_left)
    s1 = characteristic_speed(law, family, u_right)
    return Wave(WaveFamily(family), sigma, u_left, u_right, (s0, s1))


def sample_wave(law: PressureLaw, wave: Wave, zeta: float) -> GasState:
    """Value of the exact wave at self-similar coordinate ``zeta = x/t``."""
    s0, s1 = wave.speeds
    if zeta < s0:
        return wave.left
    if zeta >= s1:
        return wave.right
    fam = int(wave.family)

    def gap(t):
        return characteristic_speed(law, fam, lax_curve(law, fam, wave.left, t)) - zeta

    t = brentq(gap, 0.0, wave.sigma, xtol=1e-15, rtol=1e-15)
    return lax_curve(law, fam, wave.left, t)


@dataclass(frozen=True)
class RiemannFan:
    """Exact solution of a Riemann problem inside one pipe.

    ``waves`` lists the non-trivial waves from left to right; ``sigma1``
    and ``sigma2`` are the signed sizes and ``middle`` the intermediate
    state (equal to an outer state when a wave is absent).
    """

    left: GasState
    right: GasState
    middle: GasState
    sigma1: float
    sigma2: float
    waves: tuple[Wave, ...]
    iterations: int = 0

    @property
    def sizes(self) -> tuple[float, float]:
        return self.sigma1, self.sigma2

    def sample(self, law: PressureLaw, zeta: float) -> GasState:
        """Solution value at ``x/t = zeta``."""
        state = self.left
        for w in self.waves:
            if zeta < w.speeds[0]:
                return state
            if zeta < w.speeds[1]:
                return sample_wave(law, w, zeta)
            state = w.right
        return state


def _snap(sigma, rho):
    return 0.0 if abs(sigma) <= SNAP * rho else sigma


def solve_riemann(law: PressureLaw, u_l, u_r) -> RiemannFan:
    """Exact Riemann solver for the homogeneous p-system.

    The middle density is the root of the velocity mismatch between the
    forward 1-curve of ``u_l`` and the backward 2-curve of ``u_r``, found
    by a bracketed Newton iteration.
    """
    u_l = as_state(u_l)
    u_r = as_state(u_r)
    if u_l == u_r:
        return RiemannFan(u_l, u_r, u_l, 0.0, 0.0, ())
    rm, status, its = K.riemann_middle_density(law.k, law.gamma, u_l.rho, u_l.q, u_r.rho, u_r.q)
    if status == K.VACUUM:
        raise VacuumError("Riemann problem produces vacuum", u_l=tuple(u_l), u_r=tuple(u_r))
    if status != K.OK:
        raise SolverError("Riemann iteration did not converge", u_l=tuple(u_l), u_r=tuple(u_r), iterations=its)
    s1 = _snap(u_l.rho - rm, u_l.rho)
    s2 = _snap(u_r.rho - rm, u_r.rho)
    if s1 == 0.0:
        um = u_l
        s2 = _snap(u_r.rho - u_l.rho, u_r.rho)
    elif s2 == 0.0:
        um = u_r
        s1 = _snap(u_l.rho - u_r.rho, u_l.rho)
    else:
        um = lax_curve(law, 1, u_l, s1)
    end = lax_curve(law, 2, um, s2)
    scale = max(1.0, u_r.rho, abs(u_r.q))
    resid = max(abs(end.rho - u_r.rho), abs(end.q - u_r.q)) / scale
    if resid > 1e-12:
        raise SolverError("Riemann residual above tolerance", residual=resid, u_l=tuple(u_l), u_r=tuple(u_r))
    waves = []
    if s1 != 0.0:
        waves.append(_exact_wave(law, 1, u_l, um, s1))
    if s2 != 0.0:
        waves.append(_exact_wave(law, 2, um, u_r, s2))
    return RiemannFan(u_l, u_r, um, s1, s2, tuple(waves), its)


def fan_sizes(sigma: float, eps: float) -> list[float]:
    """Split ``sigma`` into ceil(|sigma|/eps) signed pieces: eps, ..., eps, remainder."""
    if eps <= 0.0:
        raise UsageError("fan step must be positive", eps=eps)
    a = abs(sigma)
    if a == 0.0:
        return []
    n = max(1, math.ceil(a / eps - 1e-9))
    sign = 1.0 if sigma > 0 else -1.0
    pieces = [sign * eps] * (n - 1)
    pieces.append(sign * (a - (n - 1) * eps))
    return pieces


def rarefaction_fan(law: PressureLaw, family, u0, sigma: float, eps: float) -> list[Wave]:
    """Discretize a rarefaction into jumps of size at most ``eps``.

    Intermediate states are evaluated on the rarefaction curve from ``u0``
    directly, so the last state equals ``lax_curve(u0, sigma)`` exactly.
    Each jump travels at the characteristic speed of its right state.
    """
    fam = _physical(family)
    u0 = as_state(u0)
    if sigma < 0.0:
        raise UsageError("shock sizes cannot be split into a fan", sigma=sigma)
    jumps = []
    acc = 0.0
    left = u0
    pieces = fan_sizes(sigma, eps)
    for i, piece in enumerate(pieces):
        acc = sigma if i == len(pieces) - 1 else acc + piece
        right = lax_curve(law, fam, u0, acc)
        s = characteristic_speed(law, fam, right)
        jumps.append(Wave(WaveFamily(fam), curve_parameter(fam, left, right), left, right, (s, s)))
        left = right
    return jumps


def front_waves(law: PressureLaw, wave: Wave, eps: float | None) -> list[Wave]:
    """Front-tracking representation of an exact wave.

    Shocks stay single fronts.  Rarefactions are split with step ``eps``,
    or kept as one jump when ``eps`` is ``None``.
    """
    if wave.sigma < 0.0:
        return [wave]
    if eps is None:
        s = characteristic_speed(law, wave.family, wave.right)
        return [Wave(wave.family, wave.sigma, wave.left, wave.right, (s, s))]
    return rarefaction_fan(law, wave.family, wave.left, wave.sigma, eps)


def riemann_residual(law: PressureLaw, u_l, sigma1: float, sigma2: float, u_r) -> float:
    """Distance between ``L2(L1(u_l; sigma1); sigma2)`` and ``u_r``."""
    w = lax_curve(law, 2, lax_curve(law, 1, u_l, sigma1), sigma2)
    return w.distance(as_state(u_r))


def max_speed(law: PressureLaw, states) -> float:
    """Largest |characteristic speed| over a collection of states."""
    best = 0.0
    for u in states:
        u = as_state(u)
        c = sound_speed(law, u.rho)
        best = max(best, abs(u.v) + c)
    return best
