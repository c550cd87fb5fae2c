"""Coupling at a section jump.

Across a junction between sections ``a-`` and ``a+`` the traces satisfy

    Psi(a-, u-; a+, u+) = (a+ q+ - a- q-,  a+ P(u+) - a- P(u-)) - Sigma(a-, a+; u-) = 0.

For the ``smooth_section`` coupling, ``Sigma`` is the pressure integral
along the smooth stationary flow that connects the two sections, so the
junction acts like a short nozzle.  The stationary flow is integrated with
the section as independent variable:

    d rho / d alpha = rho v**2 / (alpha (c**2 - v**2)),   q = a- q- / alpha,
    d S / d alpha   = p(rho).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import _kernels as K
from .errors import (
    DomainError,
    IntegrationError,
    NeighborhoodError,
    RegimeError,
    SolverError,
    SonicError,
    UsageError,
    VacuumError,
)
from .gas_core import GasState, PressureLaw, as_state, eigenvalues, mach, momentum_flux, sound_speed, sound_speed_derivative
from .riemann import (
    Wave,
    WaveFamily,
    _exact_wave,
    curve_parameter,
    lax_curve,
    sample_wave,
    solve_riemann,
)

ODE_RTOL = 1e-13


@dataclass(frozen=True)
class CouplingLaw:
    """Choice of the junction defect ``Sigma``.

    ``smooth_section`` integrates the stationary flow.  ``custom`` takes a
    callable ``sigma2(law, a_minus, a_plus, u_minus) -> float`` giving the
    momentum component (the mass component is always zero).

    ``max_relative_jump`` and ``mach_max`` bound the admissible
    neighborhood; inputs outside it raise :class:`NeighborhoodError`.
    """

    kind: str = "smooth_section"
    sigma2: Callable | None = field(default=None, compare=False)
    name: str = "smooth_section"
    max_relative_jump: float = 0.25
    mach_max: float = 0.99
    ode_rtol: float = ODE_RTOL

    def __post_init__(self):
        if self.kind not in ("smooth_section", "custom"):
            raise UsageError("unknown coupling kind", kind=self.kind)
        if self.kind == "custom" and self.sigma2 is None:
            raise UsageError("custom coupling needs a sigma2 callable")

    @classmethod
    def smooth_section(cls, **kw) -> "CouplingLaw":
        return cls("smooth_section", None, "smooth_section", **kw)

    @classmethod
    def custom(cls, sigma2: Callable, name: str = "custom", **kw) -> "CouplingLaw":
        return cls("custom", sigma2, name, **kw)

    @classmethod
    def zero_defect(cls, **kw) -> "CouplingLaw":
        """Conservation of mass flow and momentum flow across the jump."""
        return cls("custom", _zero_sigma, "zero_defect", **kw)

    def to_dict(self) -> dict:
        return {
            "kind": self.name,
            "max_relative_jump": self.max_relative_jump,
            "mach_max": self.mach_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CouplingLaw":
        d = dict(d)
        kind = d.pop("kind", "smooth_section")
        if kind == "smooth_section":
            return cls.smooth_section(**d)
        if kind == "zero_defect":
            return cls.zero_defect(**d)
        raise UsageError("only built-in couplings can be loaded from a config", kind=kind)


def _zero_sigma(law, a_minus, a_plus, u_minus):
    return 0.0


# ------------------------------------------------------------ stationary


@dataclass(frozen=True)
class StationaryPath:
    """Smooth stationary flow sampled along ``x``."""

    x: np.ndarray
    rho: np.ndarray
    q: np.ndarray
    mass_flux: float

    def state(self, i: int) -> GasState:
        return GasState(float(self.rho[i]), float(self.q[i]))

    @property
    def end(self) -> GasState:
        return self.state(-1)


def bernoulli(law: PressureLaw, u) -> float:
    """``v**2/2 + pi(rho)``, constant along smooth stationary flows."""
    u = as_state(u)
    return 0.5 * u.v * u.v + law.enthalpy(u.rho)


def stationary_integrate(
    law: PressureLaw,
    a_of_x,
    x0: float,
    x1: float,
    u0,
    breaks=(),
    rtol: float = 1e-12,
    atol: float = 1e-14,
    mach_max: float = 0.999,
    samples: int = 65,
) -> StationaryPath:
    """Integrate the smooth stationary flow in ``x`` through a section profile.

    ``a_of_x`` is either an object with methods ``a(x)`` and ``da(x)`` or a
    pair of callables ``(a, da)``.  The mass flux ``a q`` is conserved
    exactly; the density solves

        (c**2 - v**2) rho' = rho v**2 a' / a.

    Kinks of ``a`` listed in ``breaks`` are used as integration stops.
    """
    if hasattr(a_of_x, "a"):
        a_fn, da_fn = a_of_x.a, a_of_x.da
    else:
        a_fn, da_fn = a_of_x
    u0 = as_state(u0)
    if mach(law, u0) >= mach_max:
        raise SonicError("initial state is not subsonic", u0=tuple(u0))
    m = float(a_fn(x0)) * u0.q
    sign = 1.0 if x1 >= x0 else -1.0
    stops = sorted({float(b) for b in breaks if (b - x0) * sign > 0 and (x1 - b) * sign > 0}, key=lambda b: b * sign)
    nodes = [float(x0)] + stops + [float(x1)]

    def rhs(x, y):
        r = y[0]
        a = a_fn(x)
        v = m / (a * r)
        return [r * v * v * da_fn(x) / (a * (law.dp(r) - v * v))]

    def sonic(x, y):
        r = y[0]
        v = m / (a_fn(x) * r)
        return mach_max**2 * law.dp(r) - v * v

    sonic.terminal = True

    xs, rs = [np.array([x0])], [np.array([u0.rho])]
    r = u0.rho
    for xa, xb in zip(nodes[:-1], nodes[1:]):
        if xa == xb:
            continue
        n = max(2, int(samples * abs(xb - xa) / max(abs(x1 - x0), 1e-300)) + 2)
        t_eval = np.linspace(xa, xb, n)
        sol = solve_ivp(rhs, (xa, xb), [r], method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval, events=sonic)
        if sol.status == 1:
            raise SonicError("stationary flow reaches the sonic line", x=float(sol.t_events[0][0]))
        if sol.status != 0:
            raise IntegrationError("stationary integration failed", message=sol.message)
        xs.append(sol.t[1:])
        rs.append(sol.y[0, 1:])
        r = float(sol.y[0, -1])
    x = np.concatenate(xs)
    rho = np.concatenate(rs)
    q = m / np.array([a_fn(xx) for xx in x])
    return StationaryPath(x, rho, q, m)


def _check_neighborhood(claw: CouplingLaw, law: PressureLaw, a_minus, a_plus, u):
    if not (a_minus > 0 and a_plus > 0):
        raise DomainError("sections must be positive", a_minus=a_minus, a_plus=a_plus)
    if abs(a_plus - a_minus) > claw.max_relative_jump * min(a_minus, a_plus):
        raise NeighborhoodError("section jump outside the admissible neighborhood", a_minus=a_minus, a_plus=a_plus)
    if mach(law, u) > claw.mach_max:
        raise NeighborhoodError("state outside the subsonic box", rho=u.rho, q=u.q, mach=mach(law, u))


def _stationary_alpha(claw, law, a_minus, a_plus, u):
    r, q, S, status, _ = K.stationary_alpha(law.k, law.gamma, a_minus, u.rho, u.q, a_plus, claw.ode_rtol, 1.0 - 1e-9)
    if status == K.SONIC:
        raise SonicError("stationary flow reaches the sonic line", a_minus=a_minus, a_plus=a_plus, u=tuple(u))
    if status != K.OK:
        raise IntegrationError("step size underflow in the stationary flow", a_minus=a_minus, a_plus=a_plus)
    return r, q, S


def sigma_map(claw: CouplingLaw, law: PressureLaw, a_minus: float, a_plus: float, u_minus) -> np.ndarray:
    """Junction defect ``Sigma(a-, a+; u-)``; the first component is always 0."""
    u = as_state(u_minus)
    if a_plus == a_minus:
        return np.zeros(2)
    _check_neighborhood(claw, law, a_minus, a_plus, u)
    if claw.kind == "custom":
        return np.array([0.0, float(claw.sigma2(law, a_minus, a_plus, u))])
    _, _, S = _stationary_alpha(claw, law, a_minus, a_plus, u)
    return np.array([0.0, S])


def dsigma_da(claw: CouplingLaw, law: PressureLaw, a: float, u, h: float = 1e-6) -> float:
    """Derivative of the momentum defect in ``a+`` at ``a+ = a- = a``."""
    u = as_state(u)
    if claw.kind == "smooth_section":
        return float(law.p(u.rho))
    step = h * a
    return (claw.sigma2(law, a, a + step, u) - claw.sigma2(law, a, a - step, u)) / (2 * step)


def psi_residual(claw: CouplingLaw, law: PressureLaw, a_minus, u_minus, a_plus, u_plus) -> np.ndarray:
    """``Psi(a-, u-; a+, u+)``."""
    um = as_state(u_minus)
    up = as_state(u_plus)
    S = sigma_map(claw, law, a_minus, a_plus, um)
    return np.array(
        [
            a_plus * up.q - a_minus * um.q - S[0],
            a_plus * momentum_flux(law, up) - a_minus * momentum_flux(law, um) - S[1],
        ]
    )


def t_map(claw: CouplingLaw, law: PressureLaw, a_minus: float, a_plus: float, u_minus, method: str | None = None) -> GasState:
    """Right trace of the stationary junction with left trace ``u-``.

    For the smooth-section coupling the trace is the endpoint of the
    stationary flow; ``method="newton"`` instead solves ``Psi = 0``
    directly (always used for custom couplings).
    """
    u = as_state(u_minus)
    if a_plus == a_minus:
        return u
    _check_neighborhood(claw, law, a_minus, a_plus, u)
    if method is None:
        method = "ode" if claw.kind == "smooth_section" else "newton"
    if method == "ode":
        r, q, _ = _stationary_alpha(claw, law, a_minus, a_plus, u)
        out = GasState(r, q)
    elif method == "newton":
        out = _t_newton(claw, law, a_minus, a_plus, u)
    else:
        raise UsageError("unknown t_map method", method=method)
    if mach(law, out) > claw.mach_max:
        raise NeighborhoodError("junction trace leaves the subsonic box", rho=out.rho, q=out.q)
    return out


def _t_newton(claw, law, a_minus, a_plus, u):
    S = sigma_map(claw, law, a_minus, a_plus, u)
    mflux = a_minus * u.q + S[0]
    target = a_minus * momentum_flux(law, u) + S[1]
    theta = (a_plus - a_minus) / a_minus
    H = _h_coeff(law, u, dsigma_da(claw, law, a_minus, u))
    r = (1.0 + H * theta) * u.rho
    q = mflux / a_plus
    for it in range(60):
        v = q / r
        f = a_plus * (q * v + law.p(r)) - target
        dfr = a_plus * (law.dp(r) - v * v)
        if dfr == 0.0:
            raise SolverError("singular junction Jacobian", rho=r, q=q)
        dr = -f / dfr
        # keep the iterate on the subsonic branch
        while r + dr <= 0.5 * r or mach(law, (r + dr, q)) >= 1.0:
            dr *= 0.5
            if abs(dr) < 1e-300:
                raise SolverError("junction Newton step collapsed", rho=r, q=q)
        r += dr
        if abs(dr) <= 1e-15 * r:
            return GasState(r, q)
    raise SolverError("junction Newton did not converge", a_minus=a_minus, a_plus=a_plus, u=tuple(u))


def psi_jacobian(law: PressureLaw, a_plus: float, u_plus) -> np.ndarray:
    """Derivative of ``Psi`` with respect to ``u+``; determinant ``a+**2 lambda1 lambda2``."""
    u = as_state(u_plus)
    c2 = law.dp(u.rho)
    return a_plus * np.array([[0.0, 1.0], [c2 - u.v**2, 2.0 * u.v]])


# ------------------------------------------------------ first order data


def _h_coeff(law, u, ds):
    u = as_state(u)
    c2 = law.dp(u.rho)
    v = u.v
    return (v * v + (ds - law.p(u.rho)) / u.rho) / (c2 - v * v)


@dataclass(frozen=True)
class FirstOrderCoefficients:
    """Closed-form junction coefficients at a reference state."""

    H: float
    G: float
    K1: float
    K2: float
    reflection: float
    transmission: float


def first_order_coeffs(law: PressureLaw, a: float, u, dSigma_da: float) -> FirstOrderCoefficients:
    """Leading-order junction response with the coefficients frozen at ``u``.

    ``H`` and ``G`` are the stationary-map coefficients, ``K1`` and ``K2``
    the interaction constants.  ``reflection`` and ``transmission`` are
    the slopes predicted by the frozen linear system:

        sigma1+ ~ reflection * (da/a) * sigma2-,
        sigma2+ ~ (1 + transmission * da/a) * sigma2-.
    """
    u = as_state(u)
    c = sound_speed(law, u.rho)
    v = u.v
    xi2 = (v / c) ** 2
    if xi2 >= 1.0:
        raise SonicError("first-order coefficients need a subsonic state", v=v, c=c)
    rho = u.rho
    dc = sound_speed_derivative(law, rho)
    H = _h_coeff(law, u, dSigma_da)
    G = ((dc * rho - v) * H - v) / (v + c)
    l1, l2 = v - c, v + c
    k = dc * rho / c
    d = (dSigma_da - law.p(rho)) / rho
    K1 = abs((1.0 + k * xi2 + (k + 1.0) * d / c**2) / (1.0 - xi2)) / (2.0 * a)
    K2 = abs((1.0 - 2.0 * xi2 + k * xi2 + (k - 1.0) * d / c**2) / (1.0 - xi2)) / (2.0 * a)
    refl = -l2 / (2.0 * c) * (1.0 + G + H)
    trans = -(l1 * H + l2 * (1.0 + G)) / (2.0 * c)
    return FirstOrderCoefficients(H, G, K1, K2, refl, trans)


# ------------------------------------------------------ junction Riemann


@dataclass(frozen=True)
class JunctionFan:
    """Self-similar solution of a Riemann problem at a junction placed at x = 0.

    ``left_waves`` are family-1 waves in the left pipe, ``right_waves``
    family-2 waves in the right pipe, and ``(trace_minus, trace_plus)``
    are the stationary traces on both sides of the junction.
    """

    a_left: float
    a_right: float
    u_left_in: GasState
    u_right_in: GasState
    trace_minus: GasState
    trace_plus: GasState
    sigma1: float
    sigma2: float
    left_waves: tuple[Wave, ...]
    right_waves: tuple[Wave, ...]
    evaluations: int = 0

    @property
    def sizes(self) -> tuple[float, float]:
        return self.sigma1, self.sigma2

    def sample(self, law: PressureLaw, zeta: float) -> GasState:
        """Value at ``x/t = zeta``; right-continuous at the junction."""
        if zeta < 0.0:
            if self.left_waves:
                return sample_wave(law, self.left_waves[0], zeta)
            return self.trace_minus
        if self.right_waves:
            return sample_wave(law, self.right_waves[0], zeta)
        return self.u_right_in


def _t_raw(claw, law, a_minus, a_plus, r, q):
    """Stationary transfer without neighborhood checks, as (rho, q, ok)."""
    if a_plus == a_minus:
        return r, q, True
    if claw.kind == "smooth_section":
        rr, qq, _, status, _ = K.stationary_alpha(law.k, law.gamma, a_minus, r, q, a_plus, claw.ode_rtol, 1.0 - 1e-9)
        return rr, qq, status == K.OK
    try:
        out = _t_newton(claw, law, a_minus, a_plus, GasState(r, q))
    except (SolverError, DomainError, SonicError):
        return r, q, False
    return out.rho, out.q, True


def solve_junction_riemann(claw: CouplingLaw, law: PressureLaw, a_minus: float, u_l, a_plus: float, u_r) -> JunctionFan:
    """Riemann problem at a junction.

    Finds ``(sigma1, sigma2)`` with ``L2(T(L1(u_l; sigma1)); sigma2) = u_r``.
    The unknown ``sigma1`` is the root of the velocity gap between the
    transferred state and the backward 2-curve of ``u_r``; the search
    starts from the solution with the junction removed.
    """
    u_l = as_state(u_l)
    u_r = as_state(u_r)
    if a_plus == a_minus:
        fan = solve_riemann(law, u_l, u_r)
        left = tuple(w for w in fan.waves if w.family == WaveFamily.FIRST)
        right = tuple(w for w in fan.waves if w.family == WaveFamily.SECOND)
        out = JunctionFan(a_minus, a_plus, u_l, u_r, fan.middle, fan.middle, fan.sigma1, fan.sigma2, left, right, 0)
        _check_regime(out)
        return out
    _check_neighborhood(claw, law, a_minus, a_plus, u_l)
    _check_neighborhood(claw, law, a_minus, a_plus, u_r)
    k, g = law.params
    counter = [0]

    def gap(s1):
        counter[0] += 1
        r1, q1, st = K.lax_state(k, g, 1, u_l.rho, u_l.q, s1)
        if st != K.OK:
            return math.inf
        rt, qt, ok = _t_raw(claw, law, a_minus, a_plus, r1, q1)
        if not ok:
            return math.nan
        vb, _ = K.backward_velocity(k, g, 2, u_r.rho, u_r.q / u_r.rho, rt)
        return qt / rt - vb

    # guess: pull u_r back through the stationary junction and solve in one pipe
    rb, qb, ok = _t_raw(claw, law, a_plus, a_minus, u_r.rho, u_r.q)
    guess = 0.0
    if ok:
        try:
            guess = solve_riemann(law, u_l, GasState(rb, qb)).sigma1
        except (VacuumError, SolverError, DomainError):
            guess = 0.0
    g0 = gap(guess)
    if g0 == 0.0:
        s1 = guess
    else:
        step = 1e-6 * u_l.rho + 1e-3 * abs(guess)
        lo = hi = guess
        glo = ghi = g0
        found = False
        for _ in range(80):
            # gap is increasing in sigma1
            if glo > 0 or not math.isfinite(glo):
                lo -= step
                glo = gap(lo)
            if ghi < 0 or not math.isfinite(ghi):
                hi += step
                ghi = gap(hi)
            if math.isfinite(glo) and math.isfinite(ghi) and glo <= 0.0 <= ghi:
                found = True
                break
            step *= 2.0
        if not found:
            raise SolverError("could not bracket the junction Riemann problem", u_l=tuple(u_l), u_r=tuple(u_r))
        s1 = brentq(gap, lo, hi, xtol=1e-17, rtol=1e-15, maxiter=200)
    um = lax_curve(law, 1, u_l, s1) if s1 != 0.0 else u_l
    up = t_map(claw, law, a_minus, a_plus, um)
    s2 = curve_parameter(2, up, u_r)
    end = lax_curve(law, 2, up, s2)
    scale = max(1.0, u_r.rho, abs(u_r.q))
    resid = abs(end.q - u_r.q) / scale
    if resid > 1e-10:
        raise SolverError("junction Riemann residual above tolerance", residual=resid, u_l=tuple(u_l), u_r=tuple(u_r))
    s1 = 0.0 if abs(s1) <= 8 * 2.2e-16 * u_l.rho else s1
    s2 = 0.0 if abs(s2) <= 8 * 2.2e-16 * u_r.rho else s2
    left = (_exact_wave(law, 1, u_l, um, s1),) if s1 != 0.0 else ()
    right = (_exact_wave(law, 2, up, u_r, s2),) if s2 != 0.0 else ()
    out = JunctionFan(a_minus, a_plus, u_l, u_r, um, up, s1, s2, left, right, counter[0])
    _check_regime(out)
    return out


def _check_regime(fan: JunctionFan):
    for w in fan.left_waves:
        if max(w.speeds) >= 0.0:
            raise RegimeError("family-1 wave does not leave the junction to the left", speeds=w.speeds)
    for w in fan.right_waves:
        if min(w.speeds) <= 0.0:
            raise RegimeError("family-2 wave does not leave the junction to the right", speeds=w.speeds)


def junction_response(claw: CouplingLaw, law: PressureLaw, a_minus: float, a_plus: float, u_bar, sigma2_in: float):
    """Outgoing sizes when a 2-wave of size ``sigma2_in`` hits a stationary junction.

    The background is ``u_bar`` on the left and ``T(u_bar)`` on the right;
    the wave arrives from the left, leaving ``u_bar`` behind it.
    """
    u_bar = as_state(u_bar)
    w = lax_curve(law, 2, u_bar, sigma2_in)
    fan = solve_junction_riemann(claw, law, a_minus, u_bar, a_plus, t_map(claw, law, a_minus, a_plus, w))
    return fan.sigma1, fan.sigma2


def linear_junction_response(claw: CouplingLaw, law: PressureLaw, a_minus: float, a_plus: float, u_bar, h: float = 1e-5):
    """Exact derivatives of the outgoing sizes with respect to the incoming size.

    Central differences of :func:`junction_response` at zero incoming size,
    with the section jump kept finite.  Returns ``(d sigma1+, d sigma2+)``.
    """
    p1, p2 = junction_response(claw, law, a_minus, a_plus, u_bar, h)
    m1, m2 = junction_response(claw, law, a_minus, a_plus, u_bar, -h)
    return (p1 - m1) / (2 * h), (p2 - m2) / (2 * h)


def t_jacobian(claw: CouplingLaw, law: PressureLaw, a_minus: float, a_plus: float, u, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the transfer map in ``(rho, q)``."""
    u = as_state(u)
    J = np.empty((2, 2))
    for j, (dr, dq) in enumerate(((h * u.rho, 0.0), (0.0, h * max(u.rho, abs(u.q))))):
        plus = t_map(claw, law, a_minus, a_plus, (u.rho + dr, u.q + dq))
        minus = t_map(claw, law, a_minus, a_plus, (u.rho - dr, u.q - dq))
        step = 2 * (dr + dq)
        J[:, j] = [(plus.rho - minus.rho) / step, (plus.q - minus.q) / step]
    return J


def np_growth_constant(claw: CouplingLaw, law: PressureLaw, a_minus: float, a_plus: float, u) -> float:
    """Estimate of ``K3``: the operator 2-norm of ``(DT - I)/|da|``."""
    if a_plus == a_minus:
        return 0.0
    J = t_jacobian(claw, law, a_minus, a_plus, u)
    return float(np.linalg.norm(J - np.eye(2), 2) / abs(a_plus - a_minus))
