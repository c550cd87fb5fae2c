"""Glimm functionals, the L1-stability functional and weak-form diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from . import _accel
from . import _kernels as K
from .errors import ProfileError, SolverError, UsageError
from .gas_core import GasState, PressureLaw, entropy_pair, momentum_flux
from .junction import (
    CouplingLaw,
    dsigma_da,
    first_order_coeffs,
    np_growth_constant,
    sigma_map,
    solve_junction_riemann,
)
from .profiles import PipeProfile
from .riemann import solve_riemann

if TYPE_CHECKING:  # pragma: no cover
    from .wft_engine import Timeline, WftState

LN2 = math.log(2.0)


# --------------------------------------------------------------- Glimm


@dataclass(frozen=True)
class GlimmReport:
    """Values of ``V``, ``Q`` and ``upsilon = V + Q`` for one state.

    ``weights`` and ``contributions`` are per front, in the order of
    ``state.fronts``.
    """

    V: float
    Q: float
    upsilon: float
    weights: np.ndarray
    contributions: np.ndarray
    C: float
    pairs: int

    def to_dict(self) -> dict:
        return {"V": self.V, "Q": self.Q, "upsilon": self.upsilon, "C": self.C, "pairs": self.pairs}


def front_weights(state: "WftState", C: float, profile: PipeProfile | None = None) -> np.ndarray:
    """Junction weights of the fronts of ``state``.

    A 1-front in pipe ``j`` gets ``exp(C * sum of |jumps| left of the pipe)``;
    2-fronts and non-physical fronts get the sum of the jumps to the right.
    """
    profile = state.profile if profile is None else profile
    fronts = state.fronts
    if not fronts:
        return np.zeros(0)
    jumps = np.abs(profile.jumps)
    left = np.concatenate(([0.0], np.cumsum(jumps)))
    right = left[-1] - left
    pipe = np.array([f.pipe for f in fronts])
    fam = np.array([int(f.family) for f in fronts])
    expo = np.where(fam == 1, left[pipe], right[pipe])
    return np.exp(C * expo)


def glimm_functionals(state: "WftState", profile: PipeProfile | None = None, C: float = 0.0) -> GlimmReport:
    """Weighted total size ``V``, interaction potential ``Q`` and their sum."""
    fronts = state.fronts
    if not fronts:
        return GlimmReport(0.0, 0.0, 0.0, np.zeros(0), np.zeros(0), C, 0)
    w = front_weights(state, C, profile)
    sig = np.array([f.sigma for f in fronts])
    fam = np.array([int(f.family) for f in fronts], dtype=np.int64)
    contrib = w * np.abs(sig)
    V = float(contrib.sum())
    if _accel.HAVE_NUMBA:
        Q, n = K.approaching_mass(fam, sig)
    else:
        Q, n = K.approaching_mass_numpy(fam, sig)
    return GlimmReport(V, float(Q), V + float(Q), w, contrib, C, int(n))


def junction_coefficients(law: PressureLaw, claw: CouplingLaw, a_minus: float, a_plus: float, u) -> tuple[float, float, float]:
    """``(K1, K2, K3)`` at one junction, linearized at the state ``u`` on its left."""
    co = first_order_coeffs(law, a_minus, u, dsigma_da(claw, law, a_minus, u))
    return co.K1, co.K2, np_growth_constant(claw, law, a_minus, a_plus, u)


@dataclass(frozen=True)
class WeightChoice:
    """Weight constant ``C`` and the verdict of the admissibility conditions.

    ``failures`` maps each violated condition to its offending values.
    """

    C: float
    delta: float
    K1: float
    K2: float
    K3: float
    tv: float
    failures: dict = field(default_factory=dict)

    @property
    def admissible(self) -> bool:
        return not self.failures

    @property
    def tv_limit(self) -> float:
        return 1.0 / (4.0 * (self.K1 + self.K2) * math.e) if self.K1 + self.K2 > 0 else math.inf

    @property
    def jump_limit(self) -> float:
        return LN2 / self.K2 if self.K2 > 0 else math.inf

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "delta": self.delta,
            "K1": self.K1,
            "K2": self.K2,
            "K3": self.K3,
            "tv": self.tv,
            "tv_limit": self.tv_limit,
            "jump_limit": self.jump_limit,
            "admissible": self.admissible,
            "failures": {k: list(v) if isinstance(v, tuple) else v for k, v in self.failures.items()},
        }


def choose_weight_constant(
    profile: PipeProfile,
    K1: float,
    K2: float,
    K3: float = 0.0,
    delta: float = 0.5,
    upsilon0: float | None = None,
    C: float | None = None,
) -> WeightChoice:
    """``C = 1/TV(a)`` and the check of the small-variation conditions.

    The conditions are ``TV(a) < 1/(4 (K1+K2) e)``, every jump at most
    ``ln 2 / K2``, ``delta < 1``, ``C > 2 K3`` and, when ``upsilon0`` is
    given, ``upsilon0 < delta``.  An explicit ``C`` overrides the default.
    """
    tv = profile.tv
    if not tv > 0:
        raise ProfileError("weight constant needs a profile with at least one nonzero jump")
    if min(K1, K2, K3) < 0:
        raise UsageError("junction constants must be nonnegative", K1=K1, K2=K2, K3=K3)
    C = 1.0 / tv if C is None else float(C)
    fail: dict = {}
    s = K1 + K2
    if s > 0 and not tv < 1.0 / (4.0 * s * math.e):
        fail["total_variation"] = (tv, 1.0 / (4.0 * s * math.e))
    if K2 > 0:
        big = [float(d) for d in np.abs(profile.jumps) if d > LN2 / K2]
        if big:
            fail["jump_size"] = (max(big), LN2 / K2)
    if not delta < 1.0:
        fail["delta"] = (delta, 1.0)
    if not C > 2.0 * K3:
        fail["nonphysical_growth"] = (C, 2.0 * K3)
    if upsilon0 is not None and not upsilon0 < delta:
        fail["initial_functional"] = (upsilon0, delta)
    return WeightChoice(C, delta, K1, K2, K3, tv, fail)


def junction_upsilon_bound(K1: float, K2: float, C: float, tv: float, delta: float, jump: float, sigma: float) -> float:
    """Upper bound on the change of ``upsilon`` when a 2-wave of size ``sigma`` crosses a jump ``jump``."""
    d = abs(jump)
    return ((K1 + K2) * (1.0 + math.exp(K2 * d)) * math.exp(C * tv) + (K1 + K2) * delta - C) * d * abs(sigma)


# --------------------------------------------------------- L1 stability


def _physical_fronts(state, owner):
    out = []
    for f in state.fronts:
        if f.is_physical:
            out.append((f.position(state.time), int(f.family), abs(f.sigma), owner, f.pipe))
    return out


def phi_distance(state1: "WftState", state2: "WftState", kappa1: float = 1.0, kappa2: float = 1.0, C: float | None = None) -> float:
    """Weighted L1 distance between two front-tracking states.

    On every cell of the merged breakpoint grid the two states are joined
    by a Riemann fan with sizes ``s_1, s_2``; each size is weighted by
    ``1 + kappa1 A_i(x) + kappa1 kappa2 (upsilon(u1) + upsilon(u2))``, where
    ``A_i`` collects the fronts of both states approaching the fan.
    """
    prof = state1.profile
    if prof != state2.profile:
        raise UsageError("both states must live on the same profile")
    if C is None:
        C = 1.0 / prof.tv if prof.tv > 0 else 0.0
    p1 = state1.piecewise()
    p2 = state2.piecewise()
    if state1.states[0] != state2.states[0] or state1.states[-1] != state2.states[-1]:
        return math.inf
    law = state1.scenario.law
    U = glimm_functionals(state1, C=C).upsilon + glimm_functionals(state2, C=C).upsilon
    fr = _physical_fronts(state1, 1) + _physical_fronts(state2, 2)
    fx = np.array([f[0] for f in fr])
    ffam = np.array([f[1] for f in fr], dtype=int)
    fsig = np.array([f[2] for f in fr])
    fown = np.array([f[3] for f in fr], dtype=int)
    fpipe = np.array([f[4] for f in fr], dtype=int)
    pts = np.union1d(p1.breaks, p2.breaks)
    if pts.size < 2:
        return 0.0
    total = 0.0
    for x0, x1 in zip(pts[:-1], pts[1:]):
        if x1 <= x0:
            continue
        m = 0.5 * (x0 + x1)
        u1 = p1.state(m)
        u2 = p2.state(m)
        if u1 == u2:
            continue
        try:
            fan = solve_riemann(law, u1, u2)
        except SolverError as exc:
            exc.context.update(x=m)
            raise
        j = prof.pipe_index(m)
        here = fpipe == j
        left = here & (fx < m)
        right = here & (fx > m)
        for i, s in ((1, fan.sigma1), (2, fan.sigma2)):
            if s == 0.0:
                continue
            A = fsig[left & (ffam > i)].sum() + fsig[right & (ffam < i)].sum()
            same = ffam == i
            if s < 0:
                A += fsig[left & same & (fown == 1)].sum() + fsig[right & same & (fown == 2)].sum()
            else:
                A += fsig[left & same & (fown == 2)].sum() + fsig[right & same & (fown == 1)].sum()
            total += abs(s) * (1.0 + kappa1 * A + kappa1 * kappa2 * U) * (x1 - x0)
    return total


def _state_before(timeline: "Timeline", k: int, t: float):
    return timeline.snapshots[k].at_time(t)


def phi_history(timeline1: "Timeline", timeline2: "Timeline", kappa1: float = 1.0, kappa2: float = 1.0, C: float | None = None):
    """Values of ``phi`` just before and just after every event time of either run.

    Returns ``(times, before, after)`` arrays.  Both timelines must store
    a snapshot after every event.
    """
    for tl in (timeline1, timeline2):
        if not tl.every_event:
            raise UsageError("phi history needs a snapshot after every event")
    times = sorted({s.time for s in timeline1.snapshots[1:]} | {s.time for s in timeline2.snapshots[1:]})
    t1 = timeline1.times
    t2 = timeline2.times
    before, after = [], []
    for t in times:
        k1 = int(np.searchsorted(t1, t, side="left")) - 1
        k2 = int(np.searchsorted(t2, t, side="left")) - 1
        before.append(phi_distance(timeline1.snapshots[k1].at_time(t), timeline2.snapshots[k2].at_time(t), kappa1, kappa2, C))
        j1 = int(np.searchsorted(t1, t, side="right")) - 1
        j2 = int(np.searchsorted(t2, t, side="right")) - 1
        after.append(phi_distance(timeline1.snapshots[j1].at_time(t), timeline2.snapshots[j2].at_time(t), kappa1, kappa2, C))
    return np.array(times), np.array(before), np.array(after)


@dataclass(frozen=True)
class KappaCalibration:
    kappa1: float
    kappa2: float
    worst_jump: float
    tried: tuple


def calibrate_kappa(pairs, grid=(0.1, 1.0, 10.0, 100.0), tol: float = 1e-12, C: float | None = None) -> KappaCalibration:
    """Smallest ``(kappa1, kappa2)`` on ``grid`` for which ``phi`` never jumps up at an event.

    ``pairs`` is a list of timeline pairs.  Candidates are tried in
    increasing order of ``kappa1 * kappa2``, then ``kappa1``.
    """
    cands = sorted(((k1, k2) for k1 in grid for k2 in grid), key=lambda c: (c[0] * c[1], c[0]))
    tried = []
    for k1, k2 in cands:
        worst = -math.inf
        for tl1, tl2 in pairs:
            _, b, a = phi_history(tl1, tl2, k1, k2, C)
            if b.size:
                worst = max(worst, float(np.max(a - b)))
        tried.append((k1, k2, worst))
        if worst <= tol:
            return KappaCalibration(k1, k2, worst, tuple(tried))
    k1, k2, worst = min(tried, key=lambda r: r[2])
    return KappaCalibration(k1, k2, worst, tuple(tried))


# ------------------------------------------------------- weak residuals


@dataclass(frozen=True)
class Bump:
    """Test function ``b((t - tc)/rt) b((x - xc)/rx)`` with ``b(s) = exp(-1/(1 - s^2))``."""

    tc: float
    xc: float
    rt: float
    rx: float

    def __post_init__(self):
        if not (self.rt > 0 and self.rx > 0):
            raise UsageError("bump radii must be positive", rt=self.rt, rx=self.rx)

    @property
    def t_support(self) -> tuple[float, float]:
        return self.tc - self.rt, self.tc + self.rt

    @property
    def x_support(self) -> tuple[float, float]:
        return self.xc - self.rx, self.xc + self.rx

    def __call__(self, t, x):
        return _b((np.asarray(t) - self.tc) / self.rt) * _b((np.asarray(x) - self.xc) / self.rx)


def _b(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out if out.ndim else float(out)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _check_window(timeline, bump):
    if not timeline.every_event:
        raise UsageError("weak residuals need a snapshot after every event")
    t0, t1 = bump.t_support
    if t0 < 0.0 or t1 > timeline.params.t_end:
        raise UsageError("test function support leaves the computed time window", support=(t0, t1), t_end=timeline.params.t_end)


def _slabs(timeline, density_flux):
    """Flattened slab arrays for :func:`_kernels.slab_integrals`."""
    snaps = timeline.snapshots
    t_end = timeline.params.t_end
    t0, t1, x0, sp, off = [], [], [], [], [0]
    w1, w2, f1, f2 = [], [], [], []
    for k, s in enumerate(snaps):
        end = snaps[k + 1].time if k + 1 < len(snaps) else t_end
        t0.append(s.time)
        t1.append(end)
        for it in s.items:
            x0.append(it.position(s.time))
            sp.append(it.speed)
        off.append(len(x0))
        sec = s.profile.sections[0]
        secs = [sec]
        for it in s.items:
            if it.kind == 0:
                sec = it.a_right
            secs.append(sec)
        for a, u in zip(secs, s.states):
            a1, a2, b1, b2 = density_flux(a, u)
            w1.append(a1)
            w2.append(a2)
            f1.append(b1)
            f2.append(b2)
    arr = lambda v: np.asarray(v, dtype=float)  # noqa: E731
    return arr(t0), arr(t1), arr(x0), arr(sp), np.asarray(off, dtype=np.int64), arr(w1), arr(w2), arr(f1), arr(f2)


def _integrate(timeline, bump, density_flux, pieces):
    slabs = _slabs(timeline, density_flux)
    return K.slab_integrals(*slabs, bump.tc, bump.rt, bump.xc, bump.rx, _GL_NODES, _GL_WEIGHTS, int(pieces))


def _junction_source(timeline, bump, pieces):
    """``sum_j int Sigma_2(t) phi(t, x_j) dt`` over the junctions inside the support."""
    law, claw = timeline.scenario.law, timeline.scenario.coupling
    prof = timeline.scenario.profile
    xa, xb = bump.x_support
    ta, tb = bump.t_support
    total = 0.0
    snaps = timeline.snapshots
    for j, xj in enumerate(prof.positions):
        if not (xa < xj < xb):
            continue
        bx = _b((xj - bump.xc) / bump.rx)
        for k, s in enumerate(snaps):
            lo = max(s.time, ta)
            hi = min(snaps[k + 1].time if k + 1 < len(snaps) else timeline.params.t_end, tb)
            if hi <= lo:
                continue
            idx = next(i for i, it in enumerate(s.items) if it.kind == 0 and it.index == j + 1)
            src = sigma_map(claw, law, prof.sections[j], prof.sections[j + 1], s.states[idx])[1]
            n = max(1, math.ceil((hi - lo) / (2.0 * bump.rt) * pieces))
            edges = np.linspace(lo, hi, n + 1)
            for e0, e1 in zip(edges[:-1], edges[1:]):
                tt = 0.5 * (e1 - e0) * (_GL_NODES + 1.0) + e0
                total += src * bx * 0.5 * (e1 - e0) * float(np.dot(_GL_WEIGHTS, _b((tt - bump.tc) / bump.rt)))
    return total


def weak_residual(timeline: "Timeline", bump: Bump, pieces: int = 16) -> float:
    """Largest component of the weak-form residual against ``bump``.

    The integrand ``a U phi_t + a f(U) phi_x`` is integrated exactly in
    the piecewise-constant structure and by Gauss-Legendre quadrature in
    the test function; junctions inside the support contribute their
    momentum source ``Sigma_2``.
    """
    _check_window(timeline, bump)
    law = timeline.scenario.law

    def df(a, u):
        return a * u.rho, a * u.q, a * u.q, a * momentum_flux(law, u)

    r1, r2 = _integrate(timeline, bump, df, pieces)
    r2 += _junction_source(timeline, bump, pieces)
    return max(abs(r1), abs(r2))


def entropy_residual(timeline: "Timeline", bump: Bump, pieces: int = 16) -> float:
    """``int int a E phi_t + a F phi_x`` for a nonnegative bump (nonnegative for entropy solutions)."""
    _check_window(timeline, bump)
    law = timeline.scenario.law

    def df(a, u):
        E, F = entropy_pair(law, u)
        return a * E, 0.0, a * F, 0.0

    r1, _ = _integrate(timeline, bump, df, pieces)
    return float(r1)


# ----------------------------------------------------- integral checks


class ResolutionWarning(UserWarning):
    """The requested scale is below the discretization scale of the run."""


@dataclass(frozen=True)
class IntegralConditionReport:
    tau: float
    xi: float
    hs: np.ndarray
    values: np.ndarray
    floor: float
    junction: bool

    @property
    def decreasing(self) -> bool:
        """Values shrink (or stay below the floor) as ``h`` decreases."""
        order = np.argsort(-self.hs)
        v = self.values[order]
        return bool(np.all(np.diff(v) <= np.maximum(self.floor, 1e-12)))

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "xi": self.xi,
            "hs": self.hs.tolist(),
            "values": self.values.tolist(),
            "floor": self.floor,
            "junction": self.junction,
            "decreasing": self.decreasing,
        }


def _sides(pc, x):
    kl = int(np.searchsorted(pc.breaks, x, side="left"))
    kr = int(np.searchsorted(pc.breaks, x, side="right"))
    return GasState(float(pc.rho[kl]), float(pc.q[kl])), GasState(float(pc.rho[kr]), float(pc.q[kr]))


def integral_condition_check(timeline: "Timeline", tau: float, xi: float, hs) -> IntegralConditionReport:
    """``(1/h) int |u(tau+h) - U_sharp| dx`` over ``[xi - h lam, xi + h lam]`` for each ``h``.

    ``U_sharp`` is the self-similar Riemann fan (a junction fan when
    ``xi`` is a junction position) built from the traces of ``u(tau)``
    at ``xi``.  The distance uses the 1-norm ``|d rho| + |d q|``.
    """
    from .wft_engine import sample_solution

    law, claw = timeline.scenario.law, timeline.scenario.coupling
    prof = timeline.scenario.profile
    hs = np.asarray(hs, dtype=float)
    if np.any(hs <= 0) or tau < 0 or tau + hs.max() > timeline.params.t_end:
        raise UsageError("(tau, tau + h) must lie in the computed window", tau=tau, h_max=float(hs.max()))
    lam = timeline.lam_hat
    base = sample_solution(timeline, tau)
    u_l, u_r = _sides(base, xi)
    jpos = list(prof.positions)
    at_junction = xi in jpos
    if at_junction:
        j = jpos.index(xi)
        fan = solve_junction_riemann(claw, law, prof.sections[j], u_l, prof.sections[j + 1], u_r)
    else:
        fan = solve_riemann(law, u_l, u_r)
    eps = timeline.params.eps
    if np.any(hs < eps):
        warnings.warn("h below the fan step; values reflect the discretization", ResolutionWarning, stacklevel=2)
    vals = []
    for h in hs:
        pc = sample_solution(timeline, tau + h)
        lo, hi = xi - h * lam, xi + h * lam
        pts = pc.breaks[(pc.breaks > lo) & (pc.breaks < hi)]
        pts = np.concatenate(([lo], pts, [xi] if lo < xi < hi else [], [hi]))
        pts = np.unique(pts)
        acc = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            edges = np.linspace(a, b, 9)
            for e0, e1 in zip(edges[:-1], edges[1:]):
                xs = 0.5 * (e1 - e0) * (_GL_NODES + 1.0) + e0
                for x, w in zip(xs, _GL_WEIGHTS):
                    ref = fan.sample(law, (x - xi) / h)
                    got = pc.state(x)
                    acc += 0.5 * (e1 - e0) * w * (abs(got.rho - ref.rho) + abs(got.q - ref.q))
        vals.append(acc / h)
    return IntegralConditionReport(tau, xi, hs, np.array(vals), eps, at_junction)
