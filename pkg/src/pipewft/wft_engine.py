"""Wave-front tracking with junctions.

The solution is a finite list of items ordered in ``x``: fronts (straight
lines in the ``(t, x)`` plane) and junction markers (fixed points where
the section jumps), with a constant state between consecutive items.
Events are processed one pair at a time:

* two fronts meeting in a pipe: accurate Riemann solve, or, when the
  product of their sizes is below ``eps_check``, a crossing with sizes
  unaltered plus a non-physical front;
* a non-physical front meeting a physical one: the physical front passes
  unaltered and the non-physical front absorbs the mismatch;
* a front reaching a junction: accurate junction solve (non-physical
  fronts and small physical fronts are refracted with a single
  non-physical front).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from . import functionals as F
from .errors import EventCapExceeded, InvariantViolation, RegimeError, SolverError, UsageError
from .gas_core import GasState, PressureLaw, as_state, is_subsonic, mach
from .junction import CouplingLaw, psi_residual, solve_junction_riemann, t_map
from .profiles import PipeProfile, StationaryDatum
from .riemann import (
    Wave,
    WaveFamily,
    curve_residual,
    front_waves,
    lax_curve,
    max_speed,
    solve_riemann,
    wave_speed,
)

NP = WaveFamily.NONPHYSICAL


# ----------------------------------------------------------------- data


@dataclass(frozen=True)
class Front:
    """A straight discontinuity ``x(t) = x0 + speed (t - t0)`` in pipe ``pipe``.

    ``sigma`` is the signed wave size for physical families and the
    nonnegative strength ``|u_right - u_left|`` for non-physical fronts.
    ``origin`` records how the front was created; it drives the
    no-resplit rule.
    """

    family: WaveFamily
    sigma: float
    x0: float
    t0: float
    speed: float
    u_left: GasState
    u_right: GasState
    pipe: int
    origin: str = "initial"

    kind = property(lambda self: int(self.family))

    def position(self, t: float) -> float:
        return self.x0 + self.speed * (t - self.t0)

    @property
    def strength(self) -> float:
        return abs(self.sigma)

    @property
    def is_physical(self) -> bool:
        return self.family != NP

    @property
    def is_rarefaction(self) -> bool:
        return self.is_physical and self.sigma > 0.0


@dataclass(frozen=True)
class JunctionMarker:
    """Junction ``index`` (1-based) between pipe ``index - 1`` and pipe ``index``."""

    index: int
    x: float
    a_left: float
    a_right: float

    kind = 0
    speed = 0.0
    x0 = property(lambda self: self.x)
    t0 = 0.0

    def position(self, t: float) -> float:
        return self.x


@dataclass(frozen=True)
class Scenario:
    """Everything that defines a front-tracking problem."""

    law: PressureLaw
    coupling: CouplingLaw
    profile: PipeProfile
    datum: "InitialDatum"


@dataclass(frozen=True)
class InitialDatum:
    """Piecewise-constant initial datum: ``states[k]`` on ``[breaks[k-1], breaks[k])``."""

    breaks: tuple[float, ...]
    states: tuple[GasState, ...]

    def __post_init__(self):
        br = tuple(float(b) for b in self.breaks)
        st = tuple(as_state(u) for u in self.states)
        object.__setattr__(self, "breaks", br)
        object.__setattr__(self, "states", st)
        if len(st) != len(br) + 1:
            raise UsageError("need one more state than breakpoints")
        if any(not (b > a) for a, b in zip(br[:-1], br[1:])):
            raise UsageError("breakpoints must be strictly increasing")

    @classmethod
    def constant(cls, u) -> "InitialDatum":
        return cls((), (as_state(u),))

    @classmethod
    def from_stationary(cls, datum: StationaryDatum) -> "InitialDatum":
        return cls(datum.profile.positions, datum.states)

    @classmethod
    def single_wave(cls, law: PressureLaw, u_left, family, sigma: float, x: float) -> "InitialDatum":
        u_left = as_state(u_left)
        return cls((x,), (u_left, lax_curve(law, family, u_left, sigma)))

    @classmethod
    def sample(cls, fn, window: tuple[float, float], h: float) -> "InitialDatum":
        """Cell-midpoint sampling of ``fn(x) -> (rho, q)`` on a uniform mesh of step <= h.

        Outside the window the datum is continued by the end values.
        """
        x0, x1 = window
        n = max(1, math.ceil((x1 - x0) / h))
        xs = np.linspace(x0, x1, n + 1)
        mids = 0.5 * (xs[1:] + xs[:-1])
        vals = [as_state(fn(x)) for x in mids]
        breaks, states = [], [vals[0]]
        for x, u in zip(xs[1:-1], vals[1:]):
            if u != states[-1]:
                breaks.append(float(x))
                states.append(u)
        return cls(tuple(breaks), tuple(states))

    def value(self, x: float) -> GasState:
        return self.states[bisect.bisect_right(self.breaks, x)]

    def left_value(self, x: float) -> GasState:
        return self.states[bisect.bisect_left(self.breaks, x)]

    def to_dict(self) -> dict:
        return {"breaks": list(self.breaks), "states": [[u.rho, u.q] for u in self.states]}


def stationary_with_waves(law, coupling, profile, u_left, waves) -> InitialDatum:
    """Stationary datum over ``profile`` with extra single waves superimposed.

    ``waves`` lists ``(family, sigma, x)``; each wave is placed inside a pipe
    (not on a junction), on top of the stationary state there.  Waves are
    applied left to right and the stationary datum is rebuilt to the right
    of each wave, so the datum is stationary away from the wave positions.
    """
    from .profiles import hat_stationary

    pos = list(profile.positions)
    items = sorted(waves, key=lambda w: w[2])
    breaks: list[float] = []
    states: list[GasState] = []
    cur = as_state(u_left)
    pipe = 0
    states.append(cur)
    widx = 0
    for j in range(len(pos) + 1):
        right_end = pos[j] if j < len(pos) else math.inf
        while widx < len(items) and items[widx][2] < right_end:
            fam, sig, x = items[widx]
            if j > 0 and x == pos[j - 1]:
                raise UsageError("waves must not sit exactly on a junction", x=x)
            cur = lax_curve(law, fam, cur, sig)
            breaks.append(float(x))
            states.append(cur)
            widx += 1
        if j < len(pos):
            cur = t_map(coupling, law, profile.sections[j], profile.sections[j + 1], cur)
            breaks.append(pos[j])
            states.append(cur)
    return InitialDatum(tuple(breaks), tuple(states))


@dataclass(frozen=True)
class WftParams:
    """Front-tracking parameters.

    ``eps_check`` defaults to ``eps**2``; ``lam_hat`` defaults to 1.1 times
    ``max|v| + max c`` over the states of the initial datum.
    ``snapshot_dt=None`` stores a snapshot after every event, which is
    needed for exact sampling at arbitrary times.  ``monitor`` controls the
    Glimm-functional check: ``"auto"`` raises on an increase only when the
    scenario satisfies the weight-constant admissibility test, ``"raise"``
    always raises, ``"record"`` only flags, ``"off"`` skips functionals.
    """

    eps: float
    eps_check: float | None = None
    lam_hat: float | None = None
    t_end: float = 1.0
    max_events: int = 1_000_000
    snapshot_dt: float | None = None
    glimm_C: float | None = None
    monitor: str = "auto"
    upsilon_tol: float = 1e-9
    tie_tol: float = 1e-13

    def __post_init__(self):
        if not self.eps > 0:
            raise UsageError("fan step must be positive", eps=self.eps)
        if self.eps_check is None:
            object.__setattr__(self, "eps_check", self.eps**2)
        if self.monitor not in ("auto", "raise", "record", "off"):
            raise UsageError("unknown monitor mode", monitor=self.monitor)
        if not self.t_end >= 0:
            raise UsageError("final time must be nonnegative", t_end=self.t_end)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "eps_check": self.eps_check,
            "lam_hat": self.lam_hat,
            "t_end": self.t_end,
            "max_events": self.max_events,
            "snapshot_dt": self.snapshot_dt,
            "glimm_C": self.glimm_C,
            "monitor": self.monitor,
            "upsilon_tol": self.upsilon_tol,
        }


@dataclass(frozen=True)
class WftState:
    """Piecewise-constant solution at one instant."""

    time: float
    items: tuple
    states: tuple[GasState, ...]
    scenario: Scenario
    lam_hat: float
    interactions: int = 0
    junction_hits: int = 0
    nonphysical_created: int = 0

    @property
    def profile(self) -> PipeProfile:
        return self.scenario.profile

    @property
    def fronts(self) -> tuple[Front, ...]:
        return tuple(it for it in self.items if it.kind != 0)

    def positions(self, t: float | None = None) -> np.ndarray:
        t = self.time if t is None else t
        return np.array([it.position(t) for it in self.items])

    def at_time(self, t: float) -> "WftState":
        return replace(self, time=t)

    def value(self, x: float) -> GasState:
        """Solution at ``x`` (right-continuous)."""
        k = bisect.bisect_right(list(self.positions()), x)
        return self.states[k]

    def piecewise(self) -> "PiecewiseConstant":
        pos = self.positions()
        rho = np.array([u.rho for u in self.states])
        q = np.array([u.q for u in self.states])
        sec = [self.profile.sections[0]]
        for it in self.items:
            sec.append(it.a_right if it.kind == 0 else sec[-1])
        return PiecewiseConstant(pos, rho, q, np.array(sec))


@dataclass(frozen=True)
class Event:
    """Next thing to happen: ``kind`` is 'collision', 'junction' or 'horizon'."""

    kind: str
    time: float
    index: int = -1
    position: float = math.nan


@dataclass(frozen=True)
class EventRecord:
    """One processed event, as written to the event log."""

    index: int
    time: float
    kind: str
    position: float
    pipe: int
    incoming: tuple
    outgoing: tuple
    V_pre: float
    Q_pre: float
    U_pre: float
    V_post: float
    Q_post: float
    U_post: float
    n_fronts: int
    violation: bool = False

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "time": self.time,
            "kind": self.kind,
            "position": self.position,
            "pipe": self.pipe,
            "incoming": [list(x) for x in self.incoming],
            "outgoing": [list(x) for x in self.outgoing],
            "V_pre": self.V_pre,
            "Q_pre": self.Q_pre,
            "U_pre": self.U_pre,
            "V_post": self.V_post,
            "Q_post": self.Q_post,
            "U_post": self.U_post,
            "n_fronts": self.n_fronts,
            "violation": self.violation,
        }


@dataclass(frozen=True)
class PiecewiseConstant:
    """Function of ``x`` with jumps at ``breaks`` (right-continuous)."""

    breaks: np.ndarray
    rho: np.ndarray
    q: np.ndarray
    sections: np.ndarray

    def index(self, x):
        return np.searchsorted(self.breaks, x, side="right")

    def __call__(self, x):
        k = self.index(x)
        return np.stack([self.rho[k], self.q[k]], axis=-1)

    def state(self, x: float) -> GasState:
        k = int(self.index(x))
        return GasState(float(self.rho[k]), float(self.q[k]))

    def section(self, x):
        return self.sections[self.index(x)]

    def l1_distance(self, other: "PiecewiseConstant", window: tuple[float, float] | None = None) -> float:
        """Exact L1 distance with the 1-norm ``|d rho| + |d q|``."""
        pts = np.union1d(self.breaks, other.breaks)
        if window is not None:
            lo, hi = window
            pts = np.union1d(pts[(pts > lo) & (pts < hi)], [lo, hi])
        if pts.size < 2:
            return 0.0
        mids = 0.5 * (pts[1:] + pts[:-1])
        widths = np.diff(pts)
        d = np.abs(self(mids) - other(mids)).sum(axis=1)
        total = float(np.sum(d * widths))
        if window is None:
            far = np.abs(self(np.array([pts[0] - 1.0, pts[-1] + 1.0])) - other(np.array([pts[0] - 1.0, pts[-1] + 1.0]))).sum()
            if far > 0.0:
                return math.inf
        return total


@dataclass(frozen=True)
class Timeline:
    """Output of :func:`evolve`."""

    scenario: Scenario
    params: WftParams
    lam_hat: float
    glimm_C: float
    admissible: bool
    snapshots: tuple[WftState, ...]
    events: tuple[EventRecord, ...]
    final: WftState
    initial_glimm: "F.GlimmReport | None"
    weight_choice: object = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def every_event(self) -> bool:
        return self.params.snapshot_dt is None

    @property
    def initial(self) -> WftState:
        return self.snapshots[0]

    def violations(self) -> list[EventRecord]:
        return [e for e in self.events if e.violation]


# ------------------------------------------------------------ building


def _make_fronts(law, lam_hat, waves, x, t, pipe, eps, origin, keep_whole=frozenset()):
    """Fronts for a list of exact waves emitted from (t, x).

    Rarefactions of families in ``keep_whole`` become single fronts; the
    others are split with step ``eps``.
    """
    fronts = []
    for w in waves:
        jumps = front_waves(law, w, None if int(w.family) in keep_whole else eps)
        for j in jumps:
            if j.speed >= lam_hat:
                raise RegimeError("physical front faster than the non-physical speed", speed=j.speed, lam_hat=lam_hat)
            fronts.append(Front(w.family, j.sigma, x, t, j.speed, j.left, j.right, pipe, origin))
    return fronts


def _front(law, lam_hat, family, u_left, u_right, sigma, x, t, pipe, origin):
    s = wave_speed(law, family, u_left, u_right, sigma)
    if s >= lam_hat:
        raise RegimeError("physical front faster than the non-physical speed", speed=s, lam_hat=lam_hat)
    return Front(WaveFamily(family), sigma, x, t, s, u_left, u_right, pipe, origin)


def _np_front(lam_hat, u_left, u_right, x, t, pipe, origin="nonphysical"):
    return Front(NP, u_left.distance(u_right), x, t, lam_hat, u_left, u_right, pipe, origin)


def _default_lam_hat(law, states):
    # sup of lambda_2 over the box |v| <= max|v|, rho in the datum range
    return 1.1 * (max(abs(u.v) for u in states) + max(math.sqrt(law.dp(u.rho)) for u in states))


def init_approximation(scenario: Scenario, params: WftParams) -> WftState:
    """Initial front-tracking state.

    Every jump of the datum and every junction is resolved with the
    accurate solver; rarefactions are split into fans of step ``eps``.
    """
    law, claw, prof, datum = scenario.law, scenario.coupling, scenario.profile, scenario.datum
    for u in datum.states:
        if not is_subsonic(law, u):
            raise RegimeError("initial datum must be subsonic", rho=u.rho, q=u.q)
    lam_hat = params.lam_hat if params.lam_hat is not None else _default_lam_hat(law, datum.states)
    sites = sorted(set(datum.breaks) | set(prof.positions))
    jpos = {x: j for j, x in enumerate(prof.positions)}
    items: list = []
    states = [datum.states[0]]
    for x in sites:
        u_l = datum.left_value(x)
        u_r = datum.value(x)
        pipe = prof.pipe_index(x)
        if x in jpos:
            j = jpos[x]
            a0, a1 = prof.sections[j], prof.sections[j + 1]
            fan = solve_junction_riemann(claw, law, a0, u_l, a1, u_r)
            left = _make_fronts(law, lam_hat, fan.left_waves, x, 0.0, j, params.eps, "initial")
            right = _make_fronts(law, lam_hat, fan.right_waves, x, 0.0, j + 1, params.eps, "initial")
            for f in left:
                items.append(f)
                states.append(f.u_right)
            items.append(JunctionMarker(j + 1, x, a0, a1))
            states.append(fan.trace_plus)
            for f in right:
                items.append(f)
                states.append(f.u_right)
        else:
            if u_l == u_r:
                continue
            fan = solve_riemann(law, u_l, u_r)
            for f in _make_fronts(law, lam_hat, fan.waves, x, 0.0, pipe, params.eps, "initial"):
                items.append(f)
                states.append(f.u_right)
        states[-1] = u_r
    return WftState(0.0, tuple(items), tuple(states), scenario, lam_hat)


# -------------------------------------------------------------- events


def next_event(state: WftState, params: WftParams) -> Event:
    """Earliest collision of adjacent items after ``state.time`` (or the horizon)."""
    items = state.items
    if len(items) >= 2:
        t = state.time
        x = np.array([it.position(t) for it in items])
        s = np.array([it.speed for it in items], dtype=float)
        kind = np.array([it.kind for it in items], dtype=np.int64)
        idx, dt = K.next_collision(x, s, kind, params.tie_tol)
        if idx >= 0 and t + dt <= params.t_end:
            te = t + dt
            kind_name = "junction" if (items[idx].kind == 0 or items[idx + 1].kind == 0) else "collision"
            pos = 0.5 * (items[idx].position(te) + items[idx + 1].position(te))
            return Event(kind_name, te, int(idx), pos)
    return Event("horizon", params.t_end)


def _splice(state, i0, i1, new_items, inner_states, t, **counts):
    items = state.items[:i0] + tuple(new_items) + state.items[i1:]
    if new_items:
        states = state.states[: i0 + 1] + tuple(inner_states) + state.states[i1:]
    else:
        states = state.states[: i0 + 1] + state.states[i1 + 1 :]
    kw = {k: getattr(state, k) + v for k, v in counts.items()}
    return replace(state, time=t, items=items, states=states, **kw)


def _chain(fronts):
    return [f.u_right for f in fronts[:-1]]


def handle_interaction(state: WftState, event: Event, params: WftParams) -> tuple[WftState, str, tuple, tuple]:
    """Apply the interaction rule for ``event``.

    Returns the new state, the rule applied, and the (family, size) lists of
    incoming and outgoing fronts.
    """
    if event.kind not in ("collision", "junction"):
        raise UsageError("only collision and junction events can be handled", kind=event.kind)
    sc = state.scenario
    law, claw = sc.law, sc.coupling
    lam = state.lam_hat
    t = event.time
    i = event.index
    L, R = state.items[i], state.items[i + 1]
    u_l, u_r = state.states[i], state.states[i + 2]
    try:
        if event.kind == "collision":
            return _pipe_event(state, i, L, R, u_l, u_r, t, law, lam, params)
        return _junction_event(state, i, L, R, u_l, u_r, t, law, claw, lam, params)
    except (SolverError, RegimeError) as exc:
        exc.context.update(event_time=t, event_index=i, event_kind=event.kind)
        raise


def _sizes(fronts):
    return tuple((int(f.family), f.sigma) for f in fronts)


def _pipe_event(state, i, L, R, u_l, u_r, t, law, lam, params):
    x = 0.5 * (L.position(t) + R.position(t))
    pipe = L.pipe
    incoming = _sizes([L, R])
    if not L.is_physical and not R.is_physical:
        raise SolverError("two non-physical fronts cannot meet")
    if not L.is_physical:
        # non-physical front overtakes a physical one
        w = lax_curve(law, R.family, u_l, R.sigma)
        f1 = _front(law, lam, R.family, u_l, w, R.sigma, x, t, pipe, R.origin)
        f2 = _np_front(lam, w, u_r, x, t, pipe)
        new = [f1, f2]
        return _splice(state, i, i + 2, new, _chain(new), t, interactions=1), "np_crossing", incoming, _sizes(new)
    if not R.is_physical:
        raise SolverError("a physical front cannot catch a non-physical one")
    if abs(L.sigma * R.sigma) >= params.eps_check:
        fan = solve_riemann(law, u_l, u_r)
        keep = {int(f.family) for f in (L, R) if f.is_rarefaction}
        new = _make_fronts(law, lam, fan.waves, x, t, pipe, params.eps, "interaction", keep)
        if not new:
            return _splice(state, i, i + 2, [], [], t, interactions=1), "interaction", incoming, ()
        return _splice(state, i, i + 2, new, _chain(new), t, interactions=1), "interaction", incoming, _sizes(new)
    if L.family == R.family:
        sig = L.sigma + R.sigma
        w = lax_curve(law, L.family, u_l, sig)
        new = [_front(law, lam, L.family, u_l, w, sig, x, t, pipe, "merge")]
    else:
        # L is a 2-front, R a 1-front: they swap places unaltered
        w1 = lax_curve(law, R.family, u_l, R.sigma)
        w = lax_curve(law, L.family, w1, L.sigma)
        new = [
            _front(law, lam, R.family, u_l, w1, R.sigma, x, t, pipe, R.origin),
            _front(law, lam, L.family, w1, w, L.sigma, x, t, pipe, L.origin),
        ]
    new.append(_np_front(lam, w, u_r, x, t, pipe))
    st = _splice(state, i, i + 2, new, _chain(new), t, interactions=1, nonphysical_created=1)
    return st, "crossing", incoming, _sizes(new)


def _junction_event(state, i, L, R, u_l, u_r, t, law, claw, lam, params):
    if L.kind == 0:
        J, Fr, from_left = L, R, False
    else:
        J, Fr, from_left = R, L, True
    x = J.x
    a0, a1 = J.a_left, J.a_right
    j = J.index
    incoming = _sizes([Fr])
    if not Fr.is_physical:
        if not from_left:
            raise SolverError("non-physical front reached a junction from the right")
        up = t_map(claw, law, a0, a1, u_l)
        npf = _np_front(lam, up, u_r, x, t, j)
        new = [J, npf]
        st = _splice(state, i, i + 2, new, [up], t, junction_hits=1, nonphysical_created=1)
        return st, "np_junction", incoming, _sizes([npf])
    if abs(Fr.sigma) > params.eps_check:
        fan = solve_junction_riemann(claw, law, a0, u_l, a1, u_r)
        left = _make_fronts(law, lam, fan.left_waves, x, t, j - 1, params.eps, "junction")
        right = _make_fronts(law, lam, fan.right_waves, x, t, j, params.eps, "junction")
        new = left + [J] + right
        inner = [fan.trace_plus if it is J else it.u_right for it in new[:-1]]
        st = _splice(state, i, i + 2, new, inner, t, junction_hits=1)
        return st, "junction", incoming, _sizes(left + right)
    # small wave: crosses unaltered, the mismatch travels as a non-physical front
    if from_left:
        up = t_map(claw, law, a0, a1, u_l)
        w = lax_curve(law, Fr.family, up, Fr.sigma)
        f2 = _front(law, lam, Fr.family, up, w, Fr.sigma, x, t, j, Fr.origin)
        npf = _np_front(lam, w, u_r, x, t, j)
        new = [J, f2, npf]
        inner = [up, w]
        out = [f2, npf]
    else:
        w = lax_curve(law, Fr.family, u_l, Fr.sigma)
        f1 = _front(law, lam, Fr.family, u_l, w, Fr.sigma, x, t, j - 1, Fr.origin)
        up = t_map(claw, law, a0, a1, w)
        npf = _np_front(lam, up, u_r, x, t, j)
        new = [f1, J, npf]
        inner = [w, up]
        out = [f1, npf]
    st = _splice(state, i, i + 2, new, inner, t, junction_hits=1, nonphysical_created=1)
    return st, "junction_simplified", incoming, _sizes(out)


# ----------------------------------------------------------- evolution


def _glimm_C(scenario: Scenario, params: WftParams) -> float:
    if params.glimm_C is not None:
        return params.glimm_C
    tv = scenario.profile.tv
    return 1.0 / tv if tv > 0 else 0.0


def assess_regime(state: WftState, C: float, delta: float = 0.5):
    """Weight-constant admissibility of a scenario from its initial state."""
    prof = state.profile
    if prof.tv == 0.0:
        return None
    law, claw = state.scenario.law, state.scenario.coupling
    K1 = K2 = K3 = 0.0
    for it, u in zip(state.items, state.states):
        if it.kind == 0:
            co = F.junction_coefficients(law, claw, it.a_left, it.a_right, u)
            K1, K2, K3 = max(K1, co[0]), max(K2, co[1]), max(K3, co[2])
    g0 = F.glimm_functionals(state, C=C)
    return F.choose_weight_constant(prof, K1, K2, K3, delta=delta, upsilon0=g0.upsilon, C=C)


def evolve(scenario: Scenario, params: WftParams) -> Timeline:
    """Run the front-tracking event loop up to ``params.t_end``."""
    state = init_approximation(scenario, params)
    C = _glimm_C(scenario, params)
    choice = None
    admissible = False
    if params.monitor != "off":
        choice = assess_regime(state, C)
        admissible = choice is None or bool(choice.admissible)
    raising = params.monitor == "raise" or (params.monitor == "auto" and admissible)
    g_pre = F.glimm_functionals(state, C=C) if params.monitor != "off" else None
    g_init = g_pre
    snaps = [state]
    records: list[EventRecord] = []
    next_snap = params.snapshot_dt
    while True:
        ev = next_event(state, params)
        if ev.kind == "horizon":
            break
        if len(records) >= params.max_events:
            raise EventCapExceeded("event cap exceeded", cap=params.max_events, time=state.time, fronts=len(state.items))
        if next_snap is not None:
            while next_snap < ev.time:
                snaps.append(state.at_time(next_snap))
                next_snap += params.snapshot_dt
        new, rule, inc, out = handle_interaction(state, ev, params)
        pipe = state.items[ev.index].pipe if state.items[ev.index].kind else state.items[ev.index + 1].pipe
        if g_pre is not None:
            g_post = F.glimm_functionals(new, C=C)
            bad = g_post.upsilon > g_pre.upsilon + params.upsilon_tol
            rec = EventRecord(
                len(records), ev.time, rule, ev.position, pipe, inc, out,
                g_pre.V, g_pre.Q, g_pre.upsilon, g_post.V, g_post.Q, g_post.upsilon,
                len(new.items), bool(bad),
            )
            records.append(rec)
            if bad and raising:
                raise InvariantViolation("Glimm functional increased", record=rec.to_dict())
            g_pre = g_post
        else:
            records.append(EventRecord(len(records), ev.time, rule, ev.position, pipe, inc, out,
                                       math.nan, math.nan, math.nan, math.nan, math.nan, math.nan, len(new.items)))
        state = new
        if params.snapshot_dt is None:
            snaps.append(state)
    if next_snap is not None:
        while next_snap <= params.t_end:
            snaps.append(state.at_time(next_snap))
            next_snap += params.snapshot_dt
    final = state.at_time(params.t_end)
    return Timeline(scenario, params, state.lam_hat, C, admissible, tuple(snaps), tuple(records), final, g_init, choice)


def sample_solution(timeline: Timeline, t: float) -> PiecewiseConstant:
    """Piecewise-constant solution at time ``t`` (right-continuous in t)."""
    if not (0.0 <= t <= timeline.params.t_end):
        raise UsageError("time outside the computed horizon", t=t)
    times = timeline.times
    k = bisect.bisect_right(list(times), t) - 1
    snap = timeline.snapshots[k]
    if not timeline.every_event and snap.time != t:
        nxt = timeline.snapshots[k + 1].time if k + 1 < len(timeline.snapshots) else timeline.params.t_end
        if t != nxt and not _no_event_between(timeline, snap.time, t):
            raise UsageError("fixed-cadence timelines are exact only at snapshot times", t=t)
    return snap.at_time(t).piecewise()


def _no_event_between(timeline, t0, t1):
    return not any(t0 < e.time <= t1 for e in timeline.events)


# ------------------------------------------------------------ checking


def check_state(state: WftState, tol: float = 1e-10) -> list[str]:
    """List of violated structural invariants (empty when the state is sound)."""
    law, claw = state.scenario.law, state.scenario.coupling
    out = []
    pos = state.positions()
    if np.any(np.diff(pos) < -1e-9):
        out.append("items out of order")
    for k, it in enumerate(state.items):
        ul, ur = state.states[k], state.states[k + 1]
        if it.kind == 0:
            r = psi_residual(claw, law, it.a_left, ul, it.a_right, ur)
            if np.max(np.abs(r)) > tol:
                out.append(f"junction {it.index} residual {np.max(np.abs(r)):.3e}")
            continue
        if ul.distance(it.u_left) > tol or ur.distance(it.u_right) > tol:
            out.append(f"front {k} inconsistent with neighbouring states")
        if it.is_physical:
            if curve_residual(law, it.family, it.u_left, it.u_right) > tol:
                out.append(f"front {k} off its wave curve")
            if it.sigma < 0:
                l_left = law_speed(law, it.family, it.u_left)
                l_right = law_speed(law, it.family, it.u_right)
                if not (l_right - 1e-12 < it.speed < l_left + 1e-12):
                    out.append(f"front {k} violates Lax admissibility")
        elif it.speed != state.lam_hat:
            out.append(f"non-physical front {k} has wrong speed")
    for u in state.states:
        if not is_subsonic(law, u):
            out.append("supersonic state")
            break
    return out


def law_speed(law, family, u):
    from .riemann import characteristic_speed

    return characteristic_speed(law, family, u)
