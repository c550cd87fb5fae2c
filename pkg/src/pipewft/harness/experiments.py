"""Experiments: scenario runs, shock amplification, convergence, stability, random suites."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from ..errors import PipeWFTError, RegimeError, SonicError, UsageError
from ..functionals import choose_weight_constant, junction_coefficients, phi_history
from ..gas_core import GasState, PressureLaw, sound_speed
from ..junction import CouplingLaw, solve_junction_riemann, stationary_integrate, t_map
from ..profiles import PipeProfile, SmoothProfile, hat_stationary, kgrande, pc_approximate
from ..riemann import lax_curve
from ..wft_engine import (
    InitialDatum,
    Scenario,
    Timeline,
    WftParams,
    check_state,
    evolve,
    sample_solution,
    stationary_with_waves,
)
from .config import ScenarioConfig
from . import output

# ------------------------------------------------------------ scenario


@dataclass
class RunReport:
    name: str
    timeline: Timeline
    summary: dict
    paths: dict = field(default_factory=dict)


def summarize(timeline: Timeline, name: str = "scenario") -> dict:
    ev = timeline.events
    ups = [timeline.initial_glimm.upsilon] + [e.U_post for e in ev] if timeline.initial_glimm else []
    kinds = Counter(e.kind for e in ev)
    return {
        "name": name,
        "t_end": timeline.params.t_end,
        "events": len(ev),
        "event_kinds": dict(sorted(kinds.items())),
        "junction_hits": sum(kinds[k] for k in ("junction", "junction_simplified", "np_junction")),
        "fronts_initial": len(timeline.initial.items) - timeline.scenario.profile.n_junctions,
        "fronts_final": len(timeline.final.items) - timeline.scenario.profile.n_junctions,
        "lam_hat": timeline.lam_hat,
        "glimm_C": timeline.glimm_C,
        "admissible": timeline.admissible,
        "weight_choice": timeline.weight_choice.to_dict() if timeline.weight_choice is not None else None,
        "upsilon_initial": ups[0] if ups else None,
        "upsilon_final": ups[-1] if ups else None,
        "upsilon_max_increase": max((b - a for a, b in zip(ups[:-1], ups[1:])), default=0.0) if ups else None,
        "violations": len(timeline.violations()),
        "final_state_issues": check_state(timeline.final),
    }


def run_scenario(config: ScenarioConfig, out_dir: str | Path | None = None, write: bool = True) -> RunReport:
    """Evolve the configured scenario and write its tables."""
    scenario, params = config.build()
    tl = evolve(scenario, params)
    summary = summarize(tl, config.name)
    summary["config"] = config.model_dump(mode="json")
    paths = {}
    if write:
        root = Path(out_dir if out_dir is not None else config.output.out_dir)
        paths = output.write_run(root, tl, summary, events=config.output.events, snapshots=config.output.snapshots)
    return RunReport(config.name, tl, summary, paths)


# -------------------------------------------------------- amplification


@dataclass(frozen=True)
class PairCrossing:
    """One up-down section pair crossed by a 2-wave."""

    index: int
    sigma_in: float
    sigma_mid: float
    sigma_out: float
    reflected: tuple[float, float]

    @property
    def ratio(self) -> float:
        return self.sigma_out / self.sigma_in


@dataclass(frozen=True)
class AmplificationResult:
    vbar_over_c: float
    da_over_a: float
    sigma0: float
    crossings: tuple[PairCrossing, ...]
    breakdown: str | None
    breakdown_pair: int | None
    kgrande: float

    @property
    def sizes(self) -> np.ndarray:
        """``|sigma2|`` before the first pair and after each crossed pair."""
        return np.array([abs(self.sigma0)] + [abs(c.sigma_out) for c in self.crossings])

    @property
    def predicted(self) -> np.ndarray:
        m = np.arange(len(self.crossings) + 1)
        return abs(self.sigma0) * (1.0 + self.kgrande * self.da_over_a**2) ** m

    def pairs_to_growth(self, factor: float) -> int | None:
        s = self.sizes
        hit = np.nonzero(s >= factor * s[0])[0]
        return int(hit[0]) if hit.size else None

    def to_dict(self) -> dict:
        return {
            "vbar_over_c": self.vbar_over_c,
            "da_over_a": self.da_over_a,
            "sigma0": self.sigma0,
            "kgrande": self.kgrande,
            "sizes": self.sizes.tolist(),
            "predicted": self.predicted.tolist(),
            "ratios": [c.ratio for c in self.crossings],
            "breakdown": self.breakdown,
            "breakdown_pair": self.breakdown_pair,
        }


def background_state(law: PressureLaw, vbar_over_c: float, rho: float = 1.0) -> GasState:
    """State of density ``rho`` moving right at ``vbar_over_c`` times the sound speed."""
    c = sound_speed(law, rho)
    return GasState(rho, rho * vbar_over_c * c)


def cross_pair(claw: CouplingLaw, law: PressureLaw, a: float, da: float, ubar, u_behind):
    """Send a 2-wave (``u_behind`` | ``ubar``) through the pair ``a -> a + da -> a``.

    The flow ahead of the wave is the stationary state ``ubar``,
    ``T(a, a+da; ubar)``, ``ubar``.  Returns the transmitted size inside
    the pair, the transmitted size after the pair, the two reflected
    1-wave sizes and the state behind the outgoing wave.
    """
    mid = t_map(claw, law, a, a + da, ubar)
    f1 = solve_junction_riemann(claw, law, a, u_behind, a + da, mid)
    f2 = solve_junction_riemann(claw, law, a + da, f1.trace_plus, a, ubar)
    return f1.sigma2, f2.sigma2, (f1.sigma1, f2.sigma1), f2.trace_plus


def amplification_experiment(
    vbar_over_c: float,
    da_over_a: float,
    repeats: int,
    sigma: float,
    law: PressureLaw | None = None,
    claw: CouplingLaw | None = None,
    a: float = 1.0,
    rho: float = 1.0,
) -> AmplificationResult:
    """Track a 2-wave through ``repeats`` identical up-down pairs.

    The pairs are taken far apart, so each pair sees the leading
    transmitted wave alone; reflected waves are recorded but not followed.
    A breakdown of the subsonic junction picture stops the experiment and
    is reported with the index of the pair.
    """
    law = PressureLaw.isothermal(1.0) if law is None else law
    claw = CouplingLaw.smooth_section(max_relative_jump=max(0.25, 2 * da_over_a)) if claw is None else claw
    ubar = background_state(law, vbar_over_c, rho)
    # the wave is placed so that the state ahead of it is ubar
    behind = _behind(law, ubar, sigma)
    s_in = sigma
    out = []
    why = None
    where = None
    for m in range(repeats):
        try:
            s_mid, s_out, refl, _ = cross_pair(claw, law, a, da_over_a * a, ubar, behind)
        except (PipeWFTError, ValueError) as exc:
            why, where = f"{type(exc).__name__}: {exc}", m
            break
        out.append(PairCrossing(m, s_in, s_mid, s_out, refl))
        s_in = s_out
        try:
            behind = _behind(law, ubar, s_out)
        except PipeWFTError as exc:
            why, where = f"{type(exc).__name__}: {exc}", m + 1
            break
        if not (abs(behind.v) < sound_speed(law, behind.rho)):
            why, where = "state behind the wave is not subsonic", m + 1
            break
    return AmplificationResult(vbar_over_c, da_over_a, sigma, tuple(out), why, where, kgrande(abs(vbar_over_c)))


def _behind(law, ubar, sigma):
    """State ``u`` with ``L2(u; sigma) = ubar``."""
    if sigma == 0.0:
        return ubar
    r = ubar.rho - sigma
    v = _backward_v(law, ubar, r)
    return GasState(r, r * v)


def _backward_v(law, ubar, r):
    from .. import _kernels as K

    v, _ = K.backward_velocity(law.k, law.gamma, 2, ubar.rho, ubar.v, r)
    return v


@dataclass(frozen=True)
class KgrandeFit:
    xi: float
    das: tuple[float, ...]
    estimates: tuple[float, ...]
    extrapolated: float
    closed_form: float

    @property
    def rel_error(self) -> float:
        return abs(self.extrapolated - self.closed_form) / abs(self.closed_form)

    def to_dict(self) -> dict:
        return {
            "xi": self.xi,
            "das": list(self.das),
            "estimates": list(self.estimates),
            "extrapolated": self.extrapolated,
            "kgrande": self.closed_form,
            "rel_error": self.rel_error,
        }


def measured_k(claw, law, xi: float, da: float, sigma: float = 1e-7, a: float = 1.0, rho: float = 1.0) -> float:
    """``(ratio - 1) / da**2`` for one up-down pair, from a +-sigma central difference."""
    ubar = background_state(law, xi, rho)
    rp = cross_pair(claw, law, a, da * a, ubar, _behind(law, ubar, sigma))[1] / sigma
    rm = cross_pair(claw, law, a, da * a, ubar, _behind(law, ubar, -sigma))[1] / -sigma
    return (0.5 * (rp + rm) - 1.0) / da**2


def fit_kgrande(xi: float, das=(1e-2, 5e-3, 2.5e-3), law=None, claw=None, sigma: float = 1e-7) -> KgrandeFit:
    """Estimate the amplification coefficient at speed ratio ``xi``.

    Estimates at successive halvings of the jump are combined by
    Richardson extrapolation assuming an error linear in the jump.
    """
    law = PressureLaw.isothermal(1.0) if law is None else law
    claw = CouplingLaw.smooth_section() if claw is None else claw
    est = [measured_k(claw, law, xi, d, sigma) for d in das]
    ext = 2.0 * est[-1] - est[-2] if len(est) > 1 else est[-1]
    return KgrandeFit(xi, tuple(das), tuple(est), ext, kgrande(xi))


def kgrande_root() -> float:
    """Speed ratio where the closed-form coefficient changes sign."""
    return brentq(kgrande, 0.0, 0.9)


def measured_sign_change(grid=None, da: float = 5e-3, law=None, claw=None) -> tuple[float, float] | None:
    """Bracket of speed ratios where the measured coefficient changes sign."""
    law = PressureLaw.isothermal(1.0) if law is None else law
    claw = CouplingLaw.smooth_section() if claw is None else claw
    grid = np.linspace(0.05, 0.9, 18) if grid is None else np.asarray(grid)
    vals = [measured_k(claw, law, float(x), da) for x in grid]
    for x0, x1, v0, v1 in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if v0 < 0.0 <= v1 or v0 > 0.0 >= v1:
            return float(x0), float(x1)
    return None


# ----------------------------------------------------------- convergence


@dataclass(frozen=True)
class ConvergenceResult:
    ns: tuple[int, ...]
    n_ref: int
    times: tuple[float, ...]
    distances: np.ndarray  # shape (len(ns), len(times))
    events: tuple[int, ...]

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.distances, axis=0) <= 0.0))

    def to_dict(self) -> dict:
        return {
            "ns": list(self.ns),
            "n_ref": self.n_ref,
            "times": list(self.times),
            "distances": self.distances.tolist(),
            "events": list(self.events),
            "monotone": self.monotone,
        }


def ramp_datum(law, claw, smooth: SmoothProfile, n_ref: int, u_left, waves) -> InitialDatum:
    """Common initial datum: stationary over the reference staircase plus ``waves``."""
    ref = pc_approximate(smooth, n_ref).profile
    return stationary_with_waves(law, claw, ref, u_left, waves)


def stationary_datum_factory(law, claw, u_left, waves):
    """Datum builder for :func:`convergence_experiment`: stationary over each staircase plus ``waves``."""

    def build(profile):
        return stationary_with_waves(law, claw, profile, u_left, waves)

    return build


def convergence_experiment(
    smooth: SmoothProfile,
    datum,
    ns=(4, 8, 16, 32),
    times=(0.5, 1.0),
    eps: float = 5e-3,
    law: PressureLaw | None = None,
    claw: CouplingLaw | None = None,
    n_ref: int | None = None,
    window: tuple[float, float] | None = None,
) -> ConvergenceResult:
    """L1 distances at ``times`` between runs on ``pc_approximate(smooth, n)`` and ``n_ref = 2 max(ns)``.

    ``datum`` is either one initial datum shared by all runs or a callable
    mapping each staircase to its own datum.
    """
    law = PressureLaw.isothermal(1.0) if law is None else law
    claw = CouplingLaw.smooth_section() if claw is None else claw
    n_ref = 2 * max(ns) if n_ref is None else n_ref
    t_end = max(times)
    params = WftParams(eps=eps, t_end=t_end, monitor="off")

    def run(n):
        prof = pc_approximate(smooth, n).profile
        try:
            u0 = datum(prof) if callable(datum) else datum
            return evolve(Scenario(law, claw, prof, u0), params)
        except PipeWFTError as exc:
            exc.context.update(n=n)
            raise

    ref = run(n_ref)
    if window is None:
        span = ref.lam_hat * t_end + 1.0
        window = (smooth.knots[0] - span, smooth.knots[-1] + span)
    rows, counts = [], []
    for n in ns:
        tl = run(n)
        counts.append(len(tl.events))
        rows.append([sample_solution(tl, t).l1_distance(sample_solution(ref, t), window) for t in times])
    return ConvergenceResult(tuple(ns), n_ref, tuple(times), np.array(rows), tuple(counts))


@dataclass(frozen=True)
class StationaryConvergence:
    ns: tuple[int, ...]
    distances: tuple[float, ...]

    @property
    def slope(self) -> float:
        """Least-squares slope of ``log distance`` against ``log n`` (negated)."""
        return float(-np.polyfit(np.log(self.ns), np.log(self.distances), 1)[0])

    def to_dict(self) -> dict:
        return {"ns": list(self.ns), "distances": list(self.distances), "slope": self.slope}


def stationary_convergence(smooth: SmoothProfile, u_left, ns=(4, 8, 16, 32), law=None, claw=None, samples: int = 4001) -> StationaryConvergence:
    """L1 distance between the staircase stationary data and the smooth stationary flow."""
    law = PressureLaw.isothermal(1.0) if law is None else law
    claw = CouplingLaw.smooth_section() if claw is None else claw
    lo, hi = smooth.knots[0], smooth.knots[-1]
    path = stationary_integrate(law, smooth, lo, hi, u_left, breaks=smooth.breaks, samples=samples)
    xs = np.linspace(lo, hi, samples)
    rho = np.interp(xs, path.x, path.rho)
    q = np.interp(xs, path.x, path.q)
    dists = []
    for n in ns:
        st = hat_stationary(law, claw, pc_approximate(smooth, n).profile, u_left)
        got = np.array([tuple(st.state_at(x)) for x in xs])
        err = np.abs(got[:, 0] - rho) + np.abs(got[:, 1] - q)
        dists.append(float(np.trapezoid(err, xs)))
    return StationaryConvergence(tuple(ns), tuple(dists))


# ------------------------------------------------------------- stability


@dataclass(frozen=True)
class StabilityResult:
    times: tuple[float, ...]
    distances: tuple[float, ...]
    d0: float
    phi_jumps: tuple[float, ...]

    @property
    def lipschitz(self) -> float:
        return max(self.distances) / self.d0 if self.d0 > 0 else (0.0 if max(self.distances, default=0.0) == 0 else math.inf)

    def to_dict(self) -> dict:
        return {
            "times": list(self.times),
            "distances": list(self.distances),
            "d0": self.d0,
            "lipschitz": self.lipschitz,
            "phi_max_jump": max(self.phi_jumps, default=0.0),
        }


def perturb_datum(datum: InitialDatum, shift: float, profile=None) -> InitialDatum:
    """Translate every breakpoint of ``datum`` by ``shift``, keeping those on junctions of ``profile``."""
    fixed = set(profile.positions) if profile is not None else set()
    br = tuple(b if b in fixed else b + shift for b in datum.breaks)
    if any(not (y > x) for x, y in zip(br[:-1], br[1:])):
        raise UsageError("shift moves a wave onto or across a junction", shift=shift)
    return InitialDatum(br, datum.states)


def stability_experiment(
    scenario: Scenario,
    params: WftParams,
    other: InitialDatum,
    n_times: int = 11,
    window: tuple[float, float] | None = None,
    kappa=(1.0, 1.0),
    phi: bool = True,
) -> StabilityResult:
    """L1 distance between the runs from ``scenario.datum`` and ``other`` over time."""
    params = WftParams(**{**params.to_dict(), "snapshot_dt": None})
    t1 = evolve(scenario, params)
    t2 = evolve(Scenario(scenario.law, scenario.coupling, scenario.profile, other), params)
    times = np.linspace(0.0, params.t_end, n_times)
    if window is None:
        xs = list(scenario.datum.breaks) + list(other.breaks) + list(scenario.profile.positions) or [0.0]
        span = max(t1.lam_hat, t2.lam_hat) * params.t_end + 1.0
        window = (min(xs) - span, max(xs) + span)
    d = [sample_solution(t1, t).l1_distance(sample_solution(t2, t), window) for t in times]
    jumps = ()
    if phi:
        _, b, a = phi_history(t1, t2, *kappa)
        jumps = tuple((a - b).tolist())
    return StabilityResult(tuple(times.tolist()), tuple(d), d[0], jumps)


# ----------------------------------------------------- random admissible


@dataclass(frozen=True)
class SuiteCase:
    seed: int
    scenario: Scenario
    params: WftParams
    choice: object


def random_admissible_scenario(rng: np.random.Generator, rho_range=(0.5, 2.0), eps: float = 5e-3, t_end: float = 4.0, max_tries: int = 200) -> SuiteCase:
    """Random scenario inside the small-variation regime.

    Draws a pressure law (isothermal or gamma = 1.4), a subsonic left state,
    a staircase with 1 to 4 junctions and a few waves on top of the
    stationary datum, then keeps it only if the weight-constant conditions
    hold with the measured junction constants.
    """
    seed = int(rng.integers(2**31))
    for _ in range(max_tries):
        law = PressureLaw.isothermal(1.0) if rng.random() < 0.5 else PressureLaw.gamma_law(1.0, 1.4)
        claw = CouplingLaw.smooth_section()
        rho = float(rng.uniform(*rho_range))
        c = sound_speed(law, rho)
        u0 = GasState(rho, rho * c * float(rng.uniform(-0.5, 0.5)))
        nj = int(rng.integers(1, 5))
        xs = np.sort(rng.uniform(-3.0, 3.0, nj))
        if nj > 1 and np.min(np.diff(xs)) < 0.2:
            continue
        # limits from the constants of the left state
        K1, K2, K3 = junction_coefficients(law, claw, 1.0, 1.01, u0)
        limit = 1.0 / (4.0 * (K1 + K2) * math.e)
        tv = float(rng.uniform(0.2, 0.7)) * limit
        w = rng.dirichlet(np.ones(nj)) * tv
        signs = rng.choice([-1.0, 1.0], nj)
        secs = [1.0]
        for s, d in zip(signs, w):
            secs.append(secs[-1] + s * d)
        try:
            prof = PipeProfile(tuple(xs), tuple(secs), a_bar=1.0, delta=0.25)
        except PipeWFTError:
            continue
        nw = int(rng.integers(2, 6))
        waves = []
        for _k in range(nw):
            fam = int(rng.integers(1, 3))
            sig = float(rng.uniform(-0.04, 0.03)) * rho
            x = float(rng.uniform(-4.0, 4.0))
            if np.min(np.abs(xs - x)) < 0.05:
                continue
            waves.append((fam, sig, x))
        try:
            datum = stationary_with_waves(law, claw, prof, u0, waves)
        except PipeWFTError:
            continue
        sc = Scenario(law, claw, prof, datum)
        params = WftParams(eps=eps, t_end=t_end, monitor="record")
        try:
            from ..wft_engine import assess_regime, init_approximation

            st = init_approximation(sc, params)
            C = 1.0 / prof.tv
            choice = assess_regime(st, C)
        except PipeWFTError:
            continue
        if choice is not None and choice.admissible:
            return SuiteCase(seed, sc, params, choice)
    raise RegimeError("could not draw an admissible scenario", tries=max_tries)


@dataclass(frozen=True)
class SuiteResult:
    cases: int
    events: int
    violations: int
    worst_increase: float
    worst_case: int | None
    per_case: tuple[dict, ...]

    def to_dict(self) -> dict:
        return {
            "cases": self.cases,
            "events": self.events,
            "violations": self.violations,
            "worst_increase": self.worst_increase,
            "worst_case": self.worst_case,
            "per_case": list(self.per_case),
        }


def glimm_suite(n_cases: int = 50, seed: int = 0, rho_range=(0.5, 2.0), eps: float = 5e-3, t_end: float = 4.0, tol: float = 1e-9) -> SuiteResult:
    """Evolve ``n_cases`` random admissible scenarios and collect every change of upsilon."""
    rng = np.random.default_rng(seed)
    n_ev = n_bad = 0
    worst, worst_case = -math.inf, None
    rows = []
    for i in range(n_cases):
        case = random_admissible_scenario(rng, rho_range=rho_range, eps=eps, t_end=t_end)
        tl = evolve(case.scenario, case.params)
        inc = [e.U_post - e.U_pre for e in tl.events]
        bad = sum(1 for d in inc if d > tol)
        top = max(inc, default=-math.inf)
        n_ev += len(inc)
        n_bad += bad
        if top > worst:
            worst, worst_case = top, i
        rows.append({
            "case": i,
            "law": case.scenario.law.to_dict(),
            "junctions": case.scenario.profile.n_junctions,
            "tv": case.scenario.profile.tv,
            "events": len(inc),
            "violations": bad,
            "worst_increase": top if inc else None,
            "kinds": dict(Counter(e.kind for e in tl.events if e.U_post - e.U_pre > tol)),
        })
    return SuiteResult(n_cases, n_ev, n_bad, worst, worst_case, tuple(rows))
