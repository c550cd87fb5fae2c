"""Acceptance suite: one PASS/FAIL line per criterion.

Every test records its verdict through :func:`verdict`, which prints the
line immediately and keeps it for the end-of-session summary written by
``conftest.pytest_terminal_summary``.  Tolerances are module constants.
"""

import math
import time

import numpy as np

from pipewft.errors import NeighborhoodError, SonicError
from pipewft.gas_core import GasState, PressureLaw, momentum_flux, sound_speed
from pipewft.harness import experiments as X
from pipewft.harness import output
from pipewft.junction import (
    CouplingLaw,
    dsigma_da,
    first_order_coeffs,
    linear_junction_response,
    sigma_map,
    solve_junction_riemann,
    stationary_integrate,
    t_map,
)
from pipewft.functionals import Bump, entropy_residual, weak_residual
from pipewft.profiles import PipeProfile, SmoothProfile, bound_M, hat_stationary, kgrande
from pipewft.riemann import solve_riemann
from pipewft.wft_engine import Scenario, WftParams, evolve, stationary_with_waves

ISO = PressureLaw.isothermal(1.0)
GAMMA = PressureLaw.gamma_law(1.0, 1.4)
LAWS = (ISO, GAMMA)
CL = CouplingLaw.smooth_section()

# criterion 1
C1_BOUND_TOL = 1e-12
C1_RUNTIME = 1.0
# criterion 2
C2_DAS = (1e-2, 5e-3, 2.5e-3)
C2_STATES = 20
C2_MIN_SLOPE = 1.9
C2_RUNTIME = 10.0
# criterion 3
C3_XIS = (0.5, 0.7, 0.9)
C3_REL = 0.10
C3_RUNTIME = 30.0
# criterion 4
C4_FAST, C4_SLOW = 0.95, 0.1
C4_THETA = 0.05
C4_SIGMA = -1e-3
C4_PAIRS = 200
C4_FACTOR = 2.0
C4_REL = 0.30
# criterion 5
C5_CASES = 50
C5_MIN_EVENTS = 1000
C5_TOL = 1e-9
C5_RUNTIME = 300.0
# criterion 6
C6_CASES = 100
C6_REPARAM_CASES = 20
C6_TOL = 1e-9
# criterion 7
C7_EPS = (4e-3, 2e-3, 1e-3)
C7_MIN_SLOPE = 0.8
C7_ENTROPY_TOL = 1e-10
C7_ENTROPY_C = 1e-2
# criterion 8
C8_NS = (4, 8, 16, 32)
C8_EPS = 5e-3
C8_SLOPE_TOL = 0.15
# criterion 9
C9_COUNTS = (1, 2, 4, 8, 16, 32, 64)
C9_SPREAD = 2.0
# criterion 10
C10_PAIRS = 1000
C10_TOL = 1e-10

RESULTS: dict[int, str] = {}


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)


def at_mach(law, rho, m):
    return GasState(rho, rho * m * sound_speed(law, rho))


def log2_slopes(errs):
    return [math.log2(a / b) for a, b in zip(errs[:-1], errs[1:])]


# ---------------------------------------------------------------- 1


def test_criterion_01_closed_forms():
    t0 = time.perf_counter()
    k0 = kgrande(0.0)
    k_mid = kgrande(1 / math.sqrt(2))
    quarter_e = 1.0 / (4.0 * math.e)
    bound_err = max(abs(bound_M(ISO, 1.0, x) - quarter_e) for x in np.linspace(0.0, 1 / math.sqrt(2), 41))
    elapsed = time.perf_counter() - t0
    checks = {
        "kgrande(0) == -1": k0 == -1.0,
        "kgrande(1/sqrt2) == 6": abs(k_mid - 6.0) <= 1e-12 * 6.0,
        "bound_M == 1/(4e)": bound_err <= C1_BOUND_TOL,
        "runtime": elapsed < C1_RUNTIME,
    }
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    verdict(1, ok, f"kgrande(0)={k0:.6g} kgrande(1/sqrt2)={k_mid:.15g} bound_M err={bound_err:.2e} "
                   f"t={elapsed * 1e3:.1f}ms" + (f" failed: {failed}" if failed else ""))
    assert ok, failed


# ---------------------------------------------------------------- 2


def test_criterion_02_first_order_expansions():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20)
    worst_t, worst_s = math.inf, math.inf
    for law in LAWS:
        for _ in range(C2_STATES):
            u = at_mach(law, float(rng.uniform(0.6, 1.6)), float(rng.uniform(-0.6, 0.6)))
            co = first_order_coeffs(law, 1.0, u, dsigma_da(CL, law, 1.0, u))
            et, es = [], []
            for da in C2_DAS:
                theta = da / 1.0
                t = t_map(CL, law, 1.0, 1.0 + da, u)
                et.append(abs(t.rho - (1.0 + co.H * theta) * u.rho) + abs(t.q - (1.0 - theta) * u.q))
                d1, d2 = linear_junction_response(CL, law, 1.0, 1.0 + da, u, h=1e-6)
                es.append(abs(d1 - co.reflection * theta) + abs(d2 - (1.0 + co.transmission * theta)))
            worst_t = min(worst_t, min(log2_slopes(et)))
            worst_s = min(worst_s, min(log2_slopes(es)))
    elapsed = time.perf_counter() - t0
    ok = worst_t >= C2_MIN_SLOPE and worst_s >= C2_MIN_SLOPE and elapsed < C2_RUNTIME
    verdict(2, ok, f"min slope t_map={worst_t:.3f} sizes={worst_s:.3f} (need >= {C2_MIN_SLOPE}) t={elapsed:.2f}s")
    assert worst_t >= C2_MIN_SLOPE
    assert worst_s >= C2_MIN_SLOPE
    assert elapsed < C2_RUNTIME


# ---------------------------------------------------------------- 3


def test_criterion_03_amplification_coefficient():
    t0 = time.perf_counter()
    fits = [X.fit_kgrande(xi) for xi in C3_XIS]
    root = X.kgrande_root()
    grid = np.linspace(0.05, 0.9, 18)
    bracket = X.measured_sign_change(grid)
    step = grid[1] - grid[0]
    elapsed = time.perf_counter() - t0
    within = all(f.rel_error <= C3_REL for f in fits)
    bracketed = bracket is not None and bracket[0] - step <= root <= bracket[1] + step
    ok = within and bracketed and elapsed < C3_RUNTIME
    detail = " ".join(f"xi={f.xi}: fit={f.extrapolated:.4g} closed={f.closed_form:.4g} rel={f.rel_error:.2f};" for f in fits)
    verdict(3, ok, f"{detail} root={root:.4f} measured bracket={bracket} t={elapsed:.2f}s")
    assert within
    assert bracketed
    assert elapsed < C3_RUNTIME


# ---------------------------------------------------------------- 4


def test_criterion_04_blowup_demonstration():
    fast = X.amplification_experiment(C4_FAST, C4_THETA, C4_PAIRS, C4_SIGMA)
    slow = X.amplification_experiment(C4_SLOW, C4_THETA, C4_PAIRS, C4_SIGMA)
    per_pair = 1.0 + fast.kgrande * C4_THETA**2
    m_pred = math.ceil(math.log(C4_FACTOR) / math.log(per_pair)) if per_pair > 1.0 else None
    m_meas = fast.pairs_to_growth(C4_FACTOR)
    grows = m_meas is not None
    predicted = grows and m_pred is not None and abs(m_meas - m_pred) <= C4_REL * m_pred
    if grows:
        ratio = fast.sizes[m_meas] / fast.predicted[m_meas]
        predicted = predicted and abs(ratio - 1.0) <= C4_REL
    attenuates = len(slow.sizes) > 1 and slow.sizes[-1] < slow.sizes[0]
    ok = grows and predicted and attenuates
    verdict(4, ok, f"v/c={C4_FAST}: pairs to x{C4_FACTOR} measured={m_meas} predicted={m_pred} "
                   f"(|s| after {len(fast.crossings)} pairs {fast.sizes[-1]:.3e}, breakdown={fast.breakdown_pair}); "
                   f"v/c={C4_SLOW}: |s| {slow.sizes[0]:.3e} -> {slow.sizes[-1]:.3e}")
    assert grows
    assert predicted
    assert attenuates


# ---------------------------------------------------------------- 5


def test_criterion_05_glimm_monotonicity():
    t0 = time.perf_counter()
    res = X.glimm_suite(C5_CASES, seed=0, tol=C5_TOL)
    elapsed = time.perf_counter() - t0
    ok = res.violations == 0 and res.events >= C5_MIN_EVENTS and elapsed < C5_RUNTIME
    verdict(5, ok, f"{res.cases} cases, {res.events} events, {res.violations} increases > {C5_TOL} "
                   f"(worst {res.worst_increase:.3e} in case {res.worst_case}) t={elapsed:.1f}s")
    assert res.events >= C5_MIN_EVENTS
    assert elapsed < C5_RUNTIME
    assert res.violations == 0


def test_glimm_monotonicity_at_high_background_density():
    """Diagnostic companion: the same suite drawn at densities well above one."""
    res = X.glimm_suite(10, seed=1, rho_range=(12.0, 20.0), t_end=2.0, tol=C5_TOL)
    print(f"high-density suite: {res.events} events, {res.violations} increases, worst {res.worst_increase:.3e}")
    assert res.events > 0
    assert res.violations == 0


# ---------------------------------------------------------------- 6


def test_criterion_06_coupling_axioms():
    rng = np.random.default_rng(6)
    zero_ok = True
    add_err = rev_err = 0.0
    done = 0
    while done < C6_CASES:
        law = LAWS[done % 2]
        a_lo, a_hi = (float(x) for x in rng.uniform(0.88, 1.12, 2))
        if abs(a_hi - a_lo) < 1e-3:
            continue
        a_mid = a_lo + float(rng.uniform(0.05, 0.95)) * (a_hi - a_lo)
        u = at_mach(law, float(rng.uniform(0.5, 2.0)), float(rng.uniform(-0.55, 0.55)))
        try:
            S = sigma_map(CL, law, a_lo, a_hi, u)[1]
            S1 = sigma_map(CL, law, a_lo, a_mid, u)[1]
            S2 = sigma_map(CL, law, a_mid, a_hi, t_map(CL, law, a_lo, a_mid, u))[1]
            back = sigma_map(CL, law, a_hi, a_lo, t_map(CL, law, a_lo, a_hi, u))[1]
        except (SonicError, NeighborhoodError):
            continue
        zero_ok &= bool(np.all(sigma_map(CL, law, a_lo, a_lo, u) == 0.0))
        add_err = max(add_err, abs(S - S1 - S2))
        rev_err = max(rev_err, abs(S + back))
        done += 1
    rep_err = 0.0
    for i in range(C6_REPARAM_CASES):
        law = LAWS[i % 2]
        a1 = float(rng.uniform(0.9, 1.1))
        power = float(rng.uniform(0.5, 3.0))
        u = at_mach(law, float(rng.uniform(0.5, 2.0)), float(rng.uniform(-0.5, 0.5)))
        S = sigma_map(CL, law, 1.0, a1, u)[1]
        interpolants = (
            (lambda x, a1=a1: 1.0 + (a1 - 1.0) * x, lambda x, a1=a1: a1 - 1.0),
            (lambda x, a1=a1, p=power: 1.0 + (a1 - 1.0) * x**p,
             lambda x, a1=a1, p=power: (a1 - 1.0) * p * x ** (p - 1) if x > 0 else 0.0),
        )
        for prof in interpolants:
            path = stationary_integrate(law, prof, 0.0, 1.0, u, rtol=1e-13, atol=1e-15)
            rep_err = max(rep_err, abs(a1 * momentum_flux(law, path.end) - momentum_flux(law, u) - S))
    ok = zero_ok and add_err < C6_TOL and rev_err < C6_TOL and rep_err < C6_TOL
    verdict(6, ok, f"Sigma(a,a)=0 exact: {zero_ok}; additivity {add_err:.2e} reversibility {rev_err:.2e} "
                   f"reparametrization {rep_err:.2e} (tol {C6_TOL})")
    assert ok


# ---------------------------------------------------------------- 7


def test_criterion_07_weak_and_entropy_consistency():
    prof = PipeProfile((0.0,), (1.0, 1.05))
    u = GasState(1.0, 0.3)
    datum = stationary_with_waves(ISO, CL, prof, u, [(2, -0.05, -0.6), (1, 0.1, -0.3), (2, 0.08, 0.3)])
    bumps = [Bump(0.5, xc, 0.4, 0.6) for xc in (-0.6, -0.2, 0.2, 0.6)]
    weak, worst_margin = [], math.inf
    for eps in C7_EPS:
        tl = evolve(Scenario(ISO, CL, prof, datum), WftParams(eps, t_end=1.0, monitor="record"))
        weak.append(max(weak_residual(tl, b) for b in bumps))
        for b in bumps:
            worst_margin = min(worst_margin, entropy_residual(tl, b) + C7_ENTROPY_TOL + C7_ENTROPY_C * eps)
    slopes = np.diff(np.log(weak)) / np.diff(np.log(C7_EPS))
    ok = bool(np.all(slopes >= C7_MIN_SLOPE)) and worst_margin >= 0.0
    verdict(7, ok, f"weak residuals {['%.3e' % w for w in weak]} slopes {np.round(slopes, 3).tolist()}; "
                   f"entropy margin {worst_margin:.3e}")
    assert np.all(slopes >= C7_MIN_SLOPE)
    assert worst_margin >= 0.0


# ---------------------------------------------------------------- 8


def test_criterion_08_staircase_convergence():
    smooth = SmoothProfile.ramp(1.0, 1.0, 1.05)
    u_left = GasState(1.0, 0.3)
    make = X.stationary_datum_factory(ISO, CL, u_left, [(2, -0.05, smooth.knots[0] - 0.5)])
    res = X.convergence_experiment(smooth, make, ns=C8_NS, eps=C8_EPS)
    strict = bool(np.all(np.diff(res.distances, axis=0) < 0.0))
    stat = X.stationary_convergence(smooth, u_left, ns=C8_NS)
    ok = strict and abs(stat.slope - 1.0) <= C8_SLOPE_TOL
    verdict(8, ok, f"L1 distances {np.round(res.distances[:, -1], 6).tolist()} decreasing={strict}; "
                   f"stationary slope {stat.slope:.3f}")
    assert strict
    assert abs(stat.slope - 1.0) <= C8_SLOPE_TOL


# ---------------------------------------------------------------- 9


def test_criterion_09_stationary_tv_bound():
    u = GasState(1.0, 0.3)
    tv_a = 0.08
    rng = np.random.default_rng(9)
    ratios = []
    for n in C9_COUNTS:
        for alternate in (True, False):
            signs = [1.0 if j % 2 == 0 else -1.0 for j in range(n)] if alternate else rng.choice([-1.0, 1.0], n)
            steps = rng.dirichlet(np.ones(n)) * tv_a if not alternate else np.full(n, tv_a / n)
            secs = [1.0]
            for s, d in zip(signs, steps):
                secs.append(secs[-1] + s * d)
            # recentre so that every profile has the same mean section
            shift = 1.0 - float(np.mean(secs))
            prof = PipeProfile(tuple(np.arange(n, dtype=float)), tuple(x + shift for x in secs), a_bar=1.0, delta=0.2)
            ratios.append(hat_stationary(ISO, CL, prof, u).ratio)
    spread = max(ratios) / min(ratios)
    ok = spread <= C9_SPREAD
    verdict(9, ok, f"TV(u)/TV(a) in [{min(ratios):.4f}, {max(ratios):.4f}] spread {spread:.3f} over 1-64 junctions")
    assert ok


# ---------------------------------------------------------------- 10


def test_criterion_10_reduction_and_determinism(tmp_path):
    rng = np.random.default_rng(10)
    worst = 0.0
    for i in range(C10_PAIRS):
        law = LAWS[i % 2]
        ul = at_mach(law, float(rng.uniform(0.6, 1.6)), float(rng.uniform(-0.5, 0.5)))
        ur = at_mach(law, float(rng.uniform(0.6, 1.6)), float(rng.uniform(-0.5, 0.5)))
        a = float(rng.uniform(0.8, 1.2))
        jf = solve_junction_riemann(CL, law, a, ul, a, ur)
        rf = solve_riemann(law, ul, ur)
        worst = max(worst, abs(jf.sigma1 - rf.sigma1), abs(jf.sigma2 - rf.sigma2), jf.trace_plus.distance(rf.middle))

    def logged(seed, where):
        case = X.random_admissible_scenario(np.random.default_rng(seed))
        return output.write_events(where, evolve(case.scenario, case.params)).read_bytes()

    same = all(logged(s, tmp_path / f"a{s}.jsonl") == logged(s, tmp_path / f"b{s}.jsonl") for s in (0, 1, 2))
    ok = worst <= C10_TOL and same
    verdict(10, ok, f"max |junction - pipe| over {C10_PAIRS} pairs {worst:.2e}; identical event logs {same}")
    assert worst <= C10_TOL
    assert same
