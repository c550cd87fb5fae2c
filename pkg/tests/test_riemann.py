import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

import oracles
from pipewft.errors import UsageError, VacuumError
from pipewft.gas_core import GasState, PressureLaw, eigenvalues, sound_speed
from pipewft.riemann import (
    WaveFamily,
    curve_parameter,
    curve_residual,
    fan_sizes,
    front_waves,
    lax_curve,
    rarefaction_fan,
    riemann_residual,
    solve_riemann,
    wave_speed,
)

LAWS = [PressureLaw.isothermal(1.0), PressureLaw.gamma_law(1.0, 1.4)]


def subsonic(law, rho, m):
    return GasState(rho, rho * m * sound_speed(law, rho))


@pytest.mark.parametrize("law", LAWS, ids=["iso", "gamma"])
@pytest.mark.parametrize("fam", [1, 2])
@pytest.mark.parametrize("sigma", [0.3, 0.05, -0.05, -0.4])
def test_lax_curve_against_high_precision(law, fam, sigma):
    u0 = GasState(1.1, 0.25)
    got = lax_curve(law, fam, u0, sigma)
    r, q = oracles.lax(law.k, law.gamma, fam, u0.rho, u0.q, sigma)
    assert got.rho == pytest.approx(float(r), rel=1e-14)
    assert got.q == pytest.approx(float(q), rel=1e-12, abs=1e-13)


@pytest.mark.parametrize("law", LAWS, ids=["iso", "gamma"])
def test_lax_curves_first_order(law):
    u = GasState(1.0, 0.2)
    l1, l2 = eigenvalues(law, u)
    s = 1e-6
    w1 = lax_curve(law, 1, u, s)
    w2 = lax_curve(law, 2, u, s)
    assert (w1.rho - u.rho) / s == pytest.approx(-1.0)
    assert (w1.q - u.q) / s == pytest.approx(-l1, rel=1e-5)
    assert (w2.q - u.q) / s == pytest.approx(l2, rel=1e-5)


def test_zero_size_is_identity():
    law = LAWS[0]
    u = GasState(1.0, 0.4)
    assert lax_curve(law, 1, u, 0.0) == u
    assert solve_riemann(law, u, u).waves == ()


def test_vacuum_is_reported():
    with pytest.raises(VacuumError):
        lax_curve(LAWS[0], 1, GasState(1.0, 0.0), 1.0)


def test_nonphysical_family_has_no_curve():
    with pytest.raises(UsageError):
        lax_curve(LAWS[0], WaveFamily.NONPHYSICAL, (1.0, 0.0), 0.1)


def test_shock_speed_is_rankine_hugoniot():
    law = LAWS[1]
    ul = GasState(1.0, 0.1)
    ur = lax_curve(law, 2, ul, -0.3)
    s = wave_speed(law, 2, ul, ur, -0.3)
    assert ur.q - ul.q == pytest.approx(s * (ur.rho - ul.rho))
    P = lambda u: u.q**2 / u.rho + law.p(u.rho)  # noqa: E731
    assert P(ur) - P(ul) == pytest.approx(s * (ur.q - ul.q))
    # Lax: lambda2(ur) < s < lambda2(ul)
    assert eigenvalues(law, ur)[1] < s < eigenvalues(law, ul)[1]


@pytest.mark.parametrize("law", LAWS, ids=["iso", "gamma"])
@pytest.mark.parametrize("ul,ur", [((1.0, 0.2), (0.7, -0.1)), ((0.5, 0.0), (1.5, 0.0)), ((1.0, 0.5), (1.0, -0.5)),
                                   ((2.0, 0.1), (1.9, 0.3))])
def test_riemann_against_high_precision(law, ul, ur):
    fan = solve_riemann(law, ul, ur)
    s1, s2 = oracles.riemann_sizes(law.k, law.gamma, ul, ur)
    assert fan.sigma1 == pytest.approx(float(s1), rel=1e-10, abs=1e-13)
    assert fan.sigma2 == pytest.approx(float(s2), rel=1e-10, abs=1e-13)


def test_symmetric_collision_gives_equal_shocks():
    fan = solve_riemann(LAWS[0], (1.0, 0.5), (1.0, -0.5))
    assert fan.sigma1 == pytest.approx(fan.sigma2, rel=1e-13)
    assert fan.sigma1 < 0


def test_single_wave_data_give_single_wave():
    law = LAWS[1]
    ul = GasState(1.0, 0.3)
    fan = solve_riemann(law, ul, lax_curve(law, 2, ul, -0.2))
    assert fan.sigma1 == 0.0
    assert fan.sigma2 == pytest.approx(-0.2, rel=1e-12)
    assert len(fan.waves) == 1


def test_riemann_fan_sampling_is_self_similar():
    law = LAWS[0]
    fan = solve_riemann(law, (1.0, -0.3), (1.0, 0.3))
    assert fan.sigma1 > 0 and fan.sigma2 > 0
    assert fan.sample(law, -10.0) == fan.left
    assert fan.sample(law, 10.0) == fan.right
    assert fan.sample(law, 0.5 * (fan.waves[0].speeds[1] + fan.waves[1].speeds[0])) == fan.middle
    inside = fan.sample(law, 0.5 * sum(fan.waves[0].speeds))
    assert eigenvalues(law, inside)[0] == pytest.approx(0.5 * sum(fan.waves[0].speeds), abs=1e-12)


def test_fan_sizes():
    assert fan_sizes(0.25, 0.1) == pytest.approx([0.1, 0.1, 0.05])
    assert fan_sizes(0.3, 0.1) == pytest.approx([0.1, 0.1, 0.1])
    assert fan_sizes(0.0, 0.1) == []
    with pytest.raises(UsageError):
        fan_sizes(0.1, 0.0)


def test_rarefaction_fan_discretization():
    law = LAWS[1]
    u0 = GasState(1.0, 0.0)
    jumps = rarefaction_fan(law, 2, u0, 0.25, 0.1)
    assert len(jumps) == 3
    assert jumps[-1].right == lax_curve(law, 2, u0, 0.25)
    for a, b in zip(jumps[:-1], jumps[1:]):
        assert a.right == b.left
        assert a.speed < b.speed
    for j in jumps:
        assert j.speed == pytest.approx(eigenvalues(law, j.right)[1])
    with pytest.raises(UsageError):
        rarefaction_fan(law, 2, u0, -0.1, 0.1)


def test_front_waves_keep_shocks_whole():
    law = LAWS[0]
    fan = solve_riemann(law, (1.0, 0.5), (1.0, -0.5))
    assert [len(front_waves(law, w, 1e-3)) for w in fan.waves] == [1, 1]
    rare = solve_riemann(law, (1.0, -0.3), (1.0, 0.3)).waves[0]
    assert len(front_waves(law, rare, None)) == 1
    assert len(front_waves(law, rare, 0.01)) == math.ceil(rare.sigma / 0.01 - 1e-9)


def test_curve_parameter_and_residual():
    law = LAWS[0]
    u = GasState(1.0, 0.1)
    w = lax_curve(law, 1, u, -0.2)
    assert curve_parameter(1, u, w) == pytest.approx(-0.2)
    assert curve_residual(law, 1, u, w) < 1e-15
    assert curve_residual(law, 2, u, w) > 1e-3


state_params = st.tuples(st.floats(0.3, 5.0), st.floats(-0.8, 0.8))


@given(st.sampled_from(LAWS), state_params, st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_riemann_round_trip(law, base, s1, s2):
    """Build u_r from known sizes; the solver recovers them."""
    ul = subsonic(law, *base)
    assume(ul.rho - s1 * ul.rho > 0.05)
    um = lax_curve(law, 1, ul, s1 * ul.rho)
    assume(um.rho + s2 * ul.rho > 0.05)
    ur = lax_curve(law, 2, um, s2 * ul.rho)
    fan = solve_riemann(law, ul, ur)
    assert fan.sigma1 == pytest.approx(s1 * ul.rho, abs=1e-10 * ul.rho)
    assert fan.sigma2 == pytest.approx(s2 * ul.rho, abs=1e-10 * ul.rho)
    assert riemann_residual(law, ul, fan.sigma1, fan.sigma2, ur) < 1e-10 * max(1.0, ur.rho)


@given(st.sampled_from(LAWS), state_params, st.integers(1, 2), st.floats(-0.6, 0.6))
def test_lax_curve_density_increment(law, base, fam, s):
    u = subsonic(law, *base)
    w = lax_curve(law, fam, u, s * u.rho)
    assert curve_parameter(fam, u, w) == pytest.approx(s * u.rho, rel=1e-13, abs=1e-15)


@given(st.sampled_from(LAWS), state_params, st.integers(1, 2), st.floats(-0.6, -1e-3))
def test_shocks_are_lax_admissible(law, base, fam, s):
    u = subsonic(law, *base)
    w = lax_curve(law, fam, u, s * u.rho)
    speed = wave_speed(law, fam, u, w, s * u.rho)
    lam = lambda x: eigenvalues(law, x)[fam - 1]  # noqa: E731
    assert lam(w) < speed < lam(u)


@given(st.sampled_from(LAWS), state_params, st.integers(1, 2), st.floats(1e-3, 0.5))
def test_rarefactions_keep_riemann_invariant(law, base, fam, s):
    u = subsonic(law, *base)
    w = lax_curve(law, fam, u, s * u.rho)
    if fam == 1:
        assert w.v + law.h(w.rho) == pytest.approx(u.v + law.h(u.rho), abs=1e-12)
    else:
        assert w.v - law.h(w.rho) == pytest.approx(u.v - law.h(u.rho), abs=1e-12)
