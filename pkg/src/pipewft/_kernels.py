"""Scalar numerical kernels.

A pressure law enters every kernel as the pair ``(k, g)`` with
``p(rho) = k * rho**g``; the isothermal law is ``(c**2, 1.0)``.
Kernels return status codes instead of raising so they compile under
numba; the public modules translate the codes into exceptions.
"""

import math

import numpy as np

from ._accel import njit

RHO_MIN = 1e-12

OK = 0
VACUUM = 1
NO_CONVERGENCE = 2
SONIC = 1
UNDERFLOW = 2


# ---------------------------------------------------------------- pressure


@njit
def pressure(k, g, r):
    if g == 1.0:
        return k * r
    return k * r**g


@njit
def dpressure(k, g, r):
    if g == 1.0:
        return k
    return k * g * r ** (g - 1.0)


@njit
def d2pressure(k, g, r):
    if g == 1.0:
        return 0.0
    return k * g * (g - 1.0) * r ** (g - 2.0)


@njit
def sound(k, g, r):
    return math.sqrt(dpressure(k, g, r))


@njit
def dsound(k, g, r):
    return d2pressure(k, g, r) / (2.0 * sound(k, g, r))


@njit
def riemann_h(k, g, r):
    """Antiderivative of c(r)/r."""
    if g == 1.0:
        return math.sqrt(k) * math.log(r)
    return 2.0 * math.sqrt(k * g) / (g - 1.0) * r ** (0.5 * (g - 1.0))


@njit
def riemann_h_inverse(k, g, y):
    if g == 1.0:
        return math.exp(y / math.sqrt(k))
    base = y * (g - 1.0) / (2.0 * math.sqrt(k * g))
    if base <= 0.0:
        return 0.0
    return base ** (2.0 / (g - 1.0))


@njit
def enthalpy(k, g, r):
    """Antiderivative of p'(r)/r."""
    if g == 1.0:
        return k * math.log(r)
    return k * g / (g - 1.0) * r ** (g - 1.0)


@njit
def energy_potential(k, g, r, rstar):
    """r * integral_{rstar}^{r} p(s)/s^2 ds, in closed form."""
    if g == 1.0:
        return k * r * math.log(r / rstar)
    return k * r * (r ** (g - 1.0) - rstar ** (g - 1.0)) / (g - 1.0)


# ------------------------------------------------------------- wave curves


@njit
def _shock_g(k, g, r0, r):
    """Hugoniot velocity jump squared and its derivative in r."""
    p = pressure(k, g, r)
    p0 = pressure(k, g, r0)
    dr = r - r0
    dp = p - p0
    G = dp * dr / (r * r0)
    dG = (dpressure(k, g, r) * dr + dp) / (r * r0) - dp * dr / (r * r * r0)
    return G, dG


@njit
def forward_velocity(k, g, fam, r0, v0, r):
    """Velocity at density r on the forward Lax curve of family ``fam``.

    Returns ``(v, dv/dr)``.
    """
    if (fam == 1 and r <= r0) or (fam == 2 and r >= r0):
        dh = riemann_h(k, g, r) - riemann_h(k, g, r0)
        slope = sound(k, g, r) / r
        if fam == 1:
            return v0 - dh, -slope
        return v0 + dh, slope
    G, dG = _shock_g(k, g, r0, r)
    if G <= 0.0:
        slope = sound(k, g, r0) / r0
        if fam == 1:
            return v0, -slope
        return v0, slope
    s = math.sqrt(G)
    return v0 - s, -dG / (2.0 * s)


@njit
def backward_velocity(k, g, fam, r1, v1, r):
    """Velocity of the state at density r whose forward curve reaches (r1, v1).

    Returns ``(v, dv/dr)``.
    """
    if (fam == 1 and r1 <= r) or (fam == 2 and r1 >= r):
        dh = riemann_h(k, g, r1) - riemann_h(k, g, r)
        slope = sound(k, g, r) / r
        if fam == 1:
            return v1 + dh, -slope
        return v1 - dh, slope
    G, dG = _shock_g(k, g, r1, r)
    if G <= 0.0:
        slope = sound(k, g, r1) / r1
        if fam == 1:
            return v1, -slope
        return v1, slope
    s = math.sqrt(G)
    return v1 + s, dG / (2.0 * s)


@njit
def lax_state(k, g, fam, r0, q0, sigma):
    """State at parameter sigma on the forward curve; returns (rho, q, status)."""
    if fam == 1:
        r = r0 - sigma
    else:
        r = r0 + sigma
    if r <= RHO_MIN:
        return r, 0.0, VACUUM
    if sigma == 0.0:
        return r0, q0, OK
    v, _ = forward_velocity(k, g, fam, r0, q0 / r0, r)
    return r, r * v, OK


# --------------------------------------------------------- riemann solver


@njit
def _mismatch(k, g, rl, vl, rr, vr, r):
    v1, d1 = forward_velocity(k, g, 1, rl, vl, r)
    v2, d2 = backward_velocity(k, g, 2, rr, vr, r)
    return v1 - v2, d1 - d2


@njit
def riemann_middle_density(k, g, rl, ql, rr, qr):
    """Density of the middle state of the Riemann problem (l, r).

    Safeguarded Newton iteration on the velocity mismatch between the
    forward 1-curve of the left state and the backward 2-curve of the
    right state, started from the two-rarefaction solution.

    Returns ``(rho_m, status, iterations)``.
    """
    vl = ql / rl
    vr = qr / rr
    hm = 0.5 * (riemann_h(k, g, rl) + riemann_h(k, g, rr) + vl - vr)
    if g != 1.0 and hm <= 0.0:
        return 0.0, VACUUM, 0
    x = riemann_h_inverse(k, g, hm)
    if x <= RHO_MIN:
        return x, VACUUM, 0
    f, df = _mismatch(k, g, rl, vl, rr, vr, x)
    if f == 0.0:
        return x, OK, 0
    if f > 0.0:
        lo = x
        hi = 2.0 * x
        for _ in range(200):
            fh, _ = _mismatch(k, g, rl, vl, rr, vr, hi)
            if fh <= 0.0:
                break
            lo = hi
            hi *= 2.0
    else:
        hi = x
        lo = 0.5 * x
        for _ in range(200):
            if lo <= RHO_MIN:
                return lo, VACUUM, 0
            fl, _ = _mismatch(k, g, rl, vl, rr, vr, lo)
            if fl >= 0.0:
                break
            hi = lo
            lo *= 0.5
    for it in range(1, 101):
        if f > 0.0:
            lo = x
        elif f < 0.0:
            hi = x
        else:
            return x, OK, it
        xn = x - f / df if df != 0.0 else 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 2e-16 * x or hi - lo <= 4e-16 * x:
            return xn, OK, it
        x = xn
        f, df = _mismatch(k, g, rl, vl, rr, vr, x)
    return x, NO_CONVERGENCE, 100


# ------------------------------------------------------- stationary flows


@njit
def _stationary_slope(k, g, m, alpha, r):
    v = m / (alpha * r)
    c2 = dpressure(k, g, r)
    den = c2 - v * v
    return r * v * v / (alpha * den), v * v / c2


@njit
def _rk4_alpha(k, g, m, al, r, h):
    k1, m1 = _stationary_slope(k, g, m, al, r)
    s1 = pressure(k, g, r)
    r2 = r + 0.5 * h * k1
    k2, m2 = _stationary_slope(k, g, m, al + 0.5 * h, r2)
    s2 = pressure(k, g, r2)
    r3 = r + 0.5 * h * k2
    k3, m3 = _stationary_slope(k, g, m, al + 0.5 * h, r3)
    s3 = pressure(k, g, r3)
    r4 = r + h * k3
    k4, m4 = _stationary_slope(k, g, m, al + h, r4)
    s4 = pressure(k, g, r4)
    mach2 = max(max(m1, m2), max(m3, m4))
    rn = r + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    sn = h / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4)
    return rn, sn, mach2


@njit
def stationary_alpha(k, g, a0, r0, q0, a1, rtol, mach_max):
    """Integrate the smooth stationary flow from section a0 to section a1.

    The section itself is the independent variable; the momentum follows
    from the conserved mass flux a*q and the pressure integral
    S = int p(rho) da is carried along.

    Returns ``(rho1, q1, S, status, steps)``.
    """
    if a1 == a0:
        return r0, q0, 0.0, OK, 0
    m = a0 * q0
    span = a1 - a0
    h = span / 8.0
    al = a0
    r = r0
    S = 0.0
    steps = 0
    limit2 = mach_max * mach_max
    _, mach0 = _stationary_slope(k, g, m, a0, r0)
    if mach0 >= limit2:
        return r, m / al, S, SONIC, steps
    for _ in range(1000000):
        last = False
        if (al + h - a1) * span >= 0.0:
            h = a1 - al
            last = True
        rb, sb, mb = _rk4_alpha(k, g, m, al, r, h)
        rh, sh, mh = _rk4_alpha(k, g, m, al, r, 0.5 * h)
        if mh >= limit2 or mb >= limit2 or rh <= RHO_MIN or rb <= RHO_MIN:
            h *= 0.25
            if abs(h) < 1e-15 * abs(span):
                return r, m / al, S, SONIC, steps
            continue
        rh2, sh2, mh2 = _rk4_alpha(k, g, m, al + 0.5 * h, rh, 0.5 * h)
        if mh2 >= limit2 or rh2 <= RHO_MIN:
            h *= 0.25
            if abs(h) < 1e-15 * abs(span):
                return r, m / al, S, SONIC, steps
            continue
        s_half = sh + sh2
        err_r = abs(rh2 - rb) / (15.0 * r)
        s_scale = max(abs(S), pressure(k, g, r) * abs(span))
        err_s = abs(s_half - sb) / (15.0 * s_scale)
        err = max(err_r, err_s)
        if err <= rtol:
            r = rh2 + (rh2 - rb) / 15.0
            S = S + s_half + (s_half - sb) / 15.0
            al = a1 if last else al + h
            steps += 1
            if last:
                break
        if err == 0.0:
            fac = 4.0
        else:
            fac = min(4.0, max(0.2, 0.9 * (rtol / err) ** 0.2))
        h *= fac
        if abs(h) < 1e-14 * abs(span):
            # the only singularity of this flow is the sonic line
            _, mach_here = _stationary_slope(k, g, m, al, r)
            if mach_here >= 0.81:
                return r, m / al, S, SONIC, steps
            return r, m / al, S, UNDERFLOW, steps
    return r, m / a1, S, OK, steps


# ----------------------------------------------------------- event search


@njit
def next_collision(x, s, kind, tie_tol):
    """Earliest meeting of two adjacent items.

    ``kind`` is 0 for junction markers (speed 0) and the wave family
    otherwise.  Near-ties prefer events involving a junction, then the
    lowest index.  Returns ``(index, dt)`` with index -1 when nothing meets.
    """
    n = x.shape[0]
    best = np.inf
    idx = -1
    best_j = False
    for i in range(n - 1):
        if kind[i] == 0 and kind[i + 1] == 0:
            continue
        ds = s[i] - s[i + 1]
        if ds <= 0.0:
            continue
        dt = (x[i + 1] - x[i]) / ds
        if dt < 0.0:
            dt = 0.0
        isj = kind[i] == 0 or kind[i + 1] == 0
        tol = tie_tol * (1.0 + best) if best < np.inf else 0.0
        if dt < best - tol:
            best = dt
            idx = i
            best_j = isj
        elif abs(dt - best) <= tol and isj and not best_j:
            best = min(best, dt)
            idx = i
            best_j = True
    return idx, best


# ------------------------------------------------------ interaction mass


@njit
def approaching_mass(fam, sig):
    """Sum of |s_a s_b| over approaching ordered pairs (a left of b).

    Families are 1, 2 and 3 (non-physical).  Returns ``(Q, pair_count)``.
    """
    n = fam.shape[0]
    tot = 0.0
    cnt = 0
    for a in range(n):
        fa = fam[a]
        sa = sig[a]
        for b in range(a + 1, n):
            fb = fam[b]
            if fb < fa or (fa == fb and fa < 3 and (sa < 0.0 or sig[b] < 0.0)):
                tot += abs(sa * sig[b])
                cnt += 1
    return tot, cnt


def approaching_mass_numpy(fam, sig):
    """Vectorized counterpart of :func:`approaching_mass`."""
    fam = np.asarray(fam)
    sig = np.asarray(sig, dtype=float)
    n = fam.shape[0]
    if n < 2:
        return 0.0, 0
    fa = fam[:, None]
    fb = fam[None, :]
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    shock = sig < 0.0
    same = (fa == fb) & (fa < 3) & (shock[:, None] | shock[None, :])
    mask = upper & ((fb < fa) | same)
    prod = np.abs(sig[:, None] * sig[None, :])
    return float(prod[mask].sum()), int(mask.sum())


# ------------------------------------------------- space-time quadrature


@njit
def _bump(s):
    if abs(s) >= 1.0:
        return 0.0, 0.0
    d = 1.0 - s * s
    b = math.exp(-1.0 / d)
    return b, b * (-2.0 * s / (d * d))


@njit
def slab_integrals(t0, t1, x0, sp, off, w1, w2, f1, f2, tc, rt, xc, rx, nodes, weights, pieces):
    """Integrate piecewise constant densities against a product bump.

    Slab k covers [t0[k], t1[k]]; its breakpoints are ``x0[off[k]:off[k+1]]``
    at time t0[k] moving with speeds ``sp``, and cell c of slab k (index
    ``off[k] + k + c``) carries densities (w1, w2) and fluxes (f1, f2).
    The test function is phi = b((t-tc)/rt) b((x-xc)/rx).

    Returns the two integrals of w*phi_t + f*phi_x.
    """
    r1 = 0.0
    r2 = 0.0
    nq = nodes.shape[0]
    ta = tc - rt
    tb = tc + rt
    xa = xc - rx
    xb = xc + rx
    for k in range(t0.shape[0]):
        lo = max(t0[k], ta)
        hi = min(t1[k], tb)
        if hi <= lo:
            continue
        nt = max(1, int(math.ceil((hi - lo) / (2.0 * rt) * pieces)))
        dtp = (hi - lo) / nt
        b0 = off[k]
        nb = off[k + 1] - b0
        c0 = b0 + k
        for it in range(nt):
            tl = lo + it * dtp
            for iq in range(nq):
                t = tl + 0.5 * dtp * (nodes[iq] + 1.0)
                wt = 0.5 * dtp * weights[iq]
                bt, dbt = _bump((t - tc) / rt)
                if bt == 0.0:
                    continue
                for c in range(nb + 1):
                    if c == 0:
                        left = xa
                    else:
                        left = max(xa, x0[b0 + c - 1] + sp[b0 + c - 1] * (t - t0[k]))
                    if c == nb:
                        right = xb
                    else:
                        right = min(xb, x0[b0 + c] + sp[b0 + c] * (t - t0[k]))
                    if right <= left:
                        continue
                    nx = max(1, int(math.ceil((right - left) / (2.0 * rx) * pieces)))
                    dxp = (right - left) / nx
                    a1 = 0.0
                    a2 = 0.0
                    for ix in range(nx):
                        xl = left + ix * dxp
                        for jq in range(nq):
                            xx = xl + 0.5 * dxp * (nodes[jq] + 1.0)
                            bx, dbx = _bump((xx - xc) / rx)
                            wx = 0.5 * dxp * weights[jq]
                            pt = dbt / rt * bx
                            px = bt * dbx / rx
                            a1 += wx * (w1[c0 + c] * pt + f1[c0 + c] * px)
                            a2 += wx * (w2[c0 + c] * pt + f2[c0 + c] * px)
                    r1 += wt * a1
                    r2 += wt * a2
    return r1, r2
