"""Compiled inner loops for the solver.

Every kernel is sequential with a fixed summation order, so results are
bit-reproducible regardless of thread settings.  Physical constants arrive as
the packed vector from :meth:`PhysParams.as_vector`.
"""
import numpy as np
from numba import njit

from . import constitutive as _c

# Packed parameter indices.
MU, LAMBDA1, LAMBDA_HEAT, K_RATE, A_ACT, BETA, D_DIFF, R_GAS, C_V, A_RAD, KAPPA1, KAPPA2, B_EXP, N_DIM, ALPHA = range(15)

OK, POSITIVITY_LOSS, NEWTON_DIVERGENCE = 0, 1, 2

_jit = njit(cache=True, error_model="numpy")

pressure = _jit(_c.pressure_formula)
energy = _jit(_c.energy_formula)
energy_theta = _jit(_c.energy_theta_formula)
pressure_theta = _jit(_c.pressure_theta_formula)


@_jit
def fpow(x, b):
    """x**b for x > 0; integral exponents up to 16 use repeated multiplication."""
    if b == np.floor(b) and 0.0 <= b <= 16.0:
        k = int(b)
        out = 1.0
        base = x
        while k > 0:
            if k & 1:
                out *= base
            base *= base
            k >>= 1
        return out
    return np.exp(b * np.log(x))


@_jit
def arrhenius(K, beta, A, th):
    return K * fpow(th, beta) * np.exp(-A / th)


@_jit
def compensated_prefix(v, dx):
    """Node-indexed prefix sums ``sum_{j<i} v_j dx`` with Kahan compensation."""
    N = v.size
    out = np.empty(N + 1)
    out[0] = 0.0
    s = 0.0
    comp = 0.0
    for j in range(N):
        y = v[j] * dx - comp
        t = s + y
        comp = (t - s) - y
        s = t
        out[j + 1] = s
    return out


@_jit
def thomas(a, b, c, d):
    """Solve a tridiagonal system; ``a`` is the sub-, ``c`` the super-diagonal."""
    n = b.size
    cp = np.empty(n)
    dp = np.empty(n)
    x = np.empty(n)
    cp[0] = c[0] / b[0]
    dp[0] = d[0] / b[0]
    for i in range(1, n):
        m = b[i] - a[i] * cp[i - 1]
        cp[i] = c[i] / m
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


@_jit
def theta_from_energy(e, v, cv, a, guess):
    """Invert ``cv*theta + a*v*theta^4 = e`` cellwise; returns (theta, status)."""
    N = e.size
    th = np.empty(N)
    for c in range(N):
        if not e[c] > 0.0:
            return th, POSITIVITY_LOSS
        if a == 0.0:
            th[c] = e[c] / cv
            continue
        x = guess[c]
        if not x > 0.0 or cv * x + a * v[c] * x**4 < e[c]:
            x = e[c] / cv
        # Newton from above on a convex increasing function decreases monotonically.
        for _ in range(60):
            f = cv * x + a * v[c] * x**4 - e[c]
            dx = f / (cv + 4.0 * a * v[c] * x**3)
            xn = x - dx
            if not xn < x:
                break
            x = xn
        th[c] = x
    return th, OK


@_jit
def secant_area(r0, r1, n):
    """Exact mean of r^{n-1} over a node path: (r1^n - r0^n) / (n (r1 - r0))."""
    out = np.empty(r0.size)
    for i in range(r0.size):
        # S_k = r0 S_{k-1} + r1^k gives sum_j r0^j r1^{n-1-j} at k = n-1.
        s = 1.0
        pw = 1.0
        for _ in range(n - 1):
            pw *= r1[i]
            s = r0[i] * s + pw
        out[i] = s / n
    return out


@_jit
def max_sound_speed(v, th, rn, pv):
    """max over cells of r^{n-1} times the adiabatic sound speed, r taken at the larger face."""
    R = pv[R_GAS]
    cv = pv[C_V]
    a = pv[A_RAD]
    ex = (pv[N_DIM] - 1.0) / pv[N_DIM]
    best = 0.0
    for c in range(v.size):
        th3 = th[c] ** 3
        Pt = R / v[c] + (4.0 / 3.0) * a * th3
        et = cv + 4.0 * a * v[c] * th3
        c2 = R * th[c] / (v[c] * v[c]) + th[c] * Pt * Pt / et
        area = max(rn[c], rn[c + 1]) ** ex
        speed = area * np.sqrt(c2)
        if speed > best:
            best = speed
    return best


@_jit
def heat_fluxes(theta, v, G, dx, k1, k2, b, dirichlet, theta_b):
    """Node fluxes r^{2n-2} (kappa/v) theta_x; zero at the inner node."""
    N = theta.size
    g = np.empty(N)
    for c in range(N):
        g[c] = k1 / v[c] + k2 * fpow(theta[c], b)
    q = np.zeros(N + 1)
    for i in range(1, N):
        q[i] = G[i] * 0.5 * (g[i - 1] + g[i]) * (theta[i] - theta[i - 1]) / dx
    if dirichlet:
        q[N] = G[N] * g[N - 1] * (theta_b - theta[N - 1]) * 2.0 / dx
    return q


HEAT_BE, HEAT_CN, HEAT_TRBDF2 = 0, 1, 2
TRBDF2_GAMMA = 2.0 - np.sqrt(2.0)


@_jit
def heat_newton(rhs, theta_init, v, G, dx, timp, pv, dirichlet, theta_b, tol, maxit):
    """Solve ``e(v, theta) - timp * div q(theta) = rhs`` for theta by full Newton.

    Iterates to roundoff; the step is accepted when the residual is below
    ``tol`` relative to the energy scale.  Returns
    ``(theta, status, iterations, outer flux at the solution, residual)``.
    """
    N = rhs.size
    cv = pv[C_V]
    a = pv[A_RAD]
    k1 = pv[KAPPA1]
    k2 = pv[KAPPA2]
    b = pv[B_EXP]
    scale = 1.0
    for c in range(N):
        scale = max(scale, abs(rhs[c]))
    th = theta_init.copy()
    sub = np.zeros(N)
    diag = np.zeros(N)
    sup = np.zeros(N)
    F = np.empty(N)
    g = np.empty(N)
    gp = np.empty(N)
    rhs_newton = np.empty(N)
    fnorm = np.inf
    prev = np.inf
    qN = 0.0
    it = 0
    s = timp / dx
    for it in range(maxit + 1):
        for c in range(N):
            tb = fpow(th[c], b)
            g[c] = k1 / v[c] + k2 * tb
            gp[c] = k2 * b * tb / th[c]
        fnorm = 0.0
        q_left = 0.0
        for c in range(N):
            if c + 1 < N:
                q_right = G[c + 1] * 0.5 * (g[c] + g[c + 1]) * (th[c + 1] - th[c]) / dx
            elif dirichlet:
                q_right = G[N] * g[N - 1] * (theta_b - th[N - 1]) * 2.0 / dx
            else:
                q_right = 0.0
            F[c] = cv * th[c] + a * v[c] * th[c] ** 4 - rhs[c] - s * (q_right - q_left)
            fnorm = max(fnorm, abs(F[c]))
            q_left = q_right
        qN = q_left
        if fnorm <= 1e-15 * scale or (fnorm <= tol * scale and fnorm >= prev):
            break
        if it == maxit:
            break
        prev = fnorm
        for c in range(N):
            diag[c] = energy_theta(cv, a, v[c], th[c])
            sub[c] = 0.0
            sup[c] = 0.0
        for i in range(1, N):
            jump = th[i] - th[i - 1]
            dq_right = G[i] * (0.5 * (g[i - 1] + g[i]) + 0.5 * gp[i] * jump) / dx
            dq_left = G[i] * (-0.5 * (g[i - 1] + g[i]) + 0.5 * gp[i - 1] * jump) / dx
            # q[i] enters F[i-1] with -s and F[i] with +s.
            diag[i - 1] -= s * dq_left
            sup[i - 1] -= s * dq_right
            diag[i] += s * dq_right
            sub[i] += s * dq_left
        if dirichlet:
            dqN = G[N] * (gp[N - 1] * (theta_b - th[N - 1]) - g[N - 1]) * 2.0 / dx
            diag[N - 1] -= s * dqN
        for c in range(N):
            rhs_newton[c] = -F[c]
        delta = thomas(sub, diag, sup, rhs_newton)
        lam = 1.0
        ok = False
        for _ in range(21):
            good = True
            for c in range(N):
                if not th[c] + lam * delta[c] > 0.0:
                    good = False
                    break
            if good:
                ok = True
                break
            lam *= 0.5
        if not ok:
            return th, POSITIVITY_LOSS, it, 0.0, fnorm
        for c in range(N):
            th[c] += lam * delta[c]
    if fnorm > tol * scale:
        return th, NEWTON_DIVERGENCE, it, qN, fnorm
    return th, OK, it, qN, fnorm


@_jit
def heat_diffusion(theta0, v, G, dx, tau, pv, dirichlet, theta_b, scheme, tol, maxit, source):
    """Conservative implicit step of ``e(v, theta)_t = (G kappa theta_x / v)_x + source``.

    ``scheme``: backward Euler, Crank-Nicolson or TR-BDF2 (trapezoid stage to
    ``gamma tau`` followed by BDF2; second order and L-stable).  The constant
    ``source`` adds exactly ``tau * source`` to the energy of each cell.
    Returns ``(theta, status, max iterations, time-mean outer flux, residual)``.
    """
    N = theta0.size
    cv = pv[C_V]
    a = pv[A_RAD]
    e0 = energy(cv, a, v, theta0)
    q0 = heat_fluxes(theta0, v, G, dx, pv[KAPPA1], pv[KAPPA2], pv[B_EXP], dirichlet, theta_b)
    rhs = np.empty(N)
    if scheme == HEAT_BE:
        for c in range(N):
            rhs[c] = e0[c] + tau * source[c]
        return heat_newton(rhs, theta0, v, G, dx, tau, pv, dirichlet, theta_b, tol, maxit)
    if scheme == HEAT_CN:
        for c in range(N):
            rhs[c] = e0[c] + 0.5 * tau * (q0[c + 1] - q0[c]) / dx + tau * source[c]
        th, st, it, qN, res = heat_newton(rhs, theta0, v, G, dx, 0.5 * tau, pv, dirichlet, theta_b, tol, maxit)
        return th, st, it, 0.5 * (q0[N] + qN), res
    gam = TRBDF2_GAMMA
    for c in range(N):
        rhs[c] = e0[c] + 0.5 * gam * tau * (q0[c + 1] - q0[c]) / dx + gam * tau * source[c]
    thg, st, it1, qg, res = heat_newton(rhs, theta0, v, G, dx, 0.5 * gam * tau, pv, dirichlet, theta_b, tol, maxit)
    if st != OK:
        return thg, st, it1, 0.0, res
    eg = energy(cv, a, v, thg)
    w = gam * (2.0 - gam)
    for c in range(N):
        rhs[c] = (eg[c] - (1.0 - gam) ** 2 * e0[c]) / w + (1.0 - gam) / (2.0 - gam) * tau * source[c]
    # linear extrapolation from (0, theta0), (gamma tau, thg) as the starting guess
    guess = np.empty(N)
    for c in range(N):
        guess[c] = thg[c] + (thg[c] - theta0[c]) * (1.0 - gam) / gam
        if not guess[c] > 0.0:
            guess[c] = thg[c]
    th, st, it2, q1, res = heat_newton(rhs, guess, v, G, dx, (1.0 - gam) / (2.0 - gam) * tau, pv, dirichlet, theta_b, tol, maxit)
    qmean = (0.5 * (q0[N] + qg) + (1.0 - gam) * q1) / (2.0 - gam)
    return th, st, max(it1, it2), qmean, res


@_jit
def species_coeffs(v, G, d, dx, dirichlet):
    """Face conductances D_i = d r^{2n-2} / v^2 (inner face closed)."""
    N = v.size
    D = np.zeros(N + 1)
    for i in range(1, N):
        D[i] = d * G[i] * 0.5 * (1.0 / v[i - 1] ** 2 + 1.0 / v[i] ** 2)
    if dirichlet:
        D[N] = d * G[N] / v[N - 1] ** 2
    return D


@_jit
def species_fluxes(z, D, dx, dirichlet, z_b):
    N = z.size
    s = np.zeros(N + 1)
    for i in range(1, N):
        s[i] = D[i] * (z[i] - z[i - 1]) / dx
    if dirichlet:
        s[N] = D[N] * (z_b - z[N - 1]) * 2.0 / dx
    return s


@_jit
def _species_linear(z0, D, dx, tau, wimp, dirichlet, z_b, source):
    N = z0.size
    s0 = species_fluxes(z0, D, dx, dirichlet, z_b)
    sub = np.zeros(N)
    diag = np.ones(N)
    sup = np.zeros(N)
    rhs = np.empty(N)
    for c in range(N):
        rhs[c] = z0[c] + tau * (1.0 - wimp) * (s0[c + 1] - s0[c]) / dx + tau * source[c]
    k = tau * wimp / dx**2
    for i in range(1, N):
        diag[i - 1] += k * D[i]
        sup[i - 1] -= k * D[i]
        diag[i] += k * D[i]
        sub[i] -= k * D[i]
    if dirichlet:
        diag[N - 1] += 2.0 * k * D[N]
        rhs[N - 1] += 2.0 * k * D[N] * z_b
    return thomas(sub, diag, sup, rhs), s0


@_jit
def species_diffusion(z0, v, G, d, dx, tau, dirichlet, z_b, scheme, source):
    """Implicit reactant diffusion that keeps z in [0, 1].

    ``scheme`` 0: backward Euler (monotone).  1: TR-BDF2, kept as is when it
    stays in [0, 1] and otherwise flux-limited towards backward Euler
    (Zalesak limiter against the bounds [0, 1]).  2: TR-BDF2 unlimited, for
    forced problems where the bounds need not hold.
    Returns ``(z, boundary inflow, dissipation, limited faces)``; the inflow and
    dissipation are already multiplied by ``tau``.  ``source`` is a constant
    rate added to both the low and the high order solutions.
    """
    N = z0.size
    D = species_coeffs(v, G, d, dx, dirichlet)
    zl, s0 = _species_linear(z0, D, dx, tau, 1.0, dirichlet, z_b, source)
    FL = species_fluxes(zl, D, dx, dirichlet, z_b)
    limited = 0
    if scheme == 0:
        z = zl
        F = FL
    else:
        # TR-BDF2 target: trapezoid to gamma tau, then BDF2 to tau
        gam = TRBDF2_GAMMA
        zg, _ = _species_linear(z0, D, dx, gam * tau, 0.5, dirichlet, z_b, source)
        sg = species_fluxes(zg, D, dx, dirichlet, z_b)
        wb = (1.0 - gam) / (2.0 - gam)
        base = np.empty(N)
        for c in range(N):
            base[c] = (zg[c] - (1.0 - gam) ** 2 * z0[c]) / (gam * (2.0 - gam))
        zh, _ = _species_linear(base, D, dx, wb * tau, 1.0, dirichlet, z_b, source)
        sh = species_fluxes(zh, D, dx, dirichlet, z_b)
        A = np.empty(N + 1)
        for i in range(N + 1):
            A[i] = (0.5 * (s0[i] + sg[i]) + (1.0 - gam) * sh[i]) / (2.0 - gam) - FL[i]
        k = tau / dx
        inside = True
        if scheme == 1:
            # test the flux-form update itself, not zh, so roundoff cannot leak out
            for c in range(N):
                gain = max(0.0, A[c + 1]) - min(0.0, A[c])
                loss = max(0.0, A[c]) - min(0.0, A[c + 1])
                zc = (zl[c] - k * loss) + k * gain
                if not (0.0 <= zc <= 1.0):
                    inside = False
                    break
        C = np.ones(N + 1)
        if not inside:
            margin = 1.0 - 1e-12
            Rp = np.ones(N)
            Rm = np.ones(N)
            for c in range(N):
                inc = k * (max(0.0, A[c + 1]) - min(0.0, A[c]))
                dec = k * (max(0.0, A[c]) - min(0.0, A[c + 1]))
                room_up = (1.0 - zl[c]) * margin
                room_dn = zl[c] * margin
                if inc > room_up:
                    Rp[c] = max(room_up, 0.0) / inc
                if dec > room_dn:
                    Rm[c] = max(room_dn, 0.0) / dec
            for i in range(1, N):
                if A[i] >= 0.0:
                    C[i] = min(Rp[i - 1], Rm[i])
                else:
                    C[i] = min(Rm[i - 1], Rp[i])
            C[N] = Rp[N - 1] if A[N] >= 0.0 else Rm[N - 1]
        F = np.empty(N + 1)
        for i in range(N + 1):
            if C[i] < 1.0:
                limited += 1
            F[i] = FL[i] + C[i] * A[i]
        z = np.empty(N)
        for c in range(N):
            gain = max(0.0, C[c + 1] * A[c + 1]) - min(0.0, C[c] * A[c])
            loss = max(0.0, C[c] * A[c]) - min(0.0, C[c + 1] * A[c + 1])
            z[c] = (zl[c] - k * loss) + k * gain
    diss = 0.0
    for i in range(1, N):
        gz = ((z[i] + z0[i]) - (z[i - 1] + z0[i - 1])) * 0.5 / dx
        diss += D[i] * gz * gz * dx
    if dirichlet:
        gz = (z_b - 0.5 * (z[N - 1] + z0[N - 1])) * 2.0 / dx
        diss += D[N] * gz * gz * 0.5 * dx
    return z, tau * F[N], tau * diss, limited


@_jit
def reaction(z0, th0, v, tau, pv, frozen):
    """Exponential reactant decay with trapezoid-averaged Arrhenius rate.

    Returns ``(z, theta, burn, burn_sq, status)`` where ``burn`` holds the
    per-cell released fraction ``phi_m tau (z0+z1)/2`` and ``burn_sq`` the
    matching ``phi_m tau (z0^2+z1^2)/2``.
    """
    N = z0.size
    K = pv[K_RATE]
    beta = pv[BETA]
    A = pv[A_ACT]
    lam = pv[LAMBDA_HEAT]
    cv = pv[C_V]
    a = pv[A_RAD]
    z = np.empty(N)
    burn = np.empty(N)
    burn_sq = np.empty(N)
    phi0 = np.empty(N)
    for c in range(N):
        phi0[c] = arrhenius(K, beta, A, th0[c])
    if frozen or lam == 0.0 or K == 0.0:
        for c in range(N):
            z[c] = z0[c] * np.exp(-phi0[c] * tau)
            burn[c] = phi0[c] * tau * 0.5 * (z0[c] + z[c])
            burn_sq[c] = phi0[c] * tau * 0.5 * (z0[c] ** 2 + z[c] ** 2)
        return z, th0.copy(), burn, burn_sq, OK
    e0 = energy(cv, a, v, th0)
    ep = np.empty(N)
    for c in range(N):
        zp = z0[c] * np.exp(-phi0[c] * tau)
        ep[c] = e0[c] + lam * phi0[c] * tau * 0.5 * (z0[c] + zp)
    thp, st = theta_from_energy(ep, v, cv, a, th0)
    if st != OK:
        return z, th0.copy(), burn, burn_sq, st
    e1 = np.empty(N)
    for c in range(N):
        phim = 0.5 * (phi0[c] + arrhenius(K, beta, A, thp[c]))
        z[c] = z0[c] * np.exp(-phim * tau)
        burn[c] = phim * tau * 0.5 * (z0[c] + z[c])
        burn_sq[c] = phim * tau * 0.5 * (z0[c] ** 2 + z[c] ** 2)
        e1[c] = e0[c] + lam * burn[c]
    th1, st = theta_from_energy(e1, v, cv, a, thp)
    return z, th1, burn, burn_sq, st


@_jit
def hydro(r0, v0, u0, th0, pv, dx, h, npass, fu, fe):
    """Mass, momentum and internal-energy update over ``h``.

    Trapezoidal predictor-corrector for pressure and geometry, Crank-Nicolson
    viscosity.  The internal energy receives exactly the work removed from the
    kinetic energy, so total energy only changes through boundary terms.
    Returns ``(u, v, theta, r, status)``.
    """
    N = v0.size
    n = int(pv[N_DIM])
    alpha = pv[ALPHA]
    mu = pv[MU]
    R = pv[R_GAS]
    cv = pv[C_V]
    a = pv[A_RAD]
    e0 = energy(cv, a, v0, th0)
    P0 = pressure(R, a, v0, th0)
    u1 = u0.copy()
    v1 = v0.copy()
    th1 = th0.copy()
    r1 = r0.copy()
    P1 = P0.copy()
    vb = np.empty(N)
    Pb = np.empty(N)
    rb = np.empty(N + 1)
    ub = np.empty(N + 1)
    sub = np.zeros(N - 1)
    diag = np.zeros(N - 1)
    sup = np.zeros(N - 1)
    rhs = np.zeros(N - 1)
    e1 = np.empty(N)
    for k in range(npass):
        if k == 0:
            A = np.empty(N + 1)
            for i in range(N + 1):
                A[i] = r0[i] ** (n - 1)
                rb[i] = r0[i]
            for c in range(N):
                vb[c] = v0[c]
                Pb[c] = P0[c]
        else:
            A = secant_area(r0, r1, n)
            for i in range(N + 1):
                rb[i] = 0.5 * (r0[i] + r1[i])
            for c in range(N):
                vb[c] = 0.5 * (v0[c] + v1[c])
                Pb[c] = 0.5 * (P0[c] + P1[c])
        beta = h / dx
        # explicit half of the stress with u0
        for i in range(1, N):
            sR = -Pb[i] + alpha * 0.5 * (A[i + 1] * u0[i + 1] - A[i] * u0[i]) / (dx * vb[i])
            sL = -Pb[i - 1] + alpha * 0.5 * (A[i] * u0[i] - A[i - 1] * u0[i - 1]) / (dx * vb[i - 1])
            cR = beta * A[i] * alpha / (2.0 * dx * vb[i])
            cL = beta * A[i] * alpha / (2.0 * dx * vb[i - 1])
            j = i - 1
            diag[j] = 1.0 + cR * A[i] + cL * A[i]
            sup[j] = -cR * A[i + 1] if i + 1 < N else 0.0
            sub[j] = -cL * A[i - 1] if i - 1 > 0 else 0.0
            rhs[j] = u0[i] + beta * A[i] * (sR - sL) + h * fu[i]
        sol = thomas(sub, diag, sup, rhs)
        u1[0] = 0.0
        u1[N] = 0.0
        for i in range(1, N):
            u1[i] = sol[i - 1]
        for i in range(N + 1):
            ub[i] = 0.5 * (u0[i] + u1[i])
            r1[i] = r0[i] + h * ub[i]
        Abar = secant_area(r0, r1, n)
        for c in range(N):
            v1[c] = v0[c] + h * (Abar[c + 1] * ub[c + 1] - Abar[c] * ub[c]) / dx
            if not v1[c] > 0.0:
                return u1, v1, th1, r1, POSITIVITY_LOSS
        for c in range(N):
            W = (A[c + 1] * ub[c + 1] - A[c] * ub[c]) / dx
            sig = -Pb[c] + alpha * W / vb[c]
            mR = rb[c + 1] ** (n - 2) * ub[c + 1] ** 2
            mL = rb[c] ** (n - 2) * ub[c] ** 2
            e1[c] = e0[c] + h * (sig * W - 2.0 * mu * (n - 1) * (mR - mL) / dx) + h * fe[c]
        th1, st = theta_from_energy(e1, v1, cv, a, th1)
        if st != OK:
            return u1, v1, th1, r1, st
        for c in range(N):
            P1[c] = pressure(R, a, v1[c], th1[c])
    return u1, v1, th1, r1, OK


# Indices into the vector returned by ``state_functionals``.
F_LYAPUNOV, F_ENTROPY_PROD, F_DISSIPATION_V, F_Y, F_Z, F_GPLUS, F_ENERGY, F_BURN_RATE, F_DEV = range(9)
N_FUNCTIONALS = 9


@_jit
def state_functionals(v, th, z, u, rn, pv, dx, dirichlet, theta_b):
    """Spatial integrals of one state, in a fixed summation order.

    ``F_ENTROPY_PROD`` is the integrand of the entropy balance: viscous,
    thermal and chemical production plus the viscous boundary-layer term
    ``2 mu (n-1) (1 - 1/theta) (r^{n-2} u^2)_x`` minus the heat release.
    """
    N = v.size
    n = int(pv[N_DIM])
    alpha = pv[ALPHA]
    mu = pv[MU]
    lam = pv[LAMBDA_HEAT]
    R = pv[R_GAS]
    cv = pv[C_V]
    a = pv[A_RAD]
    k1 = pv[KAPPA1]
    k2 = pv[KAPPA2]
    b = pv[B_EXP]
    out = np.zeros(N_FUNCTIONALS)
    r = np.empty(N + 1)
    A = np.empty(N + 1)
    m = np.empty(N + 1)
    for i in range(N + 1):
        r[i] = rn[i] ** (1.0 / n)
        A[i] = rn[i] / r[i]
        m[i] = r[i] ** (n - 2) * u[i] * u[i]
    lyap = 0.0
    prod = 0.0
    V = 0.0
    energy_sum = 0.0
    burn_rate = 0.0
    gplus = 0.0
    dev = 0.0
    for c in range(N):
        vc = v[c]
        tc = th[c]
        lyap += (
            cv * (tc - np.log(tc) - 1.0)
            + R * (vc - np.log(vc) - 1.0)
            + a * vc * (tc - 1.0) ** 2 * (3.0 * tc * tc + 2.0 * tc + 1.0) / 3.0
        )
        w = (A[c + 1] * u[c + 1] - A[c] * u[c]) / dx
        mx = (m[c + 1] - m[c]) / dx
        phiz = arrhenius(pv[K_RATE], pv[BETA], pv[A_ACT], tc) * z[c]
        prod += alpha * w * w / (vc * tc) + lam * phiz / tc + 2.0 * mu * (n - 1) * (1.0 - 1.0 / tc) * mx - lam * phiz
        uc = 0.5 * (u[c] + u[c + 1])
        rc = 0.5 * (r[c] + r[c + 1])
        ux = (u[c + 1] - u[c]) / dx
        V += w * w / (vc * tc) + vc * uc * uc / (rc * rc * tc) + rc ** (2 * n - 2) * ux * ux / (vc * tc) + phiz / tc
        energy_sum += cv * tc + a * vc * tc**4 + lam * z[c]
        burn_rate += phiz
        gplus = max(gplus, 1.0 / tc - 1.0)
        dev = max(dev, abs(vc - 1.0), abs(tc - 1.0), abs(z[c]))
    kin = 0.0
    for i in range(N + 1):
        kin += 0.5 * u[i] * u[i]
        dev = max(dev, abs(u[i]))
    # Faces: thermal production and the Y integrand.
    therm = 0.0
    Y = 0.0
    for i in range(1, N + 1):
        if i < N:
            tl = th[i - 1]
            tr = th[i]
            gface = 0.5 * (k1 / v[i - 1] + k2 * fpow(tl, b) + k1 / v[i] + k2 * fpow(tr, b))
            grad = (tr - tl) / dx
            weight = dx
        elif dirichlet:
            tl = th[N - 1]
            tr = theta_b
            gface = k1 / v[N - 1] + k2 * fpow(tl, b)
            grad = (tr - tl) * 2.0 / dx
            weight = 0.5 * dx
        else:
            break
        G = A[i] * A[i]
        therm += G * gface * grad * grad / (tl * tr) * weight
        tf = 0.5 * (tl + tr)
        Y += G * (1.0 + fpow(tf, 2.0 * b)) * grad * grad * weight
    Z = 0.0
    for i in range(1, N):
        uxx = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx)
        Z += uxx * uxx
    out[F_LYAPUNOV] = (lyap + kin) * dx
    out[F_ENTROPY_PROD] = prod * dx + therm
    out[F_DISSIPATION_V] = V * dx + therm
    out[F_Y] = Y
    out[F_Z] = Z * dx
    out[F_GPLUS] = max(gplus, 0.0)
    out[F_ENERGY] = (energy_sum + kin) * dx
    out[F_BURN_RATE] = burn_rate * dx
    out[F_DEV] = dev
    return out
