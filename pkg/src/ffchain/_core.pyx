# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled propagation kernel: adaptive Dormand-Prince 5(4) stepping of the
transfer-matrix ODE fused with the structured chain RHS and the analytic
protocol-coefficient chain (Taylor-jet arithmetic on fixed-size buffers).

Semantics mirror ffchain._core_py / ffchain.integrate; the parity tests pin
the two backends together.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, cos, fabs, fmin, fmax

from .errors import (NegativeZSquared, OutOfRange, SingularDenominator,
                     SingularEta, StepSizeUnderflow)

cnp.import_array()

DEF NORD = 7          # jet orders 0..6
DEF MAXDEG = 16       # max ramp polynomial length
DEF MAXPIECES = 8     # max schedule pieces

cdef double PI = 3.14159265358979323846

# ---------------------------------------------------------------------------
# jet arithmetic on double[NORD] (Taylor coefficients)
# ---------------------------------------------------------------------------

cdef inline void jset(double* o, double c) noexcept nogil:
    cdef int k
    for k in range(NORD):
        o[k] = 0.0
    o[0] = c

cdef inline void jcopy(double* o, const double* a) noexcept nogil:
    cdef int k
    for k in range(NORD):
        o[k] = a[k]

cdef inline void jadd(double* o, const double* a, const double* b) noexcept nogil:
    cdef int k
    for k in range(NORD):
        o[k] = a[k] + b[k]

cdef inline void jsub(double* o, const double* a, const double* b) noexcept nogil:
    cdef int k
    for k in range(NORD):
        o[k] = a[k] - b[k]

cdef inline void jscale(double* o, const double* a, double s) noexcept nogil:
    cdef int k
    for k in range(NORD):
        o[k] = a[k] * s

cdef inline void jshift(double* o, const double* a, double c) noexcept nogil:
    jcopy(o, a)
    o[0] += c

cdef inline void jmul(double* o, const double* a, const double* b) noexcept nogil:
    cdef double tmp[NORD]
    cdef int k, j
    cdef double s
    for k in range(NORD):
        s = 0.0
        for j in range(k + 1):
            s += a[j] * b[k - j]
        tmp[k] = s
    jcopy(o, tmp)

cdef inline int jdiv(double* o, const double* a, const double* b) noexcept nogil:
    cdef double tmp[NORD]
    cdef int k, j
    cdef double s
    if b[0] == 0.0:
        return -1
    tmp[0] = a[0] / b[0]
    for k in range(1, NORD):
        s = a[k]
        for j in range(k):
            s -= tmp[j] * b[k - j]
        tmp[k] = s / b[0]
    jcopy(o, tmp)
    return 0

cdef inline int jsqrt(double* o, const double* a) noexcept nogil:
    cdef double tmp[NORD]
    cdef int k, j
    cdef double s
    if a[0] <= 0.0:
        return -1
    tmp[0] = sqrt(a[0])
    for k in range(1, NORD):
        s = a[k]
        for j in range(1, k):
            s -= tmp[j] * tmp[k - j]
        tmp[k] = s / (2.0 * tmp[0])
    jcopy(o, tmp)
    return 0

cdef inline void jddt(double* o, const double* a) noexcept nogil:
    cdef int k
    for k in range(NORD - 1):
        o[k] = (k + 1) * a[k + 1]
    o[NORD - 1] = 0.0

cdef inline int jlog(double* o, const double* a) noexcept nogil:
    cdef double da[NORD]
    cdef double q[NORD]
    cdef int k
    if a[0] <= 0.0:
        return -1
    jddt(da, a)
    if jdiv(q, da, a) != 0:
        return -1
    o[0] = log(a[0])
    for k in range(1, NORD):
        o[k] = q[k - 1] / k
    return 0

# ---------------------------------------------------------------------------
# ramp evaluation
# ---------------------------------------------------------------------------

cdef struct Ramp:
    int npieces
    double bends[MAXPIECES]    # cumulative piece end times
    int deg                    # stored coefficients per derivative row
    double dcoef[MAXPIECES][NORD][MAXDEG]

cdef int ramp_jet(Ramp* r, double t, double* out) noexcept nogil:
    """Taylor jet of lambda at t; -1 when t is outside the domain."""
    cdef double tp = r.bends[r.npieces - 1]
    cdef double tol = 1e-12 * tp
    cdef int piece, k, j
    cdef double s, acc, fact, start
    if t < -tol or t > tp + tol:
        return -1
    t = fmin(fmax(t, 0.0), tp)
    start = 0.0
    piece = r.npieces - 1
    for j in range(r.npieces):
        if t <= r.bends[j]:
            piece = j
            break
        start = r.bends[j]
    s = t - (start if piece > 0 else 0.0)
    if piece > 0:
        s = t - r.bends[piece - 1]
    else:
        s = t
    fact = 1.0
    for k in range(NORD):
        acc = 0.0
        for j in range(r.deg - 1, -1, -1):
            acc = acc * s + r.dcoef[piece][k][j]
        if k > 0:
            fact *= k
        out[k] = acc / fact
    return 0

# ---------------------------------------------------------------------------
# protocol coefficients
# ---------------------------------------------------------------------------

cdef struct Proto:
    int kind                   # 0 ua, 1 cd-exact, 2 cd-weak, 3 rwff, 4 feff
    int exact_ff               # feff synthesis coefficient mode
    double sg                  # chain sign set: +1 conjugate, -1 published
    double w2b, gamma_SB
    double omega_floquet, phase
    double eps_cut             # eps_reg * |peak speed|
    double tol_z

cdef int gauge_scalars(double lam, double g, int exact, double* a) noexcept nogil:
    cdef double q = lam * lam + 4.0 * g * g
    cdef double dd = 1.0 + lam - g * g
    cdef double den
    if dd <= 0.0 or q == 0.0:
        return -1
    if exact:
        den = 4.0 * dd * q
        a[0] = -(lam * lam + g * g * (2.0 - lam)) / den
        a[1] = g * (4.0 * (1.0 + lam) + lam - 6.0 * g * g) / den
        a[2] = -g * (4.0 * (1.0 + lam) - lam - 2.0 * g * g) / den
        a[3] = -g * g * (2.0 + lam) / den
    else:
        a[0] = -0.25 / (1.0 + lam)
        a[1] = g / q
        a[2] = -a[1]
        a[3] = 0.0
    return 0

cdef int gauge_jets(const double* lj, double g, int exact,
                    double* a1, double* a2, double* a3, double* a4) noexcept nogil:
    cdef double q[NORD]
    cdef double onep[NORD]
    cdef double dd[NORD]
    cdef double den[NORD]
    cdef double num[NORD]
    cdef double t1[NORD]
    jmul(q, lj, lj)
    q[0] += 4.0 * g * g
    jshift(onep, lj, 1.0)
    if 1.0 + lj[0] - g * g <= 0.0 or q[0] == 0.0:
        return -1
    if not exact:
        jset(num, g)
        if jdiv(a2, num, q) != 0:
            return -1
        jset(num, -0.25)
        if jdiv(a1, num, onep) != 0:
            return -1
        jscale(a3, a2, -1.0)
        jset(a4, 0.0)
        return 0
    jshift(dd, onep, -g * g)
    jmul(den, dd, q)
    jscale(den, den, 4.0)
    # a1 = -(lam^2 + g^2 (2 - lam)) / den
    jmul(num, lj, lj)
    jscale(t1, lj, -g * g)
    jadd(num, num, t1)
    num[0] += 2.0 * g * g
    jscale(num, num, -1.0)
    if jdiv(a1, num, den) != 0:
        return -1
    # a2 = g (4 (1+lam) + lam - 6 g^2) / den
    jscale(num, onep, 4.0)
    jadd(num, num, lj)
    num[0] -= 6.0 * g * g
    jscale(num, num, g)
    if jdiv(a2, num, den) != 0:
        return -1
    # a3 = -g (4 (1+lam) - lam - 2 g^2) / den
    jscale(num, onep, 4.0)
    jsub(num, num, lj)
    num[0] -= 2.0 * g * g
    jscale(num, num, -g)
    if jdiv(a3, num, den) != 0:
        return -1
    # a4 = -g^2 (2 + lam) / den
    jshift(num, lj, 2.0)
    jscale(num, num, -g * g)
    if jdiv(a4, num, den) != 0:
        return -1
    return 0

cdef int ff_couplings(Proto* pr, const double* lj, double t,
                      double* w2, double* csb) noexcept nogil:
    """Floquet-engineered couplings; -1 singular denominator, -2 z^2 < -tol_z,
    -3 transformation chain singular."""
    cdef double a1[NORD]
    cdef double a2[NORD]
    cdef double a3[NORD]
    cdef double a4[NORD]
    cdef double ld[NORD]
    cdef double b1[NORD]
    cdef double b2[NORD]
    cdef double b3[NORD]
    cdef double b4[NORD]
    cdef double eta[NORD]
    cdef double mu[NORD]
    cdef double lbar[NORD]
    cdef double minv[NORD]
    cdef double z2[NORD]
    cdef double xi[NORD]
    cdef double lamp[NORD]
    cdef double t1[NORD]
    cdef double t2[NORD]
    cdef double t3[NORD]
    cdef double zz, cprime
    if gauge_jets(lj, pr.gamma_SB, pr.exact_ff, a1, a2, a3, a4) != 0:
        return -1
    jddt(ld, lj)
    jmul(b1, ld, a1)
    jmul(b2, ld, a2)
    jmul(b3, ld, a3)
    jmul(b4, ld, a4)
    # eta = (d/dt b2 + ld^2 (a1 a3 + a2 a4)) / (ld (a2 - a3))
    jddt(t1, b2)
    jmul(t2, a1, a3)
    jmul(t3, a2, a4)
    jadd(t2, t2, t3)
    jmul(t3, ld, ld)
    jmul(t2, t3, t2)
    jadd(t1, t1, t2)
    jsub(t2, a2, a3)
    jmul(t3, ld, t2)
    if t3[0] == 0.0 or jdiv(eta, t1, t3) != 0:
        return -3
    # mu = ld (a2 - a3) / (g w2b)
    jscale(mu, t3, 1.0 / (pr.gamma_SB * pr.w2b))
    # lbar = ws2 - b1^2 - b2^2 + eta^2 - d/dt eta - d/dt b1
    jscale(lbar, lj, pr.w2b)
    lbar[0] += pr.w2b
    jmul(t1, b1, b1)
    jsub(lbar, lbar, t1)
    jmul(t1, b2, b2)
    jsub(lbar, lbar, t1)
    jmul(t1, eta, eta)
    jadd(lbar, lbar, t1)
    jddt(t1, eta)
    jscale(t1, t1, pr.sg)
    jsub(lbar, lbar, t1)
    jddt(t1, b1)
    jsub(lbar, lbar, t1)
    # minv = 1 + 2 eta mu + lbar mu^2 + d/dt mu
    jmul(t1, eta, mu)
    jscale(t1, t1, 2.0)
    t1[0] += 1.0
    jmul(t2, mu, mu)
    jmul(t2, lbar, t2)
    jadd(t1, t1, t2)
    jddt(t2, mu)
    jscale(t2, t2, pr.sg)
    jadd(minv, t1, t2)
    if minv[0] <= 0.0:
        return -3
    # z2 = b2 (b2 - 2 b3) - b4^2 - d/dt b4
    jscale(t1, b3, 2.0)
    jsub(t1, b2, t1)
    jmul(z2, b2, t1)
    jmul(t1, b4, b4)
    jsub(z2, z2, t1)
    jddt(t1, b4)
    jsub(z2, z2, t1)
    if z2[0] < -pr.tol_z:
        return -2
    zz = z2[0] if z2[0] > 0.0 else 0.0
    # xi = -sg (eta + mu lbar) - 0.5 d/dt log(minv)
    jmul(t1, mu, lbar)
    jadd(t1, eta, t1)
    jscale(t1, t1, -pr.sg)
    if jlog(t2, minv) != 0:
        return -3
    jddt(t3, t2)
    jscale(t3, t3, 0.5)
    jsub(xi, t1, t3)
    # lamp = lbar minv - xi^2 - d/dt xi
    jmul(lamp, lbar, minv)
    jmul(t1, xi, xi)
    jsub(lamp, lamp, t1)
    jddt(t1, xi)
    jsub(lamp, lamp, t1)
    if jsqrt(t1, minv) != 0:
        return -3
    cprime = pr.gamma_SB * pr.w2b * t1[0]
    w2[0] = lamp[0] - zz
    csb[0] = cprime - sqrt(2.0 * zz) * pr.omega_floquet \
        * cos(pr.omega_floquet * t + pr.phase)
    return 0

cdef int coefficients(Proto* pr, Ramp* rmp, double t, double* c) noexcept nogil:
    """c = (w2, csb, g1, g2, g3, g4); negative return = error code."""
    cdef double lj[NORD]
    cdef double av[4]
    cdef double lam, ld, ldd, q, w2
    if ramp_jet(rmp, t, lj) != 0:
        return -4
    lam = lj[0]
    c[2] = 0.0; c[3] = 0.0; c[4] = 0.0; c[5] = 0.0
    if pr.kind == 0:
        c[0] = pr.w2b * (1.0 + lam)
        c[1] = pr.gamma_SB * pr.w2b
        return 0
    if pr.kind == 1 or pr.kind == 2:
        ld = lj[1]
        if gauge_scalars(lam, pr.gamma_SB, pr.kind == 1, av) != 0:
            return -1
        c[0] = pr.w2b * (1.0 + lam)
        c[1] = pr.gamma_SB * pr.w2b
        c[2] = ld * av[0]
        c[3] = ld * av[1]
        c[4] = ld * av[2]
        c[5] = ld * av[3]
        return 0
    if pr.kind == 3:
        ld = lj[1]
        ldd = 2.0 * lj[2]
        q = lam * lam + 4.0 * pr.gamma_SB * pr.gamma_SB
        if q == 0.0:
            return -1
        w2 = pr.w2b * (1.0 + lam) \
            + 4.0 * pr.w2b * (ldd * q - 2.0 * lam * ld * ld) \
            / (pr.w2b * q * q + 4.0 * ld * ld)
        c[0] = w2
        c[1] = pr.gamma_SB * pr.w2b \
            * sqrt(1.0 + 4.0 * ld * ld / (pr.w2b * q * q))
        return 0
    # feff
    if fabs(lj[1]) < pr.eps_cut:
        c[0] = pr.w2b * (1.0 + lam)
        c[1] = pr.gamma_SB * pr.w2b
        return 0
    return ff_couplings(pr, lj, t, &c[0], &c[1])

# ---------------------------------------------------------------------------
# structured RHS
# ---------------------------------------------------------------------------

cdef void chain_rhs(int n, int b, double w2b, double gbb, const double* c,
                    const double* Y, double* out) noexcept nogil:
    """out = J H Y on (2n x 2n) row-major matrices."""
    cdef int m = 2 * n
    cdef int j, k
    cdef double w2 = c[0]
    cdef double csb = c[1]
    cdef double g1 = c[2], g2 = c[3], g3 = c[4], g4 = c[5]
    cdef const double* X = Y
    cdef const double* P = Y + n * m
    cdef double* ox = out
    cdef double* op = out + n * m
    for j in range(n):
        for k in range(m):
            ox[j * m + k] = P[j * m + k]
    for k in range(m):
        op[k] = -w2 * X[k] + csb * X[b * m + k]
    for j in range(1, n):
        for k in range(m):
            op[j * m + k] = -w2b * X[j * m + k]
    for j in range(1, n - 1):
        for k in range(m):
            op[j * m + k] += gbb * X[(j + 1) * m + k]
            op[(j + 1) * m + k] += gbb * X[j * m + k]
    for k in range(m):
        op[b * m + k] += csb * X[k]
    if g1 != 0.0 or g2 != 0.0 or g3 != 0.0 or g4 != 0.0:
        for k in range(m):
            ox[k] += g1 * X[k] + g3 * X[b * m + k]
            ox[b * m + k] += g2 * X[k] + g4 * X[b * m + k]
            op[k] -= g1 * P[k] + g2 * P[b * m + k]
            op[b * m + k] -= g3 * P[k] + g4 * P[b * m + k]

# ---------------------------------------------------------------------------
# Dormand-Prince driver
# ---------------------------------------------------------------------------

cdef double DP_C[7]
DP_C[0] = 0.0; DP_C[1] = 1.0 / 5.0; DP_C[2] = 3.0 / 10.0; DP_C[3] = 4.0 / 5.0
DP_C[4] = 8.0 / 9.0; DP_C[5] = 1.0; DP_C[6] = 1.0

cdef double DP_A[6][6]
DP_A[0][0] = 1.0 / 5.0
DP_A[1][0] = 3.0 / 40.0;        DP_A[1][1] = 9.0 / 40.0
DP_A[2][0] = 44.0 / 45.0;       DP_A[2][1] = -56.0 / 15.0;      DP_A[2][2] = 32.0 / 9.0
DP_A[3][0] = 19372.0 / 6561.0;  DP_A[3][1] = -25360.0 / 2187.0
DP_A[3][2] = 64448.0 / 6561.0;  DP_A[3][3] = -212.0 / 729.0
DP_A[4][0] = 9017.0 / 3168.0;   DP_A[4][1] = -355.0 / 33.0
DP_A[4][2] = 46732.0 / 5247.0;  DP_A[4][3] = 49.0 / 176.0
DP_A[4][4] = -5103.0 / 18656.0
DP_A[5][0] = 35.0 / 384.0;      DP_A[5][1] = 0.0
DP_A[5][2] = 500.0 / 1113.0;    DP_A[5][3] = 125.0 / 192.0
DP_A[5][4] = -2187.0 / 6784.0;  DP_A[5][5] = 11.0 / 84.0

cdef double DP_E[7]
DP_E[0] = 71.0 / 57600.0; DP_E[1] = 0.0; DP_E[2] = -71.0 / 16695.0
DP_E[3] = 71.0 / 1920.0; DP_E[4] = -17253.0 / 339200.0
DP_E[5] = 22.0 / 525.0; DP_E[6] = -1.0 / 40.0

cdef double err_norm(const double* e, const double* y0, const double* y1,
                     int size, double rtol, double atol) noexcept nogil:
    cdef double s = 0.0
    cdef double sc, m0, m1
    cdef int i
    for i in range(size):
        m0 = fabs(y0[i]); m1 = fabs(y1[i])
        sc = atol + rtol * (m0 if m0 > m1 else m1)
        s += (e[i] / sc) * (e[i] / sc)
    return sqrt(s / size)

cdef int _raise_coeff_error(int rc, double t) except -1:
    if rc == -1:
        raise SingularDenominator(f"gauge coefficients singular at t={t}")
    if rc == -2:
        raise NegativeZSquared(f"z^2 below -tol_z at t={t}")
    if rc == -3:
        raise SingularEta(f"fast-forward chain singular at t={t}")
    raise OutOfRange(f"time {t} outside the schedule domain")


def propagate_chain(spec, params, schedule, config, double t0, double t1,
                    m0, checkpoints, breakpoints=()):
    """Adaptive propagation of dM/dt = J H(t) M; mirrors _core_py.propagate_chain."""
    cdef Proto pr
    cdef Ramp rmp
    kind_map = {"ua": 0, "cd-exact": 1, "cd-weak": 2, "rwff": 3, "feff": 4}
    pr.kind = kind_map[spec.kind]
    pr.exact_ff = 1 if spec.coeff_mode == "exact" else 0
    pr.sg = 1.0 if spec.chain_signs == "conjugate" else -1.0
    pr.w2b = params.omega_B ** 2
    pr.gamma_SB = params.gamma_SB
    pr.omega_floquet = spec.omega_floquet
    pr.phase = spec.floquet_phase
    pr.eps_cut = spec.eps_reg * abs(schedule.speed)
    pr.tol_z = 1e-12 * pr.w2b

    breaks = np.asarray(schedule.breaks, dtype=float)
    dc = schedule._dcoef
    cdef int npieces = len(dc)
    if npieces > MAXPIECES:
        raise ValueError("schedule has more pieces than the kernel limit")
    rmp.npieces = npieces
    cdef int deg = max(r.shape[1] for r in dc)
    if deg > MAXDEG:
        raise ValueError("ramp polynomial degree exceeds kernel limit")
    rmp.deg = deg
    cdef int pc, oc, cc
    for pc in range(npieces):
        rmp.bends[pc] = breaks[pc]
        arr = np.zeros((NORD, MAXDEG))
        arr[:, : dc[pc].shape[1]] = dc[pc]
        for oc in range(NORD):
            for cc in range(MAXDEG):
                rmp.dcoef[pc][oc][cc] = arr[oc, cc]

    cdef int n = params.n_modes
    cdef int battach = params.attach_site
    cdef double gbb = params.gamma_BB * pr.w2b
    cdef int m = 2 * n
    cdef int size = m * m

    cdef double rtol = config.rel_tol
    cdef double atol = config.abs_tol
    cdef double max_step = config.max_step
    if pr.kind == 4:
        max_step = fmin(max_step,
                        2.0 * PI / (pr.omega_floquet * config.floquet_substeps))
    fixed = config.fixed_step
    cdef bint is_fixed = fixed is not None
    cdef double fixed_h = fixed if is_fixed else 0.0

    cdef cnp.ndarray[cnp.float64_t, ndim=2] Y = \
        np.ascontiguousarray(m0, dtype=np.float64).copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=3] Kst = np.zeros((7, m, m))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ytmp = np.zeros((m, m))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ynew = np.zeros((m, m))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] errm = np.zeros((m, m))
    cdef double* y = &Y[0, 0]
    cdef double* ks = &Kst[0, 0, 0]
    cdef double* yt = &ytmp[0, 0]
    cdef double* yn = &ynew[0, 0]
    cdef double* ee = &errm[0, 0]

    cdef double c[6]
    cdef int rc, i, j, stg, iev
    cdef double t = t0
    cdef double h, hn, span, enorm, factor, d0, d1, d2, h0, h1, sc, t_stop
    cdef long n_steps = 0

    events_py = sorted({float(s) for s in checkpoints if t0 < s < t1}
                       | {float(s) for s in breakpoints if t0 < s < t1}
                       | {float(t1)})
    cdef cnp.ndarray[cnp.float64_t, ndim=1] events = np.asarray(events_py)
    chk = [float(s) for s in checkpoints]
    mids = []

    rc = coefficients(&pr, &rmp, t, c)
    if rc < 0:
        _raise_coeff_error(rc, t)
    chain_rhs(n, battach, pr.w2b, gbb, c, y, ks)

    if is_fixed:
        hn = fixed_h
    else:
        d0 = 0.0; d1 = 0.0
        for i in range(size):
            sc = atol + rtol * fabs(y[i])
            d0 += (y[i] / sc) * (y[i] / sc)
            d1 += (ks[i] / sc) * (ks[i] / sc)
        d0 = sqrt(d0 / size); d1 = sqrt(d1 / size)
        h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        for i in range(size):
            yt[i] = y[i] + h0 * ks[i]
        rc = coefficients(&pr, &rmp, t + h0, c)
        if rc < 0:
            _raise_coeff_error(rc, t + h0)
        chain_rhs(n, battach, pr.w2b, gbb, c, yt, yn)
        d2 = 0.0
        for i in range(size):
            sc = atol + rtol * fabs(y[i])
            d2 += ((yn[i] - ks[i]) / sc) * ((yn[i] - ks[i]) / sc)
        d2 = sqrt(d2 / size) / h0
        if fmax(d1, d2) <= 1e-15:
            h1 = fmax(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / fmax(d1, d2)) ** 0.2
        hn = fmin(fmin(100.0 * h0, h1), max_step)

    for iev in range(events.shape[0]):
        t_stop = events[iev]
        if iev > 0:
            # re-evaluate the first stage: the RHS may switch branches
            # exactly at an event boundary
            rc = coefficients(&pr, &rmp, t, c)
            if rc < 0:
                _raise_coeff_error(rc, t)
            chain_rhs(n, battach, pr.w2b, gbb, c, y, ks)
        while t < t_stop:
            span = t_stop - t
            h = fmin(fmin(hn, max_step), span)
            if h <= fabs(t) * 1e-15 + 1e-300:
                raise StepSizeUnderflow(f"step size {h} underflowed at t={t}")
            # stage values accumulated in single passes; the 7th-stage
            # value equals the 5th-order solution (Dormand-Prince b = a7)
            for stg in range(1, 7):
                if stg == 1:
                    for i in range(size):
                        yt[i] = y[i] + (h * DP_A[0][0]) * ks[i]
                elif stg == 2:
                    for i in range(size):
                        yt[i] = y[i] + h * (DP_A[1][0] * ks[i]
                                            + DP_A[1][1] * ks[size + i])
                elif stg == 3:
                    for i in range(size):
                        yt[i] = y[i] + h * (DP_A[2][0] * ks[i]
                                            + DP_A[2][1] * ks[size + i]
                                            + DP_A[2][2] * ks[2 * size + i])
                elif stg == 4:
                    for i in range(size):
                        yt[i] = y[i] + h * (DP_A[3][0] * ks[i]
                                            + DP_A[3][1] * ks[size + i]
                                            + DP_A[3][2] * ks[2 * size + i]
                                            + DP_A[3][3] * ks[3 * size + i])
                elif stg == 5:
                    for i in range(size):
                        yt[i] = y[i] + h * (DP_A[4][0] * ks[i]
                                            + DP_A[4][1] * ks[size + i]
                                            + DP_A[4][2] * ks[2 * size + i]
                                            + DP_A[4][3] * ks[3 * size + i]
                                            + DP_A[4][4] * ks[4 * size + i])
                else:
                    for i in range(size):
                        yn[i] = y[i] + h * (DP_A[5][0] * ks[i]
                                            + DP_A[5][2] * ks[2 * size + i]
                                            + DP_A[5][3] * ks[3 * size + i]
                                            + DP_A[5][4] * ks[4 * size + i]
                                            + DP_A[5][5] * ks[5 * size + i])
                rc = coefficients(&pr, &rmp, t + DP_C[stg] * h, c)
                if rc < 0:
                    _raise_coeff_error(rc, t + DP_C[stg] * h)
                chain_rhs(n, battach, pr.w2b, gbb, c,
                          yn if stg == 6 else yt, ks + stg * size)
            if is_fixed:
                t = t + h if h < span else t_stop
                for i in range(size):
                    y[i] = yn[i]
                    ks[i] = ks[6 * size + i]
                n_steps += 1
                if len(mids) < len(chk) and t == chk[len(mids)]:
                    mids.append(Y.copy())
                continue
            enorm = 0.0
            for i in range(size):
                d0 = h * (DP_E[0] * ks[i] + DP_E[2] * ks[2 * size + i]
                          + DP_E[3] * ks[3 * size + i]
                          + DP_E[4] * ks[4 * size + i]
                          + DP_E[5] * ks[5 * size + i]
                          + DP_E[6] * ks[6 * size + i])
                d1 = fabs(y[i]); d2 = fabs(yn[i])
                sc = atol + rtol * (d1 if d1 > d2 else d2)
                enorm += (d0 / sc) * (d0 / sc)
            enorm = sqrt(enorm / size)
            if enorm <= 1.0:
                t = t + h if h < span else t_stop
                for i in range(size):
                    y[i] = yn[i]
                    ks[i] = ks[6 * size + i]
                n_steps += 1
                factor = 5.0 if enorm == 0.0 else fmin(5.0, 0.9 * enorm ** -0.2)
                hn = h * fmax(0.2, factor)
                if len(mids) < len(chk) and t == chk[len(mids)]:
                    mids.append(Y.copy())
            else:
                hn = h * fmax(0.2, 0.9 * enorm ** -0.2)
        if len(mids) < len(chk) and t == chk[len(mids)]:
            mids.append(Y.copy())
    return Y, mids, n_steps
