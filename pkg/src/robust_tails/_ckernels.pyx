# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels (see ``_pykernels`` for the reference).

All loops run without the GIL so callers may split grids across threads.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, pow, exp, fabs, INFINITY, sqrt

cnp.import_array()

cdef enum:
    MAX_SEGMENTS = 1000

cdef double LOG2 = 0.6931471805599453

# Gauss-Kronrod 15-point rule (7-point Gauss embedded), nodes on [0, 1]
cdef double[8] XGK = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
]
cdef double[8] WGK = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
]
cdef double[4] WG = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
]


cdef inline double ftilde_c(int code, double alpha, double y) noexcept nogil:
    if code == 0:
        if y == 0.0:
            return 1.0
        return y * log(y) - y + 1.0
    elif code == 1:
        return (pow(y, alpha) - 1.0 - alpha * (y - 1.0)) / (alpha - 1.0)
    elif code == 2:
        return (y - 1.0) * (y - 1.0)
    elif code == 3:
        return (y - 1.0) * (y - 1.0) / (y + 1.0)
    elif code == 4:
        if y == 0.0:
            return INFINITY
        return (y - 1.0) * log(y)
    else:
        if y == 0.0:
            return LOG2
        return y * log(y) - (1.0 + y) * log1p(y) + (1.0 + y) * LOG2


cdef inline double constraint_c(int code, double alpha, double p, double y, double delta) noexcept nogil:
    cdef double a = 1.0 - p * (y - 1.0) / (1.0 - p)
    if a < 0.0:
        a = 0.0
    return p * ftilde_c(code, alpha, y) + (1.0 - p) * ftilde_c(code, alpha, a) - delta


def ftilde(int code, double alpha, y):
    """Scalar/array evaluation of the tilted generator (for parity tests)."""
    cdef double[::1] arr = np.ascontiguousarray(np.atleast_1d(y), dtype=np.float64)
    out = np.empty(arr.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(arr.shape[0]):
            o[i] = ftilde_c(code, alpha, arr[i])
    return out if np.ndim(y) else float(out[0])


def solve_bx(int code, double alpha, p, double delta, int max_iter=200):
    """Bisection for the upper likelihood-ratio level; see ``_pykernels.solve_bx``."""
    cdef double[::1] pv = np.ascontiguousarray(np.atleast_1d(p), dtype=np.float64)
    cdef Py_ssize_t n = pv.shape[0]
    b = np.empty(n)
    status = np.zeros(n, dtype=np.int32)
    cdef double[::1] bv = b
    cdef int[::1] sv = status
    cdef Py_ssize_t i
    cdef int it
    cdef double lo, hi, mid, pi
    with nogil:
        for i in range(n):
            pi = pv[i]
            hi = 1.0 / pi
            if constraint_c(code, alpha, pi, hi, delta) <= 0.0:
                bv[i] = hi
                sv[i] = 1
                continue
            lo = 1.0
            for it in range(max_iter):
                if hi - lo <= 1e-15 * hi:
                    break
                mid = 0.5 * (lo + hi)
                if constraint_c(code, alpha, pi, mid, delta) < 0.0:
                    lo = mid
                else:
                    hi = mid
            bv[i] = 0.5 * (lo + hi)
    return b, status


cdef struct GPD:
    double u
    double p_u
    double beta
    double scale
    double s
    double sa


cdef inline double surv_c(GPD* g, double t) noexcept nogil:
    return g.p_u * exp(-g.beta * log1p((t - g.u) / g.scale))


cdef inline double slack_integrand(GPD* g, double t) noexcept nogil:
    return g.s * pow(t, g.s - 1.0) * (g.sa - surv_c(g, t))


cdef void gk15(GPD* g, double a, double b, double* result, double* err) noexcept nogil:
    cdef double c = 0.5 * (a + b)
    cdef double h = 0.5 * (b - a)
    cdef double fc = slack_integrand(g, c)
    cdef double resk = fc * WGK[7]
    cdef double resg = fc * WG[3]
    cdef double f1, f2, dx
    cdef int j
    for j in range(7):
        dx = h * XGK[j]
        f1 = slack_integrand(g, c - dx)
        f2 = slack_integrand(g, c + dx)
        resk += WGK[j] * (f1 + f2)
        if j % 2 == 1:
            resg += WG[j // 2] * (f1 + f2)
    result[0] = resk * h
    err[0] = fabs((resk - resg) * h)


cdef double adaptive_slack(GPD* g, double a, double b, double epsrel) noexcept nogil:
    """Globally adaptive GK15 on [a, b]: split the worst segment until converged."""
    cdef double[MAX_SEGMENTS] lo_s
    cdef double[MAX_SEGMENTS] hi_s
    cdef double[MAX_SEGMENTS] val_s
    cdef double[MAX_SEGMENTS] err_s
    cdef int nseg = 1
    cdef int i, worst
    cdef double total, toterr, mid, r1, e1, r2, e2, wmax
    gk15(g, a, b, &val_s[0], &err_s[0])
    lo_s[0] = a
    hi_s[0] = b
    while True:
        total = 0.0
        toterr = 0.0
        worst = 0
        wmax = -1.0
        for i in range(nseg):
            total += val_s[i]
            toterr += err_s[i]
            if err_s[i] > wmax:
                wmax = err_s[i]
                worst = i
        if toterr <= epsrel * fabs(total) or toterr <= 1e-300 or nseg >= MAX_SEGMENTS:
            return total
        mid = 0.5 * (lo_s[worst] + hi_s[worst])
        if mid <= lo_s[worst] or mid >= hi_s[worst]:
            return total
        gk15(g, lo_s[worst], mid, &r1, &e1)
        gk15(g, mid, hi_s[worst], &r2, &e2)
        lo_s[nseg] = mid
        hi_s[nseg] = hi_s[worst]
        val_s[nseg] = r2
        err_s[nseg] = e2
        hi_s[worst] = mid
        val_s[worst] = r1
        err_s[worst] = e1
        nseg += 1


cdef inline double slack_c(GPD* g, double x, double a) noexcept nogil:
    if a >= x:
        return 0.0
    g.sa = surv_c(g, a)
    return adaptive_slack(g, a, x, 1e-12)


def slackness(double u, double p_u, double beta, double sigma, double s, double x, double a):
    """Slackness integral; see ``_pykernels.slackness``."""
    cdef GPD g
    g.u = u
    g.p_u = p_u
    g.beta = beta
    g.scale = beta * sigma
    g.s = s
    cdef double out
    with nogil:
        out = slack_c(&g, x, a)
    return out


def solve_lower(double u, double p_u, double beta, double sigma, double s, x, double delta,
                int max_iter=200):
    """Bisection for the lower end of the moved region; see ``_pykernels.solve_lower``."""
    cdef double[::1] xv = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    out = np.empty(n)
    status = np.zeros(n, dtype=np.int32)
    cdef double[::1] ov = out
    cdef int[::1] sv = status
    cdef GPD g
    g.u = u
    g.p_u = p_u
    g.beta = beta
    g.scale = beta * sigma
    g.s = s
    cdef Py_ssize_t i
    cdef int it
    cdef double lo, hi, mid, xi
    with nogil:
        for i in range(n):
            xi = xv[i]
            if slack_c(&g, xi, u) <= delta:
                ov[i] = u
                sv[i] = 1
                continue
            lo = u
            hi = xi
            for it in range(max_iter):
                if hi - lo <= 2e-15 * hi:
                    break
                mid = 0.5 * (lo + hi)
                if slack_c(&g, xi, mid) > delta:
                    lo = mid
                else:
                    hi = mid
            ov[i] = 0.5 * (lo + hi)
    return out, status


def knn_within(values, int k):
    """k-th nearest other-value distance for sorted ``values``."""
    cdef double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0]
    if not (1 <= k < n):
        raise ValueError("need 1 <= k < n")
    out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t i, left, right
    cdef int j
    cdef double dl, dr, d
    with nogil:
        for i in range(n):
            left = i - 1
            right = i + 1
            d = 0.0
            for j in range(k):
                dl = v[i] - v[left] if left >= 0 else INFINITY
                dr = v[right] - v[i] if right < n else INFINITY
                if dl <= dr:
                    d = dl
                    left -= 1
                else:
                    d = dr
                    right += 1
            o[i] = d
    return out


def knn_cross(pool, queries, int k):
    """k-th nearest distance from each query into the sorted ``pool``."""
    cdef double[::1] pv = np.ascontiguousarray(pool, dtype=np.float64)
    cdef double[::1] qv = np.ascontiguousarray(queries, dtype=np.float64)
    cdef Py_ssize_t m = pv.shape[0]
    cdef Py_ssize_t nq = qv.shape[0]
    if not (1 <= k <= m):
        raise ValueError("need 1 <= k <= len(pool)")
    out = np.empty(nq)
    cdef double[::1] o = out
    cdef Py_ssize_t i, left, right, lo, hi, mid
    cdef int j
    cdef double dl, dr, d, q
    with nogil:
        for i in range(nq):
            q = qv[i]
            lo = 0
            hi = m
            while lo < hi:
                mid = (lo + hi) // 2
                if pv[mid] < q:
                    lo = mid + 1
                else:
                    hi = mid
            left = lo - 1
            right = lo
            d = 0.0
            for j in range(k):
                dl = q - pv[left] if left >= 0 else INFINITY
                dr = pv[right] - q if right < m else INFINITY
                if dl <= dr:
                    d = dl
                    left -= 1
                else:
                    d = dr
                    right += 1
            o[i] = d
    return out
