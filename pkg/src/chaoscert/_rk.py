"""Adaptive Dormand-Prince 5(4) integration core with dense output.

Single-source kernels: every function here is written in nopython-compatible
style and gets compiled by :mod:`chaoscert.backend` when the numba backend is
active.  The same source runs uncompiled as the pure-numpy fallback and for
systems whose right-hand side is a plain Python callable.

The right-hand side signature is ``rhs(y, params, out)`` with ``y`` and
``out`` 1-D float64 arrays of equal length and ``params`` a 1-D float64
array.  Time never appears: the library only treats autonomous systems.

Dense output is the standard quartic continuous extension of the pair: for a
step ``(t0, y0, h)`` with stages ``K`` (7 x n),

    y(t0 + theta*h) = y0 + h * sum_s K[s] * sum_j P[s, j] * theta**(j+1).

Status codes returned by the stepper loop:

    0  reached the requested end time
    1  step budget exhausted
    2  non-finite value in state or right-hand side
    3  step size underflow
    4  state norm exceeded the escape radius
"""

import numpy as np

from . import backend

# Dormand-Prince 5(4) tableau (FSAL: stage 7 equals the next step's stage 1).
RK_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])

RK_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    ]
)

RK_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])

# Difference between the 5th- and embedded 4th-order solutions.
RK_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

# Quartic dense-output coefficients (Shampine's interpolant for the pair).
RK_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

N_STAGES = 7
P_ORDER = 4

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
# PI step control exponents for a 5th-order error estimate (Hairer's dopri5).
BETA_PI = 0.04
ALPHA_PI = 0.2 - 0.75 * BETA_PI

STATUS_OK = 0
STATUS_MAX_STEPS = 1
STATUS_NONFINITE = 2
STATUS_UNDERFLOW = 3
STATUS_ESCAPE = 4


def _integrate_impl(rhs, params, y0, t0, t1, rtol, atol, max_step, max_steps, h_start, escape_radius):
    """Adaptive DP5(4) loop from t0 to t1, recording per-step dense stages.

    Returns (status, n_steps, ts, ys, ks) where ts has n_steps+1 entries,
    ys is (n_steps+1, n) and ks is (n_steps, 7, n).  On a failure status the
    arrays hold the portion integrated so far.
    """
    n = y0.shape[0]
    span = t1 - t0
    direction = 1.0 if span >= 0.0 else -1.0

    cap = 256
    ts = np.empty(cap + 1)
    ys = np.empty((cap + 1, n))
    ks = np.empty((cap, N_STAGES, n))
    ts[0] = t0
    for i in range(n):
        ys[0, i] = y0[i]

    if span == 0.0:
        return STATUS_OK, 0, ts, ys, ks

    f0 = np.empty(n)
    rhs(y0, params, f0)
    for i in range(n):
        if not np.isfinite(f0[i]):
            return STATUS_NONFINITE, 0, ts, ys, ks

    if h_start > 0.0:
        h = min(h_start, max_step)
    else:
        # standard first-step heuristic from the scaled state / rhs magnitudes
        d0 = 0.0
        d1 = 0.0
        for i in range(n):
            sc = atol + rtol * abs(y0[i])
            q0 = y0[i] / sc
            q1 = f0[i] / sc
            d0 += q0 * q0
            d1 += q1 * q1
        d0 = np.sqrt(d0 / n)
        d1 = np.sqrt(d1 / n)
        if d0 < 1e-5 or d1 < 1e-5:
            h = 1e-6
        else:
            h = 0.01 * d0 / d1
        ytrial = np.empty(n)
        for i in range(n):
            ytrial[i] = y0[i] + h * direction * f0[i]
        ftrial = np.empty(n)
        rhs(ytrial, params, ftrial)
        d2 = 0.0
        for i in range(n):
            sc = atol + rtol * abs(y0[i])
            q = (ftrial[i] - f0[i]) / sc
            d2 += q * q
        d2 = np.sqrt(d2 / n) / h
        dm = d1 if d1 > d2 else d2
        if dm <= 1e-15:
            h1 = max(1e-6, h * 1e-3)
        else:
            h1 = (0.01 / dm) ** 0.2
        h = min(100.0 * h, h1)
        if h > max_step:
            h = max_step
    if h > abs(span):
        h = abs(span)

    t = t0
    y = y0.copy()
    err_prev = 1.0
    nstep = 0
    ytmp = np.empty(n)
    ynew = np.empty(n)
    errv = np.empty(n)
    K = np.empty((N_STAGES, n))

    while direction * (t1 - t) > 0.0:
        if nstep >= max_steps:
            return STATUS_MAX_STEPS, nstep, ts, ys, ks

        tiny = 16.0 * np.abs(t) * 2.220446049250313e-16
        if h < tiny and h < 1e-14:
            return STATUS_UNDERFLOW, nstep, ts, ys, ks

        if h > direction * (t1 - t):
            h = direction * (t1 - t)
        hs = h * direction

        for i in range(n):
            K[0, i] = f0[i]
        for s in range(1, 6):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += RK_A[s, j] * K[j, i]
                ytmp[i] = y[i] + hs * acc
            rhs(ytmp, params, K[s])
        for i in range(n):
            acc = 0.0
            for j in range(6):
                acc += RK_B[j] * K[j, i]
            ynew[i] = y[i] + hs * acc
        rhs(ynew, params, K[6])

        finite = True
        for i in range(n):
            if not (np.isfinite(ynew[i]) and np.isfinite(K[6, i])):
                finite = False
        if not finite:
            return STATUS_NONFINITE, nstep, ts, ys, ks

        for i in range(n):
            acc = 0.0
            for j in range(N_STAGES):
                acc += RK_E[j] * K[j, i]
            errv[i] = hs * acc
        err = 0.0
        for i in range(n):
            ay = abs(y[i])
            ay1 = abs(ynew[i])
            if ay1 > ay:
                ay = ay1
            sc = atol + rtol * ay
            q = errv[i] / sc
            err += q * q
        err = np.sqrt(err / n)

        if err <= 1.0:
            # accept
            if nstep >= cap:
                cap2 = cap * 2
                ts2 = np.empty(cap2 + 1)
                ys2 = np.empty((cap2 + 1, n))
                ks2 = np.empty((cap2, N_STAGES, n))
                for a in range(nstep + 1):
                    ts2[a] = ts[a]
                    for i in range(n):
                        ys2[a, i] = ys[a, i]
                for a in range(nstep):
                    for s in range(N_STAGES):
                        for i in range(n):
                            ks2[a, s, i] = ks[a, s, i]
                ts = ts2
                ys = ys2
                ks = ks2
                cap = cap2
            for s in range(N_STAGES):
                for i in range(n):
                    ks[nstep, s, i] = K[s, i]
            t = t + hs
            for i in range(n):
                y[i] = ynew[i]
                f0[i] = K[6, i]
            nstep += 1
            ts[nstep] = t
            for i in range(n):
                ys[nstep, i] = y[i]

            big = 0.0
            for i in range(n):
                ay = abs(y[i])
                if ay > big:
                    big = ay
            if big > escape_radius:
                return STATUS_ESCAPE, nstep, ts, ys, ks

            if err < 1e-12:
                factor = MAX_FACTOR
            else:
                factor = SAFETY * err ** (-ALPHA_PI) * err_prev ** BETA_PI
                if factor > MAX_FACTOR:
                    factor = MAX_FACTOR
                elif factor < MIN_FACTOR:
                    factor = MIN_FACTOR
            h = min(h * factor, max_step)
            err_prev = err if err > 1e-12 else 1e-12
        else:
            factor = SAFETY * err ** (-0.2)
            if factor < MIN_FACTOR:
                factor = MIN_FACTOR
            h = h * factor

    return STATUS_OK, nstep, ts, ys, ks


def _fd_jac_template(field):
    """Central-difference Jacobian builder, step 1e-6 * max(1, |x_k|)."""

    def jac(x, params, out):
        n = x.shape[0]
        fp = np.empty(n)
        fm = np.empty(n)
        xp = x.copy()
        for k in range(n):
            h = 1e-6 * max(1.0, abs(x[k]))
            xp[k] = x[k] + h
            field(xp, params, fp)
            xp[k] = x[k] - h
            field(xp, params, fm)
            xp[k] = x[k]
            for i in range(n):
                out[i, k] = (fp[i] - fm[i]) / (2.0 * h)

    return jac


def _var_rhs_template(field, jac):
    """Augmented rhs for state + 3x3 variational matrix (row-major in y[3:])."""

    def rhs(y, params, out):
        x = y[0:3]
        field(x, params, out[0:3])
        J = np.empty((3, 3))
        jac(x, params, J)
        for i in range(3):
            for j in range(3):
                acc = 0.0
                for k in range(3):
                    acc += J[i, k] * y[3 + 3 * k + j]
                out[3 + 3 * i + j] = acc

    return rhs


# Compiled instantiation of the stepper loop (used with kernel-backed systems)
# and the identical plain-python instantiation (used for everything else).
integrate_py = _integrate_impl
integrate_nb = backend.kernel(_integrate_impl) if backend.NUMBA_ENABLED else _integrate_impl


def make_fd_jac(field, compiled: bool):
    fn = _fd_jac_template(field)
    return backend.kernel_dyn(fn) if compiled else fn


def make_var_rhs(field, jac, compiled: bool):
    fn = _var_rhs_template(field, jac)
    return backend.kernel_dyn(fn) if compiled else fn


def dense_eval(t0: float, h: float, y0: np.ndarray, k: np.ndarray, t):
    """Evaluate the dense interpolant of one step at times ``t`` (scalar or array)."""
    theta = (np.asarray(t) - t0) / h
    tt = np.atleast_1d(theta)
    powers = np.vstack([tt ** (j + 1) for j in range(P_ORDER)])  # (4, m)
    q = RK_P @ powers  # (7, m)
    out = y0[None, :] + h * (q.T @ k)  # (m, n)
    if np.isscalar(t) or np.asarray(t).ndim == 0:
        return out[0]
    return out


def dense_deriv(t0: float, h: float, k: np.ndarray, t):
    """Time derivative of the dense interpolant at times ``t``."""
    theta = (np.asarray(t) - t0) / h
    tt = np.atleast_1d(theta)
    powers = np.vstack([(j + 1) * tt ** j for j in range(P_ORDER)])
    q = RK_P @ powers
    out = q.T @ k
    if np.isscalar(t) or np.asarray(t).ndim == 0:
        return out[0]
    return out
