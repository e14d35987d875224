"""Compiled per-jump loops for the Monte Carlo engine."""
import math

import numpy as np
from numba import njit

# columns of the per-path statistics row
S_INT, Y_T, N_WINDOW, N_JUMPS, SUM_Z, N_BIG = range(6)
N_STATS = 6


@njit(nogil=True, cache=True)
def invert_survival(neg_log_u, fine, inv_h):
    """Size z with -log S(z) = neg_log_u.

    ``fine`` holds log z on a uniform grid of -log S with spacing 1/inv_h;
    beyond its end the largest tabulated size is returned.
    """
    f = neg_log_u * inv_h
    k = int(f)
    last = fine.shape[0] - 1
    if k >= last:
        return math.exp(fine[last])
    return math.exp(fine[k] + (f - k) * (fine[k + 1] - fine[k]))


@njit(nogil=True, cache=True)
def invert_many(u, fine, inv_h):
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        out[i] = invert_survival(-math.log(u[i]), fine, inv_h)
    return out


@njit(nogil=True, cache=True)
def log1p_scaled_expm1(c, x):
    """log(1 + c (exp(x) - 1)) for c >= 0, x >= 0; series for tiny x."""
    if x < 1e-5:
        # y = c (x + x^2/2 + x^3/6); log1p(y) to fourth order, error O(x^5)
        y = c * x * (1.0 + x * (0.5 + x / 6.0))
        return y * (1.0 - y * (0.5 - y * (1.0 / 3.0 - 0.25 * y)))
    return math.log1p(c * math.expm1(x))


@njit(nogil=True, cache=True)
def path_stats(
    times, usz, uacc, thin,
    fine, inv_h,
    lam, T, dt, nsteps, step_weight, A_coef, A_max,
    scales, window, big,
    row, logs,
):
    """Accumulate one path's jump functionals.

    The trapezoid integral of the jump part of Y over the grid is summed jump
    by jump: a unit jump at tau inside step j contributes
    exp(-lam (T - tau)) * (step_weight[j] - dt/2), where step_weight[j] is
    dt * sum_{k > j} exp(lam (T - t_k)).
    With ``thin`` set, a proposal is kept when uacc < exp((A_tau - A_max) z).
    For each scale c, logs[k] collects sum log(1 + c (exp(A_tau z) - 1)).
    """
    s_int = 0.0
    y_T = 0.0
    n_win = 0
    n_acc = 0
    n_big = 0
    sum_z = 0.0
    for k in range(scales.shape[0]):
        logs[k] = 0.0
    for i in range(times.shape[0]):
        tau = times[i]
        z = invert_survival(-math.log(usz[i]), fine, inv_h)
        e_T = math.exp(-lam * (T - tau))
        A = A_coef * (1.0 - e_T)
        if thin:
            if uacc[i] >= math.exp((A - A_max) * z):
                continue
        j = int(tau / dt)
        if j >= nsteps:
            j = nsteps - 1
        s_int += z * e_T * (step_weight[j] - 0.5 * dt)
        y_T += z * e_T
        n_acc += 1
        sum_z += z
        if tau < window:
            n_win += 1
            if z > big:
                n_big += 1
        for k in range(scales.shape[0]):
            c = scales[k]
            if c == 1.0:
                logs[k] += A * z
            elif c != 0.0:
                logs[k] += log1p_scaled_expm1(c, A * z)
    row[S_INT] = s_int
    row[Y_T] = y_T
    row[N_WINDOW] = n_win
    row[N_JUMPS] = n_acc
    row[SUM_Z] = sum_z
    row[N_BIG] = n_big
