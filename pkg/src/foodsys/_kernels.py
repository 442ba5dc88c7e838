"""Hot numerical kernels: model right-hand sides, the embedded Runge-Kutta
stepper and the observation log-likelihood.

Every function here is compiled with numba when available. Setting the
environment variable ``FOODSYS_NO_NUMBA=1`` (or uninstalling numba) selects
a pure-numpy fallback that runs the identical source, so both paths produce
bit-identical results; see ``benchmarks/bench_kernels.py`` for the speed
difference.

Parameter packing (must match the dataclass field orders in ``model``):
  dimensional  p12 = (a, b, e, f, g, w, s, k, h, m, q, r)
  dimensionless p8 = (alpha, beta, delta, omega, gamma, kappa, mu, rho)

Kernels never raise: singular states yield NaN derivatives and the stepper
converts those into rejected steps or failure statuses.
"""

from __future__ import annotations

import math
import os

import numpy as np

_flag = os.environ.get("FOODSYS_NO_NUMBA", "").strip().lower()
NUMBA_REQUESTED = _flag in ("", "0", "false", "no")

if NUMBA_REQUESTED:
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dependency
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False

if NUMBA_ENABLED:
    def njit(func):
        return _njit(cache=True, nogil=True)(func)
else:
    def njit(func):
        return func

RHS_DIMENSIONLESS = 0
RHS_DIMENSIONAL = 1

# Integration statuses
OK = 0
MAX_STEPS_EXCEEDED = 1
STEP_UNDERFLOW = 2

_DENOM_FLOOR = 1e-300
_LOG_2PI = math.log(2.0 * math.pi)


@njit
def rhs_dimensionless_into(y, p, out):
    v = y[0]
    x = y[1]
    yd = y[2]
    z = y[3]
    if x <= 0.0 or z <= 0.0 or not (np.isfinite(x) and np.isfinite(z)):
        out[0] = np.nan
        out[1] = np.nan
        out[2] = np.nan
        out[3] = np.nan
        return
    denom = yd + x
    consumption = 0.0 if denom < _DENOM_FLOOR else p[4] * x * yd / denom
    out[0] = v * (p[0] * z - 1.0) - p[1] * v
    out[1] = p[2] * v - p[3] * x - consumption + p[5] * (p[4] - p[2] * v)
    out[2] = p[6] * (1.0 / z - yd)
    out[3] = p[7] * z * (yd / x - 1.0)


@njit
def rhs_dimensional_into(y, p, out):
    C = y[0]
    I = y[1]
    D = y[2]
    P = y[3]
    if I <= 0.0 or P <= 0.0 or not (np.isfinite(I) and np.isfinite(P)):
        out[0] = np.nan
        out[1] = np.nan
        out[2] = np.nan
        out[3] = np.nan
        return
    denom = p[6] * D + I
    consumption = 0.0 if denom < _DENOM_FLOOR else I * D / denom
    production = p[3] * p[4] * C
    out[0] = p[0] * C * (P / p[1] - 1.0) - p[2] * C
    out[1] = production - p[5] * I - consumption + p[7] * (p[8] - production)
    out[2] = p[9] * (p[8] * p[10] / P - D)
    out[3] = p[11] * P * (p[6] * D / I - 1.0)


@njit
def _eval_rhs(rhs_id, y, p, out):
    if rhs_id == RHS_DIMENSIONLESS:
        rhs_dimensionless_into(y, p, out)
    else:
        rhs_dimensional_into(y, p, out)


@njit
def rk45_solve(rhs_id, p, y0, t0, obs_times, rel_tol, abs_tol, h0, min_step,
               max_steps, enforce_positive):
    """Dormand-Prince 5(4) with step-size control, landing exactly on each
    observation time. Returns (status, fail_time, n_steps, states).

    The 5th-order solution is propagated; the embedded 4th-order solution
    supplies the local error estimate, kept below abs_tol + rel_tol*|y| in
    a scaled RMS norm. When ``enforce_positive`` a step producing any
    non-positive component is rejected and retried with half the step.
    """
    n_obs = obs_times.shape[0]
    out = np.empty((n_obs, 4))
    t = t0
    y = y0.copy()

    i_obs = 0
    while i_obs < n_obs and obs_times[i_obs] <= t:
        out[i_obs, :] = y
        i_obs += 1
    if i_obs >= n_obs:
        return OK, t, 0, out

    t_end = obs_times[n_obs - 1]
    h = h0 if h0 > 0.0 else 0.01 * (t_end - t0)

    k1 = np.empty(4)
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)
    k5 = np.empty(4)
    k6 = np.empty(4)
    k7 = np.empty(4)
    ytmp = np.empty(4)
    ynew = np.empty(4)

    _eval_rhs(rhs_id, y, p, k1)
    n_steps = 0

    while i_obs < n_obs:
        if n_steps >= max_steps:
            return MAX_STEPS_EXCEEDED, t, n_steps, out
        n_steps += 1

        target = obs_times[i_obs]
        landing = t + h >= target
        ht = target - t if landing else h

        for j in range(4):
            ytmp[j] = y[j] + ht * 0.2 * k1[j]
        _eval_rhs(rhs_id, ytmp, p, k2)
        for j in range(4):
            ytmp[j] = y[j] + ht * (3.0 / 40.0 * k1[j] + 9.0 / 40.0 * k2[j])
        _eval_rhs(rhs_id, ytmp, p, k3)
        for j in range(4):
            ytmp[j] = y[j] + ht * (44.0 / 45.0 * k1[j] - 56.0 / 15.0 * k2[j]
                                   + 32.0 / 9.0 * k3[j])
        _eval_rhs(rhs_id, ytmp, p, k4)
        for j in range(4):
            ytmp[j] = y[j] + ht * (19372.0 / 6561.0 * k1[j] - 25360.0 / 2187.0 * k2[j]
                                   + 64448.0 / 6561.0 * k3[j] - 212.0 / 729.0 * k4[j])
        _eval_rhs(rhs_id, ytmp, p, k5)
        for j in range(4):
            ytmp[j] = y[j] + ht * (9017.0 / 3168.0 * k1[j] - 355.0 / 33.0 * k2[j]
                                   + 46732.0 / 5247.0 * k3[j] + 49.0 / 176.0 * k4[j]
                                   - 5103.0 / 18656.0 * k5[j])
        _eval_rhs(rhs_id, ytmp, p, k6)
        for j in range(4):
            ynew[j] = y[j] + ht * (35.0 / 384.0 * k1[j] + 500.0 / 1113.0 * k3[j]
                                   + 125.0 / 192.0 * k4[j] - 2187.0 / 6784.0 * k5[j]
                                   + 11.0 / 84.0 * k6[j])
        _eval_rhs(rhs_id, ynew, p, k7)

        # Embedded error estimate, scaled RMS against abs_tol + rel_tol*|y|.
        err = 0.0
        ok = True
        for j in range(4):
            if not np.isfinite(ynew[j]) or not np.isfinite(k7[j]):
                ok = False
                break
            e = ht * (71.0 / 57600.0 * k1[j] - 71.0 / 16695.0 * k3[j]
                      + 71.0 / 1920.0 * k4[j] - 17253.0 / 339200.0 * k5[j]
                      + 22.0 / 525.0 * k6[j] - 1.0 / 40.0 * k7[j])
            ay = abs(y[j])
            an = abs(ynew[j])
            sc = abs_tol + rel_tol * (ay if ay > an else an)
            err += (e / sc) ** 2
        err = math.sqrt(err / 4.0)

        if not ok or not np.isfinite(err):
            h = 0.5 * ht
            if h < min_step:
                return STEP_UNDERFLOW, t, n_steps, out
            continue

        if enforce_positive and ok:
            for j in range(4):
                if ynew[j] < 0.0:
                    ok = False
                    break
            if not ok:
                h = 0.5 * ht
                if h < min_step:
                    return STEP_UNDERFLOW, t, n_steps, out
                continue

        if err <= 1.0:
            t = target if landing else t + ht
            for j in range(4):
                y[j] = ynew[j]
                k1[j] = k7[j]
            if landing:
                out[i_obs, :] = y
                i_obs += 1
                # Skip duplicates of the same output time.
                while i_obs < n_obs and obs_times[i_obs] == t:
                    out[i_obs, :] = y
                    i_obs += 1
            if not landing:
                fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                h = ht * fac
        else:
            fac = max(0.2, 0.9 * err ** -0.2)
            h = ht * fac
            if h < min_step:
                return STEP_UNDERFLOW, t, n_steps, out

    return OK, t, n_steps, out


@njit
def model_observables(p12, y0, t_obs, rel_tol, abs_tol, h0, min_step, max_steps):
    """Integrate the dimensional model and assemble the observable series.

    Returns (status, fail_time, M) with M of shape (7, n): rows are
    capital, inventory, price, production f*g*C, imports k*h,
    exports k*f*g*C, and total inflow (production + imports - exports).
    """
    status, fail_t, _, states = rk45_solve(
        RHS_DIMENSIONAL, p12, y0, t_obs[0], t_obs, rel_tol, abs_tol, h0,
        min_step, max_steps, True,
    )
    n = t_obs.shape[0]
    M = np.empty((7, n))
    fg = p12[3] * p12[4]
    k = p12[7]
    kh = k * p12[8]
    for i in range(n):
        C = states[i, 0]
        M[0, i] = C
        M[1, i] = states[i, 1]
        M[2, i] = states[i, 3]
        production = fg * C
        M[3, i] = production
        M[4, i] = kh
        M[5, i] = k * production
        M[6, i] = production + kh - k * production
    return status, fail_t, M


@njit
def obs_loglik(M, data, scales, supplies_is_state):
    """Sum of lognormal log-densities of the observed series given model
    observables M (from :func:`model_observables`).

    ``data`` rows: herd, new supplies, price, production, imports, exports;
    NaN marks a missing cell and contributes zero. ``scales`` are the six
    log-space noise scales in the same row order.
    """
    n = data.shape[1]
    total = 0.0
    for series in range(6):
        sd = scales[series]
        if sd <= 0.0:
            return -np.inf
        if series == 0:
            row = 0
        elif series == 1:
            row = 1 if supplies_is_state else 6
        elif series == 2:
            row = 2
        else:
            row = series
        const = -math.log(sd) - 0.5 * _LOG_2PI
        inv2 = 0.5 / (sd * sd)
        for i in range(n):
            obs = data[series, i]
            if np.isnan(obs):
                continue
            mval = M[row, i]
            if not np.isfinite(mval) or mval <= 0.0 or obs <= 0.0:
                return -np.inf
            lo = math.log(obs)
            resid = lo - math.log(mval)
            total += const - lo - resid * resid * inv2
    return total


def warm_up() -> None:
    """Trigger JIT compilation of every kernel (no-op on the numpy path)."""
    p8 = np.array([1.1, 0.2, 2.0, 1.5, 5.0, 0.4, 1.0, 1.0])
    p12 = np.array([0.2, 140.0, 0.033, 1.0, 80.0, 0.33, 1.0, 0.5, 100.0, 0.5, 160.0, 0.5])
    y = np.array([1.0, 1.0, 1.0, 1.0])
    out = np.empty(4)
    rhs_dimensionless_into(y, p8, out)
    rhs_dimensional_into(y, p12, out)
    obs = np.array([0.0, 1.0])
    rk45_solve(RHS_DIMENSIONLESS, p8, y, 0.0, obs, 1e-8, 1e-10, 0.0, 1e-12, 10000, True)
    y_dim = np.array([10.0, 200.0, 100.0, 150.0])
    status, fail_t, M = model_observables(p12, y_dim, obs, 1e-8, 1e-10, 0.0, 1e-12, 10000)
    data = np.full((6, 2), np.nan)
    data[2, 0] = 150.0
    obs_loglik(M, data, np.full(6, 0.1), False)
