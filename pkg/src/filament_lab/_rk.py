"""Compiled DOP853 stepper for the two profile systems.

The Butcher tables, error estimator and dense-output coefficients are
scipy's (``scipy.integrate._ivp.dop853_coefficients``); the step-size
controller mirrors ``scipy.integrate.DOP853``. Only the loop is compiled,
which removes the per-step Python overhead that dominates on the long,
oscillatory tails of these systems.
"""
from __future__ import annotations

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _c

CURVE = 0
PROFILE = 1

_A = np.ascontiguousarray(_c.A, dtype=np.float64)
_B = np.ascontiguousarray(_c.B, dtype=np.float64)
_C = np.ascontiguousarray(_c.C, dtype=np.float64)
_E3 = np.ascontiguousarray(_c.E3, dtype=np.float64)
_E5 = np.ascontiguousarray(_c.E5, dtype=np.float64)
_D = np.ascontiguousarray(_c.D, dtype=np.float64)
_NS = _c.N_STAGES
_NSX = _c.N_STAGES_EXTENDED

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


@njit(cache=True)
def _rhs(kind, x, y, par, out):
    if kind == 0:
        a = par[0]
        g0, g1, g2, t0, t1, t2 = y[0], y[1], y[2], y[3], y[4], y[5]
        p0 = g0 - a * g1
        p1 = a * g0 + g1
        out[0] = t0
        out[1] = t1
        out[2] = t2
        out[3] = 0.5 * (p1 * t2 - g2 * t1)
        out[4] = 0.5 * (g2 * t0 - p0 * t2)
        out[5] = 0.5 * (p0 * t1 - p1 * t0)
    else:
        A = par[0]
        fr, fi, pr, pi = y[0], y[1], y[2], y[3]
        m = 0.5 * (fr * fr + fi * fi - A)
        out[0] = pr
        out[1] = pi
        out[2] = 0.5 * x * pi - m * fr
        out[3] = -0.5 * x * pr - m * fi


@njit(cache=True)
def _norm_init(y, f, rtol, atol):
    n = y.size
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + abs(y[i]) * rtol
        d0 += (y[i] / sc) ** 2
        d1 += (f[i] / sc) ** 2
    return np.sqrt(d0 / n), np.sqrt(d1 / n)


@njit(cache=True)
def _integrate(kind, par, y0, t0, t_end, rtol, atol, max_steps, A, B, C, E3, E5, D):
    n = y0.size
    direction = 1.0 if t_end >= t0 else -1.0
    K = np.zeros((16, n))
    cap = 4096
    ts = np.empty(cap + 1)
    ys = np.empty((cap + 1, n))
    Fs = np.empty((cap, 7, n))
    y = y0.copy()
    f = np.empty(n)
    _rhs(kind, t0, y, par, f)
    ts[0] = t0
    ys[0] = y
    t = t0

    # initial step, Hairer's heuristic as in scipy.integrate._ivp.common
    d0, d1 = _norm_init(y, f, rtol, atol)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, abs(t_end - t0))
    y1 = y + h0 * direction * f
    f1 = np.empty(n)
    _rhs(kind, t0 + h0 * direction, y1, par, f1)
    d2 = 0.0
    for i in range(n):
        sc = atol + abs(y[i]) * rtol
        d2 += ((f1[i] - f[i]) / sc) ** 2
    d2 = np.sqrt(d2 / n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    h_abs = min(100 * h0, h1)

    ynew = np.empty(n)
    fnew = np.empty(n)
    ytmp = np.empty(n)
    nstep = 0
    status = 0
    while direction * (t_end - t) > 0:
        if nstep >= max_steps:
            status = 2
            break
        if nstep >= cap:
            ts2 = np.empty(2 * cap + 1)
            ys2 = np.empty((2 * cap + 1, n))
            Fs2 = np.empty((2 * cap, 7, n))
            ts2[: cap + 1] = ts
            ys2[: cap + 1] = ys
            Fs2[:cap] = Fs
            ts, ys, Fs = ts2, ys2, Fs2
            cap *= 2
        min_step = 10.0 * abs(np.nextafter(t, direction * np.inf) - t)
        if h_abs < min_step:
            h_abs = min_step
        accepted = False
        rejected = False
        while not accepted:
            if h_abs < min_step:
                status = 1
                break
            h = h_abs * direction
            t_new = t + h
            if direction * (t_new - t_end) > 0:
                t_new = t_end
            h = t_new - t
            h_abs = abs(h)
            for i in range(n):
                K[0, i] = f[i]
            for s in range(1, _NS):
                for i in range(n):
                    acc = 0.0
                    for j in range(s):
                        acc += K[j, i] * A[s, j]
                    ytmp[i] = y[i] + h * acc
                _rhs(kind, t + C[s] * h, ytmp, par, K[s])
            for i in range(n):
                acc = 0.0
                for j in range(_NS):
                    acc += K[j, i] * B[j]
                ynew[i] = y[i] + h * acc
            _rhs(kind, t + h, ynew, par, fnew)
            for i in range(n):
                K[_NS, i] = fnew[i]
            e5 = 0.0
            e3 = 0.0
            for i in range(n):
                sc = atol + max(abs(y[i]), abs(ynew[i])) * rtol
                a5 = 0.0
                a3 = 0.0
                for j in range(_NS + 1):
                    a5 += K[j, i] * E5[j]
                    a3 += K[j, i] * E3[j]
                e5 += (a5 / sc) ** 2
                e3 += (a3 / sc) ** 2
            if e5 == 0.0 and e3 == 0.0:
                err = 0.0
            else:
                err = h_abs * e5 / np.sqrt((e5 + 0.01 * e3) * n)
            if err < 1.0:
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * err ** (-1.0 / 8.0))
                if rejected:
                    factor = min(1.0, factor)
                h_abs *= factor
                accepted = True
            else:
                h_abs *= max(MIN_FACTOR, SAFETY * err ** (-1.0 / 8.0))
                rejected = True
        if status != 0:
            break
        # dense output coefficients for the accepted step
        for s in range(_NS + 1, _NSX):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += K[j, i] * A[s, j]
                ytmp[i] = y[i] + h * acc
            _rhs(kind, t + C[s] * h, ytmp, par, K[s])
        for i in range(n):
            dy = ynew[i] - y[i]
            Fs[nstep, 0, i] = dy
            Fs[nstep, 1, i] = h * f[i] - dy
            Fs[nstep, 2, i] = 2.0 * dy - h * (fnew[i] + f[i])
            for r in range(4):
                acc = 0.0
                for j in range(_NSX):
                    acc += D[r, j] * K[j, i]
                Fs[nstep, 3 + r, i] = h * acc
        t = t_new
        for i in range(n):
            y[i] = ynew[i]
            f[i] = fnew[i]
        nstep += 1
        ts[nstep] = t
        ys[nstep] = y
    return status, ts[: nstep + 1].copy(), ys[: nstep + 1].copy(), Fs[:nstep].copy()


class DenseSolution:
    """Piecewise degree-7 interpolant produced by one DOP853 run."""

    def __init__(self, ts, ys, Fs):
        self.ts, self.ys, self.Fs = ts, ys, Fs
        self.increasing = ts[-1] >= ts[0]

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        key = self.ts if self.increasing else -self.ts
        q = t if self.increasing else -t
        idx = np.searchsorted(key, q, side="right") - 1
        idx = np.clip(idx, 0, len(self.ts) - 2)
        t_old = self.ts[idx]
        h = self.ts[idx + 1] - t_old
        x = ((t - t_old) / h)[:, None]
        F = self.Fs[idx]
        y = np.zeros((t.size, self.ys.shape[1]))
        for i in range(F.shape[1] - 1, -1, -1):
            y += F[:, i, :]
            if (F.shape[1] - 1 - i) % 2 == 0:
                y *= x
            else:
                y *= 1 - x
        y += self.ys[idx]
        return y.T


def dop853(kind: int, par, y0, t_end: float, rtol: float, atol: float,
           max_steps: int = 2_000_000):
    """Integrate from 0 to ``t_end``. Returns ``(status, DenseSolution)``.

    ``status`` is 0 on success, 1 on step-size underflow and 2 when the step
    budget is exhausted.
    """
    status, ts, ys, Fs = _integrate(
        kind, np.asarray(par, dtype=np.float64), np.asarray(y0, dtype=np.float64),
        0.0, float(t_end), float(rtol), float(atol), int(max_steps),
        _A, _B, _C, _E3, _E5, _D)
    return status, DenseSolution(ts, ys, Fs)
