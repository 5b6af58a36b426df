"""Time stepping of the v- and w-equations and transport to the u-side.

The v-equation is ``i v_t + v_xx + (v/2t)(|v|^2 - A) = 0`` and
``v = v_f + w`` with ``v_f(t, x) = conj(f)(x/sqrt t)`` an exact solution.
Both are advanced on a periodic grid by Strang splitting on a geometric
time grid: the Fourier step ``e^{i h d_x^2}`` is exact, the pointwise step
is exact for the v-equation (a phase rotation) and classical RK4 for the
w-equation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.fft import fft, fftfreq, ifft

from .profile_ode import AsymptoticData, ExtendedProfile, ProfileSolution
from .transforms import (
    ComplexField,
    SpatialGrid,
    free_propagate,
    pseudo_conformal,
    scattering_image,
)

EQUATIONS = ("v-equation", "w-equation", "u-equation")
TOP_BAND = 3.0 / 8.0


class EvolutionError(RuntimeError):
    """Raised when the spectral tail of the evolved field starts to grow."""

    def __init__(self, message: str, times, fractions):
        super().__init__(message)
        self.times = np.asarray(times)
        self.fractions = np.asarray(fractions)


# ------------------------------------------------------------------ windows

def _smoothstep(s):
    """C-infinity step from 0 (s <= 0) to 1 (s >= 1)."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    a = np.where(s > 0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
    b = np.where(s < 1, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
    return a / (a + b)


def cosine_window(grid: SpatialGrid, fraction: float) -> np.ndarray:
    """1 on the interior, raised-cosine roll-off to 0 over the outer ``fraction`` of each side."""
    half = 0.5 * (grid.x_max - grid.x_min)
    centre = 0.5 * (grid.x_max + grid.x_min)
    r = np.abs(grid.x - centre)
    width = fraction * half
    s = np.clip((r - (half - width)) / width, 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * s))


def sponge_profile(grid: SpatialGrid, fraction: float) -> np.ndarray:
    """Smooth ramp from 0 on the interior to 1 at the cell edge."""
    half = 0.5 * (grid.x_max - grid.x_min)
    centre = 0.5 * (grid.x_max + grid.x_min)
    r = np.abs(grid.x - centre)
    width = fraction * half
    return _smoothstep((r - (half - width)) / width)


def interior_mask(grid: SpatialGrid, fraction: float = 0.5) -> np.ndarray:
    """Nodes within ``fraction`` of the half-width from the centre."""
    half = 0.5 * (grid.x_max - grid.x_min)
    centre = 0.5 * (grid.x_max + grid.x_min)
    return np.abs(grid.x - centre) <= fraction * half


def window_l2(values: np.ndarray, grid: SpatialGrid, mask: Optional[np.ndarray] = None) -> float:
    v = values if mask is None else values[mask]
    return float(np.sqrt(grid.dx * np.sum(np.abs(v) ** 2)))


def top_band_fraction(values: np.ndarray) -> float:
    power = np.abs(fft(values)) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    k = np.abs(fftfreq(values.size, 1.0 / values.size))
    return float(power[k > TOP_BAND * values.size].sum() / total)


# --------------------------------------------------------------- background

class Background:
    """The self-similar solution ``v_f`` built from a profile and its fitted tails."""

    def __init__(self, sol: ProfileSolution, asym: AsymptoticData):
        self.sol = sol
        self.asym = asym
        self.profile = ExtendedProfile(sol, asym)

    @property
    def A(self) -> float:
        return float(self.sol.A)

    @property
    def alpha(self) -> float:
        return float(self.asym.alpha)

    @property
    def f_inf_sq(self) -> float:
        return float(self.asym.f_inf ** 2)

    def vf(self, x, t: float) -> np.ndarray:
        return np.conj(self.profile(np.asarray(x, dtype=float) / np.sqrt(t)))

    def uf(self, x, t: float) -> np.ndarray:
        """``e^{i x^2/4t} f(x/sqrt t)/sqrt t``."""
        x = np.asarray(x, dtype=float)
        return np.exp(0.25j * x * x / t) / np.sqrt(t) * self.profile(x / np.sqrt(t))


# --------------------------------------------------------------- trajectory

@dataclass
class Trajectory:
    """Snapshots of one solution at increasing times."""

    times: np.ndarray
    fields: list
    equation: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.equation not in EQUATIONS:
            raise ValueError(f"equation must be one of {EQUATIONS}")
        if len(self.fields) != self.times.size:
            raise ValueError("one field per time is required")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        if not self.meta.get("scaled_grids", False):
            grids = {f.grid for f in self.fields}
            if len(grids) > 1:
                raise ValueError("all fields must share one grid")

    def __len__(self) -> int:
        return self.times.size

    @property
    def grid(self) -> SpatialGrid:
        return self.fields[0].grid

    def values(self) -> np.ndarray:
        return np.array([f.values for f in self.fields])

    def at(self, t: float, rtol: float = 1e-9) -> ComplexField:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > rtol * abs(t):
            raise KeyError(f"no snapshot at t = {t}")
        return self.fields[k]

    def l2_norms(self, mask: Optional[np.ndarray] = None) -> np.ndarray:
        return np.array([window_l2(f.values, f.grid, mask) for f in self.fields])


@dataclass
class EvolutionConfig:
    """Settings shared by ``evolve_v`` and ``evolve_w``.

    ``rho`` is the ratio of successive times; ``dt_initial`` overrides it
    with ``rho = 1 + dt_initial/t0`` when given. ``coefficient_window`` is
    the raised-cosine taper applied to ``v_f`` in the w-equation and
    ``sponge_fraction`` the absorbing layer used by ``evolve_v``.
    """

    t0: float
    t1: float
    A: float
    rho: float = 1.02
    dt_initial: Optional[float] = None
    coefficient_window: float = 0.1
    sponge_fraction: float = 0.3
    sponge_strength: float = 40.0
    asym: Optional[AsymptoticData] = None
    save_every: int = 1
    scheme: str = "strang"

    def __post_init__(self):
        if not 0 < self.t0 < self.t1:
            raise ValueError("need 0 < t0 < t1")
        if self.coefficient_window < 0.05:
            raise ValueError("coefficient taper must cover at least 5% of the domain")
        if self.dt_initial is not None:
            self.rho = 1.0 + self.dt_initial / self.t0
        if self.rho <= 1.0:
            raise ValueError("rho must exceed 1")
        if self.scheme != "strang":
            raise ValueError("only Strang splitting is implemented")

    def time_grid(self) -> np.ndarray:
        n = int(np.ceil(np.log(self.t1 / self.t0) / np.log(self.rho) - 1e-12))
        n = max(n, 1)
        return self.t0 * (self.t1 / self.t0) ** (np.arange(n + 1) / n)

    def refined(self, factor: int) -> "EvolutionConfig":
        """Same configuration with ``factor`` times as many steps."""
        n = self.time_grid().size - 1
        rho = (self.t1 / self.t0) ** (1.0 / (factor * n))
        return EvolutionConfig(self.t0, self.t1, self.A, rho, None, self.coefficient_window,
                               self.sponge_fraction, self.sponge_strength, self.asym,
                               self.save_every * factor)


def _march(v0: ComplexField, cfg: EvolutionConfig, pointwise: Callable, tag: str,
           monitor: Optional[Callable] = None) -> Trajectory:
    grid = v0.grid
    ts = cfg.time_grid()
    xi2 = grid.xi ** 2
    v = v0.values.copy()
    frac0 = top_band_fraction(v)
    fields = [ComplexField(grid, v.copy(), ts[0])]
    times = [ts[0]]
    fracs = [frac0]
    extra = []
    for k in range(ts.size - 1):
        ta, tb = ts[k], ts[k + 1]
        tm = np.sqrt(ta * tb)
        v = pointwise(v, ta, tm)
        v = ifft(np.exp(-1j * xi2 * (tb - ta)) * fft(v))
        v = pointwise(v, tm, tb)
        if not np.all(np.isfinite(v)):
            raise EvolutionError(f"non-finite values at t = {tb:.6g}", times, fracs)
        last = k == ts.size - 2
        if (k + 1) % cfg.save_every == 0 or last:
            frac = top_band_fraction(v)
            fracs.append(frac)
            if frac > max(1e3 * frac0, 1e-6):
                raise EvolutionError(
                    f"spectral tail grew to {frac:.2e} (initial {frac0:.2e}) at t = {tb:.6g}",
                    times + [tb], fracs)
            fields.append(ComplexField(grid, v.copy(), tb))
            times.append(tb)
            if monitor is not None:
                extra.append(monitor(v, tb))
    meta = {"rho": float(ts[1] / ts[0]), "steps": int(ts.size - 1), "top_band": fracs}
    if extra:
        meta["monitor"] = extra
    return Trajectory(np.array(times), fields, tag, meta)


def evolve_v(v0: ComplexField, cfg: EvolutionConfig, sponge: bool = True) -> Trajectory:
    """Advance ``i v_t + v_xx + (v/2t)(|v|^2 - A) = 0`` from ``cfg.t0`` to ``cfg.t1``.

    The pointwise sub-flow conserves ``|v|`` and is the exact rotation
    ``v -> v exp(i (|v|^2 - A) log(tb/ta) / 2)``. With ``sponge`` the
    initial data are rolled off smoothly to zero across the outer
    ``cfg.sponge_fraction`` of the cell, removing the jump that non-periodic
    data would have at the cell edge, and the field is damped there by
    ``exp(-s(x) (tb - ta))`` so that outgoing chirps do not wrap around.
    Errors should then be measured on ``interior_mask``.
    """
    if cfg.t0 <= 0:
        raise ValueError("t0 must be positive")
    grid = v0.grid
    A = cfg.A
    damp = None
    data = v0.values
    if sponge:
        layer = sponge_profile(grid, cfg.sponge_fraction)
        damp = cfg.sponge_strength * layer
        data = data * (1.0 - layer)

    def pointwise(v, ta, tb):
        out = v * np.exp(0.5j * (np.abs(v) ** 2 - A) * np.log(tb / ta))
        if damp is not None:
            out *= np.exp(-damp * (tb - ta))
        return out

    traj = _march(v0.with_values(data, cfg.t0), cfg, pointwise, "v-equation")
    traj.meta["sponge"] = bool(sponge)
    return traj


def _w_rhs(background: Background, grid: SpatialGrid, window: np.ndarray, linear: bool):
    A = background.A
    x = grid.x
    cache: dict = {}

    def coeffs(t):
        if t not in cache:
            if len(cache) > 8:
                cache.clear()
            vf = window * background.vf(x, t)
            cache[t] = (2.0 * np.abs(vf) ** 2 - A, vf * vf, vf)
        return cache[t]

    def rhs(t, w):
        c1, c2, vf = coeffs(t)
        wb = np.conj(w)
        bracket = c1 * w + c2 * wb
        if not linear:
            bracket = bracket + 2.0 * vf * w * wb + np.conj(vf) * w * w + w * w * wb
        return 0.5j / t * bracket

    return rhs


def _rk4(rhs, w, ta, tb):
    h = tb - ta
    tm = 0.5 * (ta + tb)
    k1 = rhs(ta, w)
    k2 = rhs(tm, w + 0.5 * h * k1)
    k3 = rhs(tm, w + 0.5 * h * k2)
    k4 = rhs(tb, w + h * k3)
    return w + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve_w(w0: ComplexField, cfg: EvolutionConfig, background: Background,
             linear: bool = False) -> Trajectory:
    """Advance the equation for ``w = v - v_f``.

    ``i w_t + w_xx + (1/2t)[(2|v_f|^2 - A) w + v_f^2 conj(w) + 2 v_f |w|^2
    + conj(v_f) w^2 + |w|^2 w] = 0``, with ``v_f`` tapered to zero over the
    outer ``cfg.coefficient_window`` of the cell. The pointwise substep is
    one RK4 step in complex arithmetic, which is RK4 on the real and
    imaginary parts. ``linear`` drops the quadratic and cubic terms. The
    fraction of ``|w|^2`` inside the taper is recorded per snapshot.
    """
    if cfg.t0 <= 0:
        raise ValueError("t0 must be positive")
    grid = w0.grid
    window = cosine_window(grid, cfg.coefficient_window)
    rhs = _w_rhs(background, grid, window, linear)
    in_taper = window < 1.0

    def monitor(w, t):
        tot = np.sum(np.abs(w) ** 2)
        return float(np.sum(np.abs(w[in_taper]) ** 2) / tot) if tot > 0 else 0.0

    traj = _march(w0.with_values(w0.values, cfg.t0), cfg,
                  lambda w, ta, tb: _rk4(rhs, w, ta, tb), "w-equation", monitor)
    taper_mass = traj.meta.pop("monitor", [])
    traj.meta["taper_mass"] = taper_mass
    traj.meta["taper_flag"] = bool(taper_mass and max(taper_mass) > 1e-6)
    traj.meta["linear"] = bool(linear)
    return traj


def evolve_linear_reference(w0: ComplexField, t_out: Sequence[float], background: Background,
                            coefficient_window: float = 0.1, rtol: float = 1e-11,
                            atol: float = 1e-16) -> list:
    """Linearised w-equation in the interaction picture, by an adaptive Runge-Kutta solver.

    With ``W_hat = e^{i t xi^2} w_hat`` the equation becomes the non-stiff
    system ``W_hat' = e^{i t xi^2} FFT[(i/2t)((2|v_f|^2 - A) w + v_f^2 conj w)]``,
    integrated with scipy's DOP853 on the stacked real and imaginary parts.
    """
    from scipy.integrate import solve_ivp

    grid = w0.grid
    xi2 = grid.xi ** 2
    window = cosine_window(grid, coefficient_window)
    A = background.A
    x = grid.x
    n = grid.n
    t0 = w0.time
    t_out = np.asarray(t_out, dtype=float)

    def rhs(t, y):
        W = y[:n] + 1j * y[n:]
        w = ifft(np.exp(-1j * (t - t0) * xi2) * W)
        vf = window * background.vf(x, t)
        g = 0.5j / t * ((2 * np.abs(vf) ** 2 - A) * w + vf * vf * np.conj(w))
        dW = np.exp(1j * (t - t0) * xi2) * fft(g)
        return np.concatenate([dW.real, dW.imag])

    W0 = fft(w0.values)
    sol = solve_ivp(rhs, (t0, t_out[-1]), np.concatenate([W0.real, W0.imag]), method="DOP853",
                    t_eval=t_out, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(sol.message)
    out = []
    for j, t in enumerate(sol.t):
        W = sol.y[:n, j] + 1j * sol.y[n:, j]
        out.append(ComplexField(grid, ifft(np.exp(-1j * (t - t0) * xi2) * W), t))
    return out


def richardson_ratio(coarse: ComplexField, medium: ComplexField, fine: ComplexField,
                     mask: Optional[np.ndarray] = None) -> float:
    """``|coarse - medium| / |medium - fine|``; close to 4 for a second-order method."""
    g = fine.grid
    return window_l2(coarse.values - medium.values, g, mask) / window_l2(
        medium.values - fine.values, g, mask)


# ---------------------------------------------------------------- decay fits

@dataclass
class DecayFit:
    times: np.ndarray
    errors: np.ndarray
    l4_tail: np.ndarray
    nu: Optional[float]
    prefactor: Optional[float]
    residual: Optional[float]
    gamma: float
    note: str = ""

    @property
    def meets_rate(self) -> bool:
        return self.nu is not None and self.nu >= self.gamma / 4 - 0.05


def l4_tail_norm(times: np.ndarray, sup_values: np.ndarray) -> np.ndarray:
    """``(int_t^T sup_x|e|^4 dtau)^{1/4}`` at every sample time (trapezoid rule)."""
    g = np.asarray(sup_values, dtype=float) ** 4
    seg = 0.5 * (g[1:] + g[:-1]) * np.diff(times)
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    return tail ** 0.25


def decay_fit(traj: Trajectory, reference: Optional[Callable[[float], np.ndarray]] = None,
              gamma: float = 0.5, mask: Optional[np.ndarray] = None,
              t_range: Optional[tuple] = None, exact_tol: float = 1e-13) -> DecayFit:
    """Fit ``||traj(t) - reference(t)||_{L^2}`` to ``c t^{-nu}`` by log-log regression.

    ``reference(t)`` returns samples on the trajectory grid; without it the
    trajectory itself is taken as the error (as for ``z`` from the
    fixed-point solver). A curve that is not monotonically decreasing is
    reported without a fit.
    """
    if traj.times[-1] < 10 * traj.times[0] * (1 - 1e-12):
        raise ValueError("trajectory must span at least one decade")
    grid = traj.grid
    errs, sups = [], []
    for f in traj.fields:
        e = f.values if reference is None else f.values - reference(f.time)
        e = e if mask is None else e[mask]
        errs.append(np.sqrt(grid.dx * np.sum(np.abs(e) ** 2)))
        sups.append(np.max(np.abs(e)) if e.size else 0.0)
    t = traj.times
    errs, sups = np.array(errs), np.array(sups)
    tail = l4_tail_norm(t, sups)
    sel = np.ones(t.size, bool) if t_range is None else (t >= t_range[0] * (1 - 1e-12)) & (
        t <= t_range[1] * (1 + 1e-12))
    # the fixed-point perturbation vanishes identically at its horizon
    sel &= errs > 0
    if not np.any(sel) or np.max(errs[sel]) <= exact_tol:
        return DecayFit(t, errs, tail, None, None, None, gamma, "error at round-off level; no fit")
    e = errs[sel]
    if np.any(np.diff(e) > 1e-12 * e.max()):
        return DecayFit(t, errs, tail, None, None, None, gamma, "error curve is not monotone; no fit")
    X = np.column_stack([np.ones(e.size), np.log(t[sel])])
    coef, res, *_ = np.linalg.lstsq(X, np.log(e), rcond=None)
    resid = float(np.sqrt(np.mean((X @ coef - np.log(e)) ** 2)))
    return DecayFit(t, errs, tail, float(-coef[1]), float(np.exp(coef[0])), resid, gamma)


def h1_error(field_values: np.ndarray, grid: SpatialGrid) -> float:
    """``H^1`` norm by spectral differentiation; diagnostic only."""
    d = ifft(1j * grid.xi * fft(field_values))
    return float(np.sqrt(grid.dx * np.sum(np.abs(field_values) ** 2 + np.abs(d) ** 2)))


# ----------------------------------------------------------------- u-side

def to_u_side(traj: Trajectory, out_grid: Optional[SpatialGrid] = None) -> Trajectory:
    """Pseudo-conformal image ``u(t) = T v(1/t)`` of a v-side trajectory.

    Without ``out_grid`` each snapshot keeps its exactly scaled grid and the
    result is flagged ``scaled_grids``; with it every snapshot is resampled
    onto the common grid. Since ``T`` is additive, a perturbation
    trajectory ``v - v_f`` maps to ``u - u_f``.
    """
    if traj.equation == "u-equation":
        raise ValueError("trajectory is already on the u-side")
    out = []
    for f in reversed(traj.fields):
        out.append(pseudo_conformal(f, 1.0 / f.time, out_grid))
    times = np.array([f.time for f in out])
    meta = {"scaled_grids": out_grid is None, "source": traj.equation}
    if out_grid is not None:
        meta["boundary_mass"] = [f.meta.get("boundary_mass", 0.0) for f in out]
    return Trajectory(times, out, "u-equation", meta)


def u_equation_residual(v_fields: Sequence[ComplexField], A: float,
                        window_fraction: float = 0.5) -> tuple[float, float]:
    """Residual of ``i u_t + u_xx + (u/2)(|u|^2 - A/t) = 0`` at the middle of three v snapshots.

    The three v-fields at times ``tau_0 < tau_1 < tau_2`` are mapped to
    ``u`` on the scaled grid of the middle one. ``u_t`` is the three-point
    derivative on the non-uniform times and ``u_xx`` is spectral, applied to
    ``u`` times a smooth window that equals 1 on the measured interior.
    Returns ``(max |residual|, max |i u_t| + |u_xx| + |nonlinear term|)``
    over the interior.
    """
    if len(v_fields) != 3:
        raise ValueError("three snapshots are required")
    mid = pseudo_conformal(v_fields[1])
    grid = mid.grid
    others = [pseudo_conformal(f, 1.0 / f.time, grid) for f in (v_fields[0], v_fields[2])]
    u0, u1, u2 = others[0], mid, others[1]
    t0, t1, t2 = u0.time, u1.time, u2.time
    # u-side times decrease as v-side times increase
    h0, h1 = t1 - t2, t0 - t1
    ut = (-h1 / (h0 * (h0 + h1)) * u2.values
          + (h1 - h0) / (h0 * h1) * u1.values
          + h0 / (h1 * (h0 + h1)) * u0.values)
    win = 1.0 - sponge_profile(grid, 1.0 - window_fraction - 0.15)
    uxx = ifft(-(grid.xi ** 2) * fft(win * u1.values))
    nl = 0.5 * u1.values * (np.abs(u1.values) ** 2 - A / t1)
    res = 1j * ut + uxx + nl
    m = interior_mask(grid, window_fraction)
    scale = np.abs(1j * ut) + np.abs(uxx) + np.abs(nl)
    return float(np.max(np.abs(res[m]))), float(np.max(scale[m]))


def sandwich_ratio(u: ComplexField, background: Background, floor: float = 1e-3) -> float:
    """``max |u| / ((2/sqrt t)|f(x/sqrt t)|)`` over nodes where the bound is not tiny."""
    t = u.time
    bound = 2.0 / np.sqrt(t) * np.abs(background.profile(u.x / np.sqrt(t)))
    m = bound > floor * bound.max()
    return float(np.max(np.abs(u.values[m]) / bound[m]))


# ------------------------------------------------------------ phase obstruction

def scattering_profile(u_plus: ComplexField) -> ComplexField:
    """``P(x) = sqrt(pi i) conj(hat(u_plus)(x/2))`` on the dual grid of ``u_plus``."""
    return scattering_image(u_plus)


def perturbation_u_side(z: Trajectory, u_plus: ComplexField, alpha: float,
                        horizon: Optional[float] = None,
                        times: Optional[Sequence[float]] = None) -> Trajectory:
    """``g(t) = u(t) - u_f(t)`` for ``v = v_f + e^{i(alpha/2) log tau}(z + z_plus)``.

    ``T`` is additive and conjugate-linear, and for a fixed profile ``w``
    it maps ``e^{i tau d^2} w`` to ``e^{i t d^2} P[w]``. With
    ``w(tau) = u_plus + e^{-i tau d^2} z(tau)`` this gives
    ``g(t) = e^{i(alpha/2) log t} e^{i t d^2} P[w(1/t)]`` on the dual grid,
    exactly and without interpolation. ``times`` selects u-side times among
    ``1/tau`` of the stored snapshots (nearest match). Beyond ``horizon``
    the truncated ``z`` vanishes, so ``w = u_plus`` there.
    """
    grid = u_plus.grid
    xi2 = grid.xi ** 2
    available = 1.0 / z.times
    if times is None:
        idx = list(range(z.times.size))
    else:
        idx = sorted({int(np.argmin(np.abs(np.log(available / t)))) for t in times})
    fields = []
    for k in reversed(idx):
        zf = z.fields[k]
        if zf.grid != grid:
            raise ValueError("z and u_plus must share a grid")
        tau = zf.time
        t = 1.0 / tau
        w = u_plus.values + ifft(np.exp(1j * tau * xi2) * fft(zf.values))
        P = scattering_image(ComplexField(grid, w, tau))
        free = free_propagate(P, t, check_alias=False).values
        fields.append(ComplexField(P.grid, np.exp(0.5j * alpha * np.log(t)) * free, t))
    out_times = np.array([f.time for f in fields])
    return Trajectory(out_times, fields, "u-equation",
                      {"perturbation": True, "u_plus_norm": u_plus.l2_norm(), "alpha": alpha,
                       "horizon": horizon})


@dataclass
class PhaseObstructionReport:
    times: np.ndarray
    alpha: float
    differences: np.ndarray
    predicted: np.ndarray
    scale: float
    min_ratio: float
    sup_small_t: np.ndarray

    def tail_sup(self, k: int) -> float:
        """Largest difference among pairs drawn from the ``k`` smallest times."""
        return float(self.sup_small_t[k - 1]) if k >= 2 else 0.0


def phase_obstruction_demo(traj_u: Trajectory, sol: Optional[ProfileSolution] = None,
                           asym: Optional[AsymptoticData] = None,
                           predicted_floor: float = 0.1) -> PhaseObstructionReport:
    """Cauchy differences ``||g(t_i) - g(t_j)||_{L^2}`` of ``g = u - u_f``.

    For a perturbation trajectory (``meta["perturbation"]``) the fields are
    ``g`` already; otherwise ``u_f`` is subtracted using ``sol`` and
    ``asym``. The prediction ``2|sin(alpha (log t_i - log t_j)/4)| ||u_plus||``
    comes from the phase ``e^{i(alpha/2) log t}`` on a fixed profile whose
    ``L^2`` norm equals ``||u_plus||``. ``min_ratio`` is the smallest
    observed/predicted ratio over pairs whose prediction exceeds
    ``predicted_floor`` of the scale.
    """
    if traj_u.equation != "u-equation":
        raise ValueError("a u-side trajectory is required")
    if traj_u.meta.get("perturbation"):
        gs = [f.values for f in traj_u.fields]
        alpha = float(traj_u.meta["alpha"])
        scale = float(traj_u.meta["u_plus_norm"])
    else:
        if sol is None or asym is None:
            raise ValueError("sol and asym are needed to subtract u_f")
        bg = Background(sol, asym)
        gs = [f.values - bg.uf(f.x, f.time) for f in traj_u.fields]
        alpha = float(asym.alpha)
        scale = float(np.sqrt(traj_u.grid.dx * np.sum(np.abs(gs[0]) ** 2)))
    dx = traj_u.grid.dx
    t = traj_u.times
    n = t.size
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = np.sqrt(dx * np.sum(np.abs(gs[i] - gs[j]) ** 2))
    lt = np.log(t)
    pred = 2.0 * np.abs(np.sin(alpha * (lt[:, None] - lt[None, :]) / 4.0)) * scale
    sel = pred > predicted_floor * scale
    min_ratio = float(np.min(D[sel] / pred[sel])) if sel.any() else float("nan")
    # times are increasing, so the k smallest are the first k
    sup_small = np.array([D[:k, :k].max() if k >= 2 else 0.0 for k in range(1, n + 1)])
    return PhaseObstructionReport(t, alpha, D, pred, scale, min_ratio, sup_small)
