"""Operators on uniform periodic grids.

Fourier convention: ``f_hat(xi) = (1/2 pi) int e^{-i x xi} f(x) dx`` with
inversion ``f(x) = int e^{i x xi} f_hat(xi) d xi``. On a grid
``x_j = x_min + j dx`` this is ``f_hat(xi_k) = dx/(2 pi) e^{-i x_min xi_k} FFT(f)_k``
with ``xi = 2 pi fftfreq(n, dx)``. Multiplier operators do not depend on the
convention; only the explicit transforms below do.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.fft import fft, fftfreq, ifft
from scipy.special import gamma as gamma_fn, roots_laguerre, roots_legendre

from .profile_ode import AsymptoticData, ExtendedProfile, ProfileSolution, _read_csv, _write_csv

ALIAS_FRACTION = 1e-8
SQRT_PI_I = np.sqrt(np.pi * 1j)


@dataclass(frozen=True)
class SpatialGrid:
    """``n`` equispaced nodes on the periodic cell ``[x_min, x_max)``."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 256 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two, at least 256")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @classmethod
    def symmetric(cls, half_width: float, n: int) -> "SpatialGrid":
        return cls(-half_width, half_width, n)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def xi(self) -> np.ndarray:
        return 2 * np.pi * fftfreq(self.n, self.dx)

    @property
    def dxi(self) -> float:
        return 2 * np.pi / (self.x_max - self.x_min)

    def scaled(self, factor: float) -> "SpatialGrid":
        return SpatialGrid(self.x_min * factor, self.x_max * factor, self.n)


@dataclass
class ComplexField:
    grid: SpatialGrid
    values: np.ndarray
    time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n,):
            raise ValueError("values must have one sample per grid node")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite samples")

    @classmethod
    def from_function(cls, grid: SpatialGrid, func: Callable, time: float = 0.0) -> "ComplexField":
        return cls(grid, func(grid.x), time)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.dx * np.sum(np.abs(self.values) ** 2)))

    def weighted_l2_norm(self, weight_power: float) -> float:
        """``(int |x|^w |u|^2 dx)^{1/2}``."""
        w = np.abs(self.x) ** weight_power
        return float(np.sqrt(self.grid.dx * np.sum(w * np.abs(self.values) ** 2)))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l1_norm(self) -> float:
        return float(self.grid.dx * np.sum(np.abs(self.values)))

    def with_values(self, values, time: Optional[float] = None) -> "ComplexField":
        return ComplexField(self.grid, values, self.time if time is None else time)

    def fourier(self) -> np.ndarray:
        """Samples of ``u_hat`` at ``grid.xi``."""
        g = self.grid
        return g.dx / (2 * np.pi) * np.exp(-1j * g.x_min * g.xi) * fft(self.values)

    def fourier_at(self, xi) -> np.ndarray:
        """``u_hat(xi)`` at arbitrary frequencies by direct quadrature."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.empty(xi.shape, dtype=complex)
        x = self.x
        chunk = max(1, 2**22 // x.size)
        for i in range(0, xi.size, chunk):
            ph = np.exp(-1j * np.outer(xi.ravel()[i:i + chunk], x))
            out.ravel()[i:i + chunk] = ph @ self.values
        return self.grid.dx / (2 * np.pi) * out

    def to_csv(self, path) -> None:
        header = {"kind": "field", "time": self.time, "x_min": self.grid.x_min,
                  "x_max": self.grid.x_max, "n": self.grid.n}
        cols = np.column_stack([self.x, self.values.real, self.values.imag])
        _write_csv(path, header, ["x", "re", "im"], cols)

    @classmethod
    def from_csv(cls, path) -> "ComplexField":
        header, data = _read_csv(path)
        grid = SpatialGrid(header["x_min"], header["x_max"], int(header["n"]))
        return cls(grid, data[:, 1] + 1j * data[:, 2], float(header["time"]))


@dataclass(frozen=True)
class MultiplierSpec:
    """Phases of ``m(x) = e^{-2 i c_+}`` on ``x >= 0`` and ``e^{-2 i c_-}`` on ``x < 0``."""

    delta: float
    c_plus: float = 0.0
    c_minus: float = 0.0

    def m(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, np.exp(-2j * self.c_plus), np.exp(-2j * self.c_minus))

    @classmethod
    def from_asymptotics(cls, asym: AsymptoticData) -> "MultiplierSpec":
        return cls(asym.delta, asym.c_plus, asym.c_minus)


# ------------------------------------------------------------------ propagators

def _alias_check(values: np.ndarray) -> float:
    power = np.abs(fft(values)) ** 2
    n = power.size
    k = np.abs(fftfreq(n, 1.0 / n))
    total = power.sum()
    if total == 0:
        return 0.0
    frac = float(power[k > 3 * n // 8].sum() / total)
    if frac > ALIAS_FRACTION:
        warnings.warn(f"spectral mass near the Nyquist band is {frac:.2e} of the total",
                      RuntimeWarning, stacklevel=3)
    return frac


def propagator_symbol(grid: SpatialGrid, t: float) -> np.ndarray:
    """Fourier symbol ``e^{-i xi^2 t}`` of ``e^{i t d_x^2}``."""
    xi = grid.xi
    return np.exp(-1j * xi * xi * t)


def free_propagate(u0: ComplexField, t: float, check_alias: bool = True) -> ComplexField:
    """``e^{i t d_x^2} u0`` on the periodic grid; ``t`` may be negative."""
    if check_alias:
        _alias_check(u0.values)
    if t == 0:
        return ComplexField(u0.grid, u0.values.copy(), u0.time)
    vals = ifft(propagator_symbol(u0.grid, t) * fft(u0.values))
    return ComplexField(u0.grid, vals, u0.time + t)


def gaussian_free_evolution(x, t: float) -> np.ndarray:
    """Closed form of ``e^{i t d_x^2} e^{-x^2}``."""
    s = 1 + 4j * t
    return np.exp(-x * x / s) / np.sqrt(s)


# ------------------------------------------------------------ pseudo-conformal

def trig_interpolate(field: ComplexField, x_new) -> np.ndarray:
    """Band-limited (trigonometric) interpolant of a periodic field."""
    g = field.grid
    coef = fft(field.values) / g.n
    k = fftfreq(g.n, 1.0 / g.n)
    if g.n % 2 == 0:
        # split the Nyquist mode symmetrically so that the interpolant is real for real data
        nyq = g.n // 2
        k = np.concatenate([k, [nyq]])
        coef = np.concatenate([coef, [0.5 * coef[nyq]]])
        coef[nyq] *= 0.5
        k[nyq] = -nyq
    theta = 2 * np.pi * (np.asarray(x_new, dtype=float) - g.x_min) / (g.x_max - g.x_min)
    out = np.empty(theta.shape, dtype=complex)
    flat = theta.ravel()
    chunk = max(1, 2**22 // k.size)
    for i in range(0, flat.size, chunk):
        out.ravel()[i:i + chunk] = np.exp(1j * np.outer(flat[i:i + chunk], k)) @ coef
    return out


def pseudo_conformal(v: ComplexField, t: Optional[float] = None,
                     out_grid: Optional[SpatialGrid] = None) -> ComplexField:
    """``(T v)(t, x) = e^{i x^2/4t} conj(v)(1/t, x/t) / sqrt(t)``.

    ``v`` is the field at time ``1/t``; by default ``t = 1/v.time``. Without
    ``out_grid`` the result lives on the input grid scaled by ``t``, where
    ``x/t`` falls exactly on the input nodes and no interpolation is needed.
    With ``out_grid`` the input is resampled by band-limited interpolation;
    points with ``x/t`` outside the input cell are set to zero and the
    fraction of output mass they would carry is reported in ``meta``.
    """
    if t is None:
        if v.time <= 0:
            raise ValueError("field time must be positive to infer t")
        t = 1.0 / v.time
    if t <= 0:
        raise ValueError("t must be positive")
    if out_grid is None:
        grid = v.grid.scaled(t)
        x = grid.x
        vals = np.exp(0.25j * x * x / t) / np.sqrt(t) * np.conj(v.values)
        return ComplexField(grid, vals, t, {"resampled": False})
    x = out_grid.x
    y = x / t
    g = v.grid
    inside = (y >= g.x_min) & (y <= g.x_max - g.dx)
    samples = np.zeros(x.shape, dtype=complex)
    samples[inside] = trig_interpolate(v, y[inside])
    vals = np.exp(0.25j * x * x / t) / np.sqrt(t) * np.conj(samples)
    out = ComplexField(out_grid, vals, t, {"resampled": True})
    lost = 1.0 - inside.mean()
    out.meta["outside_fraction"] = float(lost)
    if lost > 0:
        # mass of v outside the image window of the output grid
        keep = (g.x >= out_grid.x_min / t) & (g.x <= out_grid.x_max / t)
        total = np.sum(np.abs(v.values) ** 2)
        out.meta["boundary_mass"] = float(np.sum(np.abs(v.values[~keep]) ** 2) / total) if total else 0.0
        out.meta["flagged"] = out.meta["boundary_mass"] > 1e-12
    return out


def dual_grid(grid: SpatialGrid) -> SpatialGrid:
    """Grid with nodes ``x = 2 xi`` for the frequencies of ``grid``."""
    return SpatialGrid.symmetric(grid.n * grid.dxi, grid.n)


def scattering_image(w: ComplexField) -> ComplexField:
    """``P[w](x) = sqrt(pi i) conj(w_hat(x/2))`` sampled on ``dual_grid(w.grid)``.

    For every fixed ``w``, ``T(e^{i tau d^2} w)(t) = e^{i t d^2} P[w]`` with
    ``t = 1/tau``, so pseudo-conformal images of different times can be
    compared on one grid without interpolation.
    """
    vals = SQRT_PI_I * np.conj(np.fft.fftshift(w.fourier()))
    return ComplexField(dual_grid(w.grid), vals, w.time)


# ------------------------------------------------------- modified profiles

def _check_symmetric(asym: AsymptoticData, tol: float = 1e-6) -> None:
    if not np.isfinite(asym.f_inf_minus):
        return
    if asym.symmetric_gap > tol * max(1.0, asym.f_inf):
        raise ValueError(
            f"profile tails differ: |f|_+inf = {asym.f_inf:.8g}, |f|_-inf = {asym.f_inf_minus:.8g}")


def sample_vf(sol: ProfileSolution, asym: AsymptoticData, grid: SpatialGrid, t: float,
              profile: Optional[ExtendedProfile] = None) -> np.ndarray:
    """``v_f(t, x) = conj(f)(x / sqrt t)`` on the grid."""
    fw = profile or ExtendedProfile(sol, asym)
    return np.conj(fw(grid.x / np.sqrt(t)))


def build_tilde_vf(asym: AsymptoticData, sol: ProfileSolution, u_plus: ComplexField,
                   t: float, profile: Optional[ExtendedProfile] = None) -> ComplexField:
    """``v_f(t) + e^{i (alpha/2) log t} e^{i t d_x^2} u_plus``."""
    _check_symmetric(asym)
    vf = sample_vf(sol, asym, u_plus.grid, t, profile)
    z = free_propagate(u_plus, t).values
    return ComplexField(u_plus.grid, vf + np.exp(0.5j * asym.alpha * np.log(t)) * z, t)


def build_tilde_uf(asym: AsymptoticData, sol: ProfileSolution, u_plus: ComplexField,
                   t: float, grid: Optional[SpatialGrid] = None,
                   profile: Optional[ExtendedProfile] = None) -> ComplexField:
    """``u_f(t) + sqrt(pi i) e^{i (alpha/2) log t} hat(conj u_plus)(-x/2)``.

    ``grid`` defaults to the grid of ``u_plus``. The transform of
    ``conj(u_plus)`` at ``-x/2`` equals ``conj(hat(u_plus)(x/2))`` and is
    evaluated by direct quadrature.
    """
    _check_symmetric(asym)
    grid = grid or u_plus.grid
    fw = profile or ExtendedProfile(sol, asym)
    x = grid.x
    uf = np.exp(0.25j * x * x / t) / np.sqrt(t) * fw(x / np.sqrt(t))
    second = SQRT_PI_I * np.exp(0.5j * asym.alpha * np.log(t)) * np.conj(u_plus.fourier_at(0.5 * x))
    return ComplexField(grid, uf + second, t)


def stationary_phase_term(u_plus: ComplexField, alpha: float, s: float) -> ComplexField:
    """``2 pi e^{i (alpha/2) log s} e^{i x^2/4s} hat(u_plus)(x/2s) / sqrt(4 pi i s)`` on the grid of ``u_plus``."""
    x = u_plus.x
    vals = (2 * np.pi * np.exp(0.5j * alpha * np.log(s)) * np.exp(0.25j * x * x / s)
            / np.sqrt(4j * np.pi * s) * u_plus.fourier_at(x / (2 * s)))
    return ComplexField(u_plus.grid, vals, s)


# ------------------------------------------------------------------ kernel A_t

_GL_NODES, _GL_WEIGHTS = roots_legendre(24)
_LAG_NODES, _LAG_WEIGHTS = roots_laguerre(80)


def _head_oscillatory(b, lo, hi, delta):
    """``int_lo^hi (e^{i b tau} - 1) tau^{-1-i delta} d tau`` in the variable ``log tau``.

    On this range ``b tau <= 2``, so the integrand is smooth and bounded.
    """
    s_lo, s_hi = np.log(lo), np.log(hi)
    n_panels = max(1, int(np.ceil(s_hi - s_lo)))
    edges = np.linspace(s_lo, s_hi, n_panels + 1)
    total = 0j
    for a_, b_ in zip(edges[:-1], edges[1:]):
        s = 0.5 * (b_ - a_) * _GL_NODES + 0.5 * (a_ + b_)
        tau = np.exp(s)
        vals = np.expm1(1j * b * tau) * np.exp(-1j * delta * s)
        total += 0.5 * (b_ - a_) * np.dot(_GL_WEIGHTS, vals)
    return total


def _tail_remainder(b, T, delta):
    """``int_T^inf e^{i b tau} tau^{-2-i delta} d tau`` along ``tau = T + i u / b``."""
    z = T + 1j * _LAG_NODES / b
    vals = np.exp((-2 - 1j * delta) * np.log(z))
    return 1j * np.exp(1j * b * T) / b * np.dot(_LAG_WEIGHTS, vals)


def _kernel_scalar(xi: float, t: float, delta: float) -> complex:
    b = 2 * xi * xi
    T1 = 1.0 / (xi * xi)
    total = 0j
    if t < T1:
        total += (t ** (-1j * delta) - T1 ** (-1j * delta)) / (1j * delta)
        total += _head_oscillatory(b, t, T1, delta)
    T = max(t, T1)
    boundary = -np.exp(1j * b * T) * T ** (-1 - 1j * delta) / (1j * b)
    total += boundary + (1 + 1j * delta) / (1j * b) * _tail_remainder(b, T, delta)
    return complex(total)


def kernel_At(xi, t, delta: float):
    """``A_t(xi) = int_t^inf e^{2 i tau xi^2} tau^{-1-i delta} d tau``.

    Split at ``1/xi^2``: below it the non-oscillatory part ``tau^{-1-i delta}``
    is integrated in closed form and the bounded remainder by Gauss-Legendre
    in ``log tau``; above it one integration by parts leaves an absolutely
    convergent integral, evaluated on the rotated ray ``tau = T + i s`` by
    Gauss-Laguerre. Broadcasts over ``xi`` and ``t``.
    """
    if delta == 0:
        raise ValueError("delta must be non-zero")
    xi_a, t_a = np.broadcast_arrays(np.asarray(xi, dtype=float), np.asarray(t, dtype=float))
    if np.any(xi_a == 0):
        raise ValueError("kernel_At is undefined at xi = 0")
    if np.any(t_a <= 0):
        raise ValueError("t must be positive")
    out = np.empty(xi_a.shape, dtype=complex)
    for idx in np.ndindex(xi_a.shape):
        out[idx] = _kernel_scalar(float(xi_a[idx]), float(t_a[idx]), delta)
    return out if out.ndim else complex(out)


def kernel_At_bruteforce(xi: float, t: float, delta: float, n_cut: int = 6,
                         periods: int = 200) -> complex:
    """Truncated oscillatory quadrature with extrapolation in the cut-off.

    ``int_t^T`` is computed for cut-offs ``T_k`` that share the phase of
    ``e^{i b T}``; the truncation error then behaves like
    ``c1 T^{-1-i delta} + c2 T^{-2-i delta}`` and is removed by least squares.
    """
    from scipy.integrate import quad

    b = 2 * xi * xi
    period = 2 * np.pi / b
    T0 = t + periods * period
    cuts = T0 + period * periods * np.arange(n_cut)

    def piece(lo, hi):
        re = quad(lambda s: np.cos(-delta * np.log(s)) / s, lo, hi, weight="cos", wvar=b, limit=2000)[0] \
            - quad(lambda s: np.sin(-delta * np.log(s)) / s, lo, hi, weight="sin", wvar=b, limit=2000)[0]
        im = quad(lambda s: np.cos(-delta * np.log(s)) / s, lo, hi, weight="sin", wvar=b, limit=2000)[0] \
            + quad(lambda s: np.sin(-delta * np.log(s)) / s, lo, hi, weight="cos", wvar=b, limit=2000)[0]
        return re + 1j * im

    partial = [piece(t, cuts[0])]
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        partial.append(partial[-1] + piece(lo, hi))
    partial = np.array(partial)
    M = np.column_stack([np.ones(n_cut), cuts ** (-1 - 1j * delta), cuts ** (-2 - 1j * delta)])
    coef, *_ = np.linalg.lstsq(M, partial, rcond=None)
    return complex(coef[0])


@dataclass
class KernelBoundReport:
    xi: np.ndarray
    t: np.ndarray
    scaled: np.ndarray
    constant: float


def kernel_bound_scan(delta: float, n: int = 40, xi_range=(1e-2, 1e2),
                      t_range=(1e-2, 1e2)) -> KernelBoundReport:
    """``sup |A_t(xi)| (1 + t xi^2)`` over an ``n x n`` logarithmic grid."""
    xi = np.logspace(np.log10(xi_range[0]), np.log10(xi_range[1]), n)
    t = np.logspace(np.log10(t_range[0]), np.log10(t_range[1]), n)
    XI, TT = np.meshgrid(xi, t, indexing="ij")
    vals = np.abs(kernel_At(XI, TT, delta)) * (1 + TT * XI**2)
    return KernelBoundReport(xi, t, vals, float(vals.max()))


# ------------------------------------------------------------- T_delta multiplier

def tdelta_symbol(grid: SpatialGrid, spec: MultiplierSpec) -> tuple[np.ndarray, bool]:
    """Symbol ``e^{2 i delta log|xi|} conj(m)(xi)`` on the FFT frequencies.

    At ``xi = 0`` the log is replaced by ``log(dxi/2)`` and the jump of
    ``conj(m)`` by the normalised mean of its two one-sided values. The
    second return value flags that this substitution was made.
    """
    xi = grid.xi
    sym = np.empty(xi.shape, dtype=complex)
    nz = xi != 0
    side = np.where(xi >= 0, np.exp(2j * spec.c_plus), np.exp(2j * spec.c_minus))
    sym[nz] = np.exp(2j * spec.delta * np.log(np.abs(xi[nz]))) * side[nz]
    mean = np.exp(2j * spec.c_plus) + np.exp(2j * spec.c_minus)
    mean = mean / abs(mean) if abs(mean) > 1e-12 else np.exp(2j * spec.c_plus)
    sym[~nz] = np.exp(2j * spec.delta * np.log(0.5 * grid.dxi)) * mean
    return sym, bool((~nz).any())


def apply_tdelta(u: ComplexField, spec: MultiplierSpec) -> ComplexField:
    sym, flagged = tdelta_symbol(u.grid, spec)
    out = ComplexField(u.grid, ifft(sym * fft(u.values)), u.time)
    out.meta["zero_bin_regularised"] = flagged
    return out


def tdelta_weighted_ratio(u: ComplexField, spec: MultiplierSpec, gamma: float) -> float:
    """``||T_delta u||_{L^2(|x|^gamma)} / ||u||_{L^2(|x|^gamma)}``."""
    return apply_tdelta(u, spec).weighted_l2_norm(gamma) / u.weighted_l2_norm(gamma)


# ---------------------------------------------------------- inequality probes

def lemma1_constant(beta: float) -> float:
    """Constant from ``|e^{i theta} - 1| <= 2^{1-s} theta^s`` with ``s = beta/4``."""
    return 2.0 ** (1 - 0.75 * beta)


def lemma1_check(f: ComplexField, t: float, beta: float,
                 constant: Optional[float] = None) -> tuple[float, float]:
    """``(||f (e^{-i x^2/4t} - 1)||_2, C t^{-beta/4} ||f||_{L^2(|x|^beta)})``."""
    if not 0 <= beta <= 4:
        raise ValueError("beta must lie in [0, 4]")
    C = lemma1_constant(beta) if constant is None else constant
    x = f.x
    lhs = f.with_values(f.values * np.expm1(-0.25j * x * x / t)).l2_norm()
    rhs = C * t ** (-0.25 * beta) * f.weighted_l2_norm(beta)
    return float(lhs), float(rhs)


def fit_lemma1_constant(family: Sequence[ComplexField], t_values, beta: float) -> float:
    """Smallest ``C`` making ``lemma1_check`` hold over a family of fields and times."""
    worst = 0.0
    for f in family:
        for t in t_values:
            lhs, rhs = lemma1_check(f, t, beta, constant=1.0)
            if rhs > 0:
                worst = max(worst, lhs / rhs)
    return worst


def pitt_constant(beta: float) -> float:
    """Sharp one-dimensional constant, rescaled to the ``1/2pi`` transform."""
    cb = np.pi**beta * (gamma_fn((1 - beta) / 4) / gamma_fn((1 + beta) / 4)) ** 2
    return float((2 * np.pi) ** (-1 - beta) * cb)


def pitt_check(f: ComplexField, beta: float, pad: int = 8) -> tuple[float, float]:
    """``(int |xi|^{-beta} |f_hat|^2, C_beta int |x|^beta |f|^2)``.

    The transform is sampled on a ``pad``-times finer frequency grid; the
    cell around ``xi = 0`` uses the exact integral of ``|xi|^{-beta}``.
    """
    if not 0 <= beta < 1:
        raise ValueError("beta must lie in [0, 1)")
    g = f.grid
    L = g.x_max - g.x_min
    big = SpatialGrid(g.x_min, g.x_min + pad * L, g.n * pad)
    vals = np.zeros(big.n, dtype=complex)
    vals[: g.n] = f.values
    hat = ComplexField(big, vals).fourier()
    xi = big.xi
    dxi = big.dxi
    w = np.empty(xi.shape)
    nz = xi != 0
    w[nz] = np.abs(xi[nz]) ** (-beta) * dxi
    w[~nz] = 2 * (0.5 * dxi) ** (1 - beta) / (1 - beta)
    lhs = float(np.sum(w * np.abs(hat) ** 2))
    rhs = pitt_constant(beta) * f.weighted_l2_norm(beta) ** 2
    return lhs, float(rhs)


@dataclass
class StrichartzReport:
    t: np.ndarray
    sup_norm: np.ndarray
    l2_norm: np.ndarray
    l4_linf: float
    l1_initial: float
    dispersive_ratio: float
    decay_exponent: float


def strichartz_probe(u0: ComplexField, t0: float, T: float, n_times: int = 64) -> StrichartzReport:
    """Space-time norms of ``e^{i t d_x^2} u0`` on ``[t0, T]``.

    ``l4_linf`` is ``(int_{t0}^T ||u(t)||_inf^4 dt)^{1/4}`` by the trapezoid
    rule in ``log t``; ``dispersive_ratio`` is the largest value of
    ``||u(t)||_inf sqrt(4 pi t) / ||u0||_1``, which the explicit kernel bounds
    by one. ``decay_exponent`` is fitted on the upper half of the times.
    """
    if not 0 < t0 < T:
        raise ValueError("need 0 < t0 < T")
    ts = np.geomspace(t0, T, n_times)
    hat0 = fft(u0.values)
    sup, l2 = np.empty(n_times), np.empty(n_times)
    for k, t in enumerate(ts):
        vals = ifft(propagator_symbol(u0.grid, t) * hat0)
        sup[k] = np.max(np.abs(vals))
        l2[k] = np.sqrt(u0.grid.dx * np.sum(np.abs(vals) ** 2))
    logt = np.log(ts)
    l4 = float(np.trapezoid(sup**4 * ts, logt) ** 0.25)
    l1 = u0.l1_norm()
    ratio = float(np.max(sup * np.sqrt(4 * np.pi * ts)) / l1)
    half = n_times // 2
    slope = np.polyfit(logt[half:], np.log(sup[half:]), 1)[0]
    return StrichartzReport(ts, sup, l2, l4, l1, ratio, float(-slope))
