"""Fixed-point construction of solutions with prescribed scattering data.

With ``v = v_f + e^{i(alpha/2) log t}(z + z_plus)`` and ``z_plus =
e^{i t d^2} u_plus`` the correction ``z`` solves
``i z_t + z_xx = -(1/2t)(F0(z_plus) + F1(z) + NLT(z + z_plus))`` with
``z -> 0`` as ``t -> inf``. Its Duhamel form is the map

    Bz(t) = -(i/2) int_t^T e^{i(t - tau) d^2} [F0 + F1 + NLT](tau) dtau/tau,

truncated at the horizon ``T``. The integral is taken in ``s = log tau`` by
composite Simpson on a geometric grid with the propagator applied exactly
in Fourier space.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.fft import fft, ifft

from .nls_evolution import Background, Trajectory, cosine_window, l4_tail_norm
from .transforms import (
    SQRT_PI_I,
    ComplexField,
    MultiplierSpec,
    SpatialGrid,
    kernel_At,
    tdelta_symbol,
)

TERMS = ("F0", "F1", "NLT")


class QuadratureError(RuntimeError):
    """The coarse and fine Simpson sums disagree by more than the tolerance."""


class PicardDivergence(RuntimeError):
    def __init__(self, message: str, ratios):
        super().__init__(message)
        self.ratios = list(ratios)


@dataclass
class WaveOpConfig:
    """Settings of the truncated fixed-point problem.

    ``source_sign = "consistent"`` uses ``-(i/2)(F0 + F1 + NLT)``, the sign
    implied by the equation for ``z``; ``"as_printed"`` flips the sign of
    the ``F0`` term.
    """

    t0: float = 1.0
    T_max: float = 300.0
    gamma: float = 0.5
    nu: Optional[float] = None
    R: float = 1.0
    max_iter: int = 30
    quad_nodes_per_decade: int = 320
    tol: float = 1e-10
    quad_tol: float = 1e-3
    coefficient_window: float = 0.1
    source_sign: str = "consistent"

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.nu is None:
            self.nu = self.gamma / 4
        if self.nu > self.gamma / 4 + 1e-15:
            raise ValueError("nu must not exceed gamma/4")
        if self.t0 < 1:
            raise ValueError("t0 must be at least 1")
        if self.T_max < 100 * self.t0 * (1 - 1e-12):
            raise ValueError("T_max must be at least 100 t0")
        if self.source_sign not in ("consistent", "as_printed"):
            raise ValueError("source_sign must be 'consistent' or 'as_printed'")

    def nodes(self) -> np.ndarray:
        """Geometric quadrature nodes on ``[t0, T_max]``; the interval count is a multiple of 4."""
        decades = np.log10(self.T_max / self.t0)
        k = int(4 * np.ceil(self.quad_nodes_per_decade * decades / 4))
        return self.t0 * (self.T_max / self.t0) ** (np.arange(k + 1) / k)

    def with_horizon(self, T_max: float) -> "WaveOpConfig":
        d = asdict(self)
        d["T_max"] = T_max
        return WaveOpConfig(**d)


# ------------------------------------------------------------ pointwise terms

def _phase(alpha: float, t: float, power: float = 1.0) -> complex:
    return np.exp(-1j * power * alpha * np.log(t))


def source_F0(z_plus: ComplexField, v_f: ComplexField, asym, t: float) -> ComplexField:
    """``2(|v_f|^2 - |f|_inf^2) z_plus + v_f^2 e^{-i alpha log t} conj(z_plus)``."""
    vf, zp = v_f.values, z_plus.values
    vals = 2 * (np.abs(vf) ** 2 - asym.f_inf ** 2) * zp + vf * vf * _phase(asym.alpha, t) * np.conj(zp)
    return ComplexField(z_plus.grid, vals, t)


def linear_F1(z: ComplexField, v_f: ComplexField, asym, t: float) -> ComplexField:
    """Same form as the source, acting on ``z``."""
    return source_F0(z, v_f, asym, t)


def nlt(u: ComplexField, v_f: ComplexField, asym, t: float) -> ComplexField:
    """``2 v_f e^{-i(alpha/2) log t}|u|^2 + conj(v_f) e^{i(alpha/2) log t} u^2 + |u|^2 u``."""
    uu, vf = u.values, v_f.values
    p = _phase(asym.alpha, t, 0.5)
    vals = 2 * vf * p * np.abs(uu) ** 2 + np.conj(vf) * np.conj(p) * uu * uu + np.abs(uu) ** 2 * uu
    return ComplexField(u.grid, vals, t)


class _Coefficients:
    """Tapered coefficient fields at the quadrature nodes, cached when they fit in memory."""

    def __init__(self, background: Background, grid: SpatialGrid, nodes: np.ndarray,
                 window_fraction: float, cache_limit_bytes: float = 4e8):
        self.bg = background
        self.grid = grid
        self.nodes = nodes
        self.window = cosine_window(grid, window_fraction)
        self.keep = 3 * 16 * grid.n * nodes.size <= cache_limit_bytes
        self._cache: dict = {}

    def __call__(self, k: int):
        if k in self._cache:
            return self._cache[k]
        t = self.nodes[k]
        bg = self.bg
        vf = bg.vf(self.grid.x, t)
        c1 = self.window * 2 * (np.abs(vf) ** 2 - bg.f_inf_sq)
        c2 = self.window * vf * vf * _phase(bg.alpha, t)
        vfw = self.window * vf * _phase(bg.alpha, t, 0.5)
        out = (c1, c2, vfw)
        if self.keep:
            self._cache[k] = out
        return out


def _integrand(k, t, zk, zp, coeffs, terms, f0_sign):
    c1, c2, vfw = coeffs(k)
    g = np.zeros_like(zp)
    if "F0" in terms:
        g += f0_sign * (c1 * zp + c2 * np.conj(zp))
    if zk is not None and "F1" in terms:
        g += c1 * zk + c2 * np.conj(zk)
    if "NLT" in terms:
        u = zp if zk is None else zk + zp
        au2 = np.abs(u) ** 2
        g += 2 * vfw * au2 + np.conj(vfw) * u * u + au2 * u
    return g


def apply_B(z: Optional[np.ndarray], u_plus: ComplexField, cfg: WaveOpConfig,
            background: Background, terms: Sequence[str] = TERMS,
            coeffs: Optional[_Coefficients] = None) -> Trajectory:
    """``Bz`` at every quadrature node.

    ``z`` is an array of shape ``(nodes, n)`` (or a ``Trajectory`` on
    ``cfg.nodes()``, or ``None`` for zero). The cumulative integral from
    each node to ``T_max`` uses Simpson panels, with a three-point end
    correction at nodes of the other parity. The same integrand sampled at
    every other node gives a coarse estimate; their relative gap, divided
    by 15, is stored as ``meta["quad_error"]`` and must stay below
    ``cfg.quad_tol``.
    """
    nodes = cfg.nodes()
    grid = u_plus.grid
    if isinstance(z, Trajectory):
        if z.times.size != nodes.size or not np.allclose(z.times, nodes, rtol=1e-12):
            raise ValueError("z must be sampled on the quadrature nodes")
        z = z.values()
    if z is not None and z.shape != (nodes.size, grid.n):
        raise ValueError("z has the wrong shape")
    unknown = set(terms) - set(TERMS)
    if unknown:
        raise ValueError(f"unknown terms {unknown}")
    coeffs = coeffs or _Coefficients(background, grid, nodes, cfg.coefficient_window)
    f0_sign = 1.0 if cfg.source_sign == "consistent" else -1.0
    xi2 = grid.xi ** 2
    up_hat = fft(u_plus.values)
    K = nodes.size - 1
    h = np.log(nodes[1] / nodes[0])

    out = np.empty((K + 1, grid.n), dtype=complex)
    H = {}
    C_even = np.zeros(grid.n, dtype=complex)   # cumulative from T at nodes with k = K mod 2
    C_coarse = np.zeros(grid.n, dtype=complex)  # step-2h Simpson at nodes with k = K mod 4
    gap, scale = 0.0, 0.0

    def h_at(k):
        if k not in H:
            t = nodes[k]
            zp = ifft(np.exp(-1j * t * xi2) * up_hat)
            g = _integrand(k, t, None if z is None else z[k], zp, coeffs, terms, f0_sign)
            H[k] = np.exp(1j * t * xi2) * fft(g)
        return H[k]

    for k in range(K, -1, -1):
        if k == K:
            C = np.zeros(grid.n, dtype=complex)
        elif (K - k) % 2 == 0:
            C_even = C_even + h / 3 * (h_at(k) + 4 * h_at(k + 1) + h_at(k + 2))
            C = C_even
            if (K - k) % 4 == 0:
                C_coarse = C_coarse + 2 * h / 3 * (h_at(k) + 4 * h_at(k + 2) + h_at(k + 4))
                gap = max(gap, np.linalg.norm(C - C_coarse))
        elif k == K - 1:
            C = h / 12 * (-h_at(K - 2) + 8 * h_at(K - 1) + 5 * h_at(K))
        else:
            C = C_even + h / 12 * (5 * h_at(k) + 8 * h_at(k + 1) - h_at(k + 2))
        scale = max(scale, np.linalg.norm(C))
        out[k] = ifft(-0.5j * np.exp(-1j * nodes[k] * xi2) * C)
        for j in [j for j in H if j > k + 4]:
            del H[j]
    rel = gap / scale / 15.0 if scale > 0 else 0.0
    if rel > cfg.quad_tol:
        raise QuadratureError(
            f"Simpson estimate {rel:.2e} exceeds {cfg.quad_tol:.1e}; raise quad_nodes_per_decade")
    fields = [ComplexField(grid, out[k], nodes[k]) for k in range(K + 1)]
    return Trajectory(nodes, fields, "w-equation",
                      {"kind": "z", "quad_error": float(rel), "terms": list(terms),
                       "source_sign": cfg.source_sign})


# ---------------------------------------------------------------- Y norm

@dataclass
class YNormReport:
    l2_part: float
    l4_part: float
    total: float
    l2_curve: np.ndarray = field(repr=False, default=None)
    l4_curve: np.ndarray = field(repr=False, default=None)


def y_norm(z, cfg: WaveOpConfig, grid: Optional[SpatialGrid] = None) -> YNormReport:
    """``sup t^nu ||z(t)||_2 + sup t^nu ||z||_{L^4((t, T), L^inf)}`` over the nodes.

    The spatial sup is the grid maximum and the time integral is the
    trapezoid rule truncated at ``T_max``.
    """
    if isinstance(z, Trajectory):
        grid = z.grid
        times = z.times
        z = z.values()
    else:
        times = cfg.nodes()
    if grid is None:
        raise ValueError("grid is needed for array input")
    l2 = np.sqrt(grid.dx * np.sum(np.abs(z) ** 2, axis=1))
    sup = np.max(np.abs(z), axis=1)
    tail = l4_tail_norm(times, sup)
    w = times ** cfg.nu
    a, b = float(np.max(w * l2)), float(np.max(w * tail))
    return YNormReport(a, b, a + b, w * l2, w * tail)


# ------------------------------------------------------------ Picard iteration

@dataclass
class ContractionHistory:
    differences: list
    ratios: list
    y_norms: list
    iterations: int
    residual: float
    converged: bool
    quad_error: float
    ball_violations: int = 0


def picard_solve(u_plus: ComplexField, cfg: WaveOpConfig, background: Background,
                 ) -> tuple[Trajectory, ContractionHistory]:
    """Iterate ``z_{n+1} = B z_n`` from ``z_0 = 0`` until ``||z_{n+1} - z_n||_Y < tol``.

    Three consecutive contraction ratios at or above 1 abort the iteration.
    The fixed-point residual ``||B z* - z*||_Y`` is computed with one
    further application of ``B``.
    """
    nodes = cfg.nodes()
    grid = u_plus.grid
    coeffs = _Coefficients(background, grid, nodes, cfg.coefficient_window)
    z = None
    diffs, ratios, norms = [], [], []
    bad = 0
    ball = 0
    qerr = 0.0
    converged = False
    it = 0
    traj = None
    for it in range(1, cfg.max_iter + 1):
        traj = apply_B(z, u_plus, cfg, background, coeffs=coeffs)
        qerr = max(qerr, traj.meta["quad_error"])
        new = traj.values()
        d = new if z is None else new - z
        diffs.append(y_norm(d, cfg, grid).total)
        norms.append(y_norm(new, cfg, grid).total)
        if norms[-1] > cfg.R:
            ball += 1
        if len(diffs) > 1:
            ratios.append(diffs[-1] / diffs[-2] if diffs[-2] > 0 else 0.0)
            bad = bad + 1 if ratios[-1] >= 1 else 0
            if bad >= 3:
                raise PicardDivergence("contraction ratio >= 1 for three consecutive iterations",
                                       ratios)
        z = new
        if diffs[-1] < cfg.tol:
            converged = True
            break
    final = apply_B(z, u_plus, cfg, background, coeffs=coeffs)
    residual = y_norm(final.values() - z, cfg, grid).total
    hist = ContractionHistory(diffs, ratios, norms, it, residual, converged, qerr, ball)
    traj.meta.update({"residual": residual, "iterations": it})
    return traj, hist


# ------------------------------------------------------------ I1 / I2 pieces

def _zero_safe(xi: np.ndarray, dxi: float) -> np.ndarray:
    return np.where(xi == 0, 0.5 * dxi, np.abs(xi))


def decompose_I1_I2(u_plus: ComplexField, asym, t: float, cfg: WaveOpConfig,
                    horizon: Optional[float] = None, nodes_per_decade: int = 60) -> dict:
    """The pieces ``I1`` and ``I2`` of the term driven by the tail of ``v_f^2``.

    ``I1`` is evaluated on the Fourier side,
    ``f_inf^2 e^{-2i delta log 2} e^{-i t xi^2} e^{-2i delta log|xi|}
    m(-xi) conj(u_hat(-xi)) A_t(xi)``, where the phase
    ``e^{-i alpha log tau}`` of ``conj(omega_plus)`` is kept inside the
    time integral so the kernel exponent is ``delta + alpha``. At ``xi = 0``
    the modulus ``|xi|`` is replaced by ``dxi/2``. ``I2`` is the Duhamel
    integral of the correction
    ``-c1 e^{-i x^2/4 tau} (g (e^{-i y^2/4 tau} - 1))^(-x/2 tau)`` with
    ``g = conj(T_delta omega_plus)``, truncated at ``horizon``.
    """
    I1 = i1_field(u_plus, asym, t)
    grid = u_plus.grid
    xi = grid.xi
    spec = MultiplierSpec.from_asymptotics(asym)
    delta, alpha = asym.delta, asym.alpha
    pref = asym.f_inf ** 2 * np.exp(-2j * delta * np.log(2.0))

    # I2 by direct quadrature in log tau
    T = horizon or cfg.T_max
    sym, _ = tdelta_symbol(grid, spec)
    Tu = ifft(sym * fft(u_plus.values))
    g_base = np.conj(Tu)
    x = grid.x
    k = int(2 * np.ceil(nodes_per_decade * np.log10(T / t) / 2))
    taus = t * (T / t) ** (np.arange(k + 1) / k)
    hs = np.log(taus[1] / taus[0])
    w = np.full(k + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    w *= hs / 3
    acc = np.zeros(grid.n, dtype=complex)
    xi2 = xi ** 2
    gf = ComplexField(grid, g_base)
    for tau, wt in zip(taus, w):
        gt = g_base * np.exp(-1j * alpha * np.log(tau)) * (np.exp(-0.25j * x * x / tau) - 1.0)
        ghat = gf.with_values(gt).fourier_at(-x / (2 * tau))
        inner = -SQRT_PI_I * np.exp(-0.25j * x * x / tau) * ghat * tau ** (-0.5 - 1j * delta)
        # e^{i (t - tau) d^2} applied in Fourier space
        acc += wt * np.exp(1j * tau * xi2) * fft(inner)
    I2 = ComplexField(grid, pref * ifft(np.exp(-1j * t * xi2) * acc), t, {"piece": "I2", "horizon": T})
    return {"I1": I1, "I2": I2}


def fit_I1_constant(u_plus: ComplexField, asym, t_values, gamma: float) -> tuple[float, np.ndarray]:
    """Smallest ``C`` with ``||I1(t)|| <= C t^{-gamma/4} ||u_plus||_{L^2(|x|^gamma)}`` on the samples."""
    weight = u_plus.weighted_l2_norm(gamma)
    ratios = []
    for t in t_values:
        I1 = i1_field(u_plus, asym, t)
        ratios.append(I1.l2_norm() * t ** (gamma / 4) / weight)
    ratios = np.array(ratios)
    return float(ratios.max()), ratios


def i1_field(u_plus: ComplexField, asym, t: float) -> ComplexField:
    """``I1`` at time ``t``; see ``decompose_I1_I2``."""
    grid = u_plus.grid
    xi = grid.xi
    spec = MultiplierSpec.from_asymptotics(asym)
    delta, alpha = asym.delta, asym.alpha
    pref = asym.f_inf ** 2 * np.exp(-2j * delta * np.log(2.0))
    uh = u_plus.fourier()
    # conj(u_hat(-xi)) on the FFT grid sits at index -k
    uh_neg_conj = np.conj(np.roll(uh[::-1], 1))
    axi = _zero_safe(xi, grid.dxi)
    m_neg = np.where(xi == 0, 0.5 * (spec.m(1.0) + spec.m(-1.0)), spec.m(-xi))
    At = kernel_At(axi, t, delta + alpha)
    I1_hat = (pref * np.exp(-1j * t * xi ** 2) * np.exp(-2j * delta * np.log(axi))
              * m_neg * uh_neg_conj * At)
    vals = ifft(I1_hat * np.exp(1j * grid.x_min * xi) * 2 * np.pi / grid.dx)
    return ComplexField(grid, vals, t, {"piece": "I1"})
