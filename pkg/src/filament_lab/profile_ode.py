"""Self-similar profile ODEs.

Two equivalent descriptions of the same object are integrated here:

* the real curve system ``G'' = 1/2 (I + R_a) G x G'`` where ``R_a`` is the
  generator of rotations about the third axis scaled by ``a``;
* the complex profile equation ``f'' + i (x/2) f' + f (|f|^2 - A)/2 = 0``.

Both are integrated from the origin outwards with a compiled DOP853 pair
(scipy's coefficient tables, see ``_rk``).
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from ._rk import CURVE, PROFILE, dop853

DEFAULT_HALF_LENGTH = 60.0
DEFAULT_TOL = 1e-10
# ``tol`` is the global accuracy target; the local controller runs tighter
LOCAL_FACTOR = 1e-2
LOCAL_FLOOR = 1e-14


class IntegrationError(RuntimeError):
    """Raised when the adaptive integrator cannot continue."""

    def __init__(self, message: str, last_s: float):
        super().__init__(f"{message} (last good abscissa {last_s:.6g})")
        self.last_s = last_s


class AsymptoticFitError(RuntimeError):
    """Raised when the tail fit stays poor after widening the window."""

    def __init__(self, message: str, residual: float, window: tuple[float, float]):
        super().__init__(f"{message}: residual {residual:.3e} on window {window}")
        self.residual = residual
        self.window = window


def rotation_generator(a: float) -> np.ndarray:
    """Antisymmetric matrix generating rotations about the third axis."""
    return np.array([[0.0, -a, 0.0], [a, 0.0, 0.0], [0.0, 0.0, 0.0]])


def rotation_about_axis3(angle: float) -> np.ndarray:
    """Closed form of ``expm(rotation_generator(1) * angle)``."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class GammaParams:
    """Initial data ``(G(0), G'(0))`` for the curve system with parameter ``a``."""

    a: float
    gamma0: tuple[float, float, float]
    dgamma0: tuple[float, float, float]
    family: str = "general"
    label: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        g0 = np.asarray(self.gamma0, dtype=float)
        t0 = np.asarray(self.dgamma0, dtype=float)
        if g0.shape != (3,) or t0.shape != (3,):
            raise ValueError("gamma0 and dgamma0 must be 3-vectors")
        if abs(np.linalg.norm(t0) - 1.0) > 1e-12:
            raise ValueError(f"|dgamma0| must be 1, got {np.linalg.norm(t0)!r}")
        compat = (np.eye(3) + rotation_generator(self.a)) @ g0 @ t0
        if abs(compat) > 1e-12:
            raise ValueError(f"compatibility (I+R)G(0).G'(0) = {compat:.3e} is not zero")
        object.__setattr__(self, "gamma0", tuple(float(v) for v in g0))
        object.__setattr__(self, "dgamma0", tuple(float(v) for v in t0))


@dataclass(frozen=True)
class OddParams:
    """Odd family: ``G(0) = 0`` and ``G'(0) = (0, sqrt(1 - lam^2), lam)``."""

    a: float
    lam: float

    def __post_init__(self):
        if not -1.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [-1, 1]")

    def to_gamma(self) -> GammaParams:
        lam = float(self.lam)
        return GammaParams(
            self.a,
            (0.0, 0.0, 0.0),
            (0.0, float(np.sqrt(max(1.0 - lam * lam, 0.0))), lam),
            family="odd",
            label={"a": self.a, "lambda": lam},
        )


@dataclass(frozen=True)
class MixedParams:
    """Mixed-symmetry family: ``G(0) = (2 c0 / sqrt(1 + a^2), 0, 0)``, ``G'(0) = (0, 0, sign)``."""

    a: float
    c0: float
    sign: int = 1

    def __post_init__(self):
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def to_gamma(self) -> GammaParams:
        r = 2.0 * self.c0 / np.sqrt(1.0 + self.a**2)
        return GammaParams(
            self.a,
            (float(r), 0.0, 0.0),
            (0.0, 0.0, float(self.sign)),
            family="mixed",
            label={"a": self.a, "c0": self.c0, "sign": self.sign},
        )


def _as_gamma(params) -> GammaParams:
    return params if isinstance(params, GammaParams) else params.to_gamma()


@dataclass
class CurveProfile:
    """Sampled solution of the curve system on a symmetric arclength grid."""

    s: np.ndarray
    gamma: np.ndarray
    tangent: np.ndarray
    curvature: np.ndarray
    t3: np.ndarray
    a: float
    params: Optional[GammaParams] = None
    tol: float = DEFAULT_TOL
    dense: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    @property
    def half_length(self) -> float:
        return float(self.s[-1])

    def evaluate(self, s) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(G(s), T(s))`` with shapes ``(..., 3)``."""
        s = np.asarray(s, dtype=float)
        if self.dense is not None:
            y = self.dense(s.ravel())
            g = y[:3].T.reshape(s.shape + (3,))
            t = y[3:].T.reshape(s.shape + (3,))
            return g, t
        # cubic Hermite through G with slope T; the tangent itself is interpolated linearly
        g = CubicHermiteSpline(self.s, self.gamma, self.tangent, axis=0)(s)
        t = np.stack([np.interp(s, self.s, self.tangent[:, k]) for k in range(3)], axis=-1)
        return g, t

    def to_csv(self, path) -> None:
        header = {
            "kind": "curve_profile",
            "a": self.a,
            "tol": self.tol,
            "gamma0": None if self.params is None else list(self.params.gamma0),
            "dgamma0": None if self.params is None else list(self.params.dgamma0),
            "A": None if self.params is None else hasimoto_A(self.params),
            "label": {} if self.params is None else self.params.label,
        }
        cols = np.column_stack([self.s, self.gamma, self.tangent, self.curvature])
        _write_csv(path, header, ["s", "G1", "G2", "G3", "T1", "T2", "T3", "curvature"], cols)

    @classmethod
    def from_csv(cls, path) -> "CurveProfile":
        header, data = _read_csv(path)
        params = None
        if header.get("gamma0") is not None:
            params = GammaParams(header["a"], tuple(header["gamma0"]), tuple(header["dgamma0"]))
        return cls(
            s=data[:, 0],
            gamma=data[:, 1:4],
            tangent=data[:, 4:7],
            curvature=data[:, 7],
            t3=data[:, 6],
            a=float(header["a"]),
            params=params,
            tol=float(header["tol"]),
        )


@dataclass
class ProfileSolution:
    """Sampled complex profile ``f`` and ``f'`` with its conserved energy."""

    x: np.ndarray
    f: np.ndarray
    fprime: np.ndarray
    A: float
    E0: float
    tol: float = DEFAULT_TOL
    residual: float = 0.0
    valid: bool = True
    meta: dict = field(default_factory=dict)
    dense: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    @property
    def half_length(self) -> float:
        return float(self.x[-1])

    def evaluate(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(f(x), f'(x))``; uses the dense integrator output when present."""
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > self.half_length * (1 + 1e-12)):
            raise ValueError(
                f"profile evaluated outside its grid (|x| <= {self.half_length:g})"
            )
        if self.dense is not None:
            y = self.dense(x.ravel())
            f = (y[0] + 1j * y[1]).reshape(x.shape)
            fp = (y[2] + 1j * y[3]).reshape(x.shape)
            return f, fp
        fpp = _f_second_derivative(self.x, self.f, self.fprime, self.A)
        f = CubicHermiteSpline(self.x, self.f, self.fprime)(x)
        fp = CubicHermiteSpline(self.x, self.fprime, fpp)(x)
        return f, fp

    def to_csv(self, path) -> None:
        header = {"kind": "profile", "A": self.A, "E0": self.E0, "tol": self.tol}
        header.update(self.meta)
        cols = np.column_stack(
            [self.x, self.f.real, self.f.imag, self.fprime.real, self.fprime.imag]
        )
        _write_csv(path, header, ["x", "re_f", "im_f", "re_fp", "im_fp"], cols)

    @classmethod
    def from_csv(cls, path) -> "ProfileSolution":
        header, data = _read_csv(path)
        meta = {k: v for k, v in header.items() if k not in ("kind", "A", "E0", "tol")}
        sol = cls(
            x=data[:, 0],
            f=data[:, 1] + 1j * data[:, 2],
            fprime=data[:, 3] + 1j * data[:, 4],
            A=float(header["A"]),
            E0=float(header["E0"]),
            tol=float(header["tol"]),
            meta=meta,
        )
        sol.residual = energy_residual(sol)
        sol.valid = sol.residual <= 100 * sol.tol
        return sol


def _write_csv(path, header: dict, names: Sequence[str], cols: np.ndarray) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        fh.write(",".join(names) + "\n")
        for row in cols:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _read_csv(path) -> tuple[dict, np.ndarray]:
    with Path(path).open("r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path}: missing JSON header line")
        header = json.loads(first[2:])
        fh.readline()
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data


def _f_second_derivative(x, f, fp, A):
    return -0.5j * x * fp - 0.5 * f * (np.abs(f) ** 2 - A)


class _TwoSidedDense:
    """Dense output glued from the two half-line integrations."""

    def __init__(self, neg, pos, y0):
        self.neg, self.pos, self.y0 = neg, pos, np.asarray(y0, dtype=float)

    def __call__(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty((self.y0.size, s.size))
        right = s > 0
        left = s < 0
        zero = ~(right | left)
        if right.any():
            out[:, right] = self.pos(s[right])
        if left.any():
            out[:, left] = self.neg(s[left])
        if zero.any():
            out[:, zero] = self.y0[:, None]
        return out


_STATUS = {1: "step size underflow", 2: "step budget exhausted"}


def _local_tolerances(tol, scale):
    rtol = max(tol * LOCAL_FACTOR, LOCAL_FLOOR)
    return rtol, rtol * 1e-2 * scale


def _integrate_two_sided(kind, par, y0, half_length, tol, scale, n_samples):
    rtol, atol = _local_tolerances(tol, scale)
    dense = []
    for end in (-half_length, half_length):
        status, sol = dop853(kind, par, y0, end, rtol, atol)
        if status != 0:
            raise IntegrationError(f"DOP853 failed: {_STATUS[status]}", sol.t_end)
        dense.append(sol)
    glued = _TwoSidedDense(dense[0], dense[1], y0)
    grid = np.linspace(-half_length, half_length, n_samples)
    return grid, glued(grid), glued


def _default_samples(half_length: float) -> int:
    # 100 samples per unit length, odd so that 0 is a node
    return 2 * int(np.ceil(100 * half_length)) + 1


def integrate_gamma(params, half_length: float = DEFAULT_HALF_LENGTH,
                    tol: float = DEFAULT_TOL, n_samples: Optional[int] = None) -> CurveProfile:
    """Integrate the curve system on ``[-half_length, half_length]``.

    Parameters
    ----------
    params : GammaParams, OddParams or MixedParams
    half_length : float
        Half-width ``L`` of the arclength interval.
    tol : float
        Relative tolerance of the integrator, in ``[1e-13, 1e-6]``.
    """
    if half_length <= 0:
        raise ValueError("half_length must be positive")
    if not 1e-13 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-13, 1e-6]")
    gp = _as_gamma(params)
    n = n_samples or _default_samples(half_length)
    a = float(gp.a)
    g0 = np.array(gp.gamma0)
    t0 = np.array(gp.dgamma0)
    y0 = np.concatenate([g0, t0])

    if not np.any(g0) and a == 0.0:
        # odd data with a = 0: the right-hand side vanishes identically
        s = np.linspace(-half_length, half_length, n)
        gamma = s[:, None] * t0[None, :]
        tangent = np.broadcast_to(t0, gamma.shape).copy()

        def dense(q):
            q = np.atleast_1d(q)
            return np.concatenate([q[None, :] * t0[:, None], np.repeat(t0[:, None], q.size, 1)])

        return CurveProfile(s, gamma, tangent, np.zeros(n), tangent[:, 2].copy(), a, gp, tol, dense)

    s, y, dense = _integrate_two_sided(CURVE, [a], y0, half_length, tol, 1.0, n)
    gamma = y[:3].T
    tangent = y[3:].T
    p = gamma @ (np.eye(3) + rotation_generator(a)).T
    curvature = 0.5 * np.linalg.norm(np.cross(p, tangent), axis=1)
    return CurveProfile(s, gamma, tangent, curvature, tangent[:, 2].copy(), a, gp, tol, dense)


def integrate_profile_f(A: float, f0: complex, df0: complex,
                        half_length: float = DEFAULT_HALF_LENGTH, tol: float = DEFAULT_TOL,
                        n_samples: Optional[int] = None, meta: Optional[dict] = None
                        ) -> ProfileSolution:
    """Integrate the complex profile equation outward from ``x = 0``.

    The energy ``E0 = |f'(0)|^2 + (|f(0)|^2 - A)^2 / 4`` is fixed by the data;
    the returned solution carries the maximal conservation defect and is
    marked invalid when that defect exceeds ``100 * tol``.
    """
    if not (np.isfinite(f0) and np.isfinite(df0)):
        raise ValueError("initial data must be finite")
    if not 1e-13 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-13, 1e-6]")
    n = n_samples or _default_samples(half_length)
    f0, df0 = complex(f0), complex(df0)
    E0 = abs(df0) ** 2 + 0.25 * (abs(f0) ** 2 - A) ** 2
    y0 = [f0.real, f0.imag, df0.real, df0.imag]
    meta = dict(meta or {})
    if f0 == 0 and df0 == 0:
        x = np.linspace(-half_length, half_length, n)
        z = np.zeros(n, dtype=complex)

        def dense(q):
            return np.zeros((4, np.atleast_1d(q).size))

        return ProfileSolution(x, z, z.copy(), float(A), float(E0), tol, 0.0, True, meta, dense)

    scale = max(1.0, abs(f0), abs(df0), np.sqrt(abs(A)))
    x, y, dense = _integrate_two_sided(PROFILE, [float(A)], y0, half_length, tol, scale, n)
    sol = ProfileSolution(x, y[0] + 1j * y[1], y[2] + 1j * y[3], float(A), float(E0), tol,
                          meta=meta, dense=dense)
    sol.residual = energy_residual(sol)
    sol.valid = sol.residual <= 100 * tol
    if not sol.valid:
        warnings.warn(f"profile energy defect {sol.residual:.3e} exceeds 100*tol", RuntimeWarning)
    return sol


def energy_residual(sol: ProfileSolution) -> float:
    """Max over the grid of ``| |f'|^2 + (|f|^2 - A)^2 / 4 - E0 |``."""
    e = np.abs(sol.fprime) ** 2 + 0.25 * (np.abs(sol.f) ** 2 - sol.A) ** 2
    return float(np.max(np.abs(e - sol.E0)))


def hasimoto_A(params) -> float:
    """``A = a T3(0) + |(I + R_a) G(0)|^2 / 4``."""
    gp = _as_gamma(params)
    p = (np.eye(3) + rotation_generator(gp.a)) @ np.array(gp.gamma0)
    return float(gp.a * gp.dgamma0[2] + p @ p / 4.0)


def hasimoto_frame(params) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal frame ``(T(0), e1, e2)`` at the origin, with ``e2 = T x e1``.

    ``e1`` points along ``T'(0)`` when the curvature there is non-zero,
    otherwise along the normal part of ``T''(0)``.
    """
    gp = _as_gamma(params)
    M = np.eye(3) + rotation_generator(gp.a)
    g0 = np.array(gp.gamma0)
    t0 = np.array(gp.dgamma0)
    p0 = M @ g0
    dt0 = 0.5 * np.cross(p0, t0)
    ddt0 = 0.5 * (np.cross(M @ t0, t0) + np.cross(p0, dt0))
    ddt_normal = ddt0 - (ddt0 @ t0) * t0
    ref = dt0 if np.linalg.norm(dt0) > 1e-14 else ddt_normal
    if np.linalg.norm(ref) <= 1e-14:
        ref = np.cross(t0, [1.0, 0.0, 0.0])
        if np.linalg.norm(ref) < 1e-8:
            ref = np.cross(t0, [0.0, 1.0, 0.0])
    e1 = ref / np.linalg.norm(ref)
    return t0, e1, np.cross(t0, e1)


def profile_initial_data(params) -> tuple[float, complex, complex]:
    """Profile data ``(A, f(0), f'(0))`` matching the curve data.

    The filament function at the origin is read off the frame of
    ``hasimoto_frame``: ``f(0) = T'(0).(e1 + i e2)`` and
    ``f'(0) = T''(0).(e1 + i e2)``. Another frame only rotates the global
    phase of ``f``.
    """
    gp = _as_gamma(params)
    M = np.eye(3) + rotation_generator(gp.a)
    g0 = np.array(gp.gamma0)
    t0, e1, e2 = hasimoto_frame(gp)
    p0 = M @ g0
    dt0 = 0.5 * np.cross(p0, t0)
    ddt0 = 0.5 * (np.cross(M @ t0, t0) + np.cross(p0, dt0))
    f0 = complex(dt0 @ e1, dt0 @ e2)
    df0 = complex(ddt0 @ e1, ddt0 @ e2)
    return hasimoto_A(gp), f0, df0


def integrate_profile_from_params(params, half_length: float = DEFAULT_HALF_LENGTH,
                                  tol: float = DEFAULT_TOL, n_samples: Optional[int] = None
                                  ) -> ProfileSolution:
    gp = _as_gamma(params)
    A, f0, df0 = profile_initial_data(gp)
    meta = {"a": gp.a, "family": gp.family}
    meta.update(gp.label)
    return integrate_profile_f(A, f0, df0, half_length, tol, n_samples, meta)


@dataclass(frozen=True)
class IdentityResiduals:
    modulus: float
    derivative: float
    resampled: bool = False

    def __iter__(self):
        yield self.modulus
        yield self.derivative


def key_identity_residuals(curve: CurveProfile, sol: ProfileSolution, a: float) -> IdentityResiduals:
    """Sup residuals of ``|f|^2 = -a T3 + A`` and ``|f'|^2 = a^2 (1 - T3^2) / 4``."""
    same = curve.s.shape == sol.x.shape and np.allclose(curve.s, sol.x, rtol=0, atol=1e-12)
    if same:
        t3 = curve.t3
    else:
        inside = np.abs(sol.x) <= curve.half_length
        t3 = curve.evaluate(sol.x[inside])[1][:, 2]
    f2 = np.abs(sol.f) ** 2
    fp2 = np.abs(sol.fprime) ** 2
    if not same:
        f2, fp2 = f2[inside], fp2[inside]
    r1 = np.max(np.abs(f2 - (-a * t3 + sol.A)))
    r2 = np.max(np.abs(fp2 - 0.25 * a * a * (1.0 - t3 * t3)))
    return IdentityResiduals(float(r1), float(r2), not same)


@dataclass(frozen=True)
class AsymptoticData:
    """Large-|x| data of a profile.

    ``f_inf`` is the limit of ``|f|`` at ``+inf`` and ``f_inf_minus`` the one
    at ``-inf``; ``delta = f_inf^2 - A`` and ``alpha = 2 f_inf^2 - A``.
    """

    f_inf: float
    fp_inf: float
    c_plus: float
    c_minus: float
    d_plus: float
    d_minus: float
    t3_inf: float
    delta: float
    alpha: float
    A: float = 0.0
    E0: float = 0.0
    f_inf_minus: float = float("nan")
    fit_residual: float = 0.0
    decay_power: float = float("nan")
    window: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if abs(self.delta - (self.f_inf**2 - self.A)) > 1e-9 * max(1.0, abs(self.A)):
            raise ValueError("delta inconsistent with f_inf and A")
        if abs(self.alpha - (2 * self.f_inf**2 - self.A)) > 1e-9 * max(1.0, abs(self.A)):
            raise ValueError("alpha inconsistent with f_inf and A")

    @property
    def symmetric_gap(self) -> float:
        return abs(self.f_inf - self.f_inf_minus)

    def to_json(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else float(v))
                for k, v in self.__dict__.items()}

    @classmethod
    def from_json(cls, d: dict) -> "AsymptoticData":
        d = dict(d)
        if "window" in d:
            d["window"] = tuple(d["window"])
        return cls(**d)


def _chirp_phase(x, k):
    return 0.25 * x * x + k * np.log(x)


def _tail_design(x, k, nterm):
    th = _chirp_phase(x, k)
    cols = [np.ones_like(x)]
    for p in range(1, nterm + 1):
        cols.append(x ** (-p))
        for m in range(1, p + 1):
            cols.append(np.cos(m * th) / x**p)
            cols.append(np.sin(m * th) / x**p)
    return np.array(cols).T


def tail_limit(x: np.ndarray, y: np.ndarray, phase_coeff: Callable[[float], float],
               nterm: int = 4, iterations: int = 4) -> tuple[float, float]:
    """Limit of a real tail ``y(x)`` as ``x -> +inf`` by linear least squares.

    The model is a constant plus inverse powers of ``x`` modulated by
    harmonics of the chirp ``x^2/4 + k log x``; ``k`` depends on the limit
    itself and is refreshed from the current estimate.

    Returns ``(limit, max abs residual)``.
    """
    limit = float(np.mean(y))
    resid = np.inf
    for _ in range(iterations):
        M = _tail_design(x, phase_coeff(limit), nterm)
        coef, *_ = np.linalg.lstsq(M, y, rcond=None)
        limit = float(coef[0])
        resid = float(np.max(np.abs(M @ coef - y)))
    return limit, resid


def _phase_design(x, delta, alpha):
    lg = np.log(np.abs(x))
    e2 = np.exp(1j * delta * lg)
    e3 = np.exp(-1j * (0.25 * x * x + alpha * lg))
    cols = [e2, e3 / x, e2 / x, e3 / x**2, e2 / x**2,
            np.exp(1j * (2 * delta * lg + 0.25 * x * x + alpha * lg)) / x**2]
    return np.array(cols).T


def _phase_coef(x, f, delta, alpha):
    coef, *_ = np.linalg.lstsq(_phase_design(x, delta, alpha), f, rcond=None)
    return coef


def _phase_fit(x, f, delta, alpha):
    """Complex least-squares fit of the two-term expansion on one tail.

    ``x`` is signed; logarithms use ``|x|``. Returns ``(C2, C3, residual)``
    with ``f ~ C2 e^{i delta log|x|} + C3 e^{-i x^2/4 - i alpha log|x|} / x``.
    """
    M = _phase_design(x, delta, alpha)
    coef = _phase_coef(x, f, delta, alpha)
    resid = float(np.max(np.abs(M @ coef - f)))
    return coef[0], coef[1], resid


def _decay_power(x, dev, nbins=8):
    edges = np.linspace(x[0], x[-1], nbins + 1)
    xs, env = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (x >= lo) & (x < hi)
        if sel.sum() < 4:
            continue
        xs.append(np.mean(x[sel]))
        env.append(np.max(np.abs(dev[sel])))
    xs, env = np.array(xs), np.array(env)
    if np.any(env <= 0):
        return float("nan")
    slope = np.polyfit(np.log(xs), np.log(env), 1)[0]
    return float(-slope)


def extract_asymptotics(curve: Optional[CurveProfile], sol: ProfileSolution,
                        fit_window: Optional[tuple[float, float]] = None,
                        threshold: float = 1e-5, nterm: int = 4) -> AsymptoticData:
    """Fit the large-|x| behaviour of a profile and its curve.

    ``fit_window`` is a window ``(lo, hi)`` in ``|x|``; the default is
    ``[0.6 L, 0.95 L]``. On a poor fit the lower edge is moved to ``0.4 L``
    once before giving up.
    """
    L = sol.half_length
    windows = [fit_window or (0.6 * L, 0.95 * L)]
    windows.append((min(0.4 * L, windows[0][0]), windows[0][1]))
    A, E0 = sol.A, sol.E0
    err = None
    for lo, hi in windows:
        try:
            return _extract(curve, sol, (lo, hi), threshold, nterm, A, E0)
        except AsymptoticFitError as exc:
            err = exc
    raise err


def _extract(curve, sol, window, threshold, nterm, A, E0):
    lo, hi = window
    k_of = lambda lim2: 3.0 * lim2 - 2.0 * A  # noqa: E731
    sides = {}
    worst = 0.0
    scale = max(1.0, abs(A), E0)
    for sign in (1, -1):
        sel = (sign * sol.x >= lo) & (sign * sol.x <= hi)
        xs = sol.x[sel]
        ax = np.abs(xs)
        f2 = np.abs(sol.f[sel]) ** 2
        order = np.argsort(ax)
        lim2, res = tail_limit(ax[order], f2[order], k_of, nterm)
        lim2 = max(lim2, 0.0)
        worst = max(worst, res / scale)
        sides[sign] = (xs, sol.f[sel], ax[order], f2[order], lim2)
    if worst > threshold:
        raise AsymptoticFitError("profile tail fit failed", worst, window)

    f_inf = float(np.sqrt(sides[1][4]))
    f_inf_minus = float(np.sqrt(sides[-1][4]))
    delta = f_inf**2 - A
    alpha = 2 * f_inf**2 - A
    fp_inf = float(np.sqrt(max(E0 - 0.25 * delta**2, 0.0)))

    phases = {}
    for sign in (1, -1):
        xs, fs = sides[sign][0], sides[sign][1]
        d_side = sides[sign][4] - A
        a_side = 2 * sides[sign][4] - A
        c2, c3, pres = _phase_fit(xs, fs, d_side, a_side)
        worst = max(worst, pres / max(1.0, np.sqrt(scale)))
        phases[sign] = (float(np.angle(c2)) % (2 * np.pi), float(np.angle(c3 / 2j)) % (2 * np.pi))

    ax, f2 = sides[1][2], sides[1][3]
    power = _decay_power(ax, f2 - sides[1][4])

    if curve is not None:
        sel = (curve.s >= lo) & (curve.s <= hi)
        a = curve.a
        if a != 0:
            t3_inf, _ = tail_limit(curve.s[sel], curve.t3[sel],
                                   lambda t: k_of(-a * t + A), nterm)
        else:
            t3_inf = float(np.mean(curve.t3[sel]))
    else:
        a = sol.meta.get("a")
        t3_inf = (A - f_inf**2) / a if a else float("nan")

    return AsymptoticData(
        f_inf=f_inf, fp_inf=fp_inf,
        c_plus=phases[1][0], c_minus=phases[-1][0],
        d_plus=phases[1][1], d_minus=phases[-1][1],
        t3_inf=float(t3_inf), delta=float(delta), alpha=float(alpha), A=float(A),
        E0=float(E0), f_inf_minus=f_inf_minus, fit_residual=float(worst),
        decay_power=power, window=(float(lo), float(hi)),
    )


class ExtendedProfile:
    """Callable ``f(y)`` on all of R.

    Uses the integrated profile for ``|y| <= 0.9 L`` and the six-term
    two-scale tail expansion, fitted on ``[0.6 L, 0.95 L]``, beyond.
    """

    def __init__(self, sol: ProfileSolution, asym: AsymptoticData):
        self.sol = sol
        L = sol.half_length
        self.y0 = 0.9 * L
        self.coef = {}
        for sign in (1, -1):
            sel = (sign * sol.x >= 0.6 * L) & (sign * sol.x <= 0.95 * L)
            x = sol.x[sel]
            lim2 = asym.f_inf**2 if sign > 0 else asym.f_inf_minus**2
            delta, alpha = lim2 - sol.A, 2 * lim2 - sol.A
            self.coef[sign] = (_phase_coef(x, sol.f[sel], delta, alpha), delta, alpha)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.empty(y.shape, dtype=complex)
        inner = np.abs(y) <= self.y0
        if inner.any():
            out[inner] = self.sol.evaluate(y[inner])[0]
        for sign in (1, -1):
            m = (~inner) & (np.sign(y) == sign)
            if m.any():
                coef, delta, alpha = self.coef[sign]
                out[m] = _phase_design(y[m], delta, alpha) @ coef
        return out


def reflect_curve(curve: CurveProfile) -> tuple[np.ndarray, np.ndarray]:
    """``(G1(-s), -G2(-s), G3(-s))`` sampled on ``curve.s`` with its tangent."""
    flip = np.array([1.0, -1.0, 1.0])
    g = curve.gamma[::-1] * flip
    t = -curve.tangent[::-1] * flip
    return g, t


def reflected_params(params) -> GammaParams:
    """Initial data of the reflected curve; it solves the system with ``-a``."""
    gp = _as_gamma(params)
    flip = np.array([1.0, -1.0, 1.0])
    g0 = np.array(gp.gamma0) * flip
    t0 = -np.array(gp.dgamma0) * flip
    return GammaParams(-gp.a, tuple(g0), tuple(t0), family=gp.family, label=dict(gp.label))
