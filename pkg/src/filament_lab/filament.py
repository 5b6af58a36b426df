"""Curves of the binormal flow: the self-similar family and frame reconstruction."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import DOP853
from scipy.spatial.transform import Rotation

from .profile_ode import (
    CurveProfile,
    ProfileSolution,
    _read_csv,
    _write_csv,
    hasimoto_frame,
    rotation_about_axis3,
)
from .transforms import ComplexField

ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class FrameState:
    """Right-handed orthonormal triple ``(T, e1, e2)`` with ``T x e1 = e2``."""

    T: np.ndarray
    e1: np.ndarray
    e2: np.ndarray

    def __post_init__(self):
        for name in ("T", "e1", "e2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        Q = np.array([self.T, self.e1, self.e2])
        if np.max(np.abs(Q @ Q.T - np.eye(3))) > ORTHO_TOL:
            raise ValueError("frame is not orthonormal")
        if np.max(np.abs(np.cross(self.T, self.e1) - self.e2)) > ORTHO_TOL:
            raise ValueError("frame is not right-handed (T x e1 != e2)")

    @classmethod
    def from_tangent(cls, T, hint=(1.0, 0.0, 0.0)) -> "FrameState":
        T = np.asarray(T, dtype=float)
        T = T / np.linalg.norm(T)
        h = np.asarray(hint, dtype=float)
        e1 = h - (h @ T) * T
        if np.linalg.norm(e1) < 1e-8:
            h = np.array([0.0, 1.0, 0.0])
            e1 = h - (h @ T) * T
        e1 /= np.linalg.norm(e1)
        return cls(T, e1, np.cross(T, e1))


@dataclass
class Curve3D:
    """Polyline ``X(x)`` on an arclength grid, optionally with a frame per node."""

    x: np.ndarray
    points: np.ndarray
    time: float = 1.0
    tangent: Optional[np.ndarray] = None
    e1: Optional[np.ndarray] = None
    e2: Optional[np.ndarray] = None
    curvature: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def frame(self, i: int) -> FrameState:
        if self.e1 is None:
            raise ValueError("curve carries no frames")
        return FrameState(self.tangent[i], self.e1[i], self.e2[i])

    def arclength_defect(self) -> float:
        """Largest relative deviation of chord lengths from the grid spacing."""
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return float(np.max(np.abs(seg / np.diff(self.x) - 1.0)))

    def to_csv(self, path) -> None:
        T = self.tangent if self.tangent is not None else np.gradient(self.points, self.x, axis=0)
        c = self.curvature if self.curvature is not None else np.full(self.x.size, np.nan)
        cols = np.column_stack([self.x, self.points, T, c])
        header = {"kind": "curve", "time": self.time}
        header.update({k: v for k, v in self.meta.items() if isinstance(v, (int, float, str))})
        _write_csv(path, header, ["x", "X1", "X2", "X3", "T1", "T2", "T3", "curvature"], cols)

    @classmethod
    def from_csv(cls, path) -> "Curve3D":
        header, d = _read_csv(path)
        return cls(d[:, 0], d[:, 1:4], float(header.get("time", 1.0)), d[:, 4:7],
                   curvature=d[:, 7])


@dataclass
class SpiralLimit:
    A_plus: np.ndarray
    A_minus: np.ndarray
    error_constant: float
    bound_constant: float = float("nan")
    worst_ratio: float = float("nan")
    samples: int = 0
    holds: bool = False

    def to_json(self) -> dict:
        return {"A_plus": list(map(float, self.A_plus)), "A_minus": list(map(float, self.A_minus)),
                "error_constant": self.error_constant, "bound_constant": self.bound_constant,
                "worst_ratio": self.worst_ratio, "samples": self.samples, "holds": self.holds}


# ----------------------------------------------------------- self-similar family

def self_similar_curve(curve: CurveProfile, a: Optional[float] = None, t: float = 1.0,
                       x: Optional[np.ndarray] = None) -> Curve3D:
    """``X_a(t, x) = R((a/2) log t) sqrt(t) G(x / sqrt t)``, ``R`` the rotation about the third axis.

    Without ``x`` the grid is ``sqrt(t)`` times the profile grid. Points with
    ``|x|/sqrt(t)`` beyond the profile grid are dropped and counted in
    ``meta["truncated"]``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    a = curve.a if a is None else a
    if a != curve.a:
        raise ValueError("a does not match the profile")
    rt = np.sqrt(t)
    R = rotation_about_axis3(0.5 * a * np.log(t))
    if x is None:
        s = curve.s
        g, T = curve.gamma, curve.tangent
        c = curve.curvature
        truncated = 0
    else:
        x = np.asarray(x, dtype=float)
        keep = np.abs(x) / rt <= curve.half_length
        truncated = int((~keep).sum())
        s = x[keep] / rt
        g, T = curve.evaluate(s)
        c = _curve_curvature(curve, s, g, T)
    xs = rt * s if x is None else x[keep]
    out = Curve3D(xs, rt * g @ R.T, t, T @ R.T, curvature=c / rt)
    out.meta["truncated"] = truncated
    return out


def _curve_curvature(curve: CurveProfile, s, g, T):
    from .profile_ode import rotation_generator

    p = g @ (np.eye(3) + rotation_generator(curve.a)).T
    return 0.5 * np.linalg.norm(np.cross(p, T), axis=1)


def _tail_vector(curve: CurveProfile, sign: int, lo: float, hi: float) -> np.ndarray:
    """Limit of ``R(-a log s) G(s) / s`` along one tail.

    Fitted per component with a constant, the rotating offset
    ``R(-a log s) C / s`` and chirped ``1/s^2`` terms.
    """
    sel = (sign * curve.s >= lo) & (sign * curve.s <= hi)
    s = curve.s[sel]
    ab = np.abs(s)
    a = curve.a
    B = np.array([rotation_about_axis3(-a * np.log(v)) @ gv for v, gv in zip(ab, curve.gamma[sel])]) / s[:, None]
    ph = a * np.log(ab)
    chirp = 0.25 * s * s
    cols = [np.ones_like(s), np.cos(ph) / s, np.sin(ph) / s, 1 / s,
            np.cos(chirp) / s**2, np.sin(chirp) / s**2, 1 / s**2]
    M = np.array(cols).T
    coef, *_ = np.linalg.lstsq(M, B, rcond=None)
    return coef[0]


def spiral_limit(curve: CurveProfile, t_sequence: Sequence[float],
                 x_samples: Optional[np.ndarray] = None) -> SpiralLimit:
    """Spiral data ``A+-`` and a check of ``|X_a(t,x) - x R(a log|x|) A+-| <= 2 sqrt(t) sup c``.

    ``A+-`` are fitted from the profile tails on ``[0.5 L, 0.95 L]``. The
    bound is checked at every ``t`` in ``t_sequence`` and every sample
    ``x`` with ``|x|/sqrt(t)`` inside the profile grid.
    """
    t_sequence = np.asarray(t_sequence, dtype=float)
    if np.any(np.diff(t_sequence) >= 0):
        raise ValueError("t_sequence must be strictly decreasing")
    L = curve.half_length
    A_plus = _tail_vector(curve, 1, 0.5 * L, 0.95 * L)
    A_minus = _tail_vector(curve, -1, 0.5 * L, 0.95 * L)
    sup_c = float(np.max(curve.curvature))
    if x_samples is None:
        x_samples = np.linspace(-1.0, 1.0, 401)
    worst_err = 0.0
    worst_ratio = 0.0
    count = 0
    for t in t_sequence:
        X = self_similar_curve(curve, t=t, x=x_samples)
        xs = X.x
        limit = spiral_initial_curve(xs, curve.a, A_plus, A_minus)
        err = np.linalg.norm(X.points - limit, axis=1)
        bound = 2 * np.sqrt(t) * sup_c
        worst_err = max(worst_err, float(np.max(err / np.sqrt(t))))
        if bound > 0:
            worst_ratio = max(worst_ratio, float(np.max(err) / bound))
        elif np.max(err) > 1e-9:
            worst_ratio = np.inf
        count += xs.size
    return SpiralLimit(A_plus, A_minus, worst_err, 2 * sup_c, worst_ratio, count,
                       worst_ratio <= 1.0)


def spiral_initial_curve(x, a: float, A_plus, A_minus) -> np.ndarray:
    """``x R(a log|x|) A+-`` (``A+`` for ``x >= 0``)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((x.size, 3))
    nz = x != 0
    ang = a * np.log(np.abs(x[nz]))
    c, s = np.cos(ang), np.sin(ang)
    A = np.where((x[nz] >= 0)[:, None], np.asarray(A_plus)[None, :], np.asarray(A_minus)[None, :])
    rot = np.column_stack([c * A[:, 0] - s * A[:, 1], s * A[:, 0] + c * A[:, 1], A[:, 2]])
    out[nz] = x[nz, None] * rot
    return out


# ------------------------------------------------------- parallel-frame rebuild

def _frame_rhs(u: Callable):
    def rhs(x, y):
        val = complex(u(x))
        al, be = val.real, val.imag
        T, e1, e2 = y[0:3], y[3:6], y[6:9]
        return np.concatenate([al * e1 + be * e2, -al * T, -be * T, T])
    return rhs


def _reorthonormalize(y):
    T = y[0:3] / np.linalg.norm(y[0:3])
    e1 = y[3:6] - (y[3:6] @ T) * T
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(T, e1)
    return np.concatenate([T, e1, e2, y[9:12]])


def _sweep(rhs, y0, x_nodes, rtol, atol, every):
    """Integrate from ``x_nodes[0]`` through the (monotone) nodes; re-project every ``every`` steps."""
    out = np.empty((x_nodes.size, 12))
    out[0] = y0
    if x_nodes.size == 1:
        return out, 0, 0.0
    solver = DOP853(rhs, x_nodes[0], y0, x_nodes[-1], rtol=rtol, atol=atol)
    k = 1
    steps = 0
    projections = 0
    drift = 0.0
    direction = np.sign(x_nodes[-1] - x_nodes[0])
    while k < x_nodes.size:
        msg = solver.step()
        if solver.status == "failed":
            raise RuntimeError(f"frame integration failed: {msg}")
        steps += 1
        dense = solver.dense_output()
        while k < x_nodes.size and direction * (x_nodes[k] - solver.t) <= 0:
            out[k] = dense(x_nodes[k])
            k += 1
        if steps % every == 0 or k == x_nodes.size:
            y = solver.y
            Q = np.array([y[0:3], y[3:6], y[6:9]])
            drift = max(drift, float(np.max(np.abs(Q @ Q.T - np.eye(3)))))
            if steps % every == 0 and solver.status == "running":
                solver.y = _reorthonormalize(y)
                solver.f = rhs(solver.t, solver.y)
                projections += 1
    return out, projections, drift


def parallel_transport_frame(u_line: Union[ComplexField, Callable], init: FrameState,
                             origin=(0.0, 0.0, 0.0), x: Optional[np.ndarray] = None,
                             x0: float = 0.0, rtol: float = 1e-12, atol: float = 1e-14,
                             reproject_every: int = 50, time: float = 1.0) -> Curve3D:
    """Rebuild a curve from ``u = alpha + i beta`` through the parallel frame.

    ``T' = alpha e1 + beta e2``, ``e1' = -alpha T``, ``e2' = -beta T`` and
    ``X' = T`` are integrated from ``x0`` in both directions with DOP853;
    the frame is re-orthonormalised every ``reproject_every`` steps.
    ``u_line`` is either a field (interpolated by cubic splines) or a
    callable ``u(x)``; in the latter case ``x`` gives the output nodes.
    """
    from scipy.interpolate import CubicSpline

    if isinstance(u_line, ComplexField):
        nodes = u_line.x if x is None else np.asarray(x, dtype=float)
        spline = CubicSpline(u_line.x, u_line.values)
        u = spline
    else:
        if x is None:
            raise ValueError("x nodes are required with a callable u")
        nodes = np.asarray(x, dtype=float)
        u = u_line
    rhs = _frame_rhs(u)
    y0 = np.concatenate([init.T, init.e1, init.e2, np.asarray(origin, dtype=float)])
    right = np.concatenate([[x0], nodes[nodes > x0]])
    left = np.concatenate([[x0], nodes[nodes < x0][::-1]])
    yr, pr, dr = _sweep(rhs, y0, right, rtol, atol, reproject_every)
    yl, pl, dl = _sweep(rhs, y0, left, rtol, atol, reproject_every)
    ys = np.empty((nodes.size, 12))
    pos = {v: i for i, v in enumerate(nodes)}
    for arr, grid in ((yr, right), (yl, left)):
        for row, xv in zip(arr[1:], grid[1:]):
            ys[pos[xv]] = row
    at0 = nodes == x0
    ys[at0] = y0
    curve = Curve3D(nodes.copy(), ys[:, 9:12], time, ys[:, 0:3], ys[:, 3:6], ys[:, 6:9],
                    curvature=np.abs(u(nodes)))
    curve.meta.update(reprojections=pr + pl, frame_drift=max(dr, dl))
    if curve.meta["frame_drift"] > 1e-8:
        curve.meta["drift_flag"] = True
    return curve


def self_similar_filament_function(sol: ProfileSolution, t: float) -> Callable:
    """``u(t, x) = e^{i x^2/4t} f(x / sqrt t) / sqrt t`` as a callable."""
    rt = np.sqrt(t)

    def u(x):
        xa = np.asarray(x, dtype=float)
        f = sol.evaluate(xa / rt)[0]
        return np.exp(0.25j * xa * xa / t) * f / rt
    return u


def reconstruct_self_similar(curve: CurveProfile, sol: ProfileSolution, t: float,
                             x: np.ndarray, **kw) -> Curve3D:
    """Frame reconstruction of ``X_a(t, .)`` started from the exact frame at ``x = 0``."""
    T0, e1, e2 = hasimoto_frame(curve.params)
    R = rotation_about_axis3(0.5 * curve.a * np.log(t))
    init = FrameState(R @ T0, R @ e1, R @ e2)
    origin = np.sqrt(t) * R @ np.asarray(curve.params.gamma0)
    return parallel_transport_frame(self_similar_filament_function(sol, t), init, origin,
                                    x=x, time=t, **kw)


# ---------------------------------------------------------------- alignment

@dataclass(frozen=True)
class ProcrustesResult:
    rotation: np.ndarray
    translation: np.ndarray
    rms: float
    max_distance: float
    frobenius: float


def procrustes(reference: np.ndarray, moving: np.ndarray) -> ProcrustesResult:
    """Best proper rigid motion taking ``moving`` onto ``reference`` (least squares)."""
    P = np.asarray(reference, dtype=float)
    Q = np.asarray(moving, dtype=float)
    cp, cq = P.mean(axis=0), Q.mean(axis=0)
    rot, _ = Rotation.align_vectors(P - cp, Q - cq)
    R = rot.as_matrix()
    aligned = (Q - cq) @ R.T + cp
    d = np.linalg.norm(aligned - P, axis=1)
    return ProcrustesResult(R, cp - R @ cq, float(np.sqrt(np.mean(d**2))), float(d.max()),
                            float(np.linalg.norm(aligned - P)))


# ------------------------------------------------------------------ time step

def advance_curve(curve: Curve3D, u_line: Union[ComplexField, Callable], dt: float,
                  max_halvings: int = 8) -> Curve3D:
    """One explicit binormal step ``X += dt (alpha e2 - beta e1)``.

    The moved polyline is re-sampled at uniform arclength and its frame is
    re-projected onto the new tangent. If the chord lengths drift by more
    than 1 %, the step is split in two halves (recursively).
    """
    if curve.e1 is None:
        raise ValueError("advance_curve needs frames")
    u = u_line(curve.x) if callable(u_line) and not isinstance(u_line, ComplexField) \
        else np.interp(curve.x, u_line.x, u_line.values.real) + 1j * np.interp(curve.x, u_line.x, u_line.values.imag)
    vel = u.real[:, None] * curve.e2 - u.imag[:, None] * curve.e1
    moved = curve.points + dt * vel
    seg = np.linalg.norm(np.diff(moved, axis=0), axis=1)
    distortion = float(np.max(np.abs(seg / np.diff(curve.x) - 1.0)))
    if distortion > 0.01:
        if max_halvings == 0:
            raise RuntimeError("arclength distortion persists after step halving")
        half = advance_curve(curve, u_line, 0.5 * dt, max_halvings - 1)
        return advance_curve(half, u_line, 0.5 * dt, max_halvings - 1)
    # re-sample at the original arclength positions
    arc = np.concatenate([[0.0], np.cumsum(seg)]) + curve.x[0]
    scale = (curve.x[-1] - curve.x[0]) / (arc[-1] - arc[0])
    arc = curve.x[0] + (arc - arc[0]) * scale
    pts = np.column_stack([np.interp(curve.x, arc, moved[:, k]) for k in range(3)])
    T = np.gradient(pts, curve.x, axis=0, edge_order=2)
    T /= np.linalg.norm(T, axis=1)[:, None]
    e1 = curve.e1 - np.sum(curve.e1 * T, axis=1)[:, None] * T
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.cross(T, e1)
    out = Curve3D(curve.x.copy(), pts, curve.time + dt, T, e1, e2, curvature=curve.curvature)
    out.meta["speed_defect"] = float(np.max(np.abs(np.linalg.norm(vel, axis=1) - np.abs(u))))
    out.meta["distortion"] = distortion
    return out


# ------------------------------------------------------------------- trace

@dataclass
class TraceReport:
    X0: Curve3D
    sqrt_t_constant: float
    lipschitz: float
    exponent: float
    times: np.ndarray
    distances: np.ndarray
    curvature_upper: float = float("nan")
    curvature_lower: float = float("nan")


def trace_at_zero(traj: Sequence[Curve3D], reference: Optional[np.ndarray] = None,
                  lower_bound_x: float = 0.5, fit_fraction: float = 0.5) -> TraceReport:
    """Trace ``X_0`` of a family of curves as ``t -> 0``.

    With ``reference`` the trace is that array; otherwise it is estimated by
    the curve at the smallest time. ``distances[k] = max_x |X(t_k) - X_0|``
    and the exponent is the slope of ``log distances`` against ``log t`` over
    the smallest ``fit_fraction`` of the times in log scale, where the sup
    over ``x`` has saturated. Without a reference the slope is taken from
    successive differences ``max_x |X(t_k) - X(t_k+1)|`` instead.
    Curvature constants: ``c1 = max sqrt(t) |c|`` over everything and
    ``c2 = min sqrt(t) |c|`` over ``|x| >= lower_bound_x`` at the two smallest times.
    """
    traj = sorted(traj, key=lambda c: -c.time)
    x = traj[0].x
    for c in traj:
        if c.x.shape != x.shape or not np.allclose(c.x, x):
            raise ValueError("curves must share one x grid")
    times = np.array([c.time for c in traj])
    if reference is None:
        X0 = traj[-1].points
        use = slice(0, len(traj) - 1)
    else:
        X0 = np.asarray(reference, dtype=float)
        use = slice(0, len(traj))
    dist = np.array([np.max(np.linalg.norm(c.points - X0, axis=1)) for c in traj])
    # successive differences must shrink for a Cauchy family
    diffs = np.array([np.max(np.linalg.norm(traj[k].points - traj[k + 1].points, axis=1))
                      for k in range(len(traj) - 1)])
    if diffs.size > 2 and not np.all(np.diff(diffs) < 0):
        grow = np.where(np.diff(diffs) >= 0)[0]
        if np.any(diffs[grow + 1] > 2 * diffs[0]):
            raise RuntimeError(f"family is not Cauchy as t decreases: {diffs}")
    # without a reference, successive differences carry the rate: for geometric
    # times max|X(t_k) - X(t_k+1)| scales like the distance to the trace
    ts, ds = (times[use], dist[use]) if reference is not None else (times[:-1], diffs)
    cut = np.exp(np.log(times[-1]) + fit_fraction * (np.log(times[0]) - np.log(times[-1])))
    low = ts <= cut * (1 + 1e-12)
    if low.sum() >= 2:
        ts, ds = ts[low], ds[low]
    exponent = float(np.polyfit(np.log(ts), np.log(ds), 1)[0]) if ts.size > 1 else float("nan")
    c3 = float(np.max(dist[use] / np.sqrt(times[use])))
    step = np.linalg.norm(np.diff(X0, axis=0), axis=1) / np.diff(x)
    c1 = c2 = float("nan")
    if all(c.curvature is not None for c in traj):
        c1 = float(max(np.max(np.abs(c.curvature)) * np.sqrt(c.time) for c in traj))
        far = np.abs(x) >= lower_bound_x
        if far.any():
            c2 = float(min(np.min(np.abs(c.curvature[far])) * np.sqrt(c.time) for c in traj[-2:]))
    trace = Curve3D(x.copy(), X0.copy(), 0.0)
    return TraceReport(trace, c3, float(step.max()), exponent, times, dist, c1, c2)
