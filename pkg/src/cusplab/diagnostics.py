"""Radial diagnostics comparing a contour-dynamics patch with the effective
corner model.

Conventions: circles are centered at the pinned corner (the origin); the
rescaled time at radius r is tau = t * |ln r| (so r must lie in (0, 1)).
The comparison density at (t, r) is the two-fold arc pair with half-angle
B(tau) around bisector A(tau) from an effective trajectory.

Key quantities, all per (t, r):

    area_fraction      G = |patch inside B_r| / |B_r|
    angular_deviation  theta_bar = arc measure of slice XOR model density
    deviation_fraction F = (1/pi r^2) int_0^r theta_bar(s) s ds
    half_angle         measured half-width and bisector of the slice arc
                       nearest the positive x-axis

F integrals use the substitution s = r e^{-v}, which turns them into
exponentially weighted integrals over v >= 0, evaluated on composite
Gauss-Legendre panels; the tail beyond v = 20 is below 1e-17 of the total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .angular import AngularDensity, spans_xor_measure
from .effective import Trajectory
from .exceptions import StepFailureError
from .geometry import circle_crossings, gauss_legendre, points_in_polygon
from .patch import CDConfig, PatchState, velocity

__all__ = [
    "RadialProfile",
    "DecompositionResidual",
    "radial_slice",
    "half_angle",
    "area_fraction",
    "angular_deviation",
    "deviation_fraction",
    "model_area_fraction",
    "effective_indicator",
    "velocity_split",
    "decomposition_residual",
    "flow_map",
    "yudovich_envelope",
]

TWO_PI = 2.0 * math.pi
# Composite Gauss-Legendre layout for int_0^inf f(v) e^{-2v} dv.
_V_PANELS = np.arange(0.0, 20.5, 0.5)
_V_GL = 8


@dataclass(frozen=True)
class RadialProfile:
    """Values sampled against radius."""

    r: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class DecompositionResidual:
    """Residual of the leading-order velocity decomposition.

    residual_over_r[i, j] = |u(x) - u_leading(x)| / r_i at angle theta_j,
    where u_leading is built from the cumulative angular moments outside r.
    """

    r: np.ndarray
    theta: np.ndarray
    residual_over_r: np.ndarray


def radial_slice(state: PatchState, r: float) -> AngularDensity:
    """Arcs of the circle |x| = r lying inside the patch."""
    if r <= 0.0:
        raise ValueError("radius must be positive")
    angles = np.concatenate([circle_crossings(c, r) for c in state.contours])
    angles.sort()
    if angles.size == 0:
        probe = np.array([[r, 0.0]])
        inside = any(bool(points_in_polygon(c, probe)[0]) for c in state.contours)
        return AngularDensity.full() if inside else AngularDensity.empty()
    # Membership of each gap between consecutive crossings, decided at the
    # gap midpoint.  Disjoint contours: inside the patch = inside any one.
    ext = np.concatenate([angles, [angles[0] + TWO_PI]])
    mids = 0.5 * (ext[:-1] + ext[1:])
    pts = np.column_stack([r * np.cos(mids), r * np.sin(mids)])
    inside = np.zeros(mids.size, dtype=bool)
    for c in state.contours:
        inside ^= points_in_polygon(c, pts)
    spans = [(ext[k], ext[k + 1]) for k in range(mids.size) if inside[k]]
    return AngularDensity(spans)


def half_angle(state: PatchState, r: float) -> tuple[float, float]:
    """(half-width, bisector) of the slice arc nearest the +x direction.

    The bisector is reported in (-pi, pi].  Raises ValueError when the
    slice is empty or full (no distinguished arc).
    """
    d = radial_slice(state, r)
    if not d.spans or d.spans == ((0.0, TWO_PI),):
        raise ValueError(f"no distinguished arc at r={r:g}")
    best = None
    for lo, hi in _cyclic_arcs(d):
        mid = 0.5 * (lo + hi)
        dist = abs(math.remainder(mid, TWO_PI))
        if best is None or dist < best[0]:
            best = (dist, 0.5 * (hi - lo), math.remainder(mid, TWO_PI))
    return best[1], best[2]


def _cyclic_arcs(d: AngularDensity):
    """Spans with wrap-split pieces rejoined (lo may be negative)."""
    spans = list(d.spans)
    if len(spans) >= 2 and spans[0][0] <= 1e-12 \
            and spans[-1][1] >= TWO_PI - 1e-12:
        first = spans.pop(0)
        last = spans.pop()
        spans.append((last[0] - TWO_PI, first[1]))
    return spans


def area_fraction(state: PatchState, r: float) -> float:
    """G(t, r): patch area inside the circle of radius r over the disc area."""
    from .geometry import polygon_circle_area

    if r <= 0.0:
        raise ValueError("radius must be positive")
    inter = sum(polygon_circle_area(c, r) for c in state.contours)
    return float(inter / (math.pi * r * r))


def effective_indicator(traj: Trajectory, t: float, r: float) -> AngularDensity:
    """Model arc density at physical time t and radius r (tau = t |ln r|)."""
    if not (0.0 < r < 1.0):
        raise ValueError("model comparison radii must lie in (0, 1)")
    tau = t * abs(math.log(r))
    if tau > traj.tau[-1]:
        raise ValueError(
            f"trajectory covers tau <= {traj.tau[-1]:g}, need {tau:g}; "
            f"integrate further for this (t, r)")
    A, B, _, _ = traj.eval(tau)
    return AngularDensity.from_state(float(A), float(B))


def angular_deviation(state: PatchState, r: float, traj: Trajectory) -> float:
    """theta_bar(t, r): arc measure of (slice XOR model density)."""
    model = effective_indicator(traj, state.t, r)
    return spans_xor_measure(radial_slice(state, r).spans, model.spans)


def _exp_weighted(f, depth: float = 20.0):
    """int_0^depth f(v) e^{-2v} dv on composite GL panels."""
    xs, ws = gauss_legendre(_V_GL)
    total = 0.0
    panels = _V_PANELS[_V_PANELS <= depth + 1e-12]
    for a, b in zip(panels[:-1], panels[1:]):
        v = a + (b - a) * xs
        total += (b - a) * float(np.sum(ws * f(v) * np.exp(-2.0 * v)))
    return total


def deviation_fraction(state: PatchState, r: float, traj: Trajectory) -> float:
    """F(t, r) = (1/pi r^2) int_0^r theta_bar(t, s) s ds.

    Substituting s = r e^{-v} gives (1/pi) int_0^inf theta_bar(r e^{-v})
    e^{-2v} dv; theta_bar is bounded by 2 pi so the truncated tail is
    negligible.
    """
    if not (0.0 < r < 1.0):
        raise ValueError("deviation fraction needs r in (0, 1)")

    def f(vs):
        return np.array([angular_deviation(state, r * math.exp(-v), traj)
                         for v in vs])

    return _exp_weighted(f) / math.pi


def model_area_fraction(traj: Trajectory, t: float, r: float) -> float:
    """Area fraction of the model wedge pair: (1/pi r^2) int_0^r 4B s ds."""
    if not (0.0 < r < 1.0):
        raise ValueError("model area fraction needs r in (0, 1)")
    lr = abs(math.log(r))

    def f(vs):
        taus = np.minimum(t * (lr + vs), traj.tau[-1])
        _, B, _, _ = traj.eval(taus)
        return 4.0 * np.asarray(B)

    return _exp_weighted(f) / math.pi


def velocity_split(state: PatchState, r: float, n_panels_per_decade: int = 8,
                   gl_order: int = 8) -> tuple[float, float]:
    """Cumulative angular moments outside radius r:

        Is(r) = int_r^R (1/s) int sin(2 theta) dtheta ds
        Ic(r) = int_r^R (1/s) int cos(2 theta) dtheta ds

    with the inner integral over the slice arcs at radius s and R the patch's
    outer radius.  Substituting s = r e^w gives plain integrals in w.
    """
    if r <= 0.0:
        raise ValueError("radius must be positive")
    r_max = max(float(np.max(np.hypot(c[:, 0], c[:, 1]))) for c in state.contours)
    if r >= r_max:
        return 0.0, 0.0
    w_max = math.log(r_max / r)
    n_panels = max(2, int(math.ceil(w_max * n_panels_per_decade / math.log(10.0))))
    edges = np.linspace(0.0, w_max, n_panels + 1)
    xs, ws = gauss_legendre(gl_order)
    tot_s = 0.0
    tot_c = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        for x, w in zip(xs, ws):
            s = r * math.exp(a + (b - a) * x)
            djs, djc = radial_slice(state, s).moment_rates()
            tot_s += (b - a) * w * djs
            tot_c += (b - a) * w * djc
    return tot_s, tot_c


def decomposition_residual(state: PatchState, radii, thetas=None,
                           cfg: CDConfig | None = None) -> DecompositionResidual:
    """Defect of the leading-order velocity model, normalized by radius.

    The full velocity at x = r (cos th, sin th) is compared against

        u_lead = (r/2pi) [Is(r) (cos th, -sin th) - Ic(r) (sin th, cos th)]

    and |u - u_lead| / r is returned for every (r, theta) pair.
    """
    cfg = cfg or CDConfig()
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if thetas is None:
        thetas = np.linspace(0.0, math.pi, 13)[:-1]
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    out = np.empty((radii.size, thetas.size))
    ct, st = np.cos(thetas), np.sin(thetas)
    for i, r in enumerate(radii):
        iss, icc = velocity_split(state, float(r))
        pts = np.column_stack([r * ct, r * st])
        u = velocity(state, pts, cfg) / state.vorticity
        lead_x = (r / TWO_PI) * (iss * ct - icc * st)
        lead_y = (r / TWO_PI) * (-iss * st - icc * ct)
        out[i] = np.hypot(u[:, 0] - lead_x, u[:, 1] - lead_y) / r
    return DecompositionResidual(r=radii, theta=thetas, residual_over_r=out)


# ---------------------------------------------------------------------------
# Flow map along the corner ray.

def _mean_B_spline(traj: Trajectory):
    """Interpolant of int_0^z B dsigma along the trajectory."""
    from .angular import _cum_hermite

    cum = _cum_hermite(traj.B, traj.dB, traj.tau)
    return CubicHermiteSpline(traj.tau, cum, traj.B)


def flow_map(traj: Trajectory, r0, t: float, Cstar: float = 1.0):
    """Radial flow map Phi_t(r0) for the model velocity along the corner ray.

    Solves d Phi / dt' = -Cstar * Phi * int_Phi^1 B(t' |ln s|) / s ds, which
    in z = |ln Phi| becomes z' = Cstar * z * mean(B on [0, t' z]), removing
    the singularity at t' = 0.  Exact solution for constant B = B0:
    Phi_t(r0) = r0 ** exp(Cstar * B0 * t).

    r0 may be a scalar or an array with entries in (0, 1); t >= 0.
    """
    if t < 0.0:
        raise ValueError("the flow map runs forward in time")
    r_arr = np.atleast_1d(np.asarray(r0, dtype=float))
    if np.any((r_arr <= 0.0) | (r_arr >= 1.0)):
        raise ValueError("flow map radii must lie in (0, 1)")
    if t == 0.0:
        out = r_arr.copy()
        return out[0] if np.isscalar(r0) else out

    cum = _mean_B_spline(traj)
    tau_max = traj.tau[-1]
    z0 = np.abs(np.log(r_arr))
    # Worst-case argument: z grows at most like z0 * exp(Cstar * B0 * t).
    worst = float(np.max(z0)) * math.exp(Cstar * traj.B[0] * t) * t
    if worst > tau_max * (1.0 + 1e-9):
        raise ValueError(
            f"trajectory covers tau <= {tau_max:g} but the flow map may "
            f"need {worst:g}; integrate further")

    def rhs(tp, z):
        zeta = np.minimum(tp * z, tau_max)
        mean = np.where(zeta > 0.0, cum(zeta) / np.maximum(zeta, 1e-300),
                        traj.B[0])
        return Cstar * z * mean

    sol = solve_ivp(rhs, (0.0, t), z0, method="DOP853",
                    rtol=1e-12, atol=1e-12)
    if not sol.success:
        raise StepFailureError(f"flow map integration failed: {sol.message}")
    out = np.exp(-sol.y[:, -1])
    return float(out[0]) if np.isscalar(r0) else out


def yudovich_envelope(r0, t: float, c: float):
    """Log-Lipschitz envelope: (r0 ** exp(c t), r0) brackets the flow map."""
    r_arr = np.asarray(r0, dtype=float)
    lower = r_arr ** math.exp(c * t)
    return lower, r_arr
