"""Angular interval densities and their transport.

A patch looks, radius by radius, like an indicator function on the circle.
This module represents such indicators as unions of arcs, accumulates their
first two trigonometric moments in rescaled time,

    Js(tau) = int_0^tau int sin(2 theta) g dtheta dtau',
    Jc(tau) = int_0^tau int cos(2 theta) g dtheta dtau',

and moves arc endpoints with the induced angular velocity

    dtheta/dtau = -(forcing / (pi tau)) * (sin(2 theta) Js + cos(2 theta) Jc).

For a two-fold pair of arcs [A-B, A+B] and its pi-shift this endpoint motion
is the integral form of the effective system in :mod:`cusplab.effective`
with the same ``forcing`` value, which is what makes it usable as an
independent consistency oracle: the arc ends must land on (A-B, A+B) of the
integrated ODE.

Note on normalization: with forcing = 1/2 the endpoint velocity is the bare
two-fold transport coefficient 1/(2 pi tau); forcing = 1 matches the default
effective system (see the discussion in :mod:`cusplab.effective`).

The angular measure of a transported indicator is not conserved: the flow
field is compressive near the corner directions, and the patch arcs shrink
like the model half-angle.  What is preserved is the indicator structure
(values stay 0/1, arcs stay arcs, their cyclic order is fixed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .effective import EffectiveState, Trajectory
from .exceptions import StepFailureError

__all__ = [
    "AngularDensity",
    "TransportResult",
    "IntegralResidualSeries",
    "normalize_spans",
    "spans_measure",
    "spans_xor_measure",
    "j_rates",
    "cumulative_moments",
    "integral_residual",
    "transport_evolve",
]

TWO_PI = 2.0 * math.pi
# Arcs shorter than this merge away during normalization: an interval that
# thin is an angular collapse at double precision.
MIN_ARC = 1e-12


def _wrap(theta: float) -> float:
    out = math.fmod(theta, TWO_PI)
    return out + TWO_PI if out < 0.0 else out


def normalize_spans(spans) -> tuple[tuple[float, float], ...]:
    """Canonical form of a union of arcs: disjoint, sorted, inside [0, 2pi].

    Arcs may be given with endpoints anywhere on the real line; each is
    reduced mod 2pi (splitting at the cut when it wraps), overlapping arcs
    are merged, and arcs thinner than MIN_ARC are dropped.  An all-circle
    union becomes ((0, 2pi),).
    """
    pieces: list[tuple[float, float]] = []
    for lo, hi in spans:
        if hi < lo:
            raise ValueError(f"arc with hi < lo: ({lo}, {hi})")
        if hi - lo >= TWO_PI - MIN_ARC:
            return ((0.0, TWO_PI),)
        a = _wrap(lo)
        b = a + (hi - lo)
        if b <= TWO_PI:
            pieces.append((a, b))
        else:
            pieces.append((a, TWO_PI))
            pieces.append((0.0, b - TWO_PI))
    pieces = [(a, b) for a, b in pieces if b - a > MIN_ARC]
    if not pieces:
        return ()
    pieces.sort()
    merged = [pieces[0]]
    for a, b in pieces[1:]:
        la, lb = merged[-1]
        if a <= lb + MIN_ARC:
            merged[-1] = (la, max(lb, b))
        else:
            merged.append((a, b))
    # Merge across the 0/2pi cut.
    if len(merged) > 1 and merged[0][0] <= MIN_ARC \
            and merged[-1][1] >= TWO_PI - MIN_ARC:
        a0, b0 = merged.pop(0)
        al, bl = merged.pop()
        merged.append((al, TWO_PI))
        merged.insert(0, (0.0, b0))
        if len(merged) == 1 and merged[0] == (0.0, TWO_PI):
            return ((0.0, TWO_PI),)
    total = sum(b - a for a, b in merged)
    if total >= TWO_PI - MIN_ARC:
        return ((0.0, TWO_PI),)
    return tuple(merged)


def spans_measure(spans) -> float:
    return float(sum(b - a for a, b in spans))


def _membership_breaks(spans_a, spans_b):
    """Breakpoints and per-cell membership for two normalized arc unions."""
    cuts = {0.0, TWO_PI}
    for a, b in spans_a:
        cuts.add(a)
        cuts.add(b)
    for a, b in spans_b:
        cuts.add(a)
        cuts.add(b)
    grid = sorted(cuts)

    def member(spans, x):
        for a, b in spans:
            if a <= x < b:
                return True
        return False

    cells = []
    for lo, hi in zip(grid[:-1], grid[1:]):
        if hi - lo <= 0.0:
            continue
        mid = 0.5 * (lo + hi)
        cells.append((lo, hi, member(spans_a, mid), member(spans_b, mid)))
    return cells


def spans_xor_measure(spans_a, spans_b) -> float:
    """Measure of the symmetric difference of two arc unions."""
    a = normalize_spans(spans_a)
    b = normalize_spans(spans_b)
    out = 0.0
    for lo, hi, in_a, in_b in _membership_breaks(a, b):
        if in_a != in_b:
            out += hi - lo
    return out


class AngularDensity:
    """Indicator density on the circle: union of arcs where the value is 1.

    The ``intervals`` property exposes (lo, hi, value) triples with value
    always 1.0; the complement is implicitly 0.
    """

    __slots__ = ("spans",)

    def __init__(self, spans):
        self.spans = normalize_spans(spans)

    @classmethod
    def from_spans(cls, spans) -> "AngularDensity":
        return cls(spans)

    @classmethod
    def from_state(cls, A: float, B: float, twofold: bool = True) -> "AngularDensity":
        """Patch-form density: arc [A-B, A+B], plus its pi-shift if twofold."""
        if B <= 0.0:
            raise ValueError("the half-angle must be positive")
        spans = [(A - B, A + B)]
        if twofold:
            spans.append((A - B + math.pi, A + B + math.pi))
        return cls(spans)

    @classmethod
    def full(cls) -> "AngularDensity":
        return cls([(0.0, TWO_PI)])

    @classmethod
    def empty(cls) -> "AngularDensity":
        return cls([])

    @property
    def intervals(self):
        return tuple((a, b, 1.0) for a, b in self.spans)

    def measure(self) -> float:
        return spans_measure(self.spans)

    def arc_count(self) -> int:
        """Number of arcs counted cyclically (wrap-split pieces are one arc)."""
        n = len(self.spans)
        if n >= 2 and self.spans[0][0] <= MIN_ARC \
                and self.spans[-1][1] >= TWO_PI - MIN_ARC:
            return n - 1
        return n

    def contains(self, theta: float) -> bool:
        x = _wrap(theta)
        return any(a <= x < b for a, b in self.spans)

    def is_twofold_symmetric(self, tol: float = 1e-9) -> bool:
        shifted = [(a + math.pi, b + math.pi) for a, b in self.spans]
        return spans_xor_measure(self.spans, shifted) <= tol

    def xor_measure(self, other: "AngularDensity") -> float:
        return spans_xor_measure(self.spans, other.spans)

    def moment_rates(self) -> tuple[float, float]:
        """(d Js / d tau, d Jc / d tau): trigonometric moments of the arcs."""
        djs = 0.0
        djc = 0.0
        for a, b in self.spans:
            djs += 0.5 * (math.cos(2.0 * a) - math.cos(2.0 * b))
            djc += 0.5 * (math.sin(2.0 * b) - math.sin(2.0 * a))
        return djs, djc

    def __eq__(self, other):
        return isinstance(other, AngularDensity) and self.spans == other.spans

    def __repr__(self):
        inner = ", ".join(f"[{a:.6f}, {b:.6f}]" for a, b in self.spans)
        return f"AngularDensity({inner or 'empty'})"


def j_rates(state: EffectiveState) -> tuple[float, float]:
    """Moment rates of the two-fold patch density at a model state.

    Closed form of AngularDensity.from_state(A, B).moment_rates():
    (2 sin(2A) sin(2B), 2 cos(2A) sin(2B)).
    """
    s2b = math.sin(2.0 * state.B)
    return 2.0 * math.sin(2.0 * state.A) * s2b, 2.0 * math.cos(2.0 * state.A) * s2b


def _moment_rate_arrays(traj: Trajectory):
    """Moment rates and their tau-derivatives at all trajectory samples."""
    s2a, c2a = np.sin(2.0 * traj.A), np.cos(2.0 * traj.A)
    s2b, c2b = np.sin(2.0 * traj.B), np.cos(2.0 * traj.B)
    rs = 2.0 * s2a * s2b
    rc = 2.0 * c2a * s2b
    drs = 4.0 * traj.dA * c2a * s2b + 4.0 * traj.dB * s2a * c2b
    drc = -4.0 * traj.dA * s2a * s2b + 4.0 * traj.dB * c2a * c2b
    return rs, rc, drs, drc


def _cum_hermite(y: np.ndarray, dy: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Cumulative integral by trapezoid with Hermite end-slope correction.

    Per interval: h/2 (y0 + y1) + h^2/12 (dy0 - dy1); exact for cubics.
    """
    h = np.diff(x)
    seg = 0.5 * h * (y[1:] + y[:-1]) + (h * h / 12.0) * (dy[:-1] - dy[1:])
    out = np.zeros_like(y)
    out[1:] = np.cumsum(seg)
    return out


def cumulative_moments(traj: Trajectory):
    """(Js, Jc) at every trajectory sample for the two-fold patch density."""
    rs, rc, drs, drc = _moment_rate_arrays(traj)
    js = _cum_hermite(rs, drs, traj.tau)
    jc = _cum_hermite(rc, drc, traj.tau)
    return js, jc


def moment_splines(traj: Trajectory):
    """C1 interpolants of (Js, Jc) along a trajectory."""
    rs, rc, _, _ = _moment_rate_arrays(traj)
    js, jc = cumulative_moments(traj)
    return (CubicHermiteSpline(traj.tau, js, rs),
            CubicHermiteSpline(traj.tau, jc, rc))


@dataclass(frozen=True)
class IntegralResidualSeries:
    """Residuals of the cumulative-moment (integral) form along a trajectory.

    res_B and res_A are the absolute defects of

        tau B' + (forcing/pi) (sin2B cos2A Js - sin2B sin2A Jc) = 0
        tau A' + (forcing/pi) (cos2B sin2A Js + cos2B cos2A Jc) = 0

    and rel is their pointwise maximum normalized by the size of the largest
    participating term.
    """

    tau: np.ndarray
    res_B: np.ndarray
    res_A: np.ndarray
    rel: np.ndarray

    @property
    def max_rel(self) -> float:
        return float(np.max(self.rel))


def integral_residual(traj: Trajectory) -> IntegralResidualSeries:
    """Check a trajectory against the integral form of the system."""
    forcing = traj.meta.get("forcing", 1.0)
    js, jc = cumulative_moments(traj)
    s2a, c2a = np.sin(2.0 * traj.A), np.cos(2.0 * traj.A)
    s2b, c2b = np.sin(2.0 * traj.B), np.cos(2.0 * traj.B)
    coef = forcing / math.pi
    term_B = coef * (s2b * c2a * js - s2b * s2a * jc)
    term_A = coef * (c2b * s2a * js + c2b * c2a * jc)
    res_B = traj.tau * traj.dB + term_B
    res_A = traj.tau * traj.dA + term_A
    scale = np.maximum.reduce([
        np.abs(traj.tau * traj.dB),
        np.abs(traj.tau * traj.dA),
        np.abs(term_B),
        np.abs(term_A),
    ])
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.maximum(np.abs(res_B), np.abs(res_A)) / scale
    rel[scale == 0.0] = 0.0
    return IntegralResidualSeries(tau=traj.tau.copy(), res_B=res_B,
                                  res_A=res_A, rel=rel)


@dataclass(frozen=True)
class TransportResult:
    """Outcome of endpoint transport: final density and accumulated moments."""

    density: AngularDensity
    Js: float
    Jc: float
    tau_end: float


def transport_evolve(g0: AngularDensity, traj: Trajectory | None = None,
                     tau_end: float = 5.0, j_mode: str = "self",
                     forcing: float | None = None, rel_tol: float = 1e-11,
                     abs_tol: float = 1e-13,
                     seed_eps: float = 1e-8) -> TransportResult:
    """Transport an indicator density from tau = 0 to tau_end.

    j_mode "self": the moments (Js, Jc) are accumulated from the density's
    own arcs as they move (a closed system in the arc endpoints).
    j_mode "trajectory": the moments come from the supplied effective
    trajectory instead, and only the endpoints are integrated.

    The singular start is handled by a first-order seed at tau = seed_eps:
    endpoint velocities have the finite limit
    -(forcing/pi) (sin(2 theta) Js'(0) + cos(2 theta) Jc'(0)).
    """
    if j_mode not in ("self", "trajectory"):
        raise ValueError(f"unknown j_mode: {j_mode}")
    if j_mode == "trajectory" and traj is None:
        raise ValueError("trajectory j_mode needs a trajectory")
    if forcing is None:
        forcing = (traj.meta.get("forcing", 1.0) if traj is not None else 1.0)
    if tau_end <= seed_eps:
        raise ValueError("tau_end must exceed the seed window")

    spans0 = g0.spans
    if not spans0 or spans0 == ((0.0, TWO_PI),):
        # No endpoints to move: empty and full circles are invariant.
        return TransportResult(density=g0, Js=0.0, Jc=0.0, tau_end=tau_end)
    theta0 = np.array([v for span in spans0 for v in span])

    djs0, djc0 = g0.moment_rates()
    v0 = -(forcing / math.pi) * (np.sin(2.0 * theta0) * djs0
                                 + np.cos(2.0 * theta0) * djc0)
    theta_seed = theta0 + seed_eps * v0
    coef = forcing / math.pi

    if j_mode == "self":
        y0 = np.concatenate([theta_seed, [djs0 * seed_eps, djc0 * seed_eps]])

        def rhs(tau, y):
            th = y[:-2]
            js, jc = y[-2], y[-1]
            dth = -(coef / tau) * (np.sin(2.0 * th) * js + np.cos(2.0 * th) * jc)
            lo, hi = th[0::2], th[1::2]
            djs = float(np.sum(0.5 * (np.cos(2.0 * lo) - np.cos(2.0 * hi))))
            djc = float(np.sum(0.5 * (np.sin(2.0 * hi) - np.sin(2.0 * lo))))
            return np.concatenate([dth, [djs, djc]])
    else:
        sjs, sjc = moment_splines(traj)
        if traj.tau[-1] < tau_end:
            raise ValueError("trajectory does not cover tau_end")
        y0 = theta_seed

        def rhs(tau, y):
            js, jc = float(sjs(tau)), float(sjc(tau))
            return -(coef / tau) * (np.sin(2.0 * y) * js + np.cos(2.0 * y) * jc)

    sol = solve_ivp(rhs, (seed_eps, tau_end), y0, method="DOP853",
                    rtol=rel_tol, atol=abs_tol, dense_output=False)
    if not sol.success:
        raise StepFailureError(f"endpoint transport failed: {sol.message}")
    yf = sol.y[:, -1]
    if j_mode == "self":
        theta_f, js_f, jc_f = yf[:-2], float(yf[-2]), float(yf[-1])
    else:
        theta_f = yf
        sjs, sjc = moment_splines(traj)
        js_f, jc_f = float(sjs(tau_end)), float(sjc(tau_end))

    lo, hi = theta_f[0::2], theta_f[1::2]
    if np.any(hi < lo):
        raise StepFailureError("arc endpoints crossed during transport")
    density = AngularDensity(list(zip(lo, hi)))
    return TransportResult(density=density, Js=js_f, Jc=jc_f, tau_end=tau_end)


@dataclass(frozen=True)
class TransportSeries:
    """Sampled endpoint transport: moments and raw arc endpoints over tau.

    endpoints has shape (n_tau, 2 * n_arcs) ordered lo0, hi0, lo1, hi1, ...
    matching the normalized arc order of the initial density.
    """

    tau: np.ndarray
    Js: np.ndarray
    Jc: np.ndarray
    endpoints: np.ndarray

    def to_csv(self, path) -> None:
        n_arcs = self.endpoints.shape[1] // 2
        cols = [f"{side}{k}" for k in range(n_arcs) for side in ("lo", "hi")]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("tau,Js,Jc," + ",".join(cols) + "\n")
            for i in range(self.tau.size):
                row = [self.tau[i], self.Js[i], self.Jc[i],
                       *self.endpoints[i]]
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def transport_series(g0: AngularDensity, taus, forcing: float = 1.0,
                     rel_tol: float = 1e-11, abs_tol: float = 1e-13,
                     seed_eps: float = 1e-8) -> TransportSeries:
    """Self-consistent endpoint transport sampled at requested tau values.

    taus must be strictly increasing; a leading 0.0 is allowed and filled
    with the exact initial data (endpoints at rest, zero moments).
    """
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or taus.size < 2:
        raise ValueError("need a 1-d array of at least two tau samples")
    if np.any(np.diff(taus) <= 0.0):
        raise ValueError("tau samples must be strictly increasing")
    has_zero = taus[0] == 0.0
    inner = taus[1:] if has_zero else taus
    if inner[0] <= seed_eps:
        raise ValueError("positive tau samples must exceed the seed window")

    spans0 = g0.spans
    if not spans0 or spans0 == ((0.0, TWO_PI),):
        n = taus.size
        return TransportSeries(tau=taus, Js=np.zeros(n), Jc=np.zeros(n),
                               endpoints=np.zeros((n, 0)))
    theta0 = np.array([v for span in spans0 for v in span])
    djs0, djc0 = g0.moment_rates()
    coef = forcing / math.pi
    v0 = -coef * (np.sin(2.0 * theta0) * djs0 + np.cos(2.0 * theta0) * djc0)
    y0 = np.concatenate([theta0 + seed_eps * v0,
                         [djs0 * seed_eps, djc0 * seed_eps]])

    def rhs(tau, y):
        th = y[:-2]
        js, jc = y[-2], y[-1]
        dth = -(coef / tau) * (np.sin(2.0 * th) * js + np.cos(2.0 * th) * jc)
        lo, hi = th[0::2], th[1::2]
        djs = float(np.sum(0.5 * (np.cos(2.0 * lo) - np.cos(2.0 * hi))))
        djc = float(np.sum(0.5 * (np.sin(2.0 * hi) - np.sin(2.0 * lo))))
        return np.concatenate([dth, [djs, djc]])

    sol = solve_ivp(rhs, (seed_eps, inner[-1]), y0, method="DOP853",
                    rtol=rel_tol, atol=abs_tol, t_eval=inner)
    if not sol.success:
        raise StepFailureError(f"endpoint transport failed: {sol.message}")
    ep = sol.y[:-2, :].T
    js = sol.y[-2, :]
    jc = sol.y[-1, :]
    if has_zero:
        ep = np.vstack([theta0, ep])
        js = np.concatenate([[0.0], js])
        jc = np.concatenate([[0.0], jc])
    return TransportSeries(tau=taus.copy(), Js=js, Jc=jc, endpoints=ep)
