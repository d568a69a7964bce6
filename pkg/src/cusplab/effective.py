"""Effective corner dynamics: a second-order ODE system for the corner
half-angle B and bisector angle A of a two-fold symmetric vortex patch,
written in the rescaled time tau = t * |log r|.

The system is

    B'' = -B'/tau + 2*cot(2B)*(B')^2 - 2*tan(2B)*(A')^2
    A'' = -A'/tau - forcing*sin(4B)/(pi*tau) + 2*(cot(2B) - tan(2B))*A'*B'

with data B(0) = B0 in (0, pi/4), B'(0) = 0, A(0) = 0,
A'(0) = -forcing*sin(4B0)/pi.

``forcing`` scales the angular drive of the bisector.  The default 1.0 is
the standard normalization, for which the algebraic identity

    pi*A'(tau) + sin(4*B(tau)) = 0

holds exactly along solutions.  The raw two-interval transport reduction
(see :mod:`cusplab.angular`) carries forcing = 0.5; both values describe the
same qualitative dynamics (monotone angle collapse, negative bisector drift)
up to rescaled rates.

Because the right side is singular at tau = 0 the integration starts with a
fixed-point (successive substitution) stage on a short window [0, eps] in the
variables g = B' and f = A' + forcing*sin(4B0)/pi, both of which vanish at
tau = 0.  The measured contraction factor of that iteration must be < 1/2;
otherwise the window is halved and the stage is rerun.  From eps onward an
adaptive embedded Runge-Kutta method takes over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .exceptions import (
    InsufficientSamplesError,
    InvariantViolationError,
    NonContractionError,
    NonConvergedError,
    StepFailureError,
)

__all__ = [
    "EffectiveState",
    "ModelParams",
    "Trajectory",
    "LimitEstimate",
    "rhs",
    "startup",
    "integrate",
    "q_of",
    "decay_order",
    "identity_residual",
    "estimate_delta",
    "fit_log_slope",
    "first_crossing",
    "limit_A",
]

# Half-angles must stay strictly inside (0, pi/4): tan(2B) blows up at pi/4.
B_MAX = math.pi / 4
# Below this the half-angle is indistinguishable from zero in double
# precision dynamics; integration stops and flags the run.
B_FLOOR = 1e-14


@dataclass(frozen=True)
class EffectiveState:
    """Phase-space point: rescaled time, bisector A, half-angle B, rates."""

    tau: float
    A: float
    B: float
    dA: float
    dB: float


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the effective system and its integrator.

    B0          initial half-angle, strictly inside (0, pi/4)
    startup_eps initial length of the fixed-point startup window
    rel_tol     relative tolerance of the adaptive integrator
    abs_tol     absolute tolerance for A and B (derivatives get abs_tol*1e-6)
    tau_max     end of the integration range
    forcing     coefficient of sin(4B)/(pi tau) in the bisector equation
    """

    B0: float
    startup_eps: float = 1e-3
    rel_tol: float = 1e-11
    abs_tol: float = 1e-14
    tau_max: float = 1e4
    forcing: float = 1.0
    max_log_step: float = 0.02

    def validate(self) -> None:
        if not (0.0 < self.B0 < B_MAX):
            raise ValueError(f"B0 must lie in (0, pi/4); got {self.B0}")
        if not (0.0 < self.startup_eps <= 1.0):
            raise ValueError(f"startup_eps must lie in (0, 1]; got {self.startup_eps}")
        if self.startup_eps >= self.tau_max:
            raise ValueError("startup_eps must be smaller than tau_max")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.forcing <= 0:
            raise ValueError(f"forcing must be positive; got {self.forcing}")
        if self.max_log_step <= 0:
            raise ValueError("max_log_step must be positive")


def _c1(params: ModelParams) -> float:
    """Initial bisector speed magnitude: A'(0) = -c1."""
    return params.forcing * math.sin(4.0 * params.B0) / math.pi


def rhs(state: EffectiveState, forcing: float = 1.0) -> tuple[float, float]:
    """Second derivatives (d2A, d2B) at a state with tau > 0.

    Raises ValueError at tau <= 0 (the system is singular there; startup
    handles the initial window) or when B leaves (0, pi/4).
    """
    tau, B, dA, dB = state.tau, state.B, state.dA, state.dB
    if tau <= 0.0:
        raise ValueError("rhs is singular at tau <= 0; use the startup stage")
    if not (0.0 < B < B_MAX):
        raise ValueError(f"B outside (0, pi/4): {B}")
    s2, c2 = math.sin(2.0 * B), math.cos(2.0 * B)
    cot2, tan2 = c2 / s2, s2 / c2
    d2B = -dB / tau + 2.0 * cot2 * dB * dB - 2.0 * tan2 * dA * dA
    d2A = (-dA / tau - forcing * math.sin(4.0 * B) / (math.pi * tau)
           + 2.0 * (cot2 - tan2) * dA * dB)
    return d2A, d2B


def _rhs_vec(tau: float, y: np.ndarray, forcing: float) -> np.ndarray:
    """Vector field for the first-order form y = (A, B, dA, dB)."""
    _, B, dA, dB = y
    s2 = math.sin(2.0 * B)
    c2 = math.cos(2.0 * B)
    cot2 = c2 / s2
    tan2 = s2 / c2
    d2B = -dB / tau + 2.0 * cot2 * dB * dB - 2.0 * tan2 * dA * dA
    d2A = (-dA / tau - forcing * math.sin(4.0 * B) / (math.pi * tau)
           + 2.0 * (cot2 - tan2) * dA * dB)
    return np.array([dA, dB, d2A, d2B])


class Trajectory:
    """Solution samples of the effective system with C1 interpolation.

    Stores tau, A, B, dA, dB at sample points (startup grid plus every
    accepted adaptive step) and interpolates between them with cubic Hermite
    pieces, so values are at least third-order accurate and derivatives are
    continuous.
    """

    def __init__(self, tau, A, B, dA, dB, d2A=None, d2B=None,
                 params: ModelParams | None = None, meta: dict | None = None):
        self.tau = np.asarray(tau, dtype=float)
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.dA = np.asarray(dA, dtype=float)
        self.dB = np.asarray(dB, dtype=float)
        n = self.tau.size
        if not (self.A.size == self.B.size == self.dA.size == self.dB.size == n):
            raise ValueError("field arrays must share one length")
        if n < 2:
            raise InsufficientSamplesError("a trajectory needs at least two samples")
        if np.any(np.diff(self.tau) <= 0):
            raise ValueError("tau samples must be strictly increasing")
        self.params = params
        self.meta = dict(meta or {})
        forcing = params.forcing if params is not None else self.meta.get("forcing", 1.0)
        if d2A is None or d2B is None:
            d2A = np.empty(n)
            d2B = np.empty(n)
            for i in range(n):
                if self.tau[i] <= 0.0:
                    # Removable limit at tau = 0 with dB(0) = 0:
                    # d2B(0) = -tan(2 B0) * dA(0)^2, d2A(0) = 0.
                    d2B[i] = -math.tan(2.0 * self.B[i]) * self.dA[i] ** 2
                    d2A[i] = 0.0
                else:
                    d2A[i], d2B[i] = rhs(self.state(i), forcing)
        self.d2A = np.asarray(d2A, dtype=float)
        self.d2B = np.asarray(d2B, dtype=float)
        self._splines = None

    @classmethod
    def from_arrays(cls, tau, A, B, dA, dB, d2A=None, d2B=None, meta=None) -> "Trajectory":
        """Build a trajectory from raw sample arrays (mainly for tests).

        When second derivatives are not supplied they are filled from the
        effective vector field, so synthetic data should pass them
        explicitly (finite differences are fine for interpolation accuracy).
        """
        if d2A is None:
            d2A = np.gradient(np.asarray(dA, float), np.asarray(tau, float))
        if d2B is None:
            d2B = np.gradient(np.asarray(dB, float), np.asarray(tau, float))
        return cls(tau, A, B, dA, dB, d2A, d2B, params=None, meta=meta)

    def __len__(self) -> int:
        return self.tau.size

    def state(self, i: int) -> EffectiveState:
        return EffectiveState(self.tau[i], self.A[i], self.B[i],
                              self.dA[i], self.dB[i])

    def _build_splines(self):
        if self._splines is None:
            self._splines = (
                CubicHermiteSpline(self.tau, self.A, self.dA),
                CubicHermiteSpline(self.tau, self.B, self.dB),
                CubicHermiteSpline(self.tau, self.dA, self.d2A),
                CubicHermiteSpline(self.tau, self.dB, self.d2B),
            )
        return self._splines

    def eval(self, tau):
        """Interpolate (A, B, dA, dB) at scalar or array tau inside range."""
        t = np.asarray(tau, dtype=float)
        if np.any(t < self.tau[0]) or np.any(t > self.tau[-1]):
            raise ValueError("tau outside the sampled range")
        sA, sB, sdA, sdB = self._build_splines()
        return sA(t), sB(t), sdA(t), sdB(t)

    def eval_state(self, tau: float) -> EffectiveState:
        A, B, dA, dB = self.eval(float(tau))
        return EffectiveState(float(tau), float(A), float(B), float(dA), float(dB))

    # Convenience arrays -------------------------------------------------

    def q_samples(self) -> np.ndarray:
        """-tau * A' / B at every sample (0 at tau = 0 by the limit)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            q = -self.tau * self.dA / self.B
        q[self.tau == 0.0] = 0.0
        return q

    def decay_samples(self) -> np.ndarray:
        """-tau * B' / B at every sample (0 at tau = 0 by the limit)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            ii = -self.tau * self.dB / self.B
        ii[self.tau == 0.0] = 0.0
        return ii

    def to_csv(self, path) -> None:
        """Write samples as tau,A,B,dA,dB,Q,I at 17 significant digits."""
        q = self.q_samples()
        ii = self.decay_samples()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("tau,A,B,dA,dB,Q,I\n")
            for k in range(len(self)):
                row = (self.tau[k], self.A[k], self.B[k],
                       self.dA[k], self.dB[k], q[k], ii[k])
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _cumtrapz0(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid with a leading zero."""
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def _picard_sweep(tau: np.ndarray, inv_tau: np.ndarray, g: np.ndarray,
                  f: np.ndarray, params: ModelParams):
    """One sweep of the startup fixed-point maps for (g, f) = (B', A' + c1).

    Both maps are averaged integrals (1/tau) * int_0^tau ... dtau', evaluated
    with cumulative trapezoid quadrature on the given uniform grid.
    """
    B0 = params.B0
    c1 = _c1(params)
    B = B0 + _cumtrapz0(g, tau)
    if np.any(B <= 0.0) or np.any(B >= B_MAX):
        raise NonContractionError(
            "startup iterate left the admissible half-angle band (0, pi/4)")
    s2, c2 = np.sin(2.0 * B), np.cos(2.0 * B)
    cot2, tan2 = c2 / s2, s2 / c2
    dA = f - c1
    g_new = inv_tau * _cumtrapz0(2.0 * tau * (cot2 * g * g - tan2 * dA * dA), tau)
    f_new = inv_tau * (_cumtrapz0(2.0 * tau * dA * g * (cot2 - tan2), tau)
                       - _cumtrapz0(params.forcing / math.pi
                                    * (np.sin(4.0 * B) - math.sin(4.0 * B0)), tau))
    return g_new, f_new


def startup(params: ModelParams, n_grid: int = 2048, max_iter: int = 64,
            keep_every: int | None = None):
    """Fixed-point startup stage on [0, startup_eps].

    Iterates the integral maps for g = B' and f = A' + c1 on a uniform grid
    (trapezoid quadrature; both maps vanish at tau = 0, which removes the
    singularity).  Returns (Trajectory on [0, eps], contraction_factor).

    Raises NonContractionError when the measured sup-norm contraction factor
    is >= 1, and NonConvergedError when the iteration stalls before reaching
    round-off level.
    """
    params.validate()
    eps = params.startup_eps
    B0 = params.B0
    c1 = _c1(params)
    tau = np.linspace(0.0, eps, n_grid + 1)
    g = np.zeros_like(tau)
    f = np.zeros_like(tau)
    inv_tau = np.zeros_like(tau)
    inv_tau[1:] = 1.0 / tau[1:]

    deltas: list[float] = []
    for _ in range(max_iter):
        g_new, f_new = _picard_sweep(tau, inv_tau, g, f, params)
        delta = max(np.max(np.abs(g_new - g)), np.max(np.abs(f_new - f)))
        g, f = g_new, f_new
        deltas.append(delta)
        if delta < 1e-16 * (1.0 + np.max(np.abs(g)) + np.max(np.abs(f))):
            break
    else:
        raise NonConvergedError(
            f"startup iteration did not reach round-off in {max_iter} sweeps "
            f"(last increment {deltas[-1]:.3e})")

    # Contraction factor: geometric ratio of successive increments while they
    # are still well above round-off.  The first increment measures the size
    # of the seed, not the map's Lipschitz constant, so ratios start at the
    # second increment.
    ratios = [deltas[i + 1] / deltas[i] for i in range(len(deltas) - 1)
              if deltas[i] > 1e-14]
    factor = max(ratios) if ratios else 0.0
    if factor >= 1.0:
        raise NonContractionError(
            f"startup iteration is not a contraction on [0, {eps:g}] "
            f"(measured factor {factor:.3f})")

    dA = f - c1
    B = B0 + _cumtrapz0(g, tau)
    A = _cumtrapz0(dA, tau)
    if keep_every is None:
        keep_every = max(1, n_grid // 64)
    idx = np.arange(0, tau.size, keep_every)
    if idx[-1] != tau.size - 1:
        idx = np.append(idx, tau.size - 1)
    traj = Trajectory(tau[idx], A[idx], B[idx], dA[idx], g[idx],
                      params=params,
                      meta={"stage": "startup", "contraction": factor,
                            "iterations": len(deltas), "forcing": params.forcing})
    return traj, factor


def integrate(params: ModelParams) -> Trajectory:
    """Full integration of the effective system on [0, tau_max].

    Runs the fixed-point startup stage (halving the window until its
    measured contraction factor is below 1/2), then an adaptive embedded
    Runge-Kutta (eighth-order with fifth-order error control) up to tau_max,
    recording every accepted step.  Invariants checked on the result:

    * B stays in (0, B0] and is non-increasing sample to sample;
    * B' <= 0 at every sample beyond round-off;
    * the samples resolve B monotonically (no oscillation).

    If B reaches the double-precision floor 1e-14 the run stops there and
    the trajectory is flagged ``numerically_cusped`` in its meta dict.
    """
    params.validate()
    work = params
    factor = math.inf
    head = None
    for _ in range(24):
        head, factor = startup(work)
        if factor < 0.5:
            break
        work = replace(work, startup_eps=work.startup_eps / 2.0)
    else:
        raise NonContractionError(
            "startup window could not be shrunk to a contraction factor < 1/2")

    eps = work.startup_eps
    y0 = np.array([head.A[-1], head.B[-1], head.dA[-1], head.dB[-1]])
    atol = np.array([work.abs_tol, work.abs_tol,
                     work.abs_tol * 1e-6, work.abs_tol * 1e-6])

    # Integrate in sigma = log(tau).  The dynamics are power-law-like, so a
    # capped log step keeps the samples dense relative to the local time
    # scale; that is what bounds the Hermite interpolation error between
    # accepted steps (relative error about (max_log_step)^4 / 384).
    def rhs_sigma(sigma, y, forcing):
        tau_here = math.exp(sigma)
        dy = _rhs_vec(tau_here, y, forcing)
        return tau_here * dy

    def hit_floor(sigma, y, _forcing):
        return y[1] - B_FLOOR

    hit_floor.terminal = True
    hit_floor.direction = -1

    sol = solve_ivp(rhs_sigma, (math.log(eps), math.log(work.tau_max)), y0,
                    method="DOP853", rtol=work.rel_tol, atol=atol,
                    args=(work.forcing,), events=hit_floor,
                    max_step=work.max_log_step, dense_output=False)
    if not sol.success and sol.status != 1:
        raise StepFailureError(f"adaptive stage failed: {sol.message}")

    tau = np.concatenate([head.tau, np.exp(sol.t[1:])])
    A = np.concatenate([head.A, sol.y[0, 1:]])
    B = np.concatenate([head.B, sol.y[1, 1:]])
    dA = np.concatenate([head.dA, sol.y[2, 1:]])
    dB = np.concatenate([head.dB, sol.y[3, 1:]])

    meta = dict(head.meta)
    meta.update(stage="full", startup_eps=eps, n_accepted=int(sol.t.size - 1),
                numerically_cusped=bool(sol.status == 1),
                forcing=work.forcing)
    traj = Trajectory(tau, A, B, dA, dB, params=work, meta=meta)
    _check_invariants(traj)
    return traj


def _check_invariants(traj: Trajectory) -> None:
    B0 = traj.B[0]
    slack = 1e-12 * max(B0, 1.0)
    if np.any(traj.B <= 0.0):
        raise InvariantViolationError("half_angle_positive",
                                      "B reached a non-positive value")
    if np.any(traj.B > B0 + slack):
        raise InvariantViolationError("half_angle_bounded",
                                      "B exceeded its initial value")
    dB_steps = np.diff(traj.B)
    if np.any(dB_steps > slack):
        k = int(np.argmax(dB_steps))
        raise InvariantViolationError(
            "half_angle_monotone",
            f"B increased between samples {k} and {k + 1} "
            f"(by {dB_steps[k]:.3e} at tau={traj.tau[k]:.6g})")
    if np.any(traj.dB > slack):
        raise InvariantViolationError("closing_rate_sign", "B' became positive")


# Scalar diagnostics ------------------------------------------------------

def q_of(state: EffectiveState) -> float:
    """Normalized bisector speed Q = -tau * A' / B (limit 0 at tau = 0)."""
    if state.B <= 0.0:
        raise ValueError("Q needs a positive half-angle")
    if state.tau == 0.0:
        return 0.0
    return -state.tau * state.dA / state.B


def decay_order(state: EffectiveState) -> float:
    """Instantaneous decay order I = -tau * B' / B (limit 0 at tau = 0)."""
    if state.B <= 0.0:
        raise ValueError("the decay order needs a positive half-angle")
    if state.tau == 0.0:
        return 0.0
    return -state.tau * state.dB / state.B


def identity_residual(traj: Trajectory) -> np.ndarray:
    """pi*A' + forcing*sin(4B) at every sample; zero for exact solutions."""
    forcing = traj.meta.get("forcing", 1.0)
    return math.pi * traj.dA + forcing * np.sin(4.0 * traj.B)


def fit_log_slope(tau: np.ndarray, values: np.ndarray,
                  window: tuple[float, float], min_samples: int = 8):
    """Least-squares slope of log(values) against log(tau) inside a window.

    Returns (slope, n_samples).  Values must be positive inside the window.
    """
    lo, hi = window
    mask = (tau >= lo) & (tau <= hi)
    if int(mask.sum()) < min_samples:
        raise InsufficientSamplesError(
            f"only {int(mask.sum())} samples in [{lo:g}, {hi:g}]; "
            f"need at least {min_samples}")
    v = values[mask]
    if np.any(v <= 0.0):
        raise ValueError("log-log fit needs positive values in the window")
    slope = np.polyfit(np.log(tau[mask]), np.log(v), 1)[0]
    return float(slope), int(mask.sum())


def estimate_delta(traj: Trajectory, window: tuple[float, float] = (1e3, 1e6)) -> float:
    """Excess decay rate: delta_hat = -(slope of log B vs log tau) - 1.

    The window must sit beyond the time where the decay order I crosses 1,
    so that B is already super-linearly decaying.
    """
    lo, hi = window
    hi = min(hi, traj.tau[-1])
    if hi <= lo:
        raise InsufficientSamplesError("window collapses after clipping to range")
    t_cross = first_crossing(traj, 1.0)
    if t_cross is None or lo <= t_cross:
        raise ValueError(
            f"window start {lo:g} must exceed the I=1 crossing "
            f"({'none' if t_cross is None else f'{t_cross:.6g}'})")
    slope, _ = fit_log_slope(traj.tau, traj.B, (lo, hi))
    return float(-slope - 1.0)


def first_crossing(traj: Trajectory, level: float = 1.0):
    """First tau where the decay order reaches the given level, or None.

    Linear interpolation between the two bracketing samples.
    """
    ii = traj.decay_samples()
    above = np.nonzero(ii >= level)[0]
    if above.size == 0:
        return None
    k = int(above[0])
    if k == 0:
        return float(traj.tau[0])
    t0, t1 = traj.tau[k - 1], traj.tau[k]
    v0, v1 = ii[k - 1], ii[k]
    return float(t0 + (level - v0) * (t1 - t0) / (v1 - v0))


@dataclass(frozen=True)
class LimitEstimate:
    """A limit value together with a tail-variation certificate."""

    value: float
    tail_variation: float


def limit_A(traj: Trajectory, tail_tol: float = 1e-3) -> LimitEstimate:
    """Estimate the bisector limit A(inf) by the final sample.

    The certificate is the total variation of A over the last decade of the
    sampled range, integral of |A'|; the estimate errs by at most roughly
    that amount.  Raises NonConvergedError when the certificate exceeds
    tail_tol * max(1, |A(tau_max)|).
    """
    t_hi = traj.tau[-1]
    t_lo = t_hi / 10.0
    mask = traj.tau >= t_lo
    if int(mask.sum()) < 4:
        raise InsufficientSamplesError("too few samples in the last decade")
    tail = float(np.trapezoid(np.abs(traj.dA[mask]), traj.tau[mask]))
    value = float(traj.A[-1])
    if tail > tail_tol * max(1.0, abs(value)):
        raise NonConvergedError(
            f"bisector tail still varies by {tail:.3e} over the last decade")
    return LimitEstimate(value=value, tail_variation=tail)
