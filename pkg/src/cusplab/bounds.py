"""Arithmetic laboratory for the iterated area-deviation bounds.

Everything here manipulates the scalar reduction of the deviation fraction
F(t, r): the one-step formula F0, its fixed-point iterates on a (t, r)
grid, the exponential-plus-power closed form that dominates them, the
descendant series generated by an initial-data envelope kappa, and the
parameter choices (xi, m, eta) that turn the closed form into a decaying
bound.

The absolute constants C, Cstar, c0 are treated as inputs and all bounds
are reported parametrically; nothing here claims sharp numeric constants.
Throughout, L denotes |ln r| and X = C t L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson

from .exceptions import InvariantViolationError

__all__ = [
    "BoundParams",
    "GridFunction",
    "ParamChoice",
    "GBound",
    "KappaDescendants",
    "kappa_zero",
    "kappa_power",
    "kappa_table",
    "F0",
    "series_F",
    "closed_form",
    "make_grid",
    "default_grid",
    "iterate_F",
    "dominance_margin",
    "kappa_descendants",
    "verify_est_m",
    "choose_parameters",
    "decay_F",
    "final_G_bound",
]

STIRLING_C0 = 1.0 / math.sqrt(2.0 * math.pi)
# Integer m in [e xi, 4 xi] exists iff xi >= 1 / (4 - e).
XI_FEASIBLE = 1.0 / (4.0 - math.e)


def _log_radius(r: float | None, L: float | None) -> float:
    """|ln r| from either a plain radius or a log-radius.

    Radii below about e^{-745} underflow float64, so the deep sweeps pass
    L = |ln r| directly.
    """
    if (r is None) == (L is None):
        raise ValueError("give exactly one of r or L")
    if L is not None:
        if L <= 0.0:
            raise ValueError("L = |ln r| must be positive")
        return float(L)
    if not (0.0 < r < 1.0):
        raise ValueError("r must lie in (0, 1)")
    return abs(math.log(r))


# ---------------------------------------------------------------------------
# Initial-data envelopes.

def kappa_zero() -> Callable[[float], float]:
    """Exact corner data: no angular deviation at time zero."""
    return lambda r: 0.0


def kappa_power(p: float = 1.0) -> Callable[[float], float]:
    """kappa(r) = r**p, the simplest monotone envelope vanishing at 0."""
    if p <= 0.0:
        raise ValueError("power must be positive")
    return lambda r: float(r) ** p


def kappa_table(r_vals, k_vals) -> Callable[[float], float]:
    """Monotone envelope from a two-column table, linear in ln r.

    Clamped to the end values outside the tabulated range; the table must
    be increasing in r with non-negative values.
    """
    r_arr = np.asarray(r_vals, dtype=float)
    k_arr = np.asarray(k_vals, dtype=float)
    if r_arr.ndim != 1 or r_arr.shape != k_arr.shape or r_arr.size < 2:
        raise ValueError("need matching 1-d tables with at least 2 rows")
    if np.any(r_arr <= 0.0) or np.any(np.diff(r_arr) <= 0.0):
        raise ValueError("radii must be positive and strictly increasing")
    if np.any(k_arr < 0.0) or np.any(np.diff(k_arr) < 0.0):
        raise ValueError("kappa values must be non-negative and monotone")
    lr = np.log(r_arr)

    def kap(r: float) -> float:
        return float(np.interp(math.log(max(float(r), 1e-300)), lr, k_arr,
                               left=k_arr[0], right=k_arr[-1]))

    return kap


@dataclass
class BoundParams:
    """Constants of the bound arithmetic.

    C       growth constant of the one-step estimate
    c0      Stirling constant, m! >= c0 (m/e)^m
    Cstar   flow-map rate constant (enters the envelope pullback)
    kappa   monotone initial envelope r -> kappa(r), kappa(0+) = 0
    """

    C: float = 1.0
    c0: float = STIRLING_C0
    Cstar: float = 1.0
    kappa: Callable[[float], float] = field(default_factory=kappa_zero)

    def validate(self) -> None:
        if self.C <= 0.0 or self.c0 <= 0.0 or self.Cstar <= 0.0:
            raise ValueError("constants must be positive")
        probe = [self.kappa(r) for r in (1e-12, 1e-6, 1e-2)]
        if any(v < 0.0 for v in probe):
            raise ValueError("kappa must be non-negative")
        if any(b < a - 1e-15 for a, b in zip(probe, probe[1:])):
            raise ValueError("kappa must be monotone non-decreasing")


@dataclass
class GridFunction:
    """Values F(t, r) on a rectangular lattice, t uniform, r log-spaced."""

    t: np.ndarray
    r: np.ndarray
    values: np.ndarray

    def validate(self) -> None:
        if self.t.ndim != 1 or self.r.ndim != 1:
            raise ValueError("grids must be one-dimensional")
        if self.values.shape != (self.t.size, self.r.size):
            raise ValueError("values must be (n_t, n_r)")
        dt = np.diff(self.t)
        if self.t.size < 2 or np.any(dt <= 0.0) \
                or np.max(np.abs(dt - dt[0])) > 1e-12 * dt[0] + 1e-15:
            raise ValueError("t grid must be uniform and increasing")
        if np.any(self.r <= 0.0) or np.any(np.diff(self.r) <= 0.0):
            raise ValueError("r grid must be positive and increasing")
        if np.any(self.values < 0.0):
            raise ValueError("values must be non-negative")
        if np.any((self.r > 1.0) & np.any(self.values != 0.0, axis=0)):
            raise ValueError("values must vanish for r > 1")


# ---------------------------------------------------------------------------
# One-step formula, series identity, closed form.

def F0(params: BoundParams, t, r):
    """One-step bound C t + C t^2 L / 2 + C t L, vectorized in t and r."""
    t_arr = np.asarray(t, dtype=float)
    r_arr = np.asarray(r, dtype=float)
    if np.any(t_arr < 0.0):
        raise ValueError("t must be non-negative")
    if np.any((r_arr <= 0.0) | (r_arr >= 1.0)):
        raise ValueError("r must lie in (0, 1)")
    L = np.abs(np.log(r_arr))
    out = params.C * t_arr + 0.5 * params.C * t_arr ** 2 * L \
        + params.C * t_arr * L
    return float(out) if np.isscalar(t) and np.isscalar(r) else out


def series_F(params: BoundParams, m: int, t, r):
    """Partial-sum identity for the m-th iterate:

        (1/L) sum_{k=1}^m X^k/k! + (1/(C L)) sum_{k=1}^m X^{k+1}/(k+1)!
        + X^m/m!,  X = C t L.

    Equal to iterate_F up to quadrature error; serves as its oracle.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    t_arr = np.asarray(t, dtype=float)
    r_arr = np.asarray(r, dtype=float)
    L = np.abs(np.log(r_arr))
    X = params.C * t_arr * L
    s1 = np.zeros_like(X)
    s2 = np.zeros_like(X)
    term = np.ones_like(X)
    for k in range(1, m + 1):
        term = term * X / k          # X^k / k!
        s1 += term
        s2 += term * X / (k + 1.0)   # X^{k+1} / (k+1)!
    out = s1 / L + s2 / (params.C * L) + term
    return float(out) if np.isscalar(t) and np.isscalar(r) else out


def closed_form(params: BoundParams, m: int, t, r):
    """Exponential-plus-power dominating form (2/L) e^X + (1/c0) (X/m)^m."""
    if m < 1:
        raise ValueError("m must be at least 1")
    t_arr = np.asarray(t, dtype=float)
    r_arr = np.asarray(r, dtype=float)
    L = np.abs(np.log(r_arr))
    X = params.C * t_arr * L
    out = 2.0 / L * np.exp(X) + (1.0 / params.c0) * (X / m) ** m
    return float(out) if np.isscalar(t) and np.isscalar(r) else out


# ---------------------------------------------------------------------------
# Grid iteration.

def make_grid(params: BoundParams, r_list, t_max: float,
              n_t: int = 257) -> GridFunction:
    """Empty lattice: uniform t in [0, t_max], given radii, zero values."""
    if n_t < 256:
        raise ValueError("need at least 256 time points for the quadrature")
    t = np.linspace(0.0, t_max, n_t)
    r = np.sort(np.asarray(r_list, dtype=float))
    g = GridFunction(t=t, r=r, values=np.zeros((t.size, r.size)))
    g.validate()
    return g


def default_grid(params: BoundParams | None = None) -> GridFunction:
    """Default sweep lattice: X = C t L stays at or below 1/2 everywhere.

    Within this window the closed form genuinely dominates every iterate;
    pushing X toward m erodes the slack that the Stirling constant alone
    does not cover (the e^m in m! ~ sqrt(2 pi m) (m/e)^m is absorbed by
    the 2 e^X / L headroom only while X stays small or L moderate).
    """
    params = params or BoundParams()
    L_vals = np.array([10.0, 30.0, 100.0, 200.0])
    r = np.exp(-L_vals)
    t_max = 0.5 / (params.C * L_vals.max())
    return make_grid(params, r, t_max)


def iterate_F(params: BoundParams, m: int, grid: GridFunction) -> GridFunction:
    """m-th grid iterate: m = 1 is the one-step formula; each further pass
    applies F <- C t + C t^2 L / 2 + C L int_0^t F dt' with composite
    Simpson in t.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    grid.validate()
    L = np.abs(np.log(grid.r))[None, :]
    t = grid.t[:, None]
    base = params.C * t + 0.5 * params.C * t ** 2 * L
    cur = base + params.C * t * L
    dt = grid.t[1] - grid.t[0]
    for _ in range(m - 1):
        integral = cumulative_simpson(cur, dx=dt, axis=0, initial=0.0)
        cur = base + params.C * L * integral
    return GridFunction(t=grid.t, r=grid.r, values=cur)


def dominance_margin(params: BoundParams, m: int,
                     grid: GridFunction) -> float:
    """Minimum of closed_form - iterate over the lattice (>= 0 means the
    closed form dominates everywhere)."""
    it = iterate_F(params, m, grid)
    cf = closed_form(params, m, grid.t[:, None], grid.r[None, :])
    return float(np.min(cf - it.values))


# ---------------------------------------------------------------------------
# Descendants of the initial envelope.

@dataclass(frozen=True)
class KappaDescendants:
    """Series value of the envelope descendants and its analytic cap."""

    value: float
    bound: float
    terms: np.ndarray


def kappa_descendants(params: BoundParams, m: int, t: float,
                      r: float | None = None, *, L: float | None = None,
                      delta_choice: float | None = None,
                      n_grid: int = 4001,
                      check: bool = True) -> KappaDescendants:
    """Evaluate sum_{k=0}^{m-1} (C t)^k / k! * (Lt + Ht)^k(kappa)(r), where
    Lt g = cumulative log-average integral and Ht g = L * g at the envelope
    pullback u -> u e^{-Cstar t} in log-radius u = |ln s|.

    The cap asserted against it is
    (kappa(sqrt(delta)) + |ln delta| / L) e^{C t L} with delta = 1/L by
    default.  Raises InvariantViolationError("kappa_descendants") when the
    series exceeds the cap (check=True).
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if t < 0.0:
        raise ValueError("t must be non-negative")
    L = _log_radius(r, L)
    delta = 1.0 / L if delta_choice is None else float(delta_choice)
    if not (math.exp(-min(L, 700.0)) < delta < 1.0):
        raise ValueError("need r < delta_choice < 1")

    u = np.linspace(0.0, L, n_grid)
    g = np.array([params.kappa(math.exp(-ui)) for ui in u])
    shrink = math.exp(-params.Cstar * t)
    terms = np.empty(m)
    terms[0] = g[-1]
    fac = 1.0
    for k in range(1, m):
        lt = np.concatenate([[0.0], np.cumsum(
            0.5 * (g[1:] + g[:-1]) * np.diff(u))])
        ht = u * np.interp(u * shrink, u, g)
        g = lt + ht
        fac *= params.C * t / k
        terms[k] = fac * g[-1]
    value = float(np.sum(terms))
    bound = (params.kappa(math.sqrt(delta)) + abs(math.log(delta)) / L) \
        * math.exp(params.C * t * L)
    if check and value > bound * (1.0 + 1e-12):
        raise InvariantViolationError(
            "kappa_descendants",
            f"series {value:g} exceeds cap {bound:g} at L={L:g}, t={t:g}")
    return KappaDescendants(value=value, bound=bound, terms=terms)


# ---------------------------------------------------------------------------
# Parameter selection and final bounds.

@dataclass(frozen=True)
class ParamChoice:
    xi: float
    m: int
    eta: float


def verify_est_m(xi: float, m: int) -> bool:
    """(xi/m)^m <= e^{-xi}, checked in log space to dodge over/underflow."""
    if xi <= 0.0 or m < 1:
        raise ValueError("need xi > 0 and m >= 1")
    return m * (math.log(xi) - math.log(m)) <= -xi


def choose_parameters(params: BoundParams, r: float | None = None, *,
                      L: float | None = None) -> ParamChoice:
    """xi = min(ln L, ln(1/kappa(L^{-1/2}))) / 2, m = ceil(e xi),
    eta = xi / (C L).  Requires r small enough that an integer fits in
    [e xi, 4 xi]."""
    L = _log_radius(r, L)
    kap = params.kappa(L ** -0.5)
    cut = math.log(1.0 / kap) if kap > 0.0 else math.inf
    xi = 0.5 * min(math.log(L), cut)
    if xi < XI_FEASIBLE:
        raise ValueError(
            f"r too large: xi={xi:g} leaves no integer in [e xi, 4 xi]")
    m = math.ceil(math.e * xi)
    if m > 4.0 * xi:
        raise ValueError(
            f"r too large: no integer fits in [{math.e * xi:g}, {4 * xi:g}]")
    return ParamChoice(xi=xi, m=m, eta=xi / (params.C * L))


def decay_F(params: BoundParams, r: float | None = None, *,
            L: float | None = None) -> float:
    """Final F cap at the chosen time scale:
    2 ln L / sqrt(L) + sqrt(kappa(L^{-1/2}))."""
    L = _log_radius(r, L)
    return 2.0 * math.log(L) / math.sqrt(L) + math.sqrt(params.kappa(L ** -0.5))


@dataclass(frozen=True)
class GBound:
    """Area-fraction cap at t = eta(r): model tail term, deviation term,
    and their sum."""

    g_term: float
    f_term: float
    total: float


def final_G_bound(params: BoundParams, r: float | None = None,
                  delta: float = 0.5, *, L: float | None = None) -> GBound:
    """Cap on the area fraction at the eta(r) time scale.

    g_term = max((ln L)^{-(1+delta)}, sqrt(kappa(L^{-1/2}))) comes from the
    model wedge tail with decay order delta; f_term is decay_F.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    L = _log_radius(r, L)
    if L <= 1.0:
        raise ValueError("r must satisfy |ln r| > 1")
    g = max(math.log(L) ** -(1.0 + delta),
            math.sqrt(params.kappa(L ** -0.5)))
    f = decay_F(params, L=L)
    return GBound(g_term=g, f_term=f, total=g + f)
