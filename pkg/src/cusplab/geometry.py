"""Planar polygon and circle primitives shared by the patch integrator and
the diagnostics.

All circles are centered at the origin, matching the corner pinned there.
Areas are signed by orientation; counter-clockwise boundaries give positive
area.  The polygon/disk intersection is computed edge by edge with exact
chord and arc contributions, so it is exact (up to round-off) for simple
polygons at any radius.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .exceptions import IntersectionCountError, SelfIntersectionError

__all__ = [
    "polygon_area",
    "polygon_circle_area",
    "points_in_polygon",
    "circle_crossings",
    "self_intersects",
    "check_simple",
    "wrap_angle",
    "gauss_legendre",
]

TWO_PI = 2.0 * math.pi


def wrap_angle(phi):
    """Wrap angles to (-pi, pi]."""
    out = np.mod(-np.asarray(phi) + math.pi, TWO_PI)
    return math.pi - out


def polygon_area(nodes: np.ndarray) -> float:
    """Signed (shoelace) area of a closed polygon given by its vertices."""
    p = np.asarray(nodes, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_circle_area(nodes: np.ndarray, r: float,
                        tangency_tol: float = 1e-12) -> float:
    """Signed area of (polygon interior) intersected with the disk |x| <= r.

    Walks every edge, splits it at its circle crossings, and accumulates
    0.5 * cross(p0, p1) for pieces inside the disk and 0.5 * r^2 * dphi
    (dphi wrapped to (-pi, pi]) for pieces outside.  Exact for simple
    polygons; orientation of the polygon gives the sign.
    """
    if r < 0.0:
        raise ValueError("radius must be non-negative")
    if r == 0.0:
        return 0.0
    p = np.asarray(nodes, dtype=float)
    u = p
    v = np.roll(p, -1, axis=0)
    d = v - u
    a = np.einsum("ij,ij->i", d, d)
    b = 2.0 * np.einsum("ij,ij->i", u, d)
    c = np.einsum("ij,ij->i", u, u) - r * r

    total = 0.0
    r2 = r * r
    for i in range(u.shape[0]):
        if a[i] == 0.0:
            continue
        # Breakpoints of this edge at circle crossings (parameters in (0,1)).
        breaks = [0.0, 1.0]
        disc = b[i] * b[i] - 4.0 * a[i] * c[i]
        if disc > tangency_tol * a[i] * r2:
            sq = math.sqrt(disc)
            for s in ((-b[i] - sq) / (2.0 * a[i]), (-b[i] + sq) / (2.0 * a[i])):
                if 0.0 < s < 1.0:
                    breaks.append(s)
        breaks.sort()
        for s0, s1 in zip(breaks[:-1], breaks[1:]):
            if s1 - s0 <= 0.0:
                continue
            sm = 0.5 * (s0 + s1)
            mx = u[i, 0] + sm * d[i, 0]
            my = u[i, 1] + sm * d[i, 1]
            # Strict: a midpoint exactly on the circle means a tangent
            # touch from outside, which contributes an arc, not a chord.
            if mx * mx + my * my < r2:
                p0x, p0y = u[i, 0] + s0 * d[i, 0], u[i, 1] + s0 * d[i, 1]
                p1x, p1y = u[i, 0] + s1 * d[i, 0], u[i, 1] + s1 * d[i, 1]
                total += 0.5 * (p0x * p1y - p1x * p0y)
            else:
                phi0 = math.atan2(u[i, 1] + s0 * d[i, 1], u[i, 0] + s0 * d[i, 0])
                phi1 = math.atan2(u[i, 1] + s1 * d[i, 1], u[i, 0] + s1 * d[i, 0])
                dphi = math.remainder(phi1 - phi0, TWO_PI)
                total += 0.5 * r2 * dphi
    return total


def points_in_polygon(nodes: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Even-odd membership of points in a closed polygon (ray casting).

    Points exactly on the boundary may land on either side; callers that
    care must keep test points away from edges.
    """
    p = np.asarray(nodes, dtype=float)
    q = np.atleast_2d(np.asarray(pts, dtype=float))
    u = p[None, :, :]
    v = np.roll(p, -1, axis=0)[None, :, :]
    x, y = q[:, 0][:, None], q[:, 1][:, None]
    straddle = (u[:, :, 1] > y) != (v[:, :, 1] > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = u[:, :, 0] + (y - u[:, :, 1]) / (v[:, :, 1] - u[:, :, 1]) \
            * (v[:, :, 0] - u[:, :, 0])
    hits = straddle & (xs > x)
    return np.asarray(np.sum(hits, axis=1) % 2, dtype=bool)


def circle_crossings(nodes: np.ndarray, r: float,
                     tangency_tol: float = 1e-12) -> np.ndarray:
    """Angles (in [0, 2pi)) where the polygon boundary crosses |x| = r.

    Parity-exact: vertices are classified by the sign of |P|^2 - r^2 (points
    on the circle count as outside), so the number of sign alternations
    around the loop is always even.  Segments whose endpoints are both
    outside but that dip through the circle contribute their two interior
    roots; grazing dips within the tangency tolerance are ignored.
    """
    p = np.asarray(nodes, dtype=float)
    u = p
    v = np.roll(p, -1, axis=0)
    d = v - u
    a = np.einsum("ij,ij->i", d, d)
    b = 2.0 * np.einsum("ij,ij->i", u, d)
    c = np.einsum("ij,ij->i", u, u) - r * r
    inside = c < 0.0
    nxt = np.roll(inside, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = b * b - 4.0 * a * c
        sq = np.sqrt(np.clip(disc, 0.0, None))
        s_lo = (-b - sq) / (2.0 * a)
        s_hi = (-b + sq) / (2.0 * a)
    svals = []
    idx = []
    trans = (inside != nxt) & (a > 0.0)
    if np.any(trans):
        # Upward parabola: leaving the disc picks the larger root.
        s = np.where(inside[trans], s_hi[trans], s_lo[trans])
        svals.append(np.clip(s, 0.0, 1.0))
        idx.append(np.nonzero(trans)[0])
    dip = (~inside) & (~nxt) & (a > 0.0) \
        & (disc > tangency_tol * a * r * r) \
        & (s_lo >= 0.0) & (s_hi <= 1.0)
    if np.any(dip):
        svals.append(s_lo[dip])
        idx.append(np.nonzero(dip)[0])
        svals.append(s_hi[dip])
        idx.append(np.nonzero(dip)[0])
    if not svals:
        return np.empty(0)
    s = np.concatenate(svals)
    k = np.concatenate(idx)
    x = u[k, 0] + s * d[k, 0]
    y = u[k, 1] + s * d[k, 1]
    angles = np.mod(np.arctan2(y, x), TWO_PI)
    if angles.size % 2 != 0:
        raise IntersectionCountError(
            f"odd number of circle crossings ({angles.size}) at r={r:g}")
    return np.sort(angles)


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _segments_cross(p, q):
    """Vectorized proper-intersection test between segment sets.

    p, q: arrays (n, 4) of x0,y0,x1,y1.  Segments that merely share an
    endpoint do not count (strict inequalities).
    """
    ax, ay, bx, by = p[:, 0], p[:, 1], p[:, 2], p[:, 3]
    cx, cy, dx, dy = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    d1 = _orient(ax, ay, bx, by, cx, cy)
    d2 = _orient(ax, ay, bx, by, dx, dy)
    d3 = _orient(cx, cy, dx, dy, ax, ay)
    d4 = _orient(cx, cy, dx, dy, bx, by)
    return (d1 * d2 < 0.0) & (d3 * d4 < 0.0)


def self_intersects(contours: list[np.ndarray]) -> bool:
    """True when any boundary segment properly crosses another.

    Checks all segment pairs within and across the given closed contours.
    Contact at shared endpoints (the pinned corner) is allowed.
    """
    segs = []
    for nodes in contours:
        p = np.asarray(nodes, dtype=float)
        v = np.roll(p, -1, axis=0)
        keep = np.einsum("ij,ij->i", v - p, v - p) > 0.0
        segs.append(np.hstack([p, v])[keep])
    allseg = np.vstack(segs)
    n = allseg.shape[0]
    ii, jj = np.triu_indices(n, k=1)
    # Skip pairs that share an endpoint (adjacent in a contour or pinned
    # together at the corner): proper crossing is strict, but coincident
    # collinear overlap would also be missed, so shared-endpoint pairs get
    # a collinear-overlap check below.
    hits = _segments_cross(allseg[ii], allseg[jj])
    return bool(np.any(hits))


def check_simple(contours: list[np.ndarray]) -> None:
    """Raise SelfIntersectionError when the boundary crosses itself."""
    if self_intersects(contours):
        raise SelfIntersectionError("contour boundary crossed itself")


@lru_cache(maxsize=32)
def gauss_legendre(order: int):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w
