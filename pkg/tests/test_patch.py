"""Contour dynamics: kernel values, benchmark flows, mesh maintenance."""

import math

import numpy as np
import pytest

from cusplab.exceptions import InvariantViolationError
from cusplab.geometry import polygon_area
from cusplab.patch import (
    HAVE_NUMBA,
    CDConfig,
    PatchState,
    _velocity_numpy,
    _segments,
    area,
    corner_anchor,
    evolve,
    make_corner_patch,
    make_disc,
    make_ellipse,
    principal_angle,
    remesh,
    step,
    symmetrize,
    velocity,
)

B0 = math.pi / 8


# ---------------------------------------------------------------------------
# Kernel checks against the circular vortex (solid rotation inside,
# point-vortex decay outside, both with |u| = r/2 at the boundary r = 1).

@pytest.fixture(scope="module")
def disc():
    return make_disc(radius=1.0, n=1024)


class TestRankineDisc:

    def test_interior(self, disc):
        u = velocity(disc, np.array([[0.5, 0.0]]))
        assert u[0, 0] == pytest.approx(0.0, abs=1e-8)
        assert u[0, 1] == pytest.approx(0.25, rel=1e-5)

    def test_exterior(self, disc):
        # Total circulation pi: u_theta = 1/(2 r) * r^2 ... = Gamma/(2 pi r).
        u = velocity(disc, np.array([[2.0, 0.0]]))
        assert u[0, 0] == pytest.approx(0.0, abs=1e-8)
        assert u[0, 1] == pytest.approx(0.25, rel=1e-5)

    def test_center_stagnates(self, disc):
        u = velocity(disc, np.array([[0.0, 0.0]]))
        assert np.hypot(*u[0]) < 1e-10

    def test_vorticity_scaling(self, disc):
        double = PatchState(t=0.0, contours=disc.contours, vorticity=2.0)
        u1 = velocity(disc, np.array([[0.5, 0.3]]))
        u2 = velocity(double, np.array([[0.5, 0.3]]))
        assert np.allclose(u2, 2.0 * u1, rtol=1e-14)

    def test_rotation_symmetry(self, disc):
        # Same speed at every angle on a ring.
        ang = np.linspace(0.0, 2.0 * math.pi, 7)[:-1]
        pts = 0.7 * np.column_stack([np.cos(ang), np.sin(ang)])
        u = velocity(disc, pts)
        speeds = np.hypot(u[:, 0], u[:, 1])
        assert np.ptp(speeds) < 1e-9


@pytest.mark.skipif(not HAVE_NUMBA, reason="compiled kernel unavailable")
def test_numba_matches_numpy():
    cfg = CDConfig(quad_order=8)
    st = make_corner_patch(B0, CDConfig(n_nodes=160))
    rng = np.random.default_rng(5)
    pts = rng.uniform(-1.0, 1.0, size=(40, 2))
    fast = velocity(st, pts, cfg)
    ax, ay, dx, dy = _segments(st.contours)
    from cusplab.geometry import gauss_legendre
    gs, gw = gauss_legendre(cfg.quad_order)
    sx, sy = _velocity_numpy(ax, ay, dx, dy, pts[:, 0].copy(), pts[:, 1].copy(),
                             gs, gw, cfg.near_factor ** 2)
    coef = -st.vorticity / (2.0 * math.pi)
    ref = np.column_stack([coef * sx, coef * sy])
    assert np.allclose(fast, ref, rtol=0.0, atol=1e-13)


def test_quad_order_convergence():
    # Quadrature error isolated from polygonization: raising the order
    # beyond 8 should change nothing at working precision.
    st = make_disc(radius=1.0, n=64)
    pts = np.array([[0.9, 0.4], [2.0, 0.0]])
    u8 = velocity(st, pts, CDConfig(quad_order=8))
    u16 = velocity(st, pts, CDConfig(quad_order=16))
    u2 = velocity(st, pts, CDConfig(quad_order=2))
    assert np.max(np.abs(u8 - u16)) < 1e-10
    assert np.max(np.abs(u2 - u16)) > np.max(np.abs(u8 - u16))


# ---------------------------------------------------------------------------
# Benchmark flows.

def test_disc_is_steady():
    # Nodes orbit the circle but the shape must not deform.
    cfg = CDConfig(n_nodes=128, dt=0.01, symmetrize=False, remesh_every=0)
    st = make_disc(radius=1.0, n=128)
    out, _ = evolve(st, cfg, 1.0)
    rad = np.hypot(out.contours[0][:, 0], out.contours[0][:, 1])
    assert np.max(np.abs(rad - 1.0)) < 1e-6
    assert abs(area(out) - area(st)) / area(st) < 1e-7


def test_elliptical_rotation_rate():
    # A 2:1 ellipse rotates rigidly at ab/(a+b)^2 = 2/9.
    cfg = CDConfig(n_nodes=256, dt=2e-3, symmetrize=False, remesh_every=0,
                   check_every=0)
    st = make_ellipse(a=2.0, b=1.0, n=256)
    ts, angs = [], []

    def watch(_k, s):
        ts.append(s.t)
        angs.append(principal_angle(s))

    a0 = area(st)
    out, _ = evolve(st, cfg, 0.4, observer=watch)
    rate = np.polyfit(ts, np.unwrap(np.array(angs) * 2.0) / 2.0, 1)[0]
    assert rate == pytest.approx(2.0 / 9.0, rel=1e-2)
    assert abs(area(out) - a0) / a0 < 1e-5


# ---------------------------------------------------------------------------
# Corner patch construction.

class TestCornerPatch:
    def test_structure(self):
        cfg = CDConfig(n_nodes=220)
        st = make_corner_patch(B0, cfg)
        assert len(st.contours) == 2
        assert np.array_equal(st.contours[1], -st.contours[0])
        # Pinned corner node at the origin exactly.
        assert st.contours[0][0, 0] == 0.0 and st.contours[0][0, 1] == 0.0
        # Positive orientation.
        assert polygon_area(st.contours[0]) > 0.0

    def test_edge_angles(self):
        st = make_corner_patch(B0, CDConfig(n_nodes=220))
        c = st.contours[0]
        ang = np.arctan2(c[1:, 1], c[1:, 0])
        rad = np.hypot(c[1:, 0], c[1:, 1])
        on_edges = (np.abs(np.abs(ang) - B0) < 1e-12).mean()
        assert on_edges > 0.8  # all but the cap arc
        assert rad.max() == pytest.approx(0.9, rel=1e-12)

    def test_node_budget(self):
        for n in (120, 260, 400):
            st = make_corner_patch(B0, CDConfig(n_nodes=n))
            assert abs(st.contours[0].shape[0] - n) <= max(4, 0.05 * n)

    def test_spacing_limits(self):
        cfg = CDConfig(n_nodes=220, h_min=5e-5, h_max=0.05)
        c = make_corner_patch(B0, cfg).contours[0]
        seg = np.hypot(*np.diff(c, axis=0).T)
        assert seg.min() >= 0.3 * cfg.h_min
        assert seg.max() <= 2.0 * cfg.h_max

    def test_area_value(self):
        # Two wedges of half-angle B0 and radius 0.9, caps polygonal.
        st = make_corner_patch(B0, CDConfig(n_nodes=400))
        assert area(st) == pytest.approx(2.0 * 0.81 * B0, rel=5e-4)

    def test_corner_is_stagnation_point(self):
        st = make_corner_patch(B0, CDConfig(n_nodes=260))
        u = velocity(st, np.array([[0.0, 0.0]]))
        assert np.hypot(*u[0]) < 1e-12


# ---------------------------------------------------------------------------
# Maintenance operations.

class TestMaintenance:
    def test_symmetrize_projects(self):
        st = make_corner_patch(B0, CDConfig(n_nodes=160))
        n = st.contours[0].shape[0]
        wiggle = 1e-6 * np.sin(np.arange(n) * 1.7)[:, None]
        skew = PatchState(t=0.0, contours=[st.contours[0] + wiggle,
                                           -st.contours[0]],
                          mesh_grade=st.mesh_grade)
        out = symmetrize(skew)
        assert np.array_equal(out.contours[1], -out.contours[0])
        assert np.max(np.abs(out.contours[0] - st.contours[0])) < 1e-6

    def test_anchor_re_pins(self):
        st = make_corner_patch(B0, CDConfig(n_nodes=160))
        moved = [c.copy() for c in st.contours]
        moved[0][0] = [1e-9, -1e-9]
        out = corner_anchor(PatchState(t=0.0, contours=moved,
                                       mesh_grade=st.mesh_grade), tol=1e-6)
        assert out.contours[0][0, 0] == 0.0 and out.contours[0][0, 1] == 0.0

    def test_anchor_rejects_large_drift(self):
        st = make_corner_patch(B0, CDConfig(n_nodes=160))
        moved = [c.copy() for c in st.contours]
        moved[0][0] = [1e-3, 0.0]
        with pytest.raises(InvariantViolationError) as ei:
            corner_anchor(PatchState(t=0.0, contours=moved,
                                     mesh_grade=st.mesh_grade), tol=1e-6)
        assert ei.value.invariant == "pinned_corner"

    def test_remesh_preserves_area_and_pin(self):
        cfg = CDConfig(n_nodes=220)
        st = make_corner_patch(B0, cfg)
        # Distort tangentially, then remesh back to the graded density.
        c = st.contours[0].copy()
        rad = np.hypot(c[:, 0], c[:, 1])
        c[1:-1] *= (1.0 + 0.02 * np.sin(40.0 * rad[1:-1]))[:, None]
        distorted = PatchState(t=0.0, contours=[c, -c], mesh_grade=st.mesh_grade)
        out = remesh(distorted, cfg)
        assert out.contours[0][0, 0] == 0.0 and out.contours[0][0, 1] == 0.0
        assert abs(area(out) - area(distorted)) / area(distorted) < 2e-3
        assert np.array_equal(out.contours[1], -out.contours[0])

    def test_step_dt_override(self):
        cfg = CDConfig(n_nodes=128, dt=0.01, symmetrize=False)
        st = make_disc(n=64)
        out = step(st, cfg, dt=0.5 * cfg.dt)
        assert out.t == pytest.approx(0.005, abs=1e-15)

    def test_evolve_partial_final_step(self):
        cfg = CDConfig(n_nodes=128, dt=0.01, symmetrize=False, remesh_every=0)
        st = make_disc(n=64)
        out, snaps = evolve(st, cfg, 0.025, snapshot_every=1)
        assert out.t == pytest.approx(0.025, abs=1e-12)
        # Initial state plus one per step (two full steps and a short one).
        assert len(snaps) == 4
        assert snaps[-1].t == pytest.approx(0.025, abs=1e-12)


class TestCornerEvolution:
    def test_short_run_invariants(self):
        cfg = CDConfig(n_nodes=200, dt=1e-3, h_min=5e-5)
        st = make_corner_patch(B0, cfg)
        a0 = area(st)
        out, snaps = evolve(st, cfg, 0.02, snapshot_every=10)
        assert out.t == pytest.approx(0.02, abs=1e-12)
        # Corner stays pinned and symmetric through maintenance.
        for c in out.contours:
            assert c[0, 0] == 0.0 and c[0, 1] == 0.0
        assert np.array_equal(out.contours[1], -out.contours[0])
        assert abs(area(out) - a0) / a0 < 2e-3
        assert len(snaps) == 3

    def test_config_validation(self):
        with pytest.raises(ValueError):
            CDConfig(n_nodes=4).validate()
        with pytest.raises(ValueError):
            CDConfig(dt=0.0).validate()
        with pytest.raises(ValueError):
            CDConfig(h_min=0.1, h_max=0.01).validate()
        with pytest.raises(ValueError):
            CDConfig(near_factor=-1.0).validate()
        with pytest.raises(ValueError):
            CDConfig(quad_order=0).validate()
