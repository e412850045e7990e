import numpy as np
import pytest

from pecshift.config import SimulationConfig
from pecshift.grid import NodeClass, build_uniform_grid
from pecshift.shapes import Domain
from pecshift.solver import (FieldState, MaxwellStepper, StabilityError,
                             incident_wave, run_simulation)
from pecshift.stencil import FitTable

from conftest import circle_geometry

OMEGA = 2 * np.pi / 0.6


def free_space_stepper(n=40):
    grid = build_uniform_grid(Domain(), n, n)
    fits = FitTable.build(grid)
    classes = np.zeros(grid.shape, dtype=np.int8)
    return grid, MaxwellStepper(grid, classes, fits, omega=OMEGA)


def plane_wave_state(grid, t=0.0):
    return FieldState(*incident_wave(grid.x, grid.y, t, OMEGA), t)


class TestIncidentWave:
    def test_zero_phase(self):
        hx, hy, ez = incident_wave(0.25, 1.0, 0.25, OMEGA)
        assert hx == 0.0 and hy == pytest.approx(0.0) and ez == pytest.approx(0.0)

    def test_quarter_period(self):
        _, hy, ez = incident_wave(0.15, 0.0, 0.0, OMEGA)
        assert ez == pytest.approx(1.0)
        assert hy == pytest.approx(-1.0)

    def test_ez_plus_hy_identity(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(0, 10, 100)
        t = rng.uniform(0, 3)
        _, hy, ez = incident_wave(x, None, t, OMEGA)
        assert np.abs(ez + hy).max() == 0.0


class TestSweep:
    def test_constant_state_fixed_point(self):
        grid, st = free_space_stepper()
        s = FieldState(np.full(grid.shape, 1.7), np.full(grid.shape, -0.4),
                       np.full(grid.shape, 2.2), 0.0)
        out = st.sweep(s, "forward", 0.05)
        assert np.abs(out.hx - 1.7).max() <= 1e-12
        assert np.abs(out.hy + 0.4).max() <= 1e-12
        assert np.abs(out.ez - 2.2).max() <= 1e-12

    def test_backward_equals_forward_negated_dt(self):
        grid, st = free_space_stepper()
        rng = np.random.default_rng(1)
        s = FieldState(rng.normal(size=grid.shape), rng.normal(size=grid.shape),
                       rng.normal(size=grid.shape), 0.3)
        b = st.sweep(s, "backward", 0.07)
        f = st.sweep(s, "forward", -0.07)
        assert np.array_equal(b.hx, f.hx)
        assert np.array_equal(b.hy, f.hy)
        assert np.array_equal(b.ez, f.ez)
        assert b.time == f.time == pytest.approx(0.23)

    def test_forward_backward_pair_not_identity(self):
        # the scheme is not exactly reversible; the defect shrinks as O(dt^2)
        grid, st = free_space_stepper(60)
        defects = []
        for dt in (0.08, 0.04):
            s = plane_wave_state(grid)
            mid = st.sweep(s, "forward", dt)
            back = st.sweep(mid, "backward", dt)
            inner = np.s_[2:-2, 2:-2]
            defects.append(np.abs(back.ez[inner] - s.ez[inner]).max())
        assert defects[0] > 1e-8
        assert defects[0] / defects[1] == pytest.approx(4.0, rel=0.35)

    def test_ghost_and_deep_nodes_not_updated(self):
        grid, classes, fits, ls = circle_geometry(100)
        st = MaxwellStepper(grid, classes, fits, ls=ls, omega=OMEGA)
        rng = np.random.default_rng(2)
        s = FieldState(rng.normal(size=grid.shape), rng.normal(size=grid.shape),
                       rng.normal(size=grid.shape), 0.0)
        out = st.sweep(s, "forward", 0.05)
        frozen = (classes == NodeClass.GHOST) | (classes == NodeClass.DEEP_INTERIOR)
        assert np.array_equal(out.ez[frozen], s.ez[frozen])
        assert np.array_equal(out.hx[frozen], s.hx[frozen])

    def test_unknown_direction(self):
        grid, st = free_space_stepper(8)
        with pytest.raises(ValueError, match="direction"):
            st.sweep(plane_wave_state(grid), "sideways", 0.1)


class TestEnforceBoundary:
    @pytest.fixture(scope="class")
    def circle_stepper(self):
        grid, classes, fits, ls = circle_geometry(100)
        return grid, classes, ls, MaxwellStepper(grid, classes, fits, ls=ls,
                                                 omega=OMEGA)

    def test_normal_component_removed(self, circle_stepper):
        grid, classes, ls, st = circle_stepper
        rng = np.random.default_rng(3)
        s = FieldState(rng.normal(size=grid.shape), rng.normal(size=grid.shape),
                       rng.normal(size=grid.shape), 0.0)
        st.enforce_boundary(s)
        b = classes == NodeClass.BOUNDARY
        h_n = s.hx[b] * ls.normal_x[b] + s.hy[b] * ls.normal_y[b]
        assert np.abs(h_n).max() <= 1e-12
        assert np.all(s.ez[b] == 0.0)

    def test_tangential_field_intact(self, circle_stepper):
        grid, classes, ls, st = circle_stepper
        # pure tangential H survives enforcement
        s = FieldState(ls.tangent_x * 3.0, ls.tangent_y * 3.0,
                       np.zeros(grid.shape), 0.0)
        hx0 = s.hx.copy()
        st.enforce_boundary(s)
        b = classes == NodeClass.BOUNDARY
        assert np.abs(s.hx[b] - hx0[b]).max() <= 1e-12

    def test_projection_examples(self):
        # H=(2,0), n=(1,0) -> 0; H=(0,3) -> unchanged; H=(1,1), n=diag -> 0
        for h, n, want in (((2.0, 0.0), (1.0, 0.0), (0.0, 0.0)),
                           ((0.0, 3.0), (1.0, 0.0), (0.0, 3.0)),
                           ((1.0, 1.0), (np.sqrt(0.5), np.sqrt(0.5)), (0.0, 0.0))):
            hn = h[0] * n[0] + h[1] * n[1]
            got = (h[0] - hn * n[0], h[1] - hn * n[1])
            assert got == pytest.approx(want, abs=1e-15)


class TestOuterBoundary:
    def test_corner_value(self):
        grid, st = free_space_stepper(40)
        s = FieldState(np.zeros(grid.shape), np.zeros(grid.shape),
                       np.zeros(grid.shape), 0.25)
        st.apply_outer_boundary(s)
        assert s.ez[0, 0] == pytest.approx(-0.5, abs=1e-12)
        assert s.hx[0, 0] == 0.0
        assert s.hy[0, 0] == pytest.approx(0.5, abs=1e-12)

    def test_edge_at_x_equals_t(self):
        grid, st = free_space_stepper(11)
        s = FieldState(np.zeros(grid.shape), np.zeros(grid.shape),
                       np.zeros(grid.shape), 10.0)
        st.apply_outer_boundary(s)
        assert s.ez[-1, 3] == pytest.approx(0.0, abs=1e-9)

    def test_hx_always_zero_on_ring(self):
        grid, st = free_space_stepper(16)
        s = plane_wave_state(grid, 0.37)
        st.apply_outer_boundary(s)
        ring = np.zeros(grid.shape, bool)
        ring[0, :] = ring[-1, :] = ring[:, 0] = ring[:, -1] = True
        assert np.all(s.hx[ring] == 0.0)


class TestBfeccStep:
    def test_constant_state_is_fixed_point_interior(self):
        grid, st = free_space_stepper(40)
        s = FieldState(np.full(grid.shape, 0.9), np.full(grid.shape, 0.9),
                       np.full(grid.shape, 0.9), 0.0)
        out = st.bfecc_step(s, 0.1)
        inner = np.s_[1:-1, 1:-1]  # ring follows the incident wave instead
        assert np.abs(out.hx[inner] - 0.9).max() <= 1e-12
        assert np.abs(out.ez[inner] - 0.9).max() <= 1e-12

    def test_boundary_conditions_after_every_step(self):
        grid, classes, fits, ls = circle_geometry(100)
        from pecshift.extension import GhostExtender
        ext = GhostExtender(grid, ls, classes, fits)
        st = MaxwellStepper(grid, classes, fits, ls=ls, extender=ext,
                            omega=OMEGA)
        state = st.initial_state()
        b = classes == NodeClass.BOUNDARY
        for _ in range(3):
            state = st.bfecc_step(state, grid.dx)
            assert np.all(state.ez[b] == 0.0)
            h_n = state.hx[b] * ls.normal_x[b] + state.hy[b] * ls.normal_y[b]
            assert np.abs(h_n).max() <= 1e-12

    def test_free_space_accuracy_improves_with_bfecc(self):
        grid, st = free_space_stepper(80)
        dt = grid.dx
        s_plain = plane_wave_state(grid)
        s_bfecc = plane_wave_state(grid)
        for _ in range(8):
            s_plain = st.plain_step(s_plain, dt)
            s_bfecc = st.bfecc_step(s_bfecc, dt)
        exact = incident_wave(grid.x, grid.y, s_plain.time, OMEGA)[2]
        inner = np.s_[1:-1, 1:-1]
        err_plain = np.abs(s_plain.ez[inner] - exact[inner]).mean()
        err_bfecc = np.abs(s_bfecc.ez[inner] - exact[inner]).mean()
        assert err_bfecc < 0.5 * err_plain


class TestRunSimulation:
    def test_free_space_run_finishes_at_exact_time(self):
        cfg = SimulationConfig(shape="none", grid_size=40, final_time=0.5)
        state, setup = run_simulation(cfg)
        assert state.time == pytest.approx(0.5, abs=1e-12)
        assert np.isfinite(state.ez).all()

    def test_circle_run_stable_and_enforced(self):
        cfg = SimulationConfig(grid_size=50, final_time=0.4)
        state, setup = run_simulation(cfg)
        b = setup.classes == NodeClass.BOUNDARY
        assert np.all(state.ez[b] == 0.0)
        assert np.isfinite(state.hx).all()

    def test_deterministic_rerun_bitwise(self):
        cfg = SimulationConfig(grid_size=40, final_time=0.3)
        s1, _ = run_simulation(cfg)
        s2, _ = run_simulation(cfg)
        assert np.array_equal(s1.hx, s2.hx)
        assert np.array_equal(s1.hy, s2.hy)
        assert np.array_equal(s1.ez, s2.ez)

    def test_stability_sentinel(self):
        cfg = SimulationConfig(shape="none", grid_size=24, cfl=50.0,
                               final_time=5000.0)
        with pytest.raises(StabilityError, match="step"):
            run_simulation(cfg)

    def test_snapshot_callback_invoked(self):
        seen = []
        cfg = SimulationConfig(shape="none", grid_size=24, final_time=0.5)
        run_simulation(cfg, on_step=lambda s, k: seen.append(k))
        assert seen == list(range(1, len(seen) + 1))
        assert len(seen) >= 1
