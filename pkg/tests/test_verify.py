"""Audit battery, stability measurement, uniqueness proxy, ladders."""
import numpy as np
import pytest

from garzfv import (
    DegeneratePairError,
    GreenshieldsModel,
    Grid,
    InputRangeError,
    SlabConfig,
    audit_trajectory,
    convergence_study,
    lwr_riemann_exact,
    measure_stability,
    perturb_data,
    riemann_initial_data,
    scenario,
    solve_global,
    uniqueness_check,
)
from garzfv.core import state_from_arrays

GSH = GreenshieldsModel()


def test_constant_trajectory_audit_all_pass(audited):
    sc, traj, rep = audited("constant")
    assert rep.passed
    for check in rep.checks:
        assert check.passed, check.name
    # nothing moves, so worst violations sit at roundoff
    for check in rep.checks:
        if "within" in check.name or "interval" in check.name:
            assert abs(check.worst) < 1e-12, check.name


def test_shock_trajectory_tv_constant(audited):
    sc, traj, rep = audited("shock")
    assert rep.passed
    tv = np.asarray(traj.tv_series)
    assert np.all(tv <= tv[0] + 1e-12)
    names = {c.name for c in rep.checks}
    assert "tv_non_increasing" in names


def test_audit_is_pure(audited):
    sc, traj, rep = audited("rarefaction")
    again = audit_trajectory(traj)
    assert [c.row() for c in again.checks] == [c.row() for c in rep.checks]


def test_corrupted_state_fails_bounds_with_reported_violation():
    sc = scenario("constant")
    traj = solve_global(sc.data, sc.grid, sc.t_final, sc.model(), n_output=4)
    st = traj.states[2]
    rho = st.rho.values.copy()
    rho[10] = 1.5
    traj.states[2] = state_from_arrays(st.t, rho, st.v.values, st.w.values,
                                       st.z_inf, st.u_inf, st.grid)
    rep = audit_trajectory(traj)
    assert not rep.passed
    bad = {c.name: c for c in rep.checks if not c.passed}
    assert "rho_in_unit_interval" in bad
    assert bad["rho_in_unit_interval"].worst == pytest.approx(0.5, abs=1e-12)


def test_stability_on_shifted_and_nudged_pair():
    sc = scenario("smoke")
    grid = Grid(sc.grid.x_min, sc.grid.x_max, 128)
    data2 = perturb_data(sc.data, grid, shift_cells=2, du_inf=0.01)
    res = measure_stability(sc.data, data2, grid, sc.t_final, sc.model())
    assert res.lhs0 > 0
    assert np.isfinite(res.k_measured)
    assert res.k_measured >= 1.0 - 1e-12
    assert res.within_envelope
    # swapping the pair leaves the measured constant unchanged
    res_sw = measure_stability(data2, sc.data, grid, sc.t_final, sc.model())
    assert res_sw.k_measured == pytest.approx(res.k_measured, rel=1e-12)


def test_stability_identical_pair_rejected():
    sc = scenario("shock")
    with pytest.raises(DegeneratePairError):
        measure_stability(sc.data, sc.data, sc.grid, sc.t_final, sc.model())


def test_uniqueness_gap_small_on_constant():
    sc = scenario("constant")
    res = uniqueness_check(sc.data, sc.grid, sc.t_final, sc.model(), seeds=3)
    assert res.passed
    assert res.gap <= res.tol
    assert res.gap < 1e-10


def test_uniqueness_needs_two_seeds():
    sc = scenario("constant")
    with pytest.raises(InputRangeError):
        uniqueness_check(sc.data, sc.grid, sc.t_final, sc.model(), seeds=1)


def test_convergence_ladder_validation():
    data = riemann_initial_data(0.3, 0.8, 1.0, -4.0, 4.0)
    exact = lambda t, x: lwr_riemann_exact(0.3, 0.8, 1.0, GSH, t, x)
    with pytest.raises(InputRangeError):
        convergence_study(data, 1.0, [Grid(-4, 4, 64), Grid(-4, 4, 128)],
                          GSH, exact)
    with pytest.raises(InputRangeError):
        convergence_study(data, 1.0,
                          [Grid(-4, 4, 64), Grid(-4, 4, 128), Grid(-4, 4, 192)],
                          GSH, exact)


def test_convergence_on_constant_data_reports_zero_errors():
    data = riemann_initial_data(0.4, 0.4, 1.0, -4.0, 4.0)
    exact = lambda t, x: np.full(np.shape(x), 0.4)
    tab = convergence_study(
        data, 0.5, [Grid(-4, 4, 64), Grid(-4, 4, 128), Grid(-4, 4, 256)],
        GSH, exact, cfg=SlabConfig(entropy_levels=0))
    assert all(e < 1e-13 for e in tab.errors())


def test_convergence_monotone_on_moving_shock():
    data = riemann_initial_data(0.3, 0.8, 1.0, -4.0, 4.0)
    exact = lambda t, x: lwr_riemann_exact(0.3, 0.8, 1.0, GSH, t, x)
    grids = [Grid(-4, 4, n) for n in (64, 128, 256)]
    tab = convergence_study(data, 1.0, grids, GSH, exact)
    assert tab.errors()[-1] < tab.errors()[0]
    assert len(tab.orders()) == 2


def test_report_serialization_shapes(audited):
    sc, traj, rep = audited("smoke")
    rows = [c.row() for c in rep.checks]
    assert all(len(r) == 4 for r in rows)
    text = rep.summary()
    assert "entropy_residual" in text
    assert "[pass]" in text
    assert rep.failures() == []
