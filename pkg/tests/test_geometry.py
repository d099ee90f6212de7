import pytest
from gmpy2 import mpq

from galperin.model import BilliardSpec, CollisionKind
from galperin import dynamics as dyn
from galperin import geometry as geo
from galperin.numeric import PHI, working_precision


def spec(b, N, **kw):
    return BilliardSpec(base=mpq(b), mantissa=N, **kw)


def test_predicted_extremes():
    s = spec(10, 2)
    v_max, P_max, p_max, X_min = geo.predicted_extremes(s)
    assert v_max == 100
    assert P_max == 10 ** 4
    assert p_max == 100  # b^-N * P_max = m * v_max
    assert X_min == mpq(-1, 100)


def test_equal_mass_light_ball_exits_with_v0():
    s = spec(2, 0)
    tr = dyn.simulate(s)
    v_max, _, _, _ = geo.predicted_extremes(s)
    assert v_max == 1
    assert max(abs(e.state_after.v) for e in tr.events) == 1


def test_observed_vs_predicted_extremes():
    s = spec(10, 2)
    tr = dyn.simulate(s)
    min_x, max_v = geo.observed_extremes(tr)
    assert max_v <= 100.0
    assert abs(max_v - 100.0) / 100.0 < 0.01
    assert min_x >= float(abs(geo.predicted_extremes(s)[3])) * 0.99


def test_min_distance_anchor_b10_N1():
    tr = dyn.simulate(spec(10, 1))
    min_x, _ = geo.observed_extremes(tr)
    assert abs(min_x / 1.0 - 0.0998) < 0.0001


def test_return_index():
    assert geo.return_index(mpq(10), 1) == 8
    assert geo.return_index(mpq(2), 0) == 1
    assert geo.return_index(mpq(1), 5) == 1
    k = geo.return_index(PHI, 3)
    # defining property: (k-1) phi < pi/2 <= k phi
    import math

    phi = 2 * math.atan(float(1 / PHI.interval().mid()) ** 3)
    assert (k - 1) * phi < math.pi / 2 <= k * phi + 1e-12


def test_return_index_matches_simulated_sign_flip():
    for b, N in [(10, 1), (2, 3), (3, 2)]:
        s = spec(b, N)
        tr = dyn.simulate(s)
        k = geo.return_index(mpq(b), N)
        ret = geo.return_event(tr)
        assert ret.index == 2 * k - 1  # k-th ball-ball collision


def test_ellipse_wall_events_exact():
    for b, N in [(2, 2), (2, 3), (10, 1)]:
        tr = dyn.simulate(spec(b, N))
        assert geo.ellipse_residual(tr, CollisionKind.BALL_WALL) == 0
        assert geo.ellipse_residual(tr, CollisionKind.BALL_BALL) > 0


def test_ellipse_initial_state_offset():
    # the pre-collision state (X0 = 2 x0) misses the ellipse by b^-2N / 4
    s = spec(2, 2)
    bN = s.b_pow_N()
    resid = (1 / bN ** 2) * (s.x0 / s.X0) ** 2 + (s.V0 / s.V0) ** 2 - 1
    assert resid == mpq(1, 64)  # b^-2N / 4


def test_hyperbola_residuals_exact_in_rational_mode():
    for b, N in [(2, 3), (10, 2), (3, 2)]:
        tr = dyn.simulate(spec(b, N))
        bw, bb = geo.hyperbola_residual(tr)
        assert bw == 0
        assert bb == 0


def test_bb_semi_axis_factor_equal_masses():
    import math

    s = spec(2, 0)
    M, m = s.masses()
    assert math.sqrt(float(M / (M + m))) == pytest.approx(math.sqrt(0.5))


def test_parabola_residual_decreases_with_mantissa():
    residuals = [geo.parabola_residual(dyn.simulate(spec(2, N))) for N in (2, 3, 4)]
    assert residuals[0] > residuals[1] > residuals[2]
    assert residuals[0] < 0.10  # visible match on the stated window


def test_parabola_at_return_point():
    tr = dyn.simulate(spec(2, 3))
    ret = geo.return_event(tr)
    x_min_pred = 1.0 / 8.0
    assert abs(float(ret.state_after.X)) / x_min_pred == pytest.approx(1.0, rel=0.06)


def test_geometry_report_wall_exactness():
    rep = geo.geometry_report(dyn.simulate(spec(2, 3)))
    assert rep.wall_relations_exact
    assert rep.parabola_residual is not None


def test_interval_mode_residuals_small():
    # residual upper bounds shrink with the working width, far below any
    # genuine deviation (the BB ellipse residual is ~1e-1 for comparison)
    with working_precision(128):
        tr = dyn.simulate(BilliardSpec(base=PHI, mantissa=3))
        bw, bb = geo.hyperbola_residual(tr)
        assert float(bw) < 1e-12 and float(bb) < 1e-12
        assert float(geo.ellipse_residual(tr, CollisionKind.BALL_WALL)) < 1e-12
        assert float(geo.ellipse_residual(tr, CollisionKind.BALL_BALL)) > 1e-3
