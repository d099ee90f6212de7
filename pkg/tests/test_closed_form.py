import pytest
from gmpy2 import mpq

from galperin.model import BilliardSpec, CollisionKind, FieldMode
from galperin import closed_form as cf
from galperin import dynamics as dyn
from galperin.numeric import (
    E,
    PHI,
    PI,
    Interval,
    PrecisionExhausted,
    working_precision,
)


def spec(b, N, **kw):
    return BilliardSpec(base=mpq(b), mantissa=N, **kw)


# -- counts ------------------------------------------------------------------


@pytest.mark.parametrize("b,N,expected", [
    (10, 1, 31), (10, 2, 314), (10, 6, 3141592),
    (2, 3, 25), (2, 5, 100), (3, 4, 254), (5, 2, 78),
])
def test_count_exact_integer_bases(b, N, expected):
    assert cf.count_collisions_exact(mpq(b), N) == expected


def test_count_exact_named_bases():
    assert cf.count_collisions_exact(PI, 2) == 31
    assert cf.count_collisions_exact(PHI, 4) == 21
    assert cf.count_collisions_exact(E, 3) == 63


@pytest.mark.parametrize("b,N,expected", [(10, 2, 314), (2, 5, 100)])
def test_count_approx(b, N, expected):
    assert cf.count_collisions_approx(mpq(b), N) == expected


def test_exact_vs_approx_off_by_one_for_base_pi():
    assert cf.count_collisions_exact(PI, 1) == 10
    assert cf.count_collisions_approx(PI, 1) == 9


def test_count_matches_simulation():
    for b, N in [(5, 2), (7, 1), (6, 1)]:
        assert cf.count_collisions_exact(mpq(b), N) == dyn.simulate(spec(b, N)).n_collisions


def test_degeneracy_at_unit_ratio():
    with pytest.raises(cf.SubmultipleDegeneracy) as err:
        cf.count_collisions_exact(mpq(10), 0)
    assert err.value.formula_count == 4
    assert err.value.certified


def test_collision_count_epsilon():
    cc = cf.collision_count(mpq(6), 1)
    assert (cc.exact, cc.approx, cc.epsilon) == (19, 18, 1)


def test_large_mantissa_count_is_fast_and_certified():
    import time

    t0 = time.perf_counter()
    count = cf.count_collisions_exact(mpq(10), 100)
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    # independent high-precision cross-check with mpmath
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 130
    expected = int(mpmath.floor(mpmath.pi / mpmath.atan(mpmath.mpf(10) ** -100)))
    assert count == expected


# -- pivot angle and phases ---------------------------------------------------


def test_pivot_angle_bounds():
    import math

    with working_precision(96):
        pivot = cf.PivotAngle.of(mpq(10), 1)
        assert float(pivot.varphi.mid()) == pytest.approx(math.atan(0.1))
        assert float(pivot.phi.mid()) == pytest.approx(2 * math.atan(0.1))


def test_phase_angle_examples():
    import math

    with working_precision(96):
        assert cf.phase_angle(0, mpq(2), 1).sign() == 0
        phi1 = cf.phase_angle(1, mpq(2), 1)
        assert float(phi1.mid()) == pytest.approx(2 * math.atan(0.5))
        phi4 = cf.phase_angle(4, mpq(2), 1)
        assert float(phi4.mid()) == pytest.approx(-4 * math.atan(0.5))
        phi2k = cf.phase_angle(6, mpq(3), 1)
        assert float(phi2k.mid()) == pytest.approx(-6 * math.atan(1 / 3))


# -- explicit states and times -------------------------------------------------


@pytest.mark.parametrize("b,N", [(2, 2), (3, 1), (5, 1), (10, 1)])
def test_state_at_equals_simulation(b, N):
    s = spec(b, N)
    tr = dyn.simulate(s)
    for e in tr.events:
        st = cf.state_at(e.index, s)
        g = e.state_after
        assert (st.X, st.x, st.V, st.v) == (g.X, g.x, g.V, g.v)


def test_state_at_interval_mode_encloses_exact():
    s = spec(2, 2)
    exact = cf.state_at(7, s)
    with working_precision(128):
        iv = cf.state_at(7, BilliardSpec(base=mpq(2), mantissa=2, field_mode=FieldMode.INTERVAL))
        for name in ("X", "x", "V", "v"):
            enc, val = getattr(iv, name), getattr(exact, name)
            if isinstance(enc, Interval):
                assert enc.lo <= val <= enc.hi
            else:
                assert enc == val


def test_wall_positions_are_zero():
    s = spec(3, 1)
    for n in (2, 4, 6, 8):
        assert cf.state_at(n, s).x == 0


def test_heavy_velocity_sign_flips_once():
    s = spec(10, 1)
    signs = [cf.state_at(n, s).V > 0 for n in range(1, 32)]
    flips = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    assert flips == 1
    from galperin.geometry import return_index

    k_inv = return_index(mpq(10), 1)
    assert signs[2 * k_inv - 2] is False  # event 2k-1 is the first with V <= 0


def test_time_of_matches_simulation():
    s = spec(3, 1)
    tr = dyn.simulate(s)
    assert cf.time_of(1, s) == (s.x0 - s.X0) / s.V0
    for e in tr.events:
        assert cf.time_of(e.index, s) == e.state_after.t
    times = cf.times_exact(s)
    assert times == [e.state_after.t for e in tr.events]
    assert all(b > a for a, b in zip(times, times[1:]))


def test_time_of_out_of_range():
    with pytest.raises(ValueError):
        cf.time_of(0, spec(2, 1))
    with pytest.raises(ValueError):
        cf.time_of(100, spec(2, 1))


def test_iter_states_matches_state_at_random_access():
    s = spec(5, 2)
    scale = cf.rational_pivot(s).scale
    for ev in cf.iter_states_exact(s):
        if ev.index % 7 == 0 or ev.index < 3:
            st = cf.state_at(ev.index, s)
            assert ev.to_state(scale, 1).X == st.X
            assert ev.to_state(scale, 1).V == st.V


# -- asymptotic laws -----------------------------------------------------------


def test_approx_inverse_tau():
    from galperin.geometry import return_index

    s = spec(10, 2)
    assert cf.approx_inverse_tau(0, s) == 0
    # mid-range accuracy below 5 percent against the exact flight times
    tr = dyn.simulate(s)
    n_mid = tr.n_collisions // 2
    tau_exact = float(tr.events[n_mid].dt_since_previous)
    approx = cf.approx_inverse_tau(n_mid, s)
    assert abs(approx * tau_exact - 1) < 0.05
    # near the return point the inverse flight time approaches b^2N / t0
    k_ret = 2 * return_index(mpq(10), 2)
    peak = cf.approx_inverse_tau(k_ret, s)
    assert peak == pytest.approx(float(mpq(10) ** 4), rel=0.01)


def test_approx_time_after_return():
    import math

    s = spec(10, 1)
    t0 = float(abs(s.x0 / s.V0))
    assert cf.approx_time_after_return(0, s) == pytest.approx(t0)
    assert cf.approx_time_after_return(5, s) > t0
    assert cf.approx_time_after_return(-5, s) < t0
    # inverting the law maps each exact collision time to within one
    # collision of the staircase (time measured from the first collision)
    tr = dyn.simulate(s)
    from galperin.geometry import return_event

    ret = return_event(tr)
    t1 = float(tr.events[0].state_after.t)
    bN = 10.0
    for e in tr.events[1:-1]:
        t_rel = float(e.state_after.t) - t1
        n_pred = ret.index + bN * math.atan(bN * (t_rel / t0 - 1.0))
        assert abs(n_pred - e.index) <= 1.0


def test_terminal_parity():
    assert cf.terminal_parity(mpq(10), 1) is CollisionKind.BALL_BALL  # 31 odd
    assert cf.terminal_parity(mpq(2), 2) is CollisionKind.BALL_WALL   # 12 even
    for b, N in [(2, 3), (3, 2), (5, 1)]:
        tr = dyn.simulate(spec(b, N))
        assert cf.terminal_parity(mpq(b), N) is tr.events[-1].kind
