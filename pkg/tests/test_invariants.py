import pytest
from gmpy2 import mpq

from galperin.model import BilliardSpec, CollisionKind
from galperin import dynamics as dyn
from galperin import invariants as inv
from galperin.numeric import working_precision


def spec(b, N, **kw):
    return BilliardSpec(base=mpq(b), mantissa=N, **kw)


def test_action_bw_constant_and_equal_to_initial():
    s = spec(10, 1)
    tr = dyn.simulate(s)
    expected = abs(s.x0) * s.V0
    values = [inv.action_bw(e) for e in tr.bw_events()]
    assert all(v == expected for v in values)
    first_bw = tr.bw_events()[0]
    assert first_bw.index == 2 and inv.action_bw(first_bw) == expected
    st = first_bw.state_after
    assert st.X < 0 and st.v < 0 and st.X * st.v > 0


def test_action_value_type():
    import math

    s = spec(10, 1)
    tr = dyn.simulate(s)
    initial = inv.ActionValue.from_initial(s)
    assert initial.scaled == 1 and initial.source is inv.ActionSource.FROM_INITIAL
    bw = inv.ActionValue.from_event(tr.bw_events()[0])
    bb = inv.ActionValue.from_event(tr.bb_events()[0])
    assert bw.scaled == bb.scaled == initial.scaled
    assert bw.source is inv.ActionSource.FROM_BW_EVENT
    with working_precision(96):
        _, m = s.masses()
        act = initial.action(m)
        assert float(act.mid()) == pytest.approx(1.0 / math.pi)


def test_action_bb_constant_and_matches_bw():
    s = spec(3, 2)
    tr = dyn.simulate(s)
    bb_values = [inv.action_bb(e) for e in tr.bb_events()]
    assert len(set(map(str, bb_values))) == 1
    assert bb_values[0] == inv.action_bw(tr.bw_events()[0])


def test_action_requires_matching_kind():
    tr = dyn.simulate(spec(2, 1))
    with pytest.raises(ValueError):
        inv.action_bw(tr.bb_events()[0])
    with pytest.raises(ValueError):
        inv.action_bb(tr.bw_events()[0])


def test_angular_momentum_sq_constant():
    s = spec(2, 3)
    M, m = s.masses()
    tr = dyn.simulate(s)
    from galperin.model import KinematicState

    start = KinematicState(t=0, X=s.X0, x=s.x0, V=s.V0, v=s.v0, n=0)
    L2 = inv.angular_momentum_sq(start, M, m)
    assert L2 == m * M * s.x0 ** 2 * s.V0 ** 2
    for e in tr.events:
        assert inv.angular_momentum_sq(e.state_after, M, m) == L2
    # at wall events, L^2 / b^2N equals (m * action)^2 with action = |x0| V0
    bN = s.b_pow_N()
    action = inv.action_bw(tr.bw_events()[0])
    assert L2 / bN ** 2 == (m * action) ** 2


def test_superintegrable_mass_ratios():
    assert inv.superintegrable_mass_ratio(3) == 3
    assert inv.superintegrable_mass_ratio(4) == 1
    assert inv.superintegrable_mass_ratio(6) == mpq(1, 3)
    with working_precision(96):
        r5 = inv.superintegrable_mass_ratio(5)
        import math

        assert float(r5.mid()) == pytest.approx(math.tan(math.pi / 5) ** 2)
        # 5 - 2 sqrt(5)
        assert float(r5.mid()) == pytest.approx(5 - 2 * math.sqrt(5))
    with pytest.raises(ValueError):
        inv.superintegrable_mass_ratio(2)


def test_chevalley_polynomials():
    assert inv.chevalley_J(4, mpq(1), mpq(0)) == 1
    assert inv.chevalley_J(4, mpq(1), mpq(1)) == 1 - 6 + 1
    # q=6 polynomial V^6 - 5 V^4 v^2 + 5/3 V^2 v^4 - 1/27 v^6 at (1, 1)
    assert inv.chevalley_J(6, mpq(1), mpq(1)) == 1 - 5 + mpq(5, 3) - mpq(1, 27)
    assert inv.chevalley_J(6, mpq(1), mpq(1)) == mpq(-64, 27)
    assert inv.chevalley_J(3, mpq(2), mpq(1)) == 2 ** 3 - 9 * 2


@pytest.mark.parametrize("q", [3, 4, 6])
def test_j_conserved_exactly(q):
    s = inv.superintegrable_spec(q, X0=mpq(-2), x0=mpq(-1), V0=mpq(4), v0=mpq(1))
    tr = dyn.simulate(s)
    rep = inv.audit_trajectory(tr, q=q)
    assert rep.max_drift["chevalley_j"] == 0
    assert rep.exact_invariants_hold


def test_j_conserved_interval_q5():
    with working_precision(128):
        s = inv.superintegrable_spec(5, X0=mpq(-2), x0=mpq(-1), V0=mpq(4), v0=mpq(1))
        tr = dyn.simulate(s)
        rep = inv.audit_trajectory(tr, q=5)
        assert rep.exact_invariants_hold  # enclosures overlap throughout


def test_outgoing_map_even_inversion():
    assert inv.outgoing_map(4, mpq(2), mpq(1)) == (-2, -1)
    assert inv.outgoing_map(6, mpq(5), mpq(3)) == (-5, -3)


def test_outgoing_map_requires_incident_ordering():
    with pytest.raises(ValueError):
        inv.outgoing_map(4, mpq(1), mpq(2))
    with pytest.raises(ValueError):
        inv.outgoing_map(4, mpq(1), mpq(0))


def test_outgoing_map_odd_galilean_cannon():
    V, v = inv.outgoing_map(3, mpq(1), mpq(1) - mpq(1, 10 ** 12))
    assert abs(v) < mpq(1, 10 ** 11)
    # the odd map conserves energy with the q=3 masses M=1, m=3
    V_in, v_in = mpq(2), mpq(1)
    V_out, v_out = inv.outgoing_map(3, V_in, v_in)
    assert V_out == mpq(-5, 2) and v_out == mpq(-1, 2)
    assert V_in ** 2 + 3 * v_in ** 2 == V_out ** 2 + 3 * v_out ** 2
    assert inv.chevalley_J(3, V_in, v_in) == inv.chevalley_J(3, V_out, v_out)


@pytest.mark.parametrize("q", [3, 4, 6])
def test_outgoing_map_matches_simulation_both_orderings(q):
    V_in, v_in = mpq(4), mpq(1)
    expected = inv.outgoing_map(q, V_in, v_in)
    firsts = set()
    for X0, x0 in [(mpq(-2), mpq(-1)), (mpq(-2), mpq(-1, 4))]:
        s = inv.superintegrable_spec(q, X0=X0, x0=x0, V0=V_in, v0=v_in)
        tr = dyn.simulate(s)
        firsts.add(tr.events[0].kind)
        assert (tr.final_state.V, tr.final_state.v) == expected
    assert firsts == {CollisionKind.BALL_BALL, CollisionKind.BALL_WALL}


def test_generic_ratio_depends_on_collision_order():
    outcomes = set()
    for x0 in (mpq(-1), mpq(-1, 4)):
        s = BilliardSpec(mass_heavy=mpq(7, 2), mass_light=mpq(1),
                         X0=mpq(-2), x0=x0, V0=mpq(4), v0=mpq(1))
        tr = dyn.simulate(s)
        outcomes.add((tr.final_state.V, tr.final_state.v))
    assert len(outcomes) == 2


def test_audit_rational_run_all_zero():
    for b, N in [(2, 3), (3, 2), (10, 1)]:
        tr = dyn.simulate(spec(b, N))
        rep = inv.audit_trajectory(tr)
        assert rep.exact_invariants_hold
        assert all(v == 0 for v in rep.max_drift.values())


def test_pseudo_invariant_is_not_conserved():
    tr = dyn.simulate(spec(10, 1))
    rep = inv.audit_trajectory(tr)
    assert len(rep.pseudo_average_position) > 3
    assert len({str(v) for v in rep.pseudo_average_position}) > 1
