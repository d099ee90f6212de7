"""Conservation-law audits: energy, action invariants, angular momentum,
and the dihedral constants of motion at superintegrable mass ratios.

The two action invariants are per-kind constants of the collision map:
``X*v`` is unchanged between consecutive wall events and ``X*(V - v)``
between consecutive ball-ball events, and both equal ``|x0| V0`` (times the
light mass over pi, in action units) for standard initial conditions.  The
squared angular momentum ``m M (X v - x V)^2`` is constant across every
event.  All of these vanish-drift statements are exact in rational mode;
in interval mode a drift is flagged only when two enclosures are disjoint.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

from gmpy2 import mpq

from .model import BilliardSpec, CollisionKind, KinematicState, Trajectory
from .numeric import (
    Constant,
    Interval,
    is_exact,
    lift,
    pi_interval,
    tan_interval,
    working_precision,
)


class ActionSource(enum.Enum):
    FROM_INITIAL = "initial"
    FROM_BW_EVENT = "ball_wall_event"
    FROM_BB_EVENT = "ball_ball_event"


@dataclass(frozen=True)
class ActionValue:
    """The adiabatic action of the light ball's bounce cycle.

    ``scaled`` holds pi I / m (= X*v at wall events, X*(V-v) at contact
    events, |x0| V0 from the initial data), which is exact in rational mode;
    the action itself, I = m * scaled / pi, is irrational and is produced on
    demand as a certified interval.
    """

    scaled: object
    source: ActionSource

    def action(self, m) -> Interval:
        return lift(self.scaled) * lift(m) / pi_interval()

    @staticmethod
    def from_initial(spec: BilliardSpec) -> "ActionValue":
        return ActionValue(scaled=action_from_initial(spec), source=ActionSource.FROM_INITIAL)

    @staticmethod
    def from_event(event) -> "ActionValue":
        if event.kind is CollisionKind.BALL_WALL:
            return ActionValue(scaled=action_bw(event), source=ActionSource.FROM_BW_EVENT)
        return ActionValue(scaled=action_bb(event), source=ActionSource.FROM_BB_EVENT)


def action_bw(event) -> object:
    """X*v at a ball-wall event; constant over all wall events of a run."""
    if event.kind is not CollisionKind.BALL_WALL:
        raise ValueError("action_bw needs a ball-wall event")
    st = event.state_after
    return st.X * st.v


def action_bb(event) -> object:
    """X*(V - v) at a ball-ball event; the companion per-kind constant."""
    if event.kind is not CollisionKind.BALL_BALL:
        raise ValueError("action_bb needs a ball-ball event")
    st = event.state_after
    return st.X * (st.V - st.v)


def action_from_initial(spec: BilliardSpec):
    """|x0| V0, the shared value of both per-kind constants (pi I / m)."""
    return abs(mpq(spec.x0)) * mpq(spec.V0) if is_exact(spec.x0) and is_exact(spec.V0) \
        else abs(lift(spec.x0)) * lift(spec.V0)


def angular_momentum_sq(state, M, m):
    """L^2 = m M (X v - x V)^2, invariant across the whole evolution."""
    cross = state.X * state.v - state.x * state.V
    return m * M * cross * cross


def superintegrable_mass_ratio(q: int):
    """m/M = tan^2(pi/q); exact rational for q in {3, 4, 6}."""
    if q < 3:
        raise ValueError("superintegrable family starts at q = 3")
    if q == 3:
        return mpq(3)
    if q == 4:
        return mpq(1)
    if q == 6:
        return mpq(1, 3)
    t = tan_interval(pi_interval() / q)
    return t * t


def _tan_sq_constant(q: int) -> Constant:
    def maker():
        t = tan_interval(pi_interval() / q)
        return t * t

    return Constant(f"tan2(pi/{q})", maker)


def superintegrable_spec(q: int, X0=mpq(-2), x0=mpq(-1), V0=mpq(1), v0=mpq(0)) -> BilliardSpec:
    """Billiard spec with m/M = tan^2(pi/q); rational mode when q in {3,4,6}."""
    ratio = superintegrable_mass_ratio(q)
    light = ratio if is_exact(ratio) else _tan_sq_constant(q)
    return BilliardSpec(mass_heavy=mpq(1), mass_light=light, X0=X0, x0=x0, V0=V0, v0=v0)


def chevalley_J(q: int, V, v, tan_sq=None):
    """First nontrivial invariant polynomial of the dihedral group I2(q),
    evaluated on the velocities:

        J = (1/2) ((V + i tan(pi/q) v)^q + (V - i tan(pi/q) v)^q)
          = sum_i (-1)^i C(q, 2i) tan^(2i)(pi/q) V^(q-2i) v^(2i)

    Only even powers of tan appear, so J is exact whenever tan^2(pi/q) is
    rational (q in {3, 4, 6}).  Conserved across both collision types when
    the mass ratio is the matching superintegrable one.
    """
    if q < 3:
        raise ValueError("q must be at least 3")
    if tan_sq is None:
        tan_sq = superintegrable_mass_ratio(q)
    total = 0
    v_sq = v * v
    for i in range(q // 2 + 1):
        coeff = math.comb(q, 2 * i)
        term = coeff * V ** (q - 2 * i) * v_sq ** i * tan_sq ** i
        total = total + term if i % 2 == 0 else total - term
    return total


def outgoing_map(q: int, V_in, v_in):
    """Final velocities of a superintegrable scattering event.

    Even q simply inverts the incident pair.  Odd q mixes them:
    V_out = -cos(pi/q) V_in - tan(pi/q) sin(pi/q) v_in,
    v_out = -cos(pi/q) (V_in - v_in).  Requires V_in > v_in > 0.
    """
    if q < 3:
        raise ValueError("q must be at least 3")
    if not (V_in > v_in and v_in > 0):
        raise ValueError("incident state must satisfy V_in > v_in > 0")
    if q % 2 == 0:
        return -V_in, -v_in
    if q == 3:
        cos_q = mpq(1, 2)
        tan_sin = mpq(3, 2)  # tan(pi/3) sin(pi/3) = sqrt(3) * sqrt(3)/2
    else:
        from .numeric import _directed, current_precision

        d, u = _directed(current_precision())
        angle = pi_interval() / q
        # on (0, pi/3]: cos decreasing, sin increasing
        cos_q = Interval(d.cos(angle.hi), u.cos(angle.lo))
        sin_q = Interval(d.sin(angle.lo), u.sin(angle.hi))
        tan_sin = tan_interval(angle) * sin_q
        V_in, v_in = lift(V_in), lift(v_in)
    return -cos_q * V_in - tan_sin * v_in, -cos_q * (V_in - v_in)


# -- whole-trajectory audit -------------------------------------------------


@dataclass
class InvariantReport:
    energy: list = field(default_factory=list)
    momentum_bb_jumps: list = field(default_factory=list)
    action_bw_values: list = field(default_factory=list)
    action_bb_values: list = field(default_factory=list)
    l_squared: list = field(default_factory=list)
    j_values: Optional[list] = None
    pseudo_average_position: list = field(default_factory=list)
    max_drift: dict = field(default_factory=dict)

    @property
    def exact_invariants_hold(self) -> bool:
        return all(_is_zero(v) for v in self.max_drift.values())


def _gap(a, b):
    """Distance between two values; zero when enclosures overlap."""
    if isinstance(a, Interval) or isinstance(b, Interval):
        a, b = lift(a), lift(b)
        if a.lo > b.hi:
            return a.lo - b.hi
        if b.lo > a.hi:
            return b.lo - a.hi
        return mpq(0)
    return abs(a - b)


def _is_zero(x) -> bool:
    if isinstance(x, Interval):
        return x.lo <= 0 <= x.hi
    return x == 0


def _max_gap(values):
    if len(values) < 2:
        return mpq(0)
    first = values[0]
    worst = mpq(0)
    for v in values[1:]:
        g = _gap(first, v)
        if g > worst:
            worst = g
    return worst


def audit_trajectory(traj: Trajectory, q: Optional[int] = None) -> InvariantReport:
    """Evaluate every conserved (and one deliberately non-conserved)
    quantity over a trajectory and report the worst drifts."""
    spec = traj.spec
    M, m = spec.masses()
    report = InvariantReport()
    X0, x0, V0, v0 = spec.initial_conditions()
    initial = KinematicState(t=0, X=X0, x=x0, V=V0, v=v0, n=0)
    tan_sq = None
    if q is not None:
        tan_sq = superintegrable_mass_ratio(q)
        report.j_values = []
        report.j_values.append(chevalley_J(q, V0, v0, tan_sq))
    report.energy.append(initial.kinetic_energy(M, m))
    report.l_squared.append(angular_momentum_sq(initial, M, m))
    prev_momentum = initial.momentum(M, m)
    for event in traj.events:
        st = event.state_after
        report.energy.append(st.kinetic_energy(M, m))
        report.l_squared.append(angular_momentum_sq(st, M, m))
        momentum = st.momentum(M, m)
        if event.kind is CollisionKind.BALL_BALL:
            report.momentum_bb_jumps.append(_gap(momentum, prev_momentum))
            report.action_bb_values.append(action_bb(event))
        else:
            report.action_bw_values.append(action_bw(event))
        prev_momentum = momentum
        if report.j_values is not None:
            report.j_values.append(chevalley_J(q, st.V, st.v, tan_sq))
    # negative control: mid-point of neighbouring contact positions times v
    bb_positions = [e.state_after.X for e in traj.events if e.kind is CollisionKind.BALL_BALL]
    bw = traj.bw_events()
    for i, event in enumerate(bw):
        if i + 1 < len(bb_positions):
            avg = (bb_positions[i] + bb_positions[i + 1]) / 2
            report.pseudo_average_position.append(avg * event.state_after.v)
    report.max_drift = {
        "energy": _max_gap(report.energy),
        "momentum_bb": max(report.momentum_bb_jumps, default=mpq(0)),
        "action_bw": _max_gap(report.action_bw_values),
        "action_bb": _max_gap(report.action_bb_values),
        "l_squared": _max_gap(report.l_squared),
    }
    if report.j_values is not None:
        report.max_drift["chevalley_j"] = _max_gap(report.j_values)
    return report
