"""Event-driven simulation of the heavy-ball / light-ball / wall system.

The collision sequence is fully determined by velocity sign tests: after a
ball-ball collision the separation velocity is the negated approach velocity,
so the balls cannot touch again before the light one visits the wall, and
after a wall bounce the only candidates are a ball-ball collision or escape.
Positions therefore never influence *which* event comes next (they only set
*when*), which is what makes the reduced fast paths below sound.

Three execution strategies share the same physics:

* :func:`simulate` -- readable, field-generic loop producing a full
  :class:`Trajectory` (exact rationals or certified intervals).
* :func:`count_collisions_simulated` -- velocity-only loop for large runs;
  exact integers when the mass ratio is rational and the run is small enough,
  certified directed-rounding endpoints otherwise.
* :func:`iter_events_exact` -- exact per-event states for standard runs
  (v0 = 0) in a factored integer representation that sidesteps big-gcd
  normalisation; used to cross-check the closed form event by event.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import gmpy2
from gmpy2 import mpq, mpz

from .model import (
    BilliardSpec,
    CollisionEvent,
    CollisionKind,
    FieldMode,
    KinematicState,
    Termination,
    Trajectory,
)
from .numeric import (
    AmbiguousPrecision,
    Interval,
    atan_interval,
    ceil_mpfr,
    exact_sqrt,
    lift,
    pi_interval,
    sign,
    with_escalation,
    working_precision,
)


class NoFurtherCollision(Exception):
    """Raised by :func:`next_collision` when the state is terminal."""

    def __init__(self, termination: Termination):
        super().__init__(termination.value)
        self.termination = termination


def collide_ball_ball(state: KinematicState, M, m) -> KinematicState:
    """Elastic ball-ball collision; positions and time unchanged.

    V' = ((M-m)V + 2mv)/(M+m),  v' = (2MV + (m-M)v)/(M+m).
    """
    if not _at_same_position(state):
        raise ValueError("ball-ball collision requires X == x")
    total = M + m
    V_new = ((M - m) * state.V + 2 * m * state.v) / total
    v_new = (2 * M * state.V + (m - M) * state.v) / total
    return KinematicState(t=state.t, X=state.X, x=state.x, V=V_new, v=v_new, n=state.n + 1)


def collide_ball_wall(state: KinematicState) -> KinematicState:
    """Wall bounce of the light ball: v -> -v, everything else unchanged."""
    if sign(state.x) != 0:
        raise ValueError("ball-wall collision requires x == 0")
    if not state.v > 0:
        raise ValueError("ball-wall collision requires v > 0")
    return KinematicState(t=state.t, X=state.X, x=state.x, V=state.V, v=-state.v, n=state.n + 1)


def _at_same_position(state) -> bool:
    if isinstance(state.X, Interval) or isinstance(state.x, Interval):
        # positions are snapped to the same object at contact instants
        diff = state.x - state.X
        return diff.lo <= 0 <= diff.hi
    return state.X == state.x


def next_collision(state: KinematicState):
    """Kind and flight time of the next collision from ``state``.

    Raises :class:`NoFurtherCollision` with OUTGOING when v <= 0 and V <= v,
    or DEGENERATE_STOP when v == 0 with V <= 0.
    """
    s_v = sign(state.v)
    if s_v > 0:
        dt_bw = -state.x / state.v
        if state.V > state.v:
            dt_bb = (state.x - state.X) / (state.V - state.v)
            if dt_bb < dt_bw:
                return CollisionKind.BALL_BALL, dt_bb
        return CollisionKind.BALL_WALL, dt_bw
    if state.V > state.v:
        return CollisionKind.BALL_BALL, (state.x - state.X) / (state.V - state.v)
    if s_v == 0:
        raise NoFurtherCollision(Termination.DEGENERATE_STOP)
    raise NoFurtherCollision(Termination.OUTGOING)


def default_step_limit(spec: BilliardSpec) -> int:
    """10 ceil(pi b^N) + 10; the true count is below pi/arctan(b^-N) + 1."""
    with working_precision(max(64, spec.suggested_precision())):
        hi = (pi_interval() * lift(spec.b_pow_N())).hi
    return 10 * ceil_mpfr(hi) + 10


def simulate(
    spec: BilliardSpec,
    step_limit: Optional[int] = None,
    keep_events: bool = True,
    on_event: Optional[Callable[[CollisionEvent], None]] = None,
    track_time: bool = True,
    rod_radii=(0, 0),
) -> Trajectory:
    """Run the event-driven simulation until no further collision is possible.

    In rational mode every state is exact.  In interval mode every sign test
    is certified; an undecidable test restarts the whole run at doubled
    precision.  ``rod_radii=(R, r)`` simulates finite-size balls: contact at
    separation R + r and wall contact at x = -r.
    """
    if step_limit is None:
        step_limit = default_step_limit(spec)
    mode = spec.resolved_field()
    if mode is FieldMode.RATIONAL:
        return _simulate_once(spec, step_limit, keep_events, on_event, track_time, rod_radii, rational=True)
    return with_escalation(
        lambda: _simulate_once(spec, step_limit, keep_events, on_event, track_time, rod_radii, rational=False),
        start_bits=spec.suggested_precision(),
        cap_bits=spec.precision_cap_bits,
    )


def _simulate_once(spec, step_limit, keep_events, on_event, track_time, rod_radii, rational):
    M, m = spec.masses()
    X, x, V, v = spec.initial_conditions()
    R, r = rod_radii
    if rational:
        zero = mpq(0)
        R, r = mpq(R), mpq(r)
    else:
        zero = Interval.exact(0)
        R, r = lift(R), lift(r)
    gap = R + r
    wall = -r
    if rational and not (X < x - gap and x < wall):
        raise ValueError("initial rod configuration overlaps or touches")
    t = zero if track_time else None
    traj = Trajectory(spec=spec)
    if not rational:
        from .numeric import current_precision

        traj.precision_bits = current_precision()
    events = traj.events
    n = 0
    while True:
        if n >= step_limit:
            traj.termination = Termination.STEP_LIMIT
            break
        # classify the next event from velocity signs; positions only set dt
        s_v = sign(v)
        kind = None
        if s_v > 0:
            dt_bw = (wall - x) / v
            if V > v:
                dt_bb = ((x - X) - gap) / (V - v)
                if dt_bb == dt_bw:
                    raise ValueError(
                        "simultaneous ball-ball and wall contact (triple collision)"
                    )
                if dt_bb < dt_bw:
                    kind, dt = CollisionKind.BALL_BALL, dt_bb
            if kind is None:
                kind, dt = CollisionKind.BALL_WALL, dt_bw
        elif V > v:
            kind, dt = CollisionKind.BALL_BALL, ((x - X) - gap) / (V - v)
        else:
            traj.termination = (
                Termination.DEGENERATE_STOP if s_v == 0 else Termination.OUTGOING
            )
            break
        X = X + V * dt
        if kind is CollisionKind.BALL_BALL:
            x = X + gap  # exact contact snap
            total = M + m
            V, v = ((M - m) * V + 2 * m * v) / total, (2 * M * V + (m - M) * v) / total
        else:
            x = wall
            v = -v
        if track_time:
            t = t + dt
        n += 1
        state = KinematicState(t=t, X=X, x=x, V=V, v=v, n=n)
        if keep_events or on_event is not None:
            ev = CollisionEvent(index=n, kind=kind, state_after=state, dt_since_previous=dt)
            if keep_events:
                events.append(ev)
            if on_event is not None:
                on_event(ev)
    traj.n_collisions = n
    traj.final_state = KinematicState(t=t, X=X, x=x, V=V, v=v, n=n)
    return traj


# -- reduced fast paths --------------------------------------------------


EXACT_COUNT_EVENT_LIMIT = 120_000


def count_collisions_simulated(spec: BilliardSpec, step_limit: Optional[int] = None):
    """Collision count by direct simulation, skipping position bookkeeping.

    Returns ``(count, termination)``.  Exact integer arithmetic is used for
    rational mass ratios up to ~1e5 events; larger or irrational runs use
    certified interval endpoints (any undecidable sign test escalates).
    """
    try:
        if sign(spec.v0) > 0:
            raise ValueError("velocity-only counting needs v0 <= 0; use simulate()")
    except AmbiguousPrecision:
        pass
    if step_limit is None:
        step_limit = default_step_limit(spec)
    if spec.resolved_field() is FieldMode.RATIONAL and step_limit <= EXACT_COUNT_EVENT_LIMIT * 10:
        est = step_limit // 10
        if est <= EXACT_COUNT_EVENT_LIMIT:
            return _count_exact(spec, step_limit)
    return with_escalation(
        lambda: _count_interval(spec, step_limit),
        start_bits=spec.suggested_precision(),
        cap_bits=spec.precision_cap_bits,
    )


def _count_exact(spec, step_limit):
    M, m = spec.masses()
    Mn, mn = _reduced_mass_pair(M, m)
    k1, k2, k3, k4 = Mn - mn, 2 * mn, 2 * Mn, mn - Mn
    V0, v0 = mpq(spec.V0), mpq(spec.v0)
    A, B = mpz(V0.numerator * v0.denominator), mpz(v0.numerator * V0.denominator)
    n = 0
    while n < step_limit:
        if B > 0:
            B = -B
        elif A > B:
            A, B = k1 * A + k2 * B, k3 * A + k4 * B
        else:
            return n, (Termination.DEGENERATE_STOP if B == 0 else Termination.OUTGOING)
        n += 1
    return n, Termination.STEP_LIMIT


def _count_interval(spec, step_limit):
    from .numeric import _directed, current_precision

    prec = current_precision()
    d, u = _directed(prec)
    M, m = spec.masses()
    M, m = lift(M), lift(m)
    total = M + m
    c1 = (M - m) / total
    c2 = (2 * m) / total
    c3 = (2 * M) / total
    c4 = (m - M) / total
    V = lift(spec.V0)
    v = lift(spec.v0)
    c1l, c1h, c2l, c2h = c1.lo, c1.hi, c2.lo, c2.hi
    c3l, c3h, c4l, c4h = c3.lo, c3.hi, c4.lo, c4.hi
    if not (c1l >= 0 and c2l >= 0 and c3l >= 0 and c4h <= 0):
        # heavier light ball (superintegrable q=3): fall back to generic ops
        return _count_interval_generic(spec, step_limit, c1, c2, c3, c4, V, v)
    Vlo, Vhi, vlo, vhi = V.lo, V.hi, v.lo, v.hi
    n = 0
    while n < step_limit:
        if vlo > 0:
            vlo, vhi = d.minus(vhi), u.minus(vlo)
        elif vhi < 0 or (vlo == 0 and vhi == 0):
            if Vhi < vlo or (vlo == 0 and vhi == 0 and Vhi <= 0):
                term = Termination.DEGENERATE_STOP if vlo == 0 and vhi == 0 else Termination.OUTGOING
                return n, term
            if not Vlo > vhi:
                raise AmbiguousPrecision(f"V vs v undecidable at event {n}")
            # V' = c1 V + c2 v, v' = c3 V + c4 v with sign-split products
            if Vlo >= 0:
                t1l, t1h = d.mul(c1l, Vlo), u.mul(c1h, Vhi)
                t3l, t3h = d.mul(c3l, Vlo), u.mul(c3h, Vhi)
            elif Vhi <= 0:
                t1l, t1h = d.mul(c1h, Vlo), u.mul(c1l, Vhi)
                t3l, t3h = d.mul(c3h, Vlo), u.mul(c3l, Vhi)
            else:
                t1l, t1h = d.mul(c1h, Vlo), u.mul(c1h, Vhi)
                t3l, t3h = d.mul(c3h, Vlo), u.mul(c3h, Vhi)
            t2l, t2h = d.mul(c2h, vlo), u.mul(c2l, vhi)
            t4l, t4h = d.mul(c4h, vlo), u.mul(c4l, vhi)
            Vlo, Vhi = d.add(t1l, t2l), u.add(t1h, t2h)
            vlo, vhi = d.add(t3l, t4l), u.add(t3h, t4h)
        else:
            raise AmbiguousPrecision(f"sign of v undecidable at event {n}")
        n += 1
    return n, Termination.STEP_LIMIT


def _count_interval_generic(spec, step_limit, c1, c2, c3, c4, V, v):
    n = 0
    while n < step_limit:
        s_v = sign(v)
        if s_v > 0:
            v = -v
        elif V > v:
            V, v = c1 * V + c2 * v, c3 * V + c4 * v
        else:
            return n, (Termination.DEGENERATE_STOP if s_v == 0 else Termination.OUTGOING)
        n += 1
    return n, Termination.STEP_LIMIT


# -- exact factored event stream ------------------------------------------


@dataclass(frozen=True)
class ExactEvent:
    """One collision of a standard run in factored integer form.

    With stream constants ``(s, vden, c)`` from :func:`exact_stream_constants`:
    velocities after the event are ``(A, B) / (vden * s**j)``; the heavy-ball
    position is ``pos_num * s**pos_pow / pos_den``; the flight time since the
    previous event is ``dt_num * s**dt_pow / (dt_den_a * dt_den_b)``.
    Keeping denominators factored avoids all large-gcd normalisation.
    """

    index: int
    kind: CollisionKind
    j: int
    A: mpz
    B: mpz
    pos_num: mpq
    pos_pow: int
    pos_den: mpz
    dt_num: mpq
    dt_pow: int
    dt_den_a: mpz
    dt_den_b: mpz

    def heavy_position(self, s) -> mpq:
        return self.pos_num * mpq(s) ** self.pos_pow / self.pos_den

    def light_position(self, s) -> mpq:
        return mpq(0) if self.kind is CollisionKind.BALL_WALL else self.heavy_position(s)

    def velocities(self, s, vden) -> tuple:
        d = vden * mpq(s) ** self.j
        return mpq(self.A) / d, mpq(self.B) / d

    def flight_time(self, s) -> mpq:
        return self.dt_num * mpq(s) ** self.dt_pow / (self.dt_den_a * self.dt_den_b)

    def to_state(self, s, vden, t=None) -> KinematicState:
        V, v = self.velocities(s, vden)
        X = self.heavy_position(s)
        return KinematicState(t=t, X=X, x=self.light_position(s), V=V, v=v, n=self.index)


def _reduced_mass_pair(M, m):
    Mn, mn = mpz(M.numerator * m.denominator), mpz(m.numerator * M.denominator)
    g = gmpy2.gcd(Mn, mn)
    return Mn // g, mn // g


def exact_stream_constants(spec: BilliardSpec):
    """(s, vden, c): denominator scale, velocity denominator, position constant."""
    M, m = spec.masses()
    Mn, mn = _reduced_mass_pair(M, m)
    V0 = mpq(spec.V0)
    return Mn + mn, mpz(V0.denominator), mpq(spec.x0) * V0.numerator


def iter_events_exact(spec: BilliardSpec, step_limit: Optional[int] = None) -> Iterator[ExactEvent]:
    """Exact event stream for standard runs (v0 = 0, rational mass ratio).

    Each flight update is simplified with one step of algebra before being
    stored: an elastic collision negates the approach velocity, i.e.
    ``(2M A + (m-M) B) - ((M-m) A + 2m B) = (M+m)(A - B)``, so every new
    position denominator is expressible through the velocity integers instead
    of an unreduced product of earlier factors.  Cross-checked bit-for-bit
    against :func:`simulate` in the tests.
    """
    if spec.resolved_field() is not FieldMode.RATIONAL:
        raise ValueError("exact event stream requires a rational mass ratio")
    if not mpq(spec.v0) == 0:
        raise ValueError("exact event stream assumes v0 = 0")
    if step_limit is None:
        step_limit = default_step_limit(spec)
    M, m = spec.masses()
    Mn, mn = _reduced_mass_pair(M, m)
    k1, k2, k3, k4 = Mn - mn, 2 * mn, 2 * Mn, mn - Mn
    X0, x0, V0 = mpq(spec.X0), mpq(spec.x0), mpq(spec.V0)
    V0n, vden = mpz(V0.numerator), mpz(V0.denominator)
    c = x0 * V0n  # X_n = c * s**pow / (velocity combination), negative

    # event 1: heavy ball reaches the resting light one; X_1 = x_1 = x0
    A, B, j = k1 * V0n, k3 * V0n, 1
    yield ExactEvent(
        index=1, kind=CollisionKind.BALL_BALL, j=1, A=A, B=B,
        pos_num=c, pos_pow=0, pos_den=V0n,
        dt_num=(x0 - X0) / V0, dt_pow=0, dt_den_a=mpz(1), dt_den_b=mpz(1),
    )
    n = 1
    k = 0            # completed wall visits
    diff_pre = V0n   # A - B before the most recent ball-ball collision
    while n < step_limit:
        if B > 0:
            # flight x -> 0 and wall bounce: X_{2k+2} = c s^{k+1} / B'
            n += 1
            k += 1
            pos_den = B
            dt_a = diff_pre
            B = -B
            yield ExactEvent(
                index=n, kind=CollisionKind.BALL_WALL, j=j, A=A, B=B,
                pos_num=c, pos_pow=k, pos_den=pos_den,
                dt_num=-c * vden, dt_pow=2 * k - 1, dt_den_a=dt_a, dt_den_b=pos_den,
            )
        elif A > B:
            # flight from the wall state X_{2k} = -c s^k / B, then collide
            n += 1
            B_pre = B
            diff_pre = A - B
            A, B = k1 * A + k2 * B, k3 * A + k4 * B
            j += 1
            yield ExactEvent(
                index=n, kind=CollisionKind.BALL_BALL, j=j, A=A, B=B,
                pos_num=c, pos_pow=k, pos_den=diff_pre,
                dt_num=c * vden, dt_pow=2 * k, dt_den_a=B_pre, dt_den_b=diff_pre,
            )
        else:
            return
    return


# -- coordinate transforms --------------------------------------------------


def _sqrt_scalar(x):
    """Exact rational square root when possible, interval enclosure otherwise."""
    if isinstance(x, Interval):
        return x.sqrt()
    root = exact_sqrt(x)
    if root is not None:
        return root
    return Interval.exact(x).sqrt()


def to_billiard_coords(state: KinematicState, M, m):
    """Mass-rescaled coordinates (Y, y, W, w) = (sqrt(M) X, sqrt(m) x, ...).

    In these variables the speed sqrt(W^2 + w^2) is conserved and both
    collision types act as specular reflections of a single point in a wedge.
    """
    sM, sm = _sqrt_scalar(M), _sqrt_scalar(m)
    return sM * state.X, sm * state.x, sM * state.V, sm * state.v


def pivot_half_angle(M, m) -> Interval:
    """varphi = arctan(sqrt(m/M)), the wedge opening angle."""
    ratio = m / M
    root = ratio.sqrt() if isinstance(ratio, Interval) else _sqrt_scalar(ratio)
    return atan_interval(lift(root))


def unfold_point(event: CollisionEvent, M, m):
    """Polar coordinates (radius, angle) of a collision on the unfolded line.

    The n-th collision lies on the n-th mirror image, at angle n*varphi from
    the wall boundary; its distance from the corner is sqrt(Y^2 + y^2) at a
    ball-ball contact and |Y| at a wall contact (where y = 0).
    """
    Y, y, _, _ = to_billiard_coords(event.state_after, M, m)
    if event.kind is CollisionKind.BALL_WALL:
        radius = abs(Y)
    else:
        radius = _sqrt_scalar(Y * Y + y * y)
    angle = event.index * pivot_half_angle(M, m)
    return radius, angle


def unfold_events_exact(traj: Trajectory, M, m):
    """Exact Cartesian unfolded collision points for a rational-mode run.

    Every unfolding isometry is a product of reflections about mirror lines
    at consecutive multiples of varphi, so its matrix entries involve only
    cos/sin of even multiples of varphi, which are rational in tan(varphi) =
    sqrt(m/M).  Requires sqrt(M) and sqrt(m) rational (true for M = b**2N m
    with integer b^N).  Returns a list of (px, py) mpq pairs, all collinear.
    """
    sM, sm = exact_sqrt(mpq(M)), exact_sqrt(mpq(m))
    if sM is None or sm is None:
        raise ValueError("exact unfolding needs perfect-square masses")
    tan_v = sm / sM  # tan(varphi)
    den = 1 + tan_v * tan_v
    cos2v, sin2v = (1 - tan_v * tan_v) / den, 2 * tan_v / den
    # U accumulates Ref(n varphi) ... Ref(varphi); entries stay rational
    u11, u12, u21, u22 = mpq(1), mpq(0), mpq(0), mpq(1)
    cos2nv, sin2nv = cos2v, sin2v  # cos/sin of 2*n*varphi for current mirror
    points = []
    for event in traj.events:
        st = event.state_after
        Y, y = sM * st.X, sm * st.x
        points.append((u11 * Y + u12 * y, u21 * Y + u22 * y))
        # fold in the reflection about the mirror at angle n*varphi (left-composed)
        r11, r12, r21, r22 = cos2nv, sin2nv, sin2nv, -cos2nv
        u11, u12, u21, u22 = (
            r11 * u11 + r12 * u21, r11 * u12 + r12 * u22,
            r21 * u11 + r22 * u21, r21 * u12 + r22 * u22,
        )
        cos2nv, sin2nv = (
            cos2nv * cos2v - sin2nv * sin2v,
            cos2nv * sin2v + sin2nv * cos2v,
        )
    return points


def collinearity_defect(points) -> mpq:
    """Largest cross-product deviation of points from the line through the
    first two; exactly zero for a correctly unfolded trajectory."""
    if len(points) < 3:
        return mpq(0)
    (x1, y1), (x2, y2) = points[0], points[1]
    dx, dy = x2 - x1, y2 - y1
    worst = mpq(0)
    for px, py in points[2:]:
        cross = (px - x1) * dy - (py - y1) * dx
        if abs(cross) > worst:
            worst = abs(cross)
    return worst


def hard_rod_map(X, x, R, r):
    """Map finite-rod centre positions to the equivalent point-ball ones.

    x' = x + r and X' = X + R + r; velocities are unaffected.  Rejects
    configurations where the rods overlap the wall or each other.
    """
    if not x + r < 0:
        raise ValueError("light rod overlaps the wall: need |x| > r")
    if not X + R + r < x:
        raise ValueError("rods overlap: need |X| > |x| + R + r")
    return X + R + r, x + r
