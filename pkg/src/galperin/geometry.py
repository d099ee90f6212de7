"""Geometric laws of the trajectory: extremes, the return-point parabola,
the position-time hyperbolae, and the velocity / inverse-position ellipse.

The wall-event relations are consequences of the exact per-kind action
invariant, so in rational mode their residuals are identically zero; the
parabola is an asymptotic law whose residual shrinks as the mass ratio
grows.  Time origins for the hyperbolae use the perpendicular-foot time
recovered exactly from a wall event, while the parabola (an event-indexed
approximation) is anchored at the ball-ball event where the heavy ball's
velocity changes sign.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from gmpy2 import mpq

from .closed_form import PivotAngle
from .model import BilliardSpec, CollisionKind, FieldMode, Trajectory
from .numeric import (
    AmbiguousPrecision,
    Interval,
    exact_sqrt,
    is_exact,
    lift,
    pi_interval,
    with_escalation,
)


@dataclass
class GeometryReport:
    x_min_observed: float
    x_min_predicted: float
    v_max_observed: float
    v_max_predicted: float
    ellipse_bw_residual: object
    ellipse_bb_residual: object
    hyperbola_bw_residual: object
    hyperbola_bb_residual: object
    parabola_residual: Optional[float]

    @property
    def wall_relations_exact(self) -> bool:
        return _residual_is_zero(self.ellipse_bw_residual) and _residual_is_zero(
            self.hyperbola_bw_residual
        )


def _residual_is_zero(r) -> bool:
    if r is None:
        return False
    if isinstance(r, mpq) or is_exact(r):
        return r == 0
    return False


def predicted_extremes(spec: BilliardSpec):
    """(v_max, P_max, p_max, X_min) from the large-mass-ratio laws:
    v_max = b^N V0, P_max = M V0, p_max = b^-N P_max, X_min = x0 / b^N."""
    bN = spec.b_pow_N()
    M, m = spec.masses()
    V0 = mpq(spec.V0) if is_exact(spec.V0) else lift(spec.V0)
    x0 = mpq(spec.x0) if is_exact(spec.x0) else lift(spec.x0)
    v_max = bN * V0
    P_max = M * V0
    p_max = P_max / bN
    X_min = x0 / bN
    return v_max, P_max, p_max, X_min


def return_index(b, N, cap_bits: int = 2 ** 20) -> int:
    """Smallest k with k*phi >= pi/2: the ball-ball round at which the
    heavy ball's velocity changes sign."""
    if (is_exact(N) and mpq(N) == 0) or (is_exact(b) and mpq(b) == 1):
        return 1  # equal masses: the first collision stops the heavy ball

    def attempt():
        phi = PivotAngle.of(b, N).phi
        ratio = pi_interval() / (phi + phi)  # pi / (2 phi)
        return ratio.floor() + 1

    from .closed_form import _start_bits

    return with_escalation(attempt, start_bits=_start_bits(b, N), cap_bits=cap_bits)


def return_event(traj: Trajectory):
    """First ball-ball event whose outgoing heavy velocity is <= 0."""
    for event in traj.events:
        if event.kind is CollisionKind.BALL_BALL:
            try:
                positive = event.state_after.V > 0
            except AmbiguousPrecision:
                positive = False
            if not positive:
                return event
    return None


def _as_float(x) -> float:
    if isinstance(x, Interval):
        return float(x.mid())
    return float(x)


def _abs_residual(expr):
    """|expr| as an exact value (rational) or a certified upper bound (interval)."""
    if isinstance(expr, Interval):
        return abs(expr).hi
    return abs(expr)


def ellipse_residual(traj: Trajectory, kind: Optional[CollisionKind] = None):
    """Max |b^-2N (x0/X)^2 + (V/V0)^2 - 1| over events of the given kind.

    Wall events sit exactly on the ellipse (their action invariant fixes
    X*v, and energy fixes V), so in rational mode the BW residual is 0.
    """
    spec = traj.spec
    bN = spec.b_pow_N()
    inv_b2N = 1 / (bN * bN)
    x0 = mpq(spec.x0) if is_exact(spec.x0) else lift(spec.x0)
    V0 = mpq(spec.V0) if is_exact(spec.V0) else lift(spec.V0)
    worst = mpq(0)
    for event in traj.events:
        if kind is not None and event.kind is not kind:
            continue
        st = event.state_after
        ratio_x = x0 / st.X
        ratio_v = st.V / V0
        expr = inv_b2N * ratio_x * ratio_x + ratio_v * ratio_v - 1
        r = _abs_residual(expr)
        if r > worst:
            worst = r
    return worst


def _foot_time(traj: Trajectory, X_min):
    """Perpendicular-foot time of the unfolded line, recovered from the
    first wall event: X^2 = X_min^2 + V0^2 (t - t_foot)^2 exactly."""
    spec = traj.spec
    V0 = mpq(spec.V0) if is_exact(spec.V0) else lift(spec.V0)
    bw = traj.bw_events()
    if not bw:
        raise ValueError("trajectory has no wall events")
    e = bw[0]
    st = e.state_after
    if st.t is None:
        raise ValueError("trajectory was run without time tracking")
    gap_sq = st.X * st.X - X_min * X_min
    if isinstance(gap_sq, Interval):
        offset = gap_sq.sqrt() / V0
    else:
        root = exact_sqrt(gap_sq)
        if root is None:
            offset = Interval.exact(gap_sq).sqrt() / lift(V0)
        else:
            offset = root / V0
    try:
        before_return = st.V > 0
    except AmbiguousPrecision:
        before_return = False
    return st.t + offset if before_return else st.t - offset


def hyperbola_residual(traj: Trajectory):
    """(bw_residual, bb_residual) for the position-time hyperbolae

        (X / X_min)^2 - (V0 t' / X_min)^2 = 1           (wall events)
        (X / (sqrt(M/(M+m)) X_min))^2 - (V0 t' / X_min)^2 = 1   (contact events)

    with t' measured from the perpendicular-foot time.  Both are exact
    consequences of the unfolded straight line, hence zero in rational mode.
    """
    spec = traj.spec
    M, m = spec.masses()
    _, _, _, X_min = predicted_extremes(spec)
    V0 = mpq(spec.V0) if is_exact(spec.V0) else lift(spec.V0)
    t_foot = _foot_time(traj, X_min)
    x_min_sq = X_min * X_min
    worst_bw, worst_bb = mpq(0), mpq(0)
    scale_bb = (M + m) / M  # 1 / (M/(M+m))
    for event in traj.events:
        st = event.state_after
        tp = st.t - t_foot
        base = (V0 * tp) * (V0 * tp) / x_min_sq
        if event.kind is CollisionKind.BALL_WALL:
            expr = st.X * st.X / x_min_sq - base - 1
            r = _abs_residual(expr)
            if r > worst_bw:
                worst_bw = r
        else:
            expr = st.X * st.X * scale_bb / x_min_sq - base - 1
            r = _abs_residual(expr)
            if r > worst_bb:
                worst_bb = r
    return worst_bw, worst_bb


def parabola_residual(traj: Trajectory, window: Optional[float] = None):
    """Max relative deviation of |X(t')| / |X_min| from 1 + (V0 t' / X_min)^2 / 2
    over events within |n'| <= b^N / 4 of the return event (asymptotic law;
    improves as b^N grows).  Returns None if the window is empty."""
    spec = traj.spec
    ret = return_event(traj)
    if ret is None:
        return None
    if ret.state_after.t is None:
        raise ValueError("trajectory was run without time tracking")
    bN_f = _as_float(spec.b_pow_N())
    if window is None:
        window = bN_f / 4
    x_min = abs(_as_float(spec.x0)) / bN_f
    v0 = _as_float(spec.V0)
    t_ret = _as_float(ret.state_after.t)
    worst = None
    for event in traj.events:
        if abs(event.index - ret.index) > window:
            continue
        st = event.state_after
        tp = _as_float(st.t) - t_ret
        model = 1.0 + 0.5 * (v0 * tp / x_min) ** 2
        obs = abs(_as_float(st.X)) / x_min
        resid = abs(obs - model) / model
        if worst is None or resid > worst:
            worst = resid
    return worst


def observed_extremes(traj: Trajectory):
    """(min |X|, max |v|) over the recorded events, as floats."""
    min_x = None
    max_v = None
    for event in traj.events:
        st = event.state_after
        ax = abs(_as_float(st.X))
        av = abs(_as_float(st.v))
        if min_x is None or ax < min_x:
            min_x = ax
        if max_v is None or av > max_v:
            max_v = av
    return min_x, max_v


def geometry_report(traj: Trajectory) -> GeometryReport:
    spec = traj.spec
    v_max, _, _, X_min = predicted_extremes(spec)
    min_x, max_v = observed_extremes(traj)
    bw_e = ellipse_residual(traj, CollisionKind.BALL_WALL)
    bb_e = ellipse_residual(traj, CollisionKind.BALL_BALL)
    bw_h, bb_h = hyperbola_residual(traj)
    return GeometryReport(
        x_min_observed=min_x,
        x_min_predicted=abs(_as_float(X_min)),
        v_max_observed=max_v,
        v_max_predicted=_as_float(v_max),
        ellipse_bw_residual=bw_e,
        ellipse_bb_residual=bb_e,
        hyperbola_bw_residual=bw_h,
        hyperbola_bb_residual=bb_h,
        parabola_residual=parabola_residual(traj),
    )
