"""Closed-form collision counts, states, and times.

The rescaled velocity vector rotates by a fixed angle ``phi = 2 arctan(b^-N)``
at every ball-ball collision and reflects at every wall bounce, so the whole
run is a deterministic walk of that angle and everything about collision
``n`` is available in closed form: counts via a certified floor of
``pi / arctan(b^-N)``, velocities via cos/sin of multiples of ``phi``, and
positions via the reciprocal-sine formulas.

For rational ``b^N = q_hi/q_lo`` the tangent half-angle substitution makes
every cos/sin of a multiple of ``phi`` an exact rational, so the closed form
can be compared bit-for-bit against the event-driven simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import gmpy2
from gmpy2 import mpq, mpz

from .dynamics import ExactEvent, default_step_limit
from .model import BilliardSpec, CollisionKind, FieldMode, KinematicState
from .numeric import (
    AmbiguousPrecision,
    Constant,
    Interval,
    PRECISION_CAP,
    PrecisionExhausted,
    atan_interval,
    floor_mpfr,
    is_exact,
    lift,
    pi_interval,
    pow_interval,
    working_precision,
)


class SubmultipleDegeneracy(ArithmeticError):
    """pi / arctan(b^-N) is (or may be) an exact integer.

    At such parameters the final collision leaves the light ball exactly at
    rest and the counting formula exceeds the physical count by one.  The
    formula value is carried in ``formula_count``; ``certified`` is True when
    the degeneracy is proven (b^N == 1) rather than suspected at the
    precision cap.
    """

    def __init__(self, formula_count: Optional[int], certified: bool, detail: str = ""):
        super().__init__(detail or f"degenerate pivot angle (formula count {formula_count})")
        self.formula_count = formula_count
        self.certified = certified


@dataclass(frozen=True)
class PivotAngle:
    """varphi = arctan(b^-N) and phi = 2 varphi as certified intervals."""

    varphi: Interval
    phi: Interval

    @staticmethod
    def of(b, N) -> "PivotAngle":
        varphi = atan_interval(_b_pow_minus_N(b, N))
        return PivotAngle(varphi=varphi, phi=varphi + varphi)


@dataclass(frozen=True)
class CollisionCount:
    exact: int
    approx: int

    @property
    def epsilon(self) -> int:
        return self.exact - self.approx


def _b_pow_minus_N(b, N) -> Interval:
    return pow_interval(lift(b), -N if isinstance(N, int) else -mpq(N))


def _start_bits(b, N) -> int:
    if isinstance(b, Constant):
        with working_precision(64):
            b_f = float(b.interval().mid())
    else:
        b_f = float(mpq(b))
    n_f = float(N) if not isinstance(N, int) else N
    return 64 + max(0, math.ceil(4 * n_f * math.log2(max(b_f, 1.0000001))))


def _is_unit_ratio(b, N) -> bool:
    """Exact test for b^N == 1 (the only rational submultiple angle)."""
    if is_exact(N) and mpq(N) == 0:
        return True
    return is_exact(b) and mpq(b) == 1


def _certified_floor_of(make_value, b, N, cap_bits: int):
    """Escalate until the floor of ``make_value()`` is certified.

    At the cap, an interval hugging an integer within 2^-(bits/2) is reported
    as a (suspected) degeneracy; anything else exhausts precision.
    """
    bits = _start_bits(b, N)
    while True:
        with working_precision(min(bits, cap_bits)):
            value = make_value()
            try:
                return value.floor()
            except AmbiguousPrecision:
                if bits >= cap_bits:
                    nearest = floor_mpfr(value.hi)
                    d, u = value.lo - nearest, value.hi - nearest
                    eps = gmpy2.mpfr(2) ** (-(cap_bits // 2))
                    if abs(d) < eps and abs(u) < eps:
                        raise SubmultipleDegeneracy(
                            formula_count=nearest,
                            certified=False,
                            detail=f"value within 2^-{cap_bits // 2} of {nearest} at cap",
                        ) from None
                    raise PrecisionExhausted(
                        f"floor unresolved at {cap_bits} bits"
                    ) from None
        bits *= 2


def count_collisions_exact(b, N, cap_bits: int = PRECISION_CAP) -> int:
    """int[pi / arctan(b^-N)], the total collision count.

    Raises :class:`SubmultipleDegeneracy` when the ratio is an exact integer
    (certified for b^N == 1, where the formula gives 4 but only 3 collisions
    happen) or when it cannot be separated from an integer at the cap.
    """
    if _is_unit_ratio(b, N):
        raise SubmultipleDegeneracy(formula_count=4, certified=True,
                                    detail="b^N == 1: formula gives 4, physical count is 3")

    def value():
        return pi_interval() / atan_interval(_b_pow_minus_N(b, N))

    return _certified_floor_of(value, b, N, cap_bits)


def count_collisions_approx(b, N, cap_bits: int = PRECISION_CAP) -> int:
    """int[pi * b^N], the large-mass-ratio approximation of the count."""

    def value():
        return pi_interval() * pow_interval(lift(b), N if isinstance(N, int) else mpq(N))

    return _certified_floor_of(value, b, N, cap_bits)


def collision_count(b, N, cap_bits: int = PRECISION_CAP) -> CollisionCount:
    return CollisionCount(
        exact=count_collisions_exact(b, N, cap_bits),
        approx=count_collisions_approx(b, N, cap_bits),
    )


def terminal_parity(b, N) -> CollisionKind:
    """Kind of the final collision: even counts end at the wall, odd ones
    with a ball-ball collision."""
    total = count_collisions_exact(b, N)
    return CollisionKind.BALL_WALL if total % 2 == 0 else CollisionKind.BALL_BALL


def phase_angle(n: int, b, N) -> Interval:
    """Angle of the rescaled velocity vector after collision ``n``:
    (-1)^(n+1) * 2 arctan(b^-N) * int[(n+1)/2]."""
    if n == 0:
        return Interval.exact(0)
    k = (n + 1) // 2
    phi = PivotAngle.of(b, N).phi
    signed = phi * k
    return signed if n % 2 == 1 else -signed


# -- exact rational trigonometry of multiples of phi -----------------------


@dataclass(frozen=True)
class _RationalPivot:
    """tan(varphi) = q_lo / q_hi with b^N = q_hi / q_lo in lowest terms.

    cos(k phi) = c_k / s**k and b^N sin(k phi) = shat_k / s**k with the
    integer recursion (c, shat) -> (cr*c - 2*q_lo^2*shat, 2*q_hi^2*c + cr*shat),
    where cr = q_hi^2 - q_lo^2 and s = q_hi^2 + q_lo^2.
    """

    q_hi: mpz
    q_lo: mpz

    @property
    def cr(self) -> mpz:
        return self.q_hi * self.q_hi - self.q_lo * self.q_lo

    @property
    def scale(self) -> mpz:
        return self.q_hi * self.q_hi + self.q_lo * self.q_lo

    def step(self, c, shat):
        return (
            self.cr * c - 2 * self.q_lo * self.q_lo * shat,
            2 * self.q_hi * self.q_hi * c + self.cr * shat,
        )

    def power(self, k: int):
        """(c_k, shat_k) by binary powering of the rotation."""
        rc, rs = mpz(1), mpz(0)  # accumulated rotation by k*phi
        bc, bs = self.cr, 2 * self.q_hi * self.q_lo  # true complex pair z = cr + i*si
        e = k
        while e:
            if e & 1:
                rc, rs = rc * bc - rs * bs, rc * bs + rs * bc
            bc, bs = bc * bc - bs * bs, 2 * bc * bs
            e >>= 1
        # rs = Im(z^k) is divisible by si/(2 q_hi q_lo) scaling: shat = q_hi*rs/q_lo
        shat, rem = gmpy2.f_divmod(self.q_hi * rs, self.q_lo)
        if rem != 0:
            raise AssertionError("pivot power lost integrality")
        # the binary powering accumulates scale**k implicitly in both parts
        return rc, shat


def rational_pivot(spec: BilliardSpec) -> _RationalPivot:
    bN = spec.b_pow_N()
    if not is_exact(bN):
        raise ValueError("rational pivot requires rational b^N")
    bN = mpq(bN)
    return _RationalPivot(q_hi=mpz(bN.numerator), q_lo=mpz(bN.denominator))


def iter_states_exact(spec: BilliardSpec, step_limit: Optional[int] = None) -> Iterator[ExactEvent]:
    """Closed-form per-collision records in the factored integer layout of
    :class:`galperin.dynamics.ExactEvent`, for bit-exact comparison with the
    simulation stream.  Requires v0 = 0 and a rational mass ratio."""
    if not mpq(spec.v0) == 0:
        raise ValueError("closed form assumes v0 = 0")
    pivot = rational_pivot(spec)
    if step_limit is None:
        step_limit = default_step_limit(spec)
    X0, x0, V0 = mpq(spec.X0), mpq(spec.x0), mpq(spec.V0)
    V0n, vden = mpz(V0.numerator), mpz(V0.denominator)
    c_const = x0 * V0n

    c, shat = pivot.step(mpz(1), mpz(0))  # k = 1
    c_prev, shat_prev = mpz(1), mpz(0)
    yield ExactEvent(
        index=1, kind=CollisionKind.BALL_BALL, j=1, A=V0n * c, B=V0n * shat,
        pos_num=c_const, pos_pow=0, pos_den=V0n * (c_prev + shat_prev),
        dt_num=(x0 - X0) / V0, dt_pow=0, dt_den_a=mpz(1), dt_den_b=mpz(1),
    )
    n = 1
    k = 1
    while n < step_limit:
        # state after ball-ball event 2k-1: v has the sign of shat_k
        if shat <= 0:
            return
        n += 1
        yield ExactEvent(
            index=n, kind=CollisionKind.BALL_WALL, j=k, A=V0n * c, B=-V0n * shat,
            pos_num=c_const, pos_pow=k, pos_den=V0n * shat,
            dt_num=-c_const * vden, dt_pow=2 * k - 1,
            dt_den_a=V0n * (c_prev + shat_prev), dt_den_b=V0n * shat,
        )
        if n >= step_limit:
            return
        if c + shat <= 0:
            return  # wall state no longer approaching: outgoing
        c_prev, shat_prev = c, shat
        c, shat = pivot.step(c, shat)
        k += 1
        n += 1
        yield ExactEvent(
            index=n, kind=CollisionKind.BALL_BALL, j=k, A=V0n * c, B=V0n * shat,
            pos_num=c_const, pos_pow=k - 1, pos_den=V0n * (c_prev + shat_prev),
            dt_num=c_const * vden, dt_pow=2 * (k - 1),
            dt_den_a=-V0n * shat_prev, dt_den_b=V0n * (c_prev + shat_prev),
        )
    return


def state_at(n: int, spec: BilliardSpec, total: Optional[int] = None) -> KinematicState:
    """Exact closed-form state after collision ``n`` (time not included).

    V_n = V0 cos(phi_n); v_n = V0 b^N sin(phi_n);
    X_2k = x0 / (b^N sin(k phi)); X_2k+1 = x_2k+1 = x0 / (b^N sin(k phi) + cos(k phi)).
    """
    if n < 1:
        raise ValueError("collision index starts at 1")
    if total is not None and n > total:
        raise ValueError(f"collision index {n} beyond total {total}")
    k = (n + 1) // 2
    if spec.resolved_field() is FieldMode.RATIONAL:
        pivot = rational_pivot(spec)
        c, shat = pivot.power(k)
        den = mpq(pivot.scale) ** k
        cos_n = c / den
        bN_sin_k = shat / den
        x0, V0 = mpq(spec.x0), mpq(spec.V0)
    else:
        t = _b_pow_minus_N(spec.base, spec.mantissa)
        one = Interval.exact(1)
        denom = one + t * t
        cos_phi = (one - t * t) / denom
        sin_phi = (t + t) / denom
        cos_n, sin_k = _rotation_power(cos_phi, sin_phi, k)
        bN = pow_interval(lift(spec.base), spec.mantissa if isinstance(spec.mantissa, int) else mpq(spec.mantissa))
        bN_sin_k = bN * sin_k
        x0, V0 = lift(spec.x0), lift(spec.V0)
    V = V0 * cos_n
    sign = 1 if n % 2 == 1 else -1
    v = sign * V0 * bN_sin_k
    if n % 2 == 0:
        X = x0 / bN_sin_k
        x = mpq(0) if spec.resolved_field() is FieldMode.RATIONAL else Interval.exact(0)
    else:
        if n == 1:
            cos_prev, bN_sin_prev = (mpq(1), mpq(0)) if spec.resolved_field() is FieldMode.RATIONAL else (Interval.exact(1), Interval.exact(0))
        elif spec.resolved_field() is FieldMode.RATIONAL:
            cp, sp = pivot.power(k - 1)
            dp = mpq(pivot.scale) ** (k - 1)
            cos_prev, bN_sin_prev = cp / dp, sp / dp
        else:
            cp, sp = _rotation_power(cos_phi, sin_phi, k - 1)
            cos_prev, bN_sin_prev = cp, bN * sp
        X = x0 / (bN_sin_prev + cos_prev)
        x = X
    return KinematicState(t=None, X=X, x=x, V=V, v=v, n=n)


def _rotation_power(cos_phi: Interval, sin_phi: Interval, k: int):
    """(cos k phi, sin k phi) by binary powering of interval rotations."""
    rc, rs = Interval.exact(1), Interval.exact(0)
    bc, bs = cos_phi, sin_phi
    e = k
    while e:
        if e & 1:
            rc, rs = rc * bc - rs * bs, rc * bs + rs * bc
        bc, bs = bc * bc - bs * bs, (bc * bs) + (bc * bs)
        e >>= 1
    return rc, rs


def time_of(n: int, spec: BilliardSpec) -> mpq:
    """Exact time of collision ``n``: the sum of the preceding flight times.

    Cost grows quadratically with ``n`` in rational mode because the partial
    sums have genuinely growing denominators; fine for the table-sized runs
    this is meant for.  Use the per-event flight times for large-run checks.
    """
    if n < 1:
        raise ValueError("collision index starts at 1")
    total = mpq(0)
    pivot = rational_pivot(spec)
    scale = pivot.scale
    for event in iter_states_exact(spec, step_limit=n + 1):
        if event.index > n:
            break
        total += event.flight_time(scale)
        if event.index == n:
            return total
    raise ValueError(f"collision index {n} beyond the final collision")


def times_exact(spec: BilliardSpec, step_limit: Optional[int] = None):
    """Exact cumulative collision times for a whole (small) run."""
    pivot = rational_pivot(spec)
    scale = pivot.scale
    total = mpq(0)
    out = []
    for event in iter_states_exact(spec, step_limit=step_limit):
        total += event.flight_time(scale)
        out.append(total)
    return out


# -- large-b^N asymptotic laws ---------------------------------------------


def approx_inverse_tau(n: int, spec: BilliardSpec) -> float:
    """Approximate 1/tau_n for b^N >> 1: (b^2N / t0) sin^2(n / b^N)."""
    bN = _float_bN(spec)
    t0 = abs(float(mpq(spec.x0) / mpq(spec.V0)))
    return (bN * bN) * math.sin(n / bN) ** 2 / t0


def approx_time_after_return(nprime: float, spec: BilliardSpec) -> float:
    """Approximate time at signed collision offset n' from the return point:
    t(n') = t0 (1 + b^-N tan(n' / b^N)), measured from the first collision
    (the heavy ball then sits at x0, so the return happens near t0)."""
    bN = _float_bN(spec)
    t0 = abs(float(mpq(spec.x0) / mpq(spec.V0)))
    return t0 * (1.0 + math.tan(nprime / bN) / bN)


def _float_bN(spec: BilliardSpec) -> float:
    bN = spec.b_pow_N()
    if is_exact(bN):
        return float(mpq(bN))
    return float(bN.mid())
