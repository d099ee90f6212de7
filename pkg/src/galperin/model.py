"""Domain types for the two-ball billiard.

A :class:`BilliardSpec` fixes one experiment: the base ``b`` and mantissa
``N`` choose the mass ratio ``M/m = b**(2N)``, and the initial conditions
fix the length and time scales (they do not affect the collision count).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from gmpy2 import mpq

from .numeric import (
    Constant,
    Interval,
    is_exact,
    lift,
    pow_interval,
    sign,
)


class CollisionKind(enum.Enum):
    BALL_BALL = "BB"
    BALL_WALL = "BW"


class Termination(enum.Enum):
    OUTGOING = "outgoing"          # v <= 0 and V <= v: no further contact possible
    DEGENERATE_STOP = "degenerate_stop"  # light ball exactly at rest, heavy not approaching
    STEP_LIMIT = "step_limit"


class FieldMode(enum.Enum):
    AUTO = "auto"
    RATIONAL = "rational"
    INTERVAL = "interval"


DEFAULT_X0 = mpq(-2)
DEFAULT_x0 = mpq(-1)
DEFAULT_V0 = mpq(1)


@dataclass(frozen=True)
class BilliardSpec:
    """One billiard experiment.

    ``base`` is an exact rational or a named :class:`Constant` (pi, e, phi).
    ``mantissa`` may be fractional (used by error maps); standard runs use
    integers.  ``mass_ratio`` is ``M/m``; when built from (base, mantissa)
    it equals ``base**(2*mantissa)``.
    """

    base: object = mpq(10)
    mantissa: object = 1
    mass_heavy: object = None
    mass_light: object = mpq(1)
    X0: object = DEFAULT_X0
    x0: object = DEFAULT_x0
    V0: object = DEFAULT_V0
    v0: object = mpq(0)
    field_mode: FieldMode = FieldMode.AUTO
    precision_cap_bits: int = 2 ** 20

    def __post_init__(self):
        derived = self.mass_heavy is None
        if derived:
            object.__setattr__(self, "mass_heavy", self._ratio_from_base())
        object.__setattr__(self, "_mass_from_base", derived)
        if is_exact(self.X0) and is_exact(self.x0):
            if not (self.X0 < self.x0 < 0):
                raise ValueError("initial positions must satisfy X0 < x0 < 0")
        if is_exact(self.V0) and not self.V0 > 0:
            raise ValueError("initial heavy velocity must be positive")

    def _ratio_from_base(self):
        b, N = self.base, self.mantissa
        if is_exact(b) and isinstance(N, int):
            return mpq(b) ** (2 * N) * mpq(self.mass_light)
        return None  # resolved per-precision in interval mode

    # -- field selection ----------------------------------------------

    @property
    def is_rational(self) -> bool:
        """True when the mass ratio is exactly rational."""
        return (
            is_exact(self.base)
            and isinstance(self.mantissa, int)
            and is_exact(self.mass_light)
            and is_exact(self.X0)
            and is_exact(self.x0)
            and is_exact(self.V0)
            and is_exact(self.v0)
        ) or (
            self.mass_heavy is not None
            and is_exact(self.mass_heavy)
            and is_exact(self.mass_light)
        )

    def resolved_field(self) -> FieldMode:
        if self.field_mode is not FieldMode.AUTO:
            return self.field_mode
        return FieldMode.RATIONAL if self.is_rational else FieldMode.INTERVAL

    def masses(self):
        """(M, m) in the resolved field."""
        mode = self.resolved_field()
        if mode is FieldMode.RATIONAL:
            if self.mass_heavy is None or not is_exact(self.mass_heavy):
                raise ValueError("rational mode requires an exact mass ratio")
            return mpq(self.mass_heavy), mpq(self.mass_light)
        if self.mass_heavy is not None and is_exact(self.mass_heavy):
            return lift(self.mass_heavy), lift(self.mass_light)
        M = pow_interval(lift(self.base), 2 * _as_exponent(self.mantissa)) * lift(self.mass_light)
        return M, lift(self.mass_light)

    def initial_conditions(self):
        mode = self.resolved_field()
        vals = (self.X0, self.x0, self.V0, self.v0)
        if mode is FieldMode.RATIONAL:
            return tuple(mpq(v) for v in vals)
        return tuple(lift(v) for v in vals)

    def b_pow_N(self):
        """sqrt(M/m) in the resolved field; equals b**N for base-built specs."""
        if not getattr(self, "_mass_from_base", True):
            M, m = self.masses()
            ratio = M / m
            if is_exact(ratio):
                from .numeric import exact_sqrt

                root = exact_sqrt(ratio)
                if root is not None:
                    return root
                return Interval.exact(ratio).sqrt()
            return ratio.sqrt()
        mode = self.resolved_field()
        if mode is FieldMode.RATIONAL and is_exact(self.base) and isinstance(self.mantissa, int):
            return mpq(self.base) ** self.mantissa
        return pow_interval(lift(self.base), _as_exponent(self.mantissa))

    def suggested_precision(self) -> int:
        """Starting interval precision: 64 + 4 N log2(b) bits."""
        import math

        if not getattr(self, "_mass_from_base", True):
            from .numeric import working_precision

            with working_precision(64):
                ratio = float(lift(self.mass_heavy).mid()) / float(lift(self.mass_light).mid())
            return 64 + max(0, math.ceil(2 * math.log2(max(ratio, 1.0 + 1e-9))))
        b_f = float(lift_or_float(self.base))
        n_f = float(_as_float(self.mantissa))
        return 64 + max(0, math.ceil(4 * n_f * math.log2(max(b_f, 1.0 + 1e-9))))

    def describe(self) -> dict:
        return {
            "base": str(self.base),
            "mantissa": str(self.mantissa),
            "mass_heavy": str(self.mass_heavy) if self.mass_heavy is not None else None,
            "mass_light": str(self.mass_light),
            "X0": str(self.X0),
            "x0": str(self.x0),
            "V0": str(self.V0),
            "v0": str(self.v0),
            "field": self.resolved_field().value,
        }


def _as_exponent(n):
    if isinstance(n, int):
        return n
    return mpq(n)


def _as_float(n):
    try:
        return float(n)
    except TypeError:
        return float(lift(n).mid())


def lift_or_float(x):
    if isinstance(x, Constant):
        from .numeric import working_precision

        with working_precision(64):
            return float(x.interval().mid())
    return x


@dataclass(frozen=True, eq=False)
class KinematicState:
    """Positions and velocities of both balls at a moment in time.

    ``t`` may be None for runs where exact cumulative time is not tracked;
    per-event ``dt`` values on the trajectory remain exact in that case.
    """

    t: object
    X: object
    x: object
    V: object
    v: object
    n: int = 0

    def kinetic_energy(self, M, m):
        return (M * self.V * self.V + m * self.v * self.v) / 2

    def momentum(self, M, m):
        return M * self.V + m * self.v

    def ordering_ok(self) -> bool:
        """X <= x <= 0, the configuration-space constraint."""
        try:
            return bool(self.X <= self.x) and sign(self.x) <= 0
        except Exception:
            return True  # interval overlap at a contact instant


@dataclass(frozen=True, eq=False)
class CollisionEvent:
    index: int
    kind: CollisionKind
    state_after: KinematicState
    dt_since_previous: object

    @property
    def parity_ok(self) -> bool:
        want = CollisionKind.BALL_BALL if self.index % 2 == 1 else CollisionKind.BALL_WALL
        return self.kind is want


@dataclass(eq=False)
class Trajectory:
    spec: BilliardSpec
    events: list = field(default_factory=list)
    termination: Termination = Termination.OUTGOING
    n_collisions: int = 0
    final_state: Optional[KinematicState] = None
    precision_bits: Optional[int] = None  # None in exact rational mode

    def __len__(self):
        return self.n_collisions

    def kinds(self):
        return [e.kind for e in self.events]

    def bw_events(self):
        return [e for e in self.events if e.kind is CollisionKind.BALL_WALL]

    def bb_events(self):
        return [e for e in self.events if e.kind is CollisionKind.BALL_BALL]
