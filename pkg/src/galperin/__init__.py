"""Galperin two-ball billiard: exact collision counting and digits of pi.

A heavy ball of mass ``b**(2N)`` (in light-ball units) thrown at a resting
light ball in front of a wall collides exactly ``int[pi / arctan(b**-N)]``
times, which is the first ``N`` base-``b`` digits of pi up to a one-unit
systematic error in the last digit.  This package provides the event-driven
simulation (exact rationals or certified intervals), the closed-form
solution, conservation-law and geometry audits, digit expansions in integer
and non-integer bases, and a command-line interface.
"""

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
    E,
    PHI,
    PI,
    AmbiguousPrecision,
    Constant,
    Interval,
    PrecisionExhausted,
    parse_base,
    working_precision,
)
from .dynamics import (
    collide_ball_ball,
    collide_ball_wall,
    count_collisions_simulated,
    hard_rod_map,
    next_collision,
    simulate,
    to_billiard_coords,
    unfold_point,
)
from .closed_form import (
    CollisionCount,
    PivotAngle,
    SubmultipleDegeneracy,
    count_collisions_approx,
    count_collisions_exact,
    phase_angle,
    state_at,
    terminal_parity,
    time_of,
)
from .invariants import (
    action_bb,
    action_bw,
    angular_momentum_sq,
    audit_trajectory,
    chevalley_J,
    outgoing_map,
    superintegrable_mass_ratio,
)
from .geometry import (
    ellipse_residual,
    geometry_report,
    hyperbola_residual,
    parabola_residual,
    predicted_extremes,
    return_index,
)
from .base_repr import (
    DigitExpansion,
    FloorAmbiguity,
    error_map,
    expand_integer_base,
    expand_noninteger_base,
    golden_dual_forms,
    pi_digits,
    systematic_error,
)

__version__ = "1.0.0"
