"""Positional digit expansions in integer and non-integer bases, and the
digit-of-pi pipeline built on the collision counts.

Digits are produced by the greedy rule: the leading power is the largest
``n`` with ``b**n <= x`` and each digit is the certified floor of the
remainder scaled by ``b**i``.  Digits are always in ``[0, ceil(b))``.  For
non-integer bases the expansion of an integer is usually infinite, so
expansions carry an exactness flag and reconstruct their input only up to
the truncation bound ``b**(lowest power)``.

The pi pipeline: ``Pi(b, N)`` collisions expanded in base ``b`` and shifted
``N`` places yield the base-``b`` digits of pi with a possible systematic
error of ``(Pi_exact - Pi_approx) / b**N`` in the last digit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from gmpy2 import mpq, mpz

from .closed_form import SubmultipleDegeneracy, count_collisions_approx, count_collisions_exact
from .numeric import (
    PHI,
    PRECISION_CAP,
    Constant,
    Interval,
    PrecisionExhausted,
    is_exact,
    lift,
    log_interval,
    pow_interval,
    with_escalation,
)


class FloorAmbiguity(ArithmeticError):
    """A digit (or leading-power) floor could not be certified at the cap.

    Happens when the expanded value sits exactly on a digit boundary, e.g.
    expanding pi itself in base pi, where the leading power is undecidable
    between the finite form 10 and the infinite form 3.011...
    """


class Exactness(enum.Enum):
    FINITE = "finite"
    TRUNCATED = "truncated"


_DIGIT_SYMBOLS = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass(frozen=True)
class DigitExpansion:
    """Digits of a number, most significant first.

    ``radix_offset`` is the power of the base carried by the first digit;
    the last digit sits at power ``radix_offset - len(digits) + 1``.
    """

    base: object
    digits: tuple
    radix_offset: int
    exactness: Exactness

    @property
    def lowest_power(self) -> int:
        return self.radix_offset - len(self.digits) + 1

    def shifted(self, places: int) -> "DigitExpansion":
        """Same digits with the radix point moved ``places`` to the left."""
        return DigitExpansion(self.base, self.digits, self.radix_offset - places, self.exactness)

    def value(self):
        """Reconstructed number: exact for rational bases, enclosure otherwise."""
        if is_exact(self.base):
            b = mpq(self.base)
            total = mpq(0)
        else:
            b = lift(self.base)
            total = Interval.exact(0)
        for i, d in enumerate(self.digits):
            power = self.radix_offset - i
            total = total + d * _power(b, power)
        return total

    def to_string(self, trailing_point: bool = False) -> str:
        """Positional rendering with symbols A, B, ... above digit 9."""
        syms = [_DIGIT_SYMBOLS[d] if d < len(_DIGIT_SYMBOLS) else f"[{d}]" for d in self.digits]
        out = []
        if self.radix_offset < 0:
            out.append("0.")
            out.extend("0" * (-self.radix_offset - 1))
            out.extend(syms)
            return "".join(out)
        for i, s in enumerate(syms):
            power = self.radix_offset - i
            out.append(s)
            if power == 0 and i != len(syms) - 1:
                out.append(".")
        if self.lowest_power > 0:
            out.extend("0" * self.lowest_power)
        if trailing_point and self.lowest_power >= 0:
            out.append(".")
        return "".join(out)

    def __str__(self):
        return self.to_string()


def _power(b, exponent: int):
    if isinstance(b, Interval):
        return pow_interval(b, exponent)
    return mpq(b) ** exponent


def _leading_power_exact(x: mpq, b: mpq) -> int:
    """Largest n with b**n <= x, by doubling and binary descent."""
    if x <= 0:
        raise ValueError("leading power needs x > 0")
    if x >= 1:
        n = 0
        power = mpq(1)
        step_pow, step = b, 1
        while power * step_pow <= x:
            power *= step_pow
            n += step
            step_pow *= step_pow
            step *= 2
        while step > 1:
            step //= 2
            step_pow = b ** step
            if power * step_pow <= x:
                power *= step_pow
                n += step
        return n
    return -_leading_power_exact(1 / x, b) - (0 if _is_power(1 / x, b) else 1)


def _is_power(y: mpq, b: mpq) -> bool:
    n = _leading_power_exact(y, b)
    return b ** n == y


def _expand_exact(x: mpq, b: mpq, frac_digits: int):
    if x == 0:
        return (0,), 0, Exactness.FINITE
    lead = _leading_power_exact(x, b)
    if lead < -frac_digits:
        return (0,), 0, Exactness.TRUNCATED
    digits = []
    r = x
    power = b ** lead
    for i in range(lead, -frac_digits - 1, -1):
        d = int(r // power)
        digits.append(d)
        r -= d * power
        power /= b
    return tuple(digits), lead, (Exactness.FINITE if r == 0 else Exactness.TRUNCATED)


def _expand_interval(x, b, frac_digits: int, cap_bits: int):
    x_src, b_src = x, b

    def attempt():
        xv = lift(x_src)
        bv = lift(b_src)
        lead = (log_interval(xv) / log_interval(bv)).floor()
        if lead < -frac_digits:
            return (0,), 0, Exactness.TRUNCATED
        digits = []
        r = xv
        for i in range(lead, -frac_digits - 1, -1):
            p = pow_interval(bv, i)
            d = (r / p).floor()  # certified or escalates; true remainder >= 0
            digits.append(d)
            if d:
                r = r - d * p
        return tuple(digits), lead, Exactness.TRUNCATED

    try:
        return with_escalation(attempt, start_bits=128, cap_bits=cap_bits)
    except PrecisionExhausted as exc:
        raise FloorAmbiguity(str(exc)) from exc


def expand_integer_base(x, b: int, frac_digits: int = 0, cap_bits: int = PRECISION_CAP) -> DigitExpansion:
    """Greedy expansion in an integer base b >= 2 (exact, digits 0..b-1)."""
    if not (isinstance(b, (int, mpz)) and b >= 2):
        raise ValueError("integer base must be an integer >= 2")
    x = mpq(x)
    if x < 0:
        raise ValueError("negative numbers are out of scope")
    digits, lead, exactness = _expand_exact(x, mpq(b), frac_digits)
    return DigitExpansion(base=mpq(b), digits=digits, radix_offset=lead, exactness=exactness)


def expand_noninteger_base(x, b, frac_digits: int = 0, cap_bits: int = PRECISION_CAP) -> DigitExpansion:
    """Greedy (beta) expansion in a real base b > 1; digits are < ceil(b).

    Exact for rational x and b; otherwise every digit floor is certified by
    interval escalation, and an undecidable boundary raises
    :class:`FloorAmbiguity` (e.g. pi in base pi).
    """
    if is_exact(b):
        if not mpq(b) > 1:
            raise ValueError("base must exceed 1")
        if is_exact(x):
            x = mpq(x)
            if x < 0:
                raise ValueError("negative numbers are out of scope")
            digits, lead, exactness = _expand_exact(x, mpq(b), frac_digits)
            return DigitExpansion(base=mpq(b), digits=digits, radix_offset=lead, exactness=exactness)
    digits, lead, exactness = _expand_interval(x, b, frac_digits, cap_bits)
    return DigitExpansion(base=b, digits=digits, radix_offset=lead, exactness=exactness)


# -- pi digits from collision counts ----------------------------------------


def pi_digits(b, N: int, cap_bits: int = PRECISION_CAP):
    """Base-b digits of pi with N places after the radix point, generated
    from the collision count, plus the systematic error epsilon.

    Returns ``(expansion, epsilon)`` where the expansion is Pi(b, N) expanded
    in base b and shifted N places, and ``epsilon/b**N`` bounds the possible
    defect of the last digit.  N = 0 is rejected: the equal-mass run is
    degenerate and over-counts by one.
    """
    if N < 1:
        raise ValueError("pi_digits requires N >= 1 (N = 0 is the degenerate equal-mass case)")
    total = count_collisions_exact(b, N, cap_bits)
    approx = count_collisions_approx(b, N, cap_bits)
    expansion = expand_count(total, b, cap_bits).shifted(N)
    return expansion, total - approx


def expand_count(count: int, b, cap_bits: int = PRECISION_CAP) -> DigitExpansion:
    if is_exact(b):
        bq = mpq(b)
        if bq.denominator == 1:
            return expand_integer_base(count, int(bq), 0, cap_bits)
        return expand_noninteger_base(count, bq, 0, cap_bits)
    return expand_noninteger_base(count, b, 0, cap_bits)


def error_string(b, N: int) -> str:
    """The +-1/b**N column of the digit tables: 0.0...01 in base b."""
    if N <= 0:
        return "1"
    return "0." + "0" * (N - 1) + "1"


def systematic_error(b, N, cap_bits: int = PRECISION_CAP) -> int:
    """epsilon = Pi_exact - Pi_approx; 0 or 1 on the studied domain."""
    return count_collisions_exact(b, N, cap_bits) - count_collisions_approx(b, N, cap_bits)


@dataclass(frozen=True)
class ErrorCell:
    b: mpq
    N: mpq
    epsilon: int  # -1 marks a cell undecided at the local precision cap


def error_cell(b, N, cap_bits: int = 4096) -> ErrorCell:
    try:
        exact = count_collisions_exact(b, N, cap_bits)
    except SubmultipleDegeneracy as exc:
        if exc.certified and exc.formula_count is not None:
            exact = exc.formula_count  # N = 0 row: the formula value stands
        else:
            return ErrorCell(b=mpq(b), N=mpq(N), epsilon=-1)
    except PrecisionExhausted:
        return ErrorCell(b=mpq(b), N=mpq(N), epsilon=-1)
    try:
        approx = count_collisions_approx(b, N, cap_bits)
    except (SubmultipleDegeneracy, PrecisionExhausted):
        return ErrorCell(b=mpq(b), N=mpq(N), epsilon=-1)
    return ErrorCell(b=mpq(b), N=mpq(N), epsilon=exact - approx)


def grid_values(lo, hi, steps: int):
    """Inclusive rational grid of ``steps`` values from lo to hi."""
    lo, hi = mpq(lo), mpq(hi)
    if steps < 2:
        return [lo]
    step = (hi - lo) / (steps - 1)
    return [lo + i * step for i in range(steps)]


def error_map(b_values, N_values, cap_bits: int = 4096):
    """Grid of systematic-error cells; undecided cells carry epsilon = -1."""
    return [error_cell(b, N, cap_bits) for b in b_values for N in N_values]


# -- golden-base dual representations ---------------------------------------


def golden_dual_forms(x, frac_digits: int, shift: int = 0, cap_bits: int = PRECISION_CAP):
    """Two base-phi expansions of ``x / phi**shift``: the greedy one with
    integer part starting 100... (Type I) and its rewrite by phi^2 = phi + 1
    starting 11... (Type II).  Both reconstruct the value to the same
    truncation bound; requires the shifted value to be at least phi^2 and
    the greedy form to open with the 100 block.  A negative ``shift``
    multiplies by a power of phi instead (e.g. x=1, shift=-2 expands phi^2).
    """
    if frac_digits < 0:
        raise ValueError("frac_digits must be non-negative")
    raw = expand_noninteger_base(x, PHI, max(frac_digits - shift, 0), cap_bits)
    form_one = raw.shifted(shift)
    if form_one.radix_offset < 2:
        raise ValueError("dual forms need a value of at least phi^2")
    d = form_one.digits
    if form_one.lowest_power > 0:  # digits stop above the radix point: pad
        d = d + (0,) * form_one.lowest_power
        form_one = DigitExpansion(PHI, d, form_one.radix_offset, form_one.exactness)
    if not (d[0] == 1 and len(d) >= 3 and d[1] == 0 and d[2] == 0):
        raise ValueError("greedy form does not open with the 100 block")
    form_two = DigitExpansion(
        base=PHI,
        digits=(1, 1) + d[3:],
        radix_offset=form_one.radix_offset - 1,
        exactness=form_one.exactness,
    )
    return form_one, form_two
