"""Certified arbitrary-precision interval arithmetic and exact rational helpers.

Two scalar kinds flow through the package:

* exact rationals (``gmpy2.mpq`` / ``int``) -- used whenever the mass ratio
  is rational; every operation is exact and every predicate is decidable.
* :class:`Interval` -- a pair of directed-rounded ``mpfr`` endpoints.  The
  true value is always contained in ``[lo, hi]``.  Predicates (sign tests,
  comparisons, floors) either return a certified answer or raise
  :class:`AmbiguousPrecision`, which callers resolve by re-running the whole
  computation at doubled precision (see :func:`with_escalation`).

The working precision is a module-level setting manipulated through the
``working_precision`` context manager.  Parallelism across simulations is
process-based, so a per-process setting is sufficient.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr, mpq, mpz

DEFAULT_PRECISION = 128
PRECISION_CAP = 2 ** 20


class AmbiguousPrecision(ArithmeticError):
    """A predicate on an interval could not be decided at the working precision."""


class PrecisionExhausted(ArithmeticError):
    """Escalation reached the precision cap without resolving a predicate."""


_state = threading.local()


def current_precision() -> int:
    return getattr(_state, "precision", DEFAULT_PRECISION)


@contextmanager
def working_precision(bits: int):
    """Set the interval working precision for the enclosed computation."""
    old = current_precision()
    _state.precision = int(bits)
    try:
        yield
    finally:
        _state.precision = old


def floor_mpfr(x) -> int:
    """Exact floor of an mpfr via its dyadic integer ratio (both int() and
    gmpy2.floor() round through the global context and can be off)."""
    num, den = x.as_integer_ratio()
    return int(num // den)


def ceil_mpfr(x) -> int:
    num, den = x.as_integer_ratio()
    return int(-((-num) // den))


_ctx_cache: dict = {}


def _directed(bits: int):
    try:
        return _ctx_cache[bits]
    except KeyError:
        pair = (
            gmpy2.context(precision=bits, round=gmpy2.RoundDown),
            gmpy2.context(precision=bits, round=gmpy2.RoundUp),
        )
        if len(_ctx_cache) < 256:
            _ctx_cache[bits] = pair
        return pair


def _rationalize(x):
    """Coerce supported exact inputs to mpq, or return None."""
    if isinstance(x, (int, mpz)):
        return mpq(x)
    if isinstance(x, mpq):
        return x
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return None


class Interval:
    """Closed interval with outward-rounded mpfr endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        if not lo <= hi:
            raise ValueError(f"inverted interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    # -- construction -------------------------------------------------

    @staticmethod
    def exact(x) -> "Interval":
        """Tightest enclosure of an exact number at the working precision."""
        if isinstance(x, Interval):
            return x
        q = _rationalize(x)
        if q is None:
            raise TypeError(f"cannot enclose {type(x).__name__} exactly")
        d, u = _directed(current_precision())
        # context div of mpz operands rounds the true quotient directedly,
        # which stays sound for numerators wider than the working precision
        num, den = mpz(q.numerator), mpz(q.denominator)
        return Interval(d.div(num, den), u.div(num, den))

    @staticmethod
    def point(x: mpfr) -> "Interval":
        return Interval(x, x)

    # -- queries ------------------------------------------------------

    def width(self) -> mpfr:
        _, u = _directed(current_precision())
        return u.sub(self.hi, self.lo)

    def mid(self) -> mpfr:
        d, _ = _directed(current_precision())
        return d.div(d.add(self.lo, self.hi), 2)

    def __float__(self) -> float:
        return float(self.mid())

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def is_thin(self) -> bool:
        return self.lo == self.hi

    def sign(self) -> int:
        """Certified sign: +1, -1, or 0 (thin zero); ambiguous otherwise."""
        if self.lo > 0:
            return 1
        if self.hi < 0:
            return -1
        if self.lo == 0 and self.hi == 0:
            return 0
        raise AmbiguousPrecision(f"sign of {self!r} undecidable")

    def floor(self) -> int:
        """Certified floor; both endpoints must agree."""
        f_lo = floor_mpfr(self.lo)
        f_hi = floor_mpfr(self.hi)
        if f_lo == f_hi:
            return f_lo
        raise AmbiguousPrecision(f"floor of {self!r} spans {f_lo}..{f_hi}")

    # -- arithmetic ---------------------------------------------------

    @staticmethod
    def _lift(x):
        if isinstance(x, Interval):
            return x
        q = _rationalize(x)
        if q is not None:
            return Interval.exact(q)
        if isinstance(x, mpfr):
            return Interval(x, x)
        return None

    def __add__(self, other):
        o = Interval._lift(other)
        if o is None:
            return NotImplemented
        d, u = _directed(current_precision())
        return Interval(d.add(self.lo, o.lo), u.add(self.hi, o.hi))

    __radd__ = __add__

    def __neg__(self):
        # bare -mpfr rounds at the (53-bit) global context; keep it directed
        d, u = _directed(current_precision())
        return Interval(d.minus(self.hi), u.minus(self.lo))

    def __sub__(self, other):
        o = Interval._lift(other)
        if o is None:
            return NotImplemented
        d, u = _directed(current_precision())
        return Interval(d.sub(self.lo, o.hi), u.sub(self.hi, o.lo))

    def __rsub__(self, other):
        o = Interval._lift(other)
        if o is None:
            return NotImplemented
        return o.__sub__(self)

    def __mul__(self, other):
        o = Interval._lift(other)
        if o is None:
            return NotImplemented
        d, u = _directed(current_precision())
        a, b, c, e = self.lo, self.hi, o.lo, o.hi
        if a >= 0:
            if c >= 0:
                return Interval(d.mul(a, c), u.mul(b, e))
            if e <= 0:
                return Interval(d.mul(b, c), u.mul(a, e))
            return Interval(d.mul(b, c), u.mul(b, e))
        if b <= 0:
            if c >= 0:
                return Interval(d.mul(a, e), u.mul(b, c))
            if e <= 0:
                return Interval(d.mul(b, e), u.mul(a, c))
            return Interval(d.mul(a, e), u.mul(a, c))
        if c >= 0:
            return Interval(d.mul(a, e), u.mul(b, e))
        if e <= 0:
            return Interval(d.mul(b, c), u.mul(a, c))
        return Interval(min(d.mul(a, e), d.mul(b, c)), max(u.mul(a, c), u.mul(b, e)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Interval._lift(other)
        if o is None:
            return NotImplemented
        if o.contains_zero():
            raise AmbiguousPrecision(f"division by interval containing zero: {o!r}")
        d, u = _directed(current_precision())
        a, b, c, e = self.lo, self.hi, o.lo, o.hi
        if c > 0:
            if a >= 0:
                return Interval(d.div(a, e), u.div(b, c))
            if b <= 0:
                return Interval(d.div(a, c), u.div(b, e))
            return Interval(d.div(a, c), u.div(b, c))
        if a >= 0:
            return Interval(d.div(b, e), u.div(a, c))
        if b <= 0:
            return Interval(d.div(b, c), u.div(a, e))
        return Interval(d.div(b, e), u.div(a, e))

    def __rtruediv__(self, other):
        o = Interval._lift(other)
        if o is None:
            return NotImplemented
        return o.__truediv__(self)

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        _, u = _directed(current_precision())
        return Interval(mpfr(0), max(u.minus(self.lo), self.hi))

    def __pow__(self, n):
        if not isinstance(n, (int, mpz)):
            return NotImplemented
        n = int(n)
        if n < 0:
            return 1 / self.__pow__(-n)
        d, u = _directed(current_precision())
        if self.lo >= 0 or n % 2 == 1:
            return Interval(d.pow(self.lo, n), u.pow(self.hi, n))
        if self.hi <= 0:
            # even power of a negative interval: decreasing in the argument
            return Interval(d.pow(self.hi, n), u.pow(self.lo, n))
        return Interval(mpfr(0), max(u.pow(self.lo, n), u.pow(self.hi, n)))

    def sqrt(self) -> "Interval":
        if self.lo < 0:
            raise ValueError("sqrt of interval with negative endpoint")
        d, u = _directed(current_precision())
        return Interval(d.sqrt(self.lo), u.sqrt(self.hi))

    # -- certified comparisons ----------------------------------------

    def _cmp(self, other):
        """-1, 0 (identical thin), +1, or raise."""
        o = Interval._lift(other)
        if o is None:
            raise TypeError(f"cannot compare Interval with {type(other).__name__}")
        if self.hi < o.lo:
            return -1
        if self.lo > o.hi:
            return 1
        if self.is_thin() and o.is_thin() and self.lo == o.lo:
            return 0
        raise AmbiguousPrecision(f"comparison of {self!r} and {o!r} undecidable")

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __eq__(self, other):
        if other is self:
            return True
        try:
            return self._cmp(other) == 0
        except TypeError:
            return NotImplemented

    def __hash__(self):
        raise TypeError("Interval is unhashable")


# -- interval elementary functions -------------------------------------


def pi_interval() -> Interval:
    d, u = _directed(current_precision())
    return Interval(d.const_pi(), u.const_pi())


def e_interval() -> Interval:
    d, u = _directed(current_precision())
    return Interval(d.exp(1), u.exp(1))


def phi_interval() -> Interval:
    # (1 + sqrt 5) / 2
    d, u = _directed(current_precision())
    return Interval(d.div(d.add(1, d.sqrt(5)), 2), u.div(u.add(1, u.sqrt(5)), 2))


def atan_interval(x: Interval) -> Interval:
    d, u = _directed(current_precision())
    return Interval(d.atan(x.lo), u.atan(x.hi))


def tan_interval(x: Interval) -> Interval:
    # valid only strictly inside (-pi/2, pi/2); all uses are pi/q with q >= 3
    d, u = _directed(current_precision())
    return Interval(d.tan(x.lo), u.tan(x.hi))


def log_interval(x: Interval) -> Interval:
    if x.lo <= 0:
        raise ValueError("log of interval touching zero")
    d, u = _directed(current_precision())
    return Interval(d.log(x.lo), u.log(x.hi))


def exp_interval(x: Interval) -> Interval:
    d, u = _directed(current_precision())
    return Interval(d.exp(x.lo), u.exp(x.hi))


def pow_interval(base: Interval, exponent) -> Interval:
    """base ** exponent for base > 0; exponent integer or exact rational or Interval."""
    if isinstance(exponent, (int, mpz)):
        return base ** int(exponent)
    q = _rationalize(exponent)
    if q is not None and q.denominator == 1:
        return base ** int(q)
    e_iv = exponent if isinstance(exponent, Interval) else Interval.exact(q)
    return exp_interval(e_iv * log_interval(base))


# -- named base constants ----------------------------------------------


class Constant:
    """A named irrational constant usable as a billiard base."""

    __slots__ = ("name", "_maker")

    def __init__(self, name, maker):
        self.name = name
        self._maker = maker

    def interval(self) -> Interval:
        return self._maker()

    def __repr__(self):
        return self.name

    def __str__(self):
        return self.name


PI = Constant("pi", pi_interval)
E = Constant("e", e_interval)
PHI = Constant("phi", phi_interval)

NAMED_CONSTANTS = {"pi": PI, "e": E, "phi": PHI}


def parse_base(text: str):
    """Parse a CLI base: named constant or exact decimal/fraction literal."""
    key = text.strip().lower()
    if key in NAMED_CONSTANTS:
        return NAMED_CONSTANTS[key]
    if "/" in key:
        num, den = key.split("/", 1)
        return mpq(mpz(num), mpz(den))
    if "." in key:
        whole, frac = key.split(".", 1)
        scale = mpz(10) ** len(frac)
        sign = -1 if whole.startswith("-") else 1
        whole = whole.lstrip("+-") or "0"
        return mpq(sign * (mpz(whole) * scale + mpz(frac or "0")), scale)
    return mpq(mpz(key))


def is_exact(x) -> bool:
    return _rationalize(x) is not None


def lift(x) -> Interval:
    """Enclose an exact number, Constant, or Interval at the working precision."""
    if isinstance(x, Interval):
        return x
    if isinstance(x, Constant):
        return x.interval()
    return Interval.exact(x)


# -- escalation driver --------------------------------------------------


def with_escalation(fn, start_bits: int, cap_bits: int = PRECISION_CAP):
    """Run ``fn()`` under increasing precision until its predicates resolve.

    ``fn`` must rebuild all interval quantities from exact data on each call;
    reusing intervals from a lower precision would defeat the retry.
    """
    bits = max(int(start_bits), 8)
    last = None
    while bits <= cap_bits:
        with working_precision(bits):
            try:
                return fn()
            except AmbiguousPrecision as exc:
                last = exc
                bits *= 2
    raise PrecisionExhausted(
        f"predicate unresolved at cap {cap_bits} bits: {last}"
    ) from last


# -- misc exact helpers --------------------------------------------------


def exact_sqrt(q) -> mpq | None:
    """Rational square root of a rational, or None if not a perfect square."""
    q = _rationalize(q)
    if q is None or q < 0:
        return None
    num, den = mpz(q.numerator), mpz(q.denominator)
    rn, rd = gmpy2.isqrt(num), gmpy2.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return mpq(rn, rd)
    return None


def certified_floor(x) -> int:
    q = _rationalize(x)
    if q is not None:
        return int(q.numerator // q.denominator)
    if isinstance(x, Interval):
        return x.floor()
    raise TypeError(f"no floor for {type(x).__name__}")


def sign(x) -> int:
    q = _rationalize(x)
    if q is not None:
        return (q > 0) - (q < 0)
    if isinstance(x, Interval):
        return x.sign()
    raise TypeError(f"no sign for {type(x).__name__}")


def to_decimal_string(x, digits: int = 17) -> str:
    """Decimal rendering for reports; exact values keep p/q form elsewhere."""
    q = _rationalize(x)
    if q is not None:
        return f"{gmpy2.mpfr(q, 64):.{digits}g}"
    if isinstance(x, Interval):
        return f"{x.mid():.{digits}g}"
    return f"{x:.{digits}g}"
