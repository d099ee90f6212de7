import pytest
from gmpy2 import mpq, mpfr
from hypothesis import given
from hypothesis import strategies as st

from galperin.numeric import (
    AmbiguousPrecision,
    E,
    Interval,
    PHI,
    PI,
    PrecisionExhausted,
    atan_interval,
    exact_sqrt,
    lift,
    log_interval,
    parse_base,
    pi_interval,
    pow_interval,
    tan_interval,
    with_escalation,
    working_precision,
)

rationals = st.fractions(min_value=-1000, max_value=1000)


def as_q(fr):
    return mpq(fr.numerator, fr.denominator)


@given(rationals, rationals)
def test_interval_add_contains_exact(a, b):
    qa, qb = as_q(a), as_q(b)
    iv = Interval.exact(qa) + Interval.exact(qb)
    assert iv.lo <= qa + qb <= iv.hi


@given(rationals, rationals)
def test_interval_mul_contains_exact(a, b):
    qa, qb = as_q(a), as_q(b)
    iv = Interval.exact(qa) * Interval.exact(qb)
    assert iv.lo <= qa * qb <= iv.hi


@given(rationals, rationals)
def test_interval_sub_neg_abs_contain_exact(a, b):
    qa, qb = as_q(a), as_q(b)
    assert (Interval.exact(qa) - Interval.exact(qb)).lo <= qa - qb
    neg = -Interval.exact(qa)
    assert neg.lo <= -qa <= neg.hi
    ab = abs(Interval.exact(qa))
    assert ab.lo <= abs(qa) <= ab.hi


@given(rationals, rationals)
def test_interval_div_contains_exact(a, b):
    qa, qb = as_q(a), as_q(b)
    if qb == 0:
        return
    iv = Interval.exact(qa) / Interval.exact(qb)
    assert iv.lo <= qa / qb <= iv.hi


@given(rationals, st.integers(min_value=0, max_value=8))
def test_interval_pow_contains_exact(a, n):
    qa = as_q(a)
    iv = Interval.exact(qa) ** n
    assert iv.lo <= qa ** n <= iv.hi


def test_negation_keeps_precision():
    with working_precision(200):
        x = Interval.exact(mpq(1, 3))
        y = -x
        width = y.width()
    assert width < mpfr(2) ** -150


def test_certified_comparisons():
    a = Interval.exact(mpq(1, 3))
    b = Interval.exact(mpq(2, 3))
    assert a < b and b > a
    wide_lo = Interval(mpfr("0.3"), mpfr("0.4"))
    wide_hi = Interval(mpfr("0.35"), mpfr("0.5"))
    with pytest.raises(AmbiguousPrecision):
        wide_lo < wide_hi  # noqa: B015


def test_certified_floor_and_sign():
    assert Interval.exact(mpq(7, 2)).floor() == 3
    assert Interval.exact(mpq(-7, 2)).floor() == -4
    assert Interval.exact(mpq(5)).sign() == 1
    assert Interval.exact(mpq(-5)).sign() == -1
    assert Interval.exact(0).sign() == 0
    straddle = Interval(mpfr(-1e-30), mpfr(1e-30))
    with pytest.raises(AmbiguousPrecision):
        straddle.sign()


def test_pi_enclosure_tightens():
    import math

    with working_precision(64):
        w64 = pi_interval().width()
    with working_precision(256):
        iv = pi_interval()
        w256 = iv.width()
        assert iv.lo < iv.hi
        assert float(iv.mid()) == pytest.approx(math.pi)
        assert mpfr("3.14159265358979") < iv.lo and iv.hi < mpfr("3.1415926535898")
    assert w256 < w64


def test_named_constants():
    with working_precision(128):
        assert float(PHI.interval().mid()) == pytest.approx(1.6180339887498949)
        assert float(E.interval().mid()) == pytest.approx(2.718281828459045)
        assert float(PI.interval().mid()) == pytest.approx(3.141592653589793)
        # phi^2 = phi + 1
        phi = PHI.interval()
        diff = phi * phi - phi - 1
        assert diff.lo <= 0 <= diff.hi


def test_elementary_functions_enclose():
    import math

    with working_precision(96):
        x = Interval.exact(mpq(1, 10))
        at = atan_interval(x)
        assert at.lo <= mpfr(math.atan(0.1)) <= at.hi or abs(float(at.mid()) - math.atan(0.1)) < 1e-15
        lg = log_interval(Interval.exact(mpq(5)))
        assert abs(float(lg.mid()) - math.log(5)) < 1e-15
        tn = tan_interval(Interval.exact(mpq(1, 4)))
        assert abs(float(tn.mid()) - math.tan(0.25)) < 1e-15
        pw = pow_interval(Interval.exact(mpq(5, 2)), mpq(1, 2))
        assert abs(float(pw.mid()) ** 2 - 2.5) < 1e-12


def test_escalation_resolves_tight_floor():
    # floor of a value 2^-200 above an integer needs > 200 bits
    target = mpq(3) + mpq(1, 2 ** 200)

    def attempt():
        return Interval.exact(target).floor()

    assert with_escalation(attempt, start_bits=32) == 3


def test_escalation_cap_raises():
    def attempt():
        raise AmbiguousPrecision("never resolves")

    with pytest.raises(PrecisionExhausted):
        with_escalation(attempt, start_bits=32, cap_bits=128)


def test_parse_base():
    assert parse_base("10") == mpq(10)
    assert parse_base("3.7823797") == mpq(37823797, 10 ** 7)
    assert parse_base("7/2") == mpq(7, 2)
    assert parse_base("phi") is PHI
    assert parse_base("PI") is PI


def test_exact_sqrt():
    assert exact_sqrt(mpq(9, 4)) == mpq(3, 2)
    assert exact_sqrt(mpq(2)) is None
    assert exact_sqrt(mpq(10 ** 8)) == mpq(10 ** 4)


def test_lift_constant_and_rational():
    with working_precision(80):
        assert lift(mpq(3, 7)).lo <= mpq(3, 7) <= lift(mpq(3, 7)).hi
        iv = lift(PHI)
        assert iv.lo < 1.62 and iv.hi > 1.61
