from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from adelic.arith import (
    PAdicApprox,
    PrecisionError,
    RationalScalar,
    mul,
    p_abs,
    parse_padic,
    scale,
)

PRIMES = [2, 3, 5, 7, 11]


def test_p_abs_examples():
    assert p_abs(PAdicApprox(3, 0, 1, 2)) == 1
    assert p_abs(PAdicApprox(2, 3)) == Fraction(1, 8)
    assert p_abs(PAdicApprox(5, -2)) == 25


def test_p_abs_deep_is_undetermined():
    with pytest.raises(PrecisionError, match="valuation not determined"):
        p_abs(PAdicApprox.deep_from(2, 4))


def test_scale_examples():
    assert scale(PAdicApprox(2, 0, 2, 1), 2) == PAdicApprox(2, 1, 2, 1)
    assert scale(PAdicApprox(3, 1, 1, 2), Fraction(1, 3)) == PAdicApprox(3, 0, 1, 2)
    # modular oracle: 2 * 3 = 6 = 1 mod 5
    assert scale(PAdicApprox(5, 0, 1, 2), 3) == PAdicApprox(5, 0, 1, (2 * 3) % 5)
    assert scale(PAdicApprox.deep_from(5, 2), Fraction(1, 5)) == PAdicApprox.deep_from(5, 1)


def test_scale_unit_part_of_denominator():
    # x = 1 mod 9, q = 1/2: unit residue 1 * 2^-1 = 5 mod 9
    assert scale(PAdicApprox(3, 0, 2, 1), Fraction(1, 2)) == PAdicApprox(3, 0, 2, 5)


def test_mul_examples():
    assert mul(PAdicApprox(2, 1, 1, 1), PAdicApprox(2, 0, 1, 1)) == PAdicApprox(2, 1, 1, 1)
    assert mul(PAdicApprox(3, 0, 2, 2), PAdicApprox(3, 2, 2, 4)) == PAdicApprox(3, 2, 2, 8)
    assert mul(PAdicApprox(2, 1, 2, 3), PAdicApprox.deep_from(2, 4)) == PAdicApprox.deep_from(2, 5)


def test_mul_coarser_precision_and_prime_mismatch():
    assert mul(PAdicApprox(3, 0, 1, 2), PAdicApprox(3, 0, 2, 4)) == PAdicApprox(3, 0, 1, 2)
    with pytest.raises(ValueError, match="mismatch"):
        mul(PAdicApprox(2, 0), PAdicApprox(3, 0))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(p=3, v=0, m=1, u=3),  # not coprime
        dict(p=3, v=0, m=1, u=0),
        dict(p=2, v=0, m=2, u=5),  # out of range
        dict(p=2, v=1, m=0, u=1),
        dict(p=2, v=3, m=1, u=1, deep=True),
    ],
)
def test_invalid_approximations(kwargs):
    with pytest.raises(ValueError):
        PAdicApprox(**kwargs)


def test_residue_cap_is_a_hard_error():
    PAdicApprox(2, 0, 64, 1)
    with pytest.raises(OverflowError):
        PAdicApprox(2, 0, 65, 1)
    with pytest.raises(OverflowError):
        RationalScalar(3).unit_part_mod(3, 41)


def test_rational_scalar_factorization():
    q = RationalScalar.of(Fraction(12, 35))
    assert q.factorization == {2: 2, 3: 1, 5: -1, 7: -1}
    assert RationalScalar.of(1).factorization == {}
    assert RationalScalar.of("6/4") == RationalScalar(3, 2)
    with pytest.raises(ValueError):
        RationalScalar(-1, 2)


def test_from_rational():
    assert PAdicApprox.from_rational(3, Fraction(18, 5), 2) == PAdicApprox(3, 2, 2, 2 * pow(5, -1, 9) % 9)
    assert PAdicApprox.from_rational(2, -1, 3) == PAdicApprox(2, 0, 3, 7)
    assert PAdicApprox.from_rational(7, 0, 1).deep


@pytest.mark.parametrize(
    "a",
    [PAdicApprox(3, 1, 1, 2), PAdicApprox(2, -4), PAdicApprox.deep_from(5, 3), PAdicApprox(7, 0, 2, 48)],
)
def test_text_rendering_roundtrip(a):
    assert parse_padic(str(a)) == a


def test_text_rendering_format():
    assert str(PAdicApprox(3, 1, 2, 4)) == "3^1 * 4 (mod 3^2)"


# ---------------------------------------------------------------- properties


@st.composite
def approximations(draw, p=None):
    p = p or draw(st.sampled_from(PRIMES))
    if draw(st.booleans()) and draw(st.booleans()):
        return PAdicApprox.deep_from(p, draw(st.integers(-5, 10)))
    m = draw(st.integers(0, 4))
    v = draw(st.integers(-5, 10))
    if m == 0:
        return PAdicApprox(p, v)
    u = draw(st.integers(1, p**m - 1).filter(lambda u: u % p))
    return PAdicApprox(p, v, m, u)


scalars = st.builds(RationalScalar, st.integers(1, 500), st.integers(1, 500))


@given(approximations(), scalars, scalars)
def test_scale_composes(a, q1, q2):
    assert scale(scale(a, q1), q2) == scale(a, q1 * q2)


@given(approximations(), scalars)
def test_scale_inverse_roundtrip(a, q):
    assert scale(scale(a, q), q.inverse()) == a


@given(st.sampled_from(PRIMES).flatmap(lambda p: st.tuples(approximations(p), approximations(p))))
def test_abs_is_multiplicative(pair):
    a, b = pair
    if a.deep or b.deep:
        assert mul(a, b).deep
    else:
        assert p_abs(mul(a, b)) == p_abs(a) * p_abs(b)


@given(st.sampled_from(PRIMES), st.fractions().filter(lambda x: x != 0), st.integers(1, 4))
def test_from_rational_commutes_with_scaling(p, x, m):
    q = RationalScalar(7, 3)
    assert scale(PAdicApprox.from_rational(p, x, m), q) == PAdicApprox.from_rational(p, x * Fraction(7, 3), m)
