import itertools

import pytest

from adelic.primes import (
    SieveLimitError,
    factorize,
    first_primes,
    iter_semigroup,
    primes_upto,
)

from conftest import brute_is_prime


@pytest.mark.parametrize("limit", [0, 1, 2, 3, 10, 97, 1000, 4099])
def test_sieve_matches_trial_division(limit):
    assert primes_upto(limit).tolist() == [n for n in range(limit + 1) if brute_is_prime(n)]


def test_sieve_segments_agree_with_small_sieve():
    big = primes_upto(600_000)
    assert len(big) == 49098
    assert big[-1] == 599999
    assert primes_upto(10**6).size == 78498


def test_sieve_cap():
    with pytest.raises(SieveLimitError):
        primes_upto(10**7 + 1)


def test_first_primes():
    assert first_primes(10).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert first_primes(1).tolist() == [2]
    assert first_primes(78498)[-1] == 999983


@pytest.mark.parametrize("n", [1, 2, 12, 97, 360, 2**10 * 3**4, 999983 * 7])
def test_factorize_reconstructs(n):
    f = factorize(n)
    prod = 1
    for p, e in f.items():
        assert brute_is_prime(p) and e > 0
        prod *= p**e
    assert prod == n


def test_semigroup_by_limit_is_sorted_and_complete():
    A = (2, 3, 5)
    got = [n for n, _ in iter_semigroup(A, limit=500)]
    brute = sorted(
        2**a * 3**b * 5**c
        for a, b, c in itertools.product(range(10), range(7), range(5))
        if 2**a * 3**b * 5**c <= 500
    )
    assert got == brute


def test_semigroup_caps_and_exponents():
    got = list(iter_semigroup([3, 2], caps={2: 2, 3: 1}))
    assert [n for n, _ in got] == [1, 2, 3, 4, 6, 12]
    for n, (e2, e3) in got:
        assert n == 2**e2 * 3**e3


def test_semigroup_needs_a_bound():
    with pytest.raises(ValueError):
        next(iter_semigroup([2]))
