"""Prime enumeration, factorization and the semigroups N_A generated by finite prime sets."""

from __future__ import annotations

import heapq
import math
from collections.abc import Iterable, Iterator, Mapping

import numpy as np

SIEVE_CAP = 10**7
_SEGMENT = 1 << 18


class SieveLimitError(ValueError):
    """Requested prime range exceeds the desk-scale sieve cap."""


def _small_sieve(limit: int) -> np.ndarray:
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for i in range(2, math.isqrt(limit) + 1):
        if flags[i]:
            flags[i * i :: i] = False
    return np.flatnonzero(flags)


def primes_upto(limit: int) -> np.ndarray:
    """All primes ``<= limit`` in increasing order (segmented sieve of Eratosthenes)."""
    if limit > SIEVE_CAP:
        raise SieveLimitError(f"prime range {limit} exceeds sieve cap {SIEVE_CAP}")
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    root = math.isqrt(limit)
    base = _small_sieve(root)
    chunks = [base]
    low = root + 1
    while low <= limit:
        high = min(low + _SEGMENT, limit + 1)
        seg = np.ones(high - low, dtype=bool)
        for p in base:
            start = max(p * p, -(-low // p) * p)
            if start >= high:
                continue
            seg[start - low :: p] = False
        chunks.append(np.flatnonzero(seg) + low)
        low = high
    return np.concatenate(chunks).astype(np.int64)


def first_primes(k: int) -> np.ndarray:
    """The first ``k`` primes."""
    if k <= 0:
        return np.zeros(0, dtype=np.int64)
    # Rosser's bound p_k < k (ln k + ln ln k) for k >= 6
    bound = 15 if k < 6 else int(k * (math.log(k) + math.log(math.log(k)))) + 1
    return primes_upto(bound)[:k]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of a positive integer by trial division."""
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def euler_phi_prime_power(p: int, m: int) -> int:
    """|(Z/p^m)^*|, with the convention phi(p^0) = 1."""
    return 1 if m == 0 else (p - 1) * p ** (m - 1)


def iter_semigroup(
    primes: Iterable[int],
    caps: Mapping[int, int] | None = None,
    limit: int | None = None,
) -> Iterator[tuple[int, tuple[int, ...]]]:
    """Yield ``(n, exponents)`` for n in N_A in nondecreasing order.

    ``exponents`` is aligned with ``sorted(primes)``. At least one of ``caps``
    (per-prime exponent bound) or ``limit`` (bound on n) must be given.
    """
    ps = sorted(set(primes))
    if caps is None and limit is None:
        raise ValueError("N_A is infinite: give caps or limit")
    cap = [caps[p] if caps is not None else None for p in ps]
    # each n is generated once: only multiply by primes >= its largest prime factor
    heap: list[tuple[int, tuple[int, ...], int]] = [(1, (0,) * len(ps), 0)]
    while heap:
        n, exps, lo = heapq.heappop(heap)
        yield n, exps
        for i in range(lo, len(ps)):
            if cap[i] is not None and exps[i] >= cap[i]:
                continue
            nn = n * ps[i]
            if limit is not None and nn > limit:
                continue
            e = list(exps)
            e[i] += 1
            heapq.heappush(heap, (nn, tuple(e), i))
