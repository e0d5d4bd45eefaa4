"""Finite-precision p-adic numbers and the diagonal action of positive rationals.

A :class:`PAdicApprox` records what is known about one coordinate ``x_p`` of a
finite adele: its valuation and its unit part modulo ``p^m``. Scaling by a
positive rational shifts valuations by the rational's local exponent and
multiplies the unit residue by its local unit part.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from .primes import factorize, is_prime

# residues live below p^m <= 2^64
RESIDUE_CAP = 1 << 64


class PrecisionError(ValueError):
    """The approximation does not determine the requested quantity."""


def _check_modulus(p: int, m: int) -> int:
    mod = p**m
    if mod > RESIDUE_CAP:
        raise OverflowError(f"residue modulus {p}^{m} exceeds the 64-bit precision cap")
    return mod


@dataclass(frozen=True)
class PAdicApprox:
    """``p^v * u (mod p^m)``, or ``DEEP(J)`` (valuation at least ``J``) when ``deep``.

    ``m = 0`` leaves the unit part unconstrained; then ``u`` is ``None``.
    """

    p: int
    v: int
    m: int = 0
    u: int | None = None
    deep: bool = False

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"{self.p} is not a prime")
        if self.m < 0:
            raise ValueError("precision m must be non-negative")
        if self.deep:
            if self.m != 0 or self.u is not None:
                raise ValueError("DEEP(J) carries no unit residue")
            return
        if self.m == 0:
            if self.u is not None:
                raise ValueError("unit residue given at precision 0")
            return
        mod = _check_modulus(self.p, self.m)
        if self.u is None or not 0 < self.u < mod or self.u % self.p == 0:
            raise ValueError(f"unit residue {self.u} invalid mod {self.p}^{self.m}")

    @classmethod
    def unit(cls, p: int, u: int, m: int) -> PAdicApprox:
        """A unit of Z_p known mod p^m; ``u`` is reduced."""
        return cls(p, 0, m, u % p**m if m else None)

    @classmethod
    def deep_from(cls, p: int, J: int) -> PAdicApprox:
        return cls(p, J, deep=True)

    @classmethod
    def from_rational(cls, p: int, x: Fraction | int, m: int, deep_cap: int = 64) -> PAdicApprox:
        """Image of a rational number; zero becomes ``DEEP(deep_cap)``."""
        x = Fraction(x)
        if x == 0:
            return cls.deep_from(p, deep_cap)
        num, den = abs(x.numerator), x.denominator
        v = 0
        while num % p == 0:
            num //= p
            v += 1
        while den % p == 0:
            den //= p
            v -= 1
        if m == 0:
            return cls(p, v)
        mod = _check_modulus(p, m)
        sign = -1 if x < 0 else 1
        return cls(p, v, m, (sign * num * pow(den, -1, mod)) % mod)

    @property
    def modulus(self) -> int:
        return self.p**self.m

    def with_precision(self, m: int) -> PAdicApprox:
        """Forget residue digits beyond ``m`` (``m`` must not exceed the current precision)."""
        if self.deep or m == self.m:
            return self
        if m > self.m:
            raise PrecisionError(f"cannot raise precision from {self.m} to {m}")
        return PAdicApprox(self.p, self.v, m, self.u % self.p**m if m else None)

    def __str__(self) -> str:
        if self.deep:
            return f"{self.p}^>={self.v}"
        if self.m == 0:
            return f"{self.p}^{self.v} * unit"
        return f"{self.p}^{self.v} * {self.u} (mod {self.p}^{self.m})"


_PADIC_RE = re.compile(
    r"^\s*(\d+)\^(?:(>=)(-?\d+)|(-?\d+)\s*\*\s*(?:unit|(\d+)\s*\(mod\s*\1\^(\d+)\)))\s*$"
)


def parse_padic(text: str) -> PAdicApprox:
    """Inverse of ``str(PAdicApprox)``."""
    mt = _PADIC_RE.match(text)
    if not mt:
        raise ValueError(f"cannot parse p-adic approximation {text!r}")
    p = int(mt.group(1))
    if mt.group(2):
        return PAdicApprox.deep_from(p, int(mt.group(3)))
    v = int(mt.group(4))
    if mt.group(5) is None:
        return PAdicApprox(p, v)
    return PAdicApprox(p, v, int(mt.group(6)), int(mt.group(5)))


@dataclass(frozen=True)
class RationalScalar:
    """A positive rational ``numerator/denominator`` in lowest terms."""

    numerator: int
    denominator: int = 1
    _fraction: Fraction = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.numerator <= 0 or self.denominator <= 0:
            raise ValueError("scalars must be positive rationals")
        fr = Fraction(self.numerator, self.denominator)
        object.__setattr__(self, "numerator", fr.numerator)
        object.__setattr__(self, "denominator", fr.denominator)
        object.__setattr__(self, "_fraction", fr)

    @classmethod
    def of(cls, q: RationalScalar | Fraction | int | str) -> RationalScalar:
        if isinstance(q, RationalScalar):
            return q
        fr = Fraction(q)
        return cls(fr.numerator, fr.denominator)

    @cached_property
    def factorization(self) -> dict[int, int]:
        """prime -> signed exponent; only nonzero exponents appear."""
        out = dict(factorize(self.numerator))
        for p, e in factorize(self.denominator).items():
            out[p] = -e
        return dict(sorted(out.items()))

    def exponent(self, p: int) -> int:
        return self.factorization.get(p, 0)

    def unit_part_mod(self, p: int, m: int) -> int:
        """The residue of ``q / p^{e_p(q)}`` modulo ``p^m``."""
        mod = _check_modulus(p, m)
        num, den = self.numerator, self.denominator
        while num % p == 0:
            num //= p
        while den % p == 0:
            den //= p
        return num * pow(den, -1, mod) % mod

    def inverse(self) -> RationalScalar:
        return RationalScalar(self.denominator, self.numerator)

    def __mul__(self, other: RationalScalar) -> RationalScalar:
        fr = self._fraction * RationalScalar.of(other)._fraction
        return RationalScalar(fr.numerator, fr.denominator)

    def __float__(self) -> float:
        return self.numerator / self.denominator

    def __str__(self) -> str:
        return str(self._fraction)


def p_abs(a: PAdicApprox) -> Fraction:
    """|a|_p = p^{-v} as an exact rational."""
    if a.deep:
        raise PrecisionError("valuation not determined at this precision")
    return Fraction(a.p) ** (-a.v)


def scale(a: PAdicApprox, q: RationalScalar | Fraction | int) -> PAdicApprox:
    """The coordinate of ``q * x`` given the coordinate ``a`` of ``x``."""
    q = RationalScalar.of(q)
    e = q.exponent(a.p)
    if a.deep:
        return PAdicApprox.deep_from(a.p, a.v + e)
    if a.m == 0:
        return PAdicApprox(a.p, a.v + e)
    return PAdicApprox(a.p, a.v + e, a.m, a.u * q.unit_part_mod(a.p, a.m) % a.modulus)


def mul(a: PAdicApprox, b: PAdicApprox) -> PAdicApprox:
    """Product of two approximations of the same prime, at the coarser precision."""
    if a.p != b.p:
        raise ValueError(f"prime mismatch: {a.p} vs {b.p}")
    if a.deep or b.deep:
        return PAdicApprox.deep_from(a.p, a.v + b.v)
    m = min(a.m, b.m)
    if m == 0:
        return PAdicApprox(a.p, a.v + b.v)
    mod = a.p**m
    return PAdicApprox(a.p, a.v + b.v, m, a.u * b.u % mod)


def check_prime(p: int) -> int:
    if not is_prime(p):
        raise ValueError(f"{p} is not a prime")
    return p
