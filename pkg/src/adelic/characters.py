"""Finite-level characters of prod_{p in B} Z_p^*, extended by zero.

A local character at ``p^m`` is stored as discrete-log exponents: for odd p one
exponent ``c`` against the smallest primitive root ``g`` mod ``p^m``
(``chi(g^k) = exp(2 pi i c k / phi(p^m))``); for p = 2 the pair ``(c_-1, c_5)``
against the generators -1 and 5 of ``(Z/2^m)^*``. Values are kept as exact
phases in Q/Z and only turned into complex numbers at the evaluation boundary.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import product

import numpy as np

from .arith import PAdicApprox, PrecisionError
from .measure import CylinderFunction, CylinderSet, LocalCell
from .primes import euler_phi_prime_power, factorize, is_prime

# discrete-log tables are dense arrays over Z/p^m
TABLE_CAP = 10**7


def root_of_unity(phase: Fraction) -> complex:
    """``exp(2 pi i phase)``, exact for the real and imaginary axes."""
    phase %= 1
    exact = {Fraction(0): 1 + 0j, Fraction(1, 4): 1j, Fraction(1, 2): -1 + 0j, Fraction(3, 4): -1j}
    if phase in exact:
        return exact[phase]
    return cmath.exp(2j * math.pi * phase.numerator / phase.denominator)


def smallest_primitive_root(p: int, m: int) -> int:
    """Smallest positive generator of the cyclic group (Z/p^m)^*, p odd."""
    mod, order = p**m, euler_phi_prime_power(p, m)
    cofactors = [order // q for q in factorize(order)]
    for g in range(2, mod):
        if g % p and all(pow(g, c, mod) != 1 for c in cofactors):
            return g
    raise ValueError(f"no primitive root mod {p}^{m}")


def group_shape(p: int, m: int) -> tuple[int, ...]:
    """Orders of the cyclic factors used for the exponents at ``p^m``."""
    if p != 2:
        return (euler_phi_prime_power(p, m),)
    return (2 if m >= 2 else 1, 2 ** (m - 2) if m >= 3 else 1)


@lru_cache(maxsize=256)
def _log_tables(p: int, m: int) -> tuple[np.ndarray, ...]:
    """For each cyclic factor, an array over Z/p^m of discrete logs (-1 at non-units)."""
    mod = p**m
    if mod > TABLE_CAP:
        raise OverflowError(f"character level {p}^{m} exceeds table cap")
    if p != 2:
        g = smallest_primitive_root(p, m) if mod > 2 else 1
        logs = np.full(mod, -1, dtype=np.int64)
        x = 1
        for k in range(euler_phi_prime_power(p, m)):
            logs[x] = k
            x = x * g % mod
        return (logs,)
    a_log = np.full(mod, -1, dtype=np.int64)
    b_log = np.full(mod, -1, dtype=np.int64)
    for b in range(group_shape(2, m)[1]):
        x = pow(5, b, mod)
        for a in range(group_shape(2, m)[0]):
            y = x if a == 0 else (-x) % mod
            a_log[y], b_log[y] = a, b
    if m == 1:
        a_log[1] = b_log[1] = 0
    return a_log, b_log


@dataclass(frozen=True)
class LocalUnitCharacter:
    p: int
    m: int
    exps: tuple[int, ...]

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.m < 1:
            raise ValueError("character level must be >= 1")
        shape = group_shape(self.p, self.m)
        exps = tuple(self.exps) + (0,) * (len(shape) - len(self.exps))
        if len(exps) != len(shape):
            raise ValueError(f"expected {len(shape)} exponents at {self.p}^{self.m}, got {self.exps}")
        object.__setattr__(self, "exps", tuple(e % n for e, n in zip(exps, shape)))

    @property
    def modulus(self) -> int:
        return self.p**self.m

    @property
    def is_trivial(self) -> bool:
        return not any(self.exps)

    @property
    def exponent(self) -> int:
        """Common denominator of the phases (the exponent of the local group)."""
        return math.lcm(*group_shape(self.p, self.m))

    @cached_property
    def phase_table(self) -> np.ndarray:
        """Numerators of phases over :attr:`exponent`, indexed by residue; -1 at non-units."""
        L = self.exponent
        tables = _log_tables(self.p, self.m)
        out = np.zeros(self.modulus, dtype=np.int64)
        for c, n, logs in zip(self.exps, group_shape(self.p, self.m), tables):
            out += c * logs * (L // n)
        out %= L
        out[tables[0] < 0] = -1
        return out

    def phase(self, r: int) -> Fraction | None:
        """Phase of the value at the residue ``r``; ``None`` when ``p | r``."""
        k = int(self.phase_table[r % self.modulus])
        return None if k < 0 else Fraction(k, self.exponent)

    def __call__(self, r: int) -> complex:
        ph = self.phase(r)
        return 0j if ph is None else root_of_unity(ph)

    def __str__(self) -> str:
        shown = self.exps if self.p == 2 and self.m >= 3 else self.exps[:1]
        return f"{self.p}^{self.m}:" + ",".join(map(str, shown))


@dataclass(frozen=True)
class ProductCharacter:
    """``chi(x) = prod_p chi_p(x_p)`` when every x_p (p in B) is a unit, and 0 otherwise.

    The empty product is the trivial character of modulus 1.
    """

    locals: tuple[LocalUnitCharacter, ...] = ()

    def __post_init__(self):
        locs = tuple(sorted(self.locals, key=lambda c: c.p))
        if len({c.p for c in locs}) != len(locs):
            raise ValueError("one local character per prime")
        object.__setattr__(self, "locals", locs)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(c.p for c in self.locals)

    @property
    def levels(self) -> dict[int, int]:
        return {c.p: c.m for c in self.locals}

    @property
    def modulus(self) -> int:
        return math.prod(c.modulus for c in self.locals)

    @property
    def is_trivial(self) -> bool:
        return all(c.is_trivial for c in self.locals)

    @property
    def exponent(self) -> int:
        return math.lcm(1, *(c.exponent for c in self.locals))

    def phase_at_integer(self, n: int) -> Fraction | None:
        total = Fraction(0)
        for c in self.locals:
            ph = c.phase(n)
            if ph is None:
                return None
            total += ph
        return total % 1

    def __str__(self) -> str:
        return ";".join(map(str, self.locals)) if self.locals else "1"


def parse_character(text: str) -> ProductCharacter:
    """Parse ``"p^m:c[,c5];..."``; ``"1"`` (or empty) is the trivial character mod 1."""
    text = text.strip()
    if text in ("", "1", "trivial"):
        return ProductCharacter()
    locs = []
    for part in text.split(";"):
        try:
            head, exps = part.split(":")
            p, m = (int(s) for s in head.split("^"))
            locs.append(LocalUnitCharacter(p, m, tuple(int(e) for e in exps.split(","))))
        except ValueError as exc:
            raise ValueError(f"bad character spec {part!r}: {exc}") from None
    return ProductCharacter(tuple(locs))


def eval_at_integer(chi: ProductCharacter, n: int) -> complex:
    if n < 1:
        raise ValueError("characters are evaluated at positive integers")
    ph = chi.phase_at_integer(n)
    return 0j if ph is None else root_of_unity(ph)


def values_at_integers(chi: ProductCharacter, ns: np.ndarray) -> np.ndarray:
    """Vectorized :func:`eval_at_integer` over an integer array."""
    ns = np.asarray(ns, dtype=np.int64)
    L = chi.exponent
    num = np.zeros(ns.shape, dtype=np.int64)
    zero = np.zeros(ns.shape, dtype=bool)
    for c in chi.locals:
        k = c.phase_table[ns % c.modulus]
        zero |= k < 0
        num = (num + k * (L // c.exponent)) % L
    roots = np.array([root_of_unity(Fraction(k, L)) for k in range(L)])
    out = roots[num]
    out[zero] = 0
    return out


def eval_at_point(chi: ProductCharacter, x: Mapping[int, PAdicApprox]) -> complex:
    total = Fraction(0)
    for c in chi.locals:
        if c.p not in x:
            raise PrecisionError(f"point has no coordinate at {c.p}")
        xp = x[c.p]
        if xp.deep:
            if xp.v >= 1:
                return 0j
            raise PrecisionError(f"{xp}: unit or not is undetermined")
        if xp.v != 0:
            return 0j
        if xp.m < c.m:
            raise PrecisionError(f"{xp} has precision below {c.p}^{c.m}")
        total += c.phase(xp.u)
    return root_of_unity(total)


def enumerate_characters(B: Iterable[int], levels: Mapping[int, int]) -> list[ProductCharacter]:
    """All characters of ``prod_{p in B} (Z/p^{m_p})^*``, trivial first."""
    ps = sorted(set(B))
    for p in ps:
        if levels[p] < 1:
            raise ValueError("levels must be >= 1")
    axes = []
    for p in ps:
        shape = group_shape(p, levels[p])
        axes.append([(p, e) for e in product(*(range(n) for n in shape))])
    return [
        ProductCharacter(tuple(LocalUnitCharacter(p, levels[p], e) for p, e in choice))
        for choice in product(*axes)
    ]


def character_to_cylinder(chi: ProductCharacter) -> CylinderFunction:
    """``chi`` as a finite combination of unit-class indicators.

    A trivial local factor is the indicator of the whole unit shell.
    """
    per_prime = []
    for c in chi.locals:
        if c.is_trivial:
            per_prime.append([(LocalCell.shell(c.p, 0), Fraction(0))])
        else:
            per_prime.append(
                [(LocalCell.shell(c.p, 0, c.m, u), c.phase(u)) for u in range(1, c.modulus) if u % c.p]
            )
    terms = []
    for choice in product(*per_prime):
        X = CylinderSet({cell.p: (cell,) for cell, _ in choice})
        terms.append((root_of_unity(sum((ph for _, ph in choice), Fraction(0))), X))
    return CylinderFunction(tuple(terms))
