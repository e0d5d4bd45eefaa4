"""The measures mu_beta on the finite adeles, evaluated on cylinder sets.

Locally mu_{beta,p} has density ``(1-p^-beta)/(1-p^-1) |a|_p^(beta-1)`` against
the Haar measure normalized on Z_p, so it is constant on each valuation shell
``p^j Z_p^*``. A shell of valuation ``j`` split into unit classes mod ``p^m``
therefore has mass ``(1-p^-beta) p^(-j beta) / phi(p^m)`` per class, and the
tail ``p^J Z_p`` has mass ``p^(-J beta)``. The global measure is the product
over primes; an unconstrained prime contributes the factor ``mu(Z_p) = 1``.
"""

from __future__ import annotations

import cmath
import math
import random
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import product

import numpy as np

from .arith import PAdicApprox, PrecisionError, RationalScalar, scale
from .certified import UNIT_ROUNDOFF, CertifiedValue
from .primes import euler_phi_prime_power, iter_semigroup, primes_upto

SCHEMA_VERSION = "v1"
SAMPLER_DEPTH = 64


class Ambient(str, Enum):
    R = "R"
    ADELES = "adeles"


@dataclass(frozen=True)
class LocalCell:
    """Shell ``v_p(x) = j`` with unit residue ``u mod p^m``, or ``TAIL(J) = {v_p(x) >= J}``."""

    p: int
    j: int
    m: int = 0
    u: int | None = None
    tail: bool = False

    def __post_init__(self):
        # the PAdicApprox constructor carries all residue validation
        self.as_padic()

    @classmethod
    def shell(cls, p: int, j: int, m: int = 0, u: int | None = None) -> LocalCell:
        return cls(p, j, m, u)

    @classmethod
    def tail_from(cls, p: int, J: int) -> LocalCell:
        return cls(p, J, tail=True)

    @classmethod
    def from_padic(cls, a: PAdicApprox) -> LocalCell:
        if a.deep:
            return cls.tail_from(a.p, a.v)
        return cls(a.p, a.v, a.m, a.u)

    def as_padic(self) -> PAdicApprox:
        return PAdicApprox(self.p, self.j, self.m, self.u, deep=self.tail)

    @property
    def depth(self) -> int:
        """Smallest valuation from which membership no longer depends on the residue."""
        return self.j if self.tail else self.j + 1

    def contains(self, x: PAdicApprox) -> bool:
        if x.p != self.p:
            raise ValueError(f"prime mismatch: {x.p} vs {self.p}")
        if self.tail:
            if x.deep and x.v < self.j:
                raise PrecisionError(f"{x} undecided against TAIL({self.j})")
            return x.v >= self.j
        if x.deep:
            if x.v <= self.j:
                raise PrecisionError(f"{x} undecided against shell {self.j}")
            return False
        if x.v != self.j:
            return False
        if self.m == 0:
            return True
        if x.m < self.m:
            raise PrecisionError(f"{x} has precision below {self.p}^{self.m}")
        return x.u % self.p**self.m == self.u

    def intersect(self, other: LocalCell) -> LocalCell | None:
        if self.tail and other.tail:
            return self if self.j >= other.j else other
        if self.tail or other.tail:
            t, s = (self, other) if self.tail else (other, self)
            return s if s.j >= t.j else None
        if self.j != other.j:
            return None
        lo, hi = (self, other) if self.m <= other.m else (other, self)
        if lo.m and hi.u % self.p**lo.m != lo.u:
            return None
        return hi

    def to_json(self) -> dict:
        if self.tail:
            return {"tail": self.j}
        d = {"j": self.j, "m": self.m}
        if self.u is not None:
            d["u"] = self.u
        return d

    @classmethod
    def from_json(cls, p: int, d: Mapping) -> LocalCell:
        if "tail" in d:
            return cls.tail_from(p, int(d["tail"]))
        u = d.get("u")
        return cls(p, int(d["j"]), int(d.get("m", 0)), None if u is None else int(u))

    def __str__(self) -> str:
        if self.tail:
            return f"TAIL_{self.p}({self.j})"
        res = "" if self.m == 0 else f", u={self.u} mod {self.p}^{self.m}"
        return f"[v_{self.p}={self.j}{res}]"


_TAIL0 = {}


def _tail0(p: int) -> LocalCell:
    if p not in _TAIL0:
        _TAIL0[p] = LocalCell.tail_from(p, 0)
    return _TAIL0[p]


@dataclass(frozen=True)
class CylinderSet:
    """Product over finitely many primes of disjoint unions of local cells.

    Primes without a constraint range over all of Z_p. An empty cell list at a
    prime makes the whole set empty.
    """

    constraints: tuple[tuple[int, tuple[LocalCell, ...]], ...] = ()
    ambient: Ambient = Ambient.R

    def __post_init__(self):
        items = self.constraints.items() if isinstance(self.constraints, Mapping) else self.constraints
        norm = tuple(sorted((int(p), tuple(cells)) for p, cells in items))
        object.__setattr__(self, "constraints", norm)
        object.__setattr__(self, "ambient", Ambient(self.ambient))
        for p, cells in norm:
            for c in cells:
                if c.p != p:
                    raise ValueError(f"cell {c} filed under prime {p}")
                if self.ambient is Ambient.R and c.j < 0:
                    raise ValueError(f"cell {c} leaves R; use the adeles ambient")
            for a in range(len(cells)):
                for b in range(a + 1, len(cells)):
                    if cells[a].intersect(cells[b]) is not None:
                        raise ValueError(f"cells {cells[a]} and {cells[b]} overlap")

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.constraints)

    def cells(self, p: int) -> tuple[LocalCell, ...] | None:
        for q, cells in self.constraints:
            if q == p:
                return cells
        return None

    @property
    def is_empty(self) -> bool:
        return any(not cells for _, cells in self.constraints)

    def contains(self, x: Mapping[int, PAdicApprox]) -> bool:
        for p, cells in self.constraints:
            if p not in x:
                raise PrecisionError(f"point has no coordinate at constrained prime {p}")
            if not any(c.contains(x[p]) for c in cells):
                return False
        # an unconstrained prime means x_p in Z_p, matching its measure factor 1
        constrained = dict(self.constraints)
        for p, xp in x.items():
            if p not in constrained and not _tail0(p).contains(xp):
                return False
        return True

    def intersect(self, other: CylinderSet) -> CylinderSet:
        mine, theirs = dict(self.constraints), dict(other.constraints)
        out = {}
        for p in sorted(set(mine) | set(theirs)):
            if p not in theirs:
                out[p] = mine[p]
            elif p not in mine:
                out[p] = theirs[p]
            else:
                out[p] = tuple(
                    c for a in mine[p] for b in theirs[p] if (c := a.intersect(b)) is not None
                )
        amb = Ambient.R if self.ambient is Ambient.R and other.ambient is Ambient.R else Ambient.ADELES
        return CylinderSet(out, amb)

    def restrict_to_R(self) -> CylinderSet:
        out = {}
        for p, cells in self.constraints:
            out[p] = tuple(c for cell in cells if (c := cell.intersect(_tail0(p))) is not None)
        return CylinderSet(out, Ambient.R)

    def to_json(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "ambient": self.ambient.value,
            "constraints": [{"p": p, "cells": [c.to_json() for c in cells]} for p, cells in self.constraints],
        }

    @classmethod
    def from_json(cls, d: Mapping) -> CylinderSet:
        version = d.get("version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported cylinder schema version {version!r}")
        cons = {int(c["p"]): tuple(LocalCell.from_json(int(c["p"]), cell) for cell in c["cells"]) for c in d["constraints"]}
        return cls(cons, Ambient(d.get("ambient", "R")))

    def __str__(self) -> str:
        if not self.constraints:
            return "R" if self.ambient is Ambient.R else "R(adeles)"
        return " x ".join("(" + " | ".join(map(str, cells)) + ")" for _, cells in self.constraints)


R_SET = CylinderSet()


@dataclass(frozen=True)
class CylinderFunction:
    """Finite complex combination of cylinder indicators.

    Sets may overlap; the value at a point is the sum of the coefficients of
    every set containing it.
    """

    terms: tuple[tuple[complex, CylinderSet], ...] = ()

    def __post_init__(self):
        kept = tuple((complex(c), X) for c, X in self.terms if c != 0 and not X.is_empty)
        object.__setattr__(self, "terms", kept)

    @classmethod
    def indicator(cls, X: CylinderSet, coef: complex = 1) -> CylinderFunction:
        return cls(((coef, X),))

    @classmethod
    def constant(cls, c: complex = 1) -> CylinderFunction:
        return cls(((c, R_SET),))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted({p for _, X in self.terms for p in X.primes}))

    @property
    def sup_bound(self) -> float:
        return math.fsum(abs(c) for c, _ in self.terms)

    def cells_at(self, p: int) -> list[LocalCell]:
        return [c for _, X in self.terms for c in (X.cells(p) or ())]

    def evaluate(self, x: Mapping[int, PAdicApprox]) -> complex:
        return sum((c for c, X in self.terms if X.contains(x)), 0j)

    def __call__(self, x: Mapping[int, PAdicApprox]) -> complex:
        return self.evaluate(x)

    def __add__(self, other: CylinderFunction) -> CylinderFunction:
        return CylinderFunction(self.terms + other.terms)

    def __sub__(self, other: CylinderFunction) -> CylinderFunction:
        return self + other.scaled(-1)

    def scaled(self, k: complex) -> CylinderFunction:
        return CylinderFunction(tuple((k * c, X) for c, X in self.terms))

    def conj(self) -> CylinderFunction:
        return CylinderFunction(tuple((c.conjugate(), X) for c, X in self.terms))

    def __mul__(self, other: CylinderFunction) -> CylinderFunction:
        """Pointwise product, on the common refinement of both term lists."""
        return CylinderFunction(
            tuple((a * b, X.intersect(Y)) for a, X in self.terms for b, Y in other.terms)
        )

    def map_sets(self, fn) -> CylinderFunction:
        return CylinderFunction(tuple((c, fn(X)) for c, X in self.terms))

    def to_json(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "terms": [{"coef": [c.real, c.imag], "set": X.to_json()} for c, X in self.terms],
        }

    @classmethod
    def from_json(cls, d: Mapping) -> CylinderFunction:
        if d.get("version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ValueError(f"unsupported cylinder schema version {d.get('version')!r}")
        return cls(tuple((complex(*t["coef"]), CylinderSet.from_json(t["set"])) for t in d["terms"]))


@dataclass(frozen=True)
class BetaMeasure:
    """mu_beta, computed in double precision."""

    beta: float
    precision: int = field(default=53)

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.precision != 53:
            raise NotImplementedError("only double precision (53 bits) is implemented")

    def shell_factor(self, p: int) -> float:
        """1 - p^-beta, the mass of the unit shell Z_p^*."""
        return -math.expm1(-self.beta * math.log(p))


def local_cell_measure(mu: BetaMeasure, c: LocalCell) -> float:
    if c.tail:
        return math.exp(-c.j * mu.beta * math.log(c.p))
    return mu.shell_factor(c.p) * math.exp(-c.j * mu.beta * math.log(c.p)) / euler_phi_prime_power(c.p, c.m)


def cylinder_measure(mu: BetaMeasure, X: CylinderSet) -> float:
    out = 1.0
    for _, cells in X.constraints:
        out *= math.fsum(local_cell_measure(mu, c) for c in cells)
    return out


def _scale_cell(c: LocalCell, q: RationalScalar) -> LocalCell:
    return LocalCell.from_padic(scale(c.as_padic(), q))


def scale_set(X: CylinderSet, q: RationalScalar | int | str) -> CylinderSet:
    """The set ``q^{-1} X = {x : q x in X}``.

    Primes of ``q`` left unconstrained by ``X`` pick up the image of Z_p, so
    ``scale_set(R, q)`` is ``prod_p p^{-e_p(q)} Z_p``.
    """
    q = RationalScalar.of(q)
    qinv = q.inverse()
    cons = dict(X.constraints)
    for p in q.factorization:
        cons.setdefault(p, (_tail0(p),))
    out = {p: tuple(_scale_cell(c, qinv) for c in cells) for p, cells in cons.items()}
    negative = any(c.j < 0 for cells in out.values() for c in cells)
    amb = Ambient.ADELES if negative or X.ambient is Ambient.ADELES else Ambient.R
    return CylinderSet(out, amb)


def check_scaling_law(mu: BetaMeasure, X: CylinderSet, q) -> tuple[float, float, float]:
    """``(mu(q^-1 X), q^beta mu(X), |difference|)``."""
    q = RationalScalar.of(q)
    lhs = cylinder_measure(mu, scale_set(X, q))
    rhs = float(q) ** mu.beta * cylinder_measure(mu, X)
    return lhs, rhs, abs(lhs - rhs)


def zeta_A(A: Iterable[int], s: complex) -> complex:
    """The finite Euler product ``prod_{p in A} (1 - p^-s)^-1``."""
    if complex(s).real <= 0:
        raise ValueError(f"zeta_A needs Re s > 0, got {s}")
    out = 1.0 + 0j
    for p in sorted(set(A)):
        denom = 1 - cmath.exp(-s * math.log(p))
        if denom == 0:
            raise ZeroDivisionError(f"pole of zeta_A at s={s} (p={p})")
        out /= denom
    return out if complex(s).imag != 0 else out.real


def zeta_A_series(A: Iterable[int], s: complex, N: int) -> CertifiedValue:
    """``sum_{n in N_A, n <= N} n^-s`` with a certified bound on the omitted tail.

    Rankin's trick: for 0 < sigma < Re s the tail is at most
    ``N^(sigma - Re s) * zeta_A(sigma)``; the bound is minimized over a grid of sigma.
    """
    A = sorted(set(A))
    sr = complex(s).real
    terms = [cmath.exp(-s * math.log(n)) for n, _ in iter_semigroup(A, limit=N)]
    total = complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
    if not A:
        return CertifiedValue(total, 0.0)
    tail = min(
        N ** (sig - sr) * zeta_A(A, sig) for sig in (sr * k / 32 for k in range(1, 32))
    )
    rounding = 4 * UNIT_ROUNDOFF * len(terms) * math.fsum(abs(t) for t in terms)
    return CertifiedValue(total, tail + rounding)


def mu_W_truncated(beta: float, x_max: int) -> float:
    """``prod_{p <= x_max} (1 - p^-beta)``, decreasing in x_max towards mu_beta(W)."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    ps = primes_upto(x_max).astype(float)
    return math.exp(math.fsum(np.log1p(-(ps**-beta)).tolist()))


def mu_W_tail_bound(beta: float, x: int) -> float:
    """Bound on ``|prod_{p<=x}(1-p^-beta) - 1/zeta(beta)|`` relative to the partial product.

    Uses ``1 - prod_{p>x}(1-p^-beta) <= sum_{n>x} n^-beta <= x^(1-beta)/(beta-1)``.
    Infinite for beta <= 1.
    """
    if beta <= 1:
        return math.inf
    return x ** (1 - beta) / (beta - 1)


def zeta_reference(s: float, n: int = 60) -> float:
    """zeta(s) for real s > 0, s != 1, from the alternating eta series (Borwein's acceleration).

    Independent of any Euler product; the integer weights are exact.
    """
    if s == 1:
        raise ZeroDivisionError("pole of zeta at s=1")
    acc, d = Fraction(0), []
    for i in range(n + 1):
        acc += Fraction(math.factorial(n + i - 1) * 4**i * n, math.factorial(n - i) * math.factorial(2 * i))
        d.append(acc)
    dn = d[n]
    eta = -math.fsum((-1) ** k * float((d[k] - dn) / dn) / (k + 1) ** s for k in range(n))
    return eta / (1 - 2 ** (1 - s))


# ---------------------------------------------------------------- sampling


@dataclass(frozen=True)
class SampleBatch:
    """Samples ``start .. start+count-1`` of mu_beta restricted to the primes of ``levels``.

    ``valuation`` is capped at SAMPLER_DEPTH, where ``deep`` is set. ``residue``
    is the unit residue mod p^m (0 when deep or m == 0).
    """

    levels: dict[int, int]
    valuation: dict[int, np.ndarray]
    deep: dict[int, np.ndarray]
    residue: dict[int, np.ndarray]

    def __len__(self) -> int:
        return len(next(iter(self.valuation.values()))) if self.valuation else 0

    def point(self, i: int) -> dict[int, PAdicApprox]:
        out = {}
        for p, m in self.levels.items():
            if self.deep[p][i]:
                out[p] = PAdicApprox.deep_from(p, SAMPLER_DEPTH)
            elif m == 0:
                out[p] = PAdicApprox(p, int(self.valuation[p][i]))
            else:
                out[p] = PAdicApprox(p, int(self.valuation[p][i]), m, int(self.residue[p][i]))
        return out

    def indicator(self, X: CylinderSet) -> np.ndarray:
        """Vectorized membership of every sample in ``X``."""
        hit = np.ones(len(self), dtype=bool)
        for p, cells in X.constraints:
            if p not in self.levels:
                raise PrecisionError(f"samples carry no coordinate at prime {p}")
            v, deep, res = self.valuation[p], self.deep[p], self.residue[p]
            local = np.zeros(len(self), dtype=bool)
            for c in cells:
                if c.tail:
                    local |= v >= c.j
                    continue
                if c.j >= SAMPLER_DEPTH:
                    raise PrecisionError(f"shell {c.j} beyond sampler depth")
                if c.m > self.levels[p]:
                    raise PrecisionError(f"cell level {c.m} exceeds sampled level at {p}")
                sel = (v == c.j) & ~deep
                if c.m:
                    sel &= res % c.p**c.m == c.u
                local |= sel
            hit &= local
        return hit


def sample_batch(
    mu: BetaMeasure, levels: Mapping[int, int], count: int, seed: int, start: int = 0
) -> SampleBatch:
    """Independent per-prime draws: valuation ``k`` with probability ``(1-r) r^k``,
    ``r = p^-beta`` (inverse CDF), unit residue uniform on ``(Z/p^m)^*``.

    Sample ``i`` consumes a fixed block of ``2 * len(levels)`` uniforms from a
    PCG64 stream keyed by ``seed``, so it is a pure function of ``(seed, i)``
    and disjoint index ranges can be drawn independently.
    """
    primes = sorted(levels)
    per = 2 * len(primes)
    bitgen = np.random.PCG64(seed)
    bitgen.advance(start * per)
    U = np.random.Generator(bitgen).random((count, per))
    valuation, deep, residue = {}, {}, {}
    for i, p in enumerate(primes):
        m = levels[p]
        k = np.floor(np.log1p(-U[:, 2 * i]) / (-mu.beta * math.log(p)))
        isdeep = k >= SAMPLER_DEPTH
        valuation[p] = np.minimum(k, SAMPLER_DEPTH).astype(np.int64)
        deep[p] = isdeep
        if m:
            phi = euler_phi_prime_power(p, m)
            idx = np.minimum(np.floor(U[:, 2 * i + 1] * phi), phi - 1).astype(np.int64)
            # idx-th unit in [1, p^m): skip one multiple of p every p-1 units
            residue[p] = np.where(isdeep, 0, idx + idx // (p - 1) + 1)
        else:
            residue[p] = np.zeros(count, dtype=np.int64)
    return SampleBatch(dict(sorted(levels.items())), valuation, deep, residue)


def sample(mu: BetaMeasure, levels: Mapping[int, int], seed: int, index: int = 0) -> dict[int, PAdicApprox]:
    """The ``index``-th sample point, as a map prime -> PAdicApprox."""
    return sample_batch(mu, levels, 1, seed, start=index).point(0)


# ---------------------------------------------------------------- integration


def integrate(mu: BetaMeasure, f: CylinderFunction) -> complex:
    re = math.fsum(c.real * cylinder_measure(mu, X) for c, X in f.terms)
    im = math.fsum(c.imag * cylinder_measure(mu, X) for c, X in f.terms)
    return complex(re, im)


def inner_product(mu: BetaMeasure, f: CylinderFunction, g: CylinderFunction) -> complex:
    """``(f, g) = integral of f * conj(g)``."""
    return integrate(mu, f * g.conj())


def shift(f: CylinderFunction, n: int) -> CylinderFunction:
    """``(V_n f)(x) = f(n x)`` as a function on R (for R-ambient terms)."""
    if n < 1:
        raise ValueError("shift needs a positive integer")
    if n == 1:
        return f

    def move(X: CylinderSet) -> CylinderSet:
        Y = scale_set(X, n)
        return Y.restrict_to_R() if X.ambient is Ambient.R else Y

    return f.map_sets(move)


def adjoint_shift(mu: BetaMeasure, f: CylinderFunction, n: int) -> CylinderFunction:
    """``(V_n^* f)(y) = n^beta f(y/n)`` on ``nR`` and 0 elsewhere."""
    if n < 1:
        raise ValueError("shift needs a positive integer")
    if n == 1:
        return f
    inv = RationalScalar(1, n)
    return f.map_sets(lambda X: scale_set(X, inv)).scaled(n**mu.beta)


# ---------------------------------------------------------------- random cylinders


def random_cylinder(
    rng: random.Random,
    primes: Iterable[int],
    max_shell: int = 3,
    max_level: int | Mapping[int, int] = 2,
    max_cells: int = 3,
) -> CylinderSet:
    """A random nonempty cylinder in R: each prime gets 1..max_cells disjoint cells."""
    cons = {}
    for p in sorted(primes):
        if rng.random() < 0.3:
            continue
        lvl = max_level[p] if isinstance(max_level, Mapping) else max_level
        cells: list[LocalCell] = []
        for _ in range(rng.randint(1, max_cells)):
            if rng.random() < 0.25:
                c = LocalCell.tail_from(p, rng.randint(1, max_shell + 1))
            else:
                m = rng.randint(0, lvl)
                u = None
                if m:
                    u = rng.randrange(1, p**m)
                    while u % p == 0:
                        u = rng.randrange(1, p**m)
                c = LocalCell.shell(p, rng.randint(0, max_shell), m, u)
            if all(c.intersect(d) is None for d in cells):
                cells.append(c)
        cons[p] = tuple(cells)
    return CylinderSet(cons)


def unit_cells(p: int, m: int) -> list[LocalCell]:
    """The partition of Z_p^* into unit classes mod p^m."""
    if m == 0:
        return [LocalCell.shell(p, 0)]
    return [LocalCell.shell(p, 0, m, u) for u in range(1, p**m) if u % p]


def W_A(A: Iterable[int]) -> CylinderSet:
    """Units at the primes of A, unconstrained elsewhere."""
    return CylinderSet({p: (LocalCell.shell(p, 0),) for p in A})


def product_cells(per_prime: Mapping[int, list[LocalCell]]) -> Iterable[CylinderSet]:
    """All cylinders choosing one cell per prime."""
    ps = sorted(per_prime)
    for choice in product(*(per_prime[p] for p in ps)):
        yield CylinderSet({p: (c,) for p, c in zip(ps, choice)})
