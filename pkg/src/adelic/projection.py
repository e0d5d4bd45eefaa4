"""Conditional expectations onto functions constant on N_A-orbits.

For x in W_A (units at every p in A) the projection is the weighted orbit average

    (P_{t,A} f)(x) = zeta_A(beta)^-1 * sum_{n in N_A} n^(-beta - i t) f(n x),

and for a character chi of prod_{p in B} Z_p^* it collapses to the Euler product
``chi(x) * prod_{p in A} (1 - p^-beta) / (1 - chi(p) p^(-beta - i t))``.

Two independent routes are provided: :func:`project_function` sums the
truncated series for an arbitrary cylinder function, :func:`project_character`
evaluates the closed form.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .arith import PAdicApprox, PrecisionError, scale
from .certified import UNIT_ROUNDOFF, CertifiedValue
from .characters import ProductCharacter, eval_at_integer, eval_at_point, values_at_integers
from .measure import CylinderFunction, zeta_A
from .primes import first_primes, iter_semigroup, primes_upto


class NotInWAError(ValueError):
    """The orbit representative is not a unit at some prime of A."""


@dataclass(frozen=True)
class ProjectionRequest:
    """Which projection to take: the prime set A, beta, twist t, and series truncation.

    ``truncation`` maps p -> maximal exponent E_p. When omitted the caps are
    chosen so the certified tail is at most ``eps``.
    """

    A: tuple[int, ...]
    beta: float
    t: float = 0.0
    truncation: Mapping[int, int] | None = None
    eps: float = 1e-12

    def __post_init__(self):
        A = tuple(sorted(set(self.A)))
        if not A:
            raise ValueError("A must be a nonempty finite prime set")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        object.__setattr__(self, "A", A)
        if self.truncation is not None:
            if set(self.truncation) != set(A) or min(self.truncation.values()) < 0:
                raise ValueError("truncation needs an exponent cap E_p >= 0 for every p in A")
            object.__setattr__(self, "truncation", dict(sorted(self.truncation.items())))

    def caps(self, sup_norm: float) -> dict[int, int]:
        if self.truncation is not None:
            return dict(self.truncation)
        if sup_norm == 0:
            return {p: 0 for p in self.A}
        # factor 2: the normalized series carries twice the raw tail
        target = math.log(2 * sup_norm * zeta_A(self.A, self.beta) / self.eps)
        return {p: max(0, math.ceil(target / (self.beta * math.log(p)))) for p in self.A}

    def tail_fraction(self, caps: Mapping[int, int]) -> float:
        """``1 - Z_T / zeta_A(beta)`` where Z_T sums n^-beta over the exponent box."""
        return -math.expm1(
            math.fsum(math.log1p(-math.exp(-self.beta * (caps[p] + 1) * math.log(p))) for p in self.A)
        )


def _weights(p: int, E: int, beta: float, t: float) -> list[complex]:
    lp = math.log(p)
    return [complex(math.exp(-e * beta * lp) * math.cos(e * t * lp), -math.exp(-e * beta * lp) * math.sin(e * t * lp)) for e in range(E + 1)]


@dataclass
class _Normalizer:
    """Collapses a point to the data ``f`` can see: capped valuation, truncated residue."""

    depth: dict[int, int] = field(default_factory=dict)
    level: dict[int, int] = field(default_factory=dict)

    @classmethod
    def for_function(cls, f: CylinderFunction) -> _Normalizer:
        out = cls()
        for q in f.support:
            cells = f.cells_at(q)
            out.depth[q] = max(c.depth for c in cells)
            out.level[q] = max(c.m for c in cells)
        return out

    def __call__(self, y: PAdicApprox) -> PAdicApprox:
        cap = self.depth[y.p]
        if y.v >= cap:
            return PAdicApprox.deep_from(y.p, cap)
        if y.deep:
            return y
        return y.with_precision(min(y.m, self.level[y.p]))


def _check_representative(req: ProjectionRequest, f: CylinderFunction, x: Mapping[int, PAdicApprox]):
    for p in req.A:
        if p in x and (x[p].deep or x[p].v != 0):
            raise NotInWAError(f"representative must lie in W_A (coordinate {x[p]} at {p})")
    for q in f.support:
        if q not in x:
            raise PrecisionError(f"representative has no coordinate at {q}, where f depends")


def project_function(
    req: ProjectionRequest,
    f: CylinderFunction,
    x: Mapping[int, PAdicApprox],
    method: str = "orbit",
) -> CertifiedValue:
    """``(P_{t,A} f)(x)`` by the truncated orbit series, with a certified error.

    The series is summed over the exponent box ``e_p <= E_p`` and normalized by
    the box sum of ``n^-beta``, so constants are reproduced exactly. The bound
    covers the omitted tail, ``(1 - Z_T/zeta_A) (||f|| + |value|)``, plus roundoff.

    ``method="orbit"`` aggregates the weights of all n that move x to the same
    f-visible state, prime by prime; ``method="direct"`` visits every n in
    increasing order and evaluates f(n x) term by term.
    """
    _check_representative(req, f, x)
    sup = f.sup_bound
    caps = req.caps(sup)
    support = f.support
    norm = _Normalizer.for_function(f)
    start = tuple(norm(x[q]) for q in support)

    if method == "orbit":
        states: dict[tuple[PAdicApprox, ...], complex] = {start: 1 + 0j}
        for p in req.A:
            w = _weights(p, caps[p], req.beta, req.t)
            nxt: dict[tuple[PAdicApprox, ...], complex] = defaultdict(complex)
            for state, weight in states.items():
                y = state
                for e in range(caps[p] + 1):
                    nxt[y] += weight * w[e]
                    if e < caps[p]:
                        y = tuple(norm(scale(c, p)) for c in y)
            states = nxt
        contributions = [weight * f.evaluate(dict(zip(support, state))) for state, weight in states.items()]
        ops = sum(caps[p] + 2 for p in req.A)
    elif method == "direct":
        contributions = []
        for n, exps in iter_semigroup(req.A, caps=caps):
            weight = complex(n ** -req.beta) * complex(math.cos(req.t * math.log(n)), -math.sin(req.t * math.log(n)))
            y = {q: norm(scale(x[q], n)) for q in support}
            contributions.append(weight * f.evaluate(y))
        ops = len(contributions)
    else:
        raise ValueError(f"unknown method {method!r}")

    S = complex(math.fsum(c.real for c in contributions), math.fsum(c.imag for c in contributions))
    Z_T = math.prod(
        math.fsum(math.exp(-e * req.beta * math.log(p)) for e in range(caps[p] + 1)) for p in req.A
    )
    # untwisted constants are reproduced exactly by the Z_T normalization
    exact = not support and req.t == 0
    if exact:
        return CertifiedValue(f.evaluate({}), 0.0)
    value = S / Z_T
    tail = req.tail_fraction(caps) * (sup + abs(value))
    rounding = 4 * UNIT_ROUNDOFF * (ops + len(req.A) + 8) * (sup + abs(value))
    return CertifiedValue(value, tail + rounding)


def project_character(A: Iterable[int], beta: float, t: float, chi: ProductCharacter) -> complex:
    """Amplitude ``prod_{p in A} (1 - p^-beta) / (1 - chi(p) p^(-beta - i t))``.

    The projection of chi is this amplitude times chi(x) on the orbit of x in W_A.
    """
    out = 1 + 0j
    for p in sorted(set(A)):
        chi_p = eval_at_integer(chi, p)
        if chi_p == 1 and t == 0:
            continue
        lp = math.log(p)
        num = -math.expm1(-beta * lp)
        out *= num / (1 - chi_p * complex(math.exp(-beta * lp) * math.cos(t * lp), -math.exp(-beta * lp) * math.sin(t * lp)))
    return out


def projected_character_value(
    A: Iterable[int], beta: float, t: float, chi: ProductCharacter, x: Mapping[int, PAdicApprox]
) -> complex:
    return project_character(A, beta, t, chi) * eval_at_point(chi, x)


def flatness(req: ProjectionRequest, f: CylinderFunction, sample_points: Sequence[Mapping[int, PAdicApprox]]) -> float:
    """Upper bound on ``max_x |P f(x) - mean|`` over the sample points.

    Zero (up to certification) exactly when the projection is constant there.
    """
    vals = [project_function(req, f, x) for x in sample_points]
    mean = sum(v.value for v in vals) / len(vals)
    worst = max(v.error_bound for v in vals)
    return max(abs(v.value - mean) for v in vals) + 2 * worst


# ---------------------------------------------------------------- Euler product scans


def _log1p_complex(z: np.ndarray) -> np.ndarray:
    """log(1 + z) accurate for small |z| (|z| < 1)."""
    x, y = z.real, z.imag
    return 0.5 * np.log1p(2 * x + x * x + y * y) + 1j * np.arctan2(y, 1 + x)


@dataclass(frozen=True)
class ProductScan:
    """Running partial products ``prod_{p <= P} (1 - p^-beta) / (1 - chi(p) p^(-beta - i t))``.

    ``tail_bound[i]`` bounds ``|limit - values[i]|`` (infinite for beta <= 1,
    where no finite limit is claimed).
    """

    beta: float
    t: float
    primes: np.ndarray
    values: np.ndarray
    tail_bound: np.ndarray

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    def index_at(self, x: float) -> int:
        """Index of the last prime <= x, or -1 for the empty product."""
        return int(np.searchsorted(self.primes, x, side="right")) - 1

    def at(self, x: float) -> complex:
        i = self.index_at(x)
        return 1 + 0j if i < 0 else complex(self.values[i])

    def bound_at(self, x: float) -> float:
        i = self.index_at(x)
        return math.inf if i < 0 and self.beta <= 1 else float(self.tail_bound[max(i, 0)])

    def rows(self):
        for p, v, tb in zip(self.primes.tolist(), self.values.tolist(), self.tail_bound.tolist()):
            yield p, v.real, v.imag, abs(v), tb

    def write_csv(self, fp: TextIO) -> None:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(["prime", "partial_value_re", "partial_value_im", "abs", "tail_bound"])
        for p, re, im, ab, tb in self.rows():
            w.writerow([p, repr(re), repr(im), repr(ab), repr(tb)])


def product_scan(primes: np.ndarray, beta: float, t: float, chi: ProductCharacter) -> ProductScan:
    """Partial products over ``primes`` in the given order."""
    ps = primes.astype(float)
    lp = np.log(ps)
    chi_p = values_at_integers(chi, primes)
    c = chi_p * np.exp(-(beta + 1j * t) * lp)
    logs = np.log1p(-np.exp(-beta * lp)) - _log1p_complex(-c)
    # factors with chi(p) = 1 and no twist are exactly 1
    if t == 0:
        logs[chi_p == 1] = 0
    values = np.exp(np.cumsum(logs))
    if beta > 1:
        # |log factor| <= 2 p^-beta / (1 - p^-beta); sum_{n > P} n^-beta <= P^(1-beta)/(beta-1)
        pb = ps ** -beta
        T = 2 / (1 - pb) * ps ** (1 - beta) / (beta - 1)
        tail = np.abs(values) * np.expm1(T)
    else:
        tail = np.full(len(ps), np.inf)
    return ProductScan(beta, t, primes, values, tail)


def twisted_product_scan(beta: float, t: float, chi: ProductCharacter, x_max: int) -> ProductScan:
    """Partial products over all primes ``<= x_max`` in increasing order."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return product_scan(primes_upto(x_max), beta, t, chi)


def amplitude_sequence(beta: float, t: float, chi: ProductCharacter, k_max: int) -> ProductScan:
    """Amplitudes of P_{A_k} chi along A_k = first k primes, k = 1..k_max."""
    return product_scan(first_primes(k_max), beta, t, chi)
