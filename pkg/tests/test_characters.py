import cmath
import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from adelic.arith import PAdicApprox, PrecisionError
from adelic.characters import (
    LocalUnitCharacter,
    ProductCharacter,
    character_to_cylinder,
    enumerate_characters,
    eval_at_integer,
    eval_at_point,
    parse_character,
    smallest_primitive_root,
    values_at_integers,
)
from adelic.measure import LocalCell

from conftest import units

CHI4 = parse_character("2^2:1")
CHI3 = parse_character("3^1:1")


def brute_value(chi: ProductCharacter, n: int) -> complex:
    """Evaluate by brute-force discrete logs (no tables)."""
    total = 0.0
    for c in chi.locals:
        p, m = c.p, c.m
        mod = p**m
        r = n % mod
        if r % p == 0:
            return 0j
        if p == 2:
            if m == 1:
                continue
            k = max(1, 2 ** (m - 2))
            a, b = next((a, b) for a in (0, 1) for b in range(k) if ((-1) ** a * pow(5, b, mod)) % mod == r)
            total += a * c.exps[0] / 2 + (b * c.exps[1] / 2 ** (m - 2) if m >= 3 else 0)
        else:
            g = smallest_primitive_root(p, m)
            phi = (p - 1) * p ** (m - 1)
            k = next(k for k in range(phi) if pow(g, k, mod) == r)
            total += c.exps[0] * k / phi
    return cmath.exp(2j * math.pi * total)


def test_eval_at_integer_examples():
    trivial = ProductCharacter()
    assert eval_at_integer(trivial, 7) == 1
    assert eval_at_integer(CHI4, 3) == -1
    assert eval_at_integer(CHI4, 2) == 0  # p in B is not a unit


def test_eval_at_point_examples():
    x = {2: PAdicApprox(2, 1, 2, 1)}
    assert eval_at_point(CHI4, x) == 0
    assert eval_at_point(parse_character("2^1:0"), {2: PAdicApprox.unit(2, 1, 1)}) == 1
    assert eval_at_point(CHI4, {2: PAdicApprox.unit(2, 3, 2)}) == -1


def test_eval_at_point_precision_errors():
    with pytest.raises(PrecisionError):
        eval_at_point(CHI4, {2: PAdicApprox.unit(2, 1, 1)})
    with pytest.raises(PrecisionError):
        eval_at_point(CHI4, {3: PAdicApprox.unit(3, 1, 1)})
    assert eval_at_point(CHI4, {2: PAdicApprox.deep_from(2, 3)}) == 0


@pytest.mark.parametrize(
    "B, levels, count",
    [((2,), {2: 2}, 2), ((3,), {3: 1}, 2), ((2, 3), {2: 3, 3: 2}, 24), ((2,), {2: 1}, 1), ((5, 7), {5: 2, 7: 1}, 120)],
)
def test_enumerate_counts(B, levels, count):
    chars = enumerate_characters(B, levels)
    assert len(chars) == count
    assert len(set(chars)) == count
    assert chars[0].is_trivial


@pytest.mark.parametrize("p, m", [(3, 1), (3, 3), (5, 2), (7, 1), (11, 2), (13, 1)])
def test_smallest_primitive_root_is_a_generator(p, m):
    g = smallest_primitive_root(p, m)
    mod = p**m
    generated = {pow(g, k, mod) for k in range((p - 1) * p ** (m - 1))}
    assert generated == set(units(p, m))
    assert all(len({pow(h, k, mod) for k in range(mod)}) < len(generated) for h in range(2, g) if h % p)


@pytest.mark.parametrize("B, levels", [((2,), {2: 4}), ((3,), {3: 2}), ((2, 3), {2: 3, 3: 1}), ((5,), {5: 2})])
def test_evaluation_matches_brute_force_logs(B, levels):
    mod = math.prod(p ** levels[p] for p in B)
    for chi in enumerate_characters(B, levels):
        for n in range(1, 2 * mod + 1):
            assert abs(eval_at_integer(chi, n) - brute_value(chi, n)) < 1e-12


@pytest.mark.parametrize("B, levels", [((2,), {2: 3}), ((3,), {3: 2}), ((2, 3), {2: 2, 3: 1}), ((2,), {2: 5}), ((7,), {7: 1})])
def test_orthogonality(B, levels):
    chars = enumerate_characters(B, levels)
    mod = math.prod(p ** levels[p] for p in B)
    order = math.prod((p - 1) * p ** (levels[p] - 1) for p in B)
    U = [n for n in range(1, mod) if math.gcd(n, mod) == 1]
    vals = np.array([[eval_at_integer(c, n) for n in U] for c in chars])
    G = vals @ vals.conj().T
    assert np.allclose(G, order * np.eye(len(chars)), atol=1e-12, rtol=0)


def test_values_on_unit_circle_and_exact_real_values():
    for chi in enumerate_characters((2, 3, 5), {2: 3, 3: 2, 5: 1}):
        for n in range(1, 200):
            v = eval_at_integer(chi, n)
            assert v == 0 or abs(abs(v) - 1) < 1e-14
    # real-valued characters give exact +-1
    for n in range(1, 100, 2):
        assert eval_at_integer(CHI4, n) in (1, -1)


@given(st.integers(1, 10**6), st.integers(1, 10**6), st.sampled_from(enumerate_characters((2, 3, 5), {2: 3, 3: 2, 5: 1})))
def test_multiplicativity(m, n, chi):
    assert abs(eval_at_integer(chi, m * n) - eval_at_integer(chi, m) * eval_at_integer(chi, n)) < 1e-12


def test_vectorized_evaluation_agrees():
    ns = np.arange(1, 3000)
    for chi in enumerate_characters((2, 3), {2: 3, 3: 2}):
        vec = values_at_integers(chi, ns)
        assert np.allclose(vec, [eval_at_integer(chi, int(n)) for n in ns], atol=1e-14)


def test_text_form_roundtrip():
    for chi in enumerate_characters((2, 3), {2: 3, 3: 1}) + [ProductCharacter()]:
        assert parse_character(str(chi)) == chi
    assert str(parse_character("2^3:1,1;3^2:4")) == "2^3:1,1;3^2:4"
    with pytest.raises(ValueError):
        parse_character("3^1:1,1")
    with pytest.raises(ValueError):
        parse_character("garbage")


def test_local_character_validation():
    with pytest.raises(ValueError):
        LocalUnitCharacter(3, 0, (0,))
    assert LocalUnitCharacter(3, 1, (5,)).exps == (1,)  # reduced mod phi(3)


def test_character_to_cylinder_examples():
    f = character_to_cylinder(parse_character("2^1:0"))
    assert f.terms == ((1, _set({2: (LocalCell.shell(2, 0),)})),)
    f4 = character_to_cylinder(CHI4)
    assert sorted((X.cells(2)[0].u, c) for c, X in f4.terms) == [(1, 1), (3, -1)]
    f3 = character_to_cylinder(CHI3)
    assert sorted((X.cells(3)[0].u, c) for c, X in f3.terms) == [(1, 1), (2, -1)]


def _set(cons):
    from adelic.measure import CylinderSet

    return CylinderSet(cons)


@pytest.mark.parametrize("spec", ["2^2:1", "3^1:1", "2^3:1,1;3^2:2", "5^2:3", "2^1:0;3^1:0"])
def test_character_to_cylinder_agrees_on_random_points(spec):
    chi = parse_character(spec)
    f = character_to_cylinder(chi)
    rng = random.Random(spec)
    real = all(eval_at_integer(chi, n) in (0, 1, -1) for n in range(1, 400))
    for _ in range(1000):
        x = {}
        for c in chi.locals:
            m = c.m + rng.randint(0, 2)
            v = rng.choice([0, 0, 0, 1, 2, -1])
            u = rng.choice(units(c.p, m))
            x[c.p] = PAdicApprox(c.p, v, m, u)
        a, b = f.evaluate(x), eval_at_point(chi, x)
        if real:
            assert a == b
        else:
            assert abs(a - b) <= 1e-14
