import pytest

from adelic.arith import PAdicApprox


def brute_is_prime(n: int) -> bool:
    return n >= 2 and all(n % d for d in range(2, n))


def units(p: int, m: int) -> list[int]:
    return [u for u in range(1, p**m) if u % p]


def unit_point(**coords) -> dict:
    """unit_point(p2=(3, 2), p3=(1, 1)) -> {2: 3 mod 4, 3: 1 mod 3}."""
    out = {}
    for key, (u, m) in coords.items():
        p = int(key[1:])
        out[p] = PAdicApprox.unit(p, u, m)
    return out


@pytest.fixture
def approx():
    return lambda a, b, tol=1e-12: abs(a - b) <= tol * max(1.0, abs(b))


ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion():
    """record(n, ok, detail): one PASS/FAIL line per acceptance criterion."""

    def record(n: int, ok: bool, detail: str) -> bool:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
