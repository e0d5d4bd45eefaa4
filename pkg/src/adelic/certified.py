from __future__ import annotations

from dataclasses import dataclass

# unit roundoff of IEEE double
UNIT_ROUNDOFF = 2.0**-53


@dataclass(frozen=True)
class CertifiedValue:
    """A number together with a bound on its distance to the exact quantity."""

    value: complex
    error_bound: float

    def __post_init__(self):
        if not self.error_bound >= 0:
            raise ValueError(f"error bound must be nonnegative, got {self.error_bound}")

    def __add__(self, other: CertifiedValue) -> CertifiedValue:
        return CertifiedValue(self.value + other.value, self.error_bound + other.error_bound)

    def contains(self, exact: complex, slack: float = 0.0) -> bool:
        return abs(self.value - exact) <= self.error_bound + slack

    def agrees_with(self, other: CertifiedValue, slack: float = 0.0) -> bool:
        return abs(self.value - other.value) <= self.error_bound + other.error_bound + slack
