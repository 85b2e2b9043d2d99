"""Closed-form results used as independent ground truth.

Clebsch-Gordan coefficients are evaluated in exact rational arithmetic
(Racah's single-sum expression with integer factorials) and converted to
float only at the boundary, so they can serve as a trustworthy oracle for
the collective-decay ladder decompositions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial, sqrt

__all__ = [
    "clebsch_gordan",
    "steady_inversion_single_absorber",
    "two_spin_dark_fraction",
    "mf_transfer_bound",
    "DarkFraction",
    "TransferBound",
]


def _twice(x, name: str) -> int:
    """Validate a (half-)integer quantum number and return 2x as an int."""
    two_x = 2 * float(x)
    if abs(two_x - round(two_x)) > 1e-9:
        raise ValueError(f"{name} = {x!r} is not integer or half-integer")
    return int(round(two_x))


def clebsch_gordan(j1, m1, j2, m2, j, m) -> float:
    """Clebsch-Gordan coefficient ⟨j1 m1; j2 m2 | j m⟩, Condon-Shortley phase.

    Selection-rule violations (m ≠ m1 + m2, j outside the triangle range,
    |m_i| > j_i with matching parity) give exactly 0; malformed quantum
    numbers raise ValueError.
    """
    tj1, tm1 = _twice(j1, "j1"), _twice(m1, "m1")
    tj2, tm2 = _twice(j2, "j2"), _twice(m2, "m2")
    tj, tm = _twice(j, "j"), _twice(m, "m")
    for tjx, tmx, name in ((tj1, tm1, "1"), (tj2, tm2, "2"), (tj, tm, "")):
        if tjx < 0:
            raise ValueError(f"j{name} must be >= 0")
        if (tjx + tmx) % 2 != 0:
            raise ValueError(f"j{name} and m{name} must have equal parity")
        if abs(tmx) > tjx:
            return 0.0
    if tm1 + tm2 != tm:
        return 0.0
    if not abs(tj1 - tj2) <= tj <= tj1 + tj2 or (tj1 + tj2 + tj) % 2 != 0:
        return 0.0

    # All factorial arguments below are true integers (twice-values are even
    # in every combination that passed the parity checks).
    def f(two_n: int) -> int:
        if two_n % 2 != 0:
            raise ValueError("internal parity error")
        return factorial(two_n // 2)

    prefactor = Fraction(
        (tj + 1)
        * f(tj1 + tj2 - tj)
        * f(tj1 - tj2 + tj)
        * f(-tj1 + tj2 + tj)
        * f(tj + tm)
        * f(tj - tm)
        * f(tj1 - tm1)
        * f(tj1 + tm1)
        * f(tj2 - tm2)
        * f(tj2 + tm2),
        f(tj1 + tj2 + tj + 2),
    )

    k_min = max(0, (tj2 - tj - tm1) // 2, (tj1 + tm2 - tj) // 2)
    k_max = min((tj1 + tj2 - tj) // 2, (tj1 - tm1) // 2, (tj2 + tm2) // 2)
    total = Fraction(0)
    for k in range(k_min, k_max + 1):
        denom = (
            factorial(k)
            * f(tj1 + tj2 - tj - 2 * k)
            * f(tj1 - tm1 - 2 * k)
            * f(tj2 + tm2 - 2 * k)
            * f(tj - tj2 + tm1 + 2 * k)
            * f(tj - tj1 - tm2 + 2 * k)
        )
        total += Fraction((-1) ** k, denom)

    if total == 0:
        return 0.0
    signed_square = (total * total) * prefactor
    value = sqrt(float(signed_square))
    return value if total > 0 else -value


def steady_inversion_single_absorber(n1: int, jz1_0: float) -> float:
    """Long-time ⟨Jz⟩ of a single ground-state spin dissipatively paired with
    a domain of ``n1`` spins prepared in the Dicke state with ⟨Jz_1⟩ = jz1_0.

    Evaluates (jz1_0*N1 - N1 - 1/2) / (N1 + 1)^2, which at full excitation
    jz1_0 = N1/2 reduces to (N1^2 - 2 N1 - 1) / (2 (N1+1)^2) and tends to 1/2
    as N1 grows.
    """
    if n1 < 1:
        raise ValueError(f"n1 must be a positive spin count, got {n1}")
    if abs(jz1_0) > n1 / 2 + 1e-12:
        raise ValueError(f"|jz1_0| = {abs(jz1_0)} exceeds N1/2 = {n1 / 2}")
    return (jz1_0 * n1 - n1 - 0.5) / (n1 + 1) ** 2


@dataclass(frozen=True)
class DarkFraction:
    """Steady excited population of the second of two collectively damped
    spins, with the symmetric/antisymmetric weights of the initial |10⟩."""

    population: float
    triplet_weight: float
    dark_weight: float


def two_spin_dark_fraction() -> DarkFraction:
    """|10⟩ = (triplet + dark)/sqrt(2); only the triplet decays, leaving the
    second spin with excited population 1/4."""
    return DarkFraction(population=0.25, triplet_weight=0.5, dark_weight=0.5)


@dataclass(frozen=True)
class TransferBound:
    """Predicted final relative inversion of the absorbing domain, with the
    domain-size condition under which the prediction holds."""

    final_relative_inversion: float
    validity: str = "N1 >> N2**2"


def mf_transfer_bound(x1_0: float) -> TransferBound:
    """Final ⟨Jz_2⟩/N2 of the two-domain mean-field system equals the initial
    ⟨Jz_1⟩/N1 when the emitting domain is much larger than the absorber."""
    if abs(x1_0) > 0.5 + 1e-12:
        raise ValueError(f"relative inversion must lie in [-1/2, 1/2], got {x1_0}")
    return TransferBound(final_relative_inversion=x1_0)
