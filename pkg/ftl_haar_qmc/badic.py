"""Exact base-b points and elementary intervals.

A coordinate of precision m is stored as an integer numerator n with value
n / b^m.  Every membership test below is integer arithmetic on numerators;
floats only enter through `snap`, which truncates explicitly.
"""

from dataclasses import dataclass
from fractions import Fraction
from logging import getLogger
from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import ValidationError
from .util import check_base

logger = getLogger(__name__)


def _as_index(values: Iterable[int], name: str) -> Tuple[int, ...]:
    out = []
    for v in values:
        if int(v) != v or v < 0:
            raise ValidationError(f"{name} entries must be non-negative integers, got {v!r}")
        out.append(int(v))
    return tuple(out)


def cell_index(numerator: int, precision: int, b: int, level: int) -> int:
    """floor(numerator * b^(level - precision)) by digit truncation or zero padding."""
    if level <= precision:
        return numerator // b ** (precision - level)
    return numerator * b ** (level - precision)


@dataclass(frozen=True, eq=False)
class BadicPoint:
    """A point of [0,1)^s whose coordinates are numerators over b^precision.

    Two points compare equal when their digit arrays agree after zero padding
    to the common precision, so `BadicPoint(2, 1, (1,)) == BadicPoint(2, 3, (4,))`.
    """

    base: int
    precision: int
    numerators: Tuple[int, ...]

    def __post_init__(self):
        check_base(self.base)
        if int(self.precision) != self.precision or self.precision < 0:
            raise ValidationError(f"precision must be a non-negative integer, got {self.precision}")
        nums = _as_index(self.numerators, "numerator")
        bound = self.base**self.precision
        for n in nums:
            if n >= bound:
                raise ValidationError(
                    f"numerator {n} out of range [0, {bound}) for b={self.base}, m={self.precision}"
                )
        object.__setattr__(self, "numerators", nums)

    @property
    def dim(self) -> int:
        return len(self.numerators)

    @property
    def coords(self) -> Tuple[Tuple[int, ...], ...]:
        """Digits of every coordinate, most significant first."""
        return tuple(self.digits(ell) for ell in range(self.dim))

    def digits(self, ell: int) -> Tuple[int, ...]:
        n = self.numerators[ell]
        out = []
        for _ in range(self.precision):
            n, d = divmod(n, self.base)
            out.append(d)
        return tuple(reversed(out))

    def value(self, ell: int) -> Fraction:
        return Fraction(self.numerators[ell], self.base**self.precision)

    def values(self) -> Tuple[Fraction, ...]:
        return tuple(self.value(ell) for ell in range(self.dim))

    def to_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.values()])

    def with_precision(self, precision: int) -> "BadicPoint":
        """Zero-pad (or exactly shorten) to another precision."""
        if precision >= self.precision:
            scale = self.base ** (precision - self.precision)
            return BadicPoint(self.base, precision, tuple(n * scale for n in self.numerators))
        scale = self.base ** (self.precision - precision)
        if any(n % scale for n in self.numerators):
            raise ValidationError(
                f"cannot shorten point to precision {precision} without losing digits"
            )
        return BadicPoint(self.base, precision, tuple(n // scale for n in self.numerators))

    def _reduced(self) -> Tuple[int, int, Tuple[int, ...]]:
        m, nums = self.precision, self.numerators
        while m > 0 and all(n % self.base == 0 for n in nums):
            nums = tuple(n // self.base for n in nums)
            m -= 1
        return self.base, m, nums

    def __eq__(self, other):
        if not isinstance(other, BadicPoint):
            return NotImplemented
        if self.base != other.base or self.dim != other.dim:
            return False
        return self._reduced() == other._reduced()

    def __hash__(self):
        return hash(self._reduced())

    def __repr__(self):
        vals = ", ".join(str(v) for v in self.values())
        return f"BadicPoint(b={self.base}, m={self.precision}, ({vals}))"


@dataclass(frozen=True)
class ElementaryInterval:
    """The half-open box prod_l [k_l b^-j_l, (k_l + 1) b^-j_l)."""

    base: int
    j: Tuple[int, ...]
    k: Tuple[int, ...]

    def __post_init__(self):
        check_base(self.base)
        j = _as_index(self.j, "j")
        k = _as_index(self.k, "k")
        if len(j) != len(k):
            raise ValidationError(f"j and k must have equal length, got {len(j)} and {len(k)}")
        for jl, kl in zip(j, k):
            if kl >= self.base**jl:
                raise ValidationError(f"k={kl} out of range for level {jl} in base {self.base}")
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "k", k)

    @property
    def volume(self) -> Fraction:
        return Fraction(1, self.base ** sum(self.j))

    def bounds(self) -> Tuple[Tuple[Fraction, Fraction], ...]:
        return tuple(
            (Fraction(kl, self.base**jl), Fraction(kl + 1, self.base**jl))
            for jl, kl in zip(self.j, self.k)
        )

    def __contains__(self, p: BadicPoint) -> bool:
        return interval_contains(self, p)


def point_from_rational(numerators: Sequence[int], b: int, m: int) -> BadicPoint:
    return BadicPoint(b, m, tuple(numerators))


def snap(x: Sequence[float], b: int, m: int) -> BadicPoint:
    """Truncate real coordinates in [0,1) to precision m.

    Each float is converted exactly with `Fraction` and the numerator is
    floor(x * b^m), so a float just below a b-adic boundary stays below it.
    """
    b = check_base(b)
    nums = []
    for v in x:
        f = Fraction(v)
        if f < 0 or f >= 1:
            raise ValidationError(f"coordinate {v!r} outside [0, 1)")
        nums.append((f.numerator * b**m) // f.denominator)
    return BadicPoint(b, m, tuple(nums))


def locate(p: BadicPoint, j: Sequence[int]) -> Tuple[int, ...]:
    """Return k with p in E^j_k, zero padding digits when j exceeds the precision."""
    j = _as_index(j, "j")
    if len(j) != p.dim:
        raise ValidationError(f"level vector of length {len(j)} for a point of dimension {p.dim}")
    return tuple(
        cell_index(n, p.precision, p.base, jl) for n, jl in zip(p.numerators, j)
    )


def interval_contains(E: ElementaryInterval, p: BadicPoint) -> bool:
    if E.base != p.base:
        raise ValidationError(f"interval base {E.base} differs from point base {p.base}")
    return locate(p, E.j) == E.k
