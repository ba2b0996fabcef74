"""Equal-weight QMC rules and exact wavelet sums by counting."""

from dataclasses import dataclass, field
from fractions import Fraction
from logging import getLogger
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ValidationError
from .haar import PiecewiseConstant, Surd, WaveletIndex
from .nets import PointSet
from .util import level_vectors

logger = getLogger(__name__)


@dataclass(frozen=True, eq=False)
class QmcRule:
    points: PointSet

    @property
    def weight(self) -> Fraction:
        return Fraction(1, self.points.size)

    def __call__(self, f):
        return qmc(self.points, f)


def qmc(P: PointSet, f: Union[Callable[[np.ndarray], np.ndarray], PiecewiseConstant]):
    """Q_P(f), the average of f over P.

    A PiecewiseConstant with exact cells gives an exact Fraction (or Surd);
    a callable receives the (N, s) float array of points.
    """
    if isinstance(f, PiecewiseConstant):
        if f.base != P.base or f.s != P.dim:
            raise ValidationError("function grid does not match the point set")
        values = f.evaluate(P)
        if f.is_exact:
            total = sum(values.tolist(), Fraction(0)) if values.dtype == object else Fraction(int(values.sum()))
            return total * Fraction(1, P.size)
        return float(values.mean())
    values = np.asarray(f(P.to_float()), dtype=float)
    if values.shape != (P.size,):
        raise ValidationError(f"integrand returned shape {values.shape}, expected ({P.size},)")
    return float(values.mean())


@dataclass
class LevelSums:
    """Integer sums of b [digit == i] - 1 over the points of each occupied support.

    Q_P(Psi^j_{i,k}) = b^(|j|/2 - J) * sums[g, i] / N for the group g whose
    key matches k; supports without points contribute nothing.
    """

    base: int
    precision: int
    j: Tuple[int, ...]
    keys: np.ndarray
    sums: np.ndarray
    size: int

    @property
    def active(self) -> Tuple[int, ...]:
        return tuple(ell for ell, jl in enumerate(self.j) if jl > 0)

    @property
    def half_exponent(self) -> int:
        """|j| - 2J, so that b^(half/2) is the wavelet amplitude factor."""
        return sum(self.j) - 2 * len(self.active)

    def scale(self) -> Surd:
        return Surd.power(self.base, self.half_exponent, Fraction(1, self.size))

    def scale_float(self) -> float:
        return self.base ** (self.half_exponent / 2.0) / self.size

    def key_for(self, k: Sequence[int]) -> Optional[Tuple[int, ...]]:
        key = []
        for jl, kl in zip(self.j, k):
            lvl = jl - 1
            if jl == 0 or lvl <= self.precision:
                key.append(kl)
                continue
            step = self.base ** (lvl - self.precision)
            if kl % step:
                return None
            key.append(kl // step)
        return tuple(key)

    def k_for(self, key: Sequence[int]) -> Tuple[int, ...]:
        return tuple(
            int(kl) * self.base ** (jl - 1 - self.precision) if jl - 1 > self.precision else int(kl)
            for jl, kl in zip(self.j, key)
        )

    def lookup(self, k: Sequence[int]) -> Optional[np.ndarray]:
        key = self.key_for(k)
        if key is None:
            return None
        hit = np.flatnonzero((self.keys == np.array(key)).all(axis=1))
        return self.sums[hit[0]] if hit.size else None


def wavelet_sums(P: PointSet, j: Sequence[int]) -> LevelSums:
    """One counting pass of P at level vector j."""
    j = tuple(int(v) for v in j)
    if len(j) != P.dim:
        raise ValidationError(f"level vector {j} does not match dimension {P.dim}")
    b, prec, nums = P.base, P.precision, P.numerators
    keys = np.zeros_like(nums)
    digits = []
    for ell, jl in enumerate(j):
        if jl == 0:
            continue
        lvl = jl - 1
        keys[:, ell] = nums[:, ell] // b ** (prec - lvl) if lvl <= prec else nums[:, ell]
        if jl <= prec:
            digits.append((nums[:, ell] // b ** (prec - jl)) % b)
        else:
            digits.append(np.zeros(P.size, dtype=np.int64))
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    sig = np.ones((P.size,), dtype=np.int64)
    eye = b * np.eye(b, dtype=np.int64) - 1
    for d in digits:
        sig = sig[..., None] * eye[d].reshape((P.size,) + (1,) * (sig.ndim - 1) + (b,))
    sums = np.zeros((uniq.shape[0],) + sig.shape[1:], dtype=np.int64)
    np.add.at(sums, inverse, sig)
    return LevelSums(b, prec, j, uniq, sums, P.size)


@dataclass
class WaveletSumCache:
    """LevelSums of one point set, computed once per level vector."""

    points: PointSet
    _levels: Dict[Tuple[int, ...], LevelSums] = field(default_factory=dict)

    def __getitem__(self, j) -> LevelSums:
        j = tuple(j)
        if j not in self._levels:
            self._levels[j] = wavelet_sums(self.points, j)
        return self._levels[j]


def qmc_wavelet(P: PointSet, idx: WaveletIndex, cache: Optional[WaveletSumCache] = None):
    """Exact Q_P(Psi^j_{i,k}) by counting points per constancy cell."""
    if idx.base != P.base or idx.s != P.dim:
        raise ValidationError("index does not match the point set")
    level = cache[idx.j] if cache is not None else wavelet_sums(P, idx.j)
    row = level.lookup(idx.k)
    if row is None:
        return Fraction(0)
    pos = tuple(idx.i[ell] for ell in level.active)
    value = level.scale() * int(row[pos])
    return value.rational if value.radical == 0 else value


@dataclass
class ExactnessReport:
    max_deviation: float
    exact: bool
    witness: Optional[WaveletIndex]
    levels_checked: int


def exactness_report(P: PointSet, t: int, cache: Optional[WaveletSumCache] = None) -> ExactnessReport:
    """max |Q_P(Psi) - I(Psi)| over all indices with |j| <= m - t."""
    m = P.m
    if t < 0 or t > m:
        raise ValidationError(f"t must lie in [0, {m}], got {t}")
    cache = cache or WaveletSumCache(P)
    worst, witness, levels = 0.0, None, 0
    # |j| = 0: Q_P(1) = 1 = I(1) for every P
    for j in level_vectors(m - t, P.dim, min_level=1):
        levels += 1
        level = cache[j]
        nonzero = np.argwhere(level.sums != 0)
        if nonzero.size == 0:
            continue
        top = int(np.abs(level.sums).max())
        deviation = top * level.scale_float()
        if witness is None:
            g, *i_active = (int(v) for v in nonzero[0])
            i = [0] * P.dim
            for ell, il in zip(level.active, i_active):
                i[ell] = il
            witness = WaveletIndex(P.base, j, level.k_for(level.keys[g]), tuple(i))
        worst = max(worst, deviation)
    if witness is not None:
        logger.info("quadrature is not exact up to level %d; first witness %s", m - t, witness)
    return ExactnessReport(worst, witness is None, witness, levels)
