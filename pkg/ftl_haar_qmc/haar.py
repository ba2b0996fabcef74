"""The b-adic Haar wavelet frame, its sequence norms and exact inner products."""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from logging import getLogger
from numbers import Rational
from typing import Callable, Dict, Iterator, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .badic import BadicPoint
from .errors import NumericBudgetExceeded, ValidationError
from .quadrature import legendre_rule
from .util import check_base, level_vectors

logger = getLogger(__name__)


@dataclass(frozen=True)
class Exponent:
    """An exponent p in [1, oo], stored through its reciprocal 1/p (so 1/oo = 0)."""

    inverse: Fraction

    def __post_init__(self):
        inv = Fraction(self.inverse)
        if inv < 0 or inv > 1:
            raise ValidationError(f"exponent must lie in [1, inf], got 1/p = {inv}")
        object.__setattr__(self, "inverse", inv)

    @classmethod
    def parse(cls, value) -> "Exponent":
        if isinstance(value, Exponent):
            return value
        if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "oo", "∞"):
            return cls(Fraction(0))
        if isinstance(value, float) and math.isinf(value):
            return cls(Fraction(0))
        try:
            p = Fraction(str(value))
        except ValueError:
            raise ValidationError(f"cannot read exponent {value!r}") from None
        if p < 1:
            raise ValidationError(f"exponent must lie in [1, inf], got {value}")
        return cls(1 / p)

    @property
    def is_infinite(self) -> bool:
        return self.inverse == 0

    @property
    def is_one(self) -> bool:
        return self.inverse == 1

    def dual(self) -> "Exponent":
        return Exponent(1 - self.inverse)

    def as_float(self) -> float:
        return math.inf if self.is_infinite else float(1 / self.inverse)

    def __str__(self):
        if self.is_infinite:
            return "inf"
        p = 1 / self.inverse
        return str(p.numerator) if p.denominator == 1 else repr(float(p))


def lp_norm(values: np.ndarray, p: Exponent) -> float:
    values = np.abs(np.asarray(values, dtype=float))
    if values.size == 0:
        return 0.0
    if p.is_infinite:
        return float(values.max())
    top = values.max()
    if top == 0:
        return 0.0
    return float(top * np.sum((values / top) ** p.as_float()) ** float(p.inverse))


@dataclass(frozen=True)
class SpaceParams:
    b: int
    s: int
    alpha: float
    p: Exponent = field(default_factory=lambda: Exponent.parse(2))
    q: Exponent = field(default_factory=lambda: Exponent.parse(2))

    def __post_init__(self):
        check_base(self.b)
        if self.s < 1:
            raise ValidationError(f"dimension must be positive, got {self.s}")
        if not self.alpha > 0:
            raise ValidationError(f"smoothness must be positive, got {self.alpha}")
        object.__setattr__(self, "p", Exponent.parse(self.p))
        object.__setattr__(self, "q", Exponent.parse(self.q))

    @property
    def p_dual(self) -> Exponent:
        return self.p.dual()

    @property
    def q_dual(self) -> Exponent:
        return self.q.dual()

    @property
    def gap(self) -> float:
        """alpha - 1/p."""
        return self.alpha - float(self.p.inverse)

    @property
    def level_exponent(self) -> float:
        """alpha - 1/p + 1/2, the exponent of the level weight b^(...)|j|."""
        return self.gap + 0.5

    @property
    def eval_ok(self) -> bool:
        if self.q.is_one:
            return self.alpha >= float(self.p.inverse)
        return self.alpha > float(self.p.inverse)

    def with_exponents(self, p=None, q=None) -> "SpaceParams":
        return SpaceParams(self.b, self.s, self.alpha, self.p if p is None else p, self.q if q is None else q)


def point_evaluation_constant(params: SpaceParams) -> float:
    """C_{b,alpha,p,q} with |f(x)| <= C^s ||f||_wav."""
    if not params.eval_ok:
        raise ValidationError(f"point evaluation is unbounded for {params}")
    b = params.b
    base = b ** float(params.p_dual.inverse)
    if params.q_dual.is_infinite:
        return base
    inv_q = float(params.q_dual.inverse)
    return base * (1.0 - b ** (-params.gap / inv_q)) ** (-inv_q)


@dataclass(frozen=True)
class Surd:
    """An exact element rational + radical * sqrt(base) of Q(sqrt(b))."""

    rational: Fraction
    radical: Fraction
    base: int

    def __post_init__(self):
        object.__setattr__(self, "rational", Fraction(self.rational))
        object.__setattr__(self, "radical", Fraction(self.radical))
        root = math.isqrt(self.base)
        if root * root == self.base and self.radical:
            object.__setattr__(self, "rational", self.rational + self.radical * root)
            object.__setattr__(self, "radical", Fraction(0))

    @classmethod
    def power(cls, base: int, half_exponent: int, coefficient=1) -> "Surd":
        """coefficient * base^(half_exponent / 2)."""
        whole, odd = divmod(half_exponent, 2)
        scale = Fraction(coefficient) * Fraction(base) ** whole
        return cls(0, scale, base) if odd else cls(scale, 0, base)

    def _coerce(self, other) -> "Surd":
        if isinstance(other, Surd):
            if other.base != self.base:
                raise ValidationError(f"cannot combine sqrt({self.base}) with sqrt({other.base})")
            return other
        if isinstance(other, (int, Rational)):
            return Surd(Fraction(other), Fraction(0), self.base)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Surd(self.rational + other.rational, self.radical + other.radical, self.base)

    __radd__ = __add__

    def __neg__(self):
        return Surd(-self.rational, -self.radical, self.base)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Surd(
            self.rational * other.rational + self.radical * other.radical * self.base,
            self.rational * other.radical + self.radical * other.rational,
            self.base,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Rational)):
            return Surd(self.rational / other, self.radical / other, self.base)
        return NotImplemented

    def sign(self) -> int:
        a, c = self.rational, self.radical
        sa, sc = (a > 0) - (a < 0), (c > 0) - (c < 0)
        if sc == 0:
            return sa
        if sa == 0 or sa == sc:
            return sc
        # opposite signs: compare a^2 with c^2 b
        diff = a * a - c * c * self.base
        if diff == 0:
            return 0
        return sa if diff > 0 else sc

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def is_zero(self) -> bool:
        return self.rational == 0 and self.radical == 0

    def __float__(self):
        return float(self.rational) + float(self.radical) * math.sqrt(self.base)

    def __eq__(self, other):
        if isinstance(other, (int, Rational)):
            return self.radical == 0 and self.rational == other
        if isinstance(other, Surd):
            return (self - other).is_zero()
        return NotImplemented

    def __hash__(self):
        if self.radical == 0:
            return hash(self.rational)
        return hash((self.rational, self.radical, self.base))

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __repr__(self):
        if self.radical == 0:
            return f"Surd({self.rational})"
        return f"Surd({self.rational} + {self.radical}*sqrt({self.base}))"


Exact = Union[Fraction, Surd]


@dataclass(frozen=True, order=True)
class WaveletIndex:
    """The triple (j, k, i) of Psi^j_{i,k} in base b."""

    base: int
    j: Tuple[int, ...]
    k: Tuple[int, ...]
    i: Tuple[int, ...]

    def __post_init__(self):
        check_base(self.base)
        j, k, i = tuple(map(int, self.j)), tuple(map(int, self.k)), tuple(map(int, self.i))
        if not len(j) == len(k) == len(i):
            raise ValidationError(f"j, k, i must have equal length: {j}, {k}, {i}")
        for jl, kl, il in zip(j, k, i):
            if jl < 0:
                raise ValidationError(f"negative level {jl}")
            kmax = self.base ** (jl - 1) if jl >= 1 else 1
            if not 0 <= kl < kmax:
                raise ValidationError(f"k={kl} outside [0, {kmax}) at level {jl}")
            imax = self.base if jl >= 1 else 1
            if not 0 <= il < imax:
                raise ValidationError(f"i={il} outside [0, {imax}) at level {jl}")
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "i", i)

    @classmethod
    def zero(cls, base: int, s: int) -> "WaveletIndex":
        return cls(base, (0,) * s, (0,) * s, (0,) * s)

    @property
    def s(self) -> int:
        return len(self.j)

    @property
    def level(self) -> int:
        return sum(self.j)

    @property
    def active(self) -> int:
        """J, the number of coordinates with j_l > 0."""
        return sum(1 for jl in self.j if jl > 0)

    def sort_key(self):
        return (self.level, self.j, self.k, self.i)


def indices_at(base: int, j: Sequence[int]) -> Iterator[WaveletIndex]:
    """All (k, i) at level vector j in lexicographic order."""
    kr = [range(base ** (jl - 1)) if jl else range(1) for jl in j]
    ir = [range(base) if jl else range(1) for jl in j]
    for k in np.ndindex(*[len(r) for r in kr]):
        for i in np.ndindex(*[len(r) for r in ir]):
            yield WaveletIndex(base, tuple(j), tuple(int(v) for v in k), tuple(int(v) for v in i))


def _coordinate(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


def psi_value(b: int, j: int, i: int, k: int, x) -> Surd:
    """Exact psi^j_{i,k}(x) for a rational or float coordinate x."""
    WaveletIndex(b, (j,), (k,), (i,))
    x = _coordinate(x)
    if not 0 <= x < 1:
        return Surd(0, 0, b)
    if j == 0:
        return Surd(1, 0, b)
    y = x * b ** (j - 1) - k
    if not 0 <= y < 1:
        return Surd(0, 0, b)
    cell = math.floor(y * b)
    return Surd.power(b, j, Fraction(b * (cell == i) - 1, b))


def psi_eval(b: int, j: int, i: int, k: int, x) -> float:
    return float(psi_value(b, j, i, k, x))


def _point_coordinates(x) -> Tuple[Fraction, ...]:
    if isinstance(x, BadicPoint):
        return x.values()
    return tuple(_coordinate(v) for v in x)


def Psi_value(idx: WaveletIndex, x) -> Surd:
    coords = _point_coordinates(x)
    if len(coords) != idx.s:
        raise ValidationError(f"point of dimension {len(coords)} for an index of dimension {idx.s}")
    out = Surd(1, 0, idx.base)
    for jl, il, kl, xl in zip(idx.j, idx.i, idx.k, coords):
        out = out * psi_value(idx.base, jl, il, kl, xl)
        if out.is_zero():
            break
    return out


def Psi_eval(idx: WaveletIndex, x) -> float:
    return float(Psi_value(idx, x))


@dataclass(frozen=True, eq=False)
class PiecewiseConstant:
    """A function constant on the cells of the level-m grid of [0,1)^s.

    `values` has shape (b^m,) * s. Integer, Fraction (object) or Surd cells
    keep every derived quantity exact; float cells give float results.
    """

    base: int
    level: int
    values: np.ndarray

    def __post_init__(self):
        check_base(self.base)
        values = np.asarray(self.values)
        n = self.base**self.level
        if values.ndim == 0 or any(d != n for d in values.shape):
            raise ValidationError(f"cell array of shape {values.shape} does not match b^m = {n}")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, base: int, level: int, s: int, value=1) -> "PiecewiseConstant":
        n = base**level
        values = np.full((n,) * s, value, dtype=object if isinstance(value, (Fraction, Surd)) else None)
        return cls(base, level, values)

    @classmethod
    def indicator(cls, base: int, level: int, j: Sequence[int], k: Sequence[int]) -> "PiecewiseConstant":
        """1 on the elementary interval E^j_k, 0 elsewhere."""
        n = base**level
        values = np.zeros((n,) * len(j), dtype=np.int64)
        sl = []
        for jl, kl in zip(j, k):
            if jl > level:
                raise ValidationError(f"interval level {jl} finer than grid level {level}")
            width = base ** (level - jl)
            sl.append(slice(kl * width, (kl + 1) * width))
        values[tuple(sl)] = 1
        return cls(base, level, values)

    @property
    def s(self) -> int:
        return self.values.ndim

    @property
    def is_exact(self) -> bool:
        return self.values.dtype.kind in "iuO"

    def _scalar(self, total):
        if self.is_exact:
            if isinstance(total, Surd):
                return total
            return Fraction(int(total)) if isinstance(total, (int, np.integer)) else Fraction(total)
        return float(total)

    def cell_volume(self) -> Fraction:
        return Fraction(1, self.base ** (self.level * self.s))

    def integral(self):
        total = self.values.sum()
        if self.is_exact:
            return self._scalar(total) * self.cell_volume()
        return float(total) * float(self.cell_volume())

    def aggregate(self, j: Sequence[int]) -> np.ndarray:
        """Sum of cell values over each cell of level j (requires j_l <= m)."""
        if len(j) != self.s:
            raise ValidationError(f"level vector {tuple(j)} does not match dimension {self.s}")
        shape = []
        for jl in j:
            if jl > self.level:
                raise ValidationError(f"level {jl} is finer than the grid level {self.level}")
            shape.extend([self.base**jl, self.base ** (self.level - jl)])
        return self.values.reshape(shape).sum(axis=tuple(range(1, 2 * self.s, 2)))

    def evaluate(self, points) -> np.ndarray:
        """Cell values at the points of a PointSet (half-open cells)."""
        cells = points.cell_indices((self.level,) * self.s)
        return self.values[tuple(cells.T)]

    def __call__(self, x) -> float:
        coords = _point_coordinates(x)
        n = self.base**self.level
        cell = tuple(min(math.floor(c * n), n - 1) for c in coords)
        return self.values[cell]

    def __add__(self, other: "PiecewiseConstant") -> "PiecewiseConstant":
        if (other.base, other.level, other.s) != (self.base, self.level, self.s):
            raise ValidationError("piecewise constants on different grids")
        return PiecewiseConstant(self.base, self.level, self.values + other.values)

    def __mul__(self, scalar) -> "PiecewiseConstant":
        return PiecewiseConstant(self.base, self.level, self.values * scalar)

    __rmul__ = __mul__

    def lp_norm(self, p) -> float:
        p = Exponent.parse(p)
        vals = np.abs(self.values.astype(float)).ravel()
        if p.is_infinite:
            return float(vals.max())
        return float(np.mean(vals ** p.as_float()) ** float(p.inverse))


def _digit_contract(block: np.ndarray, b: int, active_axes: Sequence[int]) -> np.ndarray:
    """Contract each active digit axis with M[d, i] = b [d == i] - 1."""
    dtype = object if block.dtype == object else (np.int64 if block.dtype.kind in "iu" else float)
    M = (b * np.eye(b, dtype=np.int64) - 1).astype(dtype)
    out = block
    for axis in active_axes:
        out = np.moveaxis(np.tensordot(out, M, axes=([axis], [0])), -1, axis)
    return out


def level_coefficients(f: PiecewiseConstant, j: Sequence[int]):
    """All coefficients <f, Psi^j_{i,k}> at one level vector, shape per axis (k_l, i_l).

    Returns an array of interleaved shape (K_1, I_1, ..., K_s, I_s) where
    K_l = b^(j_l - 1) or 1 and I_l = b or 1, together with the scale factor
    b^(|j|/2 - m s - J) (as a Surd on exact inputs) that multiplies the
    integer or float sums in the array.
    """
    b, m, s = f.base, f.level, f.s
    agg = f.aggregate(j)
    shape, active = [], []
    for ell, jl in enumerate(j):
        if jl == 0:
            shape.extend([1, 1])
        else:
            shape.extend([b ** (jl - 1), b])
            active.append(2 * ell + 1)
    sums = _digit_contract(agg.reshape(shape), b, active)
    J = len(active)
    half = sum(j) - 2 * (m * s + J)
    if f.is_exact:
        return sums, Surd.power(b, half)
    return sums, b ** (half / 2.0)


def inner_product_pc(f: PiecewiseConstant, idx: WaveletIndex):
    """<f, Psi^j_{i,k}>: exact (Fraction or Surd) for exact cells, float otherwise."""
    if idx.base != f.base or idx.s != f.s:
        raise ValidationError("index and function live on different grids")
    sums, scale = level_coefficients(f, idx.j)
    pos = []
    for kl, il in zip(idx.k, idx.i):
        pos.extend([kl, il])
    value = sums[tuple(pos)]
    if f.is_exact:
        total = scale * (value if isinstance(value, Surd) else Fraction(value))
        return total.rational if total.radical == 0 else total
    return float(value) * scale


class CoeffMap(Mapping):
    """A finitely supported coefficient sequence over WaveletIndex.

    Iteration is level-major, then lexicographic in (j, k, i).
    """

    def __init__(self, params: SpaceParams, entries: Optional[Mapping[WaveletIndex, object]] = None):
        self.params = params
        items = dict(entries or {})
        for idx in items:
            if idx.base != params.b or idx.s != params.s:
                raise ValidationError(f"index {idx} does not match base {params.b}, dimension {params.s}")
        self._entries = dict(sorted(items.items(), key=lambda kv: kv[0].sort_key()))

    def __getitem__(self, idx):
        return self._entries[idx]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def __repr__(self):
        return f"CoeffMap({len(self)} entries, b={self.params.b}, s={self.params.s})"

    def scaled(self, factor) -> "CoeffMap":
        return CoeffMap(self.params, {idx: factor * v for idx, v in self._entries.items()})

    def with_params(self, params: SpaceParams) -> "CoeffMap":
        return CoeffMap(params, self._entries)

    def by_level(self) -> Dict[Tuple[int, ...], Dict[WaveletIndex, object]]:
        out: Dict[Tuple[int, ...], Dict[WaveletIndex, object]] = {}
        for idx, v in self._entries.items():
            out.setdefault(idx.j, {})[idx] = v
        return out

    def zero_sum_violation(self) -> float:
        """Largest |sum_i c(j,k,i)| over any active direction; 0 when the constraint holds."""
        worst = 0.0
        for j, entries in self.by_level().items():
            for ell, jl in enumerate(j):
                if jl == 0:
                    continue
                sums: Dict[tuple, object] = {}
                for idx, v in entries.items():
                    key = (idx.k, idx.i[:ell] + idx.i[ell + 1:])
                    sums[key] = sums.get(key, 0) + v
                if sums:
                    worst = max(worst, max(abs(float(v)) for v in sums.values()))
        return worst


def coefficients_pc(f: PiecewiseConstant, params: Optional[SpaceParams] = None) -> CoeffMap:
    """All nonzero coefficients of f, for every j in [0, m]^s."""
    params = params or SpaceParams(f.base, f.s, 1.0)
    entries = {}
    for j in np.ndindex(*([f.level + 1] * f.s)):
        sums, scale = level_coefficients(f, j)
        for pos in zip(*np.nonzero(sums != 0)):
            k = tuple(int(v) for v in pos[0::2])
            i = tuple(int(v) for v in pos[1::2])
            value = sums[pos]
            if f.is_exact:
                c = scale * (value if isinstance(value, Surd) else Fraction(int(value)))
                c = c.rational if c.radical == 0 else c
            else:
                c = float(value) * scale
            entries[WaveletIndex(f.base, tuple(j), k, i)] = c
    return CoeffMap(params, entries)


def combine_levels(level_norms: Mapping[Tuple[int, ...], float], params: SpaceParams) -> float:
    """The l_q-over-levels combination of per-level l_p norms A_j."""
    weight = params.level_exponent
    b, q = params.b, params.q
    terms = []
    for j, a in level_norms.items():
        if a == 0:
            continue
        terms.append((sum(j) * weight * math.log(b) + math.log(a)))
    if not terms:
        return 0.0
    logs = np.array(terms)
    if q.is_infinite:
        return float(np.exp(logs.max()))
    qv = q.as_float()
    top = logs.max()
    return float(np.exp(top) * np.sum(np.exp(qv * (logs - top))) ** (1.0 / qv))


def haar_norm(c: CoeffMap) -> float:
    """||c||_{wav,alpha,s,p,q}: l_p over (k,i), weighted l_q over levels."""
    level_norms = {
        j: lp_norm(np.array([float(v) for v in entries.values()]), c.params.p)
        for j, entries in c.by_level().items()
    }
    return combine_levels(level_norms, c.params)


def pc_level_norms(f: PiecewiseConstant, p: Exponent, max_level: Optional[int] = None) -> Dict[Tuple[int, ...], float]:
    """Per-level l_p norms of the coefficients of f without building a CoeffMap."""
    p = Exponent.parse(p)
    out = {}
    top = f.level * f.s if max_level is None else max_level
    for j in level_vectors(top, f.s):
        if max(j) > f.level:
            continue
        sums, scale = level_coefficients(f, j)
        out[j] = lp_norm(np.asarray(sums, dtype=float), p) * float(scale)
    return out


def series_eval(c: CoeffMap, x):
    """S(c)(x); exact when the coefficients and x are exact."""
    coords = _point_coordinates(x)
    exact = all(isinstance(v, (int, Rational, Surd)) for v in c.values())
    total = Surd(0, 0, c.params.b) if exact else 0.0
    for idx, v in c.items():
        psi = Psi_value(idx, coords)
        if psi.is_zero():
            continue
        total = total + (psi * v if exact else float(psi) * float(v))
    if exact:
        return total.rational if total.radical == 0 else total
    return total


def synthesize_pc(c: CoeffMap, level: Optional[int] = None) -> PiecewiseConstant:
    """The finite series S(c) as a float PiecewiseConstant of the given level."""
    b, s = c.params.b, c.params.s
    needed = max((max(idx.j) for idx in c), default=0)
    level = needed if level is None else level
    if level < needed:
        raise ValidationError(f"level {level} too coarse for coefficients up to level {needed}")
    n = b**level
    grid = np.arange(n)
    values = np.zeros((n,) * s)
    for idx, v in c.items():
        factors = []
        for jl, kl, il in zip(idx.j, idx.k, idx.i):
            if jl == 0:
                factors.append(np.ones(n))
                continue
            block = grid // b ** (level - jl + 1)
            digit = (grid // b ** (level - jl)) % b
            factors.append(np.where(block == kl, b ** (jl / 2.0 - 1.0) * (b * (digit == il) - 1.0), 0.0))
        term = factors[0]
        for fac in factors[1:]:
            term = np.multiply.outer(term, fac)
        values += float(v) * term
    return PiecewiseConstant(b, level, values)


def wavelet_pc(idx: WaveletIndex, level: int) -> PiecewiseConstant:
    """Psi^j_{i,k} as an exact (Surd-valued) PiecewiseConstant of the given level."""
    if max(idx.j, default=0) > level:
        raise ValidationError(f"level {level} cannot represent index {idx}")
    b, n = idx.base, idx.base**level
    factors = []
    for jl, kl, il in zip(idx.j, idx.k, idx.i):
        grid = np.arange(n)
        if jl == 0:
            factors.append(np.ones(n, dtype=np.int64))
            continue
        block = grid // b ** (level - jl + 1)
        digit = (grid // b ** (level - jl)) % b
        factors.append(np.where(block == kl, b * (digit == il) - 1, 0).astype(np.int64))
    ints = factors[0]
    for fac in factors[1:]:
        ints = np.multiply.outer(ints, fac)
    scale = Surd.power(b, idx.level - 2 * idx.active)
    values = np.empty(ints.shape, dtype=object)
    for pos, v in np.ndenumerate(ints):
        values[pos] = scale * int(v)
    return PiecewiseConstant(b, level, values)


def coeff_smooth(f: Callable[[np.ndarray], np.ndarray], idx: WaveletIndex, tol: float = 1e-10,
                 n0: int = 4, max_points: int = 2_000_000) -> float:
    """<f, Psi^j_{i,k}> for a callable f by tensor Gauss-Legendre on the constancy cells.

    `f` takes an (n, s) array of points and returns n values.
    """
    b = idx.base

    def axis_rule(jl, kl, il, n):
        gx, gw = legendre_rule(n)
        if jl == 0:
            return gx, gw, np.ones_like(gx)
        width = float(b) ** -jl
        starts = (kl * b + np.arange(b)) * width
        x = (starts[:, None] + width * gx[None, :]).ravel()
        w = np.tile(width * gw, b)
        phi = np.repeat(b * (np.arange(b) == il) - 1.0, n)
        return x, w, phi

    def evaluate(n):
        rules = [axis_rule(jl, kl, il, n) for jl, kl, il in zip(idx.j, idx.k, idx.i)]
        total_points = math.prod(len(r[0]) for r in rules)
        if total_points > max_points:
            raise NumericBudgetExceeded(
                f"coefficient quadrature for {idx} needs more than {max_points} points"
            )
        mesh = np.meshgrid(*[r[0] for r in rules], indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=1)
        weight = rules[0][1] * rules[0][2]
        for r in rules[1:]:
            weight = np.multiply.outer(weight, r[1] * r[2])
        values = np.asarray(f(pts), dtype=float)
        return float(np.dot(weight.ravel(), values)) * b ** (idx.level / 2.0 - idx.active)

    n = n0
    previous = evaluate(n)
    while True:
        n *= 2
        current = evaluate(n)
        if abs(current - previous) <= tol:
            return current
        previous = current


@dataclass
class FrameReport:
    b: int
    j: int
    k: int
    precision: int
    sum_deviation: float
    gram_deviation: float
    exact: bool
    grid_points: int
    gram_entries: int


@lru_cache(maxsize=32)
def _frame_rows(b: int, precision: int):
    """Integer psi^j_{i,k} * b^(1 - j/2) for every index with j <= precision, on the level grid."""
    grid = np.arange(b**precision)
    keys, rows = [(0, 0, 0)], [np.ones(grid.size, dtype=np.int64)]
    for j in range(1, precision + 1):
        block = grid // b ** (precision - j + 1)
        digit = (grid // b ** (precision - j)) % b
        for k in range(b ** (j - 1)):
            for i in range(b):
                keys.append((j, k, i))
                rows.append(np.where(block == k, b * (digit == i) - 1, 0))
    mat = np.stack(rows).astype(np.int64)
    mat.setflags(write=False)
    return tuple(keys), mat


def frame_check(b: int, j: int, k: int, precision: Optional[int] = None) -> FrameReport:
    """Check the vanishing sum over i and the Gram entries of psi^j_{.,k} exactly.

    Values of psi^j at the level-`precision` grid are integers times
    b^(j/2 - 1), so both identities reduce to integer arithmetic; the Gram
    entries are compared in Q(sqrt(b)).
    """
    b = check_base(b)
    precision = j if precision is None else precision
    if j < 1 or precision < j:
        raise ValidationError(f"need 1 <= j <= precision, got j={j}, precision={precision}")
    WaveletIndex(b, (j,), (k,), (0,))
    keys, mat = _frame_rows(b, precision)
    mine = [n for n, key in enumerate(keys) if key[0] == j and key[1] == k]
    sums = mat[mine].sum(axis=0)
    sum_dev = Surd.power(b, j - 2, int(np.abs(sums).max()))

    gram = mat[mine] @ mat.T
    same = np.array([key[:2] == (j, k) for key in keys])
    gram_dev = Surd(0, 0, b)
    # off-block entries must vanish as integers
    others = np.flatnonzero(~same)
    for a, col in zip(*np.nonzero(gram[:, others])):
        j2 = keys[others[col]][0]
        scale = Surd.power(b, j + j2 - 4 + (2 if j2 == 0 else 0), Fraction(1, b**precision))
        diff = abs(scale * int(gram[a, others[col]]))
        if gram_dev < diff:
            gram_dev = diff
    scale = Surd.power(b, 2 * j - 4, Fraction(1, b**precision))
    for a, row in enumerate(mine):
        for col in np.flatnonzero(same):
            expected = Fraction(int(keys[row][2] == keys[col][2])) - Fraction(1, b)
            diff = abs(scale * int(gram[a, col]) - expected)
            if gram_dev < diff:
                gram_dev = diff
    exact = sum_dev.is_zero() and gram_dev.is_zero()
    if not exact:
        logger.warning("frame identities fail for b=%d j=%d k=%d", b, j, k)
    return FrameReport(b, j, k, precision, float(sum_dev), float(gram_dev), exact, int(sums.size), len(mine) * len(keys))
