"""(t,m,s)-net construction and combinatorial verification."""

import math
from dataclasses import dataclass, field
from logging import getLogger
from typing import List, Optional, Sequence, Tuple

import galois
import numpy as np

from .badic import BadicPoint, snap
from .errors import ValidationError
from .util import check_base, compositions, is_prime

logger = getLogger(__name__)

# largest power of b whose numerators still fit in int64 arithmetic
INT64_DIGIT_BITS = 62


def max_precision(b: int) -> int:
    return int(INT64_DIGIT_BITS // math.log2(b))


@dataclass(frozen=True, eq=False)
class PointSet:
    """A multiset of N points in [0,1)^s, stored as an (N, s) array of numerators over b^precision."""

    base: int
    precision: int
    numerators: np.ndarray

    def __post_init__(self):
        check_base(self.base)
        if self.precision < 0 or self.precision > max_precision(self.base):
            raise ValidationError(
                f"precision {self.precision} outside [0, {max_precision(self.base)}] for base {self.base}"
            )
        nums = np.array(self.numerators, dtype=np.int64, copy=True)
        if nums.ndim != 2 or nums.shape[0] == 0 or nums.shape[1] == 0:
            raise ValidationError(f"expected a non-empty (N, s) array, got shape {nums.shape}")
        if nums.min() < 0 or nums.max() >= self.base**self.precision:
            raise ValidationError("numerators out of range for the given base and precision")
        nums.setflags(write=False)
        object.__setattr__(self, "numerators", nums)

    def __len__(self):
        return self.numerators.shape[0]

    @property
    def size(self) -> int:
        return self.numerators.shape[0]

    @property
    def dim(self) -> int:
        return self.numerators.shape[1]

    @property
    def m(self) -> int:
        """The net exponent m with N = b^m."""
        m = round(math.log(self.size, self.base))
        if self.base**m != self.size:
            raise ValidationError(f"point set of size {self.size} is not a power of {self.base}")
        return m

    @property
    def is_power_of_base(self) -> bool:
        try:
            self.m
        except ValidationError:
            return False
        return True

    @classmethod
    def from_points(cls, points: Sequence[BadicPoint]) -> "PointSet":
        if not points:
            raise ValidationError("empty point list")
        b = points[0].base
        if any(p.base != b for p in points):
            raise ValidationError("all points must share one base")
        precision = max(p.precision for p in points)
        nums = [p.with_precision(precision).numerators for p in points]
        return cls(b, precision, np.array(nums, dtype=np.int64))

    @classmethod
    def from_floats(cls, x, b: int, precision: Optional[int] = None) -> "PointSet":
        """Snap real points in [0,1)^s to the grid of the given precision by truncation."""
        b = check_base(b)
        if precision is None:
            precision = max_precision(b)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return cls.from_points([snap(row, b, precision) for row in x])

    def points(self) -> List[BadicPoint]:
        return [BadicPoint(self.base, self.precision, tuple(int(v) for v in row)) for row in self.numerators]

    def to_float(self) -> np.ndarray:
        return self.numerators / float(self.base) ** self.precision

    def with_precision(self, precision: int) -> "PointSet":
        if precision < self.precision:
            raise ValidationError("use a precision at least as fine as the current one")
        scale = self.base ** (precision - self.precision)
        return PointSet(self.base, precision, self.numerators * scale)

    def cell_indices(self, j: Sequence[int]) -> np.ndarray:
        """Cell index k of every point at level vector j, shape (N, s)."""
        if len(j) != self.dim:
            raise ValidationError(f"level vector {tuple(j)} does not match dimension {self.dim}")
        out = np.empty_like(self.numerators)
        for ell, jl in enumerate(j):
            if jl <= self.precision:
                out[:, ell] = self.numerators[:, ell] // self.base ** (self.precision - jl)
            else:
                if jl > max_precision(self.base):
                    raise ValidationError(f"level {jl} too fine for int64 cell indices in base {self.base}")
                out[:, ell] = self.numerators[:, ell] * self.base ** (jl - self.precision)
        return out

    def histogram(self, j: Sequence[int]) -> np.ndarray:
        """Point counts per cell of level j, an integer array of shape (b^j_1, ..., b^j_s)."""
        shape = tuple(self.base**jl for jl in j)
        flat = np.ravel_multi_index(tuple(self.cell_indices(j).T), shape)
        return np.bincount(flat, minlength=math.prod(shape)).reshape(shape)

    def multiset(self) -> List[Tuple[float, ...]]:
        return sorted(tuple(row) for row in self.to_float().tolist())

    def __repr__(self):
        return f"PointSet(b={self.base}, precision={self.precision}, N={self.size}, s={self.dim})"


@dataclass(frozen=True, eq=False)
class GeneratorMatrices:
    """s generator matrices of size m x m over GF(b)."""

    base: int
    matrices: np.ndarray

    def __post_init__(self):
        if not is_prime(self.base):
            raise ValidationError(f"digital nets need a prime base, got {self.base}")
        mats = np.array(self.matrices, dtype=np.int64, copy=True)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValidationError(f"expected an (s, m, m) array of matrices, got shape {mats.shape}")
        if mats.shape[0] == 0:
            raise ValidationError("need at least one generator matrix")
        object.__setattr__(self, "matrices", np.mod(mats, self.base))

    @property
    def s(self) -> int:
        return self.matrices.shape[0]

    @property
    def m(self) -> int:
        return self.matrices.shape[1]


@dataclass
class NetCertificate:
    b: int
    m: int
    s: int
    t: int
    verified: bool
    witness: Optional[Tuple[Tuple[int, ...], Tuple[int, ...]]] = None
    witness_count: Optional[int] = None
    shapes_checked: int = field(default=0)


def _digit_table(b: int, m: int) -> np.ndarray:
    """Digits of n = 0..b^m-1, least significant first, shape (m, b^m)."""
    n = np.arange(b**m, dtype=np.int64)
    return np.stack([(n // b**r) % b for r in range(m)]) if m else np.zeros((0, 1), dtype=np.int64)


def van_der_corput(b: int, m: int) -> PointSet:
    """The radical inverses of 0..b^m-1 in base b, a (0,m,1)-net."""
    b = check_base(b)
    if m < 0:
        raise ValidationError(f"m must be non-negative, got {m}")
    digits = _digit_table(b, m)
    weights = b ** np.arange(m - 1, -1, -1, dtype=np.int64)
    nums = weights @ digits if m else np.zeros(1, dtype=np.int64)
    return PointSet(b, m, nums.reshape(-1, 1))


def digital_net(G: GeneratorMatrices) -> PointSet:
    """Digital net of the generator matrices G.

    The base-b digits of n feed the matrix columns least significant first;
    row r of C_l a gives digit r + 1 after the radix point of coordinate l.
    """
    b, m, s = G.base, G.m, G.s
    if m == 0:
        return PointSet(b, 0, np.zeros((1, s), dtype=np.int64))
    GF = galois.GF(b)
    a = GF(_digit_table(b, m))
    weights = b ** np.arange(m - 1, -1, -1, dtype=np.int64)
    nums = np.empty((b**m, s), dtype=np.int64)
    for ell in range(s):
        y = (GF(G.matrices[ell]) @ a).view(np.ndarray).astype(np.int64)
        nums[:, ell] = weights @ y
    return PointSet(b, m, nums)


def pascal_power(b: int, m: int, power: int) -> np.ndarray:
    """The power-th power of the upper triangular Pascal matrix mod b."""
    mat = np.zeros((m, m), dtype=np.int64)
    for r in range(m):
        for c in range(r, m):
            mat[r, c] = math.comb(c, r) * pow(power, c - r, b) % b
    return mat


def faure_matrices(b: int, m: int, s: int) -> GeneratorMatrices:
    if not is_prime(b):
        raise ValidationError(f"Faure nets need a prime base, got {b}")
    if s < 1 or s > b:
        raise ValidationError(f"Faure nets need 1 <= s <= b, got s={s}, b={b}")
    return GeneratorMatrices(b, np.stack([pascal_power(b, m, ell) for ell in range(s)]))


def faure_net(b: int, m: int, s: int) -> PointSet:
    return digital_net(faure_matrices(b, m, s))


def random_point_set(b: int, m: int, s: int, seed: int = 0, precision: Optional[int] = None) -> PointSet:
    """b^m independent uniform points, exact at the given (default: finest int64) precision."""
    b = check_base(b)
    precision = max_precision(b) if precision is None else precision
    rng = np.random.Generator(np.random.Philox(seed))
    nums = rng.integers(0, b**precision, size=(b**m, s), dtype=np.int64)
    return PointSet(b, precision, nums)


def verify_net(P: PointSet, t: int) -> NetCertificate:
    """Check that every elementary interval of volume b^(t-m) holds exactly b^t points.

    Only shapes with |j| = m - t are counted; coarser intervals are disjoint
    unions of those. On failure the witness is the first offending cell in
    row-major order, which may be overfull rather than empty: four copies of
    the origin in base 2 report k = (0,) holding all four points.
    """
    m, b, s = P.m, P.base, P.dim
    if t < 0 or t > m:
        raise ValidationError(f"t must lie in [0, {m}], got {t}")
    target = b**t
    shapes = 0
    for j in compositions(m - t, s):
        shapes += 1
        counts = P.histogram(j)
        bad = np.flatnonzero(counts.ravel() != target)
        if bad.size:
            k = tuple(int(v) for v in np.unravel_index(bad[0], counts.shape))
            logger.debug("shape %s fails at cell %s with %d points", j, k, counts.ravel()[bad[0]])
            return NetCertificate(
                b, m, s, t, False, witness=(j, k), witness_count=int(counts.ravel()[bad[0]]), shapes_checked=shapes
            )
    return NetCertificate(b, m, s, t, True, shapes_checked=shapes)


def t_value(P: PointSet) -> int:
    """The smallest t for which P is a (t,m,s)-net."""
    m = P.m
    for t in range(m + 1):
        if verify_net(P, t).verified:
            logger.info("point set %r is a (%d,%d,%d)-net", P, t, m, P.dim)
            return t
    # t = m always holds for b^m points
    return m
