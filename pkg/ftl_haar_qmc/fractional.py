"""Spaces of fractional smoothness alpha in (0, 1].

A function is represented through its densities: f = Phi((f~_u)_u) with

    Phi(x) = sum_u Gamma(alpha)^-|u| int_{[0,x_u]} f~_u(t_u) prod_j (x_j - t_j)^(alpha-1) dt_u,

and its integration error against an equal-weight rule is governed by the
fractional discrepancy function

    Delta_alpha(t_u, u, P) = alpha^-|u| prod_j (1 - t_j)^alpha
                             - 1/N sum_n prod_j (x_{n,j} - t_j)_+^(alpha-1).

Coordinates of u are 0-based throughout.
"""

import math
from dataclasses import dataclass
from logging import getLogger
from numbers import Real
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gamma
from scipy.stats import qmc as scipy_qmc

from .errors import NumericBudgetExceeded, ValidationError
from .haar import Exponent, lp_norm
from .nets import PointSet
from .quadrature import PANEL_NODES, gauss_panels, graded_integral, graded_rule, jacobi_rule, legendre_rule, refine
from .util import nonempty_subsets

logger = getLogger(__name__)

Subset = Tuple[int, ...]

DEFAULT_TOL = 1e-10
QUAD_TOL = 1e-6
GRID_BUDGET = 1_000_000_000
CHUNK = 1 << 22
WARNOCK_BLOCK = 256
EMBEDDING_LEVELS = 40
PANELS_PER_POINT = 16
MIN_PANELS = 64
METHODS = ("warnock", "tensor-quad", "monte-carlo")
METHOD_ALIASES = {"quad": "tensor-quad", "mc": "monte-carlo"}


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha <= 1.0:
        raise ValidationError(f"smoothness alpha must lie in (0, 1], got {alpha}")
    return float(alpha)


def _check_kernel_alpha(alpha: float) -> float:
    if not 0.5 < alpha <= 1.0:
        raise ValidationError(f"the kernel needs alpha in (1/2, 1], got {alpha}")
    return float(alpha)


def _check_unit(values: np.ndarray, what: str) -> np.ndarray:
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise ValidationError(f"{what} must lie in [0, 1]")
    return values


def _coords(P) -> np.ndarray:
    """(N, s) float coordinates of a PointSet or array-like."""
    if isinstance(P, PointSet):
        return P.to_float()
    x = np.atleast_2d(np.asarray(P, dtype=float))
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
        raise ValidationError(f"expected a non-empty (N, s) array of points, got shape {x.shape}")
    return _check_unit(x, "points")


def _subset(u: Iterable[int], s: int) -> Subset:
    out = tuple(sorted({int(v) for v in u}))
    if out and (out[0] < 0 or out[-1] >= s):
        raise ValidationError(f"subset {out} is not contained in {{0, ..., {s - 1}}}")
    return out


def _positive_power(z: np.ndarray, a: float) -> np.ndarray:
    """z_+^a with the convention 0 for z <= 0."""
    return np.where(z > 0, np.maximum(z, np.finfo(float).tiny) ** a, 0.0)


# ---------------------------------------------------------------------------
# Riemann-Liouville operators
# ---------------------------------------------------------------------------


def frac_integral(ftilde, alpha: float, x, tol: float = DEFAULT_TOL):
    """(1/Gamma(alpha)) int_0^x f~(t) (x - t)^(alpha-1) dt.

    Args:
        ftilde (`callable` or `float`): the density, vectorized over arrays, or a constant.
        alpha (`float`): order of integration in (0, 1].
        x (`float` or `np.ndarray`): evaluation points in [0, 1].
        tol (`float`): target change between two node counts.
    """
    alpha = _check_alpha(alpha)
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = _check_unit(np.atleast_1d(xs).ravel(), "x")
    if not callable(ftilde):
        value = float(ftilde) * xs**alpha / gamma(alpha + 1.0)
        return float(value[0]) if scalar else value

    def evaluate(n):
        u, w = jacobi_rule(n, alpha - 1.0)
        values = np.asarray(ftilde(xs[:, None] * u[None, :]), dtype=float).reshape(xs.size, u.size)
        return xs**alpha * (values @ w) / gamma(alpha)

    value, _, _ = refine(evaluate, tol, what="fractional integral")
    return float(value[0]) if scalar else value


def _derivative_rule(n: int, alpha: float, levels: int = EMBEDDING_LEVELS):
    """Rule on [0,1] for the weight (1 - u)^-alpha, graded toward u = 0 on the left half.

    The integrand f(y u) - f(0) of a fractional integral behaves like u^alpha
    near 0, so the left half is resolved by geometric panels.
    """
    gx, gw = graded_rule(0.0, levels, n)
    left = 0.5 - 0.5 * gx
    left_w = 0.5 * gw * (1.0 - left) ** -alpha
    jx, jw = jacobi_rule(n, -alpha)
    right = 0.5 + 0.5 * jx
    right_w = 0.5 ** (1.0 - alpha) * jw
    return np.concatenate([left, right]), np.concatenate([left_w, right_w])


def rl_derivative(f: Callable[[np.ndarray], np.ndarray], alpha: float, x: float, h: float = 1e-3,
                  tol: float = DEFAULT_TOL, anchored: bool = True) -> float:
    """Riemann-Liouville derivative of order alpha in (0, 1) at x.

    Computes g(y) = (1/Gamma(1-alpha)) int_0^y (f(t) - f(0)) (y - t)^-alpha dt
    and differentiates it by a central difference with step h. With
    `anchored=False` the value f(0) is not subtracted.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"derivative order must lie in (0, 1), got {alpha}")
    if h <= 0:
        raise ValidationError(f"step must be positive, got {h}")
    if x - h < 0.0 or x + h > 1.0:
        raise ValidationError(f"x = {x} is too close to the boundary for step {h}")
    ys = np.array([x - h, x + h])
    shift = float(np.asarray(f(np.zeros(1)), dtype=float).ravel()[0]) if anchored else 0.0

    def evaluate(n):
        u, w = _derivative_rule(n, alpha)
        values = np.asarray(f((ys[:, None] * u[None, :]).ravel()), dtype=float).reshape(2, u.size)
        return ys ** (1.0 - alpha) * ((values - shift) @ w) / gamma(1.0 - alpha)

    g, _, _ = refine(evaluate, tol, n0=PANEL_NODES, max_nodes=256, what="Riemann-Liouville integral")
    return float((g[1] - g[0]) / (2.0 * h))


# ---------------------------------------------------------------------------
# Densities and Phi-synthesis
# ---------------------------------------------------------------------------


def _contract(values: np.ndarray, factors: Sequence[np.ndarray]) -> np.ndarray:
    """sum_cells values[c_1..c_d] prod_j factors[j][n, c_j], one result per row n."""
    out = np.tensordot(factors[0], values, axes=([1], [0]))
    for factor in factors[1:]:
        out = np.einsum("nk...,nk->n...", out, factor)
    return out


@dataclass(frozen=True, eq=False)
class PanelDensity:
    """A density constant on the cells of a tensor grid over [0,1]^u.

    `breaks` holds one increasing array from 0 to 1 per coordinate of u and
    `values` the cell values, shape (len(breaks[0]) - 1, ...).
    """

    breaks: Tuple[np.ndarray, ...]
    values: np.ndarray

    def __post_init__(self):
        breaks = []
        for br in self.breaks:
            br = np.asarray(br, dtype=float)
            if br.ndim != 1 or br.size < 2 or br[0] != 0.0 or br[-1] != 1.0 or np.any(np.diff(br) <= 0):
                raise ValidationError("panel breaks must increase strictly from 0 to 1")
            breaks.append(br)
        values = np.asarray(self.values, dtype=float)
        if values.shape != tuple(br.size - 1 for br in breaks):
            raise ValidationError(f"cell values of shape {values.shape} do not match the panel grid")
        object.__setattr__(self, "breaks", tuple(breaks))
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return len(self.breaks)

    def widths(self) -> List[np.ndarray]:
        return [np.diff(br) for br in self.breaks]

    def volumes(self) -> np.ndarray:
        vol = np.ones(())
        for w in self.widths():
            vol = np.multiply.outer(vol, w)
        return vol

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.atleast_2d(np.asarray(t, dtype=float))
        cells = tuple(
            np.clip(np.searchsorted(br, t[:, j], side="right") - 1, 0, br.size - 2)
            for j, br in enumerate(self.breaks)
        )
        return self.values[cells]

    def scaled(self, factor: float) -> "PanelDensity":
        return PanelDensity(self.breaks, factor * self.values)

    def lp_norm(self, p) -> float:
        p = Exponent.parse(p)
        if p.is_infinite:
            return float(np.abs(self.values).max())
        pv = p.as_float()
        return float(np.sum(np.abs(self.values) ** pv * self.volumes()) ** (1.0 / pv))

    def riemann_liouville(self, x: np.ndarray, alpha: float) -> np.ndarray:
        """int_{[0,x]} density(t) prod_j (x_j - t_j)^(alpha-1) dt for rows x of shape (n, d)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        factors = []
        for j, br in enumerate(self.breaks):
            z = x[:, j, None]
            factors.append((_positive_power(z - br[None, :-1], alpha) - _positive_power(z - br[None, 1:], alpha)) / alpha)
        return _contract(self.values, factors)

    def riemann_liouville_integral(self, alpha: float) -> float:
        """int_{[0,1]^u} of `riemann_liouville` in closed form."""
        factors = []
        for br in self.breaks:
            factors.append((((1.0 - br[:-1]) ** (alpha + 1.0) - (1.0 - br[1:]) ** (alpha + 1.0)) / (alpha * (alpha + 1.0)))[None, :])
        return float(_contract(self.values, factors)[0])


Density = Union[float, Callable[[np.ndarray], np.ndarray], PanelDensity]


@dataclass(frozen=True, eq=False)
class FracFunction:
    """f = Phi((f~_u)_u) given by one density per subset u of {0, ..., s-1}.

    A density is a number (constant), a callable taking an (n, |u|) array,
    or a PanelDensity. The density of the empty set must be a number.
    """

    alpha: float
    s: int
    densities: Mapping[Subset, Density]

    def __post_init__(self):
        _check_alpha(self.alpha)
        if self.s < 1:
            raise ValidationError(f"dimension must be positive, got {self.s}")
        normalized: Dict[Subset, Density] = {}
        for key, density in self.densities.items():
            u = _subset(key, self.s)
            if not u and not isinstance(density, Real):
                raise ValidationError("the density of the empty set must be a number")
            if isinstance(density, PanelDensity) and density.dim != len(u):
                raise ValidationError(f"panel density of dimension {density.dim} given for u = {u}")
            normalized[u] = density
        object.__setattr__(self, "densities", normalized)

    @classmethod
    def from_densities(cls, alpha: float, s: int, densities: Mapping[Subset, Density], fill: float = 0.0) -> "FracFunction":
        """Densities for every subset, missing ones set to the constant `fill`."""
        full: Dict[Subset, Density] = {(): fill}
        full.update({u: fill for u in nonempty_subsets(s)})
        full.update({_subset(k, s): v for k, v in densities.items()})
        return cls(alpha, s, full)

    def density(self, u: Iterable[int]) -> Density:
        u = _subset(u, self.s)
        if u not in self.densities:
            raise ValidationError(f"missing density for u = {u}")
        return self.densities[u]

    def scaled(self, factor: float) -> "FracFunction":
        def scale(d):
            if isinstance(d, PanelDensity):
                return d.scaled(factor)
            if callable(d):
                return lambda t, d=d: factor * np.asarray(d(t), dtype=float)
            return factor * float(d)

        return FracFunction(self.alpha, self.s, {u: scale(d) for u, d in self.densities.items()})

    def __call__(self, x, tol: float = DEFAULT_TOL):
        return phi_synthesize(self, x, tol)


def _tensor_riemann_liouville(density: Callable, x: np.ndarray, alpha: float, tol: float) -> np.ndarray:
    n_rows, d = x.shape
    n0, max_nodes = {1: (64, 1024), 2: (16, 256)}.get(d, (8, 64))
    scale = np.prod(x**alpha, axis=1)

    def evaluate(n):
        u, w = jacobi_rule(n, alpha - 1.0)
        grid = np.stack(np.meshgrid(*([u] * d), indexing="ij"), axis=-1).reshape(-1, d)
        weight = w
        for _ in range(d - 1):
            weight = np.multiply.outer(weight, w)
        weight = weight.ravel()
        if n_rows * grid.shape[0] > GRID_BUDGET:
            raise NumericBudgetExceeded(f"tensor rule with {n}^{d} nodes at {n_rows} points exceeds the grid budget")
        out = np.empty(n_rows)
        step = max(1, CHUNK // grid.shape[0])
        for start in range(0, n_rows, step):
            rows = x[start:start + step]
            t = rows[:, None, :] * grid[None, :, :]
            values = np.asarray(density(t.reshape(-1, d)), dtype=float).reshape(rows.shape[0], -1)
            out[start:start + step] = values @ weight
        return scale * out

    value, _, _ = refine(evaluate, tol, n0=n0, max_nodes=max_nodes, what="Phi integral")
    return value


def phi_term(F: FracFunction, u: Iterable[int], x, tol: float = DEFAULT_TOL):
    """The u-summand Gamma(alpha)^-|u| int f~_u(t_u) prod (x_j - t_j)^(alpha-1) dt_u."""
    u = _subset(u, F.s)
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    scalar = np.asarray(x).ndim == 1
    if xs.shape[1] != F.s:
        raise ValidationError(f"points of dimension {xs.shape[1]} for a function of dimension {F.s}")
    _check_unit(xs, "x")
    density = F.density(u)
    alpha = F.alpha
    if not u:
        value = np.full(xs.shape[0], float(density))
    else:
        xu = xs[:, list(u)]
        if isinstance(density, PanelDensity):
            value = density.riemann_liouville(xu, alpha)
        elif callable(density):
            value = _tensor_riemann_liouville(density, xu, alpha, tol)
        else:
            value = float(density) * np.prod(xu**alpha, axis=1) / alpha ** len(u)
        value = value / gamma(alpha) ** len(u)
    return float(value[0]) if scalar else value


def phi_synthesize(F: FracFunction, x, tol: float = DEFAULT_TOL):
    """Point values of Phi((f~_u)_u) at one point (shape (s,)) or many (shape (n, s))."""
    total = phi_term(F, (), x, tol)
    for u in nonempty_subsets(F.s):
        total = total + phi_term(F, u, x, tol)
    return total


def anchored_term(f: Callable[[np.ndarray], np.ndarray], u: Iterable[int], x) -> float:
    """sum_{v subset u} (-1)^|u \\ v| f(x_v, 0), the anchored component of f at x.

    `f` takes an (n, s) array; only the coordinates of `x` in u are used.
    """
    x = np.asarray(x, dtype=float).ravel()
    u = _subset(u, x.size)
    rows, signs = [], []
    for mask in range(1 << len(u)):
        v = [u[r] for r in range(len(u)) if mask >> r & 1]
        point = np.zeros(x.size)
        point[v] = x[v]
        rows.append(point)
        signs.append(-1.0 if (len(u) - len(v)) % 2 else 1.0)
    values = np.asarray(f(np.array(rows)), dtype=float).ravel()
    return float(np.dot(signs, values))


def _density_norm(density: Density, d: int, p: Exponent, tol: float) -> float:
    if isinstance(density, PanelDensity):
        return density.lp_norm(p)
    if not callable(density):
        return abs(float(density))

    def evaluate(n):
        gx, gw = legendre_rule(n)
        grid = np.stack(np.meshgrid(*([gx] * d), indexing="ij"), axis=-1).reshape(-1, d)
        weight = gw
        for _ in range(d - 1):
            weight = np.multiply.outer(weight, gw)
        values = np.abs(np.asarray(density(grid), dtype=float))
        if p.is_infinite:
            return values.max()
        pv = p.as_float()
        return float(np.dot(weight.ravel(), values**pv)) ** (1.0 / pv)

    n0, max_nodes = {1: (64, 1024), 2: (16, 256)}.get(d, (8, 64))
    value, _, _ = refine(evaluate, tol, n0=n0, max_nodes=max_nodes, what="density norm")
    return float(value)


def seminorm_V(F: FracFunction, p=2, q=2, tol: float = DEFAULT_TOL, full: bool = False) -> float:
    """V_{alpha,s,p,q}(f); with `full` the empty-set term |f~_0| joins the l_q sum."""
    p, q = Exponent.parse(p), Exponent.parse(q)
    terms = []
    if full:
        terms.append(abs(float(F.density(()))))
    for u in nonempty_subsets(F.s):
        terms.append(_density_norm(F.density(u), len(u), p, tol) / gamma(F.alpha) ** len(u))
    return lp_norm(np.array(terms), q)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def kernel_c(alpha: float, x, y, n: int = PANEL_NODES) -> np.ndarray:
    """C(x, y) = int_0^min(x,y) (x - t)^(alpha-1) (y - t)^(alpha-1) dt, elementwise.

    For x < y this is x^alpha int_0^1 (1-u)^(alpha-1) (y - x u)^(alpha-1) du,
    integrated by a rule graded toward the nearby singularity at u = y / x.
    The diagonal uses x^(2 alpha - 1) / (2 alpha - 1).
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    if alpha == 1.0:
        return lo.copy()
    out = np.zeros(lo.shape)
    diag = (lo == hi) & (lo > 0)
    out[diag] = lo[diag] ** (2.0 * alpha - 1.0) / (2.0 * alpha - 1.0)
    off = (lo > 0) & (lo < hi)
    if off.any():
        l, h = lo[off], hi[off]
        integral = graded_integral(lambda u, l, h: (h - l * u) ** (alpha - 1.0), alpha - 1.0, (h - l) / l, n, l, h)
        out[off] = l**alpha * integral
    return out


def _as_result(value: np.ndarray, scalar: bool):
    return float(value) if scalar else value


def kernel_K(alpha: float, x, y, tol: float = DEFAULT_TOL):
    """K_alpha(x, y) = 1 + C(x, y)."""
    alpha = _check_kernel_alpha(alpha)
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    x = _check_unit(np.asarray(x, dtype=float), "x")
    y = _check_unit(np.asarray(y, dtype=float), "y")
    if alpha == 1.0:
        return _as_result(1.0 + np.minimum(x, y), scalar)
    value, _, _ = refine(lambda n: kernel_c(alpha, x, y, n), tol, n0=PANEL_NODES, max_nodes=256, what="kernel")
    return _as_result(1.0 + value, scalar)


def kernel_Ks(alpha: float, x, y, tol: float = DEFAULT_TOL) -> float:
    """The product kernel prod_j K_alpha(x_j, y_j) of two points."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise ValidationError(f"points of different dimension {x.size} and {y.size}")
    return float(np.prod(kernel_K(alpha, x, y, tol)))


def b_term(alpha: float, x, n: int = PANEL_NODES) -> np.ndarray:
    """B(x) = alpha^-1 int_0^x (1 - t)^alpha (x - t)^(alpha-1) dt, elementwise."""
    x = np.asarray(x, dtype=float)
    if alpha == 1.0:
        return x - x * x / 2.0
    out = np.zeros(x.shape)
    out[x == 1.0] = 1.0 / (2.0 * alpha * alpha)
    mid = (x > 0) & (x < 1)
    if mid.any():
        v = x[mid]
        integral = graded_integral(lambda u, v: (1.0 - v * u) ** alpha, alpha - 1.0, (1.0 - v) / v, n, v)
        out[mid] = v**alpha / alpha * integral
    return out


# ---------------------------------------------------------------------------
# Discrepancy
# ---------------------------------------------------------------------------


def delta_alpha(t, u: Iterable[int], P, alpha: float) -> float:
    """Delta_alpha(t_u, u, P); returns math.inf where a singular factor is hit."""
    alpha = _check_alpha(alpha)
    x = _coords(P)
    u = _subset(u, x.shape[1])
    if not u:
        raise ValidationError("Delta_alpha needs a non-empty coordinate subset")
    t = _check_unit(np.asarray(t, dtype=float).ravel(), "t")
    if t.size != len(u):
        raise ValidationError(f"t has {t.size} coordinates for a subset of size {len(u)}")
    diff = x[:, list(u)] - t[None, :]
    volume = float(np.prod((1.0 - t) ** alpha)) / alpha ** len(u)
    if alpha == 1.0:
        return volume - float(np.all(diff > 0, axis=1).mean())
    singular = np.all(diff >= 0, axis=1) & np.any(diff == 0, axis=1)
    if singular.any():
        logger.warning("Delta_alpha is singular at t = %s: %d point(s) share a coordinate", t, int(singular.sum()))
        return math.inf
    return volume - float(np.prod(_positive_power(diff, alpha - 1.0), axis=1).mean())


@dataclass
class DiscrepancyResult:
    value: float
    method: str
    error_estimate: float
    per_u: Optional[Dict[Subset, float]] = None


def _combine(per_u: Mapping[Subset, float], pprime: Exponent, qprime: Exponent) -> float:
    """l_q' combination of per-u integrals of |Delta|^p' (or per-u sups when p' = oo)."""
    if pprime.is_infinite:
        norms = np.array(list(per_u.values()))
    else:
        norms = np.array(list(per_u.values())) ** (1.0 / pprime.as_float())
    return lp_norm(norms, qprime)


def _warnock_square(x: np.ndarray, alpha: float, n: int) -> float:
    N, s = x.shape
    A = 1.0 / (alpha * alpha * (2.0 * alpha + 1.0))
    B = b_term(alpha, x, n)
    second = float(np.sum(np.prod(1.0 + B, axis=1) - 1.0))
    third = 0.0
    for start in range(0, N, WARNOCK_BLOCK):
        rows = x[start:start + WARNOCK_BLOCK]
        K = np.ones((rows.shape[0], N))
        for j in range(s):
            K *= 1.0 + kernel_c(alpha, rows[:, j, None], x[None, :, j], n)
        third += float(np.sum(K - 1.0))
    return (1.0 + A) ** s - 1.0 - 2.0 * second / N + third / (N * N)


def _warnock(x: np.ndarray, alpha: float, tol: float) -> DiscrepancyResult:
    if alpha <= 0.5:
        raise ValidationError(f"the Warnock formula needs alpha in (1/2, 1], got {alpha}")
    if alpha == 1.0:
        return DiscrepancyResult(math.sqrt(max(_warnock_square(x, alpha, PANEL_NODES), 0.0)), "warnock", 0.0)
    value, error, n = refine(
        lambda n: math.sqrt(max(_warnock_square(x, alpha, n), 0.0)), tol,
        n0=PANEL_NODES, max_nodes=256, what="Warnock sum",
    )
    logger.debug("Warnock sum for N=%d converged with %d nodes per panel", x.shape[0], n)
    return DiscrepancyResult(float(value), "warnock", error)


def _grid_power_sum(a, G, w, N: int, power: float) -> float:
    """sum over the tensor grid of |prod a - 1/N sum_n prod G|^power times prod w."""
    rest_a, rest_G, rest_w = np.ones(1), np.ones((N, 1)), np.ones(1)
    for aj, Gj, wj in zip(a[1:], G[1:], w[1:]):
        rest_a = np.multiply.outer(rest_a, aj).ravel()
        rest_G = (rest_G[:, :, None] * Gj[:, None, :]).reshape(N, -1)
        rest_w = np.multiply.outer(rest_w, wj).ravel()
    total = 0.0
    step = max(1, CHUNK // rest_a.size)
    for start in range(0, a[0].size, step):
        sl = slice(start, start + step)
        values = np.multiply.outer(a[0][sl], rest_a) - (G[0][:, sl].T @ rest_G) / N
        total += float(np.sum(np.abs(values) ** power * np.multiply.outer(w[0][sl], rest_w)))
    return total


def _grading_levels(alpha: float, d: int) -> int:
    if alpha == 1.0:
        return 0
    return {1: 40, 2: 30}.get(d, 16)


def _quad_u(xu: np.ndarray, alpha: float, power: float, n: int) -> float:
    """int over [0,1]^u of |Delta_alpha|^power on the panels cut by the point coordinates."""
    N, d = xu.shape
    levels = _grading_levels(alpha, d)
    exponent = power * (alpha - 1.0)
    a, G, w = [], [], []
    size = 1
    for j in range(d):
        breaks = np.unique(np.concatenate([[0.0, 1.0], xu[:, j]]))
        t, weight, right, offset = gauss_panels(breaks, n, exponent, levels)
        size *= t.size
        # the weight (right - t)^exponent is folded in; (right - t)^(1-alpha) undoes it per factor
        a.append((1.0 - t) ** alpha / alpha * offset ** (1.0 - alpha))
        beyond = xu[:, j, None] - right[None, :]
        covers = beyond >= 0
        ratio = offset[None, :] / np.where(covers, beyond + offset[None, :], 1.0)
        G.append(np.where(covers, ratio ** (1.0 - alpha), 0.0))
        w.append(weight)
    if size > GRID_BUDGET:
        raise NumericBudgetExceeded(f"tensor quadrature grid of {size} nodes exceeds the budget")
    return _grid_power_sum(a, G, w, N, power)


def _sup_u(xu: np.ndarray) -> float:
    """Exact sup over [0,1]^u of |prod (1 - t_j) - #{x > t} / N| for alpha = 1."""
    N, d = xu.shape
    lo_vol, hi_vol, counts = np.ones(1), np.ones(1), np.ones((N, 1))
    for j in range(d):
        breaks = np.unique(np.concatenate([[0.0, 1.0], xu[:, j]]))
        lo, hi = breaks[:-1], breaks[1:]
        lo_vol = np.multiply.outer(lo_vol, 1.0 - lo).ravel()
        hi_vol = np.multiply.outer(hi_vol, 1.0 - hi).ravel()
        inside = (xu[:, j, None] >= hi[None, :]).astype(float)
        counts = (counts[:, :, None] * inside[:, None, :]).reshape(N, -1)
    fraction = counts.sum(axis=0) / N
    return float(max(np.abs(lo_vol - fraction).max(), np.abs(hi_vol - fraction).max()))


def _tensor_quad(x: np.ndarray, alpha: float, pprime: Exponent, qprime: Exponent, tol: float) -> DiscrepancyResult:
    N, s = x.shape
    if s > 3:
        raise ValidationError(f"tensor quadrature is limited to s <= 3, got s = {s}")
    subsets = list(nonempty_subsets(s))
    if pprime.is_infinite:
        per_u = {u: _sup_u(x[:, list(u)]) for u in subsets}
        return DiscrepancyResult(_combine(per_u, pprime, qprime), "tensor-quad", 0.0, per_u)
    power = pprime.as_float()

    def evaluate(n):
        return {u: _quad_u(x[:, list(u)], alpha, power, n) for u in subsets}

    n, max_nodes = 4, 32
    previous = evaluate(n)
    while True:
        if 2 * n > max_nodes:
            raise NumericBudgetExceeded(f"tensor quadrature did not converge to {tol:g} with {max_nodes} nodes per panel")
        n *= 2
        current = evaluate(n)
        value = _combine(current, pprime, qprime)
        error = abs(value - _combine(previous, pprime, qprime))
        if error <= tol:
            break
        previous = current
    logger.debug("tensor quadrature converged with %d nodes per panel", n)
    per_u = {u: v ** (1.0 / power) for u, v in current.items()}
    return DiscrepancyResult(value, "tensor-quad", error, per_u)


def _monte_carlo(x: np.ndarray, alpha: float, pprime: Exponent, qprime: Exponent, seed: int,
                 samples: int) -> DiscrepancyResult:
    if pprime.is_infinite:
        raise ValidationError("Monte Carlo estimates need a finite p'")
    N, s = x.shape
    power = pprime.as_float()
    rng = np.random.Generator(np.random.Philox(seed))
    means, errors = {}, {}
    for u in nonempty_subsets(s):
        xu = x[:, list(u)]
        total, total_sq = 0.0, 0.0
        for start in range(0, samples, 4096):
            t = rng.random((min(4096, samples - start), len(u)))
            volume = np.prod((1.0 - t) ** alpha, axis=1) / alpha ** len(u)
            z = xu[None, :, :] - t[:, None, :]
            if alpha == 1.0:
                terms = np.all(z > 0, axis=2).mean(axis=1)
            else:
                terms = np.prod(_positive_power(z, alpha - 1.0), axis=2).mean(axis=1)
            y = np.abs(volume - terms) ** power
            total += float(y.sum())
            total_sq += float(np.dot(y, y))
        mean = total / samples
        var = max(total_sq / samples - mean * mean, 0.0)
        means[u], errors[u] = mean, math.sqrt(var / samples)
    value = _combine(means, pprime, qprime)
    # delta method through the l_q' / L_p' combination
    grads = {}
    for u, mean in means.items():
        if mean == 0.0:
            grads[u] = 0.0
        elif qprime.is_infinite:
            top = max(means, key=lambda v: means[v])
            grads[u] = mean ** (1.0 / power - 1.0) / power if u == top else 0.0
        else:
            r = qprime.as_float() / power
            grads[u] = value ** (1.0 - qprime.as_float()) * mean ** (r - 1.0) / power
    error = math.sqrt(sum((grads[u] * errors[u]) ** 2 for u in means))
    per_u = {u: v ** (1.0 / power) for u, v in means.items()}
    return DiscrepancyResult(value, "monte-carlo", error, per_u)


def frac_discrepancy(P, alpha: float, pprime=2, qprime=2, method: str = "warnock", tol: Optional[float] = None,
                     seed: int = 0, samples: int = 1 << 16) -> DiscrepancyResult:
    """D*_{alpha,s,p',q'}(P), the worst-case error of Q_P on H_{alpha,s,p,q}.

    Args:
        P (`PointSet` or `np.ndarray`): the point set.
        alpha (`float`): smoothness in (0, 1].
        pprime (`int`, `float` or `str`): inner exponent p'; alpha < 1 needs p'(1 - alpha) < 1.
        qprime (`int`, `float` or `str`): outer exponent q'.
        method (`str`): "warnock" (p' = q' = 2, alpha > 1/2), "tensor-quad" (s <= 3)
            or "monte-carlo"; "quad" and "mc" are accepted as short names.
        tol (`float`, *optional*): quadrature tolerance, 1e-10 for Warnock and 1e-6 for
            tensor quadrature by default.
        seed (`int`): Philox seed for the Monte Carlo method.
        samples (`int`): Monte Carlo sample count per subset.
    """
    alpha = _check_alpha(alpha)
    pprime, qprime = Exponent.parse(pprime), Exponent.parse(qprime)
    method = METHOD_ALIASES.get(method, method)
    if method not in METHODS:
        raise ValidationError(f"unknown discrepancy method {method!r}, expected one of {', '.join(METHODS)}")
    if alpha < 1.0 and (pprime.is_infinite or pprime.as_float() * (1.0 - alpha) >= 1.0):
        raise ValidationError(f"p' = {pprime} is too large for alpha = {alpha}: need p'(1 - alpha) < 1")
    x = _coords(P)
    if method == "warnock":
        if pprime != Exponent.parse(2) or qprime != Exponent.parse(2):
            raise ValidationError("the Warnock formula needs p' = q' = 2")
        result = _warnock(x, alpha, DEFAULT_TOL if tol is None else tol)
    elif method == "tensor-quad":
        result = _tensor_quad(x, alpha, pprime, qprime, QUAD_TOL if tol is None else tol)
    else:
        result = _monte_carlo(x, alpha, pprime, qprime, seed, samples)
    logger.info("D*_(alpha=%g, p'=%s, q'=%s) = %.6g by %s (error %.2g)", alpha, pprime, qprime,
                result.value, result.method, result.error_estimate)
    return result


def reflected_l2_star(P) -> float:
    """L2 star discrepancy of T(P) = {1 - x} summed over all coordinate projections."""
    y = 1.0 - _coords(P)
    total = 0.0
    for u in nonempty_subsets(y.shape[1]):
        total += float(scipy_qmc.discrepancy(y[:, list(u)], method="L2-star")) ** 2
    return math.sqrt(total)


def _split_rule(n: int, levels: int = EMBEDDING_LEVELS):
    """Rule on [0,1] graded toward both endpoints."""
    gx, gw = graded_rule(0.0, levels, n)
    return np.concatenate([0.5 - 0.5 * gx, 0.5 + 0.5 * gx]), np.concatenate([0.5 * gw, 0.5 * gw])


def _kernel_embedding(alpha: float, x: np.ndarray, n: int) -> np.ndarray:
    """int_0^1 C(x, y) dy by quadrature in y, split at y = x."""
    v, w = _split_rule(n)
    flat = x.ravel()
    out = np.empty(flat.size)
    for idx, xv in enumerate(flat):
        below = xv * v
        above = xv + (1.0 - xv) * v
        out[idx] = xv * np.dot(w, kernel_c(alpha, xv, below, n)) + (1.0 - xv) * np.dot(w, kernel_c(alpha, xv, above, n))
    return out.reshape(x.shape)


def rkhs_worst_case_error(P, alpha: float, tol: float = DEFAULT_TOL) -> float:
    """Worst-case error of Q_P in the space with kernel K_{alpha,s}.

    e^2 = int int K - (2/N) sum_n int K(x_n, y) dy + (1/N^2) sum_{n,n'} K(x_n, x_n'),
    with the kernel mean embedding integrated numerically.
    """
    alpha = _check_kernel_alpha(alpha)
    x = _coords(P)
    N, s = x.shape
    A = 1.0 / (alpha * alpha * (2.0 * alpha + 1.0))

    def evaluate(n):
        embedding = 1.0 + _kernel_embedding(alpha, x, n)
        gram = np.ones((N, N))
        for j in range(s):
            gram *= 1.0 + kernel_c(alpha, x[:, j, None], x[None, :, j], n)
        square = (1.0 + A) ** s - 2.0 * float(np.prod(embedding, axis=1).sum()) / N + float(gram.sum()) / (N * N)
        return math.sqrt(max(square, 0.0))

    value, _, _ = refine(evaluate, tol, n0=8, max_nodes=64, what="kernel worst-case error")
    return float(value)


# ---------------------------------------------------------------------------
# Extremal functions
# ---------------------------------------------------------------------------


@dataclass
class ExtremalResult:
    function: FracFunction
    achieved_ratio: float
    discrepancy: DiscrepancyResult
    error: float
    norm: float
    panels: int


def default_panels(N: int) -> int:
    """Uniform panels per axis for N points; cells must be much finer than the point spacing."""
    return max(MIN_PANELS, PANELS_PER_POINT * N)


def extremal_breaks(coords: np.ndarray, panels: int, grading: int, alpha: float) -> np.ndarray:
    """Uniform panels plus the point coordinates, refined geometrically just left of each point.

    Grids for increasing `panels` are nested.
    """
    parts = [np.linspace(0.0, 1.0, panels + 1), coords]
    if alpha < 1.0 and grading > 0:
        offsets = 2.0 ** -np.arange(1, math.ceil(math.log2(panels)) + grading + 1)
        graded = (coords[:, None] - offsets[None, :]).ravel()
        parts.append(graded[graded > 0])
    return np.unique(np.concatenate(parts))


def _cell_averages(xu: np.ndarray, breaks: Sequence[np.ndarray], alpha: float) -> np.ndarray:
    """Average of Delta_alpha(., u, P) over every cell of the tensor grid."""
    N = xu.shape[0]
    volume_part, factors = np.ones(()), []
    for j, br in enumerate(breaks):
        lo, hi = br[:-1], br[1:]
        width = hi - lo
        a = ((1.0 - lo) ** (alpha + 1.0) - (1.0 - hi) ** (alpha + 1.0)) / (alpha * (alpha + 1.0) * width)
        z = xu[:, j, None]
        factors.append((_positive_power(z - lo[None, :], alpha) - _positive_power(z - hi[None, :], alpha)) / (alpha * width[None, :]))
        volume_part = np.multiply.outer(volume_part, a)
    rest = np.ones((N, 1))
    for G in factors[1:]:
        rest = (rest[:, :, None] * G[:, None, :]).reshape(N, -1)
    counts = (factors[0].T @ rest) / N
    return volume_part - counts.reshape(volume_part.shape)


def extremal_function(P, alpha: float, p=2, q=2, panels: Optional[int] = None, grading: int = 16,
                      tol: Optional[float] = None) -> ExtremalResult:
    """A function nearly attaining |I(f) - Q_P(f)| = D*_{alpha,s,p',q'}(P) ||f||.

    Densities are piecewise constant on a tensor grid: on each subset u the
    density is sign(d) |d|^(p'-1) for the cell averages d of Delta_alpha,
    normalized in L_p, and the subsets are weighted for the l_q / l_q' duality.
    `panels` defaults to `default_panels(N)`.
    """
    alpha = _check_alpha(alpha)
    p, q = Exponent.parse(p), Exponent.parse(q)
    if p.is_infinite or not float(p.inverse) < alpha:
        raise ValidationError(f"extremal functions need p in (1/alpha, inf), got p = {p}, alpha = {alpha}")
    x = _coords(P)
    N, s = x.shape
    if panels is None:
        panels = default_panels(N)
    if panels < 1:
        raise ValidationError(f"need at least one panel, got {panels}")
    pd = p.dual().as_float()
    pv = p.as_float()
    breaks = [extremal_breaks(x[:, j], panels, grading, alpha) for j in range(s)]
    shapes, strengths = {}, {}
    for u in nonempty_subsets(s):
        grid = [breaks[j] for j in u]
        avg = _cell_averages(x[:, list(u)], grid, alpha)
        vol = PanelDensity(tuple(grid), np.zeros(avg.shape)).volumes()
        strength = float(np.sum(np.abs(avg) ** pd * vol)) ** (1.0 / pd)
        shape = np.sign(avg) * np.abs(avg) ** (pd - 1.0)
        if strength > 0:
            shape = shape / strength ** (pd / pv)
        shapes[u] = PanelDensity(tuple(grid), shape)
        strengths[u] = strength
    qd = q.dual()
    d = np.array(list(strengths.values()))
    if qd.is_infinite:
        weights = (np.arange(d.size) == int(np.argmax(d))).astype(float)
    elif q.is_infinite:
        weights = np.ones(d.size)
    else:
        total = lp_norm(d, qd)
        weights = (d / total) ** (qd.as_float() - 1.0) if total > 0 else np.zeros(d.size)
    densities: Dict[Subset, Density] = {(): 0.0}
    for weight, u in zip(weights, shapes):
        densities[u] = shapes[u].scaled(weight * gamma(alpha) ** len(u))
    F = FracFunction(alpha, s, densities)
    integral = sum(
        densities[u].riemann_liouville_integral(alpha) / gamma(alpha) ** len(u) for u in nonempty_subsets(s)
    )
    error = float(integral - np.mean(phi_synthesize(F, x)))
    norm = seminorm_V(F, p, q, full=True)
    warnock_ok = p.dual() == Exponent.parse(2) and q.dual() == Exponent.parse(2) and alpha > 0.5
    disc = frac_discrepancy(x, alpha, p.dual(), q.dual(), "warnock" if warnock_ok else "tensor-quad", tol)
    if disc.value == 0 or norm == 0:
        raise ValidationError("the discrepancy of the point set vanishes; no extremal ratio exists")
    ratio = abs(error) / (disc.value * norm)
    logger.info("extremal function with %d panels: ratio %.6f", panels, ratio)
    return ExtremalResult(F, ratio, disc, error, norm, panels)
