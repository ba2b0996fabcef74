"""Gauss rules on [0,1] for smooth and endpoint-singular integrands.

All rules integrate against the weight (1 - u)^a on [0,1].  A singular factor
(x - t)^(alpha - 1) is moved to that endpoint by the substitution t = x u, so
one family of rules covers the fractional integrals, kernels and panels used
elsewhere in the package.
"""

from functools import lru_cache
from logging import getLogger
from typing import Callable, Tuple

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import NumericBudgetExceeded

logger = getLogger(__name__)

DEFAULT_NODES = 64
PANEL_NODES = 16
MAX_NODES = 1024
MAX_LEVELS = 60


def _frozen(*arrays):
    for a in arrays:
        a.setflags(write=False)
    return arrays


@lru_cache(maxsize=None)
def legendre_rule(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [0,1]."""
    z, w = roots_legendre(n)
    return _frozen((1.0 + z) / 2.0, w / 2.0)


@lru_cache(maxsize=None)
def jacobi_rule(n: int, a: float, b: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """n-point Gauss rule on [0,1] for the weight (1 - u)^a u^b.

    Args:
        n (`int`): number of nodes.
        a (`float`): exponent at u = 1, must exceed -1.
        b (`float`): exponent at u = 0, must exceed -1.
    """
    if a == 0.0 and b == 0.0:
        return legendre_rule(n)
    z, w = roots_jacobi(n, a, b)
    return _frozen((1.0 + z) / 2.0, w * 2.0 ** (-a - b - 1.0))


@lru_cache(maxsize=None)
def graded_rule(a: float, levels: int, n: int = PANEL_NODES) -> Tuple[np.ndarray, np.ndarray]:
    """Composite rule on [0,1] for the weight (1 - u)^a, panels halving toward u = 1.

    The panels [1 - 2^-l, 1 - 2^-(l+1)] for l < levels carry Gauss-Legendre
    nodes times the weight; the last panel [1 - 2^-levels, 1] carries a
    Gauss-Jacobi rule. An integrand with a nearby singularity at distance
    2^-levels from u = 1 is then resolved panel by panel.
    """
    xs, ws = [], []
    gx, gw = legendre_rule(n)
    for level in range(levels):
        lo, h = 1.0 - 2.0**-level, 2.0 ** -(level + 1)
        u = lo + h * gx
        xs.append(u)
        ws.append(h * gw * (1.0 - u) ** a)
    h = 2.0**-levels
    jx, jw = jacobi_rule(n, a)
    xs.append(1.0 - h + h * jx)
    ws.append(h ** (a + 1.0) * jw)
    return _frozen(np.concatenate(xs), np.concatenate(ws))


def levels_for_gap(gap) -> np.ndarray:
    """Panel counts that separate u = 1 from singularities at 1 + gap (elementwise)."""
    gap = np.asarray(gap, dtype=float)
    with np.errstate(divide="ignore"):
        levels = np.ceil(-np.log2(np.where(gap > 0, gap, 2.0**-MAX_LEVELS))) + 2
    return np.clip(levels, 1, MAX_LEVELS).astype(int)


def graded_integral(integrand, a: float, gaps, n: int, *params, chunk: int = 1 << 22) -> np.ndarray:
    """Elementwise int_0^1 integrand(u, *params) (1 - u)^a du.

    `integrand` has a singularity just beyond u = 1 at relative distance
    `gaps`; entries are grouped by the panel count their gap needs.
    """
    gaps = np.asarray(gaps, dtype=float)
    levels = levels_for_gap(gaps)
    out = np.empty(gaps.shape)
    for count in np.unique(levels):
        sel = np.flatnonzero(levels == count)
        u, w = graded_rule(a, int(count), n)
        step = max(1, chunk // u.size)
        for start in range(0, sel.size, step):
            idx = sel[start:start + step]
            out[idx] = integrand(u[None, :], *(p[idx, None] for p in params)) @ w
    return out


def gauss_panels(breaks: np.ndarray, n: int, a: float = 0.0, levels: int = 0):
    """Nodes and weights of a composite rule over the panels of `breaks`.

    Each panel [lo, hi] gets the weight (hi - t)^a folded in, so `a < 0` puts
    an integrable singularity at the right end of every panel. With
    `levels > 0` every panel is graded toward its right end as in
    `graded_rule`. Returns nodes, weights, the right end of the panel
    owning each node and the distance from each node to that end.
    """
    jx, jw = graded_rule(a, levels, n) if levels else jacobi_rule(n, a)
    lo, hi = breaks[:-1], breaks[1:]
    width = hi - lo
    keep = width > 0
    lo, hi, width = lo[keep], hi[keep], width[keep]
    nodes = (lo[:, None] + width[:, None] * jx[None, :]).ravel()
    weights = (width[:, None] ** (a + 1.0) * jw[None, :]).ravel()
    right = np.repeat(hi, jx.size)
    offsets = (width[:, None] * (1.0 - jx)[None, :]).ravel()
    return nodes, weights, right, offsets


def refine(evaluate: Callable[[int], np.ndarray], tol: float, n0: int = DEFAULT_NODES,
           max_nodes: int = MAX_NODES, what: str = "integral"):
    """Double the node count until two successive results agree within tol.

    Returns (value, error estimate, node count).
    """
    n = n0
    previous = np.asarray(evaluate(n))
    while True:
        if 2 * n > max_nodes:
            raise NumericBudgetExceeded(
                f"{what} did not converge to {tol:g} with {max_nodes} nodes"
            )
        n *= 2
        current = np.asarray(evaluate(n))
        error = float(np.max(np.abs(current - previous))) if current.size else 0.0
        if error <= tol:
            logger.debug("%s converged with %d nodes (change %.3g)", what, n, error)
            return current, error, n
        previous = current
