"""Worst-case errors of QMC rules on Haar wavelet spaces.

The dual-norm expansion gives, for x = the level weight b^-(alpha - 1/p + 1/2),

    e^wor <= ( sum_{j} x^(q'|j|) ( sum_{k,i} |Q_P(Psi^j_{i,k})|^p' )^(q'/p') )^(1/q'),

which `wce_upper_dual` evaluates exactly up to |j| = J_max and bounds above
it in closed form. `mock_lower_bound` certifies the matching lower bound
with a function vanishing on P.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from logging import getLogger
from typing import Optional

import numpy as np
from scipy.stats import nbinom

from .cubature import WaveletSumCache
from .errors import NumericBudgetExceeded, ValidationError
from .fractional import frac_discrepancy
from .haar import Exponent, PiecewiseConstant, SpaceParams, combine_levels, lp_norm, pc_level_norms
from .nets import PointSet, t_value, verify_net
from .util import compositions, level_vectors

logger = getLogger(__name__)

MOCK_BUDGET = 1 << 24
TAIL_BITS = 40


@dataclass
class WceBound:
    truncated: float
    tail: float
    total: float
    params: SpaceParams
    j_max: int
    t: Optional[int] = None
    generic_tail: bool = False


def default_j_max(params: SpaceParams, m: int, t: int) -> int:
    """(m - t) plus enough levels to push the tail about 2^-40 below the truncated part."""
    b, s = params.b, params.s
    extra = s * math.log(2) / math.log(b)
    qd = params.q_dual
    if not qd.is_infinite and params.gap > 0:
        extra += TAIL_BITS * math.log(2) / (qd.as_float() * params.gap * math.log(b))
    return min((m - t) + math.ceil(extra), max(4 * (m - t), 4))


def _level_term(level, params: SpaceParams) -> float:
    """b^-(alpha - 1/p + 1/2)|j| times the l_p' norm of Q_P over one level vector."""
    sums = np.asarray(level.sums, dtype=float)
    norm = lp_norm(sums, params.p_dual)
    if norm == 0:
        return 0.0
    return norm * level.scale_float() * params.b ** (-params.level_exponent * sum(level.j))


def _tail_sum(J: int, start: int, x: float) -> float:
    """sum_{nu >= start} binom(nu - 1, J - 1) x^nu, the level count of J active axes."""
    mu0 = max(0, start - J)
    return float(nbinom.sf(mu0 - 1, J, 1.0 - x)) * (x / (1.0 - x)) ** J


def _tail(params: SpaceParams, j_max: int, factor: float, scale: float) -> float:
    """Closed-form bound on the levels |j| > j_max when each one is at most
    scale * b^-(alpha - 1/p)|j| * factor^J."""
    b, s = params.b, params.s
    qd = params.q_dual
    if qd.is_infinite:
        top = 0.0
        for nu in range(j_max + 1, max(j_max + 1, s) + 1):
            top = max(top, b ** (-params.gap * nu) * factor ** min(s, nu))
        return scale * top
    qv = qd.as_float()
    x = b ** (-qv * params.gap)
    total = math.fsum(math.comb(s, J) * factor ** (qv * J) * _tail_sum(J, j_max + 1, x) for J in range(1, s + 1))
    return scale * total ** (1.0 / qv)


def _generic_factor(params: SpaceParams) -> float:
    """l_p' norm over i of one axis of a single point's wavelet vector, divided by b."""
    b, pd = params.b, params.p_dual
    if pd.is_infinite:
        return (b - 1) / b
    pv = pd.as_float()
    return ((b - 1) ** pv + (b - 1)) ** (1.0 / pv) / b


def _combine(terms, qd: Exponent) -> float:
    if not terms:
        return 0.0
    if qd.is_infinite:
        return max(terms)
    qv = qd.as_float()
    return math.fsum(v**qv for v in terms) ** (1.0 / qv)


def wce_upper_dual(P: PointSet, params: SpaceParams, j_max: Optional[int] = None, t: Optional[int] = None,
                   cache: Optional[WaveletSumCache] = None) -> WceBound:
    """Upper bound on e^wor(Q_P, H_wav) from the truncated dual sum plus a closed-form tail.

    Args:
        P (`PointSet`): the point set; b^m points get the net tail, any other size the generic one.
        params (`SpaceParams`): b, s, alpha, p, q of the space.
        j_max (`int`, *optional*): last level summed exactly; defaults to `default_j_max`.
        t (`int`, *optional*): quality parameter of P, verified when given and computed otherwise.
        cache (`WaveletSumCache`, *optional*): shared counting passes of P.
    """
    if not params.eval_ok:
        raise ValidationError(f"point evaluation is unbounded for alpha={params.alpha}, p={params.p}, q={params.q}")
    if params.b != P.base or params.s != P.dim:
        raise ValidationError(f"space (b={params.b}, s={params.s}) does not match the point set {P!r}")
    generic = not P.is_power_of_base
    if generic:
        m = math.ceil(math.log(P.size, P.base))
        t = None
        logger.warning("%r has no net structure; using the generic tail", P)
    else:
        m = P.m
        if t is None:
            t = t_value(P)
        elif not verify_net(P, t).verified:
            raise ValidationError(f"point set is not a ({t},{m},{P.dim})-net")
    exact_level = 0 if generic else m - t
    if j_max is None:
        j_max = default_j_max(params, m, 0 if generic else t)
    if j_max < exact_level:
        raise ValidationError(f"J_max = {j_max} is below the exactness level m - t = {exact_level}")
    cache = cache or WaveletSumCache(P)
    terms = []
    for j in level_vectors(j_max, P.dim, min_level=1):
        terms.append(_level_term(cache[j], params))
        logger.debug("level %s: %.3g", j, terms[-1])
    truncated = _combine(terms, params.q_dual)
    b = params.b
    if generic:
        tail = _tail(params, j_max, _generic_factor(params), 1.0)
    else:
        tail = _tail(params, j_max, b - 1.0, b ** (-(m - t + 1) * float(params.p.inverse)))
    total = _combine([truncated, tail], params.q_dual)
    logger.info("upper bound %.6g (truncated %.6g, tail %.3g, J_max %d)", total, truncated, tail, j_max)
    return WceBound(truncated, tail, total, params, j_max, t, generic)


def theorem_constant(b: int, t: int, s: int, alpha: float, p=2, q=2) -> float:
    """(b-1)^s b^(alpha(t-1)) (sum_nu b^(-q'(alpha-1/p) nu) binom(nu+s-1, s-1))^(1/q')."""
    params = SpaceParams(b, s, alpha, p, q)
    if not params.eval_ok:
        raise ValidationError(f"point evaluation is unbounded for alpha={alpha}, p={params.p}, q={params.q}")
    head = (b - 1) ** s * b ** (alpha * (t - 1))
    qd = params.q_dual
    if qd.is_infinite:
        return float(head)
    x = b ** (-qd.as_float() * params.gap)
    return float(head * (1.0 - x) ** (-s / qd.as_float()))


@dataclass
class MockFunction:
    """f_0 = sum_{|j| = m} indicators of the level-j cells without points of P."""

    points: PointSet
    m: int
    integral: Fraction
    function: Optional[PiecewiseConstant] = None


def mock_level(P: PointSet) -> int:
    """The m with b^(m-1) < 2N <= b^m."""
    m = 0
    while P.base**m < 2 * P.size:
        m += 1
    return m


def mock_function(P: PointSet, materialize: bool = True, budget: int = MOCK_BUDGET) -> MockFunction:
    b, s = P.base, P.dim
    m = mock_level(P)
    n = b**m
    if materialize and n**s > budget:
        raise NumericBudgetExceeded(f"mock function needs {n}^{s} cells, more than {budget}")
    values = np.zeros((n,) * s, dtype=np.int64) if materialize else None
    empty_cells = 0
    for j in compositions(m, s):
        empty = P.histogram(j) == 0
        empty_cells += int(empty.sum())
        if materialize:
            for axis, jl in enumerate(j):
                empty = np.repeat(empty, b ** (m - jl), axis=axis)
            values += empty
    integral = Fraction(empty_cells, n)
    function = PiecewiseConstant(b, m, values) if materialize else None
    return MockFunction(P, m, integral, function)


def _analytic_norm(params: SpaceParams, m: int) -> float:
    """Upper bound on ||f_0|| from |<f_0, Psi^j'>| <= binom(m - |j'| + s - 1, s - 1) times the wavelet sup."""
    b, s, alpha = params.b, params.s, params.alpha
    terms = [
        (b - 1) ** s * b ** (alpha * L) * math.comb(m - L + s - 1, s - 1)
        for L in range(m + 1)
    ]
    counts = [math.comb(L + s - 1, s - 1) for L in range(m + 1)]
    if params.q.is_infinite:
        return float(max(terms))
    qv = params.q.as_float()
    return math.fsum(c * v**qv for c, v in zip(counts, terms)) ** (1.0 / qv)


def mock_lower_bound(P: PointSet, params: SpaceParams, mode: str = "exact", budget: int = MOCK_BUDGET) -> float:
    """I(f_0) / ||f_0||_wav, a lower bound on the worst-case error over the wavelet space.

    `mode` is "exact" (full coefficient enumeration of f_0) or "analytic"
    (closed-form upper bound on the norm, hence a weaker bound).
    """
    if mode not in ("exact", "analytic"):
        raise ValidationError(f"unknown mock norm mode {mode!r}, expected 'exact' or 'analytic'")
    if params.b != P.base or params.s != P.dim:
        raise ValidationError(f"space (b={params.b}, s={params.s}) does not match the point set {P!r}")
    mock = mock_function(P, materialize=mode == "exact", budget=budget)
    if mode == "exact":
        norm = combine_levels(pc_level_norms(mock.function, params.p), params)
    else:
        norm = _analytic_norm(params, mock.m)
    if norm == 0:
        raise ValidationError("the mock function vanishes identically")
    bound = float(mock.integral) / norm
    logger.info("mock lower bound %.6g (m=%d, %s norm %.6g)", bound, mock.m, mode, norm)
    return bound


def wce_exact_hilbert(P: PointSet, alpha: float, tol: float = 1e-10) -> float:
    """e^wor(Q_P, H_{alpha,s,2,2}) through the Warnock-type closed form."""
    if not 0.5 < alpha <= 1.0:
        raise ValidationError(f"the Hilbert space case needs alpha in (1/2, 1], got {alpha}")
    return frac_discrepancy(P, alpha, 2, 2, method="warnock", tol=tol).value

