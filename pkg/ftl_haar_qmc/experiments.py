"""Convergence and sharpness sweeps written as CSV tables."""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from logging import getLogger
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .config import ExperimentConfig, load_defaults
from .cubature import WaveletSumCache
from .errors import ValidationError
from .formats import read_matrices, read_points
from .fractional import default_panels, extremal_function, frac_discrepancy
from .haar import SpaceParams
from .nets import GeneratorMatrices, PointSet, digital_net, faure_net, random_point_set, t_value, van_der_corput
from .wce import mock_lower_bound, wce_exact_hilbert, wce_upper_dual

logger = getLogger(__name__)

CONVERGENCE_COLUMNS = ["b", "s", "t", "m", "N", "alpha", "p", "q", "method", "value", "tail", "seconds"]
SHARPNESS_COLUMNS = ["b", "s", "t", "m", "N", "alpha", "p", "q", "panels", "discrepancy", "ratio", "seconds"]
FLOAT_FORMAT = "%.17g"


@dataclass
class Sample:
    """The point sets of one row: a single net, or the replicates of a random control."""

    m: Optional[int]
    replicates: List[PointSet]
    t: Optional[int] = None
    caches: List[WaveletSumCache] = field(default_factory=list)

    @property
    def first(self) -> PointSet:
        return self.replicates[0]

    @property
    def N(self) -> int:
        return self.first.size


@dataclass
class RateFit:
    """Least-squares slope of ln(value) on ln(N) and the band of value / (N^-alpha ln(N)^((s-1)/q'))."""

    params: SpaceParams
    method: str
    exponent: Optional[float]
    ratio_min: float
    ratio_max: float
    points: int

    def row(self) -> Dict[str, object]:
        p = self.params
        return {
            "b": p.b, "s": p.s, "alpha": p.alpha, "p": str(p.p), "q": str(p.q), "method": self.method,
            "exponent": self.exponent, "ratio_min": self.ratio_min, "ratio_max": self.ratio_max, "points": self.points,
        }


@dataclass
class ConvergenceResult:
    config: ExperimentConfig
    table: pd.DataFrame
    fits: List[RateFit]


@dataclass
class SharpnessResult:
    config: ExperimentConfig
    table: pd.DataFrame

    @property
    def worst_ratio_at_finest(self) -> float:
        """Smallest ratio over the finest grid of every (point set, space) pair."""
        keys = ["b", "s", "m", "N", "alpha", "p", "q"]
        finest = self.table.groupby(keys, dropna=False, sort=False)["panels"].idxmax()
        return float(self.table.loc[finest, "ratio"].min())


def rate_reference(N: np.ndarray, params: SpaceParams) -> np.ndarray:
    """N^-alpha ln(N)^((s-1)/q'), the rate of the net upper bound."""
    N = np.asarray(N, dtype=float)
    power = 0.0 if params.q_dual.is_infinite else (params.s - 1) / params.q_dual.as_float()
    return N ** -params.alpha * np.log(N) ** power


def fit_rate(N: Sequence[int], values: Sequence[float], params: SpaceParams, method: str = "",
             min_points: Optional[int] = None) -> RateFit:
    """Fit ln(value) = a ln(N) + c over all rows but the one with the smallest N."""
    if min_points is None:
        min_points = load_defaults()["fit_min_points"]
    N = np.asarray(N, dtype=float)
    values = np.asarray(values, dtype=float)
    order = np.argsort(N, kind="stable")
    N, values = N[order][1:], values[order][1:]
    keep = (values > 0) & np.isfinite(values) & (N > 1)
    N, values = N[keep], values[keep]
    if N.size == 0:
        return RateFit(params, method, None, math.nan, math.nan, 0)
    ratios = values / rate_reference(N, params)
    exponent = None
    if N.size >= min_points:
        exponent = float(np.polyfit(np.log(N), np.log(values), 1)[0])
    else:
        logger.warning("rate fit for %s, alpha=%g skipped: %d points, need %d", method, params.alpha, N.size, min_points)
    return RateFit(params, method, exponent, float(ratios.min()), float(ratios.max()), int(N.size))


def _generator_matrices(cfg: ExperimentConfig, m: int) -> GeneratorMatrices:
    G = read_matrices(cfg.matrices)
    if G.s != cfg.s or G.base != cfg.b:
        raise ValidationError(f"{cfg.matrices}: matrices are for b={G.base}, s={G.s}, expected b={cfg.b}, s={cfg.s}")
    if m > G.m:
        raise ValidationError(f"{cfg.matrices}: m = {m} exceeds the matrix size {G.m}")
    return GeneratorMatrices(G.base, G.matrices[:, :m, :m])


def build_samples(cfg: ExperimentConfig) -> List[Sample]:
    """Point sets in config order, one Sample per m (or per file for generator = points)."""
    samples = []
    if cfg.generator == "points":
        for path in cfg.points:
            P = read_points(path)
            if (P.base, P.dim) != (cfg.b, cfg.s):
                raise ValidationError(f"{path}: point set has b={P.base}, s={P.dim}, expected b={cfg.b}, s={cfg.s}")
            m = P.m if P.is_power_of_base else None
            samples.append(Sample(m, [P]))
    else:
        for m in cfg.m:
            if cfg.generator == "vdc":
                sets = [van_der_corput(cfg.b, m)]
            elif cfg.generator == "faure":
                sets = [faure_net(cfg.b, m, cfg.s)]
            elif cfg.generator == "matrices":
                sets = [digital_net(_generator_matrices(cfg, m))]
            else:
                sets = [random_point_set(cfg.b, m, cfg.s, seed=cfg.seed + r) for r in range(cfg.replicates)]
            samples.append(Sample(m, sets))
    for sample in samples:
        if cfg.generator == "random" or sample.m is None:
            continue
        sample.t = cfg.t if cfg.t is not None else t_value(sample.first)
        sample.caches = [WaveletSumCache(P) for P in sample.replicates]
    return samples


def evaluate(cfg: ExperimentConfig, P: PointSet, params: SpaceParams, method: str, t: Optional[int],
             cache: Optional[WaveletSumCache] = None):
    """(value, tail) of one method on one point set, exactly as the single-shot commands compute it."""
    if method == "upper":
        bound = wce_upper_dual(P, params, j_max=cfg.j_max, t=t, cache=cache)
        return bound.total, bound.tail
    if method == "lower":
        return mock_lower_bound(P, params, mode=cfg.lower_mode), None
    if method == "hilbert":
        return wce_exact_hilbert(P, params.alpha, tol=cfg.tol), None
    if method == "discrepancy":
        result = frac_discrepancy(P, params.alpha, params.p_dual, params.q_dual, method=cfg.discrepancy_method,
                                  seed=cfg.seed, samples=cfg.samples)
        return result.value, result.error_estimate
    raise ValidationError(f"unknown method {method!r}")


def _rms(values: List[Optional[float]]) -> Optional[float]:
    if any(v is None for v in values):
        return None
    return math.sqrt(math.fsum(v * v for v in values) / len(values))


def _convergence_row(cfg: ExperimentConfig, sample: Sample, params: SpaceParams, method: str) -> Dict[str, object]:
    start = time.time()
    values, tails = [], []
    for idx, P in enumerate(sample.replicates):
        cache = sample.caches[idx] if sample.caches else None
        value, tail = evaluate(cfg, P, params, method, sample.t, cache)
        values.append(value)
        tails.append(tail)
    if len(values) == 1:
        value, tail = values[0], tails[0]
    else:
        value, tail = _rms(values), _rms(tails)
    elapsed = time.time() - start
    logger.debug("m=%s alpha=%g %s: %.6g", sample.m, params.alpha, method, value)
    return {
        "b": params.b, "s": params.s, "t": sample.t, "m": sample.m, "N": sample.N, "alpha": params.alpha,
        "p": str(params.p), "q": str(params.q), "method": method, "value": value, "tail": tail,
        "seconds": elapsed if cfg.timing else None,
    }


def _run_pool(func, tasks, workers: int) -> list:
    if workers == 1:
        return [func(*task) for task in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda task: func(*task), tasks))


def write_table(table: pd.DataFrame, path):
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="")
    logger.info("wrote %d rows to %s", len(table), path)


def fits_path(out) -> Path:
    out = Path(out)
    return out.with_name(f"{out.stem}_fits.csv")


def run_convergence(cfg: ExperimentConfig) -> ConvergenceResult:
    """One row per (params, method, m), then a RateFit per (params, method).

    Rows are computed in a thread pool of `cfg.workers` and written in config order.
    """
    if cfg.kind != "convergence":
        raise ValidationError(f"experiment {cfg.name!r} is a {cfg.kind} run")
    samples = build_samples(cfg)
    tasks = [
        (cfg, sample, params, method)
        for params in cfg.space_params()
        for method in cfg.methods
        for sample in samples
    ]
    logger.info("experiment %s: %d rows on %d worker(s)", cfg.name, len(tasks), cfg.workers)
    rows = _run_pool(_convergence_row, tasks, cfg.workers)
    table = pd.DataFrame(rows, columns=CONVERGENCE_COLUMNS)
    table = table.astype({"t": "Int64", "m": "Int64"})
    fits = []
    for params in cfg.space_params():
        for method in cfg.methods:
            sel = table[(table["alpha"] == params.alpha) & (table["p"] == str(params.p))
                        & (table["q"] == str(params.q)) & (table["method"] == method)]
            fits.append(fit_rate(sel["N"].to_numpy(), sel["value"].to_numpy(dtype=float), params, method))
    if cfg.out:
        write_table(table, cfg.out)
        write_table(pd.DataFrame([fit.row() for fit in fits]), fits_path(cfg.out))
    return ConvergenceResult(cfg, table, fits)


def panel_sequence(N: int) -> List[int]:
    """Nested grids ending at `default_panels(N)`."""
    finest = default_panels(N)
    return [finest // 4, finest // 2, finest]


def _sharpness_rows(cfg: ExperimentConfig, sample: Sample, params: SpaceParams) -> List[Dict[str, object]]:
    rows = []
    for panels in cfg.panels or panel_sequence(sample.N):
        start = time.time()
        result = extremal_function(sample.first, params.alpha, params.p, params.q, panels=panels,
                                   grading=cfg.grading, tol=None)
        elapsed = time.time() - start
        rows.append({
            "b": params.b, "s": params.s, "t": sample.t, "m": sample.m, "N": sample.N, "alpha": params.alpha,
            "p": str(params.p), "q": str(params.q), "panels": panels, "discrepancy": result.discrepancy.value,
            "ratio": result.achieved_ratio, "seconds": elapsed if cfg.timing else None,
        })
    return rows


def run_sharpness(cfg: ExperimentConfig) -> SharpnessResult:
    """Extremal ratio against D* for every point set, space and panel count."""
    if cfg.kind != "sharpness":
        raise ValidationError(f"experiment {cfg.name!r} is a {cfg.kind} run")
    samples = build_samples(cfg)
    tasks = [(cfg, sample, params) for params in cfg.space_params() for sample in samples]
    chunks = _run_pool(_sharpness_rows, tasks, cfg.workers)
    table = pd.DataFrame([row for chunk in chunks for row in chunk], columns=SHARPNESS_COLUMNS)
    table = table.astype({"t": "Int64", "m": "Int64"})
    result = SharpnessResult(cfg, table)
    logger.info("experiment %s: worst ratio at the finest grid %.6f", cfg.name, result.worst_ratio_at_finest)
    if cfg.out:
        write_table(table, cfg.out)
    return result


def run_experiment(cfg: ExperimentConfig):
    if cfg.kind == "convergence":
        return run_convergence(cfg)
    return run_sharpness(cfg)
