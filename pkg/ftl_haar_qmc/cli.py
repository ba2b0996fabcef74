import logging
from pathlib import Path

import click
import pandas as pd
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .config import load_config
from .cubature import exactness_report
from .errors import QmcError
from .experiments import CONVERGENCE_COLUMNS, FLOAT_FORMAT, fits_path, run_experiment
from .formats import read_matrices, read_points, write_points
from .fractional import extremal_function, frac_discrepancy
from .haar import SpaceParams
from .nets import digital_net, faure_net, random_point_set, t_value, van_der_corput, verify_net
from .wce import mock_lower_bound, theorem_constant, wce_exact_hilbert, wce_upper_dual

console = Console()
err_console = Console(stderr=True)


def _num(value) -> str:
    return "" if value is None else FLOAT_FORMAT % value


def _setup_logging(verbose: int):
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(
        level=level, format="%(message)s", datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)], force=True,
    )


class QmcGroup(click.Group):
    """Renders package errors on stderr and exits with their exit code."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except QmcError as e:
            err_console.print(f"[bold red]{e.__class__.__name__}[/]: {e.message}", highlight=False)
            ctx.exit(e.exit_code)


@click.group(cls=QmcGroup)
@click.option("--verbose", "-v", count=True, help="-v for progress, -vv for per-level detail.")
def main(verbose):
    """Nets, Haar wavelet worst-case errors and fractional discrepancies."""
    _setup_logging(verbose)


@main.group()
def net():
    """Generate and verify (t,m,s)-nets."""


@net.command("gen")
@click.option("--kind", type=click.Choice(["vdc", "faure", "matrices", "random"]), required=True)
@click.option("--b", "b", type=int, required=True)
@click.option("--m", "m", type=int, required=True)
@click.option("--s", "s", type=int, default=1, show_default=True)
@click.option("--matrices", "matrices", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out", type=click.Path(dir_okay=False), required=True)
def net_gen(kind, b, m, s, matrices, seed, out):
    """Write a point set of b^m points."""
    if kind == "vdc":
        if s != 1:
            raise click.BadParameter("the van der Corput net is one-dimensional", param_hint="--s")
        P = van_der_corput(b, m)
    elif kind == "faure":
        P = faure_net(b, m, s)
    elif kind == "matrices":
        if matrices is None:
            raise click.BadParameter("--kind matrices needs --matrices FILE", param_hint="--matrices")
        P = digital_net(read_matrices(matrices))
    else:
        P = random_point_set(b, m, s, seed=seed)
    write_points(P, out)
    click.echo(f"wrote {P.size} points (b={P.base}, s={P.dim}) to {out}")


@net.command("verify")
@click.option("--in", "path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--t", "t", type=int, default=None, help="Check this t instead of searching for the smallest.")
def net_verify(path, t):
    """Print the net certificate of a point set."""
    P = read_points(path)
    cert = verify_net(P, t if t is not None else t_value(P))
    table = Table(title=f"{path}")
    table.add_column("field")
    table.add_column("value")
    table.add_row("b, m, s", f"{cert.b}, {cert.m}, {cert.s}")
    table.add_row("t", str(cert.t))
    table.add_row("verified", "yes" if cert.verified else "no")
    table.add_row("shapes checked", str(cert.shapes_checked))
    if cert.witness is not None:
        j, k = cert.witness
        table.add_row("witness", f"j={j} k={k} holds {cert.witness_count} points, expected {cert.b ** cert.t}")
    console.print(table)


@main.command()
@click.option("--in", "path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--t", "t", type=int, required=True)
def exactness(path, t):
    """Largest |Q_P(Psi) - I(Psi)| over all wavelets with |j| <= m - t."""
    report = exactness_report(read_points(path), t)
    click.echo(f"max_deviation {_num(report.max_deviation)}")
    click.echo(f"witness {report.witness if report.witness is not None else '-'}")


def _append_row(csv, row):
    csv = Path(csv)
    pd.DataFrame([row], columns=CONVERGENCE_COLUMNS).to_csv(
        csv, mode="a", header=not csv.exists(), index=False, float_format=FLOAT_FORMAT, na_rep=""
    )


@main.command()
@click.option("--in", "path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--p", "p", default="2", show_default=True)
@click.option("--q", "q", default="2", show_default=True)
@click.option("--jmax", "j_max", type=int, default=None)
@click.option("--t", "t", type=int, default=None)
@click.option("--mode", type=click.Choice(["upper", "lower", "hilbert"]), default="upper", show_default=True)
@click.option("--lower-mode", type=click.Choice(["exact", "analytic"]), default="exact", show_default=True)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@click.option("--constant", is_flag=True, help="Also print the constant of the net upper bound.")
@click.option("--csv", "csv", type=click.Path(dir_okay=False), default=None, help="Append the result as a row.")
def wce(path, alpha, p, q, j_max, t, mode, lower_mode, tol, constant, csv):
    """Worst-case error of Q_P on the Haar wavelet space."""
    P = read_points(path)
    params = SpaceParams(P.base, P.dim, alpha, p, q)
    tail = None
    if mode == "upper":
        bound = wce_upper_dual(P, params, j_max=j_max, t=t)
        t, value, tail = bound.t, bound.total, bound.tail
        click.echo(f"{_num(bound.truncated)} {_num(bound.tail)} {_num(bound.total)}")
        if constant and t is not None:
            click.echo(f"constant {_num(theorem_constant(P.base, t, P.dim, alpha, p, q))}")
    elif mode == "lower":
        value = mock_lower_bound(P, params, mode=lower_mode)
        click.echo(_num(value))
    else:
        value = wce_exact_hilbert(P, alpha, tol=tol)
        click.echo(_num(value))
    if csv:
        m = P.m if P.is_power_of_base else None
        _append_row(csv, {
            "b": P.base, "s": P.dim, "t": t, "m": m, "N": P.size, "alpha": alpha, "p": str(params.p),
            "q": str(params.q), "method": mode, "value": value, "tail": tail, "seconds": None,
        })


@main.command()
@click.option("--in", "path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--pprime", default="2", show_default=True)
@click.option("--qprime", default="2", show_default=True)
@click.option("--method", type=click.Choice(["warnock", "quad", "mc", "tensor-quad", "monte-carlo"]),
              default="warnock", show_default=True)
@click.option("--tol", type=float, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--samples", type=int, default=1 << 16, show_default=True)
def discrepancy(path, alpha, pprime, qprime, method, tol, seed, samples):
    """Fractional discrepancy D*_{alpha,s,p',q'} of a point set."""
    result = frac_discrepancy(read_points(path), alpha, pprime, qprime, method=method, tol=tol,
                              seed=seed, samples=samples)
    click.echo(f"{_num(result.value)} {_num(result.error_estimate)}")


@main.command()
@click.option("--in", "path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--p", "p", default="2", show_default=True)
@click.option("--q", "q", default="2", show_default=True)
@click.option("--panels", type=int, default=None, help="Uniform panels per axis [default: 16 N, at least 64]")
@click.option("--grading", type=int, default=16, show_default=True)
def sharpness(path, alpha, p, q, panels, grading):
    """Ratio |I(f) - Q_P(f)| / (D* ||f||) of the extremal function on a panel grid."""
    result = extremal_function(read_points(path), alpha, p, q, panels=panels, grading=grading)
    click.echo(f"achieved_ratio {_num(result.achieved_ratio)}")
    click.echo(f"discrepancy {_num(result.discrepancy.value)}")


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--out", "out", type=click.Path(dir_okay=False), default=None)
@click.option("--timing/--no-timing", default=None)
def run(config, seed, workers, out, timing):
    """Run every [experiment] section of CONFIG."""
    configs = load_config(config)
    if out is not None and len(configs) > 1:
        raise click.BadParameter("--out needs a config with a single [experiment]", param_hint="--out")
    for cfg in configs:
        cfg = cfg.with_overrides(seed=seed, workers=workers, out=out, timing=timing)
        result = run_experiment(cfg)
        if cfg.kind == "convergence":
            table = Table(title=f"{cfg.name}: rate fits")
            for column in ("alpha", "p", "q", "method", "exponent", "ratio band", "points"):
                table.add_column(column)
            for fit in result.fits:
                exponent = "-" if fit.exponent is None else f"{fit.exponent:.4f}"
                table.add_row(f"{fit.params.alpha:g}", str(fit.params.p), str(fit.params.q), fit.method,
                              exponent, f"[{fit.ratio_min:.4g}, {fit.ratio_max:.4g}]", str(fit.points))
            console.print(table)
            if cfg.out:
                console.print(f"rows in {cfg.out}, fits in {fits_path(cfg.out)}")
        else:
            console.print(f"{cfg.name}: worst ratio at the finest grid {result.worst_ratio_at_finest:.6f}")
            if cfg.out:
                console.print(f"rows in {cfg.out}")
