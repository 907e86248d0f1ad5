from __future__ import annotations

import sys
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Iterator, List, Optional, Sequence

import click
import numpy as np
import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

try:  # newer typer raises exceptions from its vendored copy of click
    from typer._click import exceptions as _typer_click_exceptions
except ImportError:  # pragma: no cover - typer that uses click directly
    _typer_click_exceptions = click.exceptions

_USAGE_ERRORS = (click.exceptions.UsageError, _typer_click_exceptions.UsageError)
_ABORTS = (click.exceptions.Abort, _typer_click_exceptions.Abort)

from waning_interest.errors import InvalidParameterError, ParseError, WaningError
from waning_interest.inference import fit_ccdf, fit_mle, fitted_intensity, reduce_params
from waning_interest.ingest import IngestedSeries, parse_timestamps
from waning_interest.model import ModelParams, classify_regime, regime_rate
from waning_interest.paths import default_export_path, ensure_workspace, workspace_root
from waning_interest.published import get_blogger, load_bloggers
from waning_interest.records import (
    sha256_bytes,
    write_ccdf_csv,
    write_curves_csv,
    write_intensity_csv,
    write_record,
    write_stream_csv,
)
from waning_interest.runlog import RunLogger, create_run_log
from waning_interest.settings import Settings
from waning_interest.simulator import SimulationSpec, simulate as run_simulation
from waning_interest.stats import empirical_ccdf, interarrivals, rescale_and_test, summarize
from waning_interest.theory import CurveMethod, survival_curve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

app = typer.Typer(
    add_completion=False,
    no_args_is_help=True,
    help="Simulate, analyze and fit decaying-interest event streams (times in days).",
)
console = Console()
_state = {"quiet": False, "argv": []}


# ----------------------------
# Choices
# ----------------------------
class SimMethod(str, Enum):
    inversion = "inversion"
    thinning = "thinning"


class FitMethod(str, Enum):
    mle = "mle"
    ccdf = "ccdf"


class TheoryMethod(str, Enum):
    closed = "closed"
    quadrature = "quadrature"
    mc = "mc"
    asymptotic = "asymptotic"


class InputFormat(str, Enum):
    auto = "auto"
    iso = "iso"
    numeric = "numeric"
    csv = "csv"


class DedupChoice(str, Enum):
    drop = "drop"
    jitter = "jitter"


THEORY_METHODS = {
    TheoryMethod.closed: CurveMethod.CLOSED_FORM,
    TheoryMethod.quadrature: CurveMethod.QUADRATURE,
    TheoryMethod.mc: CurveMethod.MONTE_CARLO,
    TheoryMethod.asymptotic: CurveMethod.ASYMPTOTIC,
}


# ----------------------------
# Helpers
# ----------------------------
def header():
    console.print(Panel.fit("[bold]Waning Interest[/bold]\nDecaying-interest event streams", border_style="cyan"))


@contextmanager
def command_log(name: str) -> Iterator[RunLogger]:
    ensure_workspace()
    with create_run_log(name, echo=not _state["quiet"], console=console) as rl:
        rl.detail("argv: " + " ".join(_state["argv"]))
        try:
            yield rl
        except WaningError as e:
            rl.exception(str(e))
            raise


def resolve_params(alpha: Optional[float], beta: Optional[float], b: Optional[float], blogger: Optional[str]) -> ModelParams:
    if blogger:
        if any(v is not None for v in (alpha, beta, b)):
            raise InvalidParameterError("use either --blogger or --alpha/--beta/--b")
        return get_blogger(blogger).model_params()
    missing = [flag for flag, v in (("--alpha", alpha), ("--beta", beta), ("--b", b)) if v is None]
    if missing:
        raise InvalidParameterError(f"missing {', '.join(missing)}")
    return ModelParams(alpha=alpha, beta=beta, b=b)


def resolve_seed(seed: Optional[int]) -> int:
    return Settings.from_env().seed if seed is None else int(seed)


def load_series(
    path: Path,
    fmt: InputFormat,
    column: Optional[str],
    origin: Optional[str],
    dedup: DedupChoice,
    resolution: Optional[float],
    horizon: Optional[float],
    seed: int,
) -> tuple[IngestedSeries, str]:
    path = Path(path).expanduser()
    if not path.is_file():
        raise ParseError(f"input file not found: {path}")
    data = path.read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise ParseError(f"{path} is not UTF-8 text") from None
    series = parse_timestamps(
        text, fmt.value, column=column, origin=origin, dedup=dedup.value,
        resolution=resolution, horizon=horizon, seed=seed,
    )
    return series, sha256_bytes(data)


def describe_series(rl: RunLogger, series: IngestedSeries) -> None:
    s = series.stream
    rl.log(
        f"Read {series.raw_count} records ({series.source_format.value}): {len(s)} events, "
        f"{series.dropped_duplicates} duplicates dropped, horizon {s.horizon:.6g} days"
    )
    if s.origin_label is not None:
        rl.detail(f"origin: {s.origin_label.isoformat()}")


def out_path(out: Optional[Path], stem: str, suffix: str = ".csv") -> Path:
    return Path(out).expanduser().resolve() if out else default_export_path(stem, suffix)


def log_grid(t_max: float, points: int) -> np.ndarray:
    """0 followed by log-spaced times ending at t_max; a single point is t_max itself."""
    if points < 1 or not t_max > 0:
        raise InvalidParameterError(f"need --points >= 1 and --t-max > 0, got {points} and {t_max}")
    if points == 1:
        return np.array([float(t_max)])
    return np.concatenate(([0.0], np.geomspace(t_max / 10 ** 3, t_max, points - 1)))


# ----------------------------
# Global options
# ----------------------------
@app.callback()
def main_callback(
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Only write the run log, no console echo."),
):
    """Decaying-interest event streams: lambda(t) = beta + alpha/(b t + 1), t in days."""
    _state["quiet"] = quiet


# ----------------------------
# Subcommands
# ----------------------------
@app.command()
def simulate(
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Initial excess rate (events/day)."),
    beta: Optional[float] = typer.Option(None, "--beta", help="Long-run rate (events/day)."),
    b: Optional[float] = typer.Option(None, "--b", help="Decay speed (1/day)."),
    blogger: Optional[str] = typer.Option(None, "--blogger", help="Use a published blogger's parameters (A-D)."),
    horizon: Optional[float] = typer.Option(None, "--horizon", help="Observation window in days."),
    events: Optional[int] = typer.Option(None, "--events", help="Stop after this many events instead."),
    seed: Optional[int] = typer.Option(None, "--seed", help="RNG seed (default: WANING_SEED)."),
    method: SimMethod = typer.Option(SimMethod.inversion, "--method", help="Sampler."),
    out: Optional[Path] = typer.Option(None, "--out", "-O", help="Output CSV (default: exports/stream_<ts>.csv)."),
):
    """Simulate one event stream and write it as CSV (time_days)."""
    with command_log("simulate") as rl:
        params = resolve_params(alpha, beta, b, blogger)
        if blogger and horizon is None and events is None:
            horizon = get_blogger(blogger).horizon_days()
        spec = SimulationSpec(params=params, horizon=horizon, event_count=events, seed=resolve_seed(seed))
        rl.detail(f"spec: {spec} method={method.value}")
        stream = run_simulation(spec, method.value)
        path = write_stream_csv(stream, out_path(out, "stream"))
        rl.log(f"Simulated {len(stream)} events over {stream.horizon:.6g} days -> {path}")


@app.command()
def ccdf(
    input: Path = typer.Option(..., "--input", "-i", help="Timestamp file."),
    fmt: InputFormat = typer.Option(InputFormat.auto, "--format", help="Input format."),
    column: Optional[str] = typer.Option(None, "--column", help="CSV column holding the timestamps."),
    origin: Optional[str] = typer.Option(None, "--origin", help="Explicit t = 0 (date or days); keeps the first record as an event."),
    dedup: DedupChoice = typer.Option(DedupChoice.drop, "--dedup", help="Duplicate timestamp policy."),
    resolution: Optional[float] = typer.Option(None, "--resolution", help="Jitter width in days."),
    include_first: bool = typer.Option(False, "--include-first", help="Count the gap from t = 0 to the first event."),
    log_bins: Optional[int] = typer.Option(None, "--log-bins", help="Geometric bins (0 = unbinned; default WANING_LOG_BINS)."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for --dedup jitter."),
    out: Optional[Path] = typer.Option(None, "--out", "-O", help="Output CSV (t_days,survival)."),
):
    """Empirical CCDF of interarrival times."""
    with command_log("ccdf") as rl:
        settings = Settings.from_env()
        series, _ = load_series(input, fmt, column, origin, dedup, resolution, None, resolve_seed(seed))
        describe_series(rl, series)
        sample = interarrivals(series.stream, include_first=include_first)
        bins = settings.log_bins if log_bins is None else log_bins
        curve = empirical_ccdf(sample, log_bins=bins or None)

        stats = summarize(sample)
        t = Table(title="Interarrival times (days)", show_header=True, header_style="bold magenta")
        t.add_column("statistic", style="dim")
        t.add_column("value", justify="right")
        for k, v in stats.items():
            t.add_row(k, f"{v:.6g}" if isinstance(v, float) else str(v))
        if not _state["quiet"]:
            console.print(t)

        path = write_ccdf_csv(curve, out_path(out, "ccdf"))
        rl.log(f"Wrote {len(curve)} CCDF points ({sample.zero_count} zero gaps excluded) -> {path}")


@app.command()
def fit(
    input: Path = typer.Option(..., "--input", "-i", help="Timestamp file."),
    method: FitMethod = typer.Option(FitMethod.mle, "--method", help="mle on timestamps, or ccdf curve fit."),
    fmt: InputFormat = typer.Option(InputFormat.auto, "--format", help="Input format."),
    column: Optional[str] = typer.Option(None, "--column", help="CSV column holding the timestamps."),
    origin: Optional[str] = typer.Option(None, "--origin", help="Explicit t = 0 (date or days)."),
    dedup: DedupChoice = typer.Option(DedupChoice.drop, "--dedup", help="Duplicate timestamp policy."),
    resolution: Optional[float] = typer.Option(None, "--resolution", help="Jitter width in days."),
    horizon: Optional[float] = typer.Option(None, "--horizon", help="End of observation (default: last event)."),
    include_first: bool = typer.Option(False, "--include-first", help="ccdf: count the gap from t = 0."),
    log_bins: Optional[int] = typer.Option(None, "--log-bins", help="ccdf: geometric bins (0 = unbinned)."),
    tail_trim: int = typer.Option(2, "--tail-trim", help="ccdf: drop points carried by the largest N gaps."),
    restarts: int = typer.Option(0, "--restarts", help="mle: extra simplex restarts."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for restarts / jitter."),
    intensity_out: Optional[Path] = typer.Option(None, "--intensity-out", help="mle: write the fitted intensity curve."),
    out: Optional[Path] = typer.Option(None, "--out", "-O", help="Output JSON record."),
):
    """Fit the model by maximum likelihood, or the cutoff power law to the CCDF."""
    with command_log("fit") as rl:
        settings = Settings.from_env()
        run_seed = resolve_seed(seed)
        series, digest = load_series(input, fmt, column, origin, dedup, resolution, horizon, run_seed)
        describe_series(rl, series)
        stream = series.stream

        if method is FitMethod.mle:
            result = fit_mle(stream, restarts=restarts, seed=run_seed)
            record = result.as_record()
            p = result.params
            rl.log(
                f"MLE alpha={p.alpha:.6g} beta={p.beta:.6g} b={p.b:.6g} "
                f"logL={result.log_likelihood:.6f} converged={result.converged}"
            )
            reduced = reduce_params(stream, result)
            rl.log(f"Regime after thresholding: {classify_regime(reduced).value}")
            if intensity_out:
                ts = np.linspace(0.0, stream.horizon, 201)
                write_intensity_csv(ts, fitted_intensity(result, ts), Path(intensity_out).expanduser())
        else:
            bins = settings.log_bins if log_bins is None else log_bins
            curve = empirical_ccdf(interarrivals(stream, include_first=include_first), log_bins=bins or None)
            result = fit_ccdf(curve, tail_trim=tail_trim)
            record = result.as_record()
            rl.log(
                f"1 - F(t) = {result.prefactor:.4g} (t + {result.t0:.4g})^-{result.gamma:.4g} "
                f"e^(-{result.beta:.4g} t)   sse={result.sse:.3g} over {result.n_points} points"
            )

        record["input_digest"] = digest
        path = write_record(record, out_path(out, f"fit_{method.value}", ".json"))
        rl.log(f"Fit record -> {path}")


@app.command()
def theory(
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Initial excess rate (events/day)."),
    beta: Optional[float] = typer.Option(None, "--beta", help="Long-run rate (events/day)."),
    b: Optional[float] = typer.Option(None, "--b", help="Decay speed (1/day)."),
    blogger: Optional[str] = typer.Option(None, "--blogger", help="Use a published blogger's parameters (A-D)."),
    n: int = typer.Option(0, "--n", help="Which gap: survival of T_(n+1)."),
    t: Optional[List[float]] = typer.Option(None, "--t", help="Evaluation time in days (repeatable)."),
    t_max: float = typer.Option(100.0, "--t-max", help="Log grid end when no --t is given."),
    points: int = typer.Option(50, "--points", help="Log grid size when no --t is given."),
    method: TheoryMethod = typer.Option(TheoryMethod.quadrature, "--method", help="closed | quadrature | mc | asymptotic."),
    reps: Optional[int] = typer.Option(None, "--reps", help="mc: replications (default WANING_MC_REPS)."),
    seed: Optional[int] = typer.Option(None, "--seed", help="mc: seed."),
    workers: Optional[int] = typer.Option(None, "--workers", help="mc: worker threads (result does not depend on it)."),
    truncate_at: Optional[float] = typer.Option(None, "--truncate-at", help="quadrature: truncation time when beta = 0."),
    out: Optional[Path] = typer.Option(None, "--out", "-O", help="Output CSV (t_days,survival,method,n)."),
):
    """Survival function P{T_(n+1) > t} of the (n+1)-th interarrival time."""
    with command_log("theory") as rl:
        settings = Settings.from_env()
        params = resolve_params(alpha, beta, b, blogger)
        ts = np.asarray(t, dtype=float) if t else log_grid(t_max, points)
        curve = survival_curve(
            params, n, ts, THEORY_METHODS[method],
            reps=settings.mc_reps if reps is None else reps,
            seed=resolve_seed(seed),
            truncate_at=truncate_at,
            workers=settings.mc_workers if workers is None else workers,
        )

        table = Table(title=f"P{{T_{n + 1} > t}} ({curve.method.value})", show_header=True, header_style="bold magenta")
        table.add_column("t (days)", justify="right")
        table.add_column("survival", justify="right")
        if curve.stderr is not None:
            table.add_column("std err", justify="right", style="dim")
        for i, (tv, sv) in enumerate(curve.points):
            row = [f"{tv:.6g}", f"{sv:.6g}"]
            if curve.stderr is not None:
                row.append(f"{curve.stderr[i]:.2g}")
            table.add_row(*row)
        if not _state["quiet"]:
            console.print(table)

        path = write_curves_csv([curve], out_path(out, f"theory_n{n}"))
        rl.log(f"Wrote {len(curve.t)} points -> {path}")


@app.command()
def gof(
    input: Path = typer.Option(..., "--input", "-i", help="Timestamp file."),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Model alpha."),
    beta: Optional[float] = typer.Option(None, "--beta", help="Model beta."),
    b: Optional[float] = typer.Option(None, "--b", help="Model b."),
    blogger: Optional[str] = typer.Option(None, "--blogger", help="Use a published blogger's parameters (A-D)."),
    fmt: InputFormat = typer.Option(InputFormat.auto, "--format", help="Input format."),
    column: Optional[str] = typer.Option(None, "--column", help="CSV column holding the timestamps."),
    origin: Optional[str] = typer.Option(None, "--origin", help="Explicit t = 0 (date or days)."),
    dedup: DedupChoice = typer.Option(DedupChoice.drop, "--dedup", help="Duplicate timestamp policy."),
    resolution: Optional[float] = typer.Option(None, "--resolution", help="Jitter width in days."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for --dedup jitter."),
    out: Optional[Path] = typer.Option(None, "--out", "-O", help="Output JSON record."),
):
    """Time-rescaling Kolmogorov-Smirnov test of a stream against model parameters."""
    with command_log("gof") as rl:
        params = resolve_params(alpha, beta, b, blogger)
        series, digest = load_series(input, fmt, column, origin, dedup, resolution, None, resolve_seed(seed))
        describe_series(rl, series)
        report = rescale_and_test(series.stream, params)
        verdict = "[green]pass[/green]" if report.passed else "[red]fail[/red]"
        if not _state["quiet"]:
            console.print(
                f"KS = {report.ks_statistic:.4f} (n = {report.sample_size}, 1% critical "
                f"{report.critical_value_1pct:.4f}) {verdict}"
            )
        record = report.as_record()
        record["input_digest"] = digest
        path = write_record(record, out_path(out, "gof", ".json"))
        rl.detail(f"report: {record}")
        rl.log(f"GOF record -> {path}")


@app.command()
def regime(
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Model alpha."),
    beta: Optional[float] = typer.Option(None, "--beta", help="Model beta."),
    b: Optional[float] = typer.Option(None, "--b", help="Model b."),
    blogger: Optional[str] = typer.Option(None, "--blogger", help="Use a published blogger's parameters (A-D)."),
):
    """Classify parameters into their interarrival regime."""
    with command_log("regime") as rl:
        params = resolve_params(alpha, beta, b, blogger)
        label = classify_regime(params)
        rate = regime_rate(params)
        if rate is None:
            rl.log(f"{label.value}: power-law exponent alpha/b = {params.gamma:.6g}, cutoff rate {params.beta:.6g}/day")
        else:
            rl.log(f"{label.value}: exponential interarrivals, rate {rate:.6g}/day")


@app.command()
def bloggers():
    """List the published bloggers and their fitted CCDF forms."""
    header()
    t = Table(show_header=True, header_style="bold magenta")
    for col in ("blogger", "posts", "window", "1 - F(t)", "alpha", "beta", "b"):
        t.add_column(col)
    for bl in load_bloggers():
        p = bl.model_params()
        t.add_row(
            bl.label,
            str(bl.posts),
            f"{bl.first_post.isoformat()} to {bl.last_post.isoformat()} ({bl.horizon_days():.0f} d)",
            f"{bl.prefactor:g}(t + {bl.t0:g})^-{bl.gamma:g} e^(-{bl.beta:g}t)",
            f"{p.alpha:.4g}",
            f"{p.beta:.4g}",
            f"{p.b:.4g}",
        )
    console.print(t)


@app.command()
def init():
    """Initialize the workspace (exports/ and log/ folders)."""
    ensure_workspace()
    root = workspace_root()
    typer.echo("✅ Workspace initialized")
    typer.echo(f"📁 Location: {root}")
    typer.echo("")
    typer.echo("Created (if missing):")
    typer.echo("  - exports/")
    typer.echo("  - log/")
    typer.echo("Optional: put WANING_SEED / WANING_LOG_BINS / WANING_MC_REPS in .env there.")


# ----------------------------
# Entry points
# ----------------------------
def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """Run one CLI invocation; 0 success, 1 usage error, 2 data error."""
    args = list(sys.argv[1:] if argv is None else argv)
    _state["argv"] = args
    try:
        rv = app(args=args, prog_name="waning-interest", standalone_mode=False)
    except _USAGE_ERRORS as e:
        e.show()
        return EXIT_USAGE
    except _ABORTS:
        console.print("\n[yellow]Cancelled.[/yellow]")
        return EXIT_USAGE
    except WaningError as e:
        console.print(f"[red]Error:[/red] {e}")
        return EXIT_DATA
    except OSError as e:
        console.print(f"[red]Error:[/red] {e}")
        return EXIT_DATA
    return rv if isinstance(rv, int) else EXIT_OK


def main() -> None:
    sys.exit(run_command())
