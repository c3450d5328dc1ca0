# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0

import logging
import sys
from contextlib import ExitStack
from pathlib import Path
from typing import IO, Any, Dict, List, Optional, Union

import click
import structlog
from pydantic import ValidationError
from structlog.contextvars import merge_contextvars
from structlog.processors import KeyValueRenderer, add_log_level

from beatty_census.analytic import SeriesClass, eval_series, mertens_table, rough_table
from beatty_census.arith import build_spf_table, classify, factorize_any
from beatty_census.beatty import (
    AlphaValue,
    contains,
    continued_fraction,
    enumerate_up_to,
    estimate_type,
    nth_term,
    parse_alpha,
    parse_params,
)
from beatty_census.census import (
    CensusConfig,
    ratio_converges,
    ratio_report,
    run_census,
    theorem_comparison,
)
from beatty_census.config import Settings, get_settings
from beatty_census.errors import BeattyCensusError, InvariantError, UsageError
from beatty_census.expsum import (
    divisor_beatty_error,
    minsum_reference,
    minsum_type1,
    minsum_type2,
    multiplicative_expsum,
    random_erdos_turan_suite,
    vaaler_check,
)
from beatty_census.models import (
    AnalyticRow,
    CensusRow,
    ComparisonRow,
    ExpSumRow,
    OutputFormat,
    RatioRow,
    RunConfig,
)
from beatty_census.pydantic_types import RationalValue, parse_scientific_int
from beatty_census.reports import CheckpointWriter, read_checkpoint, write_csv, write_rows

logger = structlog.stdlib.get_logger()

# classify builds an SPF table only up to here; larger n go through sympy.
CLASSIFY_TABLE_LIMIT = 10**6

SERIES_CLASSES = {
    "cyclic": SeriesClass.C,
    "abelian-minus-cyclic": SeriesClass.A_MINUS_C,
    "nilpotent-minus-abelian": SeriesClass.N_MINUS_A,
    "C": SeriesClass.C,
    "A_minus_C": SeriesClass.A_MINUS_C,
    "N_minus_A": SeriesClass.N_MINUS_A,
}
DIAGNOSTIC_KINDS = ["et", "vaaler", "minsum", "divisor", "expsum", "mertens", "rough"]


class ScientificIntParam(click.ParamType):
    name = "integer"

    def convert(self, value, param, ctx):
        if isinstance(value, int):
            return value
        try:
            return parse_scientific_int(str(value))
        except ValueError as exc:
            self.fail(str(exc), param, ctx)


class IntListParam(click.ParamType):
    name = "integer list"

    def convert(self, value, param, ctx):
        if isinstance(value, list):
            return value
        try:
            return [parse_scientific_int(part) for part in str(value).split(",") if part.strip()]
        except ValueError as exc:
            self.fail(str(exc), param, ctx)


SCIENTIFIC_INT = ScientificIntParam()
INT_LIST = IntListParam()


def _stderr_logger(*args: Any) -> structlog.PrintLogger:
    return structlog.PrintLogger(sys.stderr)


def configure_logging(level: str) -> None:
    structlog.configure(
        processors=[merge_contextvars, add_log_level, KeyValueRenderer()],
        wrapper_class=structlog.make_filtering_bound_logger(logging.getLevelName(level)),
        logger_factory=_stderr_logger,
        cache_logger_on_first_use=False,
    )


def read_manifest(path: Path) -> Dict[str, str]:
    """Parse a ``key = value`` run manifest; ``#`` starts a comment."""
    manifest = {}
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, separator, value = line.partition("=")
        if not separator:
            raise UsageError(f"{path}:{number}: expected key = value")
        manifest[key.strip().replace("-", "_")] = value.strip()
    return manifest


def manifest_default_map(root: click.Command, manifest: Dict[str, str]) -> Dict[str, Any]:
    """Turn a flat manifest into click's nested default map.

    A key applies to every subcommand with an option of that name, spelled
    either as the option flag or as the parameter name.
    """
    used = set()

    def collect(command: click.Command) -> Dict[str, Any]:
        entry: Dict[str, Any] = {}
        for param in command.params:
            aliases = {param.name} | {opt.lstrip("-").replace("-", "_") for opt in param.opts}
            for alias in aliases & manifest.keys():
                entry[param.name] = manifest[alias]
                used.add(alias)
        if isinstance(command, click.Group):
            for name, sub in command.commands.items():
                entry[name] = collect(sub)
        return entry

    default_map = {
        name: collect(sub) for name, sub in getattr(root, "commands", {}).items()
    }
    unknown = sorted(set(manifest) - used)
    if unknown:
        raise UsageError(f"Unknown manifest keys: {', '.join(unknown)}")
    return default_map


class ErrorHandlingGroup(click.Group):
    """Maps domain errors to their exit status instead of a traceback."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except BeattyCensusError as exc:
            click.echo(f"Error: {exc}", err=True)
            ctx.exit(exc.exit_code)
        except ValidationError as exc:
            click.echo(f"Error: {exc}", err=True)
            ctx.exit(UsageError.exit_code)


def _stdout() -> IO[str]:
    return click.get_text_stream("stdout")


def _open_output(stack: ExitStack, path: Optional[str]) -> IO[str]:
    if path is None:
        return _stdout()
    return stack.enter_context(open(path, "w", newline="", encoding="utf-8"))


def _decades(upper: int, lowest: int = 10**3) -> List[int]:
    xs = []
    x = lowest
    while x < upper:
        xs.append(x)
        x *= 10
    return xs + [upper]


@click.group(cls=ErrorHandlingGroup)
@click.option("--overrides", multiple=True, help="Settings override as key=value.")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    help="Run manifest of key = value lines; explicit flags win.",
)
@click.pass_context
def beatty_census_cli(ctx, overrides, config_path):
    """Cyclic, abelian and nilpotent numbers in Beatty sequences."""

    try:
        overrides = dict(override.split("=", 1) for override in overrides)
    except ValueError as exc:
        raise UsageError(f"Overrides must be key=value: {exc}") from exc
    settings = get_settings(**overrides)
    configure_logging(settings.log_level)

    ctx.ensure_object(dict)
    ctx.obj["settings"] = settings
    if config_path is not None:
        ctx.default_map = manifest_default_map(ctx.command, read_manifest(Path(config_path)))


@beatty_census_cli.command(name="classify")
@click.argument("numbers", nargs=-1, required=True, type=SCIENTIFIC_INT)
@click.pass_context
def classify_command(ctx, numbers):
    """Classify each n as Cyclic, AbelianNotCyclic, NilpotentNotAbelian or NotNilpotent."""
    settings = ctx.obj["settings"]
    for n in numbers:
        if n < 1:
            raise UsageError(f"n must be at least 1, got {n}")
    largest = max(numbers)
    table = None
    if 2 <= largest <= min(CLASSIFY_TABLE_LIMIT, settings.spf_limit_cap):
        table = build_spf_table(largest, settings)

    out = _stdout()
    out.write("n,class,is_cyclic,is_abelian,is_nilpotent\n")
    for n in numbers:
        number_class = classify(factorize_any(n, table))
        flags = (number_class.is_cyclic, number_class.is_abelian, number_class.is_nilpotent)
        out.write(f"{n},{number_class.value}," + ",".join(str(f).lower() for f in flags) + "\n")


@beatty_census_cli.command()
@click.option("--alpha", "alpha_spec", default="sqrt:2", show_default=True)
@click.option("--beta", "beta_spec", default="0", show_default=True)
@click.option("--xmax", "x_max", type=SCIENTIFIC_INT, required=True)
@click.option("--checkpoints", type=INT_LIST, default=None, help="Comma separated, e.g. 1e5,1e6.")
@click.option("--segment-size", type=SCIENTIFIC_INT, default=None)
@click.option("--workers", "worker_count", type=click.IntRange(min=1), default=None)
@click.option("--format", "output_format", type=click.Choice(["csv", "json"]), default="csv")
@click.option("--output", "output_path", type=click.Path(dir_okay=False), default=None)
@click.option("--resume", "resume_path", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--checkpoint-file",
    type=click.Path(dir_okay=False),
    help="CSV appended after every checkpoint; defaults to the --resume file.",
)
@click.option("--ratio-output", type=click.Path(dir_okay=False))
@click.option("--order", type=SCIENTIFIC_INT, default=0, show_default=True)
@click.option("--compare-output", type=click.Path(dir_okay=False))
@click.pass_context
def census(
    ctx,
    alpha_spec,
    beta_spec,
    x_max,
    checkpoints,
    segment_size,
    worker_count,
    output_format,
    output_path,
    resume_path,
    checkpoint_file,
    ratio_output,
    order,
    compare_output,
):
    """Count C, A, N and C*, A*, N* at each checkpoint."""
    settings = ctx.obj["settings"]
    if checkpoints is None:
        checkpoints = [x for x in settings.checkpoints if x <= x_max]
    run = RunConfig(
        alpha_spec=alpha_spec,
        beta_spec=beta_spec,
        x_max=x_max,
        checkpoints=checkpoints,
        order=order,
        output_format=output_format,
        output_path=output_path,
        worker_count=worker_count or settings.threads,
        segment_size=segment_size or settings.segment_size,
        resume_path=resume_path,
    )
    params = parse_params(run.alpha_spec, run.beta_spec, settings)
    config = CensusConfig(
        x_max=run.x_max,
        checkpoints=run.checkpoints,
        params=params,
        segment_size=run.segment_size,
        worker_count=run.worker_count,
    )

    resume_rows = read_checkpoint(Path(run.resume_path)) if run.resume_path else []
    checkpoint_path = checkpoint_file or run.resume_path
    on_row = None
    if checkpoint_path:
        resumed_from = Path(run.resume_path).resolve() if run.resume_path else None
        appending = Path(checkpoint_path).resolve() == resumed_from
        on_row = CheckpointWriter(
            Path(checkpoint_path), rows=[] if appending else resume_rows, append=appending
        )
    rows = run_census(config, resume_rows, on_row, settings)

    with ExitStack() as stack:
        write_rows(rows, CensusRow, _open_output(stack, run.output_path), run.output_format)
        report = ratio_report(rows, params.alpha)
        logger.info("Ratio report", converges=ratio_converges(report))
        if ratio_output:
            write_rows(report, RatioRow, _open_output(stack, ratio_output), run.output_format)
        elif run.output_path or run.output_format is OutputFormat.CSV:
            # Two JSON documents cannot share stdout; CSV gets a blank-line separated block.
            out = _stdout()
            if not run.output_path:
                out.write("\n")
            write_rows(report, RatioRow, out, run.output_format)
        if compare_output and rows:
            table = theorem_comparison(rows[-1], run.order, params.alpha)
            compare_stream = _open_output(stack, compare_output)
            write_rows(table, ComparisonRow, compare_stream, run.output_format)


@beatty_census_cli.group()
def beatty():
    """Beatty sequence floor(alpha * r + beta) utilities."""


def _alpha_beta_options(func):
    func = click.option("--beta", "beta_spec", default="0", show_default=True)(func)
    func = click.option("--alpha", "alpha_spec", default="sqrt:2", show_default=True)(func)
    return func


@beatty.command(name="list")
@_alpha_beta_options
@click.option("--xmax", "x_max", type=SCIENTIFIC_INT, required=True)
@click.pass_context
def list_terms(ctx, alpha_spec, beta_spec, x_max):
    """All members <= xmax."""
    params = parse_params(alpha_spec, beta_spec, ctx.obj["settings"])
    out = _stdout()
    out.write("term\n")
    for term in enumerate_up_to(x_max, params):
        out.write(f"{term}\n")


@beatty.command(name="contains")
@_alpha_beta_options
@click.argument("numbers", nargs=-1, required=True, type=SCIENTIFIC_INT)
@click.pass_context
def contains_command(ctx, alpha_spec, beta_spec, numbers):
    """Whether each n is a member."""
    params = parse_params(alpha_spec, beta_spec, ctx.obj["settings"])
    out = _stdout()
    out.write("n,member\n")
    for n in numbers:
        out.write(f"{n},{str(contains(n, params)).lower()}\n")


@beatty.command(name="nth")
@_alpha_beta_options
@click.argument("indices", nargs=-1, required=True, type=SCIENTIFIC_INT)
@click.pass_context
def nth_command(ctx, alpha_spec, beta_spec, indices):
    """The r-th term for each r."""
    params = parse_params(alpha_spec, beta_spec, ctx.obj["settings"])
    out = _stdout()
    out.write("r,term\n")
    for r in indices:
        out.write(f"{r},{nth_term(r, params)}\n")


@beatty.command(name="cf")
@click.option("--alpha", "alpha_spec", default="sqrt:2", show_default=True)
@click.option("--terms", type=click.IntRange(min=0), default=10, show_default=True)
@click.pass_context
def cf_command(ctx, alpha_spec, terms):
    """Partial quotients and convergents of alpha."""
    expansion = continued_fraction(parse_alpha(alpha_spec, ctx.obj["settings"]), terms)
    out = _stdout()
    out.write("i,quotient,p,q\n")
    for i, (a, (p, q)) in enumerate(zip(expansion.quotients, expansion.convergents)):
        out.write(f"{i},{a},{p},{q}\n")


@beatty.command(name="type")
@click.option("--alpha", "alpha_spec", default="sqrt:2", show_default=True)
@click.option("--qmax", "q_max", type=SCIENTIFIC_INT, default=10**6, show_default=True)
@click.pass_context
def type_command(ctx, alpha_spec, q_max):
    """Estimate the type of alpha from its convergents."""
    alpha = parse_alpha(alpha_spec, ctx.obj["settings"])
    estimate = estimate_type(alpha, q_max)
    out = _stdout()
    out.write("alpha,q_max,tau_hat,pointwise_max,convergents\n")
    out.write(
        f"{alpha.label},{q_max},{estimate.tau_hat!r},{estimate.pointwise_max!r},"
        f"{len(estimate.evidence)}\n"
    )


def _series_alpha(spec: str, settings: Settings) -> Union[AlphaValue, float]:
    """A plain number such as ``1`` or ``3/2``, otherwise an alpha spec."""
    try:
        return float(RationalValue.validate(spec.strip()))
    except (TypeError, ValueError):
        return parse_alpha(spec, settings)


@beatty_census_cli.command()
@click.option("--class", "class_name", type=click.Choice(list(SERIES_CLASSES)), required=True)
@click.option("--x", "x", type=SCIENTIFIC_INT, required=True)
@click.option("--order", type=SCIENTIFIC_INT, default=0, show_default=True)
@click.option("--alpha", "alpha_spec", default="1", show_default=True)
@click.pass_context
def asympt(ctx, class_name, x, order, alpha_spec):
    """Truncated asymptotic prediction for C, A - C or N - A."""
    alpha = _series_alpha(alpha_spec, ctx.obj["settings"])
    class_tag = SERIES_CLASSES[class_name]
    prediction = eval_series(class_tag, x, order, alpha)
    out = _stdout()
    out.write("class,x,order,alpha,prediction\n")
    out.write(f"{class_tag.value},{x},{order},{alpha_spec},{prediction!r}\n")


@beatty_census_cli.command()
@click.argument("kind", type=click.Choice(DIAGNOSTIC_KINDS))
@_alpha_beta_options
@click.option("--xmax", "x_max", type=SCIENTIFIC_INT, default=None, help="mertens, rough.")
@click.option("--N", "N_values", type=INT_LIST, default=None, help="minsum, divisor, expsum.")
@click.option("--H", "H_values", type=INT_LIST, default=None, help="vaaler.")
@click.option("--grid", type=SCIENTIFIC_INT, default=10**5, show_default=True, help="vaaler.")
@click.option("--d-max", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--x", "x_value", type=float, default=None, help="minsum; defaults to N.")
@click.option("--y", type=float, default=30.0, show_default=True, help="rough.")
@click.option("--f", "f_spec", default="one", show_default=True, help="expsum.")
@click.option("--j", type=click.IntRange(min=1), default=1, show_default=True, help="expsum.")
@click.option("--tau", type=float, default=None, help="minsum, expsum.")
@click.option("--quantity", type=click.Choice(["sum", "product"]), default="product")
@click.option("--count", type=click.IntRange(min=1), default=200, show_default=True, help="et.")
@click.option("--seed", type=int, default=0, show_default=True, help="et.")
@click.pass_context
def diagnose(
    ctx,
    kind,
    alpha_spec,
    beta_spec,
    x_max,
    N_values,
    H_values,
    grid,
    d_max,
    x_value,
    y,
    f_spec,
    j,
    tau,
    quantity,
    count,
    seed,
):
    """Numerical checks of the discrepancy, exponential sum and Mertens estimates."""
    settings = ctx.obj["settings"]
    out = _stdout()

    if kind in ("mertens", "rough"):
        xs = _decades(x_max or 10**6)
        if kind == "mertens":
            rows = mertens_table(xs, quantity, settings)
        else:
            params = parse_params(alpha_spec, beta_spec, settings)
            rows = rough_table(xs, y, params, settings.threads, settings)
        write_csv(rows, AnalyticRow, out)
        return

    expsum_rows: List[ExpSumRow] = []
    if kind == "et":
        results = random_erdos_turan_suite(count, seed)
        expsum_rows = [
            ExpSumRow(
                j_or_d=result.J,
                N=result.N,
                observed=result.actual_dev,
                reference=result.bound,
                flag="ok" if result.holds else "violation",
            )
            for result in results
        ]
        write_csv(expsum_rows, ExpSumRow, out)
        if not all(result.holds for result in results):
            raise InvariantError("Erdos-Turan bound violated")
        return

    if kind == "vaaler":
        for H in H_values or [1, 4, 16, 64]:
            check = vaaler_check(H, grid)
            expsum_rows.append(
                ExpSumRow(
                    j_or_d=H,
                    N=grid,
                    observed=check.mean_error,
                    reference=1.1 / (H + 1),
                    flag="pass" if check.passes else "fail",
                )
            )
    elif kind == "minsum":
        params = parse_params(alpha_spec, beta_spec, settings)
        for N in N_values or [10**3, 10**4]:
            x = x_value if x_value is not None else float(N)
            first = minsum_type1(params.alpha, x, N)
            second = minsum_type2(params.alpha, params.beta, x, N)
            tau_used = tau if tau is not None else 1.0
            expsum_rows.append(
                ExpSumRow(
                    j_or_d=1,
                    N=N,
                    observed=first,
                    reference=minsum_reference(N, x, tau_used, settings.epsilon),
                )
            )
            expsum_rows.append(
                ExpSumRow(
                    j_or_d=2,
                    N=N,
                    observed=second,
                    reference=minsum_reference(N, x, tau_used, settings.epsilon, True),
                )
            )
    elif kind == "divisor":
        params = parse_params(alpha_spec, beta_spec, settings)
        for N in N_values or [10**4, 10**6]:
            for d in range(1, d_max + 1):
                error = divisor_beatty_error(d, N, params)
                expsum_rows.append(
                    ExpSumRow(
                        j_or_d=d,
                        N=N,
                        observed=error.count,
                        reference=error.main,
                        flag=f"err={error.err:.6f}",
                    )
                )
    else:
        alpha = parse_alpha(alpha_spec, settings)
        expsum_rows = multiplicative_expsum(
            f_spec, alpha, j, N_values or [10**4, 10**5, 10**6], tau=tau
        )
    write_csv(expsum_rows, ExpSumRow, out)


if __name__ == "__main__":
    beatty_census_cli()
