# lkengine/cli.py
import json
import signal
import threading
from functools import wraps

import click
from flask import current_app
from flask.cli import with_appcontext

from lkengine.checks import SUITES
from lkengine.errors import EngineError, InputError, ValidationError
from lkengine.extensions import WorkerPool
from lkengine.geometry import zoo
from lkengine.geometry.quadrature import QuadratureSettings
from lkengine.geometry.submersion import collapse_sweep, sectional_sweep, validate
from lkengine.geometry.tubeoracle import TubeSettings, fit_steiner_coefficients, steiner_eval, tube_volume_mc
from lkengine.geometry.weylsum import compute_intrinsic_volume
from lkengine.models import (SECTIONAL_HEADER, SWEEP_HEADER, RunConfig, companion_path, load_input, parse_eps,
                             render_csv, render_json, write_output)


def handle_engine_errors(f):
    """Decorator to turn engine failures into the documented exit codes."""

    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except EngineError as e:
            current_app.logger.error(f"{f.__name__} failed: {e}")
            click.echo(f"error: {e}", err=True)
            raise click.exceptions.Exit(e.exit_code)

    return decorated_function


class EngineCommand(click.Command):
    """Command whose usage errors (missing or malformed flags) exit with the input-error code."""

    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as e:
            e.show()
            raise click.exceptions.Exit(InputError.exit_code)


def _settings():
    return QuadratureSettings.from_config(current_app.config)


def _pool(workers):
    if workers is None:
        return current_app.extensions["lk_workers"]
    if workers < 1:
        raise InputError(f"worker count must be at least 1, got {workers}")
    return WorkerPool(workers)


def _run_config(command, uri, pool, settings, **fields):
    return RunConfig(
        command=command,
        input=uri,
        max_nodes=settings.max_nodes,
        base_order=settings.base_order,
        abs_tol=settings.abs_tol,
        rel_tol=settings.rel_tol,
        workers=pool.workers,
        **fields,
    ).validate()


def _emit(text, path):
    remaining = write_output(path, text)
    if remaining is not None:
        click.echo(remaining, nl=False)


def _schedule(eps_text):
    return parse_eps(eps_text) or tuple(current_app.config["EPS_SCHEDULE"])


def _require(loaded, kind):
    if getattr(loaded, kind) is None:
        raise InputError(f"{loaded.name} is not a {kind}")
    return getattr(loaded, kind)


def common_options(f):
    f = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write output to this file.")(f)
    f = click.option("--format", "output_format", type=click.Choice(["csv", "json"]), default="csv",
                     help="Output format.")(f)
    f = click.option("--workers", type=int, default=None, help="Worker threads (defaults to LK_WORKERS).")(f)
    return f


@click.command("compute", cls=EngineCommand)
@click.argument("uri")
@click.option("--i", "indices", type=int, multiple=True, required=True, help="Intrinsic volume index (repeatable).")
@click.option("--format", "output_format", type=click.Choice(["text", "csv", "json"]), default="text")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--workers", type=int, default=None)
@with_appcontext
@handle_engine_errors
def compute(uri, indices, output_format, out, workers):
    """Print intrinsic volumes V_i of a closed manifold with error estimates."""
    settings, pool = _settings(), _pool(workers)
    run = _run_config("compute", uri, pool, settings, indices=tuple(indices),
                      output_format="json" if output_format == "json" else "csv", out=out)
    loaded = load_input(uri)
    results = [compute_intrinsic_volume(loaded.atlas, i, settings=settings, pool=pool) for i in indices]
    if output_format == "text":
        lines = []
        for r in results:
            lines.append(f"{r.value:.6f} +- {r.error_estimate:.2e}" if r.computed else "0")
        _emit("\n".join(lines) + "\n", out)
    elif output_format == "csv":
        _emit(render_csv(("i", "value", "error"), [(r.i, float(r.value), float(r.error_estimate)) for r in results]),
              out)
    else:
        _emit(render_json(run, {"volumes": [
            {"i": r.i, "value": r.value, "error": r.error_estimate, "exact_zero": not r.computed} for r in results
        ]}), out)


@click.command("sweep", cls=EngineCommand)
@click.argument("uri")
@click.option("--i", "index", type=int, required=True, help="Intrinsic volume index.")
@click.option("--eps", "eps_text", default="", help="Comma list or a:ratio:count (defaults to EPS_SCHEDULE).")
@common_options
@with_appcontext
@handle_engine_errors
def sweep(uri, index, eps_text, workers, output_format, out):
    """Sweep V_i along the fiber collapse and extrapolate the limit."""
    settings, pool = _settings(), _pool(workers)
    schedule = _schedule(eps_text)
    run = _run_config("sweep", uri, pool, settings, indices=(index,), eps=schedule, output_format=output_format,
                      out=out)
    sc = _require(load_input(uri), "submersion")

    cancel = threading.Event()
    previous = None
    if threading.current_thread() is threading.main_thread():
        previous = signal.signal(signal.SIGINT, lambda *_: cancel.set())
    try:
        record = collapse_sweep(sc, index, schedule, settings, pool, cancel, current_app.config["SAMPLE_COUNT"] // 4)
    finally:
        if previous is not None:
            signal.signal(signal.SIGINT, previous)

    rows = [(eps, value, record.target, abs(value - record.target))
            for eps, value in zip(record.eps_list, record.values)]
    summary = record.summary()
    summary["eps"] = record.eps_list
    summary["errors"] = record.errors
    if output_format == "csv":
        _emit(render_csv(SWEEP_HEADER, rows), out)
        summary_path = companion_path(out, "summary.json")
        if summary_path is not None:
            write_output(summary_path, render_json(run, summary))
    else:
        summary["rows"] = [dict(zip(SWEEP_HEADER, row)) for row in rows]
        _emit(render_json(run, summary), out)
    current_app.logger.info(f"sweep limit {record.extrapolated_limit:.9g} target {record.target:.9g}")
    if not record.cancelled and not record.passed:
        raise ValidationError(f"extrapolated limit {record.extrapolated_limit:.9g} misses target {record.target:.9g}")


@click.command("sectional", cls=EngineCommand)
@click.argument("uri")
@click.option("--eps", "eps_text", default="", help="Comma list or a:ratio:count (defaults to EPS_SCHEDULE).")
@click.option("--samples", type=int, default=None, help="Sample points (defaults to SAMPLE_COUNT).")
@click.option("--seed", type=int, default=0)
@common_options
@with_appcontext
@handle_engine_errors
def sectional(uri, eps_text, samples, seed, workers, output_format, out):
    """Tabulate per-class minima of sectional curvature along the collapse."""
    settings, pool = _settings(), _pool(workers)
    schedule = _schedule(eps_text)
    samples = samples if samples is not None else current_app.config["SAMPLE_COUNT"]
    run = _run_config("sectional", uri, pool, settings, eps=schedule, seed=seed, samples=samples,
                      output_format=output_format, out=out)
    sc = _require(load_input(uri), "submersion")
    report = sectional_sweep(sc, schedule, samples, seed)
    rows = list(report.rows())
    if output_format == "csv":
        _emit(render_csv(SECTIONAL_HEADER, rows), out)
    else:
        _emit(render_json(run, {
            "rows": [dict(zip(SECTIONAL_HEADER, row)) for row in rows],
            "scaled_fiber_minima": report.scaled_fiber_minima,
            "scaled_fiber_limit": report.scaled_fiber_limit,
            "fiber_min": report.fiber_min,
            "bounded_below": report.bounded_below,
        }), out)


@click.command("tube", cls=EngineCommand)
@click.argument("uri")
@click.option("--eps", "eps_text", required=True, help="Tube radius, or a list for a Steiner fit.")
@click.option("--samples", type=int, default=1_000_000)
@click.option("--seed", type=int, default=0)
@click.option("--workers", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@with_appcontext
@handle_engine_errors
def tube(uri, eps_text, samples, seed, workers, out):
    """Monte-Carlo volume of eps-tubes around an embedded surface (JSON)."""
    settings, pool = _settings(), _pool(workers)
    eps_values = parse_eps(eps_text)
    if not eps_values:
        raise InputError("at least one eps value is required")
    run = _run_config("tube", uri, pool, settings, eps=eps_values, seed=seed, samples=samples,
                      output_format="json", out=out)
    loaded = load_input(uri)
    emb = _require(loaded, "embedding")
    tube_settings = TubeSettings.from_config(current_app.config)
    estimates = [tube_volume_mc(emb, eps, samples, seed, tube_settings, pool) for eps in eps_values]
    result = {"estimates": [e.to_dict() for e in estimates], "ambient_dim": emb.ambient_dim}
    n = emb.chart.dim
    references = [loaded.references.get(f"V_{i}") for i in range(n + 1)]
    if all(ref is not None for ref in references):
        volumes = [ref.value for ref in references]
        result["steiner"] = [steiner_eval(volumes, e.eps, emb.ambient_dim) for e in estimates]
    usable = [e for e in estimates if e.eps > 0.0]
    if len(usable) >= len([i for i in range(n + 1) if (n - i) % 2 == 0]):
        fit = fit_steiner_coefficients([e.eps for e in usable], [e.estimate for e in usable],
                                       [e.sigma for e in usable], emb.ambient_dim, n)
        result["fit"] = {"indices": fit.indices, "intrinsic_volumes": fit.intrinsic_volumes, "sigmas": fit.sigmas}
    _emit(render_json(run, result), out)


@click.command("validate", cls=EngineCommand)
@click.argument("uri")
@click.option("--samples", type=int, default=None)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@with_appcontext
@handle_engine_errors
def validate_command(uri, samples, seed, out):
    """Check that a submersion chart is a Riemannian submersion (JSON report)."""
    settings = _settings()
    samples = samples if samples is not None else current_app.config["SAMPLE_COUNT"]
    run = _run_config("validate", uri, WorkerPool(1), settings, seed=seed, samples=samples,
                      output_format="json", out=out)
    sc = _require(load_input(uri), "submersion")
    report = validate(sc, samples, seed)
    _emit(render_json(run, report.to_dict()), out)
    if not report.passed:
        raise ValidationError(f"{sc.name or uri} is not a Riemannian submersion (residual {report.residual:.3g})")


@click.command("check", cls=EngineCommand)
@click.argument("name", type=click.Choice(sorted(SUITES) + ["all"]))
@click.option("--workers", type=int, default=None)
@with_appcontext
@handle_engine_errors
def check(name, workers):
    """Run a named invariant suite; exits non-zero on failure."""
    settings, pool = _settings(), _pool(workers)
    names = sorted(SUITES) if name == "all" else [name]
    failed = []
    for suite in names:
        click.echo(f"🔍 {suite}")
        result = SUITES[suite](settings, pool)
        for line in result.lines:
            click.echo(f"  {line}")
        if not result.passed:
            failed.append(suite)
    if failed:
        raise ValidationError(f"failed suites: {', '.join(failed)}")
    click.echo("✅ all checks passed")


@click.command("zoo", cls=EngineCommand)
@click.option("--json", "as_json", is_flag=True, help="Print reference values as JSON.")
@with_appcontext
@handle_engine_errors
def zoo_command(as_json):
    """List the built-in manifolds, submersions and embeddings."""
    entries = {name: zoo.make(name) for name in sorted(zoo.CATALOGUE)}
    if as_json:
        click.echo(json.dumps({
            name: {"kind": entry.kind, "params": entry.params,
                   "references": {k: {"value": r.value, "provenance": r.provenance}
                                  for k, r in sorted(entry.references.items())}}
            for name, entry in entries.items()
        }, indent=2, sort_keys=True))
        return
    for name, entry in entries.items():
        click.echo(f"{name:22s} {entry.kind:11s} dim {entry.dim}")


def register_cli_commands(app):
    """Register CLI commands with the Flask app"""
    for command in (compute, sweep, sectional, tube, validate_command, check, zoo_command):
        app.cli.add_command(command)
