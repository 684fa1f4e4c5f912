"""Command-line entry point.

Exit codes: 2 for configuration problems, 3 for data problems, 4 for
provider failures. Progress events stream to stderr as JSON lines;
stdout carries only the final human-readable result.
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import click

from .config import Config, apply_overrides, demo_config, load_config
from .exceptions import ConfigError, DataError, KgauditError, ProviderError
from .pipeline import require_keys, run_pipeline
from .store import RunStore


def _exit_code(exc: KgauditError) -> int:
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, DataError):
        return 3
    if isinstance(exc, ProviderError):
        return 4
    return 1


def _load(config_path: str | None, overrides: tuple[str, ...]) -> Config:
    if config_path is None:
        raise ConfigError("a config file is required; pass --config")
    config = load_config(config_path)
    if overrides:
        config = apply_overrides(config, list(overrides))
    return config


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="YAML config file.")
@click.option("-o", "--set", "overrides", multiple=True, metavar="KEY=VALUE",
              help="Override a config key (repeatable).")
@click.pass_context
def cli(ctx, config_path, overrides):
    """Audit model reasoning paths against a knowledge graph."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["overrides"] = overrides


def _config(ctx) -> Config:
    return _load(ctx.obj["config_path"], ctx.obj["overrides"])


@cli.command("ingest-kg")
@click.pass_context
def ingest_kg(ctx):
    """Validate and register the knowledge graph and corpus."""
    result = run_pipeline(_config(ctx), through="ingest")
    click.echo(f"run {result.run.run_id}: ingested {result.graph.num_entities} entities, "
               f"{result.graph.num_arcs} arcs")


@cli.command()
@click.pass_context
def analyze(ctx):
    """Ground the corpus, build reference paths, and detect errors."""
    result = run_pipeline(_config(ctx), through="detect")
    summary = result.run.load_summary()
    click.echo(f"run {result.run.run_id}: analyzed {summary.total_cases} cases")


@cli.command()
@click.pass_context
def project(ctx):
    """Compute the 2D concept map layout (runs earlier stages if needed)."""
    result = run_pipeline(_config(ctx), through="project")
    click.echo(f"run {result.run.run_id}: projected "
               f"{len(result.run.load_layout().coordinates)} entities")


def _resolve_run(store: RunStore, run_id: str | None):
    if run_id is not None:
        return store.open_run(run_id)
    runs = store.list_runs()
    if len(runs) != 1:
        raise ConfigError(
            f"store {store.root} has {len(runs)} runs; pass --run to pick one"
        )
    return store.open_run(runs[0])


@cli.command()
@click.option("--run", "run_id", default=None, help="Run id (default: the only run).")
@click.option("--csv", "csv_path", type=click.Path(), default=None,
              help="Also write per-entity error intensities as CSV.")
@click.option("--top", "top_n", default=10, show_default=True,
              help="How many error entities to list.")
@click.pass_context
def report(ctx, run_id, csv_path, top_n):
    """Print the corpus summary and the strongest error entities."""
    config = _config(ctx)
    store = RunStore(config.store_root)
    run = _resolve_run(store, run_id)
    summary = run.load_summary()

    accuracy = "n/a" if summary.accuracy is None else f"{summary.accuracy:.3f}"
    click.echo(f"run {run.run_id}")
    click.echo(
        f"cases: {summary.total_cases} ({summary.correct_cases} correct, "
        f"{summary.incorrect_cases} incorrect), accuracy {accuracy}"
    )
    totals = summary.to_record()["totals"]
    click.echo("errors: " + ", ".join(f"{kind} {count}" for kind, count in totals.items()))

    rows = sorted(
        ((eid, kind.value, count) for (eid, kind), count in summary.per_entity_intensity.items()),
        key=lambda r: (-r[2], r[0], r[1]),
    )
    if rows:
        click.echo("top error entities:")
        width = max(len(r[0]) for r in rows[:top_n])
        for eid, kind, count in rows[:top_n]:
            click.echo(f"  {eid:<{width}}  {kind:<8}  {count}")
    if csv_path:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["entity_id", "kind", "count"])
            writer.writerows(rows)
        click.echo(f"wrote {csv_path}")


@cli.command()
@click.option("--run", "run_id", default=None, help="Run id (default: the only run).")
@click.option("--host", default=None, help="Bind address (default from config).")
@click.option("--port", default=None, type=int, help="Port (default from config).")
@click.pass_context
def serve(ctx, run_id, host, port):
    """Serve the read-only analysis API over a finished run."""
    import uvicorn

    from .api import create_app

    config = _config(ctx)
    require_keys(config, ("kg.nodes", "kg.edges"))
    app = create_app(config, run_id)
    uvicorn.run(
        app,
        host=host or config.server.host,
        port=port or config.server.port,
        log_level="warning",
    )


@cli.command()
@click.option("--store", "store_root", type=click.Path(), default="demo-runs",
              show_default=True, help="Where to put the demo run directory.")
@click.option("--serve", "do_serve", is_flag=True, help="Serve the API afterwards.")
@click.option("--host", default=None, help="Bind address (with --serve).")
@click.option("--port", default=None, type=int, help="Port (with --serve).")
def demo(store_root, do_serve, host, port):
    """Run the full pipeline on the bundled seven-entity fixtures."""
    config = demo_config(Path(store_root))
    result = run_pipeline(config)
    summary = result.run.load_summary()
    totals = summary.to_record()["totals"]
    click.echo(f"run {result.run.run_id} complete in {store_root}")
    click.echo(
        "cases: "
        f"{summary.total_cases}, accuracy "
        f"{'n/a' if summary.accuracy is None else format(summary.accuracy, '.3f')}, "
        + ", ".join(f"{kind} {count}" for kind, count in totals.items())
    )
    if do_serve:
        import uvicorn

        from .api import create_app

        app = create_app(config, result.run.run_id)
        uvicorn.run(
            app,
            host=host or config.server.host,
            port=port or config.server.port,
            log_level="warning",
        )


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.Abort:
        return 130
    except KgauditError as exc:
        click.echo(f"error: {exc}", err=True)
        return _exit_code(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
