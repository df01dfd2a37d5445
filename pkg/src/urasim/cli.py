"""Command-line client for the simulation service.

Every subcommand speaks HTTP to the service API.  By default the app is
mounted in-process (no server needed); pass ``--server URL`` to target a
running instance instead.  File output always happens client-side.
"""

from __future__ import annotations

import json
import os
import sys

import click
import httpx

from . import __version__
from .config import ConfigError, load_config_file
from .harness import (
    SweepRow,
    VARIANT_LDPC,
    VARIANT_LDPC_SIC,
    load_plan_file,
    plan_to_dict,
    rows_to_csv,
)

_VARIANT_CHOICES = {"ldpc": VARIANT_LDPC, "ldpc-sic": VARIANT_LDPC_SIC}


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server.rstrip("/"), timeout=None)
    from .service.app import app

    transport = httpx.ASGITransport(app=app)
    return httpx.Client(transport=transport, base_url="http://urasim", timeout=None)


def _post(client: httpx.Client, path: str, payload: dict) -> httpx.Response:
    try:
        response = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        raise click.ClickException(f"cannot reach service: {exc}") from exc
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise click.ClickException(f"service rejected request: {detail}")
    return response


def _load_config(path: str, seed: int | None) -> dict:
    try:
        raw = load_config_file(path)
    except (ConfigError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    if seed is not None:
        raw["master_seed"] = seed
    return raw


def _write(path: str, data: bytes | str) -> None:
    mode = "wb" if isinstance(data, bytes) else "w"
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, mode) as fh:
            fh.write(data)
    except OSError as exc:
        raise click.ClickException(f"cannot write {path}: {exc}") from exc


@click.group()
@click.version_option(__version__)
@click.option("--server", default=None, metavar="URL",
              help="Service URL; default runs the service in-process.")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Simulator for SPARC-LDPC coded MIMO unsourced random access."""
    ctx.obj = server


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None, help="Override master_seed.")
@click.option("--variant", type=click.Choice(sorted(_VARIANT_CHOICES)),
              default="ldpc-sic", show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Directory for debug CSVs and the result JSON.")
@click.option("--debug-csv", is_flag=True, help="Write per-iteration decoder traces.")
@click.pass_obj
def run(server: str | None, config_path: str, seed: int | None, variant: str,
        out_dir: str | None, debug_csv: bool) -> None:
    """Run a single trial and print its result as JSON."""
    payload = {
        "config": _load_config(config_path, seed),
        "variant": _VARIANT_CHOICES[variant],
        "debug": debug_csv,
    }
    with _client(server) as client:
        body = _post(client, "/trials/run", payload).json()

    amp_trace = body.pop("amp_trace", None)
    bp_trace = body.pop("bp_trace", None)
    click.echo(json.dumps(body, indent=2, sort_keys=True))
    if out_dir:
        _write(os.path.join(out_dir, "trial.json"),
               json.dumps(body, indent=2, sort_keys=True) + "\n")
    if debug_csv:
        if not out_dir:
            raise click.ClickException("--debug-csv needs --out DIR")
        _write(os.path.join(out_dir, "amp_debug.csv"), _trace_csv(amp_trace))
        _write(os.path.join(out_dir, "bp_debug.csv"), _trace_csv(bp_trace))


def _trace_csv(trace: list[dict] | None) -> str:
    if not trace:
        return ""
    header = list(trace[0].keys())
    lines = [",".join(header)]
    lines += [",".join(repr(row[h]) if isinstance(row[h], float) else str(row[h])
                       for h in header) for row in trace]
    return "\n".join(lines) + "\n"


@main.command()
@click.option("--config", "plan_path", required=True, type=click.Path(exists=True),
              help="Sweep plan file: [config] table plus [sweep] table.")
@click.option("--seed", type=int, default=None, help="Override master_seed.")
@click.option("--trials", type=int, default=None, help="Override trials per point.")
@click.option("--variant", type=click.Choice(sorted(_VARIANT_CHOICES)), default=None)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default="results",
              show_default=True)
@click.pass_obj
def sweep(server: str | None, plan_path: str, seed: int | None, trials: int | None,
          variant: str | None, workers: int, out_dir: str) -> None:
    """Run a Monte Carlo sweep and write results.csv plus a JSON sidecar."""
    try:
        plan = load_plan_file(plan_path)
    except (ConfigError, OSError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    base = plan_to_dict(plan)["base"]
    if seed is not None:
        base["master_seed"] = seed
    payload = {
        "config": base,
        "axis": plan.axis,
        "grid": list(plan.grid),
        "trials_per_point": trials if trials is not None else plan.trials_per_point,
        "variant": _VARIANT_CHOICES[variant] if variant else plan.decoder_variant,
        "workers": workers,
    }
    with _client(server) as client:
        body = _post(client, "/sweeps/run", payload).json()

    rows = [SweepRow(**r) for r in body["rows"]]
    _write(os.path.join(out_dir, "results.csv"), rows_to_csv(rows))
    sidecar = {"version": body["version"], "plan": body["plan"],
               "rows": body["rows"]}
    _write(os.path.join(out_dir, "results.json"),
           json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    click.echo(rows_to_csv(rows), nl=False)
    click.echo(f"wrote {os.path.join(out_dir, 'results.csv')}", err=True)


@main.command("ldpc-export")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None, help="Override master_seed.")
@click.option("--out", "out_dir", type=click.Path(), default=".", show_default=True)
@click.pass_obj
def ldpc_export(server: str | None, config_path: str, seed: int | None,
                out_dir: str) -> None:
    """Dump the parity-check matrix in alist format."""
    payload = {"config": _load_config(config_path, seed)}
    with _client(server) as client:
        text = _post(client, "/ldpc/export", payload).text
    path = os.path.join(out_dir, "code.alist")
    _write(path, text)
    click.echo(f"wrote {path}", err=True)


@main.command("codebook-export")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None, help="Override master_seed.")
@click.option("--out", "out_dir", type=click.Path(), default=".", show_default=True)
@click.pass_obj
def codebook_export(server: str | None, config_path: str, seed: int | None,
                    out_dir: str) -> None:
    """Dump the complex dictionary in the binary codebook format."""
    payload = {"config": _load_config(config_path, seed)}
    with _client(server) as client:
        blob = _post(client, "/codebook/export", payload).content
    path = os.path.join(out_dir, "codebook.bin")
    _write(path, blob)
    click.echo(f"wrote {path}", err=True)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Start the simulation service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
