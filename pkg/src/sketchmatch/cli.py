"""Command-line client for the sketchmatch service.

Every command is an HTTP call.  With ``--server URL`` it goes to a running
service; otherwise an in-process instance of the same app answers it.
"""

from __future__ import annotations

import json
import os
import sys
import warnings
from pathlib import Path

import click
import httpx

from .bench import dumps
from .instances import FAMILIES


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service import create_app
    return TestClient(create_app())


def _seed(seed: int) -> int:
    env = os.environ.get("SKETCH_SEED")
    if env is None:
        return seed
    try:
        return int(env)
    except ValueError:
        raise click.BadParameter(f"SKETCH_SEED must be an integer, got {env!r}") from None


def _call(server: str | None, method: str, path: str, payload: dict | None = None) -> dict:
    with _client(server) as client:
        resp = client.request(method, path, json=payload)
    if resp.status_code >= 400:
        try:
            body = resp.json()
        except ValueError:
            body = {"detail": resp.text}
        detail = body.get("detail")
        if isinstance(detail, list):  # request validation errors
            detail = "; ".join(f"{'.'.join(map(str, d.get('loc', [])))}: {d.get('msg')}" for d in detail)
        raise click.ClickException(str(detail))
    return resp.json()


server_option = click.option("--server", envvar="SKETCH_SERVER", default=None,
                             help="Base URL of a running service (default: in-process).")


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Sketch-based maximum matching over dynamic edge streams."""


@main.command()
@click.option("--family", type=click.Choice(FAMILIES), required=True)
@click.option("--n", "n", type=int, required=True)
@click.option("--alpha", type=float, default=4.0, show_default=True, help="Dense-side ratio for hard_sparse_induced.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default="-", show_default=True)
@click.option("--mu", type=int, default=None, help="Planted matching size (planted_matching).")
@click.option("--p", "p", type=float, default=0.01, show_default=True, help="Edge probability (erdos_renyi).")
@click.option("--distractors", type=int, default=0, show_default=True)
@click.option("--deletion-fraction", type=float, default=0.0, show_default=True)
@click.option("--noise", type=float, default=0.5, show_default=True)
@click.option("--dense-degree", type=int, default=16, show_default=True)
@server_option
def gen(family, n, alpha, seed, out, mu, p, distractors, deletion_fraction, noise, dense_degree, server):
    """Write a generated instance as a stream file."""
    spec = {"family": family, "n": n, "alpha": alpha, "seed": _seed(seed), "mu": mu, "p": p,
            "distractors": distractors, "deletion_fraction": deletion_fraction, "noise": noise,
            "dense_degree": dense_degree}
    body = _call(server, "POST", "/streams/generate", spec)
    if out == "-":
        click.echo(body["text"], nl=False)
    else:
        Path(out).write_text(body["text"], encoding="utf-8")
        click.echo(f"wrote {body['updates']} updates on n={body['n']} to {out}", err=True)


@main.command()
@click.option("--stream", "stream_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--delta", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--budget-bits", type=int, default=None)
@click.option("--report", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Write the JSON report here instead of stdout.")
@click.option("--small-alpha-threshold", type=float, default=100.0, show_default=True)
@click.option("--fallback", type=click.Choice(["parity_store", "best_effort_mos", "error"]),
              default="parity_store", show_default=True)
@click.option("--regime-opt-factor", type=float, default=1.0, show_default=True)
@click.option("--match-knob", type=float, default=1.0, show_default=True)
@click.option("--tester-scale", type=float, default=1.0, show_default=True)
@click.option("--sparsify-copies", type=int, default=None)
@click.option("--timing", is_flag=True, help="Include wall time (reports are then not byte-stable).")
@server_option
def run(stream_path, alpha, delta, seed, budget_bits, report, small_alpha_threshold, fallback,
        regime_opt_factor, match_knob, tester_scale, sparsify_copies, timing, server):
    """Feed a stream through the pipeline in one pass and report the matching."""
    options = {"alpha": alpha, "delta": delta, "seed": _seed(seed), "budget_bits": budget_bits,
               "small_alpha_threshold": small_alpha_threshold, "fallback": fallback,
               "regime_opt_factor": regime_opt_factor, "match_knob": match_knob,
               "tester_scale": tester_scale, "sparsify_copies": sparsify_copies}
    text = Path(stream_path).read_text(encoding="utf-8")
    body = _call(server, "POST", "/runs", {"stream": text, "options": options, "timing": timing})
    if report:
        Path(report).write_text(dumps(body), encoding="utf-8")
    else:
        click.echo(dumps(body), nl=False)


@main.command()
@click.option("--stream", "stream_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--report", type=click.Path(exists=True, dir_okay=False), required=True)
@server_option
def verify(stream_path, report, server):
    """Check a report against the stream's net graph; exit status 0 on PASS, 1 on FAIL."""
    try:
        rep = json.loads(Path(report).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"report is not JSON: {exc}") from None
    text = Path(stream_path).read_text(encoding="utf-8")
    body = _call(server, "POST", "/verify", {"stream": text, "report": rep})
    if body["passed"]:
        click.echo(f"PASS ratio={body['ratio']}")
        return
    click.echo("FAIL")
    for problem in body["problems"]:
        click.echo(f"  {problem}")
    sys.exit(1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("sketchmatch.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
