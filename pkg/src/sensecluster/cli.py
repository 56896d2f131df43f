"""Command-line client for the engine service.

Every subcommand builds a request model and posts it to the service API. By
default the app runs in-process (no network); pass ``--server URL`` to drive
a remote instance instead, in which case paths refer to that host's
filesystem.

Exit codes: 0 success, 1 domain failure (including separability violations
found by check-graph), 2 usage errors and unreadable inputs.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

DEFAULT_K = 30

_graph_options = [
    click.option("--graph-nodes", required=True, help="Nodes TSV (id/pos/language/lemmas/gloss)."),
    click.option("--graph-edges", required=True, help="Edges TSV (src/dst/relation)."),
    click.option("--inventory", required=True, help="Inventory TSV (lemma/pos/senses)."),
]

_engine_options = _graph_options + [
    click.option("--scorer-v", default="gloss", show_default=True, help="Verb-side scorer backend."),
    click.option("--scorer-nv", default="gloss", show_default=True, help="Nonverb-side scorer backend."),
    click.option("--scorer-coarse", default="gloss", show_default=True, help="Coarse retrieval backend."),
    click.option("--k", default=DEFAULT_K, show_default=True, type=int, help="Top-K retrieval size."),
    click.option("--seed", default=0, show_default=True, type=int, help="Seed for all sampling."),
    click.option("--workers", default=4, show_default=True, type=int, help="Parallel instance workers."),
    click.option("--stopwords", default=None, help="Optional stopword file for gloss overlap."),
]


def _apply(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


class ServiceClient:
    """Thin wrapper holding either an in-process or remote HTTP client."""

    def __init__(self, server: str | None):
        if server:
            self._client = httpx.Client(base_url=server.rstrip("/"), timeout=600.0)
        else:
            from .service.client import in_process_client

            self._client = in_process_client()

    def post(self, path: str, payload: dict) -> dict:
        try:
            response = self._client.post(path, json=payload)
        except httpx.HTTPError as exc:
            raise click.ClickException(f"service unreachable: {exc}")
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail")
            except ValueError:
                detail = response.text[:400]
            if isinstance(detail, dict):
                message = f"{detail.get('kind', 'error')}: {detail.get('message', '')}"
            else:
                message = str(detail)
            # 400/422 are bad inputs (usage), anything else a domain failure.
            code = 2 if response.status_code in (400, 422) else 1
            _fail(message, code)
        return response.json()

    def close(self) -> None:
        self._client.close()


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _engine_payload(ctx_params: dict) -> dict:
    return {
        "graph_nodes": ctx_params["graph_nodes"],
        "graph_edges": ctx_params["graph_edges"],
        "inventory": ctx_params["inventory"],
        "scorer_v": ctx_params.get("scorer_v", "gloss"),
        "scorer_nv": ctx_params.get("scorer_nv", "gloss"),
        "scorer_coarse": ctx_params.get("scorer_coarse", "gloss"),
        "k": ctx_params.get("k", DEFAULT_K),
        "seed": ctx_params.get("seed", 0),
        "workers": ctx_params.get("workers", 4),
        "stopwords": ctx_params.get("stopwords"),
        "report": ctx_params.get("report", "tty"),
        "explain": ctx_params.get("explain", False),
    }


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--server", default=None, help="Remote service URL; default runs in-process.")
@click.option(
    "--config",
    "config_path",
    default=None,
    help="JSON config file supplying defaults; explicit flags override it.",
)
@click.pass_context
def main(ctx: click.Context, server: str | None, config_path: str | None) -> None:
    """Sense-cluster disambiguation engine."""
    defaults: dict = {}
    if config_path:
        try:
            defaults = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except OSError as exc:
            _fail(f"cannot read config: {exc}", 2)
        except json.JSONDecodeError as exc:
            _fail(f"config is not valid JSON: {exc}", 2)
        if not isinstance(defaults, dict):
            _fail("config must be a JSON object of flag defaults", 2)
        defaults = {k.replace("-", "_"): v for k, v in defaults.items()}
    ctx.default_map = {
        cmd: defaults for cmd in main.commands
    }
    server = server or defaults.get("server")
    ctx.obj = ServiceClient(server)
    ctx.call_on_close(ctx.obj.close)


@main.command("check-graph")
@_apply(_graph_options)
@click.pass_obj
def check_graph(client: ServiceClient, graph_nodes: str, graph_edges: str, inventory: str) -> None:
    """List sense-separability violations; exit 1 if any exist."""
    result = client.post(
        "/graph/check",
        {"graph_nodes": graph_nodes, "graph_edges": graph_edges, "inventory": inventory},
    )
    count = result["violation_count"]
    click.echo(f"{count} violations")
    for v in result["violations"]:
        click.echo(
            f"  {v['lemma']}/{v['pos']}: {v['sense_i']} ~ {v['sense_j']} "
            f"(witness {v['witness']})"
        )
    if count:
        sys.exit(1)


@main.command("separate-graph")
@_apply(_graph_options)
@click.option("--out-edges", default=None, help="Write the separated edge set to this TSV.")
@click.pass_obj
def separate_graph(
    client: ServiceClient,
    graph_nodes: str,
    graph_edges: str,
    inventory: str,
    out_edges: str | None,
) -> None:
    """Enforce sense-separability and print the removal report."""
    result = client.post(
        "/graph/separate",
        {
            "graph_nodes": graph_nodes,
            "graph_edges": graph_edges,
            "inventory": inventory,
            "out_edges_path": out_edges,
        },
    )
    report = result["report"]
    click.echo(
        f"removed {report['edges_removed_direct']} direct + "
        f"{report['edges_removed_shared']} shared edges "
        f"({result['edges_before']} -> {result['edges_after']})"
    )
    click.echo(f"affected entries: {len(report['affected_entries'])}")
    if out_edges:
        click.echo(f"wrote {out_edges}")


@main.command("stats")
@_apply(_graph_options)
@click.pass_obj
def stats(client: ServiceClient, graph_nodes: str, graph_edges: str, inventory: str) -> None:
    """Graph and inventory summary."""
    result = client.post(
        "/graph/stats",
        {"graph_nodes": graph_nodes, "graph_edges": graph_edges, "inventory": inventory},
    )
    for key, value in result.items():
        click.echo(f"{key}: {value}")


@main.command("disambiguate")
@_apply(_engine_options)
@click.option("--corpus", required=True, help="Corpus file (.xml or .jsonl).")
@click.option("--gold", default=None, help="Gold keys (required by oracle scorers).")
@click.option("--out", "out_path", default=None, help="Write JSONL here instead of stdout.")
@click.option("--explain", is_flag=True, help="Include the full class breakdown per choice.")
@click.pass_context
def disambiguate(ctx: click.Context, **params) -> None:
    """Emit one sense choice per corpus instance as JSON lines."""
    result = ctx.obj.post(
        "/disambiguate",
        {
            "engine": _engine_payload(params),
            "corpus_path": params["corpus"],
            "gold_path": params["gold"],
            "out_path": params["out_path"],
        },
    )
    if not params["out_path"]:
        for record in result["choices"]:
            click.echo(json.dumps(record, ensure_ascii=False))
    click.echo(
        f"attempted {result['attempted']}/{result['total']}"
        + (f", wrote {result['out_path']}" if result["out_path"] else ""),
        err=True,
    )


@main.command("evaluate")
@_apply(_engine_options)
@click.option("--corpus", required=True, help="Corpus file (.xml or .jsonl).")
@click.option("--gold", required=True, help="Gold key file.")
@click.option("--mapping", default=None, help="Prediction-key mapping TSV.")
@click.option("--mfs-counts", default=None, help="Sense-count TSV; evaluate the MFS baseline instead.")
@click.option(
    "--report",
    default="tty",
    show_default=True,
    type=click.Choice(["tty", "csv", "json"]),
    help="Report format.",
)
@click.pass_context
def evaluate(ctx: click.Context, **params) -> None:
    """Score predictions against gold keys and print the sliced report."""
    result = ctx.obj.post(
        "/evaluate",
        {
            "engine": _engine_payload(params),
            "corpus_path": params["corpus"],
            "gold_path": params["gold"],
            "mapping_path": params["mapping"],
            "mfs_counts_path": params["mfs_counts"],
        },
    )
    click.echo(result["rendered"])
    if result.get("recall_at_k") is not None:
        click.echo(f"retrieval recall@k: {result['recall_at_k']:.4f}", err=True)
    buckets = result["polysemy"]
    populated = {b: s for b, s in buckets.items() if s["total"]}
    if populated:
        click.echo("polysemy error rates:", err=True)
        for bucket, row in populated.items():
            click.echo(
                f"  {bucket:>6}: {row['errors']}/{row['total']} = {row['error_rate']:.4f}",
                err=True,
            )
    for warning in result["warnings"]:
        click.echo(f"warning: {warning}", err=True)


@main.command("gen-train")
@_apply(_graph_options)
@click.option("--corpus", required=True, help="Training corpus (.xml or .jsonl).")
@click.option("--gold", required=True, help="Gold key file.")
@click.option("--out-prefix", required=True, help="Output prefix for the three JSONL files.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--max-negatives", default=3, show_default=True, type=int, help="Negatives per positive cap.")
@click.option("--max-members", default=16, show_default=True, type=int, help="Members per class cap.")
@click.pass_context
def gen_train(ctx: click.Context, **params) -> None:
    """Generate scorer training pairs and the trainer manifest."""
    result = ctx.obj.post(
        "/gen-train",
        {
            "engine": _engine_payload(params),
            "corpus_path": params["corpus"],
            "gold_path": params["gold"],
            "out_prefix": params["out_prefix"],
            "max_negatives_per_positive": params["max_negatives"],
            "max_members_per_class": params["max_members"],
        },
    )
    for split, path in result["files"].items():
        click.echo(f"{split}: {result['pair_counts'][split]} pairs -> {path}")
    click.echo(f"manifest: {result['manifest']}")
    if result["skipped"]:
        click.echo(f"skipped {len(result['skipped'])} instances:", err=True)
        for iid, reason in result["skipped"]:
            click.echo(f"  {iid}: {reason}", err=True)


if __name__ == "__main__":
    main()
