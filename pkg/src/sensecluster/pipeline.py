"""File-level workflows behind the service endpoints.

Each function takes validated paths/config, drives the core modules, and
returns plain JSON-ready data. Loaded graphs are cached by (path, mtime,
size) so a long-running service does not re-parse per request.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from . import datagen, evaluation, scoring
from .config import EngineConfig
from .engine import Engine, Instance, SenseChoice, Unattempted
from .errors import ConfigError, NoCandidates
from .evaluation import JudgedInstance
from .graph import (
    PosTag,
    SemanticGraph,
    SenseInventory,
    check_sense_separability,
    enforce_sense_separability,
    load_graph,
    load_inventory,
    write_edges,
)
from .scoring import SlotRole

_cache_lock = threading.Lock()
_graph_cache: dict[tuple, tuple[SemanticGraph, SenseInventory]] = {}
_separated_cache: dict[tuple, tuple[SemanticGraph, SenseInventory]] = {}
_CACHE_LIMIT = 4


def _stamp(path: str) -> tuple:
    try:
        stat = Path(path).stat()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return (str(Path(path).resolve()), stat.st_mtime_ns, stat.st_size)


def _cache_put(cache: dict, key: tuple, value) -> None:
    with _cache_lock:
        if len(cache) >= _CACHE_LIMIT:
            cache.pop(next(iter(cache)))
        cache[key] = value


def load_resources(
    nodes_path: str, edges_path: str, inventory_path: str
) -> tuple[SemanticGraph, SenseInventory]:
    key = (_stamp(nodes_path), _stamp(edges_path), _stamp(inventory_path))
    with _cache_lock:
        if key in _graph_cache:
            return _graph_cache[key]
    graph = load_graph(nodes_path, edges_path)
    inventory = load_inventory(inventory_path)
    _cache_put(_graph_cache, key, (graph, inventory))
    return graph, inventory


def load_separated(
    nodes_path: str, edges_path: str, inventory_path: str
) -> tuple[SemanticGraph, SenseInventory]:
    """Loaded resources with the separability transform applied (idempotent),
    cached so a long-running service pays the transform once per graph."""
    key = (_stamp(nodes_path), _stamp(edges_path), _stamp(inventory_path))
    with _cache_lock:
        if key in _separated_cache:
            return _separated_cache[key]
    graph, inventory = load_resources(nodes_path, edges_path, inventory_path)
    separated, _ = enforce_sense_separability(graph, inventory)
    _cache_put(_separated_cache, key, (separated, inventory))
    return separated, inventory


def _report_dict(report) -> dict:
    return {
        "edges_removed_direct": report.edges_removed_direct,
        "edges_removed_shared": report.edges_removed_shared,
        "affected_entries": [
            {"lemma": lemma, "pos": pos.value} for lemma, pos in report.affected_entries
        ],
    }


def check_graph(nodes_path: str, edges_path: str, inventory_path: str) -> dict:
    graph, inventory = load_resources(nodes_path, edges_path, inventory_path)
    violations = check_sense_separability(graph, inventory)
    return {
        "violations": [
            {
                "lemma": v.lemma,
                "pos": v.pos.value,
                "sense_i": v.sense_i,
                "sense_j": v.sense_j,
                "witness": v.witness,
            }
            for v in violations
        ],
        "violation_count": len(violations),
    }


def separate_graph(
    nodes_path: str,
    edges_path: str,
    inventory_path: str,
    out_edges_path: str | None = None,
) -> dict:
    graph, inventory = load_resources(nodes_path, edges_path, inventory_path)
    separated, report = enforce_sense_separability(graph, inventory)
    if out_edges_path:
        write_edges(separated, out_edges_path)
    return {
        "report": _report_dict(report),
        "edges_before": graph.edge_count,
        "edges_after": separated.edge_count,
        "out_edges_path": out_edges_path,
    }


def graph_stats(nodes_path: str, edges_path: str, inventory_path: str) -> dict:
    graph, inventory = load_resources(nodes_path, edges_path, inventory_path)
    pos_counts: dict[str, int] = {}
    for node in graph.nodes.values():
        pos_counts[node.pos.value] = pos_counts.get(node.pos.value, 0) + 1
    entry_sizes = [len(senses) for _, senses in inventory]
    violations = check_sense_separability(graph, inventory)
    return {
        "nodes": len(graph),
        "edges": graph.edge_count,
        "nodes_by_pos": dict(sorted(pos_counts.items())),
        "inventory_entries": len(inventory),
        "ambiguous_entries": sum(1 for n in entry_sizes if n > 1),
        "max_candidates": max(entry_sizes, default=0),
        "mean_candidates": (
            sum(entry_sizes) / len(entry_sizes) if entry_sizes else 0.0
        ),
        "separability_violations": len(violations),
    }


def build_engine(config: EngineConfig, gold: dict[str, set[str]] | None = None) -> Engine:
    """Load resources and assemble an engine. The graph is always passed
    through the separability transform; it is idempotent, so already-clean
    graphs are untouched."""
    config.validate_paths()
    separated, inventory = load_separated(
        config.graph_nodes, config.graph_edges, config.inventory
    )
    stopwords = (
        scoring.load_stopwords(config.stopwords) if config.stopwords else None
    )

    def slot(spec: str) -> scoring.Scorer:
        return scoring.parse_backend(
            spec,
            graph=separated,
            gold=gold,
            stopwords=stopwords,
            in_flight_limit=config.in_flight,
        )

    slots = {
        SlotRole.VERB_SIDE: slot(config.scorer_v),
        SlotRole.NONVERB_SIDE: slot(config.scorer_nv),
        SlotRole.COARSE: slot(config.scorer_coarse),
    }
    return Engine(
        graph=separated,
        inventory=inventory,
        slots=slots,
        k=config.k,
        workers=config.workers,
    )


def choice_record(result: SenseChoice | Unattempted, explain: bool = False) -> dict:
    if isinstance(result, Unattempted):
        return {
            "instance_id": result.instance_id,
            "chosen": None,
            "winning_score": None,
            "tie_broken": False,
            "error": result.reason,
        }
    record = {
        "instance_id": result.instance_id,
        "chosen": result.chosen,
        "winning_score": result.winning_score,
        "tie_broken": result.tie_broken,
    }
    if explain:
        record["classes"] = [
            {
                "representative": cs.cls.representative,
                "score": cs.score,
                "members": [
                    {
                        "sense": m.sense,
                        "e_v": m.e_v,
                        "e_vbar": m.e_vbar,
                        "s": m.s,
                        "delta": d,
                    }
                    for m, d in zip(cs.member_scores, cs.deltas)
                ],
            }
            for cs in result.all_class_scores
        ]
    return record


def _load_instances(
    corpus_path: str | None, inline: list[dict] | None
) -> list[Instance]:
    if corpus_path:
        return evaluation.parse_corpus(corpus_path)
    if inline:
        return [
            Instance(
                id=r["id"],
                sentence=r["sentence"],
                target_start=r["target_start"],
                target_end=r["target_end"],
                lemma=r["lemma"],
                pos=PosTag.parse(r["pos"]),
                dataset=r.get("dataset") or evaluation.dataset_label(r["id"]),
            )
            for r in inline
        ]
    raise ConfigError("provide either a corpus path or inline instances")


def run_disambiguate(
    config: EngineConfig,
    corpus_path: str | None = None,
    instances: list[dict] | None = None,
    gold_path: str | None = None,
    out_path: str | None = None,
) -> dict:
    gold = None
    if gold_path:
        gold = {
            g.instance_id: set(g.gold_senses) for g in evaluation.load_gold(gold_path)
        }
    engine = build_engine(config, gold=gold)
    try:
        parsed = _load_instances(corpus_path, instances)
        results = engine.disambiguate_batch(parsed)
    finally:
        engine.close()
    records = [choice_record(r, explain=config.explain) for r in results]
    lines = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)
    if out_path:
        Path(out_path).write_text(lines, encoding="utf-8")
    return {
        "choices": records,
        "attempted": sum(1 for r in records if r["chosen"] is not None),
        "total": len(records),
        "clamp_warnings": scoring.reset_clamp_warnings(),
        "out_path": out_path,
    }


def run_evaluate(
    config: EngineConfig,
    corpus_path: str,
    gold_path: str,
    mapping_path: str | None = None,
    mfs_counts_path: str | None = None,
) -> dict:
    """Predict over a gold-keyed corpus and report sliced P/R/F1.

    With ``mfs_counts_path`` the engine is replaced by the most-frequent-sense
    predictor built from the given counts.
    """
    instances = evaluation.parse_corpus(corpus_path)
    gold_keys = evaluation.load_gold(gold_path)
    gold_by_id = {g.instance_id: g for g in gold_keys}
    mapping = evaluation.MappingTable.load(mapping_path) if mapping_path else None

    warnings: list[str] = []
    with_gold = [i for i in instances if i.id in gold_by_id]
    for instance in instances:
        if instance.id not in gold_by_id:
            warnings.append(f"instance {instance.id} has no gold key; ignored")

    predictions: dict[str, str | None] = {}
    retrievals: dict[str, list[str]] = {}
    if mfs_counts_path:
        config.validate_paths()
        _, inventory = load_resources(
            config.graph_nodes, config.graph_edges, config.inventory
        )
        predictor = evaluation.mfs_baseline(
            evaluation.load_sense_counts(mfs_counts_path), inventory
        )
        for instance in with_gold:
            try:
                predictions[instance.id] = predictor(instance.lemma, instance.pos)
            except NoCandidates:
                predictions[instance.id] = None
    else:
        gold_sets = {g.instance_id: set(g.gold_senses) for g in gold_keys}
        engine = build_engine(config, gold=gold_sets)
        try:
            inventory = engine.inventory
            results = engine.disambiguate_batch(with_gold)
        finally:
            engine.close()
        for instance, result in zip(with_gold, results):
            if isinstance(result, Unattempted):
                predictions[instance.id] = None
                warnings.append(f"instance {instance.id} unattempted: {result.reason}")
            else:
                predictions[instance.id] = result.chosen
                retrievals[instance.id] = list(result.retrieved)

    judged = []
    for instance in with_gold:
        entry_size = 0
        if (instance.lemma, instance.pos) in inventory:
            entry_size = len(inventory.candidates(instance.lemma, instance.pos))
        judged.append(
            JudgedInstance(
                instance_id=instance.id,
                dataset=instance.dataset,
                pos=instance.pos,
                candidate_count=entry_size,
                judgment=evaluation.judge(
                    predictions[instance.id],
                    gold_by_id[instance.id],
                    mapping,
                    warnings,
                ),
            )
        )
    report = evaluation.f1_report(judged)
    out = {
        "report": json.loads(evaluation.render_report(report, "json")),
        "rendered": evaluation.render_report(report, config.report),
        "polysemy": evaluation.polysemy_breakdown(judged),
        "warnings": warnings,
        "clamp_warnings": scoring.reset_clamp_warnings(),
    }
    if retrievals:
        out["recall_at_k"] = evaluation.recall_at_k(retrievals, gold_keys)
    return out


def run_gen_train(
    config: EngineConfig,
    corpus_path: str,
    gold_path: str,
    out_prefix: str,
    max_negatives_per_positive: int = 3,
    max_members_per_class: int = 16,
) -> dict:
    config.validate_paths()
    separated, inventory = load_separated(
        config.graph_nodes, config.graph_edges, config.inventory
    )
    instances = evaluation.parse_corpus(corpus_path)
    gold = {
        g.instance_id: set(g.gold_senses) for g in evaluation.load_gold(gold_path)
    }
    sampling = datagen.SamplingConfig(
        seed=config.seed,
        max_negatives_per_positive=max_negatives_per_positive,
        max_members_per_class=max_members_per_class,
    )
    return datagen.write_training_files(
        instances, gold, separated, inventory, sampling, out_prefix
    )
