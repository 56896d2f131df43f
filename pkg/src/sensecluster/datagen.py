"""Training-pair generation for the external relevance scorers.

For each gold-keyed instance, every member of the gold candidate's cluster
becomes a positive pair and members of the other candidates' clusters become
capped, seed-sampled negatives. Pairs are routed by the instance's POS:
nouns and verbs feed the verb-side file, nouns/adjectives/adverbs the
nonverb-side file (nouns go to both). The coarse file holds the bare
candidates with no cluster expansion. A hyperparameter manifest for the
downstream trainer is emitted alongside.
"""

from __future__ import annotations

import json
import random
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

from .engine import Instance
from .errors import OffsetError
from .graph import PosTag, SemanticGraph, SenseId, SenseInventory

TARGET_MARKER = "[d]"

VERB_SIDE_POS = {PosTag.NOUN, PosTag.VERB}
NONVERB_SIDE_POS = {PosTag.NOUN, PosTag.ADJ, PosTag.ADV}

# Trainer defaults emitted into train_config.json.
TRAIN_MANIFEST = {
    "optimizer": "adamw",
    "learning_rate": 1e-5,
    "batch_size": 64,
    "epochs": 10,
    "scheduler": "cosine_annealing",
    "weight_decay": 0.01,
    "max_grad_norm": 1.0,
    "gradient_accumulation_steps": 5,
    "max_tokens": 512,
    "loss": "bce_with_logits",
    "evaluation_steps": 1000,
}


@dataclass(frozen=True)
class TrainingPair:
    context_marked: str
    gloss: str
    label: int
    source_instance: str
    member_of: SenseId
    split: str  # VERB_SIDE | NONVERB_SIDE | COARSE

    def to_json(self) -> str:
        return json.dumps(
            {
                "context_marked": self.context_marked,
                "gloss": self.gloss,
                "label": self.label,
                "source_instance": self.source_instance,
                "member_of": self.member_of,
                "split": self.split,
            },
            ensure_ascii=False,
        )


@dataclass(frozen=True)
class SamplingConfig:
    seed: int = 0
    max_negatives_per_positive: int = 3
    max_members_per_class: int = 16

    def __post_init__(self) -> None:
        if self.max_negatives_per_positive < 1:
            raise ValueError("max_negatives_per_positive must be positive")
        if self.max_members_per_class < 1:
            raise ValueError("max_members_per_class must be positive")


@dataclass
class SkipReport:
    skipped: list[tuple[str, str]]

    @property
    def count(self) -> int:
        return len(self.skipped)


def mark_target(sentence: str, start: int, end: int) -> str:
    """Wrap the [start, end) span in target markers:
    ``prefix + "[d] " + target + " [d]" + suffix``."""
    if not (0 <= start < end <= len(sentence)):
        raise OffsetError(
            f"offsets [{start}, {end}) do not fit a sentence of length {len(sentence)}"
        )
    return (
        sentence[:start]
        + TARGET_MARKER
        + " "
        + sentence[start:end]
        + " "
        + TARGET_MARKER
        + sentence[end:]
    )


def _instance_rng(seed: int, instance_id: str) -> random.Random:
    # String seeding is hash-salt independent, so runs are reproducible
    # and instances stay independent of corpus slicing.
    return random.Random(f"{seed}:{instance_id}")


def _cap_members(
    members: Sequence[SenseId], representative: SenseId, cap: int, rng: random.Random
) -> list[SenseId]:
    ordered = sorted(members)
    if len(ordered) <= cap:
        return ordered
    rest = [m for m in ordered if m != representative]
    picked = rng.sample(rest, cap - 1)
    return sorted(picked + [representative])


def generate_examples(
    instances: Sequence[Instance],
    gold: dict[str, set[SenseId]],
    graph: SemanticGraph,
    inventory: SenseInventory,
    config: SamplingConfig,
    skip_report: SkipReport | None = None,
) -> Iterator[TrainingPair]:
    """Yield training pairs instance by instance, deterministically.

    Instances whose gold key is missing or not an inventory candidate are
    recorded in ``skip_report`` and produce nothing.
    """
    if not graph.separated:
        raise ValueError("training generation requires a sense-separated graph")
    for instance in instances:
        yield from _pairs_for_instance(
            instance, gold, graph, inventory, config, skip_report
        )


def _pairs_for_instance(
    instance: Instance,
    gold: dict[str, set[SenseId]],
    graph: SemanticGraph,
    inventory: SenseInventory,
    config: SamplingConfig,
    skip_report: SkipReport | None,
) -> Iterator[TrainingPair]:
    def skip(reason: str) -> None:
        if skip_report is not None:
            skip_report.skipped.append((instance.id, reason))

    gold_senses = gold.get(instance.id)
    if not gold_senses:
        skip("no gold key")
        return
    if (instance.lemma, instance.pos) not in inventory:
        skip("no inventory entry")
        return
    entry = inventory.candidates(instance.lemma, instance.pos)
    gold_candidates = [c for c in entry if c in gold_senses]
    if not gold_candidates:
        skip("gold sense is not an inventory candidate")
        return
    gold_candidate = gold_candidates[0]

    marked = mark_target(instance.sentence, instance.target_start, instance.target_end)
    rng = _instance_rng(config.seed, instance.id)

    splits = []
    if instance.pos in VERB_SIDE_POS:
        splits.append("VERB_SIDE")
    if instance.pos in NONVERB_SIDE_POS:
        splits.append("NONVERB_SIDE")

    positives = _cap_members(
        graph.closed_neighborhood(gold_candidate),
        gold_candidate,
        config.max_members_per_class,
        rng,
    )

    negative_pool: list[tuple[SenseId, SenseId]] = []
    for candidate in entry:
        if candidate == gold_candidate:
            continue
        members = _cap_members(
            graph.closed_neighborhood(candidate),
            candidate,
            config.max_members_per_class,
            rng,
        )
        negative_pool.extend((candidate, member) for member in members)
    cap = config.max_negatives_per_positive * len(positives)
    if len(negative_pool) > cap:
        keep = sorted(rng.sample(range(len(negative_pool)), cap))
        negative_pool = [negative_pool[i] for i in keep]

    for split in splits:
        for member in positives:
            yield TrainingPair(
                context_marked=marked,
                gloss=graph.gloss(member),
                label=1,
                source_instance=instance.id,
                member_of=gold_candidate,
                split=split,
            )
        for candidate, member in negative_pool:
            yield TrainingPair(
                context_marked=marked,
                gloss=graph.gloss(member),
                label=0,
                source_instance=instance.id,
                member_of=candidate,
                split=split,
            )

    # Coarse retrieval pairs: the candidate senses themselves, no expansion.
    for candidate in entry:
        yield TrainingPair(
            context_marked=marked,
            gloss=graph.gloss(candidate),
            label=1 if candidate == gold_candidate else 0,
            source_instance=instance.id,
            member_of=candidate,
            split="COARSE",
        )


def write_training_files(
    instances: Sequence[Instance],
    gold: dict[str, set[SenseId]],
    graph: SemanticGraph,
    inventory: SenseInventory,
    config: SamplingConfig,
    out_prefix: str | Path,
) -> dict:
    """Write the three split files plus the trainer manifest.

    Returns a summary with per-split pair counts, file paths and the skip
    report. Identical inputs produce byte-identical files.
    """
    out_prefix = Path(out_prefix)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    paths = {
        "VERB_SIDE": out_prefix.with_name(out_prefix.name + ".verbside.jsonl"),
        "NONVERB_SIDE": out_prefix.with_name(out_prefix.name + ".nonverbside.jsonl"),
        "COARSE": out_prefix.with_name(out_prefix.name + ".coarse.jsonl"),
    }
    skip_report = SkipReport(skipped=[])
    counts = {split: 0 for split in paths}
    labels = {split: [0, 0] for split in paths}
    handles = {split: path.open("w", encoding="utf-8") for split, path in paths.items()}
    try:
        for pair in generate_examples(
            instances, gold, graph, inventory, config, skip_report
        ):
            handles[pair.split].write(pair.to_json() + "\n")
            counts[pair.split] += 1
            labels[pair.split][pair.label] += 1
    finally:
        for handle in handles.values():
            handle.close()

    manifest_path = out_prefix.with_name("train_config.json")
    manifest = dict(TRAIN_MANIFEST)
    manifest["seed"] = config.seed
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return {
        "files": {split: str(path) for split, path in paths.items()},
        "manifest": str(manifest_path),
        "pair_counts": counts,
        "label_counts": {
            split: {"negatives": neg, "positives": pos}
            for split, (neg, pos) in labels.items()
        },
        "skipped": skip_report.skipped,
    }
