#!/usr/bin/env python3
"""Regenerate the bundled synthetic corpus under data/toy/.

100 instances over 20 ambiguous lemmas. Each sense gets its own small
neighborhood; a few co-candidate and shared-witness edges are added on
purpose so the separability transform has work to do. Deterministic:
rerunning produces byte-identical files.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "toy"

POS_CYCLE = ["NOUN", "VERB", "ADJ", "ADV"]

TEMPLATES = [
    "The {lemma} was mentioned in the morning report .",
    "Nobody expected the {lemma} to matter this much .",
    "A {lemma} like this appears once in a decade .",
    "They argued about the {lemma} for hours .",
    "Every record of the {lemma} was archived .",
]


def main() -> None:
    rng = random.Random(2024)
    OUT.mkdir(parents=True, exist_ok=True)

    nodes: list[tuple[str, str, str, str]] = []  # id, pos, lemmas, gloss
    edges: list[tuple[str, str, str]] = []
    inventory: list[tuple[str, str, list[str]]] = []

    vocab_payload = [
        "ledger", "harbor", "signal", "matrix", "copper", "anchor", "furnace",
        "meadow", "quartz", "lantern", "saddle", "bobbin", "gully", "parapet",
        "tendril", "mortar", "sextant", "bramble", "culvert", "gable",
    ]
    for wi, lemma in enumerate(vocab_payload):
        pos = POS_CYCLE[wi % len(POS_CYCLE)]
        sense_count = 2 + (wi % 3)  # 2..4 senses
        senses = []
        for si in range(sense_count):
            sid = f"toy:{lemma}.{si}"
            senses.append(sid)
            nodes.append(
                (sid, pos, lemma, f"sense {si} of {lemma} , its definition text")
            )
            neighbor_count = 2 + (si + wi) % 3  # 2..4 neighbors
            for ni in range(neighbor_count):
                nid = f"toy:{lemma}.{si}.n{ni}"
                nodes.append(
                    (
                        nid,
                        POS_CYCLE[(wi + ni) % len(POS_CYCLE)],
                        f"{lemma}_rel{si}{ni}",
                        f"neighbor {ni} of sense {si} of {lemma}",
                    )
                )
                edges.append((sid, nid, "related"))
        inventory.append((lemma, pos, senses))
        # Deliberate violations for the first half of the vocabulary: a
        # direct co-candidate edge and a shared witness node.
        if wi % 2 == 0:
            edges.append((senses[0], senses[1], "related"))
            wid = f"toy:{lemma}.shared"
            nodes.append((wid, pos, f"{lemma}_shared", f"shared neighbor of {lemma} senses"))
            edges.append((senses[0], wid, "related"))
            edges.append((senses[1], wid, "related"))

    instances = []
    gold_lines = []
    for i in range(100):
        lemma, pos, senses = inventory[i % len(inventory)]
        gold_sense = senses[i % len(senses)]
        template = TEMPLATES[i % len(TEMPLATES)]
        sentence = template.format(lemma=lemma)
        start = sentence.index(lemma)
        iid = f"toy.d000.s{i:03d}.t000"
        instances.append(
            {
                "id": iid,
                "sentence": sentence,
                "target_start": start,
                "target_end": start + len(lemma),
                "lemma": lemma,
                "pos": pos,
                "dataset": "toy",
            }
        )
        gold_lines.append(f"{iid} {gold_sense}")

    rng.shuffle(instances)  # corpus order should not matter anywhere

    nodes_path = OUT / "nodes.tsv"
    with nodes_path.open("w", encoding="utf-8") as fh:
        fh.write("id\tpos\tlanguage\tlemmas\tgloss\n")
        for sid, pos, lemmas, gloss in nodes:
            fh.write(f"{sid}\t{pos}\ten\t{lemmas}\t{gloss}\n")
    with (OUT / "edges.tsv").open("w", encoding="utf-8") as fh:
        fh.write("src\tdst\trelation\n")
        for a, b, rel in edges:
            fh.write(f"{a}\t{b}\t{rel}\n")
    with (OUT / "inventory.tsv").open("w", encoding="utf-8") as fh:
        fh.write("lemma\tpos\tsenses\n")
        for lemma, pos, senses in inventory:
            fh.write(f"{lemma}\t{pos}\t{','.join(senses)}\n")
    with (OUT / "corpus.jsonl").open("w", encoding="utf-8") as fh:
        for record in instances:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    with (OUT / "gold.txt").open("w", encoding="utf-8") as fh:
        fh.write("\n".join(sorted(gold_lines)) + "\n")

    # Paths relative to the repository root, where the CLI is expected to run.
    config = {
        "graph_nodes": "data/toy/nodes.tsv",
        "graph_edges": "data/toy/edges.tsv",
        "inventory": "data/toy/inventory.tsv",
        "scorer_v": "oracle",
        "scorer_nv": "oracle",
        "k": 30,
    }
    (OUT / "oracle_config.json").write_text(
        json.dumps(config, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(nodes)} nodes, {len(edges)} edges, "
          f"{len(inventory)} entries, {len(instances)} instances -> {OUT}")


if __name__ == "__main__":
    main()
