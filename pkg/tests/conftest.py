import sys
from pathlib import Path

import pytest

from sensecluster.graph import PosTag, SemanticGraph, SenseInventory, SenseNode

REPO_ROOT = Path(__file__).resolve().parent.parent
TOY_DIR = REPO_ROOT / "data" / "toy"
ECHO_SCORER = Path(__file__).resolve().parent / "helpers" / "echo_scorer.py"


def echo_command(*args: str) -> str:
    return " ".join([sys.executable, str(ECHO_SCORER), *args])


def make_node(sense_id: str, pos: str = "NOUN", gloss: str | None = None) -> SenseNode:
    return SenseNode(
        id=sense_id,
        pos=PosTag.parse(pos),
        lemmas=(sense_id.split(":")[-1],),
        gloss=gloss if gloss is not None else f"gloss of {sense_id}",
    )


def make_graph(node_ids, edges, separated=False) -> SemanticGraph:
    return SemanticGraph(
        {nid: make_node(nid) for nid in node_ids}, edges, separated=separated
    )


@pytest.fixture
def bank_graph() -> SemanticGraph:
    """The ambiguous-bank toy: a direct co-candidate edge, a shared witness,
    and per-sense exclusive neighbors."""
    node_ids = ["bank1", "bank2", "x", "money", "loan", "river", "slope"]
    edges = [
        ("bank1", "bank2"),
        ("x", "bank1"),
        ("x", "bank2"),
        ("bank1", "money"),
        ("bank1", "loan"),
        ("bank2", "river"),
        ("bank2", "slope"),
    ]
    return make_graph(node_ids, edges)


@pytest.fixture
def bank_inventory() -> SenseInventory:
    return SenseInventory({("bank", PosTag.NOUN): ["bank1", "bank2"]})


@pytest.fixture
def toy_paths() -> dict:
    return {
        "graph_nodes": str(TOY_DIR / "nodes.tsv"),
        "graph_edges": str(TOY_DIR / "edges.tsv"),
        "inventory": str(TOY_DIR / "inventory.tsv"),
        "corpus": str(TOY_DIR / "corpus.jsonl"),
        "gold": str(TOY_DIR / "gold.txt"),
    }
