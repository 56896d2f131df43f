import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensecluster.errors import (
    EmptyCandidates,
    NotFound,
    ParseError,
    PreconditionFailed,
    ReferentialIntegrityError,
)
from sensecluster.graph import (
    PosTag,
    SemanticGraph,
    SenseInventory,
    SenseNode,
    build_equivalence_classes,
    candidate_neighborhood_union,
    check_sense_separability,
    enforce_sense_separability,
    load_graph,
    load_inventory,
    open_neighborhood,
    write_edges,
    write_inventory,
    write_nodes,
)

from conftest import make_graph, make_node


# Independent oracle: closed neighborhoods recomputed from the raw edge list,
# never through the graph's adjacency index.
def brute_force_violating_pairs(edge_list, inventory):
    def closed(s):
        out = {s}
        for a, b, *_ in edge_list:
            if a == s:
                out.add(b)
            if b == s:
                out.add(a)
        return out

    pairs = []
    for (lemma, pos), senses in inventory:
        for i in range(len(senses)):
            for j in range(i + 1, len(senses)):
                if closed(senses[i]) & closed(senses[j]):
                    pairs.append((lemma, pos, senses[i], senses[j]))
    return pairs


def random_case(rng, max_nodes=60, max_entries=6):
    n = rng.randint(2, max_nodes)
    ids = [f"s{i}" for i in range(n)]
    possible = [(a, b) for i, a in enumerate(ids) for b in ids[i + 1 :]]
    edge_count = rng.randint(0, min(len(possible), 3 * n))
    edges = rng.sample(possible, edge_count)
    entries = {}
    for e in range(rng.randint(1, max_entries)):
        size = rng.randint(1, min(5, n))
        senses = rng.sample(ids, size)
        entries[(f"w{e}", PosTag.NOUN)] = senses
    return make_graph(ids, edges), SenseInventory(entries), edges


class TestOpenNeighborhood:
    def test_isolated_node(self):
        g = make_graph(["a"], [])
        assert open_neighborhood(g, "a") == frozenset()

    def test_direct_edges(self):
        g = make_graph(["s", "a", "b"], [("s", "a"), ("s", "b")])
        assert open_neighborhood(g, "s") == {"a", "b"}

    def test_triangle_excludes_self(self):
        g = make_graph(["s", "a", "b"], [("s", "a"), ("s", "b"), ("a", "b")])
        assert open_neighborhood(g, "s") == {"a", "b"}
        assert "s" not in open_neighborhood(g, "s")

    def test_unknown_sense(self):
        g = make_graph(["a"], [])
        with pytest.raises(NotFound):
            open_neighborhood(g, "zzz")


class TestCandidateNeighborhoodUnion:
    def test_single_isolated_candidate(self):
        g = make_graph(["c1"], [])
        inv = SenseInventory({("w", PosTag.NOUN): ["c1"]})
        assert candidate_neighborhood_union(g, inv, "w", PosTag.NOUN) == {"c1"}

    def test_two_disjoint_candidates(self):
        g = make_graph(["c1", "c2", "a", "b"], [("c1", "a"), ("c2", "b")])
        inv = SenseInventory({("w", PosTag.NOUN): ["c1", "c2"]})
        assert candidate_neighborhood_union(g, inv, "w", PosTag.NOUN) == {
            "c1",
            "a",
            "c2",
            "b",
        }

    def test_bank_toy_post_separation(self, bank_graph, bank_inventory):
        separated, _ = enforce_sense_separability(bank_graph, bank_inventory)
        union = candidate_neighborhood_union(separated, bank_inventory, "bank", PosTag.NOUN)
        assert union == {"bank1", "money", "loan", "bank2", "river", "slope"}

    def test_missing_entry(self, bank_graph, bank_inventory):
        with pytest.raises(NotFound):
            candidate_neighborhood_union(bank_graph, bank_inventory, "nope", PosTag.NOUN)


class TestCheckSeparability:
    def test_single_candidates_vacuous(self):
        g = make_graph(["a", "b"], [("a", "b")])
        inv = SenseInventory(
            {("w1", PosTag.NOUN): ["a"], ("w2", PosTag.NOUN): ["b"]}
        )
        assert check_sense_separability(g, inv) == []

    def test_shared_witness(self, bank_inventory):
        g = make_graph(["bank1", "bank2", "x"], [("x", "bank1"), ("x", "bank2")])
        violations = check_sense_separability(g, bank_inventory)
        assert len(violations) == 1
        v = violations[0]
        assert (v.sense_i, v.sense_j, v.witness) == ("bank1", "bank2", "x")

    def test_direct_edge_witnessed_by_second_sense(self, bank_inventory):
        g = make_graph(["bank1", "bank2"], [("bank1", "bank2")])
        violations = check_sense_separability(g, bank_inventory)
        assert len(violations) == 1
        assert violations[0].witness == "bank2"

    def test_referential_integrity(self):
        g = make_graph(["a"], [])
        inv = SenseInventory({("w", PosTag.NOUN): ["a", "ghost"]})
        with pytest.raises(ReferentialIntegrityError):
            check_sense_separability(g, inv)


class TestEnforceSeparability:
    def test_already_separable_unchanged(self):
        g = make_graph(["a", "b", "c"], [("a", "c")])
        inv = SenseInventory({("w", PosTag.NOUN): ["a", "b"]})
        separated, report = enforce_sense_separability(g, inv)
        assert separated.edge_set() == g.edge_set()
        assert report.edges_removed_direct == 0
        assert report.edges_removed_shared == 0
        assert report.affected_entries == ()
        assert separated.separated

    def test_bank_toy_three_removals(self, bank_inventory):
        g = make_graph(
            ["bank1", "bank2", "x"],
            [("bank1", "bank2"), ("x", "bank1"), ("x", "bank2")],
        )
        separated, report = enforce_sense_separability(g, bank_inventory)
        assert separated.edge_count == 0
        assert report.edges_removed_direct == 1
        assert report.edges_removed_shared == 2
        assert report.affected_entries == (("bank", PosTag.NOUN),)

    def test_error_before_mutation(self):
        g = make_graph(["a"], [])
        inv = SenseInventory({("w", PosTag.NOUN): ["ghost"]})
        with pytest.raises(ReferentialIntegrityError):
            enforce_sense_separability(g, inv)

    def test_randomized_against_brute_force(self):
        rng = random.Random(7)
        for _ in range(50):
            g, inv, edges = random_case(rng)
            assert (len(brute_force_violating_pairs(edges, inv)) == 0) == (
                len(check_sense_separability(g, inv)) == 0
            )
            separated, _ = enforce_sense_separability(g, inv)
            remaining = list(separated.edges())
            assert brute_force_violating_pairs(remaining, inv) == []
            assert separated.edge_set() <= g.edge_set()

    def test_idempotent(self):
        rng = random.Random(11)
        for _ in range(25):
            g, inv, _ = random_case(rng)
            once, _ = enforce_sense_separability(g, inv)
            twice, report = enforce_sense_separability(once, inv)
            assert twice.edge_set() == once.edge_set()
            assert report.edges_removed_direct == 0
            assert report.edges_removed_shared == 0

    def test_permutation_invariance(self):
        rng = random.Random(13)
        g, inv, edges = random_case(rng, max_nodes=30)
        separated, _ = enforce_sense_separability(g, inv)
        for _ in range(5):
            shuffled_edges = list(edges)
            rng.shuffle(shuffled_edges)
            node_ids = list(g.nodes)
            rng.shuffle(node_ids)
            g2 = SemanticGraph({nid: g.nodes[nid] for nid in node_ids}, shuffled_edges)
            separated2, _ = enforce_sense_separability(g2, inv)
            assert separated2.edge_set() == separated.edge_set()

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=10**9))
    def test_property_post_check_empty(self, seed):
        g, inv, _ = random_case(random.Random(seed), max_nodes=40)
        separated, _ = enforce_sense_separability(g, inv)
        assert check_sense_separability(separated, inv) == []


class TestEquivalenceClasses:
    def test_bank_toy_classes(self, bank_graph, bank_inventory):
        separated, _ = enforce_sense_separability(bank_graph, bank_inventory)
        classes = build_equivalence_classes(separated, bank_inventory, "bank", PosTag.NOUN)
        assert [(c.representative, set(c.members)) for c in classes] == [
            ("bank1", {"bank1", "money", "loan"}),
            ("bank2", {"bank2", "river", "slope"}),
        ]

    def test_isolated_single_candidate(self):
        g = make_graph(["c"], [], separated=True)
        inv = SenseInventory({("w", PosTag.NOUN): ["c"]})
        classes = build_equivalence_classes(g, inv, "w", PosTag.NOUN)
        assert len(classes) == 1
        assert classes[0].members == {"c"}

    def test_requires_separated_graph(self, bank_graph, bank_inventory):
        with pytest.raises(PreconditionFailed):
            build_equivalence_classes(bank_graph, bank_inventory, "bank", PosTag.NOUN)

    def test_empty_candidates(self, bank_graph, bank_inventory):
        separated, _ = enforce_sense_separability(bank_graph, bank_inventory)
        with pytest.raises(EmptyCandidates):
            build_equivalence_classes(separated, bank_inventory, "bank", PosTag.NOUN, [])

    def test_non_candidate_rejected(self, bank_graph, bank_inventory):
        separated, _ = enforce_sense_separability(bank_graph, bank_inventory)
        with pytest.raises(PreconditionFailed):
            build_equivalence_classes(
                separated, bank_inventory, "bank", PosTag.NOUN, ["money"]
            )

    def test_ordered_by_inventory_rank(self, bank_graph, bank_inventory):
        separated, _ = enforce_sense_separability(bank_graph, bank_inventory)
        classes = build_equivalence_classes(
            separated, bank_inventory, "bank", PosTag.NOUN, ["bank2", "bank1"]
        )
        assert [c.representative for c in classes] == ["bank1", "bank2"]

    def test_randomized_partition(self):
        # Disjointness and exact cover of the candidate-neighborhood union,
        # checked by brute-force pairwise intersection.
        rng = random.Random(17)
        checked = 0
        for _ in range(200):
            g, inv, _ = random_case(rng, max_nodes=40)
            separated, _ = enforce_sense_separability(g, inv)
            for (lemma, pos), senses in inv:
                classes = build_equivalence_classes(separated, inv, lemma, pos)
                union = set()
                for i, ci in enumerate(classes):
                    for cj in classes[i + 1 :]:
                        assert not (ci.members & cj.members)
                    assert ci.representative in ci.members
                    union |= ci.members
                assert union == candidate_neighborhood_union(separated, inv, lemma, pos)
                checked += len(classes)
        assert checked > 1000


class TestFileFormats:
    def test_round_trip(self, tmp_path, bank_graph, bank_inventory):
        write_nodes(bank_graph.nodes, tmp_path / "nodes.tsv")
        write_edges(bank_graph, tmp_path / "edges.tsv")
        write_inventory(bank_inventory, tmp_path / "inventory.tsv")
        g2 = load_graph(tmp_path / "nodes.tsv", tmp_path / "edges.tsv")
        inv2 = load_inventory(tmp_path / "inventory.tsv")
        assert g2.edge_set() == bank_graph.edge_set()
        assert set(g2.nodes) == set(bank_graph.nodes)
        assert inv2.entries == bank_inventory.entries

    def test_gloss_may_contain_tabs(self, tmp_path):
        (tmp_path / "nodes.tsv").write_text(
            "id\tpos\tlanguage\tlemmas\tgloss\n"
            "s1\tNOUN\ten\tword\ta gloss\twith a tab\n",
            encoding="utf-8",
        )
        from sensecluster.graph import load_nodes

        loaded = load_nodes(tmp_path / "nodes.tsv")
        assert loaded["s1"].gloss == "a gloss\twith a tab"

    def test_bad_header(self, tmp_path):
        (tmp_path / "nodes.tsv").write_text("wrong\theader\n", encoding="utf-8")
        with pytest.raises(ParseError):
            from sensecluster.graph import load_nodes

            load_nodes(tmp_path / "nodes.tsv")

    def test_self_loop_rejected(self, tmp_path):
        (tmp_path / "nodes.tsv").write_text(
            "id\tpos\tlanguage\tlemmas\tgloss\ns1\tNOUN\ten\tw\tg\n", encoding="utf-8"
        )
        (tmp_path / "edges.tsv").write_text(
            "src\tdst\trelation\ns1\ts1\trel\n", encoding="utf-8"
        )
        with pytest.raises(ParseError):
            load_graph(tmp_path / "nodes.tsv", tmp_path / "edges.tsv")

    def test_unknown_pos_rejected(self):
        with pytest.raises(ValueError):
            PosTag.parse("GERUND")

    def test_pos_aliases(self):
        assert PosTag.parse("n") is PosTag.NOUN
        assert PosTag.parse("v") is PosTag.VERB
        assert PosTag.parse("a") is PosTag.ADJ
        assert PosTag.parse("s") is PosTag.ADJ
        assert PosTag.parse("r") is PosTag.ADV
        assert PosTag.parse("noun") is PosTag.NOUN


class TestInvariants:
    def test_sense_id_validation(self):
        with pytest.raises(ValueError):
            SenseNode(id="", pos=PosTag.NOUN, lemmas=("w",))
        with pytest.raises(ValueError):
            SenseNode(id="a\tb", pos=PosTag.NOUN, lemmas=("w",))

    def test_node_needs_lemmas(self):
        with pytest.raises(ValueError):
            SenseNode(id="s", pos=PosTag.NOUN, lemmas=())

    def test_gloss_missing_flag(self):
        assert make_node("s", gloss="").gloss_missing
        assert not make_node("s", gloss="text").gloss_missing

    def test_inventory_rejects_duplicates(self):
        with pytest.raises(ValueError):
            SenseInventory({("w", PosTag.NOUN): ["a", "a"]})

    def test_inventory_lowercases_lemmas(self):
        inv = SenseInventory({("Bank", PosTag.NOUN): ["a"]})
        assert inv.candidates("BANK", PosTag.NOUN) == ("a",)

    def test_edge_endpoint_must_exist(self):
        with pytest.raises(ValueError):
            make_graph(["a"], [("a", "ghost")])
