import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grabqc.ctxgraph import (
    CONTEXT_ENTITY,
    EXTERNAL_KEYWORD,
    QUERY_ENTITY,
    ContextualGraph,
    GraphNode,
    augment_with_external,
    build_graph,
    compute_external_keywords,
    dump_graphs,
    load_graphs,
)
from grabqc.nel import link_query, link_sentence
from grabqc.supervision import label_graph

from conftest import query, random_graph, sentence, sciatica_kb


def sciatica_graph(text="Pain in the lower back."):
    kb = sciatica_kb()
    q = query("Sciatica")
    ents = link_sentence(sentence(text, index=3), kb)
    return build_graph(q, link_query(q, kb), ents, kb, 3)


def test_sciatica_fixture_graph():
    g = sciatica_graph()
    assert [nd.words for nd in g.nodes] == [("sciatica",), ("pain",), ("lower", "back")]
    assert [nd.origin for nd in g.nodes] == [QUERY_ENTITY, CONTEXT_ENTITY, CONTEXT_ENTITY]
    assert sorted(g.edges) == [(0, 1), (0, 2), (1, 2)]
    assert g.nodes[1].source_sentence == ("HPI", 3)


def test_unmatched_note_entities_give_query_only_graph():
    kb = sciatica_kb()
    q = query("Hypertension")
    g = build_graph(q, link_query(q, kb), link_sentence(sentence("Pain in the leg."), kb), kb, 3)
    assert g.n == 1 and g.edges == []


def test_note_entity_same_as_query_concept_is_merged():
    kb = sciatica_kb()
    q = query("Sciatica")
    g = build_graph(q, link_query(q, kb), link_sentence(sentence("Sciatica flared again."), kb), kb, 3)
    assert g.n == 1 and g.nodes[0].origin == QUERY_ENTITY


def test_empty_query_entities_is_degenerate():
    kb = sciatica_kb()
    q = query("Unrelated thing")
    g = build_graph(q, [], link_sentence(sentence("Pain."), kb), kb, 3)
    assert g.degenerate and g.n == 0


def test_hop_budget_limits_matches():
    # right -> lower back -> sciatica is two hops
    assert any(nd.words == ("right",) for nd in sciatica_graph("Right lower back hurts.").nodes)
    kb = sciatica_kb()
    q = query("Sciatica")
    g = build_graph(q, link_query(q, kb), link_sentence(sentence("Right side."), kb), kb, 1)
    assert g.n == 1


def test_external_keywords_ranked_by_frequency():
    descs = ["x unspecified"] * 500 + ["y without"] * 300 + ["z"]
    assert compute_external_keywords(descs, {"x", "y", "z"}, 2) == ["unspecified", "without"]
    assert compute_external_keywords(descs, {"x", "y", "z", "unspecified", "without"}, 4) == []
    assert compute_external_keywords(descs, set(), 0) == []


def test_augment_one_query_node_four_keywords():
    g = sciatica_graph("Nothing.")
    aug = augment_with_external(g, ["unspecified", "without", "other", "site"])
    assert aug.n == g.n + 4
    assert len(aug.edges) == len(g.edges) + 4
    assert all(nd.origin == EXTERNAL_KEYWORD for nd in aug.nodes[g.n:])


def test_augment_empty_keywords_unchanged():
    g = sciatica_graph()
    assert augment_with_external(g, []) is g


def test_augment_two_query_nodes_one_keyword():
    kb = sciatica_kb()
    q = query("Sciatica pain")
    g = build_graph(q, link_query(q, kb), [], kb, 3)
    assert len(g.query_entity_ids()) == 2
    aug = augment_with_external(g, ["unspecified"])
    assert aug.n == 3
    assert sorted(e for e in aug.edges if 2 in e) == [(0, 2), (1, 2)]


def test_augment_is_idempotent_and_rejects_labelled():
    g = sciatica_graph()
    once = augment_with_external(g, ["unspecified"])
    assert augment_with_external(once, ["unspecified"]) is once
    with pytest.raises(ValueError):
        augment_with_external(label_graph(g, "sciatica"), ["x"])


def test_graph_invariants_enforced():
    nd = GraphNode(0, ("a",), QUERY_ENTITY, "C")
    with pytest.raises(ValueError):
        ContextualGraph("q", (nd, GraphNode(1, ("b",), CONTEXT_ENTITY, "D")), np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        ContextualGraph("q", (nd,), np.array([[1]]))
    with pytest.raises(ValueError):
        GraphNode(0, (), QUERY_ENTITY, "C")
    with pytest.raises(ValueError):
        GraphNode(0, ("kw",), EXTERNAL_KEYWORD, "C")


def test_dump_load_round_trip(tmp_path):
    g = label_graph(augment_with_external(sciatica_graph(), ["unspecified"]), "sciatica unspecified")
    path = tmp_path / "g.jsonl"
    dump_graphs([g, sciatica_graph()], path)
    back = load_graphs(path)
    assert back[0].nodes == g.nodes
    assert np.array_equal(back[0].adjacency, g.adjacency)
    assert np.array_equal(back[0].labels, g.labels)
    assert back[1].labels is None


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000), st.lists(st.sampled_from(["unspecified", "without", "other"]), max_size=4))
def test_augmented_graph_invariants(n, seed, kws):
    g = random_graph(np.random.default_rng(seed), n)
    aug = augment_with_external(g, kws)
    A = aug.adjacency
    assert np.array_equal(A, A.T) and not np.any(np.diag(A))
    assert np.array_equal(A[:g.n, :g.n], g.adjacency)
    for i in range(g.n, aug.n):
        assert set(np.flatnonzero(A[i])) == set(g.query_entity_ids())
