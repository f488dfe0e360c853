import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from countloop.errors import CapacityError, EditError
from countloop.graph import (
    AddNodes, JitterSpacing, MoveNode, ObjectNode, PlanningGraph, RelationEdge,
    RemoveNodes, Separate, SetContext, apply_edits, build_graph, canonicalize,
    decode_edit, decode_graph, encode_edit, encode_graph, graph_to_prompt,
    make_node_id, validate_graph,
)
from countloop.prompting import PromptSpec, parse_prompt

from conftest import load_fixture_json, simple_graph


class TestBuildGraph:
    def test_cats_and_bird(self):
        spec = parse_prompt("two cats and a bird in the sky")
        g = build_graph(spec, seed=42)
        ids = sorted(n.id for n in g.objects)
        assert ids == ["bird_1", "cat_1", "cat_2"]
        bird = g.node_by_id("bird_1")
        cats = [g.node_by_id("cat_1"), g.node_by_id("cat_2")]
        assert all(bird.pos[1] < c.pos[1] for c in cats)
        below = {(e.source, e.target) for e in g.relations if e.relation == "below"}
        assert ("cat_1", "bird_1") in below and ("cat_2", "bird_1") in below
        assert validate_graph(g) == []

    def test_single_instance_centered(self):
        g = build_graph(parse_prompt("a cup on a table"), seed=7)
        assert len(g.objects) == 1
        x, y = g.objects[0].pos
        assert 0.35 <= x <= 0.65 and 0.35 <= y <= 0.65
        assert g.relations == ()

    def test_fifteen_watches_not_gridlike(self):
        g = build_graph(parse_prompt("15 watches on a stand"), seed=3)
        assert len(g.objects) == 15
        centers = np.array([n.pos for n in g.objects])
        d = np.hypot(centers[:, None, 0] - centers[None, :, 0],
                     centers[:, None, 1] - centers[None, :, 1])
        np.fill_diagonal(d, np.inf)
        nn = d.min(axis=1)
        assert nn.min() > 0.0  # no coincident centers
        cv = nn.std() / nn.mean()
        assert cv >= 0.05

    def test_capacity_error(self):
        spec = PromptSpec(targets={"cat": 100000}, raw="x")
        with pytest.raises(CapacityError):
            build_graph(spec, seed=0)

    @pytest.mark.parametrize("prompt,seed", [
        ("50 oranges in a bowl", 42),
        ("30 people and 20 cars in a city street", 1),
        ("100 balloons in the sky", 2),
        ("3 cats and 14 birds in the sky", 9),
    ])
    def test_built_graphs_validate(self, prompt, seed):
        g = build_graph(parse_prompt(prompt), seed=seed)
        assert validate_graph(g) == []

    def test_determinism(self):
        spec = parse_prompt("40 donuts on a tray")
        assert build_graph(spec, seed=5) == build_graph(spec, seed=5)


class TestValidateGraph:
    def test_paper_direction_example(self):
        g = decode_graph(load_fixture_json("planner_reply_cats_bird.json"))
        codes = {v.code for v in validate_graph(g)}
        assert "edge-direction" not in codes

    def test_out_of_range_position(self):
        node = ObjectNode(id="cat_1", category="cat", pos=(1.5, 0.5),
                          depth=0.5, size=(0.1, 0.1))
        g = PlanningGraph(objects=(node,), relations=())
        assert any(v.code == "pos-range" for v in validate_graph(g))

    def test_inverted_above_edge(self):
        a = ObjectNode(id="cat_1", category="cat", pos=(0.5, 0.7),
                       depth=0.5, size=(0.1, 0.1))
        b = ObjectNode(id="bird_1", category="bird", pos=(0.5, 0.5),
                       depth=0.5, size=(0.1, 0.1))
        # source claims "above" but sits 0.2 below the target
        e = RelationEdge(source="cat_1", target="bird_1", relation="above")
        g = PlanningGraph(objects=(a, b), relations=(e,))
        assert any(v.code == "edge-direction" for v in validate_graph(g))

    def test_duplicate_and_gap(self):
        a = ObjectNode(id="cat_1", category="cat", pos=(0.2, 0.2),
                       depth=0.5, size=(0.1, 0.1))
        dup = ObjectNode(id="cat_1", category="cat", pos=(0.4, 0.4),
                         depth=0.5, size=(0.1, 0.1))
        g = PlanningGraph(objects=(a, dup), relations=())
        assert any(v.code == "duplicate-id" for v in validate_graph(g))
        b = ObjectNode(id="cat_3", category="cat", pos=(0.4, 0.4),
                       depth=0.5, size=(0.1, 0.1))
        g = PlanningGraph(objects=(a, b), relations=())
        assert any(v.code == "index-gap" for v in validate_graph(g))

    def test_dangling_edge(self):
        a = ObjectNode(id="cat_1", category="cat", pos=(0.2, 0.2),
                       depth=0.5, size=(0.1, 0.1))
        e = RelationEdge(source="cat_1", target="ghost_1", relation="near")
        g = PlanningGraph(objects=(a,), relations=(e,))
        assert any(v.code == "edge-endpoint" for v in validate_graph(g))


class TestGraphToPrompt:
    def test_sections_present_for_empty_relations(self):
        g = simple_graph({"cup": 2}, context="on a table")
        text = graph_to_prompt(g)
        assert "[Object]" in text and "[Relation]" in text and "[Context]" in text
        assert "on a table" in text

    def test_paper_graph_mentions_ids_and_relation(self):
        g = decode_graph(load_fixture_json("planner_reply_cats_bird.json"))
        text = graph_to_prompt(g)
        for token in ("cat_1", "cat_2", "bird_1", "below"):
            assert token in text

    def test_edge_order_canonicalized(self):
        g = decode_graph(load_fixture_json("planner_reply_cats_bird.json"))
        reversed_edges = PlanningGraph(
            objects=g.objects, relations=tuple(reversed(g.relations)),
            context=g.context)
        assert graph_to_prompt(g) == graph_to_prompt(reversed_edges)

    def test_byte_identical_for_identical_graphs(self):
        g = build_graph(parse_prompt("9 vases on a shelf"), seed=11)
        assert graph_to_prompt(g) == graph_to_prompt(g)

    def test_injective_on_generated_pairs(self):
        prompts = ["5 cats in a room", "6 cats in a room", "5 dogs in a room",
                   "5 cats in a garden"]
        rendered = set()
        for i, p in enumerate(prompts):
            g = canonicalize(build_graph(parse_prompt(p), seed=i))
            rendered.add(graph_to_prompt(g))
        assert len(rendered) == len(prompts)
        g = canonicalize(build_graph(parse_prompt("5 cats in a room"), seed=0))
        moved = apply_edits(g, [MoveNode(id="cat_1", pos=(0.9, 0.9))])
        assert graph_to_prompt(g) != graph_to_prompt(canonicalize(moved))


class TestJsonCodec:
    def test_paper_fixture_round_trip(self):
        data = load_fixture_json("planner_reply_cats_bird.json")
        g = decode_graph(data)
        assert decode_graph(encode_graph(g)) == g
        assert [n.id for n in g.objects] == ["cat_1", "cat_2", "bird_1"]
        assert g.objects[0].category == "cat"
        assert g.context == "outdoor, grassy field"
        assert g.relations[0].dist == 120 and g.relations[0].angle == 90

    def test_source_target_spelling_accepted(self):
        data = {
            "objects": [
                {"id": "cup_1", "pos": [0.2, 0.2], "d": 0.5, "size": [0.1, 0.1]},
                {"id": "cup_2", "pos": [0.6, 0.6], "d": 0.5, "size": [0.1, 0.1]},
            ],
            "relations": [{"source": "cup_1", "target": "cup_2", "r": "near"}],
            "context": "",
        }
        g = decode_graph(data)
        assert g.relations[0] == RelationEdge(source="cup_1", target="cup_2",
                                              relation="near")
        assert "from" in encode_graph(g)["relations"][0]

    def test_missing_size_defaults_from_table(self):
        data = {"objects": [{"id": "watch 1", "pos": [0.5, 0.5], "d": 0.7}],
                "context": ""}
        g = decode_graph(data)
        assert g.objects[0].size == (0.06, 0.06)

    def test_relation_space_normalized(self):
        data = {
            "objects": [
                {"id": "watch_1", "pos": [0.2, 0.2], "size": [0.06, 0.06]},
                {"id": "watch_2", "pos": [0.6, 0.2], "size": [0.06, 0.06]},
            ],
            "relations": [{"from": "watch 2", "to": "watch 1",
                           "relation": "right of", "dist": 45, "angle": 10}],
        }
        g = decode_graph(data)
        assert g.relations[0].relation == "right-of"

    def test_round_trip_built_graph(self):
        g = build_graph(parse_prompt("two cats and a bird in the sky"), seed=42)
        assert decode_graph(encode_graph(g)) == g
        json.dumps(encode_graph(g))  # JSON-serializable end to end


class TestApplyEdits:
    def test_add_nodes_continues_numbering(self):
        g = simple_graph({"cup": 28})
        out = apply_edits(g, [AddNodes(category="cup", count=2)])
        ids = {n.id for n in out.objects}
        assert len(out.objects) == 30
        assert "cup_29" in ids and "cup_30" in ids
        assert validate_graph(out) == []

    def test_empty_edit_list_identity(self):
        g = simple_graph({"cat": 3})
        assert apply_edits(g, []) == g

    def test_separate_reaches_distance(self):
        g = simple_graph({"cup": 7}, positions=[(0.5, 0.5)] * 7)
        out = apply_edits(g, [Separate(id_a="cup_7", id_b="cup_3",
                                       min_separation=40)], resolution=1024)
        a = out.node_by_id("cup_7")
        b = out.node_by_id("cup_3")
        dist_px = math.hypot(a.pos[0] - b.pos[0], a.pos[1] - b.pos[1]) * 1024
        assert dist_px >= 40 - 1e-6

    def test_separate_noop_when_already_apart(self):
        g = simple_graph({"cup": 2}, positions=[(0.2, 0.2), (0.8, 0.8)])
        out = apply_edits(g, [Separate(id_a="cup_1", id_b="cup_2",
                                       min_separation=40)])
        assert out == g

    def test_remove_renumbers_category(self):
        g = simple_graph({"cup": 5, "cat": 2})
        out = apply_edits(g, [RemoveNodes(ids=("cup_2", "cup_4"))])
        assert out.category_counts() == {"cup": 3, "cat": 2}
        assert validate_graph(out) == []

    def test_dangling_id_raises(self):
        g = simple_graph({"cup": 2})
        with pytest.raises(EditError):
            apply_edits(g, [RemoveNodes(ids=("cup_9",))])
        with pytest.raises(EditError):
            apply_edits(g, [MoveNode(id="dog_1", pos=(0.5, 0.5))])

    def test_move_and_set_context(self):
        g = simple_graph({"cat": 1})
        out = apply_edits(g, [MoveNode(id="cat_1", pos=(0.9, 0.1)),
                              SetContext(text="beach")])
        assert out.node_by_id("cat_1").pos == (0.9, 0.1)
        assert out.context == "beach"

    def test_jitter_preserves_counts_and_is_seeded(self):
        g = simple_graph({"cup": 9})
        edit = JitterSpacing(dist_range=(42, 48), angle_range=(-3, 10), seed=5)
        out1 = apply_edits(g, [edit])
        out2 = apply_edits(g, [edit])
        assert out1 == out2
        assert out1.category_counts() == g.category_counts()
        assert out1 != g

    def test_degenerate_jitter_range_rejected(self):
        with pytest.raises(ValueError):
            JitterSpacing(dist_range=(48, 42), angle_range=(-3, 10))

    def test_geometry_edits_preserve_counts(self):
        g = build_graph(parse_prompt("12 cups on a table"), seed=0)
        edits = [MoveNode(id="cup_1", pos=(0.05, 0.05)),
                 Separate(id_a="cup_2", id_b="cup_3", min_separation=50),
                 JitterSpacing(dist_range=(10, 20), angle_range=(0, 5), seed=1)]
        out = apply_edits(g, edits)
        assert out.category_counts() == g.category_counts()

    def test_violated_edges_dropped_after_move(self):
        spec = parse_prompt("two cats and a bird in the sky")
        g = build_graph(spec, seed=42)
        # drag the bird far below the cats: "below" edges become inconsistent
        out = apply_edits(g, [MoveNode(id="bird_1", pos=(0.5, 0.99))])
        assert validate_graph(out) == []
        assert all(e.target != "bird_1" for e in out.relations)

    def test_add_nodes_with_seed_positions(self):
        g = simple_graph({"watch": 1}, positions=[(0.3, 0.3)])
        out = apply_edits(g, [AddNodes(category="watch", count=2,
                                       positions=((0.7, 0.7), (0.9, 0.2)))])
        assert out.node_by_id("watch_2").pos == (0.7, 0.7)
        assert out.node_by_id("watch_3").pos == (0.9, 0.2)

    def test_edit_codec_round_trip(self):
        edits = [
            AddNodes(category="cup", count=2, positions=((0.1, 0.2), (0.3, 0.4))),
            RemoveNodes(ids=("cup_1",)),
            Separate(id_a="a_1", id_b="b_1", min_separation=40.0),
            MoveNode(id="a_1", pos=(0.5, 0.6)),
            JitterSpacing(dist_range=(42.0, 48.0), angle_range=(-3.0, 10.0), seed=7),
            SetContext(text="beach"),
        ]
        for edit in edits:
            assert decode_edit(encode_edit(edit)) == edit


@settings(max_examples=30, deadline=None)
@given(st.dictionaries(st.sampled_from(["cat", "dog", "cup"]),
                       st.integers(min_value=1, max_value=20),
                       min_size=1, max_size=3),
       st.integers(min_value=0, max_value=1000))
def test_build_graph_validates_for_all_specs(counts, seed):
    spec = PromptSpec(targets=counts, raw="prop")
    g = build_graph(spec, seed=seed)
    assert validate_graph(g) == []
    assert g.category_counts() == counts
