import pytest

from countloop.critic import (
    CriticReport, Issue, decode_report, imgrad, override_counts,
    parse_critic_json, programmatic_critic,
)
from countloop.errors import JsonError, SchemaError
from countloop.graph import (
    AddNodes, JitterSpacing, RemoveNodes, Separate, apply_edits,
)
from countloop.layout import gap_violations, realize_layout, relax_overlaps
from countloop.scoring import DetectionReport

from conftest import lattice_layout, load_fixture_text, make_layout, simple_graph


def separated_layout(n=12, category="watch"):
    boxes = []
    for k in range(n):
        x0 = 30 + (k % 4) * 230 + 7 * k
        y0 = 40 + (k // 4) * 250 + 11 * (k % 3)
        boxes.append((category, x0, y0, x0 + 60, y0 + 60))
    return make_layout(boxes)


class TestProgrammaticCritic:
    def test_count_deficit_issue(self):
        layout = separated_layout(12)
        det = DetectionReport(counts={"watch": 12})
        report = programmatic_critic(layout, det, {"watch": 15}, s_a=0.8,
                                     score=0.6)
        count_issues = [i for i in report.issues if i.type == "count"]
        assert len(count_issues) == 1
        issue = count_issues[0]
        assert issue.severity == "critical"
        assert issue.category == "watch"
        assert issue.detected == 12 and issue.target == 15
        assert "only 12 watches detected but target is 15" == issue.description
        assert issue.suggested_fix.startswith("Add watches 13-15 at [")
        assert len(issue.positions) == 3
        assert report.continue_refinement is True

    def test_converged_report_empty(self):
        layout = make_layout([("watch", 40, 60, 100, 120),
                              ("watch", 300, 90, 360, 150),
                              ("watch", 520, 400, 580, 460),
                              ("watch", 150, 700, 210, 760)])
        det = DetectionReport(counts={"watch": 4})
        report = programmatic_critic(layout, det, {"watch": 4}, s_a=1.0,
                                     score=0.95)
        assert report.issues == []
        assert report.continue_refinement is False

    def test_overlap_issue_canonical_order(self):
        layout = make_layout([("cup", 100, 100, 200, 200),
                              ("cup", 150, 150, 250, 250),
                              ("cup", 600, 600, 700, 700)])
        det = DetectionReport(counts={"cup": 3})
        report = programmatic_critic(layout, det, {"cup": 3}, s_a=0.7, score=0.8)
        spatial = [i for i in report.issues if i.type == "spatial"]
        assert len(spatial) == 1
        assert spatial[0].description == "cup_1 is overlapping with cup_2"
        assert spatial[0].pair == ("cup_1", "cup_2")
        assert spatial[0].severity == "major"

    def test_grid_flag_with_jitter_fix(self):
        layout = lattice_layout(4, 4, pitch=150, box=60)
        det = DetectionReport(counts={"cup": 16})
        report = programmatic_critic(layout, det, {"cup": 16}, s_a=0.6, score=0.8)
        grid_issues = [i for i in report.issues if i.grid]
        assert len(grid_issues) == 1
        assert grid_issues[0].description == "Artificial grid pattern"
        assert "42-48px" in grid_issues[0].suggested_fix

    def test_deterministic_and_order_insensitive(self):
        layout = make_layout([("cup", 100, 100, 200, 200),
                              ("cup", 150, 150, 250, 250)])
        det = DetectionReport(counts={"cup": 2})
        a = programmatic_critic(layout, det, {"cup": 2}, s_a=0.7, score=0.8)
        reordered = make_layout([("cup", 150, 150, 250, 250),
                                 ("cup", 100, 100, 200, 200)])
        # ids swap with construction order; pair output stays canonical
        b = programmatic_critic(reordered, det, {"cup": 2}, s_a=0.7, score=0.8)
        assert [i.pair for i in a.issues] == [i.pair for i in b.issues]


class TestParseCriticJson:
    def test_watches_fixture(self):
        report = parse_critic_json(load_fixture_text("critic_reply_watches.json"))
        assert report.detected == {"total": 12}
        assert report.target == {"total": 15}
        assert report.spatial_quality == 0.6
        assert report.continue_refinement is True
        assert len(report.issues) == 2
        count_issue = report.issues[0]
        assert count_issue.type == "count" and count_issue.severity == "critical"
        assert count_issue.positions == ((0.72, 0.41), (0.79, 0.39), (0.86, 0.43))
        assert report.issues[1].grid is True

    def test_fixture_round_trip_structural_equality(self):
        report = parse_critic_json(load_fixture_text("critic_reply_watches.json"))
        import json
        again = decode_report(json.loads(json.dumps(report.to_dict())))
        assert again == report

    def test_encode_decode_identity_programmatic(self):
        layout = separated_layout(12)
        det = DetectionReport(counts={"watch": 12})
        report = programmatic_critic(layout, det, {"watch": 15}, s_a=0.8, score=0.6)
        assert decode_report(report.to_dict()) == report

    def test_minimal_evaluation_only(self):
        text = ('{"evaluation": {"count_accuracy": {"detected": {"cup": 3}, '
                '"target": {"cup": 3}}, "spatial_quality": 0.9}}')
        report = parse_critic_json(text)
        assert report.issues == []
        assert report.continue_refinement is False  # counts match, no issues

    def test_mismatch_without_issues_continues(self):
        text = ('{"evaluation": {"count_accuracy": {"detected": {"cup": 2}, '
                '"target": {"cup": 3}}, "spatial_quality": 0.9}}')
        assert parse_critic_json(text).continue_refinement is True

    def test_malformed_braces(self):
        with pytest.raises(JsonError):
            parse_critic_json('{"evaluation": {{nope}')

    def test_wrong_schema(self):
        with pytest.raises(SchemaError):
            parse_critic_json('{"verdict": "fine"}')

    def test_unknown_issue_type_mapped_to_attribute_minor(self):
        text = ('{"evaluation": {"count_accuracy": {"detected": {}, "target": {}},'
                ' "spatial_quality": 0.5}, "issues": [{"type": "lighting", '
                '"severity": "odd", "description": "lighting is inconsistent '
                'across objects"}]}')
        report = parse_critic_json(text)
        assert report.issues[0].type == "attribute"
        assert report.issues[0].severity == "minor"
        assert "lighting" in report.issues[0].description

    def test_overlap_pair_recovered_from_text(self):
        text = ('{"evaluation": {"count_accuracy": {"detected": {"cup": 7}, '
                '"target": {"cup": 7}}, "spatial_quality": 0.4}, "issues": ['
                '{"type": "spatial", "severity": "major", '
                '"description": "cup_7 is overlapping with cup_3"}]}')
        report = parse_critic_json(text)
        assert report.issues[0].pair == ("cup_7", "cup_3")

    def test_decision_inside_evaluation_accepted(self):
        text = ('{"evaluation": {"count_accuracy": {"detected": {"cup": 1}, '
                '"target": {"cup": 1}}, "spatial_quality": 1.0, '
                '"decision": {"continue_refinement": false, "reason": "ok"}}}')
        report = parse_critic_json(text)
        assert report.continue_refinement is False
        assert report.reason == "ok"


class TestImgrad:
    def test_deficit_becomes_add_nodes(self):
        g = simple_graph({"cup": 28})
        report = CriticReport(
            detected={"cup": 28}, target={"cup": 30}, spatial_quality=0.8,
            issues=[Issue(type="count", severity="critical",
                          description="only 28 cups detected but target is 30",
                          category="cup", detected=28, target=30)],
        )
        edits = imgrad(g, report)
        assert edits == [AddNodes(category="cup", count=2, positions=None)]
        out = apply_edits(g, edits)
        assert out.category_counts() == {"cup": 30}

    def test_deficit_soundness_multi_category(self):
        g = simple_graph({"cup": 5, "cat": 2})
        report = CriticReport(
            detected={"cup": 5, "cat": 2}, target={"cup": 9, "cat": 4},
            spatial_quality=0.8,
            issues=[
                Issue(type="count", severity="critical", description="",
                      category="cup", detected=5, target=9),
                Issue(type="count", severity="critical", description="",
                      category="cat", detected=2, target=4),
            ],
        )
        out = apply_edits(g, imgrad(g, report))
        assert out.category_counts() == {"cup": 9, "cat": 4}

    def test_surplus_becomes_remove_nodes(self):
        g = simple_graph({"cup": 6})
        report = CriticReport(
            detected={"cup": 6}, target={"cup": 4}, spatial_quality=0.8,
            issues=[Issue(type="count", severity="critical", description="",
                          category="cup", detected=6, target=4)],
        )
        edits = imgrad(g, report)
        assert len(edits) == 1 and isinstance(edits[0], RemoveNodes)
        out = apply_edits(g, edits)
        assert out.category_counts() == {"cup": 4}

    def test_overlap_becomes_separate(self):
        g = simple_graph({"cup": 7}, positions=[(0.5, 0.5)] * 7)
        report = CriticReport(
            detected={"cup": 7}, target={"cup": 7}, spatial_quality=0.4,
            issues=[Issue(type="spatial", severity="major",
                          description="cup_7 is overlapping with cup_3",
                          pair=("cup_7", "cup_3"))],
        )
        edits = imgrad(g, report, min_sep=8, resolution=1024)
        assert len(edits) == 1 and isinstance(edits[0], Separate)
        assert edits[0].id_a == "cup_7" and edits[0].id_b == "cup_3"
        out = apply_edits(g, edits, resolution=1024)
        layout = realize_layout(out, 1024)
        assert ("cup_3", "cup_7") not in gap_violations(layout, 8)

    def test_grid_issue_becomes_jitter(self):
        g = simple_graph({"cup": 9})
        report = CriticReport(
            detected={"cup": 9}, target={"cup": 9}, spatial_quality=0.5,
            issues=[Issue(type="spatial", severity="major",
                          description="Artificial grid pattern", grid=True)],
        )
        edits = imgrad(g, report, seed=3)
        assert edits == [JitterSpacing(dist_range=(42.0, 48.0),
                                       angle_range=(-3.0, 10.0), seed=3)]

    def test_empty_issues_empty_edits(self):
        g = simple_graph({"cup": 3})
        report = CriticReport(detected={"cup": 3}, target={"cup": 3},
                              spatial_quality=1.0, issues=[],
                              continue_refinement=False)
        edits = imgrad(g, report)
        assert edits == []
        assert apply_edits(g, edits) == g

    def test_count_edits_before_spatial(self):
        g = simple_graph({"cup": 4}, positions=[(0.5, 0.5)] * 4)
        report = CriticReport(
            detected={"cup": 4}, target={"cup": 6}, spatial_quality=0.4,
            issues=[
                Issue(type="spatial", severity="major",
                      description="cup_1 is overlapping with cup_2",
                      pair=("cup_1", "cup_2")),
                Issue(type="count", severity="critical", description="",
                      category="cup", detected=4, target=6),
            ],
        )
        edits = imgrad(g, report)
        assert isinstance(edits[0], AddNodes)
        assert isinstance(edits[1], Separate)

    def test_dangling_pair_dropped_with_warning(self, caplog):
        g = simple_graph({"cup": 2})
        report = CriticReport(
            detected={"cup": 2}, target={"cup": 2}, spatial_quality=0.5,
            issues=[Issue(type="spatial", severity="major",
                          description="ghost_1 is overlapping with cup_1",
                          pair=("ghost_1", "cup_1"))],
        )
        with caplog.at_level("WARNING"):
            edits = imgrad(g, report)
        assert edits == []
        assert any("unknown ids" in r.message for r in caplog.records)

    def test_attribute_issues_recorded_not_acted_on(self):
        g = simple_graph({"cup": 2})
        report = CriticReport(
            detected={"cup": 2}, target={"cup": 2}, spatial_quality=0.9,
            issues=[Issue(type="attribute", severity="minor",
                          description="lighting is inconsistent across objects")],
        )
        assert imgrad(g, report) == []

    def test_progress_overlap_pairs_non_increasing(self):
        """One critic -> imgrad -> apply -> relax cycle never increases the
        number of under-separated pairs."""
        import numpy as np

        for seed in range(20):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(4, 14))
            positions = [(float(rng.uniform(0.2, 0.8)), float(rng.uniform(0.2, 0.8)))
                         for _ in range(n)]
            g = simple_graph({"cup": n}, size=(0.09, 0.09), positions=positions)
            layout = realize_layout(g, 512)
            before = len(gap_violations(layout, 8))
            det = DetectionReport(counts={"cup": n})
            report = programmatic_critic(layout, det, {"cup": n}, s_a=0.5,
                                         score=0.5, min_sep=8)
            g2 = apply_edits(g, imgrad(g, report, min_sep=8, resolution=512),
                             resolution=512)
            layout2 = relax_overlaps(realize_layout(g2, 512), min_sep=8)
            after = len(gap_violations(layout2, 8))
            assert after <= before, f"seed {seed}: {before} -> {after}"


class TestOverrideCounts:
    def test_detector_is_authoritative(self):
        layout = separated_layout(5, category="cup")
        llm_report = CriticReport(
            detected={"cup": 99}, target={"cup": 5}, spatial_quality=0.5,
            issues=[Issue(type="count", severity="critical",
                          description="llm hallucinated", category="cup",
                          detected=99, target=5),
                    Issue(type="attribute", severity="minor",
                          description="texture drift")],
        )
        det = DetectionReport(counts={"cup": 3})
        fixed = override_counts(llm_report, det, {"cup": 5}, layout)
        assert fixed.detected == {"cup": 3}
        count_issues = [i for i in fixed.issues if i.type == "count"]
        assert len(count_issues) == 1
        assert count_issues[0].detected == 3 and count_issues[0].target == 5
        # non-count issues survive
        assert any(i.type == "attribute" for i in fixed.issues)
        assert fixed.continue_refinement is True
