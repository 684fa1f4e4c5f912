import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgaudit.errors import (
    CaseErrorReport,
    CorpusIndex,
    CorpusSummary,
    ErrorKind,
    ErrorRecord,
    ExpandMode,
    aggregate_corpus,
    analyze_case,
    detect_branch_errors,
    detect_missing_errors,
    detect_relation_errors,
    expand_pattern,
    summarize_pattern,
)
from kgaudit.exceptions import DataError
from kgaudit.grounding import (
    AlignmentResult,
    AlignMethod,
    Case,
    GroundedPath,
    GroundedStep,
    Mention,
    MentionOrigin,
)
from kgaudit.kg import Path
from kgaudit.services import StubAdjudicator

from . import oracles
from .conftest import make_graph


def _alignment(eid, text=None):
    return AlignmentResult(
        Mention(text or eid, MentionOrigin.MODEL_PATH), eid, AlignMethod.EXACT
    )


def grounded(*entity_ids):
    steps = tuple(GroundedStep(e, "suggests", _alignment(e)) for e in entity_ids)
    return GroundedPath(steps, 0)


def make_case(case_id, correct, predicted, model_paths, reference_paths, question=()):
    """Assemble a grounded Case directly, bypassing alignment."""
    return Case(
        id=case_id,
        question="q?",
        options=(correct, predicted) if correct != predicted else (correct,),
        correct_answer=correct,
        predicted_answer=predicted,
        question_entities=tuple(_alignment(e) for e in question),
        correct_entity=correct,
        predicted_entity=predicted,
        model_paths=tuple(grounded(*ids) for ids in model_paths),
        reference_paths=tuple(reference_paths),
    )


def case_b(graph_unused=None):
    return make_case(
        "CASE-B",
        correct="n3",
        predicted="n6",
        model_paths=[("n1", "n7"), ("n2", "n6")],
        reference_paths=[Path(("n1", "n3"), ("present",))],
        question=("n1",),
    )


def case_a():
    return make_case(
        "CASE-A",
        correct="n4",
        predicted="n6",
        model_paths=[("n2", "n6")],
        reference_paths=[Path(("n1", "n4"), ("present",))],
        question=("n1",),
    )


def test_relation_errors_fixture(toy7_graph, toy7b_graph):
    got = detect_relation_errors(case_b(), toy7_graph)
    assert {(r.source, r.target) for r in got} == {("n1", "n7")}
    assert detect_relation_errors(case_a(), toy7b_graph) == set()


def test_branch_errors_fixture(toy7_graph, toy7b_graph):
    got = detect_branch_errors(case_b(), toy7_graph)
    assert {(r.source, r.target) for r in got} == {("n1", "n7")}
    rec = next(iter(got))
    assert rec.also_relation_error  # (n1, n7) is unsupported too
    assert detect_branch_errors(case_a(), toy7b_graph) == set()


def test_missing_errors_fixture(toy7_graph, toy7b_graph):
    got = detect_missing_errors(case_a(), toy7b_graph)
    assert {r.target for r in got} == {"n1"}
    assert all(r.source is None for r in got)
    assert detect_missing_errors(case_b(), toy7_graph) == set()


def test_empty_paths_yield_no_errors(toy7_graph):
    c = make_case("C0", "n3", "n6", model_paths=[], reference_paths=[])
    assert detect_relation_errors(c, toy7_graph) == set()
    assert detect_branch_errors(c, toy7_graph) == set()
    assert detect_missing_errors(c, toy7_graph) == set()


def test_analyze_case_counts(toy7_graph, toy7b_graph):
    a = analyze_case(case_a(), toy7b_graph)
    assert (a.n_rel, a.n_br, a.n_miss) == (0, 0, 1)
    assert not a.correct
    b = analyze_case(case_b(), toy7_graph)
    assert (b.n_rel, b.n_br, b.n_miss) == (1, 1, 0)
    assert not b.correct


def test_analyze_correct_case(toy7_graph):
    c = make_case(
        "C-OK",
        correct="n3",
        predicted="n3",
        model_paths=[("n1", "n3")],
        reference_paths=[Path(("n1", "n3"), ("present",))],
    )
    rep = analyze_case(c, toy7_graph)
    assert (rep.n_rel, rep.n_br, rep.n_miss) == (0, 0, 0)
    assert rep.correct


def test_analyze_case_is_pure(toy7_graph):
    first = analyze_case(case_b(), toy7_graph)
    second = analyze_case(case_b(), toy7_graph)
    assert first == second
    assert first.to_record() == second.to_record()


def test_report_roundtrip(toy7_graph):
    rep = analyze_case(case_b(), toy7_graph)
    assert CaseErrorReport.from_record(rep.to_record()) == rep


def test_aggregate_fixture_corpus(toy7_graph, toy7b_graph):
    reports = [analyze_case(case_a(), toy7b_graph), analyze_case(case_b(), toy7_graph)]
    summary = aggregate_corpus(reports, [case_a(), case_b()])
    assert summary.total_cases == 2
    assert summary.accuracy == 0.0
    assert summary.totals == {
        ErrorKind.RELATION: 1,
        ErrorKind.BRANCH: 1,
        ErrorKind.MISSING: 1,
    }
    assert summary.per_entity_intensity[("n7", ErrorKind.RELATION)] == 1
    assert summary.per_entity_intensity[("n7", ErrorKind.BRANCH)] == 1
    assert summary.per_entity_intensity[("n1", ErrorKind.MISSING)] == 1
    # n1 appears on both reference paths and on one observed (error) path
    roles = summary.per_entity_roles["n1"]
    assert roles.ref_path_occurrences == 2
    assert roles.observed_error_occurrences == 1
    assert roles.observed_nonerror_occurrences == 0
    assert roles.total_occurrences == 2


def test_aggregate_additivity(toy7_graph):
    b1 = case_b()
    b2 = make_case(
        "CASE-B2",
        correct="n3",
        predicted="n6",
        model_paths=[("n1", "n7"), ("n2", "n6")],
        reference_paths=[Path(("n1", "n3"), ("present",))],
    )
    r1 = analyze_case(b1, toy7_graph)
    r2 = analyze_case(b2, toy7_graph)
    both = aggregate_corpus([r1, r2], [b1, b2])
    assert both.totals[ErrorKind.RELATION] == 2
    assert both.per_entity_intensity[("n7", ErrorKind.RELATION)] == 2
    solo = aggregate_corpus([r1], [b1])
    for key, value in solo.per_entity_intensity.items():
        assert both.per_entity_intensity[key] == 2 * value  # b2 mirrors b1


def test_aggregate_order_independent(toy7_graph, toy7b_graph):
    reports = [analyze_case(case_a(), toy7b_graph), analyze_case(case_b(), toy7_graph)]
    cases = [case_a(), case_b()]
    fwd = aggregate_corpus(reports, cases)
    rev = aggregate_corpus(list(reversed(reports)), list(reversed(cases)))
    assert fwd.to_record() == rev.to_record()


def test_aggregate_empty_corpus():
    summary = aggregate_corpus([], [])
    assert summary.total_cases == 0
    assert summary.accuracy is None
    assert summary.totals == {k: 0 for k in ErrorKind}


def test_aggregate_rejects_mismatched_ids(toy7_graph):
    rep = analyze_case(case_b(), toy7_graph)
    with pytest.raises(DataError, match="case ids"):
        aggregate_corpus([rep], [case_a()])


def test_summary_roundtrip(toy7_graph, toy7b_graph):
    reports = [analyze_case(case_a(), toy7b_graph), analyze_case(case_b(), toy7_graph)]
    summary = aggregate_corpus(reports, [case_a(), case_b()])
    again = CorpusSummary.from_record(summary.to_record())
    assert again.to_record() == summary.to_record()


# -- expansion ----------------------------------------------------------------


def isolated_graph(*ids):
    return make_graph([(i, i, "Disease") for i in ids], [])


def relation_corpus():
    """Relation errors {(A,B1),(A,B2),(C,B1)} over isolated nodes."""
    g = isolated_graph("A", "B1", "B2", "C", "Y", "P")
    c1 = make_case("c1", "Y", "P", model_paths=[("A", "B1"), ("A", "B2")], reference_paths=[])
    c2 = make_case("c2", "Y", "P", model_paths=[("C", "B1")], reference_paths=[])
    reports = [analyze_case(c1, g), analyze_case(c2, g)]
    return g, reports, [c1, c2]


def test_expand_along_error_set_matches_example():
    _, reports, cases = relation_corpus()
    exp = expand_pattern("A", ErrorKind.RELATION, ExpandMode.ALONG_ERROR_SET, reports, cases)
    assert exp.error_targets == {"B1", "B2"}
    assert exp.related_error_pairs == {("A", "B1"), ("A", "B2"), ("C", "B1")}
    assert exp.error_case_ids[("C", "B1")] == {"c2"}
    assert exp.related_reference_pairs == frozenset()


def test_expand_unknown_anchor_is_empty():
    _, reports, cases = relation_corpus()
    exp = expand_pattern("Y", ErrorKind.RELATION, ExpandMode.ALONG_ERROR_SET, reports, cases)
    assert exp.is_empty
    assert exp.related_error_pairs == frozenset()


def test_expand_is_idempotent():
    _, reports, cases = relation_corpus()
    index = CorpusIndex(reports, cases)
    first = index.expand("A", ErrorKind.RELATION, ExpandMode.ALONG_ERROR_SET)
    second = index.expand("A", ErrorKind.RELATION, ExpandMode.ALONG_ERROR_SET)
    assert first == second
    assert first.to_record() == second.to_record()


def test_expand_along_reference_set(toy7_graph):
    # reference pairs: (n1,n3) in two cases; anchor n1 in reference mode
    b1 = case_b()
    b2 = make_case(
        "CASE-B2",
        correct="n3",
        predicted="n6",
        model_paths=[("n1", "n7")],
        reference_paths=[Path(("n1", "n3"), ("present",))],
    )
    reports = [analyze_case(b1, toy7_graph), analyze_case(b2, toy7_graph)]
    exp = expand_pattern(
        "n1", ErrorKind.RELATION, ExpandMode.ALONG_REFERENCE_SET, reports, [b1, b2]
    )
    assert exp.reference_targets == {"n3"}
    assert exp.related_reference_pairs == {("n1", "n3")}
    assert exp.reference_case_ids[("n1", "n3")] == {"CASE-B", "CASE-B2"}
    assert exp.related_error_pairs == frozenset()  # no error pair targets n3


def test_expand_missing_mode(toy7b_graph):
    a1 = case_a()
    a2 = make_case(
        "CASE-A2",
        correct="n4",
        predicted="n3",
        model_paths=[("n2", "n6")],
        reference_paths=[Path(("n1", "n4"), ("present",))],
    )
    reports = [analyze_case(a1, toy7b_graph), analyze_case(a2, toy7b_graph)]
    # n1 is a missing error in CASE-A; in CASE-A2 reach(n1, predicted=n3)
    # holds so it is not missing there
    exp = expand_pattern(
        "n1", ErrorKind.MISSING, ExpandMode.ALONG_ERROR_SET, reports, [a1, a2]
    )
    assert exp.error_targets == {"n6"}
    assert exp.reference_targets == {"n4"}
    assert exp.related_error_pairs == {("n1", "n6")}
    assert exp.error_case_ids[("n1", "n6")] == {"CASE-A"}


def test_expansion_soundness_on_random_corpora():
    rng = random.Random(7)
    for _ in range(20):
        nodes, edges = oracles.random_graph(rng, max_nodes=12, max_edges=20)
        g = make_graph(nodes, edges)
        ids = [i for i, _, _ in nodes]
        cases = []
        for ci in range(rng.randint(1, 6)):
            paths = [
                tuple(rng.choice(ids) for _ in range(rng.randint(2, 4)))
                for _ in range(rng.randint(0, 3))
            ]
            y_true, y_pred = rng.choice(ids), rng.choice(ids)
            refs = []
            for _ in range(rng.randint(0, 2)):
                seq = [rng.choice(ids), y_true]
                refs.append(Path(tuple(seq), ("x",) * (len(seq) - 1)))
            cases.append(make_case(f"c{ci}", y_true, y_pred, paths, refs))
        reports = [analyze_case(c, g) for c in cases]
        index = CorpusIndex(reports, cases)
        all_case_ids = {c.id for c in cases}
        for kind in (ErrorKind.RELATION, ErrorKind.BRANCH, ErrorKind.MISSING):
            anchor = rng.choice(ids)
            for mode in ExpandMode:
                exp = index.expand(anchor, kind, mode)
                chosen = (
                    exp.error_targets
                    if mode is ExpandMode.ALONG_ERROR_SET
                    else exp.reference_targets
                )
                for a, b in exp.related_error_pairs:
                    assert b in chosen
                    assert exp.error_case_ids[(a, b)] <= all_case_ids
                    assert exp.error_case_ids[(a, b)]
                for a, b in exp.related_reference_pairs:
                    assert b in chosen
                    assert exp.reference_case_ids[(a, b)]
                assert exp == index.expand(anchor, kind, mode)


def test_summarize_pattern_stub(toy7_graph):
    _, reports, cases = relation_corpus()
    exp = expand_pattern("A", ErrorKind.RELATION, ExpandMode.ALONG_ERROR_SET, reports, cases)
    g = isolated_graph("A", "B1", "B2", "C", "Y", "P")
    summary = summarize_pattern(exp, StubAdjudicator(), g)
    assert summary.categories_err == {"B1": "Disease", "B2": "Disease"}
    assert summary.categories_ref == {}
    assert summary.summary_text == "stub"


def test_summarize_empty_expansion_rejected(toy7_graph):
    _, reports, cases = relation_corpus()
    exp = expand_pattern("Y", ErrorKind.RELATION, ExpandMode.ALONG_ERROR_SET, reports, cases)
    with pytest.raises(ValueError, match="empty"):
        summarize_pattern(exp, StubAdjudicator(), toy7_graph)


def test_summarize_mixed_kinds():
    g = make_graph(
        [("s1", "ache", "Symptom"), ("d1", "flu", "Disease"), ("a", "a", "Disease"), ("y", "y", "Disease"), ("p", "p", "Disease")],
        [],
    )
    c = make_case("c1", "y", "p", model_paths=[("a", "s1"), ("a", "d1")], reference_paths=[])
    reports = [analyze_case(c, g)]
    exp = expand_pattern("a", ErrorKind.RELATION, ExpandMode.ALONG_ERROR_SET, reports, [c])
    summary = summarize_pattern(exp, StubAdjudicator(), g)
    assert set(summary.categories_err.values()) == {"Symptom", "Disease"}


# -- definition fidelity against the brute-force formula -----------------------


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=100_000))
def test_detectors_match_formula_oracle(seed):
    rng = random.Random(seed)
    nodes, edges = oracles.random_graph(rng, max_nodes=30, max_edges=60)
    g = make_graph(nodes, edges)
    ids = [i for i, _, _ in nodes]
    arcs = oracles.traversal_arcs(edges)

    y_true, y_pred = rng.choice(ids), rng.choice(ids)
    model_paths = [
        tuple(rng.choice(ids) for _ in range(rng.randint(1, 5)))
        for _ in range(rng.randint(0, 5))
    ]
    refs = []
    for _ in range(rng.randint(0, 3)):
        seq = [rng.choice(ids) for _ in range(rng.randint(1, 3))] + [y_true]
        refs.append(Path(tuple(seq), ("x",) * (len(seq) - 1)))
    case = make_case("c", y_true, y_pred, model_paths, refs)

    model_pairs = case.observed_pairs()
    exp_rel, exp_br, exp_miss = oracles.error_sets_oracle(
        ids,
        arcs,
        model_pairs,
        case.reference_entities(),
        case.observed_entities(),
        y_true,
        y_pred,
    )
    report = analyze_case(case, g)
    assert {(r.source, r.target) for r in report.relation_errors} == exp_rel
    assert {(r.source, r.target) for r in report.branch_errors} == exp_br
    assert {r.target for r in report.missing_errors} == exp_miss
    # missing errors never overlap observed entities nor the correct answer
    observed = case.observed_entities()
    for r in report.missing_errors:
        assert r.target not in observed
        assert r.target != y_true
