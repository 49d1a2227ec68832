import pytest

from cohortqa.data_model import (
    AbstractionTemplate,
    CohortInstance,
    QuestionVariant,
    instantiate_template,
)
from cohortqa.dsl import ValueKind, parse_program
from cohortqa.evaluation import (
    LENIENT_CRITERION,
    STRICT_CRITERION,
    CohortOutcome,
    EvalCriterion,
    MemberOutcome,
    aggregate,
    apply_criterion,
    rejection_stats,
    run_cohort,
    self_consistency,
    wald_halfwidth,
)
from cohortqa.retriever import FactEntry, FactTable, MockRetriever, normalize_question
from cohortqa.reward import CohortExecutionSummary

HEADER = "def answer(X: str) -> int"

ENTITIES = ["Apollo", "Zeus", "Hera", "Ares", "Hermes", "Athena"]
REALITY = [True, False, True, True, False, True]


def _cohort():
    template = AbstractionTemplate(
        template_id="t", masked_question="Is {X} real?", parameter_names=("X",),
        options=("No", "Yes"), function_header=HEADER, domain_tag="other",
    )
    members = [
        QuestionVariant(
            bindings={"X": e},
            question_text=instantiate_template(template, {"X": e}),
            gold_index=int(real),
        )
        for e, real in zip(ENTITIES, REALITY)
    ]
    return CohortInstance(
        cohort_id="pantheon", template=template,
        original=members[0], variants=tuple(members[1:]),
    )


def _retr(missing=()):
    entries = {
        normalize_question(f"Is {e} real?"): FactEntry(ValueKind.BOOL, real)
        for e, real in zip(ENTITIES, REALITY)
        if e not in missing
    }
    return MockRetriever(FactTable(entries))


def _prog(body):
    indented = "\n".join("    " + line for line in body.strip().split("\n"))
    return parse_program(f"{HEADER}:\n{indented}\n", HEADER)


LOOKUP = _prog(
    'real = retrieve(f"Is {X} real?", bool)\n'
    'near = retrieve(f"Is {X} real?", bool)\n'
    "if real:\n    return 1\nreturn 0"
)
ALWAYS_YES = _prog("return 1")
ALWAYS_NO = _prog("return 0")
ALWAYS_FAILS = _prog("v = 0 - 1\nreturn v")


def test_run_cohort_perfect_program():
    outcome = run_cohort(LOOKUP, _cohort(), _retr())
    assert outcome.n_correct == 6
    assert outcome.n_rejected == 0
    assert outcome.summary.n_calls == 2  # dynamic calls on the original member
    assert apply_criterion(outcome, STRICT_CRITERION)


def test_run_cohort_shortcut_program():
    outcome = run_cohort(ALWAYS_YES, _cohort(), _retr())
    assert outcome.n_correct == 4  # matches every gold=1 member
    assert outcome.summary.n_calls == 0
    assert not apply_criterion(outcome, STRICT_CRITERION)
    assert apply_criterion(outcome, LENIENT_CRITERION)


def test_run_cohort_counts_rejected_members_not_calls():
    # Apollo's fact is withheld: both retrieves on that member are rejected,
    # but n_rejected counts members with at least one rejection
    outcome = run_cohort(LOOKUP, _cohort(), _retr(missing=("Apollo",)))
    assert outcome.members[0].rejected
    assert outcome.n_rejected == 1
    assert outcome.n_correct == 5  # default False answers 0 against gold 1


def test_run_cohort_signature_mismatch_raises():
    other = parse_program("def answer(Y: str) -> int:\n    return 0\n",
                          "def answer(Y: str) -> int")
    with pytest.raises(ValueError):
        run_cohort(other, _cohort(), _retr())


def test_run_cohort_parallel_matches_serial():
    serial = run_cohort(LOOKUP, _cohort(), _retr(missing=("Zeus",)), jobs=1)
    parallel = run_cohort(LOOKUP, _cohort(), _retr(missing=("Zeus",)), jobs=4)
    assert serial.members == parallel.members
    assert serial.summary == parallel.summary


# --- criteria -------------------------------------------------------------

def test_criterion_truth_table():
    for n_correct in range(7):
        outcome = CohortOutcome(
            cohort_id="c", members=(),
            summary=CohortExecutionSummary(n_correct, 0, 0),
        )
        assert apply_criterion(outcome, STRICT_CRITERION) == (n_correct >= 5)
        assert apply_criterion(outcome, LENIENT_CRITERION) == (n_correct >= 4)
        # strict pass implies lenient pass
        if apply_criterion(outcome, STRICT_CRITERION):
            assert apply_criterion(outcome, LENIENT_CRITERION)


def test_unknown_criterion_rejected():
    with pytest.raises(ValueError):
        EvalCriterion("fuzzy")


# --- self-consistency -----------------------------------------------------

def test_self_consistency_majority_wins():
    outcome = self_consistency([LOOKUP, LOOKUP, ALWAYS_NO], _cohort(), _retr())
    assert outcome.n_correct == 6


def test_self_consistency_tie_counts_incorrect():
    outcome = self_consistency([ALWAYS_YES, ALWAYS_NO], _cohort(), _retr())
    assert outcome.n_correct == 0
    assert all(m.answered_index is None for m in outcome.members)


def test_self_consistency_failures_excluded_from_vote():
    outcome = self_consistency([LOOKUP, ALWAYS_FAILS, ALWAYS_FAILS], _cohort(), _retr())
    assert outcome.n_correct == 6


def test_self_consistency_all_failures_incorrect():
    outcome = self_consistency([ALWAYS_FAILS, ALWAYS_FAILS], _cohort(), _retr())
    assert outcome.n_correct == 0


def test_self_consistency_rejection_is_any_sample():
    outcome = self_consistency([LOOKUP, ALWAYS_YES], _cohort(), _retr(missing=("Hera",)))
    rejected_members = [m.rejected for m in outcome.members]
    assert rejected_members == [False, False, True, False, False, False]
    assert outcome.n_rejected == 1


def test_self_consistency_requires_programs():
    with pytest.raises(ValueError):
        self_consistency([], _cohort(), _retr())


# --- statistics -----------------------------------------------------------

def test_wald_halfwidth_formula():
    import math

    for p, n in [(0.5, 100), (0.19, 500), (0.0, 10), (1.0, 7)]:
        assert wald_halfwidth(p, n) == pytest.approx(
            1.96 * math.sqrt(p * (1 - p) / n), abs=1e-12
        )


def test_aggregate_per_domain_and_overall():
    outcomes = [("a", True)] * 3 + [("a", False)] + [("b", True)] * 2
    report = aggregate(outcomes)
    assert report.per_domain["a"].pass_rate == pytest.approx(0.75)
    assert report.per_domain["a"].n == 4
    assert report.per_domain["b"].pass_rate == 1.0
    assert report.overall.pass_rate == pytest.approx(5 / 6)
    assert report.overall.n == 6


def test_aggregate_empty_raises():
    with pytest.raises(ValueError):
        aggregate([])


def test_rejection_stats_from_dicts():
    events = [
        {"q": "Is Apollo real?", "outcome": "rejected"},
        {"q": "Is Zeus real?", "outcome": "value"},
        {"q": "Who wrote the Iliad?", "outcome": "value"},
    ]
    labels = {"is apollo real": "myth", "is zeus real": "myth"}
    stats = rejection_stats(
        events, lambda q: labels.get(normalize_question(q), "other")
    )
    assert stats.per_category["myth"] == (1, 2)
    assert stats.per_category["other"] == (0, 1)
    assert stats.overall == (1, 3)
    assert stats.rate("myth") == pytest.approx(0.5)
    assert stats.rate() == pytest.approx(1 / 3)


def test_rejection_stats_from_trace_events():
    outcome = run_cohort(LOOKUP, _cohort(), _retr(missing=("Apollo",)))
    events = [e for trace in outcome.traces for e in trace]
    stats = rejection_stats(events, lambda q: "all")
    assert stats.per_category["all"] == (2, 12)


def test_rejection_stats_empty_raises():
    with pytest.raises(ValueError):
        rejection_stats([], lambda q: "all")
