"""Cohort execution test: per-member outcomes, strict/lenient criteria,
self-consistency aggregation, and accuracy/rejection statistics."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .data_model import CohortInstance
from .dsl import Program
from .retriever import OUTCOME_REJECTED
from .reward import CohortExecutionSummary
from .runtime import ExecutionLimits, ExecutionResult, RetrieveEvent, execute

STRICT = "strict"
LENIENT = "lenient"

_THRESHOLDS = {STRICT: 5, LENIENT: 4}


@dataclass(frozen=True)
class EvalCriterion:
    kind: str

    def __post_init__(self):
        if self.kind not in _THRESHOLDS:
            raise ValueError(f"unknown criterion {self.kind!r}")

    @property
    def threshold(self) -> int:
        return _THRESHOLDS[self.kind]


STRICT_CRITERION = EvalCriterion(STRICT)
LENIENT_CRITERION = EvalCriterion(LENIENT)


@dataclass(frozen=True)
class MemberOutcome:
    answered_index: Optional[int]
    correct: bool
    rejected: bool
    dynamic_calls: int
    status: str

    @classmethod
    def from_result(cls, result: ExecutionResult, gold_index: int) -> "MemberOutcome":
        answered = result.answer if result.answered else None
        return cls(
            answered_index=answered,
            correct=result.answered and result.answer == gold_index,
            rejected=result.was_rejected,
            dynamic_calls=result.dynamic_retrieve_count,
            status=result.status,
        )


@dataclass(frozen=True)
class CohortOutcome:
    cohort_id: str
    members: tuple[MemberOutcome, ...]  # original first
    summary: CohortExecutionSummary
    traces: tuple[tuple[RetrieveEvent, ...], ...] = ()

    @property
    def n_correct(self) -> int:
        return self.summary.n_correct

    @property
    def n_rejected(self) -> int:
        return self.summary.n_rejected


def _check_signature(program: Program, cohort: CohortInstance) -> None:
    if program.param_names != cohort.template.parameter_names:
        raise ValueError(
            f"program params {list(program.param_names)} do not match template "
            f"params {list(cohort.template.parameter_names)}"
        )


def run_cohort(
    program: Program,
    cohort: CohortInstance,
    retriever,
    limits: ExecutionLimits = ExecutionLimits(),
    jobs: int = 1,
) -> CohortOutcome:
    """Execute the program independently on all 6 members.

    n_calls in the summary is the dynamic retrieve count on the original
    member; each member queries the retriever independently.
    """
    _check_signature(program, cohort)
    members = cohort.members

    def run_member(member) -> ExecutionResult:
        return execute(program, member.bindings, retriever, limits)

    fan_out = jobs > 1 and getattr(retriever, "concurrent_safe", False)
    if fan_out:
        with ThreadPoolExecutor(max_workers=min(jobs, len(members))) as pool:
            results = list(pool.map(run_member, members))
    else:
        results = [run_member(m) for m in members]

    outcomes = tuple(
        MemberOutcome.from_result(result, member.gold_index)
        for result, member in zip(results, members)
    )
    summary = CohortExecutionSummary(
        n_correct=sum(m.correct for m in outcomes),
        n_calls=results[0].dynamic_retrieve_count,
        n_rejected=sum(m.rejected for m in outcomes),
    )
    return CohortOutcome(
        cohort_id=cohort.cohort_id,
        members=outcomes,
        summary=summary,
        traces=tuple(r.trace for r in results),
    )


def apply_criterion(outcome: CohortOutcome, criterion: EvalCriterion) -> bool:
    return outcome.n_correct >= criterion.threshold


def self_consistency(
    programs: Sequence[Program],
    cohort: CohortInstance,
    retriever,
    limits: ExecutionLimits = ExecutionLimits(),
    jobs: int = 1,
) -> CohortOutcome:
    """Majority vote per member over k sampled programs.

    Failures are excluded from voting; a tie or all-failures member counts
    as incorrect. The consensus n_rejected (and n_calls) take the max over
    samples, the conservative reading.
    """
    if not programs:
        raise ValueError("need at least one program")
    sample_outcomes = [run_cohort(p, cohort, retriever, limits, jobs=jobs) for p in programs]

    members = []
    for index, member in enumerate(cohort.members):
        votes = Counter(
            s.members[index].answered_index
            for s in sample_outcomes
            if s.members[index].answered_index is not None
        )
        consensus = _majority(votes)
        members.append(
            MemberOutcome(
                answered_index=consensus,
                correct=consensus is not None and consensus == member.gold_index,
                rejected=any(s.members[index].rejected for s in sample_outcomes),
                dynamic_calls=max(s.members[index].dynamic_calls for s in sample_outcomes),
                status="consensus",
            )
        )
    members = tuple(members)
    summary = CohortExecutionSummary(
        n_correct=sum(m.correct for m in members),
        n_calls=max(s.summary.n_calls for s in sample_outcomes),
        n_rejected=max(s.summary.n_rejected for s in sample_outcomes),
    )
    return CohortOutcome(cohort_id=cohort.cohort_id, members=members, summary=summary)


def _majority(votes: Counter) -> Optional[int]:
    if not votes:
        return None
    ranked = votes.most_common()
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        return None  # tie-break toward incorrect
    return ranked[0][0]


@dataclass(frozen=True)
class DomainStats:
    pass_rate: float
    ci_halfwidth: float
    n: int

    def to_json(self) -> dict:
        return {"pass_rate": self.pass_rate, "ci_halfwidth": self.ci_halfwidth, "n": self.n}


@dataclass(frozen=True)
class AccuracyReport:
    per_domain: Mapping[str, DomainStats]
    overall: DomainStats
    z: float = 1.96

    def to_json(self) -> dict:
        return {
            "z": self.z,
            "overall": self.overall.to_json(),
            "per_domain": {d: s.to_json() for d, s in sorted(self.per_domain.items())},
        }


def wald_halfwidth(pass_rate: float, n: int, z: float = 1.96) -> float:
    return z * math.sqrt(pass_rate * (1.0 - pass_rate) / n)


def _stats(passes: int, n: int, z: float) -> DomainStats:
    rate = passes / n
    return DomainStats(pass_rate=rate, ci_halfwidth=wald_halfwidth(rate, n, z), n=n)


def aggregate(outcomes: Iterable[tuple[str, bool]], z: float = 1.96) -> AccuracyReport:
    """Per-domain and overall pass rates with Wald 95% halfwidths."""
    passes: Counter = Counter()
    totals: Counter = Counter()
    for domain, passed in outcomes:
        totals[domain] += 1
        passes[domain] += bool(passed)
    if not totals:
        raise ValueError("no outcomes to aggregate")
    per_domain = {d: _stats(passes[d], totals[d], z) for d in totals}
    return AccuracyReport(
        per_domain=per_domain,
        overall=_stats(sum(passes.values()), sum(totals.values()), z),
        z=z,
    )


@dataclass(frozen=True)
class RejectionStats:
    per_category: Mapping[str, tuple[int, int]]  # category -> (rejected, total)

    @property
    def overall(self) -> tuple[int, int]:
        rejected = sum(r for r, _ in self.per_category.values())
        total = sum(t for _, t in self.per_category.values())
        return rejected, total

    def rate(self, category: Optional[str] = None) -> float:
        rejected, total = self.per_category[category] if category else self.overall
        return rejected / total

    def to_json(self) -> dict:
        out = {
            category: {"rejected": r, "total": t, "rate": r / t}
            for category, (r, t) in sorted(self.per_category.items())
        }
        rejected, total = self.overall
        return {"per_category": out,
                "overall": {"rejected": rejected, "total": total, "rate": rejected / total}}


def rejection_stats(
    traces: Iterable[RetrieveEvent | dict],
    label: Callable[[str], str],
) -> RejectionStats:
    """Per-category rejection rates over a stream of retrieve events."""
    counts: dict[str, list[int]] = {}
    for event in traces:
        if isinstance(event, dict):
            question, outcome = event["q"], event["outcome"]
        else:
            question, outcome = event.rendered_question, event.outcome
        category = label(question)
        bucket = counts.setdefault(category, [0, 0])
        bucket[1] += 1
        bucket[0] += outcome == OUTCOME_REJECTED
    if not counts:
        raise ValueError("no events")
    return RejectionStats(per_category={c: (r, t) for c, (r, t) in counts.items()})
