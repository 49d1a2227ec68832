"""Cohort, template, and answer-key types plus JSONL ingestion and validation."""

from __future__ import annotations

import json
import re
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

COHORT_SIZE = 6  # 1 original + 5 variants
NUM_VARIANTS = COHORT_SIZE - 1

KNOWN_DOMAINS = ("arc-challenge", "arc-easy", "csqa", "strategyqa", "hotpotqa", "other")

_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z][A-Za-z0-9_]*)\}")


class SchemaError(ValueError):
    """A cohort record violates the JSONL schema or a type invariant."""

    def __init__(self, message: str, field_path: str = "", line: int | None = None):
        self.field_path = field_path
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        suffix = f" (at {field_path})" if field_path else ""
        super().__init__(f"{prefix}{message}{suffix}")


@dataclass(frozen=True)
class AbstractionTemplate:
    """Masked question plus the fixed inputs handed to the policy model."""

    template_id: str
    masked_question: str
    parameter_names: tuple[str, ...]
    options: tuple[str, ...]
    function_header: str
    domain_tag: str = "other"

    def __post_init__(self):
        placeholders = set(_PLACEHOLDER_RE.findall(self.masked_question))
        declared = set(self.parameter_names)
        if placeholders != declared:
            missing = sorted(placeholders - declared)
            extra = sorted(declared - placeholders)
            raise SchemaError(
                f"placeholder/parameter mismatch: in question only {missing}, "
                f"in parameters only {extra}",
                field_path="parameters",
            )
        if len(self.parameter_names) != len(declared):
            raise SchemaError("duplicate parameter names", field_path="parameters")
        if len(self.options) < 2:
            raise SchemaError("need at least 2 options", field_path="options")
        if any(not opt for opt in self.options):
            raise SchemaError("empty option text", field_path="options")
        if len(set(self.options)) != len(self.options):
            raise SchemaError("options must be pairwise distinct", field_path="options")
        header_params = _header_param_names(self.function_header)
        if header_params != self.parameter_names:
            raise SchemaError(
                f"function header params {list(header_params)} != "
                f"parameters {list(self.parameter_names)}",
                field_path="function_header",
            )


@dataclass(frozen=True)
class QuestionVariant:
    """One parameter binding with its instantiated question and gold answer."""

    bindings: Mapping[str, str]
    question_text: str
    gold_index: int


@dataclass(frozen=True)
class CohortInstance:
    """One original question plus its 5 surface variants under a shared template."""

    cohort_id: str
    template: AbstractionTemplate
    original: QuestionVariant
    variants: tuple[QuestionVariant, ...]

    def __post_init__(self):
        if len(self.variants) != NUM_VARIANTS:
            raise SchemaError(
                f"expected {NUM_VARIANTS} variants, got {len(self.variants)}",
                field_path="variants",
            )

    @property
    def members(self) -> tuple[QuestionVariant, ...]:
        """Original first, then the 5 variants."""
        return (self.original,) + self.variants


@dataclass
class MemberReport:
    template_match: bool
    gold_in_range: bool
    bindings_match: bool

    @property
    def ok(self) -> bool:
        return self.template_match and self.gold_in_range and self.bindings_match


@dataclass
class ValidationReport:
    cohort_id: str
    members: list[MemberReport] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(m.ok for m in self.members)


def _header_param_names(header: str) -> tuple[str, ...]:
    m = re.match(r"\s*def\s+answer\s*\((.*)\)\s*->\s*int\s*:?\s*$", header)
    if m is None:
        raise SchemaError(f"unparseable function header: {header!r}", field_path="function_header")
    inner = m.group(1).strip()
    if not inner:
        return ()
    names = []
    for part in inner.split(","):
        name = part.split(":")[0].strip()
        if not name.isidentifier():
            raise SchemaError(f"bad parameter {part.strip()!r} in header", field_path="function_header")
        names.append(name)
    return tuple(names)


def instantiate_template(template: AbstractionTemplate, bindings: Mapping[str, str]) -> str:
    """Substitute every {Placeholder} in the masked question with its binding."""
    keys = set(bindings)
    declared = set(template.parameter_names)
    if keys != declared:
        raise SchemaError(
            f"binding keys {sorted(keys)} != parameters {sorted(declared)}",
            field_path="bindings",
        )
    return _PLACEHOLDER_RE.sub(lambda m: str(bindings[m.group(1)]), template.masked_question)


def _normalize_question(text: str) -> str:
    """Collapse whitespace runs and drop trailing punctuation for comparisons."""
    collapsed = " ".join(text.split())
    return collapsed.rstrip(string.punctuation + " ")


def validate_cohort(cohort: CohortInstance) -> ValidationReport:
    """Check template-match, gold range, and binding keys for every member."""
    report = ValidationReport(cohort_id=cohort.cohort_id)
    declared = set(cohort.template.parameter_names)
    n_options = len(cohort.template.options)
    for member in cohort.members:
        bindings_match = set(member.bindings) == declared
        if bindings_match:
            expected = instantiate_template(cohort.template, member.bindings)
            template_match = _normalize_question(expected) == _normalize_question(member.question_text)
        else:
            template_match = False
        gold_in_range = 0 <= member.gold_index < n_options
        report.members.append(MemberReport(template_match, gold_in_range, bindings_match))
    return report


def _gold_to_index(gold, options: tuple[str, ...], line: int) -> int:
    """Accept either an option index or an answer letter ('A', 'B', ...)."""
    if isinstance(gold, bool):
        raise SchemaError("gold must be an index or letter, not a bool", "gold", line)
    if isinstance(gold, int):
        index = gold
    elif isinstance(gold, str) and len(gold) == 1 and gold.upper() in string.ascii_uppercase:
        index = string.ascii_uppercase.index(gold.upper())
    else:
        raise SchemaError(f"unrecognized gold answer {gold!r}", "gold", line)
    if not 0 <= index < len(options):
        raise SchemaError(f"gold index {index} out of range for {len(options)} options", "gold", line)
    return index


def _parse_member(obj: dict, options: tuple[str, ...], field_path: str, line: int) -> QuestionVariant:
    if not isinstance(obj, dict):
        raise SchemaError("member must be an object", field_path, line)
    for key in ("bindings", "question", "gold"):
        if key not in obj:
            raise SchemaError(f"missing key {key!r}", f"{field_path}.{key}", line)
    bindings = obj["bindings"]
    if not isinstance(bindings, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in bindings.items()
    ):
        raise SchemaError("bindings must map strings to strings", f"{field_path}.bindings", line)
    if not isinstance(obj["question"], str):
        raise SchemaError("question must be a string", f"{field_path}.question", line)
    gold = _gold_to_index(obj["gold"], options, line)
    return QuestionVariant(bindings=dict(bindings), question_text=obj["question"], gold_index=gold)


def parse_cohort(obj: dict, line: int | None = None) -> CohortInstance:
    """Build one CohortInstance from a decoded JSONL record."""
    required = ("cohort_id", "domain", "masked_question", "parameters", "options",
                "function_header", "original", "variants")
    for key in required:
        if key not in obj:
            raise SchemaError(f"missing key {key!r}", key, line)
    options = obj["options"]
    if not isinstance(options, list) or not all(isinstance(o, str) for o in options):
        raise SchemaError("options must be a list of strings", "options", line)
    parameters = obj["parameters"]
    if not isinstance(parameters, list) or not all(isinstance(p, str) for p in parameters):
        raise SchemaError("parameters must be a list of strings", "parameters", line)
    domain = obj["domain"]
    if domain not in KNOWN_DOMAINS:
        raise SchemaError(f"unknown domain {domain!r}, expected one of {KNOWN_DOMAINS}", "domain", line)
    try:
        template = AbstractionTemplate(
            template_id=str(obj["cohort_id"]),
            masked_question=obj["masked_question"],
            parameter_names=tuple(parameters),
            options=tuple(options),
            function_header=obj["function_header"],
            domain_tag=domain,
        )
    except SchemaError as exc:
        raise SchemaError(str(exc), exc.field_path, line) from exc
    original = _parse_member(obj["original"], template.options, "original", line)
    raw_variants = obj["variants"]
    if not isinstance(raw_variants, list):
        raise SchemaError("variants must be a list", "variants", line)
    if len(raw_variants) != NUM_VARIANTS:
        raise SchemaError(
            f"expected {NUM_VARIANTS} variants, got {len(raw_variants)}", "variants", line
        )
    variants = tuple(
        _parse_member(v, template.options, f"variants[{i}]", line)
        for i, v in enumerate(raw_variants)
    )
    try:
        return CohortInstance(
            cohort_id=str(obj["cohort_id"]),
            template=template,
            original=original,
            variants=variants,
        )
    except SchemaError as exc:
        raise SchemaError(str(exc), exc.field_path, line) from exc


def load_cohorts(path: str | Path) -> list[CohortInstance]:
    """Load all cohorts from a JSONL file, reporting line numbers on failure."""
    cohorts = []
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"malformed JSON: {exc.msg}", line=lineno) from exc
            cohorts.append(parse_cohort(obj, line=lineno))
    return cohorts
