"""Retriever backends: a deterministic fact-table mock with a rule-based
rejection filter, and a remote chat-completion client speaking the few-shot
fact-lookup protocol."""

from __future__ import annotations

import json
import re
import string
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol

import requests

from .dsl import ValueKind

OUTCOME_VALUE = "value"
OUTCOME_REJECTED = "rejected"
OUTCOME_ERROR = "error"

SIMPLE = "simple"
COMPLEX = "complex"


@dataclass(frozen=True)
class RetrieveRequest:
    question: str
    kind: ValueKind


@dataclass(frozen=True)
class RetrieveResponse:
    outcome: str  # value | rejected | error
    value: object = None
    reason: str = ""

    @classmethod
    def of_value(cls, value) -> "RetrieveResponse":
        return cls(OUTCOME_VALUE, value=value)

    @classmethod
    def rejected(cls) -> "RetrieveResponse":
        return cls(OUTCOME_REJECTED)

    @classmethod
    def error(cls, reason: str) -> "RetrieveResponse":
        return cls(OUTCOME_ERROR, reason=reason)


class Retriever(Protocol):
    #: whether one instance may serve concurrent executions
    concurrent_safe: bool

    def retrieve(self, request: RetrieveRequest) -> RetrieveResponse: ...


def normalize_question(text: str) -> str:
    """Case-fold, collapse whitespace, strip terminal punctuation."""
    collapsed = " ".join(text.split()).casefold()
    return collapsed.rstrip(string.punctuation + " ")


def _value_conforms(kind: ValueKind, value) -> bool:
    if kind is ValueKind.BOOL:
        return isinstance(value, bool)
    if kind is ValueKind.INT:
        return isinstance(value, int) and not isinstance(value, bool)
    if kind is ValueKind.FLOAT:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind is ValueKind.STR:
        return isinstance(value, str)
    if kind is ValueKind.LIST:
        return isinstance(value, list) and all(
            isinstance(v, (str, int, float, bool)) for v in value
        )
    return False


# --- complexity filter ---------------------------------------------------

# numeric thresholds ("more than one X") are not two-lookup comparatives
_THRESHOLD_RE = re.compile(
    r"\b(more|less|fewer)\s+than\s+(one|two|three|four|five|six|seven|eight|nine|ten|\d+)\b"
)

_COMPLEX_PATTERNS = (
    # (a) comparative between two lookups
    r"\b(older|younger|taller|shorter|bigger|smaller|larger|heavier|lighter"
    r"|greater|higher|lower|faster|slower|earlier|later|more|less|fewer)\s+than\b",
    r"\bimmediately\s+(after|before)\b",
    # (b) lookup applied to a superlative-defined entity
    r"\b(of|in)\s+the\s+(largest|biggest|smallest|greatest|highest|lowest"
    r"|longest|shortest|oldest|youngest|best|worst|most|least)\b",
    # (c) conjunction of two entity predicates
    r"\band\b.+\bboth\b",
    r"\bboth\b.+\band\b",
    # (d) embedded sub-question markers
    r"\bbetween\s+the\b.+\band\s+the\b",
    # hypothetical-capability questions are not single-step lookups
    r"^can\b",
    # existence checks over records pinned to a specific year
    r"\bany\b.+\b\d{3,4}\b",
)
_COMPLEX_RES = tuple(re.compile(p) for p in _COMPLEX_PATTERNS)


def classify_complexity(question: str) -> str:
    """Label a question SIMPLE or COMPLEX per the mock rejection filter rules."""
    text = _THRESHOLD_RE.sub(" ", normalize_question(question))
    for pattern in _COMPLEX_RES:
        if pattern.search(text):
            return COMPLEX
    return SIMPLE


# --- mock backend --------------------------------------------------------

@dataclass(frozen=True)
class FactEntry:
    kind: ValueKind
    value: object


class FactTable:
    """Immutable normalized-question -> typed-value store."""

    def __init__(self, entries: dict[str, FactEntry]):
        self._entries = dict(entries)

    def __len__(self):
        return len(self._entries)

    def lookup(self, question: str) -> Optional[FactEntry]:
        return self._entries.get(normalize_question(question))

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "FactTable":
        entries: dict[str, FactEntry] = {}
        with open(path, encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                if not raw.strip():
                    continue
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
                try:
                    kind = ValueKind.from_name(obj["kind"])
                except KeyError:
                    raise ValueError(f"{path}:{lineno}: bad kind {obj.get('kind')!r}") from None
                value = obj["value"]
                if not _value_conforms(kind, value):
                    raise ValueError(
                        f"{path}:{lineno}: value {value!r} does not conform to kind {kind.value}"
                    )
                entries[normalize_question(obj["q"])] = FactEntry(kind, value)
        return cls(entries)


class MockRetriever:
    """Deterministic oracle: exact table hit, otherwise a conservative reject.

    Both complex questions and simple-but-unknown ones are rejected; an honest
    offline oracle cannot answer facts it does not hold.
    """

    concurrent_safe = True

    def __init__(self, table: FactTable):
        self.table = table

    def retrieve(self, request: RetrieveRequest) -> RetrieveResponse:
        if not request.question:
            return RetrieveResponse.error("empty question")
        entry = self.table.lookup(request.question)
        if entry is None:
            return RetrieveResponse.rejected()
        if entry.kind is not request.kind:
            return RetrieveResponse.error(
                f"kind mismatch: table has {entry.kind.value}, requested {request.kind.value}"
            )
        value = list(entry.value) if request.kind is ValueKind.LIST else entry.value
        return RetrieveResponse.of_value(value)


# --- few-shot rejection prompt -------------------------------------------

REJECTION_SYSTEM_PROMPT = (
    "You are a fact-lookup assistant. For each user query, first decide if it's "
    "a simple, single-step fact lookup without solving it and then return a JSON "
    'object with exactly one key, "answer", wrapped in ```json ...```. Match the '
    "type specified in parentheses (int, str, list, bool). If a query requires "
    "more than a straightforward fact check or true/false lookup—for example, "
    'multi-step reasoning or subjective judgment—reply with "idk".'
)


@dataclass(frozen=True)
class RejectionExemplar:
    question: str
    return_type: str
    explanation: str
    answer: object  # "idk" marks a rejection

    @property
    def is_rejection(self) -> bool:
        return self.answer == "idk"

    @property
    def reply(self) -> str:
        payload = json.dumps({"answer": self.answer}, ensure_ascii=False)
        return f"[Explanation] {self.explanation}\n```json\n{payload}\n```"


REJECTION_EXEMPLARS: tuple[RejectionExemplar, ...] = (
    RejectionExemplar(
        "Who finished immediately after the winner at the 1992 Olympic 100m final?",
        "str",
        "You must identify the winner, then determine who came second—this isn’t single-step.",
        "idk",
    ),
    RejectionExemplar(
        "How many planets are in the solar system?", "int", "Simple fact check.", 8
    ),
    RejectionExemplar(
        "What is the profession of Michael Jackson?",
        "str",
        "Single well-known profession of a public figure.",
        "singer",
    ),
    RejectionExemplar(
        "Who has more than one Nobel Prize?",
        "list",
        "Factual list of individuals with multiple Nobel Prizes.",
        ["John Bardeen", "Frederick Sanger", "Linus Pauling", "Marie Curie"],
    ),
    RejectionExemplar(
        "Is the CEO of Tesla older than the current President of France?",
        "bool",
        "Requires fetching and comparing two birthdates—multi-step.",
        "idk",
    ),
    RejectionExemplar(
        "Is the Eiffel Tower located in Paris, France?",
        "bool",
        "Single-step landmark location.",
        False,
    ),
    RejectionExemplar(
        "Did England win any Olympic gold medals in 1800?",
        "bool",
        "Must check when the modern Olympics began and then medal records—multi-step.",
        "idk",
    ),
    RejectionExemplar(
        "What is the population of the largest country entirely south of the equator?",
        "int",
        "Identify the country then lookup its population—multi-step.",
        "idk",
    ),
    RejectionExemplar(
        "List the U.S. states admitted to the Union between the first and the last "
        "of the original 13 colonies.",
        "list",
        "Order states by admission date and filter—multi-step.",
        "idk",
    ),
    RejectionExemplar(
        "Can food be cooked in the cosmic microwave background?",
        "bool",
        "Must compare CMB temperature (~2.7 K) to cooking physics—multi-step.",
        "idk",
    ),
    RejectionExemplar(
        "Are Waris Hussein and Mathieu Kassovitz both actors?",
        "bool",
        "Fetch each person’s profession and compare—multi-step.",
        "idk",
    ),
)


def build_rejection_prompt(request: RetrieveRequest) -> list[dict[str, str]]:
    """Full few-shot message sequence ending with `{question} ({type})`."""
    messages = [{"role": "system", "content": REJECTION_SYSTEM_PROMPT}]
    for ex in REJECTION_EXEMPLARS:
        messages.append({"role": "user", "content": f"{ex.question} ({ex.return_type})"})
        messages.append({"role": "assistant", "content": ex.reply})
    messages.append(
        {"role": "user", "content": f"{request.question} ({request.kind.value})"}
    )
    return messages


_FENCE_RE = re.compile(r"```json\s*(.*?)```", re.DOTALL)


def parse_llm_reply(raw: str, kind: ValueKind) -> RetrieveResponse:
    """Decode one assistant reply under the fact-lookup protocol.

    Total: every input maps to exactly one of value / rejected / error.
    """
    blocks = _FENCE_RE.findall(raw)
    if not blocks:
        return RetrieveResponse.error("no fenced json block")
    try:
        obj = json.loads(blocks[-1])
    except json.JSONDecodeError as exc:
        return RetrieveResponse.error(f"bad json in fenced block: {exc.msg}")
    if not isinstance(obj, dict) or set(obj) != {"answer"}:
        return RetrieveResponse.error('reply must be an object with the single key "answer"')
    answer = obj["answer"]
    if answer == "idk":
        return RetrieveResponse.rejected()
    if not _value_conforms(kind, answer):
        return RetrieveResponse.error(
            f"kind mismatch: {answer!r} is not a {kind.value}"
        )
    if kind is ValueKind.FLOAT:
        answer = float(answer)
    return RetrieveResponse.of_value(answer)


# --- remote backend ------------------------------------------------------

@dataclass
class RemoteRetrieverConfig:
    endpoint: str
    model: str
    temperature: float = 0.7
    timeout_s: float = 30.0
    max_retries: int = 3
    backoff_base_s: float = 0.5
    max_in_flight: int = 8

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


class RemoteRetriever:
    """JSON-over-HTTP chat-completion client with retry/backoff."""

    concurrent_safe = True

    def __init__(self, config: RemoteRetrieverConfig, session: requests.Session | None = None):
        self.config = config
        self._session = session or requests.Session()
        self._gate = threading.BoundedSemaphore(config.max_in_flight)

    def retrieve(self, request: RetrieveRequest) -> RetrieveResponse:
        if not request.question:
            return RetrieveResponse.error("empty question")
        payload = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": build_rejection_prompt(request),
        }
        last_reason = "no attempt made"
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(self.config.backoff_base_s * 2 ** (attempt - 1))
            try:
                with self._gate:
                    resp = self._session.post(
                        self.config.endpoint, json=payload, timeout=self.config.timeout_s
                    )
            except requests.RequestException as exc:
                last_reason = f"transport failure: {exc}"
                continue
            if resp.status_code >= 500:
                last_reason = f"server error {resp.status_code}"
                continue
            if resp.status_code != 200:
                return RetrieveResponse.error(f"http {resp.status_code}")
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError):
                return RetrieveResponse.error("malformed completion response")
            if not isinstance(content, str):
                return RetrieveResponse.error("completion content is not text")
            return parse_llm_reply(content, request.kind)
        return RetrieveResponse.error(last_reason)
