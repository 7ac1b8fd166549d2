"""Assistance: prompt construction, dispatch, and anchored cards.

Word events get a definition-in-context or a translation, paragraph
events a simplification. Templates live in an overridable template file
so prompt iteration never needs a rebuild; the shipped defaults are
embedded below in the same format.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from .classifier import PARAGRAPH_COMPREHENSION, UNFAMILIAR_WORD, DifficultyEvent
from .llm import LLMClient, LLMTimeout, LLMTransportError

MODE_DEFINITION = "definition"
MODE_TRANSLATION = "translation"
MODE_AUTO = "auto"

KIND_DEFINITION = "definition"
KIND_TRANSLATION = "translation"
KIND_SIMPLIFICATION = "simplification"

ELLIPSIS = "…"

DEFAULT_TEMPLATES = """\
[DEFINITION]
Give a one sentence, context-specific definition of the word "{{word}}"
exactly as it is used in this sentence: "{{context}}".
Answer in at most {{max_chars}} characters and do not repeat the sentence.

[TRANSLATION]
Translate the word "{{word}}" into {{target_language}}. Use the sentence
"{{context}}" to pick the right sense, and give only the translation with
a short gloss. Answer in at most {{max_chars}} characters.

[SIMPLIFICATION]
Rewrite the following paragraph in a more accessible way, at roughly half
the syntactic complexity, preserving its meaning:
"{{paragraph}}"
Answer in at most {{max_chars}} characters.
"""


class AssistError(Exception):
    """Base class; every assist failure names the anchor it was for."""

    def __init__(self, message: str, anchor_kind: str, anchor_id: int):
        super().__init__(message)
        self.anchor_kind = anchor_kind
        self.anchor_id = anchor_id


class AssistTimeout(AssistError):
    pass


class AssistTransportError(AssistError):
    pass


class AssistEmptyResponse(AssistError):
    pass


class PromptError(ValueError):
    pass


@dataclass(frozen=True)
class UserPrefs:
    assistance_mode: str = MODE_DEFINITION
    target_language: Optional[str] = None
    max_card_chars: int = 300

    def __post_init__(self):
        if self.assistance_mode not in (MODE_DEFINITION, MODE_TRANSLATION, MODE_AUTO):
            raise ValueError(f"unknown assistance mode {self.assistance_mode!r}")
        if self.assistance_mode == MODE_TRANSLATION and not self.target_language:
            raise ValueError("translation mode requires a target language")
        if self.max_card_chars < 40:
            raise ValueError("max_card_chars must be >= 40")


@dataclass(frozen=True)
class AssistRequest:
    event: DifficultyEvent
    anchor_text: str
    context: str
    prefs: UserPrefs

    def __post_init__(self):
        if not self.anchor_text or not self.context:
            raise ValueError("anchor_text and context must be non-empty")
        if self.event.kind == UNFAMILIAR_WORD and self.anchor_text not in self.context:
            raise ValueError("context must contain the anchor word")

    @property
    def anchor_kind(self) -> str:
        return "word" if self.event.kind == UNFAMILIAR_WORD else "paragraph"


@dataclass(frozen=True)
class AssistanceCard:
    card_id: int
    anchor_kind: str  # "word" | "paragraph"
    anchor_id: int
    kind: str  # definition | translation | simplification
    content: str
    source_model: str
    t_created: float


@dataclass(frozen=True)
class RetryPolicy:
    """``max_attempts`` counts every try including the first. Only
    timeouts are retried; transport failures surface immediately."""

    max_attempts: int = 3
    backoff_s: float = 0.0

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


def parse_templates(text: str) -> Dict[str, str]:
    """Parse a template file: ``[NAME]`` section headers, body until the
    next header. Required sections: DEFINITION, TRANSLATION, SIMPLIFICATION."""
    sections: Dict[str, List[str]] = {}
    current: Optional[str] = None
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]") and len(stripped) > 2:
            current = stripped[1:-1]
            sections[current] = []
        elif current is not None:
            sections[current].append(line)
    out = {name: "\n".join(body).strip() for name, body in sections.items()}
    for required in ("DEFINITION", "TRANSLATION", "SIMPLIFICATION"):
        if required not in out or not out[required]:
            raise PromptError(f"template file is missing section [{required}]")
    return out


def load_templates(path: Optional[str] = None) -> Dict[str, str]:
    if path is None:
        return parse_templates(DEFAULT_TEMPLATES)
    with open(path, "r", encoding="utf-8") as fh:
        return parse_templates(fh.read())


def _dominant_script(text: str) -> str:
    """Crude script detector over alphabetic characters: LATIN, CYRILLIC,
    GREEK, ARABIC, HEBREW, CJK, or OTHER."""
    counts: Dict[str, int] = {}
    for ch in text:
        if not ch.isalpha():
            continue
        try:
            name = unicodedata.name(ch)
        except ValueError:
            continue
        for script in ("LATIN", "CYRILLIC", "GREEK", "ARABIC", "HEBREW"):
            if script in name:
                counts[script] = counts.get(script, 0) + 1
                break
        else:
            if "CJK" in name or "HIRAGANA" in name or "KATAKANA" in name or "HANGUL" in name:
                counts["CJK"] = counts.get("CJK", 0) + 1
            else:
                counts["OTHER"] = counts.get("OTHER", 0) + 1
    if not counts:
        return "OTHER"
    return max(counts.items(), key=lambda kv: (kv[1], kv[0]))[0]


_LANGUAGE_SCRIPTS = {
    "LATIN": {"en", "de", "fr", "es", "it", "pt", "nl", "sv", "no", "da", "fi",
              "pl", "cs", "tr", "sq", "ro", "hu", "hr", "id", "vi"},
    "CYRILLIC": {"ru", "uk", "bg", "sr", "mk"},
    "GREEK": {"el"},
    "ARABIC": {"ar", "fa", "ur"},
    "HEBREW": {"he"},
    "CJK": {"zh", "ja", "ko"},
}


def _script_for_language(tag: str) -> str:
    primary = tag.lower().split("-")[0]
    for script, langs in _LANGUAGE_SCRIPTS.items():
        if primary in langs:
            return script
    return "OTHER"


def resolve_kind(req: AssistRequest) -> str:
    """Pick the card kind for a request.

    Paragraph events always simplify. Word events follow prefs; auto mode
    translates when the anchor's script differs from the target
    language's usual script (a reader hitting foreign-script text most
    likely wants a translation), else defines.
    """
    if req.event.kind == PARAGRAPH_COMPREHENSION:
        return KIND_SIMPLIFICATION
    mode = req.prefs.assistance_mode
    if mode == MODE_DEFINITION:
        return KIND_DEFINITION
    if mode == MODE_TRANSLATION:
        return KIND_TRANSLATION
    if not req.prefs.target_language:
        return KIND_DEFINITION
    anchor_script = _dominant_script(req.anchor_text)
    target_script = _script_for_language(req.prefs.target_language)
    return KIND_TRANSLATION if anchor_script != target_script else KIND_DEFINITION


def build_prompt(req: AssistRequest, templates: Optional[Dict[str, str]] = None) -> str:
    """Deterministic template instantiation; identical requests yield
    byte-identical prompts."""
    templates = templates if templates is not None else load_templates()
    kind = resolve_kind(req)
    if kind == KIND_TRANSLATION and not req.prefs.target_language:
        raise PromptError("translation requested without a target language")
    section = {
        KIND_DEFINITION: "DEFINITION",
        KIND_TRANSLATION: "TRANSLATION",
        KIND_SIMPLIFICATION: "SIMPLIFICATION",
    }[kind]
    prompt = templates[section]
    fills = {
        "{{word}}": req.anchor_text,
        "{{context}}": req.context,
        "{{paragraph}}": req.anchor_text if kind == KIND_SIMPLIFICATION else req.context,
        "{{target_language}}": req.prefs.target_language or "",
        "{{max_chars}}": str(req.prefs.max_card_chars),
    }
    for placeholder, value in fills.items():
        prompt = prompt.replace(placeholder, value)
    return prompt


def truncate_reply(text: str, max_chars: int) -> str:
    """Cap the reply at max_chars, cutting back to a word boundary and
    marking the cut with an ellipsis. The result never exceeds the cap."""
    text = text.strip()
    if len(text) <= max_chars:
        return text
    head = text[: max_chars - 1]
    cut = head.rsplit(None, 1)[0] if any(c.isspace() for c in head) else head
    return cut.rstrip() + ELLIPSIS


def request_assistance(
    req: AssistRequest,
    client: LLMClient,
    policy: RetryPolicy = RetryPolicy(),
    templates: Optional[Dict[str, str]] = None,
    card_id: int = 0,
) -> AssistanceCard:
    """Build the prompt, call the client under the retry policy, and wrap
    the (truncated) reply in a card anchored to the event."""
    prompt = build_prompt(req, templates)
    anchor_kind = req.anchor_kind
    anchor_id = req.event.anchor_id
    last_timeout: Optional[Exception] = None
    reply: Optional[str] = None
    for attempt in range(policy.max_attempts):
        try:
            reply = client.complete(prompt)
            break
        except LLMTimeout as e:
            last_timeout = e
            if attempt + 1 < policy.max_attempts and policy.backoff_s > 0:
                import time

                time.sleep(policy.backoff_s * (2**attempt))
        except LLMTransportError as e:
            raise AssistTransportError(str(e), anchor_kind, anchor_id) from e
    if reply is None:
        raise AssistTimeout(
            f"no reply after {policy.max_attempts} attempt(s): {last_timeout}",
            anchor_kind,
            anchor_id,
        )
    content = truncate_reply(reply, req.prefs.max_card_chars)
    if not content:
        raise AssistEmptyResponse("model returned an empty reply", anchor_kind, anchor_id)
    return AssistanceCard(
        card_id=card_id,
        anchor_kind=anchor_kind,
        anchor_id=anchor_id,
        kind=resolve_kind(req),
        content=content,
        source_model=client.model_name,
        t_created=req.event.t,
    )


@dataclass(frozen=True)
class DispatchRecord:
    anchor_kind: str
    anchor_id: int
    t: float
    status: str  # "in_flight" | "delivered" | "failed"


def should_dispatch(
    history: Sequence[DispatchRecord], event: DifficultyEvent, cooldown_ms: float
) -> bool:
    """False iff a card for the same anchor was delivered within the
    cooldown or a request for it is still in flight. Failed requests do
    not block a retry."""
    anchor_kind = "word" if event.kind == UNFAMILIAR_WORD else "paragraph"
    anchor = (anchor_kind, event.anchor_id)
    open_flights = set()
    last_delivered: Optional[float] = None
    for rec in history:
        if (rec.anchor_kind, rec.anchor_id) != anchor:
            continue
        if rec.status == "in_flight":
            open_flights.add(rec.t)
        elif rec.status in ("delivered", "failed"):
            open_flights.clear()
            if rec.status == "delivered":
                last_delivered = rec.t
    if open_flights:
        return False
    if last_delivered is not None and event.t - last_delivered < cooldown_ms:
        return False
    return True
