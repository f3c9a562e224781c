"""Synthesis-paragraph classification.

Two routes: a deterministic heuristic over cue groups (runs offline,
used by default) and an external text-completion client speaking a
documented yes/no completion grammar. Tests never call a live endpoint.
"""
from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .corpus import Paragraph
from .errors import MalformedCompletion, TransportError
from .extract import (
    FORMULA_PATTERN,
    EntityType,
    Gazetteer,
    default_gazetteers,
    find_formula_spans,
    find_quantity_spans,
    iter_gazetteer_matches,
)


@dataclass(frozen=True)
class CueWeights:
    """Relative weight of each cue group in the heuristic score."""

    action_verb: float = 1.0
    quantity: float = 1.0
    chemical_formula: float = 1.0
    medium: float = 1.0  # vessel or solvent gazetteer hit

    def total(self) -> float:
        return self.action_verb + self.quantity + self.chemical_formula + self.medium


@dataclass(frozen=True)
class ClassificationResult:
    doi: str
    index: int
    score: float
    label: bool
    source: str  # "heuristic" | "external-model"


def fired_cue_groups(p: Paragraph, gazetteers: Sequence[Gazetteer] | None = None) -> set[str]:
    """Names of cue groups that fire on the paragraph text."""
    if gazetteers is None:
        gazetteers = default_gazetteers()
    text = p.text
    fired: set[str] = set()
    for gaz in gazetteers:
        if gaz.match_policy == FORMULA_PATTERN:
            continue
        if gaz.etype is EntityType.SYNTHESIS_ACTION:
            group = "action_verb"
        elif gaz.etype in (EntityType.VESSEL, EntityType.SOLVENT_PRECURSOR):
            group = "medium"
        else:
            continue
        if group not in fired and next(iter_gazetteer_matches(text, gaz), None) is not None:
            fired.add(group)
    if find_quantity_spans(text):
        fired.add("quantity")
    if find_formula_spans(text):
        fired.add("chemical_formula")
    return fired


def score_paragraph(
    p: Paragraph,
    gazetteers: Sequence[Gazetteer] | None = None,
    weights: CueWeights | None = None,
) -> float:
    """Weighted fraction of fired cue groups; deterministic, in [0,1]."""
    weights = weights or CueWeights()
    fired = fired_cue_groups(p, gazetteers)
    total = weights.total()
    if total <= 0:
        return 0.0
    got = sum(getattr(weights, name) for name in fired)
    return got / total


def classify(
    p: Paragraph,
    threshold: float = 0.5,
    gazetteers: Sequence[Gazetteer] | None = None,
    weights: CueWeights | None = None,
) -> ClassificationResult:
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0,1]")
    score = score_paragraph(p, gazetteers, weights)
    return ClassificationResult(
        doi=p.doi, index=p.index, score=score, label=score >= threshold, source="heuristic"
    )


# ----------------------------------------------------------------------
# Prompting and the external completion client
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class PromptTemplate:
    instruction: str
    examples: tuple[tuple[str, str], ...]  # (paragraph text, completion text)
    separator: str = "\n###\n"

    def __post_init__(self) -> None:
        if not self.examples:
            raise ValueError("PromptTemplate needs at least one example")


def render_prompt(t: PromptTemplate, p: Paragraph) -> str:
    """Byte-deterministic rendering: instruction, worked examples, query,
    separator — in that order."""
    parts = []
    if t.instruction:
        parts.append(t.instruction + "\n\n")
    for ex_text, ex_completion in t.examples:
        parts.append(f"Paragraph: {ex_text}\nAnswer: {ex_completion}\n\n")
    parts.append(f"Paragraph: {p.text}\nAnswer:")
    parts.append(t.separator)
    return "".join(parts)


DEFAULT_CLASSIFY_TEMPLATE = PromptTemplate(
    instruction=(
        "Decide whether the paragraph describes a materials synthesis "
        "procedure. Answer with exactly one word: yes or no."
    ),
    examples=(
        (
            "Zn(NO3)2·6H2O (0.59 g) and terephthalic acid (0.11 g) were "
            "dissolved in DMF (20 mL), sealed in a Teflon-lined autoclave "
            "and heated at 120 °C for 24 hours.",
            "yes",
        ),
        (
            "Porous coordination networks have attracted wide attention "
            "because of their potential applications in gas storage.",
            "no",
        ),
    ),
)

DEFAULT_NER_TEMPLATE = PromptTemplate(
    instruction=(
        "List every synthesis entity in the paragraph, one per line, as "
        "<surface>TAB<type>. Types: Precursor, MetalPrecursor, "
        "OrganicPrecursor, SolventPrecursor, SynthesisAction, Acid, "
        "Vessel, Descriptor, MofComposition."
    ),
    examples=(
        (
            "The mixture was ultrasonicated for 2 hours.",
            "ultrasonicated\tSynthesisAction\n2 hours\tDescriptor",
        ),
    ),
)


class CompletionClient(Protocol):
    def complete(self, prompt: str) -> str:  # pragma: no cover - protocol
        ...


@dataclass(frozen=True)
class ExternalModelConfig:
    endpoint_url: str = ""
    model: str = ""
    timeout_s: float = 30.0
    max_in_flight: int = 4
    credential_env: str = "CODEX_API_KEY"
    fallback_to_heuristic: bool = True


class HttpCompletionClient:
    """Minimal provider-agnostic completion client.

    POSTs ``{"model": ..., "prompt": ...}`` as JSON with a bearer token
    from the configured environment variable; reads the completion from a
    top-level ``completion`` field, or ``choices[0].text`` as a fallback.
    In-flight requests are bounded by a semaphore.
    """

    def __init__(self, config: ExternalModelConfig):
        if not config.endpoint_url:
            raise ValueError("external model endpoint_url not configured")
        self.config = config
        self._slots = threading.BoundedSemaphore(max(1, config.max_in_flight))

    def complete(self, prompt: str) -> str:
        import requests

        headers = {}
        credential = os.environ.get(self.config.credential_env, "")
        if credential:
            headers["Authorization"] = f"Bearer {credential}"
        payload = {"model": self.config.model, "prompt": prompt}
        with self._slots:
            try:
                resp = requests.post(
                    self.config.endpoint_url,
                    json=payload,
                    headers=headers,
                    timeout=self.config.timeout_s,
                )
                resp.raise_for_status()
                data = resp.json()
            except requests.RequestException as exc:
                raise TransportError(f"completion request failed: {exc}") from exc
        if isinstance(data, dict):
            if isinstance(data.get("completion"), str):
                return data["completion"]
            choices = data.get("choices")
            if isinstance(choices, list) and choices and isinstance(choices[0], dict):
                text = choices[0].get("text")
                if isinstance(text, str):
                    return text
        raise MalformedCompletion(f"no completion text in response: {data!r}")


def parse_yes_no(completion: str) -> bool:
    """The classification completion grammar: a single yes/no token,
    case-insensitive, optional trailing punctuation."""
    token = completion.strip().split()[0].rstrip(".,!").lower() if completion.strip() else ""
    if token == "yes":
        return True
    if token == "no":
        return False
    raise MalformedCompletion(f"completion is neither 'yes' nor 'no': {completion!r}")


def classify_external(
    p: Paragraph, t: PromptTemplate, client: CompletionClient
) -> ClassificationResult:
    """Classify via the external client. Raises TransportError or
    MalformedCompletion; the caller decides whether to fall back."""
    completion = client.complete(render_prompt(t, p))
    label = parse_yes_no(completion)
    return ClassificationResult(
        doi=p.doi,
        index=p.index,
        score=1.0 if label else 0.0,
        label=label,
        source="external-model",
    )


def classify_with_fallback(
    p: Paragraph,
    t: PromptTemplate,
    client: CompletionClient,
    threshold: float = 0.5,
    gazetteers: Sequence[Gazetteer] | None = None,
    errors: list[str] | None = None,
    fallback: bool = True,
) -> ClassificationResult:
    """External classification falling back to the heuristic on failure.

    Failures are appended to ``errors`` (when given), never swallowed
    silently; with ``fallback=False`` they propagate instead.
    """
    try:
        return classify_external(p, t, client)
    except (TransportError, MalformedCompletion) as exc:
        if errors is not None:
            errors.append(f"{p.doi}#{p.index}: {exc}")
        if not fallback:
            raise
        return classify(p, threshold, gazetteers)
