"""Content generation for the seven trailer fragments and enrichment suggestions."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from random import Random

from .corpus import CreatorInput, Pathway, PathwayStats
from .errors import (
    AdapterFailure,
    EmptyPhraseSet,
    MissingAsset,
    MissingMandatoryFragment,
)
from .selection import OutlineSelection
from .textmetrics import TermFrequencyTable, content_tokens, load_stopwords, term_frequencies, tokenize

SPLASH = "splash"
TRAILER_TITLE = "trailer_title"
AUTHOR_DETAILS = "author_details"
OUTLINE = "outline"
META_INFORMATION = "meta_information"
SOCIAL_PROOF = "social_proof"
CALL_TO_ACTION = "call_to_action"

FRAGMENT_KINDS = (
    SPLASH,
    TRAILER_TITLE,
    AUTHOR_DETAILS,
    OUTLINE,
    META_INFORMATION,
    SOCIAL_PROOF,
    CALL_TO_ACTION,
)
MANDATORY_KINDS = (TRAILER_TITLE, OUTLINE, CALL_TO_ACTION)

PLACEHOLDER_AUTHOR_ASSET = "placeholder_author"
CTA_ACTION_LABEL = "Start the course"


@dataclass(frozen=True)
class Suggestion:
    kind: str  # "definition" | "paraphrase"
    source_resource: int
    original: str
    proposed: str
    accepted: bool = False


@dataclass(frozen=True)
class FragmentData:
    kind: str
    payload: dict
    suggestions: tuple[Suggestion, ...] = ()
    omit: bool = False


@dataclass(frozen=True)
class TitleCandidate:
    text: str
    tf_score: float


@dataclass(frozen=True)
class TrailerTitleCandidates:
    candidates: tuple[TitleCandidate, ...]
    selected: str
    fallback_used: bool
    hint_used: bool = False


def mean_term_frequency(text: str, table: TermFrequencyTable, stopwords: frozenset[str]) -> float:
    toks = content_tokens(text, stopwords)
    if not toks:
        return 0.0
    return sum(table.frequency(t) for t in toks) / len(toks)


def gen_trailer_title(
    pathway: Pathway,
    registry,
    tf_threshold: float = 0.01,
    stopwords: frozenset[str] | None = None,
) -> TrailerTitleCandidates:
    """Pick the trailer title: creator hint, else TF-scored hierarchical candidates,
    else a single-document title of the introductory resource."""
    if stopwords is None:
        stopwords = load_stopwords()
    table = term_frequencies([r.text for r in pathway.resources], stopwords)

    if pathway.title_hint:
        hint = pathway.title_hint
        cand = TitleCandidate(text=hint, tf_score=mean_term_frequency(hint, table, stopwords))
        return TrailerTitleCandidates(
            candidates=(cand,), selected=hint, fallback_used=False, hint_used=True
        )

    candidates: list[TitleCandidate] = []
    try:
        titles = registry.call("hier_titles", {"texts": [r.text for r in pathway.resources]})["titles"]
    except AdapterFailure:
        titles = []
    for text in titles:
        candidates.append(TitleCandidate(text=text, tf_score=mean_term_frequency(text, table, stopwords)))

    if candidates:
        best = max(candidates, key=lambda c: c.tf_score)
        if best.tf_score >= tf_threshold:
            return TrailerTitleCandidates(
                candidates=tuple(candidates), selected=best.text, fallback_used=False
            )

    first_text = pathway.resources[0].text
    fallback = registry.call("title", {"text": first_text})["title"]
    return TrailerTitleCandidates(
        candidates=tuple(candidates), selected=fallback, fallback_used=True
    )


def title_fragment(title: TrailerTitleCandidates) -> FragmentData:
    return FragmentData(
        kind=TRAILER_TITLE,
        payload={
            "title": title.selected,
            "candidates": [c.text for c in title.candidates],
            "fallback_used": title.fallback_used,
            "hint_used": title.hint_used,
        },
    )


def _resolve_asset(path_str: str, base_dir: Path, what: str) -> str:
    path = Path(path_str)
    if not path.is_absolute():
        path = base_dir / path
    if not path.is_file():
        raise MissingAsset(f"{what} not found: {path}")
    return str(path)


def gen_splash(creator: CreatorInput, base_dir: Path) -> FragmentData:
    if creator.splash is None:
        return FragmentData(kind=SPLASH, payload={}, omit=True)
    splash = creator.splash
    logo = None
    if splash.logo_path is not None:
        logo = _resolve_asset(splash.logo_path, base_dir, "splash logo")
    return FragmentData(
        kind=SPLASH,
        payload={"text": splash.text, "logo": logo, "position": splash.position},
    )


def gen_author_fragment(creator: CreatorInput, template, base_dir: Path) -> FragmentData:
    if not creator.authors:
        return FragmentData(kind=AUTHOR_DETAILS, payload={}, omit=True)
    shown = list(creator.authors[: template.constraints.max_authors_shown])
    name = ", ".join(a.name for a in shown)
    if len(creator.authors) > len(shown):
        name = f"{name} and others"
    primary = creator.authors[0]
    if primary.image_path is not None:
        image = _resolve_asset(primary.image_path, base_dir, f"author image for {primary.name}")
    else:
        image = PLACEHOLDER_AUTHOR_ASSET
    return FragmentData(
        kind=AUTHOR_DETAILS,
        payload={"name": name, "affiliation": primary.affiliation, "image": image},
    )


def word_truncate(text: str, max_chars: int) -> str:
    """Cut at a word boundary so the result plus a trailing ellipsis fits max_chars."""
    if len(text) <= max_chars:
        return text
    words = text.split()
    out = ""
    for word in words:
        candidate = f"{out} {word}".strip()
        if len(candidate) + 1 > max_chars:
            break
        out = candidate
    if not out:
        out = text[: max(0, max_chars - 1)]
    return out + "…"


def gen_outline_fragment(selection: OutlineSelection, registry, max_chars: int = 80) -> FragmentData:
    items = []
    suggestions: list[Suggestion] = []
    for entry in selection.entries:
        items.append({"resource_index": entry.resource_index, "text": entry.outline_text})
        if len(entry.outline_text) > max_chars:
            try:
                proposed = registry.call(
                    "paraphrase", {"text": entry.outline_text, "max_chars": max_chars}
                )["text"]
            except AdapterFailure:
                proposed = word_truncate(entry.outline_text, max_chars)
            suggestions.append(
                Suggestion(
                    kind="paraphrase",
                    source_resource=entry.resource_index,
                    original=entry.outline_text,
                    proposed=proposed,
                )
            )
    return FragmentData(kind=OUTLINE, payload={"items": items}, suggestions=tuple(suggestions))


def gen_meta_fragment(stats: PathwayStats, tf: TermFrequencyTable, top_k: int = 20) -> FragmentData:
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    wordcloud = [[term, count] for term, count in tf.top(top_k)]
    return FragmentData(
        kind=META_INFORMATION,
        payload={
            "reading_time_minutes": stats.reading_time_minutes,
            "total_resources": stats.total_resources,
            "has_discussion_forum": stats.has_discussion_forum,
            "wordcloud": wordcloud,
        },
    )


def gen_social_proof(creator: CreatorInput) -> FragmentData:
    if creator.social_proof is None:
        return FragmentData(kind=SOCIAL_PROOF, payload={}, omit=True)
    proof = creator.social_proof
    return FragmentData(
        kind=SOCIAL_PROOF,
        payload={
            "learner_count": proof.learner_count,
            "rating": proof.rating,
            "review_snippets": list(proof.review_snippets),
        },
    )


def load_cta_phrases(path: str | Path | None = None) -> list[str]:
    if path is None:
        text = resources.files("trailerforge").joinpath("data/cta_phrases.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def gen_cta(rng_seed: int, phrase_set: list[str], action_url: str | None = None) -> FragmentData:
    if not phrase_set:
        raise EmptyPhraseSet("call-to-action needs at least one phrase")
    rng = Random(rng_seed)
    phrase = phrase_set[rng.randrange(len(phrase_set))]
    return FragmentData(
        kind=CALL_TO_ACTION,
        payload={"phrase": phrase, "action_label": CTA_ACTION_LABEL, "action_url": action_url},
    )


_SENTENCE_RE = re.compile(r"[^.!?]+[.!?]+|[^.!?]+$")
_DEFINITION_PATTERNS = tuple(
    pattern.split() for pattern in ("is a", "is an", "is the", "refers to", "is defined as")
)


def split_sentences(text: str) -> list[str]:
    flat = " ".join(text.split())
    return [m.group(0).strip() for m in _SENTENCE_RE.finditer(flat) if m.group(0).strip()]


def definition_label(sentence: str) -> tuple[str, float]:
    """Copula-pattern heuristic: subject within the first 4 tokens, 8-60 tokens total."""
    toks = tokenize(sentence)
    if not 8 <= len(toks) <= 60:
        return "non_definition", 0.0
    for start in range(1, 5):
        for pattern in _DEFINITION_PATTERNS:
            end = start + len(pattern)
            if toks[start:end] == pattern and end < len(toks):
                return "definition", 1.0
    return "non_definition", 0.0


def suggest_definitions(pathway: Pathway, registry, max_suggestions: int = 3) -> list[Suggestion]:
    if max_suggestions <= 0:
        return []
    out: list[Suggestion] = []
    for res in pathway.resources:
        for sentence in split_sentences(res.text):
            if not 8 <= len(tokenize(sentence)) <= 60:
                continue
            if registry is not None:
                try:
                    label = registry.call("classify_definition", {"text": sentence})["label"]
                except AdapterFailure:
                    label, _ = definition_label(sentence)
            else:
                label, _ = definition_label(sentence)
            if label == "definition":
                out.append(
                    Suggestion(
                        kind="definition",
                        source_resource=res.meta.order,
                        original=sentence,
                        proposed=sentence,
                    )
                )
                if len(out) == max_suggestions:
                    return out
    return out


def build_timeline(fragments: list[FragmentData], splash_position: str = "first") -> list[FragmentData]:
    """Order present fragments canonically, honoring the splash-last preference."""
    present: dict[str, FragmentData] = {}
    for frag in fragments:
        if not frag.omit:
            present[frag.kind] = frag
    for kind in MANDATORY_KINDS:
        if kind not in present:
            raise MissingMandatoryFragment(f"timeline requires a {kind} fragment")
    order = list(FRAGMENT_KINDS)
    if splash_position == "last":
        order.remove(SPLASH)
        order.append(SPLASH)
    return [present[kind] for kind in order if kind in present]
