"""Pathway manifest loading, validation and pathway-level statistics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import DuplicateId, EmptyPathway, MissingFile, SchemaError
from .textmetrics import tokenize

RESOURCE_KINDS = ("document", "video_transcript", "assessment")
DEFAULT_READING_SPEED_WPM = 200.0


@dataclass(frozen=True)
class ResourceMeta:
    id: str
    kind: str
    order: int
    source_path: str
    title_hint: str | None = None


@dataclass(frozen=True)
class Resource:
    meta: ResourceMeta
    text: str
    token_count: int


@dataclass(frozen=True)
class Author:
    name: str
    affiliation: str | None = None
    image_path: str | None = None


@dataclass(frozen=True)
class Splash:
    text: str
    logo_path: str | None = None
    position: str = "first"


@dataclass(frozen=True)
class SocialProof:
    learner_count: int
    rating: float
    review_snippets: tuple[str, ...] = ()


@dataclass(frozen=True)
class CreatorInput:
    authors: tuple[Author, ...] = ()
    splash: Splash | None = None
    social_proof: SocialProof | None = None
    preferences: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Pathway:
    resources: tuple[Resource, ...]
    title_hint: str | None = None
    has_discussion_forum: bool = False

    def resource_at(self, order: int) -> Resource:
        """Resource by 1-based pathway position."""
        return self.resources[order - 1]


@dataclass(frozen=True)
class PathwayStats:
    total_resources: int
    total_words: int
    reading_time_minutes: float
    has_discussion_forum: bool
    kind_counts: dict[str, int]


def _require(payload: dict, key: str, types, where: str):
    if key not in payload:
        raise SchemaError(f"{where}: missing required field '{key}'")
    value = payload[key]
    if not isinstance(value, types):
        raise SchemaError(f"{where}: field '{key}' has wrong type {type(value).__name__}")
    return value


def _optional_str(payload: dict, key: str, where: str) -> str | None:
    value = payload.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise SchemaError(f"{where}: field '{key}' must be a string")
    return value


def load_manifest(path: str | Path) -> tuple[Pathway, CreatorInput]:
    """Load and validate a pathway manifest plus the resource texts it references."""
    manifest_path = Path(path)
    if not manifest_path.is_file():
        raise MissingFile(f"manifest not found: {manifest_path}")
    try:
        payload = json.loads(manifest_path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaError("manifest root must be a JSON object")

    entries = _require(payload, "resources", list, "manifest")
    if not entries:
        raise EmptyPathway("manifest lists no resources")
    forum = _require(payload, "has_discussion_forum", bool, "manifest")
    title_hint = _optional_str(payload, "title_hint", "manifest")

    base = manifest_path.parent
    seen_ids: set[str] = set()
    resources: list[Resource] = []
    for order, entry in enumerate(entries, start=1):
        where = f"resources[{order - 1}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{where}: must be an object")
        rid = _require(entry, "id", str, where)
        if rid in seen_ids:
            raise DuplicateId(f"duplicate resource id '{rid}'")
        seen_ids.add(rid)
        rel_path = _require(entry, "path", str, where)
        kind = _require(entry, "kind", str, where)
        if kind not in RESOURCE_KINDS:
            raise SchemaError(f"{where}: unknown kind '{kind}'")
        hint = _optional_str(entry, "title_hint", where)
        text_path = base / rel_path
        if not text_path.is_file():
            raise MissingFile(f"resource '{rid}' path not found: {text_path}")
        text = text_path.read_text("utf-8")
        meta = ResourceMeta(id=rid, kind=kind, order=order, source_path=rel_path, title_hint=hint)
        resources.append(Resource(meta=meta, text=text, token_count=len(tokenize(text))))

    creator = _load_creator(_require(payload, "creator", dict, "manifest"))
    pathway = Pathway(
        resources=tuple(resources),
        title_hint=title_hint,
        has_discussion_forum=forum,
    )
    return pathway, creator


def _load_creator(payload: dict) -> CreatorInput:
    authors_raw = _require(payload, "authors", list, "creator")
    authors = []
    for i, author in enumerate(authors_raw):
        where = f"creator.authors[{i}]"
        if not isinstance(author, dict):
            raise SchemaError(f"{where}: must be an object")
        authors.append(
            Author(
                name=_require(author, "name", str, where),
                affiliation=_optional_str(author, "affiliation", where),
                image_path=_optional_str(author, "image_path", where),
            )
        )

    splash = None
    if payload.get("splash") is not None:
        raw = payload["splash"]
        if not isinstance(raw, dict):
            raise SchemaError("creator.splash: must be an object")
        position = raw.get("position", "first")
        if position not in ("first", "last"):
            raise SchemaError(f"creator.splash: unknown position '{position}'")
        splash = Splash(
            text=_require(raw, "text", str, "creator.splash"),
            logo_path=_optional_str(raw, "logo_path", "creator.splash"),
            position=position,
        )

    social = None
    if payload.get("social_proof") is not None:
        raw = payload["social_proof"]
        if not isinstance(raw, dict):
            raise SchemaError("creator.social_proof: must be an object")
        learner_count = _require(raw, "learner_count", int, "creator.social_proof")
        rating = _require(raw, "rating", (int, float), "creator.social_proof")
        if isinstance(rating, bool) or isinstance(learner_count, bool):
            raise SchemaError("creator.social_proof: numeric fields must not be booleans")
        if learner_count < 0:
            raise SchemaError("creator.social_proof: learner_count must be >= 0")
        if not 0 <= float(rating) <= 5:
            raise SchemaError("creator.social_proof: rating must lie in [0, 5]")
        snippets = raw.get("review_snippets", [])
        if not isinstance(snippets, list) or any(not isinstance(s, str) for s in snippets):
            raise SchemaError("creator.social_proof: review_snippets must be a list of strings")
        social = SocialProof(
            learner_count=learner_count,
            rating=float(rating),
            review_snippets=tuple(snippets),
        )

    preferences = payload.get("preferences", {})
    if not isinstance(preferences, dict) or any(
        not isinstance(k, str) or not isinstance(v, str) for k, v in preferences.items()
    ):
        raise SchemaError("creator.preferences: must map strings to strings")

    return CreatorInput(
        authors=tuple(authors),
        splash=splash,
        social_proof=social,
        preferences=dict(preferences),
    )


def serialize_manifest(pathway: Pathway, creator: CreatorInput) -> str:
    """Re-serialize a loaded manifest in canonical key order (round-trip aid)."""
    resources = []
    for res in pathway.resources:
        entry: dict = {"id": res.meta.id, "kind": res.meta.kind, "path": res.meta.source_path}
        if res.meta.title_hint is not None:
            entry["title_hint"] = res.meta.title_hint
        resources.append(entry)

    creator_payload: dict = {
        "authors": [
            {
                "name": a.name,
                **({"affiliation": a.affiliation} if a.affiliation is not None else {}),
                **({"image_path": a.image_path} if a.image_path is not None else {}),
            }
            for a in creator.authors
        ]
    }
    if creator.splash is not None:
        splash: dict = {"position": creator.splash.position, "text": creator.splash.text}
        if creator.splash.logo_path is not None:
            splash["logo_path"] = creator.splash.logo_path
        creator_payload["splash"] = splash
    if creator.social_proof is not None:
        creator_payload["social_proof"] = {
            "learner_count": creator.social_proof.learner_count,
            "rating": creator.social_proof.rating,
            "review_snippets": list(creator.social_proof.review_snippets),
        }
    if creator.preferences:
        creator_payload["preferences"] = dict(creator.preferences)

    manifest: dict = {
        "creator": creator_payload,
        "has_discussion_forum": pathway.has_discussion_forum,
        "resources": resources,
    }
    if pathway.title_hint is not None:
        manifest["title_hint"] = pathway.title_hint
    return json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def compute_stats(pathway: Pathway, reading_speed_wpm: float = DEFAULT_READING_SPEED_WPM) -> PathwayStats:
    """Pathway statistics; reading time is rounded up to one decimal minute."""
    if reading_speed_wpm <= 0:
        raise ValueError("reading_speed_wpm must be positive")
    total_words = sum(res.token_count for res in pathway.resources)
    # Ceiling at 1 decimal via exact rationals so 1234 words / 200 wpm lands on
    # 6.2 rather than a float artifact like 6.1000000000000005.
    tenths = math.ceil(Fraction(total_words) * 10 / Fraction(str(reading_speed_wpm)))
    kind_counts = {kind: 0 for kind in RESOURCE_KINDS}
    for res in pathway.resources:
        kind_counts[res.meta.kind] += 1
    return PathwayStats(
        total_resources=len(pathway.resources),
        total_words=total_words,
        reading_time_minutes=tenths / 10,
        has_discussion_forum=pathway.has_discussion_forum,
        kind_counts=kind_counts,
    )
