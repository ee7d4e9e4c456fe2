"""Template loading and validation: frames, elements, slot grammars, constraints."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import DanglingSlot, MissingFile, OverlapError, SchemaError
from .fragments import FRAGMENT_KINDS

ELEMENT_KINDS = ("text", "image", "stat", "list_item")
TRANSITIONS = ("cut", "fade")

_SLOT_RE = re.compile(r"\{(\w+)\}")


@dataclass(frozen=True)
class Rect:
    x: float
    y: float
    w: float
    h: float

    def as_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}

    def overlaps(self, other: "Rect") -> bool:
        """Strict interior overlap; rects that merely touch do not collide."""
        return (
            self.x < other.x + other.w
            and other.x < self.x + self.w
            and self.y < other.y + other.h
            and other.y < self.y + self.h
        )


@dataclass(frozen=True)
class ElementSpec:
    id: str
    kind: str
    position: Rect
    style_role: str


@dataclass(frozen=True)
class FrameSpec:
    id: str
    elements: tuple[ElementSpec, ...]
    transition: str

    def element(self, element_id: str) -> ElementSpec | None:
        for el in self.elements:
            if el.id == element_id:
                return el
        return None


@dataclass(frozen=True)
class GrammarRule:
    pattern: str
    slots: tuple[str, ...]


@dataclass(frozen=True)
class FragmentSpec:
    frames: tuple[FrameSpec, ...]
    grammars: tuple[GrammarRule, ...]


@dataclass(frozen=True)
class Style:
    font_family: str
    font_sizes: dict[str, float]
    colors: dict[str, str]


@dataclass(frozen=True)
class Animation:
    fade_in_s: float
    fade_out_s: float


@dataclass(frozen=True)
class Constraints:
    outline_slots: int
    max_authors_shown: int
    min_frame_s: float
    pad_s: float


@dataclass(frozen=True)
class Template:
    id: str
    fragment_specs: dict[str, FragmentSpec]
    style: Style
    animation: Animation
    constraints: Constraints


def bundled_template_path(name: str) -> Path:
    return Path(str(resources.files("trailerforge").joinpath(f"data/templates/{name}.json")))


def _number(payload: dict, key: str, where: str) -> float:
    value = payload.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where}: field '{key}' must be a number")
    return float(value)


def _string(payload: dict, key: str, where: str) -> str:
    value = payload.get(key)
    if not isinstance(value, str) or not value:
        raise SchemaError(f"{where}: field '{key}' must be a non-empty string")
    return value


def _parse_rect(payload, where: str) -> Rect:
    if not isinstance(payload, dict):
        raise SchemaError(f"{where}: position must be an object")
    rect = Rect(
        x=_number(payload, "x", where),
        y=_number(payload, "y", where),
        w=_number(payload, "w", where),
        h=_number(payload, "h", where),
    )
    if rect.w <= 0 or rect.h <= 0:
        raise SchemaError(f"{where}: width and height must be positive")
    if not (0 <= rect.x and 0 <= rect.y and rect.x + rect.w <= 1 and rect.y + rect.h <= 1):
        raise SchemaError(f"{where}: rect must lie within the unit square")
    return rect


def _parse_frame(payload, where: str) -> FrameSpec:
    if not isinstance(payload, dict):
        raise SchemaError(f"{where}: frame must be an object")
    frame_id = _string(payload, "id", where)
    transition = payload.get("transition", "cut")
    if transition not in TRANSITIONS:
        raise SchemaError(f"{where}: unknown transition '{transition}'")
    raw_elements = payload.get("elements")
    if not isinstance(raw_elements, list) or not raw_elements:
        raise SchemaError(f"{where}: frame needs a non-empty element list")
    elements = []
    seen_ids = set()
    for j, raw in enumerate(raw_elements):
        el_where = f"{where}.elements[{j}]"
        if not isinstance(raw, dict):
            raise SchemaError(f"{el_where}: must be an object")
        el_id = _string(raw, "id", el_where)
        if el_id in seen_ids:
            raise SchemaError(f"{el_where}: duplicate element id '{el_id}'")
        seen_ids.add(el_id)
        kind = _string(raw, "kind", el_where)
        if kind not in ELEMENT_KINDS:
            raise SchemaError(f"{el_where}: unknown element kind '{kind}'")
        elements.append(
            ElementSpec(
                id=el_id,
                kind=kind,
                position=_parse_rect(raw.get("position"), el_where),
                style_role=_string(raw, "style_role", el_where),
            )
        )
    for a in range(len(elements)):
        for b in range(a + 1, len(elements)):
            if elements[a].position.overlaps(elements[b].position):
                raise OverlapError(
                    f"{where}: elements '{elements[a].id}' and '{elements[b].id}' overlap"
                )
    return FrameSpec(id=frame_id, elements=tuple(elements), transition=transition)


def _parse_grammar(payload, where: str, known_elements: set[str]) -> GrammarRule:
    if not isinstance(payload, dict):
        raise SchemaError(f"{where}: grammar rule must be an object")
    pattern = _string(payload, "pattern", where)
    raw_slots = payload.get("slots")
    if not isinstance(raw_slots, list) or any(not isinstance(s, str) for s in raw_slots):
        raise SchemaError(f"{where}: slots must be a list of strings")
    slots = tuple(raw_slots)
    for slot in slots:
        if slot not in known_elements:
            raise DanglingSlot(f"{where}: slot '{slot}' names no element in this fragment")
    for placeholder in _SLOT_RE.findall(pattern):
        if placeholder not in slots:
            raise DanglingSlot(
                f"{where}: pattern placeholder '{{{placeholder}}}' missing from slots"
            )
    return GrammarRule(pattern=pattern, slots=slots)


def load_template(path: str | Path) -> Template:
    template_path = Path(path)
    if not template_path.is_file():
        raise MissingFile(f"template not found: {template_path}")
    try:
        payload = json.loads(template_path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"template is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaError("template root must be a JSON object")

    template_id = _string(payload, "id", "template")

    style_raw = payload.get("style")
    if not isinstance(style_raw, dict):
        raise SchemaError("template: missing style object")
    font_sizes = style_raw.get("font_sizes")
    colors = style_raw.get("colors")
    if not isinstance(font_sizes, dict) or not isinstance(colors, dict):
        raise SchemaError("template.style: font_sizes and colors must be objects")
    style = Style(
        font_family=_string(style_raw, "font_family", "template.style"),
        font_sizes={k: float(v) for k, v in font_sizes.items()},
        colors=dict(colors),
    )

    anim_raw = payload.get("animation")
    if not isinstance(anim_raw, dict):
        raise SchemaError("template: missing animation object")
    animation = Animation(
        fade_in_s=_number(anim_raw, "fade_in_s", "template.animation"),
        fade_out_s=_number(anim_raw, "fade_out_s", "template.animation"),
    )
    if animation.fade_in_s < 0 or animation.fade_out_s < 0:
        raise SchemaError("template.animation: fade durations must be >= 0")

    cons_raw = payload.get("constraints")
    if not isinstance(cons_raw, dict):
        raise SchemaError("template: missing constraints object")
    constraints = Constraints(
        outline_slots=int(_number(cons_raw, "outline_slots", "template.constraints")),
        max_authors_shown=int(_number(cons_raw, "max_authors_shown", "template.constraints")),
        min_frame_s=_number(cons_raw, "min_frame_s", "template.constraints"),
        pad_s=_number(cons_raw, "pad_s", "template.constraints"),
    )
    if constraints.outline_slots < 2:
        raise SchemaError("template.constraints: outline_slots must be at least 2")
    if constraints.max_authors_shown < 1:
        raise SchemaError("template.constraints: max_authors_shown must be at least 1")
    if constraints.min_frame_s <= 0 or constraints.pad_s < 0:
        raise SchemaError("template.constraints: invalid timing values")

    fragments_raw = payload.get("fragments")
    if not isinstance(fragments_raw, dict) or not fragments_raw:
        raise SchemaError("template: missing fragments object")
    fragment_specs: dict[str, FragmentSpec] = {}
    all_frame_ids: set[str] = set()
    for kind, frag_raw in fragments_raw.items():
        where = f"template.fragments.{kind}"
        if kind not in FRAGMENT_KINDS:
            raise SchemaError(f"{where}: unknown fragment kind")
        if not isinstance(frag_raw, dict):
            raise SchemaError(f"{where}: must be an object")
        raw_frames = frag_raw.get("frames")
        if not isinstance(raw_frames, list) or not raw_frames:
            raise SchemaError(f"{where}: needs a non-empty frame list")
        frames = tuple(
            _parse_frame(raw, f"{where}.frames[{i}]") for i, raw in enumerate(raw_frames)
        )
        for frame in frames:
            if frame.id in all_frame_ids:
                raise SchemaError(f"{where}: frame id '{frame.id}' reused across the template")
            all_frame_ids.add(frame.id)
        known_elements = {el.id for frame in frames for el in frame.elements}
        raw_grammars = frag_raw.get("grammars", [])
        if not isinstance(raw_grammars, list):
            raise SchemaError(f"{where}: grammars must be a list")
        grammars = tuple(
            _parse_grammar(raw, f"{where}.grammars[{i}]", known_elements)
            for i, raw in enumerate(raw_grammars)
        )
        fragment_specs[kind] = FragmentSpec(frames=frames, grammars=grammars)

    for role in {el.style_role for spec in fragment_specs.values() for frame in spec.frames for el in frame.elements}:
        if role not in style.font_sizes or role not in style.colors:
            raise SchemaError(f"template.style: role '{role}' lacks font size or color")

    return Template(
        id=template_id,
        fragment_specs=fragment_specs,
        style=style,
        animation=animation,
        constraints=constraints,
    )
