"""Template application: voice-over, duration sync, storyboard, subtitles, render plan.

All timeline arithmetic is carried in integer milliseconds.  Seconds appear
only at the serialization boundary (ms / 1000.0), so totals are conserved
exactly and two runs of the same inputs produce identical bytes.
"""

from __future__ import annotations

import re
import textwrap
from dataclasses import dataclass, replace
from random import Random

from .errors import (
    AdapterFailure,
    EmptyGrammarSet,
    TemplateMismatch,
    UnfilledSlot,
)
from .fragments import (
    AUTHOR_DETAILS,
    CALL_TO_ACTION,
    FragmentData,
    META_INFORMATION,
    OUTLINE,
    SOCIAL_PROOF,
    SPLASH,
    TRAILER_TITLE,
)
from .rng import stream_seed
from .templates import FrameSpec, GrammarRule, Template

STORYBOARD_VERSION = "storyboard/v1"
RENDERPLAN_VERSION = "renderplan/v1"
DEFAULT_SPEAKING_RATE_WPM = 150.0
SUBTITLE_LINE_WIDTH = 42
SUBTITLE_MAX_LINES = 2


@dataclass(frozen=True)
class VoiceOverLine:
    frame_id: str
    text: str
    est_duration_s: float
    audio_ref: str | None = None
    audio_duration_s: float | None = None

    def effective_duration_s(self) -> float:
        if self.audio_duration_s is not None:
            return self.audio_duration_s
        return self.est_duration_s


@dataclass(frozen=True)
class ResolvedFrame:
    id: str
    transition: str
    resolved_elements: dict[str, str]
    voiceover: VoiceOverLine
    duration_ms: int
    fade_in_ms: int
    fade_out_ms: int


@dataclass(frozen=True)
class StoryFragment:
    kind: str
    frames: tuple[ResolvedFrame, ...]


@dataclass(frozen=True)
class SubtitleCue:
    index: int
    start_ms: int
    end_ms: int
    text: str


@dataclass(frozen=True)
class Storyboard:
    version: str
    trailer_title: str
    fragments: tuple[StoryFragment, ...]
    audit: dict
    subtitles: tuple[SubtitleCue, ...]

    def total_duration_ms(self) -> int:
        return sum(f.duration_ms for frag in self.fragments for f in frag.frames)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "trailer_title": self.trailer_title,
            "fragments": [
                {
                    "kind": frag.kind,
                    "frames": [
                        {
                            "id": fr.id,
                            "transition": fr.transition,
                            "duration_s": fr.duration_ms / 1000.0,
                            "fade_in_s": fr.fade_in_ms / 1000.0,
                            "fade_out_s": fr.fade_out_ms / 1000.0,
                            "elements": dict(fr.resolved_elements),
                            "voiceover": {
                                "text": fr.voiceover.text,
                                "est_duration_s": fr.voiceover.est_duration_s,
                                "audio_ref": fr.voiceover.audio_ref,
                                "audio_duration_s": fr.voiceover.audio_duration_s,
                            },
                        }
                        for fr in frag.frames
                    ],
                }
                for frag in self.fragments
            ],
            "audit": self.audit,
            "subtitles": [
                {
                    "index": cue.index,
                    "start_s": cue.start_ms / 1000.0,
                    "end_s": cue.end_ms / 1000.0,
                    "text": cue.text,
                }
                for cue in self.subtitles
            ],
        }


def estimate_speech_duration(text: str, speaking_rate_wpm: float = DEFAULT_SPEAKING_RATE_WPM) -> float:
    """Words / rate in seconds, floored at 0.5 s for non-empty text."""
    if speaking_rate_wpm <= 0:
        raise ValueError("speaking_rate_wpm must be positive")
    if not text.strip():
        return 0.0
    words = len(text.split())
    return max(0.5, words / speaking_rate_wpm * 60.0)


def select_grammar(rules: list[GrammarRule], rng_seed: int) -> tuple[GrammarRule, int]:
    """Uniform seeded choice; returns the rule and its index in `rules`."""
    if not rules:
        raise EmptyGrammarSet("no grammar rules to choose from")
    index = Random(rng_seed).randrange(len(rules))
    return rules[index], index


def expand_grammar(rule: GrammarRule, elements: dict[str, str]) -> str:
    text = rule.pattern
    for slot in rule.slots:
        content = elements.get(slot)
        if not content:
            raise UnfilledSlot(slot)
        text = text.replace("{" + slot + "}", content)
    residue = re.search(r"\{(\w+)\}", text)
    if residue:
        raise UnfilledSlot(residue.group(1))
    return text


def synthesize_voice(
    line: VoiceOverLine,
    registry,
    voice: str = "en-f-1",
    speaking_rate_wpm: float = DEFAULT_SPEAKING_RATE_WPM,
) -> tuple[VoiceOverLine, str | None]:
    """Attach TTS audio to a line; on failure the estimate stays authoritative."""
    if registry is None:
        return line, None
    try:
        response = registry.call(
            "tts",
            {"text": line.text, "voice": voice, "speaking_rate_wpm": speaking_rate_wpm},
        )
    except AdapterFailure as exc:
        return line, str(exc)
    audio_ref = response.get("audio_path")
    return (
        replace(line, audio_ref=audio_ref, audio_duration_s=float(response["duration_s"])),
        None,
    )


def sync_duration(
    line: VoiceOverLine, transition: str, template: Template
) -> tuple[int, int, int]:
    """Frame duration and effective fades in milliseconds.

    duration = max(min_frame_s, effective speech + pad); fades shrink
    proportionally when they would not fit inside the frame.
    """
    cons = template.constraints
    duration_s = max(cons.min_frame_s, line.effective_duration_s() + cons.pad_s)
    duration_ms = round(duration_s * 1000)
    if transition != "fade":
        return duration_ms, 0, 0
    fade_in = template.animation.fade_in_s
    fade_out = template.animation.fade_out_s
    total_fade = fade_in + fade_out
    if total_fade > duration_s and total_fade > 0:
        scale = duration_s / total_fade
        fade_in *= scale
        fade_out *= scale
    fade_in_ms = round(fade_in * 1000)
    fade_out_ms = round(fade_out * 1000)
    if fade_in_ms + fade_out_ms > duration_ms:
        fade_out_ms = duration_ms - fade_in_ms
    return duration_ms, fade_in_ms, fade_out_ms


def _format_minutes(minutes: float) -> str:
    return f"{minutes:.1f}"


def resolve_elements(fragment: FragmentData, frame: FrameSpec) -> dict[str, str]:
    """Bind fragment payload fields to the frame's element ids (by convention)."""
    payload = fragment.payload
    bound: dict[str, str] = {}
    if fragment.kind == SPLASH:
        bound["splash_text"] = payload["text"]
        if payload.get("logo"):
            bound["splash_logo"] = payload["logo"]
    elif fragment.kind == TRAILER_TITLE:
        bound["trailer_title"] = payload["title"]
    elif fragment.kind == AUTHOR_DETAILS:
        bound["author_name"] = payload["name"]
        if payload.get("affiliation"):
            bound["author_affiliation"] = payload["affiliation"]
        bound["author_image"] = payload["image"]
    elif fragment.kind == OUTLINE:
        for n, item in enumerate(payload["items"], start=1):
            bound[f"outline_item_{n}"] = item["text"]
    elif fragment.kind == META_INFORMATION:
        bound["reading_time"] = _format_minutes(payload["reading_time_minutes"])
        bound["resource_count"] = str(payload["total_resources"])
        terms = [term for term, _ in payload["wordcloud"][:5]]
        if terms:
            bound["wordcloud_terms"] = ", ".join(terms)
        if payload["has_discussion_forum"]:
            bound["forum_note"] = "Active discussion forum"
    elif fragment.kind == SOCIAL_PROOF:
        bound["learner_count"] = str(payload["learner_count"])
        bound["rating"] = f"{payload['rating']:.1f}"
        snippets = payload.get("review_snippets") or []
        if snippets:
            bound["review_snippet"] = snippets[0]
    elif fragment.kind == CALL_TO_ACTION:
        bound["cta_phrase"] = payload["phrase"]
        bound["cta_action"] = payload["action_label"]
    frame_ids = {el.id for el in frame.elements}
    return {k: v for k, v in bound.items() if k in frame_ids and v}


def _eligible_rules(
    grammars: tuple[GrammarRule, ...], frame: FrameSpec, resolved: dict[str, str]
) -> list[tuple[GrammarRule, int]]:
    out = []
    for i, rule in enumerate(grammars):
        ok = True
        for slot in rule.slots:
            element = frame.element(slot)
            if element is None or element.kind == "image" or not resolved.get(slot):
                ok = False
                break
        if ok:
            out.append((rule, i))
    return out


def assemble_storyboard(
    timeline: list[FragmentData],
    template: Template,
    registry,
    seed: int,
    speaking_rate_wpm: float = DEFAULT_SPEAKING_RATE_WPM,
    voice: str = "en-f-1",
    audit_info: dict | None = None,
) -> Storyboard:
    """Resolve every frame, expand one grammar per frame, voice it, sync durations."""
    trailer_title = ""
    for frag in timeline:
        if frag.kind == TRAILER_TITLE:
            trailer_title = frag.payload["title"]

    fragments_out: list[StoryFragment] = []
    chosen_grammars: dict[str, dict] = {}
    adapter_failures: list[dict] = []

    for frag in timeline:
        spec = template.fragment_specs.get(frag.kind)
        if spec is None:
            raise TemplateMismatch(f"template '{template.id}' has no spec for fragment '{frag.kind}'")
        frames_out: list[ResolvedFrame] = []
        for frame_spec in spec.frames:
            resolved = resolve_elements(frag, frame_spec)
            candidates = _eligible_rules(spec.grammars, frame_spec, resolved)
            if candidates:
                rules = [rule for rule, _ in candidates]
                rule, local_index = select_grammar(
                    rules, stream_seed(seed, f"grammar:{frame_spec.id}")
                )
                full_index = candidates[local_index][1]
                text = expand_grammar(rule, resolved)
                chosen_grammars[frame_spec.id] = {"index": full_index, "pattern": rule.pattern}
                line = VoiceOverLine(
                    frame_id=frame_spec.id,
                    text=text,
                    est_duration_s=estimate_speech_duration(text, speaking_rate_wpm),
                )
                line, failure = synthesize_voice(line, registry, voice, speaking_rate_wpm)
                if failure is not None:
                    adapter_failures.append({"capability": "tts", "message": failure})
            else:
                line = VoiceOverLine(frame_id=frame_spec.id, text="", est_duration_s=0.0)
            duration_ms, fade_in_ms, fade_out_ms = sync_duration(
                line, frame_spec.transition, template
            )
            frames_out.append(
                ResolvedFrame(
                    id=frame_spec.id,
                    transition=frame_spec.transition,
                    resolved_elements=resolved,
                    voiceover=line,
                    duration_ms=duration_ms,
                    fade_in_ms=fade_in_ms,
                    fade_out_ms=fade_out_ms,
                )
            )
        fragments_out.append(StoryFragment(kind=frag.kind, frames=tuple(frames_out)))

    audit = {
        "seed": seed,
        "template_id": template.id,
        "chosen_grammars": chosen_grammars,
        "adapter_failures": adapter_failures,
    }
    if audit_info:
        audit.update(audit_info)

    subtitles = build_subtitle_cues(fragments_out)
    return Storyboard(
        version=STORYBOARD_VERSION,
        trailer_title=trailer_title,
        fragments=tuple(fragments_out),
        audit=audit,
        subtitles=tuple(subtitles),
    )


def build_subtitle_cues(fragments: list[StoryFragment]) -> list[SubtitleCue]:
    """Wrap each frame's voice-over at 42 chars, two lines per cue; overflow
    splits the frame window proportionally by chunk character count."""
    cues: list[SubtitleCue] = []
    t = 0
    index = 1
    for frag in fragments:
        for frame in frag.frames:
            text = frame.voiceover.text
            if text:
                lines = textwrap.wrap(text, width=SUBTITLE_LINE_WIDTH) or [text]
                chunks = [
                    lines[i : i + SUBTITLE_MAX_LINES]
                    for i in range(0, len(lines), SUBTITLE_MAX_LINES)
                ]
                weights = [sum(len(line) for line in chunk) for chunk in chunks]
                total_weight = sum(weights)
                window = frame.duration_ms
                prev = t
                acc = 0
                for chunk, weight in zip(chunks, weights):
                    acc += weight
                    end = t + (window * acc) // total_weight
                    if end <= prev:
                        end = prev + 1
                    cues.append(
                        SubtitleCue(index=index, start_ms=prev, end_ms=end, text="\n".join(chunk))
                    )
                    index += 1
                    prev = end
            t += frame.duration_ms
    return cues


def _srt_timestamp(ms: int) -> str:
    hours, rest = divmod(ms, 3_600_000)
    minutes, rest = divmod(rest, 60_000)
    seconds, millis = divmod(rest, 1000)
    return f"{hours:02d}:{minutes:02d}:{seconds:02d},{millis:03d}"


def emit_srt(storyboard: Storyboard) -> str:
    blocks = []
    for cue in storyboard.subtitles:
        blocks.append(
            f"{cue.index}\n{_srt_timestamp(cue.start_ms)} --> {_srt_timestamp(cue.end_ms)}\n{cue.text}"
        )
    # blank line between cues, single newline at EOF
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def emit_voiceover_script(storyboard: Storyboard) -> str:
    rows = []
    for frag in storyboard.fragments:
        for frame in frag.frames:
            if frame.voiceover.text:
                rows.append(f"{frame.id}\t{frame.voiceover.text}")
    return "\n".join(rows) + ("\n" if rows else "")


def emit_renderplan(storyboard: Storyboard, template: Template) -> dict:
    """Flat instruction list with absolute timestamps, renderer-sufficient."""
    instructions: list[dict] = []
    t = 0
    for frag in storyboard.fragments:
        spec = template.fragment_specs.get(frag.kind)
        if spec is None:
            raise TemplateMismatch(f"template '{template.id}' has no spec for fragment '{frag.kind}'")
        frame_specs = {fs.id: fs for fs in spec.frames}
        for frame in frag.frames:
            frame_spec = frame_specs[frame.id]
            start_s = t / 1000.0
            duration_s = frame.duration_ms / 1000.0
            instructions.append(
                {
                    "op": "show_frame",
                    "frame_id": frame.id,
                    "t_s": start_s,
                    "duration_s": duration_s,
                }
            )
            if frame.fade_in_ms > 0:
                instructions.append(
                    {
                        "op": "fade",
                        "direction": "in",
                        "frame_id": frame.id,
                        "t_s": start_s,
                        "duration_s": frame.fade_in_ms / 1000.0,
                    }
                )
            for element in frame_spec.elements:
                content = frame.resolved_elements.get(element.id)
                if not content:
                    continue
                base = {
                    "frame_id": frame.id,
                    "element_id": element.id,
                    "t_s": start_s,
                    "duration_s": duration_s,
                    "position": element.position.as_dict(),
                }
                if element.kind == "image":
                    instructions.append({"op": "draw_image", "asset": content, **base})
                else:
                    instructions.append(
                        {
                            "op": "draw_text",
                            "text": content,
                            "style": {
                                "font_family": template.style.font_family,
                                "size": template.style.font_sizes[element.style_role],
                                "color": template.style.colors[element.style_role],
                            },
                            **base,
                        }
                    )
            if frame.voiceover.audio_ref:
                instructions.append(
                    {
                        "op": "play_audio",
                        "frame_id": frame.id,
                        "audio": frame.voiceover.audio_ref,
                        "t_s": start_s,
                        "duration_s": frame.voiceover.audio_duration_s,
                    }
                )
            if frame.fade_out_ms > 0:
                instructions.append(
                    {
                        "op": "fade",
                        "direction": "out",
                        "frame_id": frame.id,
                        "t_s": (t + frame.duration_ms - frame.fade_out_ms) / 1000.0,
                        "duration_s": frame.fade_out_ms / 1000.0,
                    }
                )
            t += frame.duration_ms
    return {
        "version": RENDERPLAN_VERSION,
        "total_duration_s": t / 1000.0,
        "instructions": instructions,
    }
