import random

import pytest

from oracles import parse_srt_strict, srt_timestamp_ms
from trailerforge.composition import (
    ResolvedFrame,
    StoryFragment,
    Storyboard,
    SubtitleCue,
    VoiceOverLine,
    assemble_storyboard,
    build_subtitle_cues,
    emit_renderplan,
    emit_srt,
    emit_voiceover_script,
    estimate_speech_duration,
    expand_grammar,
    resolve_elements,
    select_grammar,
    sync_duration,
    synthesize_voice,
)
from trailerforge.errors import (
    AdapterFailure,
    EmptyGrammarSet,
    TemplateMismatch,
    UnfilledSlot,
)
from trailerforge.fragments import FragmentData
from trailerforge.templates import (
    Animation,
    Constraints,
    ElementSpec,
    FragmentSpec,
    FrameSpec,
    GrammarRule,
    Rect,
    Style,
    Template,
)


class FailingTts:
    def call(self, op, payload):
        raise AdapterFailure(op, "speech backend offline")


class CountingStub:
    """Wraps the built-in stubs while counting calls per capability."""

    def __init__(self, inner):
        self.inner = inner
        self.counts = {}

    def call(self, op, payload):
        self.counts[op] = self.counts.get(op, 0) + 1
        return self.inner.call(op, payload)


def make_template(
    min_frame_s=2.0, pad_s=0.5, fade_in=0.4, fade_out=0.4, fragment_specs=None
):
    return Template(
        id="tx",
        fragment_specs=fragment_specs or {},
        style=Style(
            font_family="Inter",
            font_sizes={"body": 30.0},
            colors={"body": "#ffffff"},
        ),
        animation=Animation(fade_in_s=fade_in, fade_out_s=fade_out),
        constraints=Constraints(
            outline_slots=2, max_authors_shown=1, min_frame_s=min_frame_s, pad_s=pad_s
        ),
    )


def text_element(element_id, y):
    return ElementSpec(
        id=element_id, kind="text", position=Rect(0.1, y, 0.8, 0.1), style_role="body"
    )


def story_template():
    """Three-fragment template (the mandatory kinds) built in code."""
    specs = {
        "trailer_title": FragmentSpec(
            frames=(
                FrameSpec(
                    id="f_title",
                    elements=(text_element("trailer_title", 0.1),),
                    transition="fade",
                ),
            ),
            grammars=(
                GrammarRule("Presenting {trailer_title}.", ("trailer_title",)),
                GrammarRule("{trailer_title}. Starts now.", ("trailer_title",)),
            ),
        ),
        "outline": FragmentSpec(
            frames=(
                FrameSpec(
                    id="f_outline",
                    elements=(
                        text_element("outline_item_1", 0.1),
                        text_element("outline_item_2", 0.3),
                    ),
                    transition="cut",
                ),
            ),
            grammars=(
                GrammarRule(
                    "Covering {outline_item_1} and {outline_item_2}.",
                    ("outline_item_1", "outline_item_2"),
                ),
                GrammarRule("First up: {outline_item_1}.", ("outline_item_1",)),
            ),
        ),
        "call_to_action": FragmentSpec(
            frames=(
                FrameSpec(
                    id="f_cta",
                    elements=(
                        text_element("cta_phrase", 0.1),
                        text_element("cta_action", 0.3),
                    ),
                    transition="fade",
                ),
            ),
            grammars=(GrammarRule("{cta_phrase}", ("cta_phrase",)),),
        ),
    }
    return make_template(fragment_specs=specs)


def story_timeline(n_outline_items=2):
    items = [
        {"resource_index": i, "text": f"Topic {i}"} for i in range(1, n_outline_items + 1)
    ]
    return [
        FragmentData(
            kind="trailer_title",
            payload={
                "title": "Learning Paths",
                "candidates": [],
                "fallback_used": False,
                "hint_used": False,
            },
        ),
        FragmentData(kind="outline", payload={"items": items}),
        FragmentData(
            kind="call_to_action",
            payload={
                "phrase": "Are you ready?",
                "action_label": "Start the course",
                "action_url": None,
            },
        ),
    ]


class TestEstimate:
    def test_exact_division(self):
        # [DERIVED] 25 words / 150 wpm * 60 = 10 s
        assert estimate_speech_duration("word " * 25, 150.0) == 10.0

    def test_floor_for_short_text(self):
        assert estimate_speech_duration("hi", 150.0) == 0.5

    def test_empty_is_zero(self):
        assert estimate_speech_duration("", 150.0) == 0.0
        assert estimate_speech_duration("   ", 150.0) == 0.0

    def test_other_rate(self):
        assert estimate_speech_duration("word " * 30, 120.0) == 15.0

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            estimate_speech_duration("text", 0.0)


class TestSelectGrammar:
    def test_deterministic(self):
        rules = [GrammarRule(f"p{i}", ()) for i in range(5)]
        rule_a, idx_a = select_grammar(rules, 99)
        rule_b, idx_b = select_grammar(rules, 99)
        assert (rule_a, idx_a) == (rule_b, idx_b)
        assert rules[idx_a] is rule_a

    def test_singleton(self):
        rules = [GrammarRule("only", ())]
        assert select_grammar(rules, 0) == (rules[0], 0)

    def test_empty_raises(self):
        with pytest.raises(EmptyGrammarSet):
            select_grammar([], 0)

    def test_spread_over_seeds(self):
        rules = [GrammarRule(f"p{i}", ()) for i in range(3)]
        seen = {select_grammar(rules, s)[1] for s in range(50)}
        assert seen == {0, 1, 2}


class TestExpandGrammar:
    def test_substitution(self):
        rule = GrammarRule("Taught by {author_name}.", ("author_name",))
        assert expand_grammar(rule, {"author_name": "Ada"}) == "Taught by Ada."

    def test_missing_content(self):
        rule = GrammarRule("Taught by {author_name}.", ("author_name",))
        with pytest.raises(UnfilledSlot) as err:
            expand_grammar(rule, {})
        assert err.value.slot == "author_name"

    def test_empty_content_rejected(self):
        rule = GrammarRule("Taught by {author_name}.", ("author_name",))
        with pytest.raises(UnfilledSlot):
            expand_grammar(rule, {"author_name": ""})

    def test_undeclared_placeholder_residue(self):
        rule = GrammarRule("Hello {mystery}.", ())
        with pytest.raises(UnfilledSlot) as err:
            expand_grammar(rule, {"mystery": "ignored"})
        assert err.value.slot == "mystery"

    def test_no_slots_verbatim(self):
        rule = GrammarRule("Plain sentence.", ())
        assert expand_grammar(rule, {}) == "Plain sentence."


class TestSynthesizeVoice:
    def line(self, text="word " * 25):
        return VoiceOverLine(
            frame_id="f1", text=text.strip(), est_duration_s=estimate_speech_duration(text)
        )

    def test_no_registry_passthrough(self):
        line = self.line()
        assert synthesize_voice(line, None) == (line, None)

    def test_stub_echoes_estimate(self, stub_registry):
        line, failure = synthesize_voice(self.line(), stub_registry, "en-f-1", 150.0)
        assert failure is None
        assert line.audio_ref is None
        assert line.audio_duration_s == 10.0
        assert line.effective_duration_s() == 10.0

    def test_failure_keeps_estimate(self):
        line, failure = synthesize_voice(self.line(), FailingTts())
        assert line.audio_duration_s is None
        assert line.effective_duration_s() == line.est_duration_s
        assert failure is not None and "tts" in failure


class TestSyncDuration:
    def test_speech_plus_pad(self):
        template = make_template(min_frame_s=2.0, pad_s=0.5)
        line = VoiceOverLine(frame_id="f", text="x", est_duration_s=10.0)
        assert sync_duration(line, "fade", template) == (10500, 400, 400)

    def test_minimum_floor(self):
        template = make_template(min_frame_s=2.0, pad_s=0.5)
        line = VoiceOverLine(frame_id="f", text="x", est_duration_s=0.8)
        duration, _, _ = sync_duration(line, "fade", template)
        assert duration == 2000

    def test_cut_has_no_fades(self):
        template = make_template()
        line = VoiceOverLine(frame_id="f", text="x", est_duration_s=10.0)
        assert sync_duration(line, "cut", template) == (10500, 0, 0)

    def test_fades_scale_down_proportionally(self):
        template = make_template(min_frame_s=2.0, pad_s=0.0, fade_in=1.5, fade_out=1.5)
        line = VoiceOverLine(frame_id="f", text="", est_duration_s=0.0)
        # 3 s of fade must squeeze into a 2 s frame: scale by 2/3
        assert sync_duration(line, "fade", template) == (2000, 1000, 1000)

    def test_asymmetric_fades_keep_ratio(self):
        template = make_template(min_frame_s=1.0, pad_s=0.0, fade_in=1.5, fade_out=0.5)
        line = VoiceOverLine(frame_id="f", text="", est_duration_s=0.0)
        assert sync_duration(line, "fade", template) == (1000, 750, 250)

    def test_audio_duration_overrides_estimate(self):
        template = make_template(min_frame_s=2.0, pad_s=0.5)
        line = VoiceOverLine(
            frame_id="f", text="x", est_duration_s=1.0, audio_duration_s=6.0
        )
        duration, _, _ = sync_duration(line, "cut", template)
        assert duration == 6500

    def test_fades_never_exceed_duration_fuzz(self):
        rng = random.Random(31)
        for _ in range(200):
            template = make_template(
                min_frame_s=rng.uniform(0.1, 3.0),
                pad_s=rng.uniform(0.0, 1.0),
                fade_in=rng.uniform(0.0, 2.0),
                fade_out=rng.uniform(0.0, 2.0),
            )
            line = VoiceOverLine(
                frame_id="f", text="x", est_duration_s=rng.uniform(0.0, 12.0)
            )
            duration, fade_in, fade_out = sync_duration(line, "fade", template)
            assert fade_in >= 0 and fade_out >= 0
            assert fade_in + fade_out <= duration
            assert duration >= round(template.constraints.min_frame_s * 1000)


class TestResolveElements:
    def frame(self, *ids):
        return FrameSpec(
            id="fx",
            elements=tuple(text_element(i, 0.1 + 0.12 * n) for n, i in enumerate(ids)),
            transition="cut",
        )

    def test_meta_bindings(self):
        frag = FragmentData(
            kind="meta_information",
            payload={
                "reading_time_minutes": 6.2,
                "total_resources": 8,
                "has_discussion_forum": True,
                "wordcloud": [["tree", 9], ["svm", 7], ["node", 5], ["leaf", 4], ["margin", 3], ["extra", 1]],
            },
        )
        frame = self.frame("reading_time", "resource_count", "wordcloud_terms", "forum_note")
        resolved = resolve_elements(frag, frame)
        assert resolved == {
            "reading_time": "6.2",
            "resource_count": "8",
            "wordcloud_terms": "tree, svm, node, leaf, margin",
            "forum_note": "Active discussion forum",
        }

    def test_forum_note_absent_when_flag_off(self):
        frag = FragmentData(
            kind="meta_information",
            payload={
                "reading_time_minutes": 1.0,
                "total_resources": 1,
                "has_discussion_forum": False,
                "wordcloud": [],
            },
        )
        resolved = resolve_elements(frag, self.frame("reading_time", "forum_note"))
        assert "forum_note" not in resolved

    def test_social_rating_formatting(self):
        frag = FragmentData(
            kind="social_proof",
            payload={"learner_count": 1284, "rating": 4.6, "review_snippets": ["First!", "Second"]},
        )
        resolved = resolve_elements(frag, self.frame("learner_count", "rating", "review_snippet"))
        assert resolved["rating"] == "4.6"
        assert resolved["learner_count"] == "1284"
        assert resolved["review_snippet"] == "First!"

    def test_unknown_ids_filtered(self):
        frag = FragmentData(kind="trailer_title", payload={"title": "T"})
        assert resolve_elements(frag, self.frame("something_else")) == {}

    def test_outline_items_numbered(self):
        frag = FragmentData(
            kind="outline",
            payload={"items": [
                {"resource_index": 1, "text": "Alpha"},
                {"resource_index": 4, "text": "Beta"},
            ]},
        )
        resolved = resolve_elements(frag, self.frame("outline_item_1", "outline_item_2", "outline_item_3"))
        assert resolved == {"outline_item_1": "Alpha", "outline_item_2": "Beta"}

    def test_empty_values_dropped(self):
        frag = FragmentData(
            kind="author_details",
            payload={"name": "Ada", "affiliation": None, "image": "placeholder_author"},
        )
        resolved = resolve_elements(frag, self.frame("author_name", "author_affiliation"))
        assert resolved == {"author_name": "Ada"}


class TestAssemble:
    def test_full_pass(self, stub_registry):
        template = story_template()
        board = assemble_storyboard(story_timeline(), template, stub_registry, seed=0)
        assert board.version == "storyboard/v1"
        assert board.trailer_title == "Learning Paths"
        assert [f.kind for f in board.fragments] == [
            "trailer_title", "outline", "call_to_action",
        ]
        for frag in board.fragments:
            for frame in frag.frames:
                assert frame.duration_ms >= 2000
                effective_ms = round(frame.voiceover.effective_duration_s() * 1000)
                assert frame.duration_ms >= effective_ms
        grammars = board.audit["chosen_grammars"]
        assert set(grammars) == {"f_title", "f_outline", "f_cta"}
        title_spec = template.fragment_specs["trailer_title"]
        chosen = grammars["f_title"]
        assert title_spec.grammars[chosen["index"]].pattern == chosen["pattern"]

    def test_ineligible_rules_are_skipped(self, stub_registry):
        # with one outline item the two-slot rule cannot fire, so the single
        # remaining rule must be chosen whatever the seed says
        template = story_template()
        for seed in range(5):
            board = assemble_storyboard(
                story_timeline(n_outline_items=1), template, stub_registry, seed=seed
            )
            chosen = board.audit["chosen_grammars"]["f_outline"]
            assert chosen == {"index": 1, "pattern": "First up: {outline_item_1}."}
            outline = board.fragments[1].frames[0]
            assert outline.voiceover.text == "First up: Topic 1."

    def test_frame_with_no_eligible_rule_stays_silent(self):
        from trailerforge.adapters import AdapterRegistry

        template = story_template()
        timeline = story_timeline()
        timeline[1] = FragmentData(kind="outline", payload={"items": []})
        counting = CountingStub(AdapterRegistry.builtin())
        board = assemble_storyboard(timeline, template, counting, seed=0)
        outline = board.fragments[1].frames[0]
        assert outline.voiceover.text == ""
        assert outline.voiceover.est_duration_s == 0.0
        assert outline.duration_ms == 2000  # min frame floor
        # silent frames never hit the speech backend and emit no cue
        assert counting.counts.get("tts", 0) == 2
        assert all(cue.text for cue in board.subtitles)
        assert "f_outline" not in board.audit["chosen_grammars"]

    def test_template_mismatch(self, stub_registry):
        template = story_template()
        timeline = story_timeline() + [
            FragmentData(kind="social_proof", payload={"learner_count": 1, "rating": 5.0, "review_snippets": []})
        ]
        with pytest.raises(TemplateMismatch):
            assemble_storyboard(timeline, template, stub_registry, seed=0)

    def test_deterministic(self, stub_registry):
        template = story_template()
        a = assemble_storyboard(story_timeline(), template, stub_registry, seed=3)
        b = assemble_storyboard(story_timeline(), template, stub_registry, seed=3)
        assert a == b

    def test_tts_failures_recorded_estimate_holds(self):
        template = story_template()
        board = assemble_storyboard(story_timeline(), template, FailingTts(), seed=0)
        failures = board.audit["adapter_failures"]
        assert len(failures) == 3
        assert all(f["capability"] == "tts" for f in failures)
        for frag in board.fragments:
            for frame in frag.frames:
                assert frame.voiceover.audio_duration_s is None

    def test_audit_info_merged(self, stub_registry):
        board = assemble_storyboard(
            story_timeline(), story_template(), stub_registry, seed=0,
            audit_info={"outline_bins": [[0, 2]]},
        )
        assert board.audit["outline_bins"] == [[0, 2]]
        assert board.audit["seed"] == 0
        assert board.audit["template_id"] == "tx"


def silent_frame(frame_id, duration_ms):
    return ResolvedFrame(
        id=frame_id, transition="cut", resolved_elements={},
        voiceover=VoiceOverLine(frame_id=frame_id, text="", est_duration_s=0.0),
        duration_ms=duration_ms, fade_in_ms=0, fade_out_ms=0,
    )


def spoken_frame(frame_id, text, duration_ms):
    return ResolvedFrame(
        id=frame_id, transition="cut", resolved_elements={},
        voiceover=VoiceOverLine(
            frame_id=frame_id, text=text, est_duration_s=estimate_speech_duration(text)
        ),
        duration_ms=duration_ms, fade_in_ms=0, fade_out_ms=0,
    )


class TestSubtitles:
    def test_single_cue_spans_frame(self):
        frags = [StoryFragment(kind="x", frames=(spoken_frame("f1", "Hello there.", 4200),))]
        cues = build_subtitle_cues(frags)
        assert cues == [SubtitleCue(index=1, start_ms=0, end_ms=4200, text="Hello there.")]

    def test_proportional_split_for_overflow(self):
        text = (
            "This opening narration is deliberately made long enough "
            "to wrap across more than two subtitle display lines total."
        )
        import textwrap

        lines = textwrap.wrap(text, width=42)
        assert len(lines) > 2  # sanity: forces two cues
        frags = [StoryFragment(kind="x", frames=(spoken_frame("f1", text, 9000),))]
        cues = build_subtitle_cues(frags)
        assert len(cues) == 2
        w1 = sum(len(l) for l in lines[:2])
        w2 = sum(len(l) for l in lines[2:4])
        assert cues[0].start_ms == 0
        assert cues[0].end_ms == (9000 * w1) // (w1 + w2)
        assert cues[1].start_ms == cues[0].end_ms
        assert cues[1].end_ms == 9000
        for cue in cues:
            for line in cue.text.split("\n"):
                assert len(line) <= 42

    def test_silent_frames_emit_nothing_but_advance_clock(self):
        frags = [
            StoryFragment(kind="x", frames=(silent_frame("f1", 3000),)),
            StoryFragment(kind="y", frames=(spoken_frame("f2", "Later words.", 2000),)),
        ]
        cues = build_subtitle_cues(frags)
        assert len(cues) == 1
        assert cues[0].start_ms == 3000 and cues[0].end_ms == 5000

    def test_contiguous_numbering_across_frames(self):
        frags = [
            StoryFragment(kind="x", frames=(spoken_frame("f1", "One.", 2000),)),
            StoryFragment(kind="y", frames=(spoken_frame("f2", "Two.", 2000),)),
        ]
        cues = build_subtitle_cues(frags)
        assert [c.index for c in cues] == [1, 2]


def board_with_cues(cues, fragments=()):
    return Storyboard(
        version="storyboard/v1", trailer_title="T",
        fragments=tuple(fragments), audit={}, subtitles=tuple(cues),
    )


class TestSrt:
    def test_exact_block_format(self):
        board = board_with_cues(
            [SubtitleCue(index=1, start_ms=0, end_ms=4200, text="Welcome to Machine Learning!")]
        )
        assert emit_srt(board) == (
            "1\n00:00:00,000 --> 00:00:04,200\nWelcome to Machine Learning!\n"
        )

    def test_blank_line_between_cues_single_trailing_newline(self):
        board = board_with_cues([
            SubtitleCue(index=1, start_ms=0, end_ms=1000, text="One."),
            SubtitleCue(index=2, start_ms=1000, end_ms=2500, text="Two\nlines"),
        ])
        out = emit_srt(board)
        assert out == (
            "1\n00:00:00,000 --> 00:00:01,000\nOne.\n"
            "\n"
            "2\n00:00:01,000 --> 00:00:02,500\nTwo\nlines\n"
        )
        assert not out.endswith("\n\n")

    def test_empty_board(self):
        assert emit_srt(board_with_cues([])) == ""

    def test_timestamp_rollover(self):
        board = board_with_cues(
            [SubtitleCue(index=1, start_ms=3_599_999, end_ms=3_661_001, text="x")]
        )
        out = emit_srt(board)
        assert "00:59:59,999 --> 01:01:01,001" in out
        assert srt_timestamp_ms(3_661_001) == "01:01:01,001"

    def test_round_trips_through_strict_parser(self):
        frags = [
            StoryFragment(kind="x", frames=(spoken_frame("f1", "Hello there everyone.", 3000),)),
            StoryFragment(kind="y", frames=(spoken_frame("f2", "And welcome back again.", 2500),)),
        ]
        board = board_with_cues(build_subtitle_cues(frags), frags)
        parsed = parse_srt_strict(emit_srt(board))
        assert [(c[0], c[1], c[2]) for c in parsed] == [(1, 0, 3000), (2, 3000, 5500)]


class TestVoiceoverScript:
    def test_rows_for_spoken_frames_only(self):
        frags = [
            StoryFragment(kind="x", frames=(spoken_frame("f1", "Say this.", 2000),)),
            StoryFragment(kind="y", frames=(silent_frame("f2", 2000),)),
        ]
        board = board_with_cues([], frags)
        assert emit_voiceover_script(board) == "f1\tSay this.\n"

    def test_empty(self):
        assert emit_voiceover_script(board_with_cues([], [])) == ""


class TestRenderPlan:
    def test_structure_and_conservation(self, stub_registry):
        template = story_template()
        board = assemble_storyboard(story_timeline(), template, stub_registry, seed=0)
        plan = emit_renderplan(board, template)
        assert plan["version"] == "renderplan/v1"
        total_ms = board.total_duration_ms()
        assert round(plan["total_duration_s"] * 1000) == total_ms
        ops = [i["op"] for i in plan["instructions"]]
        assert ops.count("show_frame") == 3
        # stub TTS yields no audio assets
        assert "play_audio" not in ops
        end_ms = max(
            round((i["t_s"] + i["duration_s"]) * 1000) for i in plan["instructions"]
        )
        assert end_ms == total_ms
        for instr in plan["instructions"]:
            assert instr["t_s"] >= 0.0
            assert round((instr["t_s"] + instr["duration_s"]) * 1000) <= total_ms

    def test_fade_pair_for_fade_transitions(self, stub_registry):
        template = story_template()
        board = assemble_storyboard(story_timeline(), template, stub_registry, seed=0)
        plan = emit_renderplan(board, template)
        fades = [i for i in plan["instructions"] if i["op"] == "fade"]
        by_frame = {}
        for fade in fades:
            by_frame.setdefault(fade["frame_id"], []).append(fade["direction"])
        # fade transitions on title and cta frames; outline uses a cut
        assert by_frame == {"f_title": ["in", "out"], "f_cta": ["in", "out"]}
        title_frame = board.fragments[0].frames[0]
        out_fade = next(
            f for f in fades if f["frame_id"] == "f_title" and f["direction"] == "out"
        )
        start_ms = round(out_fade["t_s"] * 1000)
        assert start_ms == title_frame.duration_ms - title_frame.fade_out_ms

    def test_draw_text_carries_style_and_position(self, stub_registry):
        template = story_template()
        board = assemble_storyboard(story_timeline(), template, stub_registry, seed=0)
        plan = emit_renderplan(board, template)
        draws = [i for i in plan["instructions"] if i["op"] == "draw_text"]
        assert draws, "expected text draws"
        for draw in draws:
            assert draw["style"]["font_family"] == "Inter"
            assert draw["style"]["size"] == 30.0
            assert draw["style"]["color"] == "#ffffff"
            pos = draw["position"]
            assert set(pos) == {"x", "y", "w", "h"}

    def test_play_audio_when_audio_ref_present(self):
        template = story_template()
        frame = ResolvedFrame(
            id="f_title", transition="cut", resolved_elements={},
            voiceover=VoiceOverLine(
                frame_id="f_title", text="Spoken.", est_duration_s=0.5,
                audio_ref="/tmp/a.wav", audio_duration_s=1.5,
            ),
            duration_ms=2000, fade_in_ms=0, fade_out_ms=0,
        )
        board = board_with_cues([], [StoryFragment(kind="trailer_title", frames=(frame,))])
        plan = emit_renderplan(board, template)
        audio = [i for i in plan["instructions"] if i["op"] == "play_audio"]
        assert len(audio) == 1
        assert audio[0]["audio"] == "/tmp/a.wav"
        assert audio[0]["duration_s"] == 1.5

    def test_mismatched_template_raises(self, stub_registry):
        template = story_template()
        board = assemble_storyboard(story_timeline(), template, stub_registry, seed=0)
        other = make_template(fragment_specs={})
        with pytest.raises(TemplateMismatch):
            emit_renderplan(board, other)
