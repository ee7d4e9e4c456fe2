"""End-to-end compilation: manifest in, storyboard artifacts out."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .adapters import AdapterRegistry
from .composition import (
    Storyboard,
    assemble_storyboard,
    emit_renderplan,
    emit_srt,
    emit_voiceover_script,
)
from .corpus import CreatorInput, Pathway, PathwayStats, compute_stats, load_manifest
from .fragments import (
    FragmentData,
    build_timeline,
    gen_author_fragment,
    gen_cta,
    gen_meta_fragment,
    gen_outline_fragment,
    gen_social_proof,
    gen_splash,
    gen_trailer_title,
    load_cta_phrases,
    suggest_definitions,
    title_fragment,
)
from .jsonio import dumps_canonical
from .rng import stream_seed
from .selection import FilterConfig, select_outline
from .templates import Template, load_template
from .textmetrics import load_stopwords, term_frequencies

WORDCLOUD_VERSION = "wordcloud/v1"

OUTPUT_FILENAMES = (
    "storyboard.json",
    "subtitles.srt",
    "voiceover.txt",
    "renderplan.json",
    "wordcloud.json",
)


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    reading_speed_wpm: float = 200.0
    speaking_rate_wpm: float = 150.0
    tf_threshold: float = 0.01
    outline_max_chars: int = 80
    wordcloud_top_k: int = 20
    max_definition_suggestions: int = 3
    voice: str = "en-f-1"
    stopwords_path: str | None = None
    cta_phrases_path: str | None = None


@dataclass(frozen=True)
class CompileResult:
    storyboard: Storyboard
    template: Template
    pathway: Pathway
    creator: CreatorInput
    stats: PathwayStats
    renderplan: dict
    wordcloud: list = field(default_factory=list)
    # ordered timeline fragments, carrying unaccepted enrichment suggestions
    fragments: tuple[FragmentData, ...] = ()

    def storyboard_json(self) -> str:
        return dumps_canonical(self.storyboard.to_dict())

    def subtitles_srt(self) -> str:
        return emit_srt(self.storyboard)

    def voiceover_txt(self) -> str:
        return emit_voiceover_script(self.storyboard)

    def renderplan_json(self) -> str:
        return dumps_canonical(self.renderplan)

    def wordcloud_json(self) -> str:
        return dumps_canonical(
            {
                "version": WORDCLOUD_VERSION,
                "terms": [{"term": term, "count": count} for term, count in self.wordcloud],
            }
        )


def compile_pathway(
    manifest_path: str | Path,
    template_path: str | Path,
    registry: AdapterRegistry | None = None,
    config: PipelineConfig | None = None,
) -> CompileResult:
    cfg = config or PipelineConfig()
    if registry is None:
        registry = AdapterRegistry.builtin()
    pathway, creator = load_manifest(manifest_path)
    template = load_template(template_path)
    base_dir = Path(manifest_path).parent

    stopwords = load_stopwords(cfg.stopwords_path)
    stats = compute_stats(pathway, cfg.reading_speed_wpm)
    tf = term_frequencies([r.text for r in pathway.resources], stopwords)

    filter_cfg = FilterConfig(
        k_required=template.constraints.outline_slots,
        rng_seed=cfg.seed,
    )
    selection = select_outline(pathway, filter_cfg, registry)
    title = gen_trailer_title(pathway, registry, cfg.tf_threshold, stopwords)

    outline = gen_outline_fragment(selection, registry, cfg.outline_max_chars)
    definitions = suggest_definitions(pathway, registry, cfg.max_definition_suggestions)
    if definitions:
        outline = replace(outline, suggestions=outline.suggestions + tuple(definitions))

    phrases = load_cta_phrases(cfg.cta_phrases_path)
    fragments: list[FragmentData] = [
        gen_splash(creator, base_dir),
        title_fragment(title),
        gen_author_fragment(creator, template, base_dir),
        outline,
        gen_meta_fragment(stats, tf, cfg.wordcloud_top_k),
        gen_social_proof(creator),
        gen_cta(
            stream_seed(cfg.seed, "cta"),
            phrases,
            action_url=creator.preferences.get("action_url"),
        ),
    ]
    splash_position = creator.splash.position if creator.splash else "first"
    timeline = build_timeline(fragments, splash_position)

    audit_info = {
        "filter_outcomes": [
            {
                "stage": outcome.stage,
                "chosen_threshold": outcome.chosen_threshold,
                "retained_indices": list(outcome.retained_indices),
                "fallback": outcome.fallback,
            }
            for outcome in selection.filter_outcomes
        ],
        "outline_bins": [list(r) for r in selection.bins],
        "title": {
            "candidates": [c.text for c in title.candidates],
            "selected": title.selected,
            "fallback_used": title.fallback_used,
            "hint_used": title.hint_used,
        },
    }
    storyboard = assemble_storyboard(
        timeline,
        template,
        registry,
        cfg.seed,
        speaking_rate_wpm=cfg.speaking_rate_wpm,
        voice=cfg.voice,
        audit_info=audit_info,
    )
    renderplan = emit_renderplan(storyboard, template)
    return CompileResult(
        storyboard=storyboard,
        template=template,
        pathway=pathway,
        creator=creator,
        stats=stats,
        renderplan=renderplan,
        wordcloud=tf.top(cfg.wordcloud_top_k),
        fragments=tuple(timeline),
    )


def write_outputs(result: CompileResult, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    contents = {
        "storyboard.json": result.storyboard_json(),
        "subtitles.srt": result.subtitles_srt(),
        "voiceover.txt": result.voiceover_txt(),
        "renderplan.json": result.renderplan_json(),
        "wordcloud.json": result.wordcloud_json(),
    }
    written = []
    for name in OUTPUT_FILENAMES:
        path = out / name
        path.write_text(contents[name], "utf-8")
        written.append(path)
    return written
