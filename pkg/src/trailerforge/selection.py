"""Near-duplicate filtering and outline text selection.

The scan keeps the first and last input items unconditionally, walks the
interior in pathway order, and appends an item only when its maximum
similarity against everything retained so far stays strictly below the
threshold.  The adaptive search wraps that scan over a quantized threshold
grid and keeps the smallest retained set that still meets the outline quota.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Pathway
from .errors import TooFewEligible
from .rng import stream_rng
from .textmetrics import cosine, embed, fit_tfidf, jaccard, tokenize

# Resource texts are capped at their first 2000 tokens for similarity work;
# near-duplicate resources are near-duplicates in their openings.
DEDUP_TOKEN_LIMIT = 2000

DEFAULT_THRESHOLD_GRID = tuple(i / 10 for i in range(11))


@dataclass(frozen=True)
class FilterConfig:
    k_required: int = 5
    threshold_grid: tuple[float, ...] = DEFAULT_THRESHOLD_GRID
    min_tokens_short_doc: int = 120
    rng_seed: int = 0

    def __post_init__(self):
        if self.k_required < 2:
            raise ValueError("k_required must be at least 2")
        grid = self.threshold_grid
        if not grid or any(not 0 <= t <= 1 for t in grid):
            raise ValueError("threshold grid must lie within [0, 1]")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("threshold grid must be strictly increasing")


@dataclass(frozen=True)
class FilterOutcome:
    retained_indices: tuple[int, ...]
    chosen_threshold: float
    stage: str  # "jaccard" | "cosine"
    fallback: bool = False


@dataclass(frozen=True)
class OutlineEntry:
    resource_index: int
    outline_text: str


@dataclass(frozen=True)
class OutlineSelection:
    entries: tuple[OutlineEntry, ...]
    bins: tuple[tuple[int, int], ...]
    filter_outcomes: tuple[FilterOutcome, ...] = field(default=())


def eligible_resources(pathway: Pathway, cfg: FilterConfig) -> list[int]:
    """1-based indices of resources that are not assessments and not short."""
    indices = [
        res.meta.order
        for res in pathway.resources
        if res.meta.kind != "assessment" and res.token_count >= cfg.min_tokens_short_doc
    ]
    if len(indices) < 2:
        raise TooFewEligible(
            f"outline needs at least 2 eligible resources, found {len(indices)}"
        )
    return indices


def exact_dedup(indices: list[int], pathway: Pathway) -> list[int]:
    """Drop later resources whose normalized text repeats an earlier one.

    The terminal index always survives, even as a duplicate: the outline pins
    the last eligible resource, and the similarity filter downstream removes
    whichever earlier copy became redundant.
    """
    terminal = indices[-1] if indices else None
    seen: set[str] = set()
    keep: list[int] = []
    for i in indices:
        key = " ".join(tokenize(pathway.resource_at(i).text))
        if key not in seen:
            seen.add(key)
            keep.append(i)
        elif i == terminal:
            keep.append(i)
    return keep


def truncated_text(pathway: Pathway, index: int) -> str:
    """Normalized similarity input for one resource (first 2000 tokens)."""
    return " ".join(tokenize(pathway.resource_at(index).text)[:DEDUP_TOKEN_LIMIT])


def local_embeddings(indices: list[int], pathway: Pathway) -> dict[int, tuple[float, ...]]:
    """TF-IDF vectors fit on the candidate batch itself (hermetic fallback)."""
    texts = [truncated_text(pathway, i) for i in indices]
    state = fit_tfidf([tokenize(t) for t in texts])
    return {i: embed(state, t).values for i, t in zip(indices, texts)}


def duplicates_filter(
    indices: list[int],
    pathway: Pathway,
    threshold: float,
    measure: str,
    vectors: dict[int, tuple[float, ...]] | None = None,
) -> list[int]:
    """Greedy near-duplicate scan; returns retained indices in pathway order."""
    if len(indices) < 2:
        raise ValueError("duplicates_filter needs at least 2 indices")
    if measure not in ("jaccard", "cosine"):
        raise ValueError(f"unknown similarity measure '{measure}'")
    if measure == "cosine" and vectors is None:
        vectors = local_embeddings(indices, pathway)

    token_sets: dict[int, set[str]] = {}
    if measure == "jaccard":
        for i in indices:
            token_sets[i] = set(tokenize(pathway.resource_at(i).text)[:DEDUP_TOKEN_LIMIT])

    def similarity(a: int, b: int) -> float:
        if measure == "jaccard":
            return jaccard(token_sets[a], token_sets[b])
        return cosine(vectors[a], vectors[b])

    retained = [indices[0], indices[-1]]
    for i in indices[1:-1]:
        top = max(similarity(i, r) for r in retained)
        if top < threshold:
            retained.append(i)
    return sorted(retained)


def adaptive_threshold_search(
    indices: list[int],
    pathway: Pathway,
    cfg: FilterConfig,
    measure: str,
    vectors: dict[int, tuple[float, ...]] | None = None,
) -> FilterOutcome:
    """Pick the grid threshold whose retained set is smallest while still >= K.

    Ties go to the lowest threshold.  When no threshold reaches K the whole
    input is kept (identity fallback, recorded with the 1.0 sentinel).
    """
    if measure == "cosine" and vectors is None:
        vectors = local_embeddings(indices, pathway)
    best_threshold: float | None = None
    best_retained: list[int] | None = None
    for t in cfg.threshold_grid:
        retained = duplicates_filter(indices, pathway, t, measure, vectors)
        if len(retained) < cfg.k_required:
            continue
        if best_retained is None or len(retained) < len(best_retained):
            best_threshold = t
            best_retained = retained
    if best_retained is None:
        return FilterOutcome(
            retained_indices=tuple(indices),
            chosen_threshold=1.0,
            stage=measure,
            fallback=True,
        )
    return FilterOutcome(
        retained_indices=tuple(best_retained),
        chosen_threshold=best_threshold,
        stage=measure,
    )


def bin_partition(count: int, bins: int) -> list[tuple[int, int]]:
    """Split 0..count-1 into `bins` contiguous half-open ranges, larger first."""
    if count < 0 or bins < 1:
        raise ValueError("bin_partition needs count >= 0 and bins >= 1")
    base, rem = divmod(count, bins)
    ranges = []
    start = 0
    for b in range(bins):
        size = base + (1 if b < rem else 0)
        ranges.append((start, start + size))
        start += size
    return ranges


def select_outline(pathway: Pathway, cfg: FilterConfig, registry) -> OutlineSelection:
    """Full outline pipeline: eligibility, dedup, two-stage filter, bin sampling."""
    indices = eligible_resources(pathway, cfg)
    indices = exact_dedup(indices, pathway)

    jac = adaptive_threshold_search(indices, pathway, cfg, "jaccard")
    survivors = list(jac.retained_indices)

    if registry is not None:
        texts = [truncated_text(pathway, i) for i in survivors]
        response = registry.call("embed", {"texts": texts})
        vectors = {
            i: tuple(float(x) for x in row)
            for i, row in zip(survivors, response["vectors"])
        }
    else:
        vectors = local_embeddings(survivors, pathway)
    cos = adaptive_threshold_search(survivors, pathway, cfg, "cosine", vectors)
    survivors = list(cos.retained_indices)

    titles: dict[int, str] = {}
    for i in survivors:
        if registry is not None:
            titles[i] = registry.call("title", {"text": pathway.resource_at(i).text})["title"]
        else:
            titles[i] = pathway.resource_at(i).meta.id

    k = cfg.k_required
    bins: tuple[tuple[int, int], ...] = ()
    if len(survivors) <= k:
        chosen = survivors
    elif k == 2:
        chosen = [survivors[0], survivors[-1]]
    else:
        interior = survivors[1:-1]
        ranges = bin_partition(len(interior), k - 2)
        rng = stream_rng(cfg.rng_seed, "bins")
        chosen = [survivors[0]]
        for start, stop in ranges:
            if stop > start:
                chosen.append(interior[rng.randrange(start, stop)])
        chosen.append(survivors[-1])
        bins = tuple(ranges)

    entries = tuple(OutlineEntry(resource_index=i, outline_text=titles[i]) for i in chosen)
    return OutlineSelection(entries=entries, bins=bins, filter_outcomes=(jac, cos))
