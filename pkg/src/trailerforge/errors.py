"""Exception types shared across the pipeline."""

from __future__ import annotations


class TrailerForgeError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(TrailerForgeError):
    """A manifest, template or adapter config field is missing or ill-typed."""


class MissingFile(TrailerForgeError):
    """A referenced file path could not be resolved."""


class DuplicateId(TrailerForgeError):
    """Two resources in one pathway share an id."""


class EmptyPathway(TrailerForgeError):
    """The manifest lists no resources."""


class DimensionMismatch(TrailerForgeError):
    """Two vectors of different dimensionality were compared."""


class ZeroVector(TrailerForgeError):
    """Cosine similarity is undefined for an all-zero vector."""


class EmptyCorpus(TrailerForgeError):
    """The embedder cannot be fit on an empty corpus."""


class TooFewEligible(TrailerForgeError):
    """Fewer than two resources survive eligibility filtering."""


class AdapterFailure(TrailerForgeError):
    """An adapter call failed after exhausting its retry budget."""

    def __init__(self, capability: str, message: str):
        super().__init__(f"{capability}: {message}")
        self.capability = capability


class MissingAsset(TrailerForgeError):
    """A creator-supplied asset path does not resolve to a file."""


class EmptyPhraseSet(TrailerForgeError):
    """The call-to-action phrase set is empty."""


class MissingMandatoryFragment(TrailerForgeError):
    """A timeline is missing one of the mandatory fragments."""


class OverlapError(TrailerForgeError):
    """Two element rects in one template frame overlap."""


class DanglingSlot(TrailerForgeError):
    """A grammar slot references an element id the fragment does not define."""


class UnfilledSlot(TrailerForgeError):
    """A grammar was expanded without content for one of its slots."""

    def __init__(self, slot: str):
        super().__init__(f"no content for slot '{slot}'")
        self.slot = slot


class EmptyGrammarSet(TrailerForgeError):
    """A grammar was requested from an empty rule set."""


class TemplateMismatch(TrailerForgeError):
    """The timeline contains a fragment kind the template has no spec for."""
