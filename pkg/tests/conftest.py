from __future__ import annotations

import json
from importlib import resources as importlib_resources
from pathlib import Path

import pytest

from trailerforge.adapters import AdapterRegistry
from trailerforge.corpus import Pathway, Resource, ResourceMeta
from trailerforge.templates import bundled_template_path
from trailerforge.textmetrics import tokenize


# one (verdict, name) entry per acceptance criterion that ran; printed after
# the test session because pytest's fd-level capture swallows inline prints
ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for verdict, name in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"ACCEPTANCE {verdict}: {name}")


def build_pathway(texts, kinds=None, title_hint=None, forum=False):
    resources = []
    for n, text in enumerate(texts, start=1):
        kind = kinds[n - 1] if kinds is not None else "document"
        meta = ResourceMeta(
            id=f"r{n}", kind=kind, order=n, source_path=f"r{n}.txt", title_hint=None
        )
        resources.append(Resource(meta=meta, text=text, token_count=len(tokenize(text))))
    return Pathway(
        resources=tuple(resources), title_hint=title_hint, has_discussion_forum=forum
    )


@pytest.fixture
def make_pathway():
    return build_pathway


@pytest.fixture
def stub_registry():
    with AdapterRegistry.builtin() as registry:
        yield registry


@pytest.fixture(scope="session")
def sample_manifest_path() -> Path:
    root = importlib_resources.files("trailerforge") / "data" / "sample_pathway"
    return Path(str(root / "pathway.json"))


@pytest.fixture(scope="session")
def t1_path() -> Path:
    return bundled_template_path("t1")


@pytest.fixture(scope="session")
def t2_path() -> Path:
    return bundled_template_path("t2")


def write_manifest(directory: Path, texts, kinds=None, creator=None, **top_level):
    """Materialise a manifest plus its resource files under ``directory``."""
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for n, text in enumerate(texts, start=1):
        name = f"r{n}.txt"
        (directory / name).write_text(text, encoding="utf-8")
        entry = {"id": f"r{n}", "path": name}
        entry["kind"] = kinds[n - 1] if kinds is not None else "document"
        entries.append(entry)
    manifest = {
        "resources": entries,
        "creator": creator
        if creator is not None
        else {"authors": [{"name": "Test Author"}]},
        "has_discussion_forum": False,
    }
    manifest.update(top_level)
    path = directory / "pathway.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def manifest_writer():
    return write_manifest


def long_text(topic_words, n_tokens=130):
    """A text of ``n_tokens`` tokens built by cycling topic words; long enough
    to clear the short-document floor."""
    words = []
    i = 0
    while len(words) < n_tokens:
        words.append(topic_words[i % len(topic_words)])
        i += 1
    return " ".join(words)
