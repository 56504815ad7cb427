"""Shared fixtures: the committed corpus, its index, and VLM stand-ins."""

from __future__ import annotations

import json
import re
from pathlib import Path

import pytest

from provkit.corpus import CorpusStore, ingest_bundles
from provkit.embedding import StubEmbedder
from provkit.retrieval import Retriever, build_index
from provkit.vlm import MockVlmClient

FIXTURES = Path(__file__).parent / "fixtures"
SIDE = 64
SIGMA = 1.0


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def stub() -> StubEmbedder:
    return StubEmbedder()


@pytest.fixture(scope="session")
def fixture_store(tmp_path_factory) -> CorpusStore:
    root = tmp_path_factory.mktemp("corpus")
    bundles = sorted(p for p in (FIXTURES / "corpus_bundles").iterdir() if p.is_dir())
    return ingest_bundles(root, bundles)


@pytest.fixture(scope="session")
def fixture_index(fixture_store, stub, tmp_path_factory):
    index = build_index(fixture_store, stub, stub, sigma=SIGMA, side=SIDE)
    path = tmp_path_factory.mktemp("index") / "index.bin"
    index.save(path)
    index.path = path  # handy for configs pointing at the shared index
    return index


@pytest.fixture(scope="session")
def fixture_retriever(fixture_index, stub) -> Retriever:
    return Retriever(fixture_index, stub, stub, side=SIDE)


@pytest.fixture(scope="session")
def query_bytes() -> bytes:
    return (FIXTURES / "query.png").read_bytes()


@pytest.fixture(scope="session")
def golden_report_bytes() -> bytes:
    return (FIXTURES / "golden_report.json").read_bytes()


@pytest.fixture()
def mock_vlm() -> MockVlmClient:
    return MockVlmClient.from_file(FIXTURES / "vlm_responses.json")


_LABEL_RE = re.compile(r"- identifier: (\S+)")
_DOC_RE = re.compile(r"- source document: .*\((\S+)\), page (\d+)")
_CITED_RE = re.compile(r'"doc_id": "([^"]+)",\s*"page_no": (\d+)')


class AutoVlmClient:
    """Answers any pipeline prompt with a schema-valid reply.

    Phase-1 replies echo the candidate's own document and page; phase-2
    picks the first citation found in the prompt. Per-label overrides
    let tests inject malformed replies or bad citations; each override
    is a list consumed call by call, falling back to the default reply
    once exhausted (so corrective retries can be observed succeeding).
    """

    model = "auto"

    def __init__(self, overrides: dict[str, list[str]] | None = None,
                 synthesis_override: list[str] | None = None):
        self.overrides = {k: list(v) for k, v in (overrides or {}).items()}
        self.synthesis_override = list(synthesis_override or [])

    def _phase1(self, prompt: str) -> str:
        label = _LABEL_RE.search(prompt).group(1)
        if self.overrides.get(label):
            return self.overrides[label].pop(0)
        doc_id, page_no = _DOC_RE.search(prompt).groups()
        return json.dumps(
            {
                "label": label,
                "excavation_site": f"site near {doc_id}",
                "cultural_period": "synthetic test horizon",
                "similarity_rationale": f"echoes the outline shown on page {page_no}",
                "reference": {"doc_id": doc_id, "page_no": int(page_no)},
            }
        )

    def _phase2(self, prompt: str) -> str:
        if self.synthesis_override:
            return self.synthesis_override.pop(0)
        doc_id, page_no = _CITED_RE.search(prompt).groups()
        return json.dumps(
            {
                "site": "synthetic test region",
                "period": "synthetic test horizon",
                "best_reference": {"doc_id": doc_id, "page_no": int(page_no)},
                "justification": "chosen from the strongest cited parallel",
            }
        )

    def chat(self, prompt: str, images) -> str:
        if _LABEL_RE.search(prompt):
            return self._phase1(prompt)
        return self._phase2(prompt)


@pytest.fixture()
def auto_vlm() -> AutoVlmClient:
    return AutoVlmClient()


@pytest.fixture()
def make_auto_vlm():
    return AutoVlmClient


def write_service_config(
    path: Path,
    corpus_dir: Path,
    index_path: Path,
    data_dir: Path,
    extra: dict | None = None,
) -> Path:
    config = {
        "data_dir": str(data_dir),
        "corpus_dir": str(corpus_dir),
        "index_path": str(index_path),
        "scores_path": str(data_dir / "scores.jsonl"),
        "embedder": {"kind": "stub"},
        "vlm": {"kind": "mock", "responses": str(FIXTURES / "vlm_responses.json")},
        "defaults": {"k": 5, "m": 10, "sigma": SIGMA, "side": SIDE},
        "limits": {"max_upload_bytes": 10 * 1024 * 1024, "phase1_workers": 4, "job_workers": 1},
    }
    for key, value in (extra or {}).items():
        if isinstance(value, dict) and isinstance(config.get(key), dict):
            config[key].update(value)
        else:
            config[key] = value
    path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return path


@pytest.fixture()
def service_config_path(tmp_path, fixture_store, fixture_index) -> Path:
    return write_service_config(
        tmp_path / "config.json",
        corpus_dir=fixture_store.root,
        index_path=fixture_index.path,
        data_dir=tmp_path / "data",
    )
