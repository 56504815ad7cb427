"""provkit: retrieval-assisted provenance attribution for artifact photographs.

Given a photograph of an artifact, provkit retrieves stylistically
similar reference objects from a dual-modal knowledge base (catalogue
images plus their surrounding text) via three parallel strategies,
aggregates the candidates into a deduplicated, label-ordered pool, and
drives a two-phase vision-language-model protocol that emits a
structured provenance attribution with page-level citations, ready for
expert review and four-level scoring.
"""

from .aggregate import CandidatePool, PoolEntry, dedup_sort, pool, truncate
from .corpus import (
    CorpusManifest,
    CorpusStore,
    DocumentRecord,
    ImageAsset,
    PageContext,
    ingest_bundles,
    load_manifest,
    save_manifest,
)
from .embedding import (
    EmbeddingVector,
    RemoteEmbedder,
    StubEmbedder,
    cosine,
    embed_image,
    embed_text,
)
from .evaluation import ExpertScore, ScoreDistribution, ScoreLog, distribution_from_scores
from .filtering import GaussianKernel, edge_map, gaussian_kernel
from .imaging import ImageTensor, preprocess
from .inference import (
    AttributionReport,
    CandidateDossier,
    CandidateInterpretation,
    run_analysis,
)
from .labels import CandidateLabel
from .retrieval import (
    Retriever,
    SearchHit,
    VectorIndex,
    build_index,
    search,
)
from .vlm import MockVlmClient, RemoteVlmClient, Transcript

__version__ = "0.1.0"

__all__ = [
    "AttributionReport",
    "CandidateDossier",
    "CandidateInterpretation",
    "CandidateLabel",
    "CandidatePool",
    "CorpusManifest",
    "CorpusStore",
    "DocumentRecord",
    "EmbeddingVector",
    "ExpertScore",
    "GaussianKernel",
    "ImageAsset",
    "ImageTensor",
    "MockVlmClient",
    "PageContext",
    "PoolEntry",
    "RemoteEmbedder",
    "RemoteVlmClient",
    "Retriever",
    "ScoreDistribution",
    "ScoreLog",
    "SearchHit",
    "StubEmbedder",
    "Transcript",
    "VectorIndex",
    "build_index",
    "cosine",
    "dedup_sort",
    "distribution_from_scores",
    "edge_map",
    "embed_image",
    "embed_text",
    "gaussian_kernel",
    "ingest_bundles",
    "load_manifest",
    "pool",
    "preprocess",
    "run_analysis",
    "save_manifest",
    "search",
    "truncate",
]
