"""Two-phase reasoning over the retrieved candidates.

Phase 1 interprets each candidate individually: the model sees the
target photograph, the candidate image and its context paragraphs, and
must answer with a structured JSON document naming the excavation site,
cultural period, similarity rationale and a bibliographic reference
with page number. Phase 2 feeds the target image and all phase-1
outputs back to the model to synthesize a single attribution.

Two guards keep fabricated citations out of reports. A phase-1
interpretation citing a page that does not exist in the corpus is
flagged invalid and excluded from phase 2. A phase-2 best_reference
that is not among the phase-1 citations triggers one corrective
re-prompt and then a hard failure. Malformed replies likewise get one
corrective re-prompt carrying the validator message before failing.

Prompt templates are versioned files shipped with the package; their
hashes are recorded in every report.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import jsonschema

from .aggregate import dedup_sort, pool, pool_records, truncate
from .corpus import CorpusStore
from .errors import CitationError, PipelineError, VlmResponseError
from .labels import CandidateLabel
from .retrieval import Retriever, SearchHit, StrategyHits
from .vlm import Transcript, TranscribingClient, VlmClient

_TEMPLATE_DIR = Path(__file__).parent / "templates"

INTERPRETATION_SCHEMA = {
    "type": "object",
    "required": ["label", "excavation_site", "cultural_period", "similarity_rationale", "reference"],
    "additionalProperties": False,
    "properties": {
        "label": {"type": "string", "minLength": 1},
        "excavation_site": {"type": "string", "minLength": 1},
        "cultural_period": {"type": "string", "minLength": 1},
        "similarity_rationale": {"type": "string", "minLength": 1},
        "reference": {
            "type": "object",
            "required": ["doc_id", "page_no"],
            "additionalProperties": False,
            "properties": {
                "doc_id": {"type": "string", "minLength": 1},
                "page_no": {"type": "integer", "minimum": 1},
            },
        },
    },
}

SYNTHESIS_SCHEMA = {
    "type": "object",
    "required": ["site", "period", "best_reference", "justification"],
    "additionalProperties": False,
    "properties": {
        "site": {"type": "string", "minLength": 1},
        "period": {"type": "string", "minLength": 1},
        "best_reference": {
            "type": "object",
            "required": ["doc_id", "page_no"],
            "additionalProperties": False,
            "properties": {
                "doc_id": {"type": "string", "minLength": 1},
                "page_no": {"type": "integer", "minimum": 1},
            },
        },
        "justification": {"type": "string", "minLength": 1},
    },
}


def load_template(name: str) -> str:
    return (_TEMPLATE_DIR / name).read_text(encoding="utf-8")


def template_hash(name: str) -> str:
    return hashlib.sha256((_TEMPLATE_DIR / name).read_bytes()).hexdigest()


@dataclass(frozen=True)
class CandidateDossier:
    label: str
    doc_id: str
    page_no: int
    image_id: str
    doc_title: str
    caption: str | None
    context: tuple[tuple[str, str], ...]
    strategies: tuple[str, ...]
    scores: dict[str, float]


@dataclass(frozen=True)
class CandidateInterpretation:
    label: str
    excavation_site: str
    cultural_period: str
    similarity_rationale: str
    reference: tuple[str, int]  # (doc_id, page_no)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "excavation_site": self.excavation_site,
            "cultural_period": self.cultural_period,
            "similarity_rationale": self.similarity_rationale,
            "reference": {"doc_id": self.reference[0], "page_no": self.reference[1]},
        }


@dataclass
class AttributionReport:
    target_sha256: str
    site: str
    period: str
    best_reference: tuple[str, int]
    justification: str
    interpretations: list[CandidateInterpretation]
    excluded: list[dict]
    hits: StrategyHits
    pool_records: list[dict]
    candidates: list[str]
    selected: list[dict]
    parameters: dict
    embedders: dict
    model: str
    template_hashes: dict

    def to_dict(self) -> dict:
        def hit_records(hits: Sequence[SearchHit]) -> list[dict]:
            return [{"label": h.label, "score": round(h.score, 6)} for h in hits]

        return {
            "schema_version": 1,
            "model": self.model,
            "templates": self.template_hashes,
            "parameters": self.parameters,
            "embedders": self.embedders,
            "target_image": {"sha256": self.target_sha256},
            "site": self.site,
            "period": self.period,
            "best_reference": {"doc_id": self.best_reference[0], "page_no": self.best_reference[1]},
            "justification": self.justification,
            "interpretations": [i.to_dict() for i in self.interpretations],
            "excluded": self.excluded,
            "retrieval": {
                "hits": {
                    "raw": hit_records(self.hits.raw),
                    "edge": hit_records(self.hits.edge),
                    "clip": hit_records(self.hits.clip),
                },
                "pool": self.pool_records,
                "candidates": self.candidates,
                "selected": self.selected,
            },
        }

    def to_json_bytes(self) -> bytes:
        return (json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n").encode("utf-8")


def extract_json(text: str) -> dict:
    """Parse a model reply as a JSON object, tolerating markdown fences."""
    body = text.strip()
    if body.startswith("```"):
        lines = body.splitlines()
        if lines[-1].strip().startswith("```"):
            lines = lines[1:-1]
        else:
            lines = lines[1:]
        body = "\n".join(lines).strip()
    parsed = json.loads(body)
    if not isinstance(parsed, dict):
        raise ValueError(f"expected a JSON object, got {type(parsed).__name__}")
    return parsed


def _validate(payload_text: str, schema: dict) -> tuple[dict | None, str | None]:
    try:
        document = extract_json(payload_text)
    except ValueError as exc:
        return None, f"reply is not a JSON object: {exc}"
    try:
        jsonschema.validate(document, schema)
    except jsonschema.ValidationError as exc:
        return None, f"reply violates the output schema: {exc.message}"
    return document, None


_CORRECTIVE = (
    "{prompt}\n\n"
    "Your previous reply was rejected: {error}\n"
    "Answer again with only a valid JSON object in the required form."
)


def build_dossiers(store: CorpusStore, selected: Sequence[str], candidates) -> list[CandidateDossier]:
    """Assemble one dossier per selected label, in label order."""
    dossiers = []
    for label in selected:
        parsed = CandidateLabel.parse(label)
        asset = store.asset(parsed.image_id)
        doc = store.document(parsed.doc_id)
        entry = candidates.entries[label]
        dossiers.append(
            CandidateDossier(
                label=label,
                doc_id=parsed.doc_id,
                page_no=parsed.page_no,
                image_id=parsed.image_id,
                doc_title=doc.title if doc else parsed.doc_id,
                caption=asset.caption,
                context=tuple(store.link_context(parsed.image_id)),
                strategies=tuple(sorted(entry.strategies)),
                scores={s: round(v, 6) for s, v in entry.scores.items()},
            )
        )
    return dossiers


def render_phase1(template: str, dossier: CandidateDossier) -> str:
    context = "\n\n".join(text for _, text in dossier.context) or "(no context paragraphs)"
    return template.format(
        label=dossier.label,
        doc_title=dossier.doc_title,
        doc_id=dossier.doc_id,
        page_no=dossier.page_no,
        caption=dossier.caption or "(none)",
        strategies=", ".join(dossier.strategies),
        context=context,
    )


def render_phase2(template: str, interpretations: Sequence[CandidateInterpretation]) -> str:
    payload = json.dumps([i.to_dict() for i in interpretations], sort_keys=True, indent=2)
    return template.format(interpretations=payload)


def interpret_candidate(
    dossier: CandidateDossier,
    client: TranscribingClient,
    store: CorpusStore,
    target_bytes: bytes,
    template: str,
) -> tuple[CandidateInterpretation | None, dict | None]:
    """Phase 1 for one candidate.

    Returns (interpretation, None) on success and (None, exclusion
    record) when the reply cites a page that fails the corpus check.
    A reply that still violates the schema after the corrective retry
    raises VlmResponseError.
    """
    prompt = render_phase1(template, dossier)
    images = [target_bytes, store.image_bytes(dossier.image_id)]
    document = None
    error = None
    for attempt in range(2):
        current = prompt if attempt == 0 else _CORRECTIVE.format(prompt=prompt, error=error)
        reply = client.chat_recorded(current, images, "interpret", dossier.label, attempt)
        document, error = _validate(reply, INTERPRETATION_SCHEMA)
        if document is not None and document["label"] != dossier.label:
            document, error = None, (
                f"label field must be {dossier.label!r}, got {document['label']!r}"
            )
        if document is not None:
            break
    if document is None:
        raise VlmResponseError(f"candidate {dossier.label}: {error}")

    doc_id = document["reference"]["doc_id"]
    page_no = document["reference"]["page_no"]
    if not store.validate_reference(doc_id, page_no):
        return None, {
            "label": dossier.label,
            "reason": "cited reference does not resolve to an existing document page",
        }
    return (
        CandidateInterpretation(
            label=dossier.label,
            excavation_site=document["excavation_site"],
            cultural_period=document["cultural_period"],
            similarity_rationale=document["similarity_rationale"],
            reference=(doc_id, page_no),
        ),
        None,
    )


def synthesize(
    target_bytes: bytes,
    interpretations: Sequence[CandidateInterpretation],
    client: TranscribingClient,
    store: CorpusStore,
    template: str,
) -> dict:
    """Phase 2: cross-candidate judgment constrained to cited references."""
    if not interpretations:
        raise ValueError("synthesis requires at least one valid interpretation")
    prompt = render_phase2(template, interpretations)
    cited = {i.reference for i in interpretations}
    document = None
    error = None
    for attempt in range(2):
        current = prompt if attempt == 0 else _CORRECTIVE.format(prompt=prompt, error=error)
        reply = client.chat_recorded(current, [target_bytes], "synthesize", None, attempt)
        document, error = _validate(reply, SYNTHESIS_SCHEMA)
        if document is not None:
            ref = (document["best_reference"]["doc_id"], document["best_reference"]["page_no"])
            if ref not in cited:
                document, error = None, (
                    f"best_reference {ref!r} is not among the candidate citations"
                )
            elif not store.validate_reference(*ref):
                document, error = None, f"best_reference {ref!r} does not resolve in the corpus"
        if document is not None:
            break
    if document is None:
        if error and "best_reference" in error:
            raise CitationError(error)
        raise VlmResponseError(f"synthesis: {error}")
    return document


def _snippet(dossier: CandidateDossier, limit: int = 200) -> str:
    if not dossier.context:
        return ""
    text = dossier.context[0][1]
    return text if len(text) <= limit else text[: limit - 3] + "..."


def run_analysis(
    query_image_bytes: bytes,
    store: CorpusStore,
    retriever: Retriever,
    client: VlmClient,
    k: int = 5,
    m: int = 10,
    phase1_workers: int = 4,
    on_stage: Callable[[str], None] | None = None,
    transcript: Transcript | None = None,
) -> AttributionReport:
    """The full pipeline: retrieve, aggregate, interpret, synthesize.

    Failures carry the stage they happened in (PipelineError.stage is
    one of retrieval, aggregation, interpretation, synthesis).
    """
    if k < 1 or m < 1:
        raise ValueError(f"k and m must be >= 1, got k={k}, m={m}")
    notify = on_stage or (lambda stage: None)
    transcript = transcript if transcript is not None else Transcript()
    recorded = TranscribingClient(client, transcript)
    phase1_template = load_template("phase1.txt")
    phase2_template = load_template("phase2.txt")

    notify("retrieving")
    if retriever.index.empty:
        raise PipelineError("retrieval", "empty index: build the index before analyzing")
    try:
        hits = retriever.retrieve_all(query_image_bytes, k)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("retrieval", str(exc)) from exc

    try:
        candidates = pool(hits.raw, hits.edge, hits.clip)
        ordered = dedup_sort(candidates)
        selected = truncate(ordered, m)
        dossiers = build_dossiers(store, selected, candidates)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("aggregation", str(exc)) from exc

    notify("interpreting")
    interpretations: list[CandidateInterpretation] = []
    excluded: list[dict] = []
    try:
        with ThreadPoolExecutor(max_workers=max(1, min(phase1_workers, len(dossiers)))) as executor:
            outcomes = list(
                executor.map(
                    lambda d: interpret_candidate(
                        d, recorded, store, query_image_bytes, phase1_template
                    ),
                    dossiers,
                )
            )
    except Exception as exc:
        raise PipelineError("interpretation", str(exc)) from exc
    for interpretation, exclusion in outcomes:
        if interpretation is not None:
            interpretations.append(interpretation)
        else:
            excluded.append(exclusion)
    if not interpretations:
        raise PipelineError("interpretation", "no valid interpretations survived the citation check")

    notify("synthesizing")
    try:
        judgment = synthesize(
            query_image_bytes, interpretations, recorded, store, phase2_template
        )
    except Exception as exc:
        raise PipelineError("synthesis", str(exc)) from exc

    return AttributionReport(
        target_sha256=hashlib.sha256(query_image_bytes).hexdigest(),
        site=judgment["site"],
        period=judgment["period"],
        best_reference=(
            judgment["best_reference"]["doc_id"],
            judgment["best_reference"]["page_no"],
        ),
        justification=judgment["justification"],
        interpretations=interpretations,
        excluded=excluded,
        hits=hits,
        pool_records=pool_records(candidates),
        candidates=ordered,
        selected=[
            {
                "label": d.label,
                "doc_id": d.doc_id,
                "page_no": d.page_no,
                "image_id": d.image_id,
                "caption": d.caption,
                "context_snippet": _snippet(d),
            }
            for d in dossiers
        ],
        parameters={"k": k, "m": m, "sigma": retriever.index.sigma, "side": retriever.side},
        embedders={
            "visual": retriever.provider_raw.embedder_id,
            "semantic": retriever.provider_semantic.embedder_id,
        },
        model=client.model,
        template_hashes={
            "phase1_sha256": template_hash("phase1.txt"),
            "phase2_sha256": template_hash("phase2.txt"),
        },
    )
