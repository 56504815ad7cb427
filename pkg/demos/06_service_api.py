"""The analysis service over HTTP.

Stands up the full service in-process (corpus, index, job queue, score
log), then drives it the way the review UI does: upload a photograph,
poll the job, fetch the report, submit expert scores, read the
distribution back.

Run:  python3 demos/06_service_api.py
"""

import json
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from provkit.corpus import ingest_bundles
from provkit.service import AnalysisEngine, ServiceConfig, create_app, index_corpus
from provkit.synthetic import make_demo_corpus, make_query_image

workdir = Path(tempfile.mkdtemp(prefix="provkit-demo-"))

# --- 1. data directory, config, corpus, index ---------------------------
ingest_bundles(workdir / "corpus", make_demo_corpus(workdir / "bundles"))
config_path = workdir / "config.json"
config_path.write_text(json.dumps({
    "data_dir": str(workdir / "data"),
    "corpus_dir": str(workdir / "corpus"),
    "index_path": str(workdir / "index.bin"),
    "embedder": {"kind": "stub"},
    # demo replies recorded below; a deployment points this at a real endpoint
    "vlm": {"kind": "mock", "responses": str(workdir / "replies.json")},
    "defaults": {"k": 5, "m": 10, "sigma": 1.0, "side": 64},
}, indent=2))

config = ServiceConfig.load(config_path)
index_corpus(config)

# canned replies for this demo's exact query, built with the library's own
# prompt rendering (a real deployment talks to a live vision endpoint)
from provkit.aggregate import dedup_sort, pool, truncate
from provkit.corpus import CorpusStore
from provkit.embedding import StubEmbedder
from provkit.inference import build_dossiers, load_template, render_phase1, render_phase2, CandidateInterpretation
from provkit.retrieval import Retriever, VectorIndex
from provkit.vlm import call_key

query = make_query_image(workdir / "query.png", seed=77).read_bytes()
store = CorpusStore(workdir / "corpus")
stub = StubEmbedder()
retriever = Retriever(VectorIndex.load(workdir / "index.bin"), stub, stub, side=64)
hits = retriever.retrieve_all(query, 5)
candidates = pool(hits.raw, hits.edge, hits.clip)
dossiers = build_dossiers(store, truncate(dedup_sort(candidates), 10), candidates)
replies, interps = {}, []
for d in dossiers:
    reply = {"label": d.label, "excavation_site": "northern survey zone",
             "cultural_period": "steppe bronze horizon",
             "similarity_rationale": "comparable outline and section",
             "reference": {"doc_id": d.doc_id, "page_no": d.page_no}}
    replies[call_key(render_phase1(load_template("phase1.txt"), d),
                     [query, store.image_bytes(d.image_id)])] = json.dumps(reply)
    interps.append(CandidateInterpretation(d.label, reply["excavation_site"],
                   reply["cultural_period"], reply["similarity_rationale"],
                   (d.doc_id, d.page_no)))
synthesis = {"site": "northern survey zone", "period": "steppe bronze horizon",
             "best_reference": {"doc_id": dossiers[0].doc_id, "page_no": dossiers[0].page_no},
             "justification": "strongest cross-strategy parallel"}
replies[call_key(render_phase2(load_template("phase2.txt"), interps), [query])] = json.dumps(synthesis)
(workdir / "replies.json").write_text(json.dumps(replies))

# --- 2. drive the HTTP API ----------------------------------------------
engine = AnalysisEngine(ServiceConfig.load(config_path))
client = TestClient(create_app(engine))

resp = client.post("/api/analyses", files={"file": ("query.png", query, "image/png")})
job_id = resp.json()["job_id"]
print(f"POST /api/analyses -> {resp.status_code}, job {job_id}")

while True:
    job = client.get(f"/api/analyses/{job_id}").json()
    print(f"  state: {job['state']}")
    if job["state"] in ("done", "failed"):
        break
    time.sleep(0.2)

report = client.get(f"/api/analyses/{job_id}/report").json()
print(f"\nreport: site={report['site']!r}")
print(f"gallery order: {report['retrieval']['candidates'][:3]} ...")

# --- 3. scores in, distribution out --------------------------------------
for question, score in (("Q1", 3), ("Q2", 4)):
    client.post("/api/scores", json={"object_id": job_id, "question": question,
                                     "rater_id": "expert-1", "score": score})
dist = client.get("/api/eval/distribution", params={"question": "Q2"}).json()
print(f"\nQ2 distribution after scoring: {dist['counts']} "
      f"(meaningful {dist['meaningful_share']}%)")

engine.stop()
print("\nthe same flow is what the browser review UI drives; "
      "run `provkit serve --config ...` for a real listener")
