"""Three-strategy retrieval and candidate aggregation.

The index holds three embedding blocks per corpus: raw photographs,
their edge maps, and a joint semantic space holding both images and
context paragraphs. A query runs all three strategies in parallel; the
per-strategy hit lists are pooled as existence-based multisets,
deduplicated, ordered by canonical label, and truncated to the top m.

Run:  python3 demos/03_three_strategy_retrieval.py
"""

import tempfile
from pathlib import Path

from provkit.aggregate import dedup_sort, pool, truncate
from provkit.corpus import ingest_bundles
from provkit.embedding import StubEmbedder
from provkit.retrieval import Retriever, VectorIndex, build_index
from provkit.synthetic import make_demo_corpus, make_query_image

workdir = Path(tempfile.mkdtemp(prefix="provkit-demo-"))

# --- 1. corpus and index ------------------------------------------------
store = ingest_bundles(workdir / "corpus", make_demo_corpus(workdir / "bundles"))
provider = StubEmbedder()  # deterministic stand-in for a joint image-text encoder
index = build_index(store, provider, provider, sigma=1.0, side=64)
print(f"index built: raw={len(index.raw)} edge={len(index.edge)} semantic={len(index.semantic)}")

index_path = workdir / "index.bin"
index.save(index_path)
index = VectorIndex.load(index_path)
print(f"persisted and reloaded from {index_path}\n")

# --- 2. query with a fresh photograph of a blade ------------------------
query = make_query_image(workdir / "query.png").read_bytes()
retriever = Retriever(index, provider, provider, side=64)
hits = retriever.retrieve_all(query, k=5)

for name, lst in (("raw", hits.raw), ("edge", hits.edge), ("clip", hits.clip)):
    print(f"{name} strategy:")
    for h in lst:
        print(f"  {h.score:+.4f}  {h.label}")
    print()

# --- 3. aggregate: multiset union -> dedup -> label order -> top m ------
candidates = pool(hits.raw, hits.edge, hits.clip)
print("pool (label, strategies that retrieved it):")
for label, entry in sorted(candidates.entries.items()):
    print(f"  x{entry.multiplicity}  {label}  {sorted(entry.strategies)}")

ordered = dedup_sort(candidates)
selected = truncate(ordered, 5)
print(f"\nordered candidate list T ({len(ordered)} unique labels)")
print(f"selected after truncation to m=5: {selected}")

# note: the drawing of the blade is reachable mainly through the edge
# strategy; pooling protects such single-strategy finds from being
# drowned out by the photographic matches.
