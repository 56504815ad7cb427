"""Build a dual-modal knowledge base from document bundles.

A bundle is a directory with a descriptor.json plus the page-text and
image files it names; it is the contract with whatever converter
produced text from the source scans. This script generates two
synthetic catalogue bundles, ingests them, and walks the resulting
corpus: documents, image assets, context links, reference checks.

Run:  python3 demos/01_build_corpus.py
"""

import tempfile
from pathlib import Path

from provkit.corpus import ingest_bundles
from provkit.synthetic import make_demo_corpus

workdir = Path(tempfile.mkdtemp(prefix="provkit-demo-"))
print(f"working under {workdir}\n")

# --- 1. materialize two synthetic catalogue bundles --------------------
bundle_dirs = make_demo_corpus(workdir / "bundles")
for bundle in bundle_dirs:
    print(f"bundle: {bundle.name}")
    print((bundle / "descriptor.json").read_text()[:240], "...\n")

# --- 2. ingest them into a corpus directory ----------------------------
store = ingest_bundles(workdir / "corpus", bundle_dirs)
print(f"ingested {len(store.manifest.documents)} documents, "
      f"{len(store.manifest.assets)} image assets")
print(f"manifest checksum: {store.checksum}\n")

for doc in store.manifest.documents:
    print(f"  {doc.doc_id}: {doc.title!r}, {doc.page_count} pages [{doc.language_tag}]")

# --- 3. every asset is labeled and linked to its page context ----------
print("\nassets and their context:")
for asset in store.assets():
    context = store.link_context(asset.image_id)
    print(f"  {asset.label.canonical}")
    for para_id, text in context[:2]:
        print(f"    [{para_id}] {text[:60]}")
    if not context:
        print("    (plate page, no context)")

# --- 4. citation checks are total: no exceptions, just booleans --------
doc_id = store.manifest.documents[0].doc_id
print(f"\nvalidate_reference({doc_id!r}, 1)   -> {store.validate_reference(doc_id, 1)}")
print(f"validate_reference({doc_id!r}, 999) -> {store.validate_reference(doc_id, 999)}")
print(f"validate_reference('ghost', 1)      -> {store.validate_reference('ghost', 1)}")
