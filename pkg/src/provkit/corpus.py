"""The dual-modal knowledge base: documents, page text, and image assets.

A corpus lives in one directory:

    <root>/manifest.json          document and asset records + checksum
    <root>/pages/<doc_id>/NNNN.txt  page text, one file per page
    <root>/assets/<sha256>.<ext>  content-addressed image bytes

Documents arrive as ingestion bundles: a directory containing a
``descriptor.json`` plus the page-text and image files it names. The
descriptor is the contract with whatever external converter produced
the text from the source scans:

    {
      "doc_id": ..., "title": ..., "language_tag": ...,
      "source_uri": ...,
      "pages":  [{"page_no": 1, "text_file": "pages/0001.txt"}, ...],
      "images": [{"image_id": ..., "page_no": 2, "file": "img/a.png",
                  "caption": "optional"}, ...]
    }

Each image is linked at ingestion to its context: the caption (if any)
plus every paragraph on its page, optionally widened to adjacent pages.
Published manifests are immutable; ingestion is the only writer.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    BundleError,
    ChecksumError,
    DuplicateDocumentError,
    ManifestError,
    UnknownImageError,
    UnsupportedVersionError,
)
from .labels import MAX_PAGES, CandidateLabel, valid_id

MANIFEST_VERSION = 1

_PARAGRAPH_SPLIT = re.compile(r"\n\s*\n")
_MEDIA_TYPES = {
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".gif": "image/gif",
    ".bmp": "image/bmp",
    ".webp": "image/webp",
}


@dataclass(frozen=True)
class DocumentRecord:
    doc_id: str
    title: str
    language_tag: str
    page_count: int
    source_uri: str


@dataclass(frozen=True)
class PageContext:
    doc_id: str
    page_no: int
    paragraphs: tuple[tuple[str, str], ...]  # (para_id, text) in page order


@dataclass(frozen=True)
class ImageAsset:
    image_id: str
    doc_id: str
    page_no: int
    caption: str | None
    pixel_ref: str  # assets/<sha256>.<ext>, relative to the corpus root
    context_para_ids: tuple[str, ...]

    @property
    def label(self) -> CandidateLabel:
        return CandidateLabel(self.doc_id, self.page_no, self.image_id)


@dataclass
class CorpusManifest:
    version: int = MANIFEST_VERSION
    documents: list[DocumentRecord] = field(default_factory=list)
    assets: list[ImageAsset] = field(default_factory=list)


def _manifest_payload(manifest: CorpusManifest) -> dict:
    return {
        "version": manifest.version,
        "documents": [
            {
                "doc_id": d.doc_id,
                "title": d.title,
                "language_tag": d.language_tag,
                "page_count": d.page_count,
                "source_uri": d.source_uri,
            }
            for d in sorted(manifest.documents, key=lambda d: d.doc_id)
        ],
        "assets": [
            {
                "image_id": a.image_id,
                "doc_id": a.doc_id,
                "page_no": a.page_no,
                "caption": a.caption,
                "pixel_ref": a.pixel_ref,
                "context_para_ids": list(a.context_para_ids),
            }
            for a in sorted(manifest.assets, key=lambda a: (a.doc_id, a.page_no, a.image_id))
        ],
    }


def manifest_checksum(manifest: CorpusManifest) -> str:
    """SHA-256 of the canonical (sorted-key, no-whitespace) serialization."""
    canonical = json.dumps(_manifest_payload(manifest), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    """Write the manifest atomically (temp file + rename)."""
    path = Path(path)
    payload = _manifest_payload(manifest)
    payload["checksum"] = manifest_checksum(manifest)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def load_manifest(path: str | Path) -> CorpusManifest:
    """Load and verify a manifest; checksum mismatch is fatal."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    version = payload.get("version")
    if not isinstance(version, int) or version > MANIFEST_VERSION:
        raise UnsupportedVersionError(f"manifest version {version!r} not supported")
    manifest = CorpusManifest(
        version=version,
        documents=[DocumentRecord(**d) for d in payload.get("documents", [])],
        assets=[
            ImageAsset(
                image_id=a["image_id"],
                doc_id=a["doc_id"],
                page_no=a["page_no"],
                caption=a.get("caption"),
                pixel_ref=a["pixel_ref"],
                context_para_ids=tuple(a.get("context_para_ids", [])),
            )
            for a in payload.get("assets", [])
        ],
    )
    expected = payload.get("checksum")
    actual = manifest_checksum(manifest)
    if expected != actual:
        raise ChecksumError(f"manifest checksum mismatch: stored {expected}, computed {actual}")
    return manifest


def split_paragraphs(page_text: str, page_no: int) -> list[tuple[str, str]]:
    """Split page text into (para_id, text) pairs on blank lines."""
    paras = [p.strip() for p in _PARAGRAPH_SPLIT.split(page_text)]
    paras = [p for p in paras if p]
    return [(f"{page_no:04d}.{i:02d}", text) for i, text in enumerate(paras, start=1)]


class CorpusStore:
    """A corpus directory plus its loaded manifest.

    After ``publish`` the manifest on disk is immutable from the point
    of view of readers; re-ingesting a doc_id is rejected outright.
    """

    def __init__(self, root: str | Path, create: bool = False):
        self.root = Path(root)
        if create:
            self.root.mkdir(parents=True, exist_ok=True)
            (self.root / "assets").mkdir(exist_ok=True)
            (self.root / "pages").mkdir(exist_ok=True)
            if not self.manifest_path.exists():
                save_manifest(CorpusManifest(), self.manifest_path)
        self.manifest = load_manifest(self.manifest_path)
        self._documents = {d.doc_id: d for d in self.manifest.documents}
        self._assets = {a.image_id: a for a in self.manifest.assets}

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    @property
    def checksum(self) -> str:
        return manifest_checksum(self.manifest)

    # -- lookups ---------------------------------------------------------

    def document(self, doc_id: str) -> DocumentRecord | None:
        return self._documents.get(doc_id)

    def asset(self, image_id: str) -> ImageAsset:
        try:
            return self._assets[image_id]
        except KeyError:
            raise UnknownImageError(f"unknown image_id {image_id!r}") from None

    def assets(self) -> list[ImageAsset]:
        return sorted(self._assets.values(), key=lambda a: a.label.canonical)

    def validate_reference(self, doc_id: str, page_no: int) -> bool:
        """True iff doc_id exists and 1 <= page_no <= its page_count."""
        doc = self._documents.get(doc_id)
        if doc is None:
            return False
        return isinstance(page_no, int) and 1 <= page_no <= doc.page_count

    def page_text(self, doc_id: str, page_no: int) -> str:
        return (self.root / "pages" / doc_id / f"{page_no:04d}.txt").read_text(encoding="utf-8")

    def page_context(self, doc_id: str, page_no: int) -> PageContext:
        if not self.validate_reference(doc_id, page_no):
            raise ValueError(f"no such page: {doc_id} p.{page_no}")
        return PageContext(
            doc_id=doc_id,
            page_no=page_no,
            paragraphs=tuple(split_paragraphs(self.page_text(doc_id, page_no), page_no)),
        )

    def link_context(self, image_id: str) -> list[tuple[str, str]]:
        """Context for an image: its caption first, then the linked paragraphs.

        Paragraphs come back in page order; an image on a text-free
        plate page with no caption yields an empty list.
        """
        asset = self.asset(image_id)
        entries: list[tuple[str, str]] = []
        if asset.caption:
            entries.append((f"cap:{asset.image_id}", asset.caption))
        wanted = set(asset.context_para_ids)
        pages = sorted({int(pid.split(".")[0]) for pid in wanted})
        for page_no in pages:
            for para_id, text in self.page_context(asset.doc_id, page_no).paragraphs:
                if para_id in wanted:
                    entries.append((para_id, text))
        return entries

    def image_bytes(self, image_id: str) -> bytes:
        return (self.root / self.asset(image_id).pixel_ref).read_bytes()

    def image_media_type(self, image_id: str) -> str:
        ext = Path(self.asset(image_id).pixel_ref).suffix.lower()
        return _MEDIA_TYPES.get(ext, "application/octet-stream")

    # -- ingestion -------------------------------------------------------

    def ingest_document(self, bundle_dir: str | Path, context_pages: int = 0) -> DocumentRecord:
        """Register one pre-converted document bundle.

        context_pages widens each image's paragraph window to that many
        neighboring pages on each side (0 = same page only). The whole
        bundle is validated before anything is written; the manifest
        update itself is atomic.
        """
        bundle_dir = Path(bundle_dir)
        descriptor_path = bundle_dir / "descriptor.json"
        try:
            descriptor = json.loads(descriptor_path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise BundleError(f"cannot read {descriptor_path}: {exc}") from exc

        doc_id = descriptor.get("doc_id", "")
        if not valid_id(doc_id):
            raise BundleError(f"invalid doc_id {doc_id!r} (colon-free [A-Za-z0-9._-]+ required)")
        if doc_id in self._documents:
            raise DuplicateDocumentError(f"doc_id {doc_id!r} already ingested")

        pages = descriptor.get("pages", [])
        if not pages:
            raise BundleError(f"document {doc_id!r} declares no pages")
        if len(pages) > MAX_PAGES:
            raise BundleError(f"document {doc_id!r} exceeds {MAX_PAGES} pages")
        page_count = len(pages)
        declared = [p.get("page_no") for p in pages]
        if declared != list(range(1, page_count + 1)):
            raise BundleError(f"pages of {doc_id!r} must be numbered 1..{page_count} in order")
        page_files = []
        for p in pages:
            f = bundle_dir / p["text_file"]
            if not f.is_file():
                raise BundleError(f"missing page text file {f}")
            page_files.append(f)

        images = descriptor.get("images", [])
        seen_ids: set[str] = set()
        for entry in images:
            image_id = entry.get("image_id", "")
            if not valid_id(image_id):
                raise BundleError(f"invalid image_id {image_id!r}")
            if image_id in seen_ids or image_id in self._assets:
                raise BundleError(f"duplicate image_id {image_id!r}")
            seen_ids.add(image_id)
            page_no = entry.get("page_no")
            if not isinstance(page_no, int) or not 1 <= page_no <= page_count:
                raise BundleError(
                    f"image {image_id!r} placed on page {page_no}, "
                    f"but {doc_id!r} has pages 1..{page_count}"
                )
            if not (bundle_dir / entry["file"]).is_file():
                raise BundleError(f"missing image file {bundle_dir / entry['file']}")

        # Validation passed: copy page text, store image bytes, update manifest.
        pages_dir = self.root / "pages" / doc_id
        pages_dir.mkdir(parents=True, exist_ok=True)
        paragraphs_by_page: dict[int, list[tuple[str, str]]] = {}
        for page_no, src in enumerate(page_files, start=1):
            text = src.read_text(encoding="utf-8")
            (pages_dir / f"{page_no:04d}.txt").write_text(text, encoding="utf-8")
            paragraphs_by_page[page_no] = split_paragraphs(text, page_no)

        new_assets = []
        for entry in images:
            src = bundle_dir / entry["file"]
            data = src.read_bytes()
            ext = src.suffix.lower() or ".bin"
            pixel_ref = f"assets/{hashlib.sha256(data).hexdigest()}{ext}"
            target = self.root / pixel_ref
            if not target.exists():
                target.write_bytes(data)
            page_no = entry["page_no"]
            lo = max(1, page_no - context_pages)
            hi = min(page_count, page_no + context_pages)
            context_ids = tuple(
                pid for page in range(lo, hi + 1) for pid, _ in paragraphs_by_page[page]
            )
            new_assets.append(
                ImageAsset(
                    image_id=entry["image_id"],
                    doc_id=doc_id,
                    page_no=page_no,
                    caption=entry.get("caption"),
                    pixel_ref=pixel_ref,
                    context_para_ids=context_ids,
                )
            )

        record = DocumentRecord(
            doc_id=doc_id,
            title=descriptor.get("title", doc_id),
            language_tag=descriptor.get("language_tag", "und"),
            page_count=page_count,
            source_uri=descriptor.get("source_uri", ""),
        )
        self.manifest.documents.append(record)
        self.manifest.assets.extend(new_assets)
        save_manifest(self.manifest, self.manifest_path)
        self._documents[doc_id] = record
        for asset in new_assets:
            self._assets[asset.image_id] = asset
        return record


def ingest_bundles(root: str | Path, bundle_dirs: list[str | Path], context_pages: int = 0) -> CorpusStore:
    """Create (or open) a corpus at root and ingest each bundle in order."""
    store = CorpusStore(root, create=True)
    for bundle in bundle_dirs:
        store.ingest_document(bundle, context_pages=context_pages)
    return store
