"""Canonical candidate labels.

A retrieved reference is identified by the triple (doc_id, page_no,
image_id), rendered as the single sortable string

    doc_id:PPPP:image_id

with the page number zero-padded to four digits so plain lexicographic
order agrees with numeric page order. Identifiers are restricted to a
colon-free charset at ingestion, which makes the rendering lossless.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

ID_PATTERN = re.compile(r"^[A-Za-z0-9._-]+$")
MAX_PAGES = 9999


def valid_id(value: str) -> bool:
    """True iff value is usable as a doc_id / image_id / rater-style key."""
    return bool(ID_PATTERN.match(value))


@dataclass(frozen=True, order=True)
class CandidateLabel:
    doc_id: str
    page_no: int
    image_id: str

    def __post_init__(self):
        if not valid_id(self.doc_id):
            raise ValueError(f"invalid doc_id {self.doc_id!r}")
        if not valid_id(self.image_id):
            raise ValueError(f"invalid image_id {self.image_id!r}")
        if not 1 <= self.page_no <= MAX_PAGES:
            raise ValueError(f"page_no {self.page_no} outside 1..{MAX_PAGES}")

    @property
    def canonical(self) -> str:
        return f"{self.doc_id}:{self.page_no:04d}:{self.image_id}"

    @classmethod
    def parse(cls, canonical: str) -> "CandidateLabel":
        parts = canonical.split(":")
        if len(parts) != 3:
            raise ValueError(f"malformed label {canonical!r}")
        doc_id, page, image_id = parts
        if len(page) != 4 or not page.isdigit():
            raise ValueError(f"malformed page field in label {canonical!r}")
        return cls(doc_id=doc_id, page_no=int(page), image_id=image_id)

    def __str__(self) -> str:
        return self.canonical
