"""Synthetic corpora for demos and tests.

Generates small deterministic images of simple object silhouettes in
two renderings: "photo" (filled shape on a graded background, the look
of a catalogue photograph) and "drawing" (thin dark outline on paper,
the look of a technical line drawing). Bundles produced here follow the
ingestion descriptor contract, so a demo corpus exercises exactly the
same paths as a real one.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

SHAPES = ("disc", "ring", "square", "triangle", "blade", "cross", "diamond", "crescent")


def _draw_shape(draw: ImageDraw.ImageDraw, shape: str, size: int, fill, outline, width: int):
    lo = size // 5
    hi = size - lo
    mid = size // 2
    if shape == "disc":
        draw.ellipse([lo, lo, hi, hi], fill=fill, outline=outline, width=width)
    elif shape == "ring":
        draw.ellipse([lo, lo, hi, hi], fill=fill, outline=outline, width=width)
        inner = size // 4
        draw.ellipse(
            [mid - inner // 2, mid - inner // 2, mid + inner // 2, mid + inner // 2],
            fill=None if fill is None else 255,
            outline=outline,
            width=width,
        )
    elif shape == "square":
        draw.rectangle([lo, lo, hi, hi], fill=fill, outline=outline, width=width)
    elif shape == "triangle":
        draw.polygon([(mid, lo), (hi, hi), (lo, hi)], fill=fill, outline=outline, width=width)
    elif shape == "blade":
        # an elongated knife-like silhouette with a tang
        pts = [
            (lo, mid - size // 10),
            (hi - size // 6, mid - size // 7),
            (hi, mid),
            (hi - size // 6, mid + size // 7),
            (lo, mid + size // 10),
        ]
        draw.polygon(pts, fill=fill, outline=outline, width=width)
        draw.rectangle([lo - size // 12, mid - size // 20, lo, mid + size // 20], fill=fill, outline=outline, width=width)
    elif shape == "cross":
        arm = size // 8
        draw.rectangle([mid - arm, lo, mid + arm, hi], fill=fill, outline=outline, width=width)
        draw.rectangle([lo, mid - arm, hi, mid + arm], fill=fill, outline=outline, width=width)
    elif shape == "diamond":
        draw.polygon([(mid, lo), (hi, mid), (mid, hi), (lo, mid)], fill=fill, outline=outline, width=width)
    elif shape == "crescent":
        draw.ellipse([lo, lo, hi, hi], fill=fill, outline=outline, width=width)
        shift = size // 6
        draw.ellipse(
            [lo + shift, lo - shift // 2, hi + shift, hi - shift // 2],
            fill=255 if fill is not None else None,
            outline=outline,
            width=width,
        )
    else:
        raise ValueError(f"unknown shape {shape!r}")


def shape_image(shape: str, style: str = "photo", size: int = 96, seed: int = 0) -> Image.Image:
    """Render one shape as a grayscale PIL image."""
    rng = np.random.default_rng(seed)
    if style == "photo":
        gradient = np.linspace(120, 185, size, dtype=np.float64)
        background = np.tile(gradient[:, None], (1, size))
        background += rng.normal(0.0, 4.0, size=(size, size))
        canvas = np.clip(background, 0, 255).astype(np.uint8)
        img = Image.fromarray(canvas, mode="L")
        draw = ImageDraw.Draw(img)
        _draw_shape(draw, shape, size, fill=55, outline=35, width=2)
    elif style == "drawing":
        img = Image.new("L", (size, size), color=245)
        draw = ImageDraw.Draw(img)
        _draw_shape(draw, shape, size, fill=None, outline=20, width=2)
    else:
        raise ValueError(f"unknown style {style!r}")
    return img


def save_shape_png(path: str | Path, shape: str, style: str = "photo", size: int = 96, seed: int = 0) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    shape_image(shape, style, size, seed).save(path, format="PNG")
    return path


def write_bundle(
    dest: str | Path,
    doc_id: str,
    title: str,
    language_tag: str,
    pages: list[str],
    images: list[dict],
) -> Path:
    """Materialize one ingestion bundle.

    pages is the page text in order; each image dict needs image_id,
    page_no, shape, style and optional caption/size/seed.
    """
    dest = Path(dest)
    (dest / "pages").mkdir(parents=True, exist_ok=True)
    (dest / "images").mkdir(parents=True, exist_ok=True)
    page_entries = []
    for i, text in enumerate(pages, start=1):
        rel = f"pages/{i:04d}.txt"
        (dest / rel).write_text(text, encoding="utf-8")
        page_entries.append({"page_no": i, "text_file": rel})
    image_entries = []
    for spec in images:
        rel = f"images/{spec['image_id']}.png"
        save_shape_png(
            dest / rel,
            spec["shape"],
            spec.get("style", "photo"),
            spec.get("size", 96),
            spec.get("seed", 0),
        )
        entry = {"image_id": spec["image_id"], "page_no": spec["page_no"], "file": rel}
        if spec.get("caption"):
            entry["caption"] = spec["caption"]
        image_entries.append(entry)
    descriptor = {
        "doc_id": doc_id,
        "title": title,
        "language_tag": language_tag,
        "source_uri": f"synthetic:{doc_id}",
        "pages": page_entries,
        "images": image_entries,
    }
    (dest / "descriptor.json").write_text(
        json.dumps(descriptor, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return dest


DEMO_BUNDLES = [
    {
        "doc_id": "steppe-bronzes",
        "title": "Bronzes of the Northern Steppe Zone",
        "language_tag": "en",
        "pages": [
            "Knives with arched backs and ring pommels dominate the northern "
            "assemblages.\n\nThe blade profiles narrow sharply toward the tip.",
            "Plate II shows a typical arched-back knife from the Yanshan survey.\n\n"
            "Comparable pieces were recovered from dated burial contexts.",
            "Discoid mirrors with raised rims appear alongside the knives.\n\n"
            "Their backs carry a single central loop.",
            "",
            "Cruciform harness fittings close the catalogue section.",
        ],
        "images": [
            {"image_id": "spz-knife-photo", "page_no": 2, "shape": "blade", "style": "photo", "seed": 21, "caption": "Arched-back knife, Yanshan survey"},
            {"image_id": "spz-knife-drawing", "page_no": 2, "shape": "blade", "style": "drawing", "seed": 22},
            {"image_id": "spz-mirror", "page_no": 3, "shape": "disc", "style": "photo", "seed": 23, "caption": "Discoid mirror with raised rim"},
            {"image_id": "spz-plate", "page_no": 4, "shape": "ring", "style": "photo", "seed": 24},
            {"image_id": "spz-fitting", "page_no": 5, "shape": "cross", "style": "photo", "seed": 25},
        ],
    },
    {
        "doc_id": "upper-valley-finds",
        "title": "Finds from the Upper Valley Cemeteries",
        "language_tag": "en",
        "pages": [
            "Square plaques with incised borders were found in graves 3 and 9.\n\n"
            "Each plaque retains traces of textile on the reverse.",
            "Triangular pendants occur in pairs near the collar line.",
            "Crescent-shaped ornaments are rarer and may be imports.\n\n"
            "Two diamond-sectioned awls accompany them.",
        ],
        "images": [
            {"image_id": "uvf-plaque", "page_no": 1, "shape": "square", "style": "photo", "seed": 31, "caption": "Incised plaque, grave 9"},
            {"image_id": "uvf-pendant", "page_no": 2, "shape": "triangle", "style": "photo", "seed": 32},
            {"image_id": "uvf-crescent", "page_no": 3, "shape": "crescent", "style": "photo", "seed": 33, "caption": "Crescent ornament"},
            {"image_id": "uvf-awl", "page_no": 3, "shape": "diamond", "style": "drawing", "seed": 34},
            {"image_id": "uvf-plaque-b", "page_no": 1, "shape": "square", "style": "drawing", "seed": 35},
        ],
    },
]


def make_demo_corpus(dest_root: str | Path) -> list[Path]:
    """Write the standard demo bundles; returns their directories."""
    dest_root = Path(dest_root)
    bundles = []
    for spec in DEMO_BUNDLES:
        bundles.append(
            write_bundle(
                dest_root / spec["doc_id"],
                doc_id=spec["doc_id"],
                title=spec["title"],
                language_tag=spec["language_tag"],
                pages=spec["pages"],
                images=spec["images"],
            )
        )
    return bundles


def make_query_image(path: str | Path, shape: str = "blade", seed: int = 99, size: int = 96) -> Path:
    """A query photograph: same silhouette family, different rendering seed."""
    return save_shape_png(path, shape, style="photo", size=size, seed=seed)
