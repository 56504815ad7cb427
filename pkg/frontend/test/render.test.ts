import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import {
  citation,
  escapeHtml,
  galleryCards,
  renderDistribution,
  renderGallery,
  renderJobStatus,
  renderSummary,
} from "../src/render.js";
import type { Distribution, Job, Report } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
const golden: Report = JSON.parse(
  readFileSync(join(here, "..", "..", "tests", "fixtures", "golden_report.json"), "utf-8"),
);

const imageUrl = (id: string) => `/api/corpus/images/${id}`;

describe("gallery construction from the golden report", () => {
  it("renders one card per selected candidate, in truncation order", () => {
    const cards = galleryCards(golden);
    expect(cards.length).toBe(golden.retrieval.selected.length);
    expect(cards.map((c) => c.label)).toEqual(golden.retrieval.selected.map((s) => s.label));
  });

  it("selected candidates are exactly the truncated candidate list", () => {
    const m = golden.parameters.m;
    const expected = golden.retrieval.candidates.slice(0, m);
    expect(galleryCards(golden).map((c) => c.label)).toEqual(expected);
  });

  it("card order survives into the HTML", () => {
    const html = renderGallery(golden, imageUrl);
    const labels = [...html.matchAll(/data-label="([^"]+)"/g)].map((m) => m[1]);
    expect(labels).toEqual(golden.retrieval.selected.map((s) => s.label));
  });

  it("thumbnails go through the image-bytes endpoint", () => {
    const html = renderGallery(golden, imageUrl);
    for (const sel of golden.retrieval.selected) {
      expect(html).toContain(`src="/api/corpus/images/${sel.image_id}"`);
    }
  });

  it("cards carry the strategy badges recorded in the pool", () => {
    const byLabel = new Map(golden.retrieval.pool.map((p) => [p.label, p.strategies]));
    for (const card of galleryCards(golden)) {
      expect(card.strategies).toEqual(byLabel.get(card.label));
    }
  });
});

describe("attribution summary", () => {
  it("shows the best reference verbatim from the report", () => {
    const html = renderSummary(golden);
    const best = golden.best_reference;
    expect(html).toContain(citation(best.doc_id, best.page_no));
    expect(html).toContain(escapeHtml(golden.site));
    expect(html).toContain(escapeHtml(golden.period));
    expect(html).toContain(escapeHtml(golden.justification));
  });

  it("every displayed citation exists in the report payload", () => {
    const html = renderSummary(golden);
    const shown = [...html.matchAll(/([a-z0-9-]+) p\.(\d+)/g)].map((m) => `${m[1]}:${m[2]}`);
    const allowed = new Set(
      golden.interpretations
        .map((i) => `${i.reference.doc_id}:${i.reference.page_no}`)
        .concat(`${golden.best_reference.doc_id}:${golden.best_reference.page_no}`),
    );
    expect(shown.length).toBeGreaterThan(0);
    for (const cite of shown) {
      expect(allowed.has(cite)).toBe(true);
    }
  });
});

describe("job status", () => {
  const job = (state: Job["state"], error: Job["error"] = null): Job => ({
    job_id: "j1",
    state,
    created_at: "",
    updated_at: "",
    params: { k: 5, m: 10, sigma: 1 },
    media_type: "image/png",
    error,
  });

  it("failed jobs show a banner naming the stage", () => {
    const html = renderJobStatus(job("failed", { stage: "retrieval", message: "empty index" }));
    expect(html).toContain("banner-error");
    expect(html).toContain("retrieval");
    expect(html).toContain("empty index");
  });

  it("active jobs show progress breadcrumbs", () => {
    const html = renderJobStatus(job("interpreting"));
    expect(html).toContain('class="step active"');
    expect(html).toContain("interpreting");
  });
});

describe("distribution panel", () => {
  it("handles the empty state", () => {
    expect(renderDistribution("Q1", null)).toContain("no scores yet");
  });

  it("renders counts, percentages and the meaningful share", () => {
    const dist: Distribution = {
      question: "Q1",
      total: 10,
      counts: { "1": 4, "2": 3, "3": 2, "4": 1 },
      percentages: { "1": 40.0, "2": 30.0, "3": 20.0, "4": 10.0 },
      meaningful_share: 60.0,
    };
    const html = renderDistribution("Q1", dist);
    expect(html).toContain("10 scores");
    expect(html).toContain("60.0%");
    expect(html).toContain("40.0%");
  });
});

describe("escapeHtml", () => {
  it("neutralizes markup in model-produced text", () => {
    expect(escapeHtml(`<img src=x onerror="pwn()">'&`)).toBe(
      "&lt;img src=x onerror=&quot;pwn()&quot;&gt;&#39;&amp;",
    );
  });
});
