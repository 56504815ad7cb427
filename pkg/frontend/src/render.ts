/** Pure view construction: report data in, HTML strings out.
 *
 * Everything shown comes verbatim from the API payloads; citations are
 * rendered exactly as the report states them. Keeping these functions
 * DOM-free makes the ordering and content rules directly testable.
 */

import type { Distribution, Job, PoolRecord, Report } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export interface GalleryCard {
  label: string;
  imageId: string;
  docId: string;
  pageNo: number;
  caption: string | null;
  snippet: string;
  strategies: string[];
}

/** Cards in exactly the report's truncation order. */
export function galleryCards(report: Report): GalleryCard[] {
  const byLabel = new Map<string, PoolRecord>(report.retrieval.pool.map((p) => [p.label, p]));
  return report.retrieval.selected.map((sel) => ({
    label: sel.label,
    imageId: sel.image_id,
    docId: sel.doc_id,
    pageNo: sel.page_no,
    caption: sel.caption,
    snippet: sel.context_snippet,
    strategies: byLabel.get(sel.label)?.strategies ?? [],
  }));
}

export function citation(docId: string, pageNo: number): string {
  return `${docId} p.${pageNo}`;
}

export function renderGallery(report: Report, imageUrl: (imageId: string) => string): string {
  const cards = galleryCards(report).map((card) => {
    const badges = card.strategies
      .map((s) => `<span class="badge badge-${escapeHtml(s)}">${escapeHtml(s)}</span>`)
      .join("");
    const caption = card.caption
      ? `<p class="card-caption">${escapeHtml(card.caption)}</p>`
      : "";
    const snippet = card.snippet
      ? `<p class="card-snippet">${escapeHtml(card.snippet)}</p>`
      : "";
    return `
    <article class="card" data-label="${escapeHtml(card.label)}">
      <img src="${escapeHtml(imageUrl(card.imageId))}" alt="${escapeHtml(card.label)}" loading="lazy">
      <h4>${escapeHtml(citation(card.docId, card.pageNo))}</h4>
      <p class="card-label">${escapeHtml(card.label)}</p>
      <div class="badges">${badges}</div>
      ${caption}
      ${snippet}
    </article>`;
  });
  return cards.join("\n");
}

export function renderSummary(report: Report): string {
  const best = report.best_reference;
  const interpretations = report.interpretations
    .map(
      (interp) => `
      <details>
        <summary>${escapeHtml(interp.label)} &mdash; ${escapeHtml(
          citation(interp.reference.doc_id, interp.reference.page_no),
        )}</summary>
        <dl>
          <dt>Excavation site</dt><dd>${escapeHtml(interp.excavation_site)}</dd>
          <dt>Cultural period</dt><dd>${escapeHtml(interp.cultural_period)}</dd>
          <dt>Similarity rationale</dt><dd>${escapeHtml(interp.similarity_rationale)}</dd>
        </dl>
      </details>`,
    )
    .join("\n");
  const excluded = report.excluded.length
    ? `<p class="excluded">${report.excluded.length} candidate(s) excluded by the citation check.</p>`
    : "";
  return `
    <dl class="attribution">
      <dt>Site</dt><dd>${escapeHtml(report.site)}</dd>
      <dt>Period</dt><dd>${escapeHtml(report.period)}</dd>
      <dt>Best reference</dt><dd class="best-ref">${escapeHtml(
        citation(best.doc_id, best.page_no),
      )}</dd>
      <dt>Justification</dt><dd>${escapeHtml(report.justification)}</dd>
    </dl>
    <h4>Per-candidate interpretations (${report.interpretations.length})</h4>
    ${interpretations}
    ${excluded}`;
}

export function renderHits(report: Report): string {
  const sections = (["raw", "edge", "clip"] as const).map((strategy) => {
    const rows = report.retrieval.hits[strategy]
      .map(
        (hit) =>
          `<li><code>${hit.score.toFixed(4)}</code> ${escapeHtml(hit.label)}</li>`,
      )
      .join("");
    return `<div class="hits-col"><h5>${strategy}</h5><ol>${rows}</ol></div>`;
  });
  return sections.join("\n");
}

export function renderJobStatus(job: Job): string {
  if (job.state === "failed" && job.error) {
    return `<div class="banner banner-error">Analysis failed at <strong>${escapeHtml(
      job.error.stage,
    )}</strong>: ${escapeHtml(job.error.message)}</div>`;
  }
  const steps: Job["state"][] = ["queued", "retrieving", "interpreting", "synthesizing", "done"];
  const position = steps.indexOf(job.state);
  const crumbs = steps
    .map((s, i) => {
      const cls = i < position ? "step done" : i === position ? "step active" : "step";
      return `<span class="${cls}">${s}</span>`;
    })
    .join(" &rarr; ");
  return `<div class="banner banner-progress">${crumbs}</div>`;
}

export function renderDistribution(question: string, dist: Distribution | null): string {
  if (!dist) {
    return `<h5>${escapeHtml(question)}</h5><p class="muted">no scores yet</p>`;
  }
  const rows = ["4", "3", "2", "1"]
    .map(
      (level) =>
        `<tr><td>${level}</td><td>${dist.counts[level] ?? 0}</td>` +
        `<td>${(dist.percentages[level] ?? 0).toFixed(1)}%</td></tr>`,
    )
    .join("");
  return `
    <h5>${escapeHtml(question)} (${dist.total} scores)</h5>
    <table class="dist">
      <thead><tr><th>score</th><th>count</th><th>%</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
    <p class="meaningful">meaningful (2&ndash;4): <strong>${dist.meaningful_share.toFixed(
      1,
    )}%</strong></p>`;
}
