/** DOM wiring for the review page.
 *
 * Flow: pick an image, tune k / m, submit; the job is polled once a
 * second and the page flips to the gallery + attribution view when it
 * finishes. Scores go in through the form at the bottom; the
 * distribution panel refreshes after every submission. The only thing
 * remembered between visits is the rater id.
 */

import { ApiClient } from "./api.js";
import { isTerminal, watchJob } from "./poll.js";
import {
  renderDistribution,
  renderGallery,
  renderHits,
  renderJobStatus,
  renderSummary,
} from "./render.js";
import { buildScorePayloads, canSubmit, EMPTY_FORM, ScoreFormState } from "./scoreForm.js";
import type { Job, Question, Report } from "./types.js";

const api = new ApiClient((input, init) => fetch(input, init));

const el = <T extends HTMLElement>(id: string): T => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
};

const fileInput = el<HTMLInputElement>("file");
const kInput = el<HTMLInputElement>("k");
const mInput = el<HTMLInputElement>("m");
const runButton = el<HTMLButtonElement>("run");
const statusBox = el<HTMLDivElement>("status");
const targetBox = el<HTMLDivElement>("target");
const galleryBox = el<HTMLDivElement>("gallery");
const summaryBox = el<HTMLDivElement>("summary");
const hitsBox = el<HTMLDivElement>("hits");
const scoreSection = el<HTMLElement>("score-section");
const raterInput = el<HTMLInputElement>("rater");
const commentInput = el<HTMLTextAreaElement>("comment");
const submitScores = el<HTMLButtonElement>("submit-scores");
const scoreStatus = el<HTMLSpanElement>("score-status");
const distBox = el<HTMLDivElement>("distributions");

let currentJob: Job | null = null;
const form: ScoreFormState = { ...EMPTY_FORM, raterId: localStorage.getItem("rater_id") ?? "" };
raterInput.value = form.raterId;

function refreshSubmitState(): void {
  submitScores.disabled = !(currentJob?.state === "done" && canSubmit(form));
}

function selectorValue(name: string): number | null {
  const checked = document.querySelector<HTMLInputElement>(`input[name="${name}"]:checked`);
  return checked ? Number(checked.value) : null;
}

for (const name of ["q1", "q2"]) {
  document.querySelectorAll<HTMLInputElement>(`input[name="${name}"]`).forEach((radio) => {
    radio.addEventListener("change", () => {
      form[name as "q1" | "q2"] = selectorValue(name);
      refreshSubmitState();
    });
  });
}

raterInput.addEventListener("input", () => {
  form.raterId = raterInput.value;
  localStorage.setItem("rater_id", form.raterId);
  refreshSubmitState();
});
commentInput.addEventListener("input", () => {
  form.comment = commentInput.value;
});

async function refreshDistributions(): Promise<void> {
  const parts: string[] = [];
  for (const question of ["Q1", "Q2"] as Question[]) {
    try {
      parts.push(renderDistribution(question, await api.getDistribution(question)));
    } catch (err) {
      parts.push(`<p class="muted">${question}: ${(err as Error).message}</p>`);
    }
  }
  distBox.innerHTML = parts.join("\n");
}

function showReport(report: Report): void {
  galleryBox.innerHTML = renderGallery(report, (id) => api.imageUrl(id));
  summaryBox.innerHTML = renderSummary(report);
  hitsBox.innerHTML = renderHits(report);
  scoreSection.hidden = false;
  refreshSubmitState();
}

runButton.addEventListener("click", async () => {
  const file = fileInput.files?.[0];
  if (!file) {
    statusBox.innerHTML = `<div class="banner banner-error">Choose an image first.</div>`;
    return;
  }
  const k = kInput.value ? Number(kInput.value) : undefined;
  const m = mInput.value ? Number(mInput.value) : undefined;

  runButton.disabled = true;
  galleryBox.innerHTML = "";
  summaryBox.innerHTML = "";
  hitsBox.innerHTML = "";
  scoreSection.hidden = true;
  targetBox.innerHTML = `<img src="${URL.createObjectURL(file)}" alt="target image">`;

  try {
    const submitted = await api.submitAnalysis(file, file.name, k, m);
    currentJob = submitted;
    statusBox.innerHTML = renderJobStatus(submitted);
    const terminal = await watchJob(submitted.job_id, api, {
      intervalMs: 1000,
      onUpdate: (job) => {
        currentJob = job;
        statusBox.innerHTML = renderJobStatus(job);
      },
    });
    if (terminal.state === "done") {
      showReport(await api.getReport(terminal.job_id));
    }
  } catch (err) {
    statusBox.innerHTML =
      `<div class="banner banner-error">${(err as Error).message} ` +
      `<button id="retry">retry</button></div>`;
    document.getElementById("retry")?.addEventListener("click", async () => {
      if (currentJob && !isTerminal(currentJob)) {
        const terminal = await watchJob(currentJob.job_id, api, {
          intervalMs: 1000,
          onUpdate: (job) => {
            currentJob = job;
            statusBox.innerHTML = renderJobStatus(job);
          },
        });
        if (terminal.state === "done") showReport(await api.getReport(terminal.job_id));
      }
    });
  } finally {
    runButton.disabled = false;
  }
});

submitScores.addEventListener("click", async () => {
  if (!currentJob) return;
  try {
    for (const payload of buildScorePayloads(currentJob.job_id, form)) {
      await api.postScore(payload);
    }
    scoreStatus.textContent = "scores recorded";
    await refreshDistributions();
  } catch (err) {
    scoreStatus.textContent = (err as Error).message;
  }
});

void refreshDistributions();
refreshSubmitState();
