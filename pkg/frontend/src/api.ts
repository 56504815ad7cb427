/** Thin typed client over the service HTTP API. */

import type { Distribution, Job, Question, Report, ScorePayload } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function detail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") return body.detail;
  } catch {
    /* non-JSON error body */
  }
  return `request failed with status ${response.status}`;
}

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike,
    private readonly base: string = "",
  ) {}

  private async expectJson<T>(response: Response): Promise<T> {
    if (!response.ok) throw new ApiError(await detail(response), response.status);
    return (await response.json()) as T;
  }

  async submitAnalysis(file: Blob, filename: string, k?: number, m?: number): Promise<Job> {
    const form = new FormData();
    form.append("file", file, filename);
    if (k !== undefined) form.append("k", String(k));
    if (m !== undefined) form.append("m", String(m));
    const response = await this.fetchFn(`${this.base}/api/analyses`, {
      method: "POST",
      body: form,
    });
    return this.expectJson<Job>(response);
  }

  async getJob(jobId: string): Promise<Job> {
    return this.expectJson<Job>(await this.fetchFn(`${this.base}/api/analyses/${jobId}`));
  }

  async getReport(jobId: string): Promise<Report> {
    return this.expectJson<Report>(
      await this.fetchFn(`${this.base}/api/analyses/${jobId}/report`),
    );
  }

  async postScore(payload: ScorePayload): Promise<void> {
    const response = await this.fetchFn(`${this.base}/api/scores`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!response.ok) throw new ApiError(await detail(response), response.status);
  }

  /** Returns null when no scores exist yet for the question. */
  async getDistribution(question: Question): Promise<Distribution | null> {
    const response = await this.fetchFn(
      `${this.base}/api/eval/distribution?question=${question}`,
    );
    if (response.status === 404) return null;
    return this.expectJson<Distribution>(response);
  }

  imageUrl(imageId: string): string {
    return `${this.base}/api/corpus/images/${encodeURIComponent(imageId)}`;
  }
}
