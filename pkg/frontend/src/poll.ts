/** Job polling: repeat until a terminal state, reporting each snapshot. */

import type { Job } from "./types.js";

export interface Watcher {
  getJob(jobId: string): Promise<Job>;
}

export interface WatchOptions {
  intervalMs?: number;
  onUpdate?: (job: Job) => void;
  sleep?: (ms: number) => Promise<void>;
  maxPolls?: number;
}

const realSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export function isTerminal(job: Job): boolean {
  return job.state === "done" || job.state === "failed";
}

/**
 * Poll a job until it is done or failed; resolves with the terminal
 * snapshot. Transient network failures surface to the caller, which can
 * offer a retry rather than losing the job id.
 */
export async function watchJob(
  jobId: string,
  api: Watcher,
  options: WatchOptions = {},
): Promise<Job> {
  const interval = options.intervalMs ?? 1000;
  const sleep = options.sleep ?? realSleep;
  const maxPolls = options.maxPolls ?? 600;
  let job = await api.getJob(jobId);
  options.onUpdate?.(job);
  let polls = 1;
  while (!isTerminal(job)) {
    if (polls >= maxPolls) throw new Error(`job ${jobId} still ${job.state} after ${polls} polls`);
    await sleep(interval);
    job = await api.getJob(jobId);
    options.onUpdate?.(job);
    polls += 1;
  }
  return job;
}
