/** Score form state and validation.
 *
 * Submission is blocked until both question selectors are set and a
 * rater is identified; a submission produces one score record per
 * question (the server overwrites per object/question/rater).
 */

import type { Question, ScorePayload } from "./types.js";

export interface ScoreFormState {
  q1: number | null;
  q2: number | null;
  raterId: string;
  comment: string;
}

export const EMPTY_FORM: ScoreFormState = { q1: null, q2: null, raterId: "", comment: "" };

export const SCORE_LEVELS = [1, 2, 3, 4] as const;

export function validScore(value: number | null): value is number {
  return value !== null && SCORE_LEVELS.includes(value as 1 | 2 | 3 | 4);
}

export function canSubmit(state: ScoreFormState): boolean {
  return validScore(state.q1) && validScore(state.q2) && state.raterId.trim().length > 0;
}

export function buildScorePayloads(objectId: string, state: ScoreFormState): ScorePayload[] {
  if (!canSubmit(state)) {
    throw new Error("score form incomplete: set both scores and a rater id");
  }
  const comment = state.comment.trim() || undefined;
  const make = (question: Question, score: number): ScorePayload => ({
    object_id: objectId,
    question,
    rater_id: state.raterId.trim(),
    score,
    ...(comment ? { comment } : {}),
  });
  return [make("Q1", state.q1 as number), make("Q2", state.q2 as number)];
}
