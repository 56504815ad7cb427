/** Payload shapes returned by the analysis service API. */

export type JobState =
  | "queued"
  | "retrieving"
  | "interpreting"
  | "synthesizing"
  | "done"
  | "failed";

export interface JobError {
  stage: string;
  message: string;
}

export interface Job {
  job_id: string;
  state: JobState;
  created_at: string;
  updated_at: string;
  params: { k: number; m: number; sigma: number };
  media_type: string;
  error: JobError | null;
}

export interface Reference {
  doc_id: string;
  page_no: number;
}

export interface Interpretation {
  label: string;
  excavation_site: string;
  cultural_period: string;
  similarity_rationale: string;
  reference: Reference;
}

export interface Hit {
  label: string;
  score: number;
}

export interface PoolRecord {
  label: string;
  strategies: string[];
  scores: Record<string, number>;
}

export interface SelectedCandidate {
  label: string;
  doc_id: string;
  page_no: number;
  image_id: string;
  caption: string | null;
  context_snippet: string;
}

export interface Report {
  schema_version: number;
  model: string;
  parameters: { k: number; m: number; sigma: number; side: number };
  target_image: { sha256: string };
  site: string;
  period: string;
  best_reference: Reference;
  justification: string;
  interpretations: Interpretation[];
  excluded: { label: string; reason: string }[];
  retrieval: {
    hits: { raw: Hit[]; edge: Hit[]; clip: Hit[] };
    pool: PoolRecord[];
    candidates: string[];
    selected: SelectedCandidate[];
  };
}

export type Question = "Q1" | "Q2";

export interface ScorePayload {
  object_id: string;
  question: Question;
  rater_id: string;
  score: number;
  comment?: string;
}

export interface Distribution {
  question: Question;
  total: number;
  counts: Record<string, number>;
  percentages: Record<string, number>;
  meaningful_share: number;
}
