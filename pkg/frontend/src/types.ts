/** Wire types for the review API; these mirror the server payloads exactly. */

export type Category = "data_accessed" | "use_cases" | "tools";
export type OpenCategory = "use_cases" | "tools";
export type Side = "gold" | "machine";
export type Direction = "machine-into-gold" | "gold-into-machine";

export const OPEN_CATEGORIES: OpenCategory[] = ["use_cases", "tools"];

export interface QueueItem {
  pair_id: string;
  unresolved: number;
  unresolved_gold: number;
  unresolved_machine: number;
  status: "open" | "complete";
}

export interface AnnotationPayload {
  pair_id: string;
  origin: string;
  data_accessed: boolean;
  use_cases: string[];
  tools: string[];
}

export interface MatrixRowPayload {
  category: Category;
  gold_values: string[];
  machine_values: string[];
  assessment: "TP" | "FP" | "TN" | "FN";
  direction: "none" | Direction;
}

export interface MatrixPayload {
  pair_id: string;
  rows: MatrixRowPayload[];
  unresolved_gold: Record<OpenCategory, string[]>;
  unresolved_machine: Record<OpenCategory, string[]>;
}

export interface ConfusionPayload {
  tp: number;
  fp: number;
  tn: number;
  fn: number;
}

export interface MetricsPayload {
  precision: number;
  recall: number;
  f1: number;
  hallucination_rate: number;
  counts: ConfusionPayload;
  by_category?: Record<string, MetricsPayload>;
}

export interface SessionPayload {
  session_id: string;
  status: "open" | "complete";
  submitted_decisions: boolean;
}

export interface PairPayload {
  pair_id: string;
  session: SessionPayload;
  gold: AnnotationPayload;
  machine: AnnotationPayload;
  matrix: MatrixPayload;
  excerpt: string;
  excerpt_start: number;
  mention_offsets: number[];
  metrics?: MetricsPayload;
}

export interface PooledRow {
  set: string;
  category: string;
  precision: number;
  recall: number;
  f1: number;
  hallucination_rate: number;
  counts: ConfusionPayload;
}

export interface PooledPayload {
  pairs_scored: number;
  rows: PooledRow[];
}

export interface AggregationBody {
  pair_id: string;
  category: OpenCategory;
  member_values: string[];
  direction: Direction;
  target_value: string | null;
  decided_by: string;
  rationale?: string;
}

export interface VerdictBody {
  pair_id: string;
  category: OpenCategory;
  side: Side;
  value: string;
  fate: "match" | "fp" | "fn";
  counterpart: string | null;
  decided_by: string;
}

export interface DecisionsBody {
  aggregations: AggregationBody[];
  verdicts: VerdictBody[];
}

export interface SubmitResponse {
  pair_id: string;
  matrix: MatrixPayload;
  metrics: MetricsPayload;
  pooled: PooledPayload;
}
