// Wire types for the annotation service API. These mirror the server
// responses exactly; the UI never fabricates fields.

export type Phase = "scoring" | "selecting" | "awaiting-labels" | "done";

export interface BatchItem {
  id: string;
  text: string;
  confidence: number | null;
  cover_size: number;
  pca: [number | null, number | null];
  labeled: boolean;
}

export interface BudgetInfo {
  total: number;
  spent: number;
}

export interface BatchView {
  session_id: string;
  phase: Phase;
  done: boolean;
  batch: BatchItem[];
  labels: string[];
  budget: BudgetInfo;
  iteration: number;
}

export interface ReportRecord {
  id: string;
  prediction: string | null;
  confidence: number;
  correct: boolean | null;
  true_label: string | null;
  retrieved_ids: string[];
}

export interface Report {
  accuracy: number | null;
  n?: number;
  records: ReportRecord[];
  note?: string;
}

export interface SessionConfig {
  pool: { train: string; test?: string };
  strategy: string | { name: string; [key: string]: unknown };
  seed?: number;
  budget?: number;
  k?: number;
  init_pool_size?: number;
  mode?: "inductive" | "transductive";
  [key: string]: unknown;
}
