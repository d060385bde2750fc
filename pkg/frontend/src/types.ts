// Response shapes of the grading service, as served over HTTP.

export interface TaskSummary {
  id: string;
  lab: number;
  kind: string;
  title: string;
}

// typed wire value: t names the kind, v holds the JSON form
export interface TypedValue {
  t: string;
  v: unknown;
}

export interface SignatureInfo {
  name: string;
  params: { name: string; kind: string }[];
  result_kind: string;
}

export interface CaseRow {
  case_id: string;
  hidden: boolean;
  inputs?: TypedValue[];
  expected?: TypedValue;
}

export interface Exemplar {
  inputs: TypedValue[];
  output: TypedValue;
}

export interface VisualSpec {
  exemplars: Exemplar[];
  illustration: string | null;
}

export interface TaskDetail {
  id: string;
  lab: number;
  ordinal: number;
  kind: string;
  title: string;
  statement: string;
  signature: SignatureInfo;
  cases: CaseRow[];
  eipe_source?: string;
  visual?: VisualSpec;
}

export interface VerdictRow {
  case_id: string;
  verdict: string;
  hidden: boolean;
  expected?: TypedValue;
  // decoded value, or { raw: string } when the program wrote junk
  observed?: unknown;
  diagnostics?: string | null;
}

export interface AttemptResult {
  attempt_id: string;
  seq: number;
  outcome: string;
  extracted_code: string | null;
  generated_code_shown: boolean;
  verdicts: VerdictRow[];
  created_at: string;
  detail?: string;
}

export interface HistoryEntry {
  attempt_id: string;
  seq: number;
  outcome: string;
  prompt: string;
  created_at: string;
}

export const KIND_EIPE = "EiPE";
export const KIND_PROMPT_PROBLEM = "PromptProblem";
