// Shapes of the /v1 JSON payloads this UI consumes. Field names mirror the
// wire format exactly; nothing here is computed client side.

export interface RuleCreated {
  rule_id: string;
  tag: string;
  render: string;
  paths: string[];
}

export interface RuleState {
  rule_id: string;
  corpus_id: string;
  tag: string;
  render: string;
  paths: string[];
  round_no: number;
  in_flight: boolean;
  stabilized: string[];
  total_cost: number;
  config: Record<string, unknown>;
  concepts: Record<string, string[]>;
}

export interface TaskItem {
  task_id: string;
  doc_id: string;
  text: string;
  tag: string;
  round: number;
  instructions: string;
}

export interface TasksPage {
  rule_id: string;
  round: number;
  page: number;
  pages: number;
  per_page: number;
  tasks: TaskItem[];
  resolved: number;
}

export interface VerdictEntry {
  task_id: string;
  worker_id: string;
  answer: string;
}

export interface VerdictResult {
  task_id: string;
  accepted: boolean;
  resolved: string | null;
}

export interface VerdictsResponse {
  rule_id: string;
  results: VerdictResult[];
  cost_units: number;
  round_completed: number | null;
}

export interface RoundAction {
  kind: string;
  address: number[];
  // replace carries removed/inserted/candidate, restrict carries node/appended
  removed?: string;
  inserted?: string;
  candidate?: string;
  node?: string;
  appended?: string[];
  reason?: string;
}

export interface RoundReport {
  round: number;
  tag: string;
  annotated: number;
  eligible: number;
  sample_size: number;
  verdicts_consumed: number;
  cost_units: number;
  syntactic_candidates: number;
  conceptual_candidates: number;
  path_precisions: Record<string, number | null>;
  path_evidence: Record<string, number[]>;
  path_theta: Record<string, number>;
  overall_precision: number | null;
  imprecise_paths: string[];
  actions: RoundAction[];
  skipped_actions: RoundAction[];
  stabilized_paths: string[];
  rule_render: string;
  paths_after: string[];
  seed: number;
}

export interface Evaluation {
  precision: number | null;
  recall: number | null;
  f1: number | null;
}

export interface Report {
  rule_id: string;
  tag: string;
  rounds: RoundReport[];
  final_rule: string;
  total_cost: number;
  stabilized: string[];
  concepts: Record<string, string[]>;
  evaluation?: Evaluation;
}

export interface RoundResponse {
  rule_id: string;
  round: number;
  status: "completed" | "awaiting_verdicts";
  tasks: number;
  report: RoundReport | null;
}

export interface ConceptPayload {
  label: string;
  kind: string;
  members: string[];
  weight: number;
  frequency: number;
  relevancy: number;
}

export interface Summaries {
  corpus_id: string;
  wedge_count: number;
  kinds: Record<string, ConceptPayload[]>;
  errors: Record<string, string>;
}

export interface RankedItem {
  doc_id: string;
  score: number;
  contributions: Record<string, number>;
}

export interface RankResponse {
  items: RankedItem[];
  count: number;
}

export interface CorpusInfo {
  corpus_id: string;
  documents: number;
  terms: number;
  labels?: number;
  warnings?: string[];
}

export interface EventRecord {
  round: number;
  kind: string;
  [extra: string]: unknown;
}

export interface EventsResponse {
  events: EventRecord[];
  next: number;
}

export interface PreferenceConcept {
  label: string;
  kind: string;
  members: string[];
  weight: number;
}

export interface Preference {
  concepts: PreferenceConcept[];
}
