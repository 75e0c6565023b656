import type { ConceptPayload, Preference, Report, RuleState } from "./types.js";

// One Query Box entry: a concept the user dropped in, with an editable
// member list and an adjustable weight. Members start as the API copy.
export interface QueryEntry {
  label: string;
  kind: string;
  members: string[];
  weight: number;
}

export const MIN_WEIGHT = 0.1;
export const MAX_WEIGHT = 10;
export const DEFAULT_WEIGHT = 1;

export interface UiState {
  endpoint: string;
  workerId: string;
  ruleId: string | null;
  corpusId: string | null;
  rule: RuleState | null;
  report: Report | null;
  page: number;
  evidence: ConceptPayload[];
  queryBox: QueryEntry[];
}

export function initialState(endpoint = "", workerId = "ui"): UiState {
  return {
    endpoint,
    workerId,
    ruleId: null,
    corpusId: null,
    rule: null,
    report: null,
    page: 1,
    evidence: [],
    queryBox: [],
  };
}

function sameConcept(a: { label: string; kind: string }, b: { label: string; kind: string }): boolean {
  return a.label === b.label && a.kind === b.kind;
}

/** Collect a concept into the Evidence Box; repeat collects are no-ops. */
export function addToEvidence(state: UiState, concept: ConceptPayload): boolean {
  if (state.evidence.some((c) => sameConcept(c, concept))) return false;
  state.evidence.push(concept);
  return true;
}

export function removeFromEvidence(state: UiState, label: string, kind: string): void {
  state.evidence = state.evidence.filter((c) => !sameConcept(c, { label, kind }));
}

/** Drop a concept into the Query Box with its own member copy. */
export function addToQuery(state: UiState, concept: ConceptPayload): boolean {
  if (state.queryBox.some((c) => sameConcept(c, concept))) return false;
  state.queryBox.push({
    label: concept.label,
    kind: concept.kind,
    members: [...concept.members],
    weight: DEFAULT_WEIGHT,
  });
  return true;
}

/**
 * Remove one attribute from a Query Box concept (the wheel's (x) control).
 * A concept whose last member is removed leaves the box entirely: the
 * ranking service rejects member-less concepts.
 */
export function removeQueryMember(state: UiState, label: string, member: string): void {
  const entry = state.queryBox.find((c) => c.label === label);
  if (!entry) return;
  entry.members = entry.members.filter((m) => m !== member);
  if (entry.members.length === 0) {
    state.queryBox = state.queryBox.filter((c) => c !== entry);
  }
}

export function removeFromQuery(state: UiState, label: string): void {
  state.queryBox = state.queryBox.filter((c) => c.label !== label);
}

export function setQueryWeight(state: UiState, label: string, weight: number): void {
  const entry = state.queryBox.find((c) => c.label === label);
  if (!entry) return;
  entry.weight = Math.min(MAX_WEIGHT, Math.max(MIN_WEIGHT, weight));
}

/** The Query Box contents as a rank request preference. */
export function queryPreference(state: UiState): Preference {
  return {
    concepts: state.queryBox.map((c) => ({
      label: c.label,
      kind: c.kind,
      members: [...c.members],
      weight: c.weight,
    })),
  };
}
