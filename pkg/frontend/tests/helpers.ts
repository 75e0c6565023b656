import type { ResponseLike } from "../src/api.js";
import type {
  ConceptPayload,
  Report,
  RoundReport,
  RuleState,
  Summaries,
  TaskItem,
  TasksPage,
} from "../src/types.js";

export function jsonResponse(body: unknown, status = 200): ResponseLike {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => body,
  };
}

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

/**
 * Fetch stand-in that dispatches on "METHOD pathname" and records every
 * call with its parsed JSON body.
 */
type StubHandler = (call: RecordedCall) => ResponseLike | Promise<ResponseLike>;

export class FetchRecorder {
  calls: RecordedCall[] = [];
  private routes = new Map<string, StubHandler>();

  on(method: string, path: string, reply: unknown | StubHandler): this {
    const handler = typeof reply === "function" ? (reply as StubHandler) : () => jsonResponse(reply);
    this.routes.set(`${method} ${path}`, handler);
    return this;
  }

  fetch = async (url: string, init?: { method?: string; body?: unknown }): Promise<ResponseLike> => {
    const method = init?.method ?? "GET";
    const parsed = new URL(url, "http://test.local");
    let body: unknown = null;
    if (typeof init?.body === "string") {
      try {
        body = JSON.parse(init.body);
      } catch {
        body = init.body;
      }
    } else if (init?.body !== undefined) {
      body = init.body;
    }
    const call: RecordedCall = { url, method, body };
    this.calls.push(call);
    const handler = this.routes.get(`${method} ${parsed.pathname}`);
    if (!handler) {
      throw new Error(`no stub for ${method} ${parsed.pathname}`);
    }
    return handler(call);
  };

  callsTo(method: string, path: string): RecordedCall[] {
    return this.calls.filter((c) => {
      const parsed = new URL(c.url, "http://test.local");
      return c.method === method && parsed.pathname === path;
    });
  }
}

/** All numeric tokens in a string (integers, decimals, exponent forms). */
export function numericTokens(text: string): string[] {
  return text.match(/\d+(?:\.\d+)?(?:e[+-]?\d+)?/gi) ?? [];
}

/**
 * Check that every numeric token rendered in `node` also occurs in the
 * payload's JSON text: the display-fidelity invariant. Returns the
 * offending tokens, empty when the invariant holds.
 */
export function foreignNumbers(node: Node, payload: unknown): string[] {
  const allowed = new Set(numericTokens(JSON.stringify(payload)));
  const chunks: string[] = [];
  // tokenize each text node on its own: adjacent elements render as
  // separate runs, so their digits must not merge into one token
  const visit = (n: Node): void => {
    if (n.nodeType === 3) {
      chunks.push(n.textContent ?? "");
      return;
    }
    n.childNodes.forEach(visit);
  };
  visit(node);
  return chunks.flatMap((c) => numericTokens(c)).filter((token) => !allowed.has(token));
}

export function makeRule(overrides: Partial<RuleState> = {}): RuleState {
  return {
    rule_id: "r1",
    corpus_id: "c1",
    tag: "alpha",
    render: "[Tweets.Keyword.Contains('flu')]",
    paths: ["fed1352d6b45"],
    round_no: 2,
    in_flight: true,
    stabilized: [],
    total_cost: 0,
    config: { seed: 11 },
    concepts: {},
    ...overrides,
  };
}

export function makeTask(n: number, overrides: Partial<TaskItem> = {}): TaskItem {
  return {
    task_id: `2-d${n}`,
    doc_id: `d${n}`,
    text: `document ${n} text`,
    tag: "alpha",
    round: 2,
    instructions: "Does the tag describe this item?",
    ...overrides,
  };
}

export function makeTasksPage(tasks: TaskItem[], overrides: Partial<TasksPage> = {}): TasksPage {
  return {
    rule_id: "r1",
    round: 2,
    page: 1,
    pages: 1,
    per_page: 10,
    tasks,
    resolved: 0,
    ...overrides,
  };
}

export function makeRound(overrides: Partial<RoundReport> = {}): RoundReport {
  return {
    round: 1,
    tag: "alpha",
    annotated: 145,
    eligible: 145,
    sample_size: 35,
    verdicts_consumed: 35,
    cost_units: 35,
    syntactic_candidates: 40,
    conceptual_candidates: 0,
    path_precisions: { fed1352d6b45: 0.45714285714285713 },
    path_evidence: { fed1352d6b45: [16, 19] },
    path_theta: { fed1352d6b45: 0.4594594594594595 },
    overall_precision: 0.45714285714285713,
    imprecise_paths: ["fed1352d6b45"],
    actions: [],
    skipped_actions: [],
    stabilized_paths: [],
    rule_render: "[Tweets.Keyword.Contains('hook0x')]",
    paths_after: ["fed1352d6b45"],
    seed: 13,
    ...overrides,
  };
}

export function makeReport(rounds: RoundReport[], overrides: Partial<Report> = {}): Report {
  return {
    rule_id: "r1",
    tag: "alpha",
    rounds,
    final_rule: rounds.length ? rounds[rounds.length - 1].rule_render : "",
    total_cost: rounds.reduce((sum, r) => sum + r.cost_units, 0),
    stabilized: [],
    concepts: {},
    ...overrides,
  };
}

export function makeConcept(
  label: string,
  overrides: Partial<ConceptPayload> = {},
): ConceptPayload {
  return {
    label,
    kind: "topic",
    members: [`${label.toLowerCase()}a`, `${label.toLowerCase()}b`],
    weight: 1.5,
    frequency: 12,
    relevancy: 0.33,
    ...overrides,
  };
}

export function makeSummaries(
  kinds: Record<string, ConceptPayload[]>,
  overrides: Partial<Summaries> = {},
): Summaries {
  return {
    corpus_id: "c1",
    wedge_count: 50,
    kinds,
    errors: {},
    ...overrides,
  };
}
