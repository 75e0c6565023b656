import type {
  CorpusInfo,
  EventsResponse,
  Preference,
  RankResponse,
  Report,
  RoundResponse,
  RuleCreated,
  RuleState,
  Summaries,
  TasksPage,
  VerdictEntry,
  VerdictsResponse,
} from "./types.js";

// Structural subset of fetch so tests can swap in stubs.
export interface ResponseLike {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (
  url: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string | FormData;
  },
) => Promise<ResponseLike>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

function defaultFetch(): FetchLike {
  return (url, init) => fetch(url, init);
}

/** Client for the /v1 HTTP service; `baseUrl` is the one endpoint setting. */
export class ApiClient {
  readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn: FetchLike = defaultFetch()) {
    // strip a trailing slash so path joins stay predictable
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn;
  }

  url(path: string, query?: Record<string, string | number | undefined>): string {
    let full = this.baseUrl + path;
    if (query) {
      const parts = Object.entries(query)
        .filter(([, v]) => v !== undefined)
        .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`);
      if (parts.length) full += "?" + parts.join("&");
    }
    return full;
  }

  private async request<T>(
    path: string,
    options: {
      method?: string;
      query?: Record<string, string | number | undefined>;
      json?: unknown;
      form?: FormData;
    } = {},
  ): Promise<T> {
    const init: Parameters<FetchLike>[1] = { method: options.method ?? "GET" };
    if (options.json !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(options.json);
    } else if (options.form) {
      init.body = options.form;
    }
    const res = await this.fetchFn(this.url(path, options.query), init);
    const body = (await res.json().catch(() => null)) as Record<string, unknown> | null;
    if (!res.ok) {
      const envelope = body?.error as { code?: string; message?: string } | undefined;
      throw new ApiError(
        res.status,
        envelope?.code ?? "unknown",
        envelope?.message ?? `request failed with status ${res.status}`,
      );
    }
    return body as T;
  }

  health(): Promise<{ status: string; corpora: number; rules: number }> {
    return this.request("/v1/health");
  }

  uploadCorpus(raw: string, filename = "corpus.jsonl"): Promise<CorpusInfo> {
    const form = new FormData();
    form.append("file", new Blob([raw], { type: "application/jsonl" }), filename);
    return this.request("/v1/corpora", { method: "POST", form });
  }

  getCorpus(corpusId: string): Promise<CorpusInfo> {
    return this.request(`/v1/corpora/${encodeURIComponent(corpusId)}`);
  }

  postLabels(corpusId: string, raw: string): Promise<{ corpus_id: string; labels: number }> {
    // the labels endpoint takes the JSONL payload as the raw body
    return (async () => {
      const res = await this.fetchFn(
        this.url(`/v1/corpora/${encodeURIComponent(corpusId)}/labels`),
        { method: "POST", headers: { "content-type": "application/jsonl" }, body: raw },
      );
      const body = (await res.json().catch(() => null)) as Record<string, unknown> | null;
      if (!res.ok) {
        const envelope = body?.error as { code?: string; message?: string } | undefined;
        throw new ApiError(res.status, envelope?.code ?? "unknown", envelope?.message ?? "labels upload failed");
      }
      return body as { corpus_id: string; labels: number };
    })();
  }

  createRule(
    corpus: string,
    tag: string,
    text: string,
    config: Record<string, unknown> = {},
  ): Promise<RuleCreated> {
    return this.request("/v1/rules", { method: "POST", json: { corpus, tag, text, config } });
  }

  getRule(ruleId: string): Promise<RuleState> {
    return this.request(`/v1/rules/${encodeURIComponent(ruleId)}`);
  }

  startRound(ruleId: string, feedback: "human" | "oracle" = "human"): Promise<RoundResponse> {
    return this.request(`/v1/rules/${encodeURIComponent(ruleId)}/rounds`, {
      method: "POST",
      query: { feedback },
    });
  }

  getReport(ruleId: string): Promise<Report> {
    return this.request(`/v1/rules/${encodeURIComponent(ruleId)}/report`);
  }

  getEvents(ruleId: string, since = 0): Promise<EventsResponse> {
    return this.request(`/v1/rules/${encodeURIComponent(ruleId)}/events`, {
      query: { since },
    });
  }

  getTasks(ruleId: string, round: number, page = 1): Promise<TasksPage> {
    return this.request("/v1/tasks", { query: { rule: ruleId, round, page } });
  }

  postVerdicts(ruleId: string, verdicts: VerdictEntry[]): Promise<VerdictsResponse> {
    return this.request("/v1/verdicts", {
      method: "POST",
      json: { rule: ruleId, verdicts },
    });
  }

  getSummaries(corpus: string, kind?: string, wedges?: number): Promise<Summaries> {
    return this.request("/v1/summaries", { query: { corpus, kind, wedges } });
  }

  rank(corpus: string, preference: Preference, top = 20): Promise<RankResponse> {
    return this.request("/v1/rank", { method: "POST", json: { corpus, preference, top } });
  }
}
