import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { FetchRecorder, jsonResponse } from "./helpers.js";

describe("ApiClient urls", () => {
  it("joins base and path without duplicate slashes", () => {
    const client = new ApiClient("http://h:1/");
    expect(client.url("/v1/health")).toBe("http://h:1/v1/health");
  });

  it("keeps a bare base for same-origin use", () => {
    const client = new ApiClient("");
    expect(client.url("/v1/health")).toBe("/v1/health");
  });

  it("encodes query values and drops undefined ones", () => {
    const client = new ApiClient("http://h");
    expect(client.url("/v1/tasks", { rule: "r 1", round: 2, page: undefined })).toBe(
      "http://h/v1/tasks?rule=r%201&round=2",
    );
  });
});

describe("ApiClient requests", () => {
  it("sends verdicts as one batch body", async () => {
    const recorder = new FetchRecorder().on("POST", "/v1/verdicts", {
      rule_id: "r1",
      results: [{ task_id: "t1", accepted: true, resolved: null }],
      cost_units: 1,
      round_completed: null,
    });
    const client = new ApiClient("http://h", recorder.fetch);
    const reply = await client.postVerdicts("r1", [
      { task_id: "t1", worker_id: "w1", answer: "Relevant" },
    ]);
    expect(reply.cost_units).toBe(1);
    expect(recorder.calls[0].body).toEqual({
      rule: "r1",
      verdicts: [{ task_id: "t1", worker_id: "w1", answer: "Relevant" }],
    });
  });

  it("sends rank requests with corpus, preference, and top", async () => {
    const recorder = new FetchRecorder().on("POST", "/v1/rank", { items: [], count: 0 });
    const client = new ApiClient("http://h", recorder.fetch);
    const preference = {
      concepts: [{ label: "Flu", kind: "topic", members: ["flu"], weight: 2 }],
    };
    await client.rank("c1", preference, 5);
    expect(recorder.calls[0].body).toEqual({ corpus: "c1", preference, top: 5 });
  });

  it("asks for tasks with rule, round, and page", async () => {
    const recorder = new FetchRecorder().on("GET", "/v1/tasks", {
      rule_id: "r1",
      round: 2,
      page: 3,
      pages: 4,
      per_page: 10,
      tasks: [],
      resolved: 30,
    });
    const client = new ApiClient("http://h", recorder.fetch);
    await client.getTasks("r1", 2, 3);
    const url = new URL(recorder.calls[0].url);
    expect(url.searchParams.get("rule")).toBe("r1");
    expect(url.searchParams.get("round")).toBe("2");
    expect(url.searchParams.get("page")).toBe("3");
  });

  it("starts rounds with the feedback mode as a query parameter", async () => {
    const recorder = new FetchRecorder().on("POST", "/v1/rules/r1/rounds", {
      rule_id: "r1",
      round: 2,
      status: "awaiting_verdicts",
      tasks: 7,
      report: null,
    });
    const client = new ApiClient("http://h", recorder.fetch);
    const reply = await client.startRound("r1");
    expect(reply.status).toBe("awaiting_verdicts");
    expect(new URL(recorder.calls[0].url).searchParams.get("feedback")).toBe("human");
  });

  it("turns error envelopes into ApiError", async () => {
    const recorder = new FetchRecorder().on("GET", "/v1/rules/nope", () =>
      jsonResponse({ error: { code: "not_found", message: "no rule 'nope'" } }, 404),
    );
    const client = new ApiClient("http://h", recorder.fetch);
    const failure = await client.getRule("nope").catch((err: unknown) => err);
    expect(failure).toBeInstanceOf(ApiError);
    const apiError = failure as ApiError;
    expect(apiError.status).toBe(404);
    expect(apiError.code).toBe("not_found");
    expect(apiError.message).toBe("no rule 'nope'");
  });

  it("copes with non-json error bodies", async () => {
    const recorder = new FetchRecorder().on("GET", "/v1/health", () => ({
      ok: false,
      status: 502,
      json: async () => {
        throw new Error("not json");
      },
    }));
    const client = new ApiClient("http://h", recorder.fetch);
    const failure = await client.health().catch((err: unknown) => err);
    expect(failure).toBeInstanceOf(ApiError);
    expect((failure as ApiError).status).toBe(502);
    expect((failure as ApiError).code).toBe("unknown");
  });
});
