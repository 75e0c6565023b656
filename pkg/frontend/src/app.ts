import { ApiClient, ApiError, FetchLike } from "./api.js";
import { clear, el } from "./dom.js";
import { EvolutionView } from "./evolution.js";
import { ExplorerView } from "./explorer.js";
import { LabelingView } from "./labeling.js";
import type { UiState } from "./state.js";

const TABS = [
  ["label", "Label"],
  ["rounds", "Rounds"],
  ["explore", "Explore"],
] as const;

type TabId = (typeof TABS)[number][0];

/** Shell: endpoint settings, tab bar, and the three panels. */
export class App {
  api: ApiClient;
  labeling!: LabelingView;
  evolution!: EvolutionView;
  explorer!: ExplorerView;
  private active: TabId = "label";
  private status!: HTMLElement;

  constructor(
    readonly root: HTMLElement,
    readonly state: UiState,
    private readonly fetchFn?: FetchLike,
  ) {
    this.api = new ApiClient(state.endpoint, fetchFn);
  }

  mount(): void {
    clear(this.root);
    this.root.append(this.settingsBar(), this.tabBar());
    this.status = el("p", { class: "app-status", role: "status" }, "");
    this.root.append(this.status);
    const panel = el("main", { class: "panel" });
    this.root.append(panel);
    this.labeling = new LabelingView(panel, this.api, this.state);
    this.evolution = new EvolutionView(panel, this.api, this.state);
    this.explorer = new ExplorerView(panel, this.api, this.state);
    this.labeling.onRoundCompleted = () => {
      this.note("round completed");
      void this.show(this.active);
    };
    void this.show("label");
  }

  private note(message: string): void {
    this.status.textContent = message;
  }

  private settingsBar(): HTMLElement {
    const bar = el("form", { class: "settings" });
    bar.addEventListener("submit", (event) => event.preventDefault());
    const endpoint = el("input", {
      type: "url",
      placeholder: "service endpoint, e.g. http://127.0.0.1:8000",
      value: this.state.endpoint,
      "aria-label": "service endpoint",
    }) as HTMLInputElement;
    const worker = el("input", {
      type: "text",
      value: this.state.workerId,
      "aria-label": "worker id",
    }) as HTMLInputElement;
    const rule = el("input", {
      type: "text",
      placeholder: "rule id",
      value: this.state.ruleId ?? "",
      "aria-label": "rule id",
    }) as HTMLInputElement;
    const corpus = el("input", {
      type: "text",
      placeholder: "corpus id",
      value: this.state.corpusId ?? "",
      "aria-label": "corpus id",
    }) as HTMLInputElement;
    const apply = el("button", { type: "submit" }, "apply") as HTMLButtonElement;
    apply.addEventListener("click", () => {
      this.state.endpoint = endpoint.value.trim();
      this.state.workerId = worker.value.trim() || "ui";
      this.state.ruleId = rule.value.trim() || null;
      this.state.corpusId = corpus.value.trim() || null;
      try {
        localStorage.setItem("rulebench.endpoint", this.state.endpoint);
        localStorage.setItem("rulebench.worker", this.state.workerId);
      } catch {
        // storage may be unavailable; settings still apply to this session
      }
      this.api = new ApiClient(this.state.endpoint, this.fetchFn);
      this.mount();
    });
    bar.append(endpoint, worker, rule, corpus, apply);
    return bar;
  }

  private tabBar(): HTMLElement {
    const bar = el("nav", { class: "tabs", role: "tablist" });
    for (const [id, caption] of TABS) {
      const button = el(
        "button",
        { type: "button", role: "tab", "data-tab": id },
        caption,
      ) as HTMLButtonElement;
      if (id === this.active) button.classList.add("active");
      button.addEventListener("click", () => void this.show(id));
      bar.append(button);
    }
    const startRound = el(
      "button",
      { type: "button", class: "start-round" },
      "start round",
    ) as HTMLButtonElement;
    startRound.addEventListener("click", () => void this.startRound());
    const refresh = el("button", { type: "button", class: "refresh" }, "refresh");
    refresh.addEventListener("click", () => void this.show(this.active));
    bar.append(startRound, refresh);
    return bar;
  }

  async startRound(): Promise<void> {
    if (!this.state.ruleId) {
      this.note("set a rule id first");
      return;
    }
    try {
      const reply = await this.api.startRound(this.state.ruleId);
      this.note(
        reply.status === "completed"
          ? "round completed with no tasks"
          : "round started, tasks ready",
      );
    } catch (err) {
      this.note(err instanceof ApiError ? err.message : "could not start round");
      if (!(err instanceof ApiError)) throw err;
      return;
    }
    await this.show(this.active);
  }

  async show(tab: TabId): Promise<void> {
    this.active = tab;
    for (const button of this.root.querySelectorAll(".tabs [data-tab]")) {
      button.classList.toggle("active", button.getAttribute("data-tab") === tab);
    }
    try {
      if (tab === "label") await this.labeling.load();
      else if (tab === "rounds") await this.evolution.load();
      else await this.explorer.load();
    } catch (err) {
      this.note(err instanceof ApiError ? err.message : "request failed");
      if (!(err instanceof ApiError)) throw err;
    }
  }
}
