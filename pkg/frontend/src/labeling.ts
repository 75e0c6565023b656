import { ApiClient } from "./api.js";
import { clear, el, show } from "./dom.js";
import type { UiState } from "./state.js";
import type { TaskItem, TasksPage } from "./types.js";

// Button caption -> verdict answer the service expects.
export const ANSWER_LABELS: ReadonlyArray<readonly [string, string]> = [
  ["Yes", "Relevant"],
  ["No", "Irrelevant"],
  ["I don't know", "Unknown"],
];

export type TaskStatus = "idle" | "pending" | "submitted" | "failed";

/**
 * The labeling queue: one page of sampled items awaiting verdicts.
 *
 * Submissions are optimistic: the card locks as soon as a button is
 * pressed, then reconciles with the server reply. A failed request
 * unlocks the card and offers a retry for the same answer.
 */
export class LabelingView {
  private inflight = new Set<Promise<void>>();
  onRoundCompleted: ((round: number) => void) | null = null;

  constructor(
    readonly root: HTMLElement,
    readonly api: ApiClient,
    readonly state: UiState,
  ) {}

  /** Await every submission currently in flight (test hook and refresh guard). */
  async settle(): Promise<void> {
    while (this.inflight.size) {
      await Promise.allSettled([...this.inflight]);
    }
  }

  async load(): Promise<void> {
    const ruleId = this.state.ruleId;
    clear(this.root);
    if (!ruleId) {
      this.root.append(el("p", { class: "empty" }, "no rule selected"));
      return;
    }
    const rule = await this.api.getRule(ruleId);
    this.state.rule = rule;
    if (!rule.in_flight) {
      this.renderIdle();
      return;
    }
    const page = await this.api.getTasks(ruleId, rule.round_no, this.state.page);
    this.renderTasks(page);
  }

  private renderIdle(): void {
    const rule = this.state.rule;
    const box = el("div", { class: "empty-queue" });
    box.append(el("h3", {}, "stabilized / no tasks"));
    box.append(
      el(
        "p",
        {},
        "No verdicts are being collected. Start a round to fill the queue.",
      ),
    );
    if (rule && rule.stabilized.length > 0) {
      const list = el("ul", { class: "stabilized-list" });
      for (const pathId of rule.stabilized) {
        list.append(el("li", { "data-path": pathId }, `\u{1F512} ${pathId}`));
      }
      box.append(el("p", {}, "Paths no longer sampled:"), list);
    }
    this.root.append(box);
  }

  private renderTasks(page: TasksPage): void {
    clear(this.root);
    if (page.tasks.length === 0) {
      this.root.append(
        el(
          "p",
          { class: "empty" },
          "queue drained, waiting for the round to close",
        ),
      );
      return;
    }
    const header = el(
      "div",
      { class: "queue-header" },
      el("span", { class: "queue-round", "data-value": show(page.round) }, `round ${show(page.round)}`),
      el(
        "span",
        { class: "queue-pages" },
        `page ${show(page.page)} of ${show(page.pages)}`,
      ),
      el(
        "span",
        { class: "queue-resolved", "data-value": show(page.resolved) },
        `${show(page.resolved)} resolved`,
      ),
    );
    this.root.append(header);
    const list = el("div", { class: "task-list" });
    for (const task of page.tasks) {
      list.append(this.taskCard(task));
    }
    this.root.append(list);
    const pager = el("div", { class: "pager" });
    const prev = el("button", { type: "button" }, "previous page") as HTMLButtonElement;
    const next = el("button", { type: "button" }, "next page") as HTMLButtonElement;
    prev.disabled = page.page <= 1;
    next.disabled = page.page >= page.pages;
    prev.addEventListener("click", () => {
      this.state.page = Math.max(1, this.state.page - 1);
      void this.load();
    });
    next.addEventListener("click", () => {
      this.state.page += 1;
      void this.load();
    });
    pager.append(prev, next);
    this.root.append(pager);
  }

  private taskCard(task: TaskItem): HTMLElement {
    const card = el("article", {
      class: "task-card",
      "data-task-id": task.task_id,
      "data-doc-id": task.doc_id,
      "data-status": "idle",
    });
    card.append(
      el("header", {}, el("span", { class: "tag-chip" }, task.tag), ` ${task.doc_id}`),
      el("p", { class: "task-text" }, task.text),
      el("p", { class: "task-instructions" }, task.instructions),
    );
    const controls = el("div", { class: "verdict-buttons" });
    for (const [caption, answer] of ANSWER_LABELS) {
      const button = el(
        "button",
        { type: "button", "data-answer": answer },
        caption,
      ) as HTMLButtonElement;
      button.addEventListener("click", () => {
        this.track(this.submit(task, answer, card));
      });
      controls.append(button);
    }
    card.append(controls, el("p", { class: "task-status" }, ""));
    return card;
  }

  private track(promise: Promise<void>): void {
    this.inflight.add(promise);
    void promise.finally(() => this.inflight.delete(promise));
  }

  private setStatus(card: HTMLElement, status: TaskStatus, note: string): void {
    card.setAttribute("data-status", status);
    const line = card.querySelector(".task-status");
    if (line) line.textContent = note;
    const lock = status === "pending" || status === "submitted";
    for (const button of card.querySelectorAll<HTMLButtonElement>(".verdict-buttons button")) {
      button.disabled = lock;
    }
  }

  /** Send one verdict; the card locks immediately and reconciles after. */
  async submit(task: TaskItem, answer: string, card: HTMLElement): Promise<void> {
    if (card.getAttribute("data-status") === "pending") return;
    this.removeRetry(card);
    this.setStatus(card, "pending", "submitting");
    try {
      const reply = await this.api.postVerdicts(this.state.ruleId!, [
        { task_id: task.task_id, worker_id: this.state.workerId, answer },
      ]);
      const result = reply.results.find((r) => r.task_id === task.task_id);
      const note = result?.resolved
        ? `recorded, resolved as ${result.resolved}`
        : result?.accepted
          ? "recorded, awaiting quorum"
          : "already recorded";
      this.setStatus(card, "submitted", note);
      if (reply.round_completed !== null) {
        this.onRoundCompleted?.(reply.round_completed);
      }
    } catch (err) {
      this.setStatus(card, "failed", "submission failed");
      this.addRetry(card, task, answer);
      if (!(err instanceof Error)) throw err;
    }
  }

  private addRetry(card: HTMLElement, task: TaskItem, answer: string): void {
    const retry = el(
      "button",
      { type: "button", class: "retry", "data-answer": answer },
      "retry",
    ) as HTMLButtonElement;
    retry.addEventListener("click", () => {
      this.track(this.submit(task, answer, card));
    });
    card.append(retry);
  }

  private removeRetry(card: HTMLElement): void {
    card.querySelector(".retry")?.remove();
  }
}
