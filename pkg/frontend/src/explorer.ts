import { ApiClient, ApiError } from "./api.js";
import { clear, el, show, svgEl } from "./dom.js";
import {
  addToEvidence,
  addToQuery,
  MAX_WEIGHT,
  MIN_WEIGHT,
  queryPreference,
  removeFromEvidence,
  removeFromQuery,
  removeQueryMember,
  setQueryWeight,
  UiState,
} from "./state.js";
import type { ConceptPayload, RankResponse, Summaries } from "./types.js";

const WHEEL = { size: 260, hole: 34 };

function sectorPath(cx: number, cy: number, r: number, a0: number, a1: number): string {
  const large = a1 - a0 > Math.PI ? 1 : 0;
  const x0 = cx + r * Math.cos(a0);
  const y0 = cy + r * Math.sin(a0);
  const x1 = cx + r * Math.cos(a1);
  const y1 = cy + r * Math.sin(a1);
  return `M ${cx} ${cy} L ${x0} ${y0} A ${r} ${r} 0 ${large} 1 ${x1} ${y1} Z`;
}

/**
 * Radial map of one summary kind: a circle split into equal sectors,
 * one per concept, capped at the service's wedge count.
 */
export function buildWheel(
  concepts: ConceptPayload[],
  wedgeCount: number,
  onPick: (concept: ConceptPayload) => void,
): SVGElement {
  const shown = concepts.slice(0, wedgeCount);
  const size = WHEEL.size;
  const svg = svgEl("svg", {
    class: "concept-wheel",
    viewBox: `0 0 ${size} ${size}`,
    width: String(size),
    height: String(size),
    role: "listbox",
  });
  const c = size / 2;
  const r = c - 4;
  const step = (2 * Math.PI) / Math.max(shown.length, 1);
  shown.forEach((concept, i) => {
    const a0 = -Math.PI / 2 + step * i;
    const a1 = a0 + step;
    const sector = svgEl("path", {
      d: shown.length === 1
        ? `M ${c - r} ${c} A ${r} ${r} 0 1 1 ${c + r} ${c} A ${r} ${r} 0 1 1 ${c - r} ${c} Z`
        : sectorPath(c, c, r, a0, a1),
      class: "wedge",
      "data-label": concept.label,
      "data-kind": concept.kind,
      role: "option",
    });
    sector.append(svgEl("title", {}, concept.label));
    sector.addEventListener("click", () => onPick(concept));
    svg.append(sector);
  });
  svg.append(
    svgEl("circle", { cx: String(c), cy: String(c), r: String(WHEEL.hole), class: "hub" }),
  );
  return svg;
}

/**
 * Concept explorer: summary wheel, details pane, Evidence Box, and the
 * Query Box that drives ranking. All metric text comes straight from
 * API payloads; sliders and the top input are user-entered values.
 */
export class ExplorerView {
  private summaries: Summaries | null = null;
  private activeKind: string | null = null;
  private lastRank: RankResponse | null = null;

  constructor(
    readonly root: HTMLElement,
    readonly api: ApiClient,
    readonly state: UiState,
  ) {}

  async load(): Promise<void> {
    const corpusId = this.state.corpusId;
    clear(this.root);
    if (!corpusId) {
      this.root.append(el("p", { class: "empty" }, "no corpus selected"));
      return;
    }
    this.summaries = await this.api.getSummaries(corpusId);
    const kinds = Object.keys(this.summaries.kinds);
    if (this.activeKind === null || !kinds.includes(this.activeKind)) {
      this.activeKind = kinds[0] ?? null;
    }
    this.render();
  }

  render(): void {
    clear(this.root);
    if (!this.summaries) return;
    const layout = el("div", { class: "explorer-layout" });
    layout.append(this.wheelPane(), this.detailsPane(), this.boxesPane());
    this.root.append(layout);
    this.root.append(this.resultsPane());
  }

  private wheelPane(): HTMLElement {
    const pane = el("div", { class: "wheel-pane" });
    const kindBar = el("div", { class: "kind-bar", role: "tablist" });
    const summaries = this.summaries!;
    for (const kind of Object.keys(summaries.kinds)) {
      const button = el(
        "button",
        { type: "button", "data-kind": kind, role: "tab" },
        kind,
      ) as HTMLButtonElement;
      if (kind === this.activeKind) button.classList.add("active");
      button.addEventListener("click", () => {
        this.activeKind = kind;
        this.render();
      });
      kindBar.append(button);
    }
    pane.append(kindBar);
    const concepts = this.activeKind ? summaries.kinds[this.activeKind] ?? [] : [];
    pane.append(
      buildWheel(concepts, summaries.wedge_count, (concept) => {
        this.renderDetails(concept);
      }),
    );
    const note = summaries.errors[this.activeKind ?? ""];
    if (note) pane.append(el("p", { class: "kind-error" }, note));
    return pane;
  }

  private detailsPane(): HTMLElement {
    return el("div", { class: "details-pane" }, el("p", { class: "hint" }, "pick a wedge"));
  }

  private renderDetails(concept: ConceptPayload): void {
    const pane = this.root.querySelector(".details-pane");
    if (!pane) return;
    clear(pane);
    pane.append(el("h3", {}, concept.label));
    const facts = el("dl", { class: "concept-facts" });
    facts.append(el("dt", {}, "kind"), el("dd", {}, concept.kind));
    const metrics: [string, number][] = [
      ["frequency", concept.frequency],
      ["relevancy", concept.relevancy],
      ["weight", concept.weight],
    ];
    for (const [name, value] of metrics) {
      facts.append(
        el("dt", {}, name),
        el("dd", { "data-metric": name, "data-value": show(value) }, show(value)),
      );
    }
    pane.append(facts);
    const members = el("ul", { class: "member-list" });
    for (const member of concept.members) {
      members.append(el("li", {}, member));
    }
    pane.append(members);
    const collect = el("button", { type: "button", class: "collect" }, "collect");
    collect.addEventListener("click", () => {
      addToEvidence(this.state, concept);
      this.renderBoxes();
    });
    pane.append(collect);
  }

  private boxesPane(): HTMLElement {
    const pane = el("div", { class: "boxes-pane" });
    const queryBox = el("section", { class: "query-box" });
    // attach once: the section survives re-renders, only its children do not
    queryBox.addEventListener("dragover", (event) => event.preventDefault());
    queryBox.addEventListener("drop", (event) => {
      event.preventDefault();
      const text = (event as DragEvent).dataTransfer?.getData("text/plain");
      if (text) this.handleDropPayload(text);
    });
    pane.append(el("section", { class: "evidence-box" }), queryBox);
    queueMicrotask(() => this.renderBoxes());
    return pane;
  }

  private renderBoxes(): void {
    this.renderEvidence();
    this.renderQuery();
  }

  private renderEvidence(): void {
    const box = this.root.querySelector(".evidence-box");
    if (!box) return;
    clear(box);
    box.append(el("h3", {}, "Evidence Box"));
    if (this.state.evidence.length === 0) {
      box.append(el("p", { class: "hint" }, "collect concepts from the wheel"));
      return;
    }
    for (const concept of this.state.evidence) {
      const chip = el("div", {
        class: "evidence-chip",
        draggable: "true",
        "data-label": concept.label,
        "data-kind": concept.kind,
      });
      chip.addEventListener("dragstart", (event) => {
        const dt = (event as DragEvent).dataTransfer;
        dt?.setData(
          "text/plain",
          JSON.stringify({ label: concept.label, kind: concept.kind }),
        );
      });
      chip.append(el("span", { class: "chip-label" }, concept.label));
      const toQuery = el("button", { type: "button", class: "to-query" }, "to query");
      toQuery.addEventListener("click", () => {
        addToQuery(this.state, concept);
        this.renderBoxes();
      });
      const drop = el("button", { type: "button", class: "drop-evidence" }, "×");
      drop.addEventListener("click", () => {
        removeFromEvidence(this.state, concept.label, concept.kind);
        this.renderBoxes();
      });
      chip.append(toQuery, drop);
      box.append(chip);
    }
  }

  /** Accepts drops from Evidence Box chips ({label, kind} as JSON text). */
  handleDropPayload(payloadText: string): boolean {
    let parsed: { label?: string; kind?: string };
    try {
      parsed = JSON.parse(payloadText) as { label?: string; kind?: string };
    } catch {
      return false;
    }
    const concept = this.state.evidence.find(
      (c) => c.label === parsed.label && c.kind === parsed.kind,
    );
    if (!concept) return false;
    const added = addToQuery(this.state, concept);
    this.renderBoxes();
    return added;
  }

  private renderQuery(): void {
    const box = this.root.querySelector<HTMLElement>(".query-box");
    if (!box) return;
    clear(box);
    box.append(el("h3", {}, "Query Box"));
    if (this.state.queryBox.length === 0) {
      box.append(el("p", { class: "hint" }, "drag concepts here to rank by them"));
    }
    for (const entry of this.state.queryBox) {
      const chip = el("div", { class: "query-chip", "data-label": entry.label });
      chip.append(el("span", { class: "chip-label" }, entry.label));
      const remove = el("button", { type: "button", class: "drop-query" }, "×");
      remove.addEventListener("click", () => {
        removeFromQuery(this.state, entry.label);
        this.renderBoxes();
      });
      chip.append(remove);
      const members = el("ul", { class: "query-members" });
      for (const member of entry.members) {
        const item = el("li", { "data-member": member }, member);
        const cut = el(
          "button",
          { type: "button", class: "remove-member", "aria-label": `remove ${member}` },
          "×",
        );
        cut.addEventListener("click", () => {
          removeQueryMember(this.state, entry.label, member);
          this.renderBoxes();
        });
        item.append(cut);
        members.append(item);
      }
      chip.append(members);
      const slider = el("input", {
        type: "range",
        min: String(MIN_WEIGHT),
        max: String(MAX_WEIGHT),
        step: "0.1",
        value: String(entry.weight),
        class: "weight-slider",
        "aria-label": `weight for ${entry.label}`,
      }) as HTMLInputElement;
      slider.addEventListener("input", () => {
        setQueryWeight(this.state, entry.label, Number(slider.value));
      });
      chip.append(slider);
      box.append(chip);
    }
    const rankButton = el(
      "button",
      { type: "button", class: "rank-button" },
      "Rank",
    ) as HTMLButtonElement;
    rankButton.disabled = this.state.queryBox.length === 0;
    rankButton.addEventListener("click", () => void this.runRank());
    box.append(rankButton);
  }

  private topLimit = 10;

  async runRank(): Promise<void> {
    if (this.state.queryBox.length === 0 || !this.state.corpusId) return;
    const results = this.root.querySelector(".rank-results");
    try {
      const reply = await this.api.rank(
        this.state.corpusId,
        queryPreference(this.state),
        this.topLimit,
      );
      this.lastRank = reply;
      this.renderResults();
    } catch (err) {
      if (results) {
        clear(results);
        const message = err instanceof ApiError ? err.message : "ranking failed";
        results.append(el("p", { class: "error" }, message));
      }
      if (!(err instanceof ApiError)) throw err;
    }
  }

  private resultsPane(): HTMLElement {
    const pane = el("div", { class: "rank-results" });
    queueMicrotask(() => this.renderResults());
    return pane;
  }

  /**
   * Ranked documents in payload order. Segment widths are layout only;
   * every visible number (scores, per-concept contributions) is the
   * payload value rendered verbatim.
   */
  private renderResults(): void {
    const pane = this.root.querySelector(".rank-results");
    if (!pane || !this.lastRank) return;
    clear(pane);
    pane.append(el("h3", {}, "Ranked documents"));
    for (const item of this.lastRank.items) {
      const row = el("div", { class: "rank-item", "data-doc-id": item.doc_id });
      row.append(
        el("span", { class: "doc-id" }, item.doc_id),
        el("span", { class: "score", "data-value": show(item.score) }, show(item.score)),
      );
      const bar = el("div", { class: "contribution-bar" });
      const entries = Object.entries(item.contributions);
      const total = entries.reduce((sum, [, v]) => sum + v, 0);
      const legend = el("div", { class: "contribution-legend" });
      entries.forEach(([label, value], i) => {
        const segment = el("div", {
          class: `segment hue-${i % 8}`,
          "data-concept": label,
          "data-value": show(value),
          title: `${label}: ${show(value)}`,
        });
        if (total > 0) segment.style.width = `${(value / total) * 100}%`;
        bar.append(segment);
        legend.append(
          el(
            "span",
            { class: `legend-entry hue-${i % 8}`, "data-concept": label, "data-value": show(value) },
            `${label} ${show(value)}`,
          ),
        );
      });
      row.append(bar, legend);
      pane.append(row);
    }
  }
}
