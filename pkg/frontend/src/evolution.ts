import { ApiClient } from "./api.js";
import { clear, el, show, svgEl } from "./dom.js";
import {
  actionFeatureKey,
  buildPrefixTree,
  renderedFeatureKey,
  splitDnf,
  TreeNode,
} from "./dnf.js";
import type { UiState } from "./state.js";
import type { Report, RoundAction, RoundReport } from "./types.js";

const CHART = { slot: 64, padX: 28, padY: 18, plotH: 120, labelH: 34 };

/**
 * Precision line chart, one x slot per round. Every number shown (point
 * labels, round ticks) is taken verbatim from the report payload; rounds
 * whose precision is undefined render as a gap marked "n/a".
 */
export function buildPrecisionChart(rounds: RoundReport[]): SVGElement {
  const width = CHART.padX * 2 + CHART.slot * Math.max(rounds.length, 1);
  const height = CHART.padY * 2 + CHART.plotH + CHART.labelH;
  const svg = svgEl("svg", {
    class: "precision-chart",
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
    role: "img",
  });
  for (const frac of [0, 0.5, 1]) {
    const y = CHART.padY + CHART.plotH * (1 - frac);
    svg.append(
      svgEl("line", {
        x1: String(CHART.padX),
        y1: String(y),
        x2: String(width - CHART.padX),
        y2: String(y),
        class: "gridline",
      }),
    );
  }
  const points: { x: number; y: number }[] = [];
  rounds.forEach((round, i) => {
    const x = CHART.padX + CHART.slot * i + CHART.slot / 2;
    const tickY = CHART.padY + CHART.plotH + 16;
    svg.append(
      svgEl(
        "text",
        { x: String(x), y: String(tickY), class: "round-tick", "text-anchor": "middle" },
        show(round.round),
      ),
    );
    const value = round.overall_precision;
    if (value === null) {
      svg.append(
        svgEl(
          "text",
          {
            x: String(x),
            y: String(tickY + 16),
            class: "point-label missing",
            "data-round": show(round.round),
            "text-anchor": "middle",
          },
          "n/a",
        ),
      );
      return;
    }
    const y = CHART.padY + CHART.plotH * (1 - value);
    points.push({ x, y });
    svg.append(
      svgEl("circle", {
        cx: String(x),
        cy: String(y),
        r: "4",
        class: "point",
        "data-round": show(round.round),
        "data-value": show(value),
      }),
    );
    svg.append(
      svgEl(
        "text",
        {
          x: String(x),
          y: String(tickY + 16),
          class: "point-label",
          "data-round": show(round.round),
          "data-value": show(value),
          "text-anchor": "middle",
        },
        show(value),
      ),
    );
  });
  if (points.length > 1) {
    svg.append(
      svgEl("polyline", {
        class: "trend",
        fill: "none",
        points: points.map((p) => `${p.x},${p.y}`).join(" "),
      }),
    );
  }
  return svg;
}

function actionBadge(action: RoundAction, skipped: boolean): HTMLElement {
  const badge = el("div", {
    class: skipped ? "action-badge skipped" : `action-badge ${action.kind}`,
    "data-kind": action.kind,
  });
  badge.append(el("span", { class: "badge-kind" }, action.kind));
  if (action.kind === "replace" && !skipped) {
    badge.append(
      el("span", { class: "removed" }, action.removed ?? ""),
      " → ",
      el("span", { class: "inserted" }, action.inserted ?? ""),
    );
  } else if (action.kind === "restrict" && !skipped) {
    badge.append(el("span", { class: "restrict-node" }, action.node ?? ""));
    for (const added of action.appended ?? []) {
      badge.append(el("span", { class: "appended-chip" }, `+ ${added}`));
    }
  }
  if (action.reason) {
    badge.append(el("span", { class: "skip-reason" }, action.reason));
  }
  return badge;
}

/** Feature keys introduced by this round's applied actions. */
function newFeatureKeys(actions: RoundAction[]): Set<string> {
  const keys = new Set<string>();
  for (const action of actions) {
    const labels = [...(action.appended ?? [])];
    if (action.inserted) labels.push(action.inserted);
    for (const label of labels) {
      const key = actionFeatureKey(label);
      if (key) keys.add(key);
    }
  }
  return keys;
}

function renderTree(
  node: TreeNode,
  stabilizedIndexes: Set<number>,
  freshKeys: Set<string>,
): HTMLElement {
  const list = el("ul", { class: "rule-tree" });
  for (const child of node.children) {
    const item = el("li", {});
    const label = el("span", { class: "tree-feature" }, child.label);
    item.append(label);
    const key = renderedFeatureKey(child.label);
    if (key && freshKeys.has(key)) {
      item.append(el("span", { class: "badge new" }, "new"));
    }
    if (child.leafPaths.some((i) => stabilizedIndexes.has(i))) {
      item.append(
        el(
          "span",
          { class: "lock", title: "stabilized, sampling halted" },
          "\u{1F512}",
        ),
      );
    }
    if (child.children.length) {
      item.append(renderTree(child, stabilizedIndexes, freshKeys));
    }
    list.append(item);
  }
  return list;
}

function roundCard(round: RoundReport): HTMLElement {
  const card = el("section", { class: "round-card", "data-round": show(round.round) });
  card.append(el("h3", {}, `round ${show(round.round)}`));
  const counters = el("dl", { class: "round-counters" });
  const pairs: [string, number][] = [
    ["annotated", round.annotated],
    ["eligible", round.eligible],
    ["sampled", round.sample_size],
    ["verdicts", round.verdicts_consumed],
    ["cost", round.cost_units],
    ["keyword candidates", round.syntactic_candidates],
    ["concept candidates", round.conceptual_candidates],
  ];
  for (const [name, value] of pairs) {
    counters.append(
      el("dt", {}, name),
      el("dd", { "data-counter": name, "data-value": show(value) }, show(value)),
    );
  }
  card.append(counters);

  const actions = el("div", { class: "round-actions" });
  if (round.actions.length === 0 && round.skipped_actions.length === 0) {
    actions.append(el("p", { class: "no-actions" }, "no changes this round"));
  }
  for (const action of round.actions) actions.append(actionBadge(action, false));
  for (const action of round.skipped_actions) actions.append(actionBadge(action, true));
  card.append(actions);

  const stabilizedIndexes = new Set<number>();
  round.paths_after.forEach((pathId, i) => {
    if (round.stabilized_paths.includes(pathId)) stabilizedIndexes.add(i);
  });
  const tree = buildPrefixTree(splitDnf(round.rule_render));
  card.append(
    el(
      "div",
      { class: "tree-box" },
      renderTree(tree, stabilizedIndexes, newFeatureKeys(round.actions)),
    ),
  );

  const pathRows = el("table", { class: "path-table" });
  const head = el("tr", {});
  for (const caption of ["path", "precision", "θ", "evidence"]) {
    head.append(el("th", {}, caption));
  }
  pathRows.append(head);
  for (const [pathId, theta] of Object.entries(round.path_theta)) {
    const row = el("tr", { "data-path": pathId });
    const precision = round.path_precisions[pathId] ?? null;
    const evidence = round.path_evidence[pathId] ?? [];
    row.append(
      el("td", { class: "path-id" }, pathId),
      el("td", { "data-value": show(precision) }, show(precision)),
      el("td", { "data-value": show(theta) }, show(theta)),
      el("td", {}, evidence.map((n) => show(n)).join(" / ")),
    );
    pathRows.append(row);
  }
  card.append(pathRows);
  return card;
}

/** Round timeline: precision chart plus one card per completed round. */
export class EvolutionView {
  constructor(
    readonly root: HTMLElement,
    readonly api: ApiClient,
    readonly state: UiState,
  ) {}

  async load(): Promise<void> {
    const ruleId = this.state.ruleId;
    clear(this.root);
    if (!ruleId) {
      this.root.append(el("p", { class: "empty" }, "no rule selected"));
      return;
    }
    const report = await this.api.getReport(ruleId);
    this.state.report = report;
    this.render(report);
  }

  render(report: Report): void {
    clear(this.root);
    this.root.append(el("h2", {}, `rule ${report.rule_id} (${report.tag})`));
    if (report.rounds.length === 0) {
      this.root.append(el("p", { class: "empty" }, "no completed rounds yet"));
      return;
    }
    this.root.append(buildPrecisionChart(report.rounds));
    const summary = el("dl", { class: "report-summary" });
    summary.append(
      el("dt", {}, "total cost"),
      el("dd", { "data-value": show(report.total_cost) }, show(report.total_cost)),
    );
    if (report.evaluation) {
      const pairs: [string, number | null][] = [
        ["measured precision", report.evaluation.precision],
        ["measured recall", report.evaluation.recall],
        ["measured f1", report.evaluation.f1],
      ];
      for (const [name, value] of pairs) {
        summary.append(
          el("dt", {}, name),
          el("dd", { "data-metric": name, "data-value": show(value) }, show(value)),
        );
      }
    }
    this.root.append(summary);
    for (const round of report.rounds) {
      this.root.append(roundCard(round));
    }
    this.root.append(
      el("p", { class: "final-rule" }, el("code", {}, report.final_rule)),
    );
  }
}
