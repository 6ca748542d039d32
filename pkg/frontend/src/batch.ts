// Batch labeling form: one control row per pending example, submit gated on
// completeness (explicit partial submit allowed), completion summary when done.

import { h, VNode } from "./vdom";
import {
  allLabeled,
  anyLabeled,
  AppState,
  unlabeledIds,
} from "./state";
import { colorForConfidence } from "./map";

export interface BatchHandlers {
  onLabel: (id: string, label: string) => void;
  onSubmitAll: () => void;
  onSubmitPartial: () => void;
  onRetry: () => void;
}

function bannerNode(state: AppState, handlers: BatchHandlers): VNode | null {
  if (!state.banner) return null;
  const retry =
    state.banner.kind === "error"
      ? [h("button", { class: "retry" }, ["retry"], { click: handlers.onRetry })]
      : [];
  return h(
    "div",
    { class: `banner banner-${state.banner.kind}`, role: "alert" },
    [state.banner.message, ...retry],
  );
}

export function renderBatch(state: AppState, handlers: BatchHandlers): VNode {
  const view = state.view;
  if (!view) {
    return h("div", { class: "batch-panel empty" }, ["No session"]);
  }
  const banner = bannerNode(state, handlers);
  if (view.done) {
    const summary = h("div", { class: "completion-summary" }, [
      h("h2", {}, ["Annotation complete"]),
      h("p", {}, [
        `Budget spent: ${view.budget.spent} / ${view.budget.total} over ` +
          `${state.history.length} selection rounds.`,
      ]),
    ]);
    return h("div", { class: "batch-panel done" }, banner ? [banner, summary] : [summary]);
  }

  const rows: VNode[] = view.batch.map((item) => {
    const chosen = item.labeled ? "(submitted)" : state.form[item.id] ?? "";
    const buttons = view.labels.map((label) =>
      h(
        "button",
        {
          class:
            state.form[item.id] === label
              ? "label-option chosen"
              : "label-option",
          "data-id": item.id,
          "data-label": label,
          ...(item.labeled ? { disabled: "disabled" } : {}),
        },
        [label],
        { click: () => handlers.onLabel(item.id, label) },
      ),
    );
    return h("div", { class: "batch-item", "data-id": item.id }, [
      h("span", {
        class: "confidence-dot",
        style: `background:${colorForConfidence(item.confidence)}`,
        title: `confidence ${item.confidence ?? "n/a"}`,
      }),
      h("div", { class: "item-text" }, [item.text]),
      h("div", { class: "item-meta" }, [
        `covers ${item.cover_size} hard neighbors`,
      ]),
      h("div", { class: "label-control", "data-chosen": chosen }, buttons),
    ]);
  });

  const remaining = unlabeledIds(state).filter((id) => !state.form[id]).length;
  const controls = h("div", { class: "batch-controls" }, [
    h(
      "button",
      {
        class: "submit-all",
        ...(allLabeled(state) ? {} : { disabled: "disabled" }),
      },
      ["submit batch"],
      { click: () => handlers.onSubmitAll() },
    ),
    h(
      "button",
      {
        class: "submit-partial",
        ...(anyLabeled(state) ? {} : { disabled: "disabled" }),
      },
      ["submit labeled so far"],
      { click: () => handlers.onSubmitPartial() },
    ),
    h("span", { class: "remaining" }, [
      remaining ? `${remaining} unlabeled` : "all labeled",
    ]),
  ]);

  const header = h("div", { class: "batch-header" }, [
    h("h2", {}, [`Round ${view.iteration}: label ${view.batch.length} examples`]),
    h("span", { class: "budget" }, [
      `budget ${view.budget.spent}/${view.budget.total}`,
    ]),
  ]);
  const children: VNode[] = [header, ...rows, controls];
  if (banner) children.unshift(banner);
  return h("div", { class: "batch-panel" }, children);
}

export function renderReport(state: AppState): VNode {
  if (!state.report) {
    return h("div", { class: "report-panel empty" }, ["No report yet"]);
  }
  const acc =
    state.report.accuracy === null
      ? "n/a"
      : (state.report.accuracy * 100).toFixed(1) + "%";
  return h("div", { class: "report-panel" }, [
    h("h2", {}, ["Evaluation"]),
    h("p", {}, [`Accuracy on the held-out split: ${acc}`]),
    h("p", {}, [`${state.report.records.length} test instances`]),
  ]);
}
