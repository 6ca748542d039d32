// App state is a pure function of server responses plus unsent form inputs.
// Labels already accepted by the server (item.labeled) survive a refresh;
// only unsent form selections are local.

import { ApiError } from "./api";
import type { BatchView, Report } from "./types";

export interface AppState {
  sessionId: string | null;
  view: BatchView | null;
  form: Record<string, string>; // unsent label selections
  history: BatchView[]; // one snapshot per iteration, for the map
  banner: { kind: "error" | "conflict" | "info"; message: string } | null;
  report: Report | null;
  mapIteration: number | null; // null = show all layers
}

export function initialState(): AppState {
  return {
    sessionId: null,
    view: null,
    form: {},
    history: [],
    banner: null,
    report: null,
    mapIteration: null,
  };
}

/** Fold a fresh server view into the state (pure; returns a new state). */
export function applyServerView(state: AppState, view: BatchView): AppState {
  const history = [...state.history];
  const last = history[history.length - 1];
  if (view.batch.length > 0 && (!last || last.iteration !== view.iteration)) {
    history.push(view);
  } else if (last && last.iteration === view.iteration) {
    history[history.length - 1] = view;
  }
  const pending = new Set(view.batch.map((b) => b.id));
  const form: Record<string, string> = {};
  for (const [id, label] of Object.entries(state.form)) {
    const item = view.batch.find((b) => b.id === id);
    if (pending.has(id) && item && !item.labeled) form[id] = label;
  }
  return {
    ...state,
    sessionId: view.session_id,
    view,
    form,
    history,
    banner: null,
  };
}

export function setLabel(state: AppState, id: string, label: string): AppState {
  if (!state.view || !state.view.batch.some((b) => b.id === id)) return state;
  return { ...state, form: { ...state.form, [id]: label } };
}

export function applyReport(state: AppState, report: Report): AppState {
  return { ...state, report };
}

export function setMapIteration(state: AppState, iteration: number | null): AppState {
  return { ...state, mapIteration: iteration };
}

/** Server already holds labels for `labeled` items; the rest need form input. */
export function unlabeledIds(state: AppState): string[] {
  if (!state.view) return [];
  return state.view.batch.filter((b) => !b.labeled).map((b) => b.id);
}

export function labelsToSubmit(state: AppState): Record<string, string> {
  const out: Record<string, string> = {};
  for (const id of unlabeledIds(state)) {
    const label = state.form[id];
    if (label) out[id] = label;
  }
  return out;
}

export function allLabeled(state: AppState): boolean {
  const needed = unlabeledIds(state);
  return needed.length > 0 && needed.every((id) => state.form[id]);
}

export function anyLabeled(state: AppState): boolean {
  return Object.keys(labelsToSubmit(state)).length > 0;
}

/** Failures keep the form intact; a 409 becomes a conflict toast. */
export function applyError(state: AppState, err: unknown): AppState {
  if (err instanceof ApiError && err.status === 409) {
    return { ...state, banner: { kind: "conflict", message: err.message } };
  }
  const message = err instanceof Error ? err.message : String(err);
  return { ...state, banner: { kind: "error", message } };
}
