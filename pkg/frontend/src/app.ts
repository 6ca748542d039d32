// Controller: owns the state, talks to the API, re-renders after every
// confirmed server transition (no optimistic updates).

import { AnnotationApi } from "./api";
import { renderBatch, renderReport } from "./batch";
import { renderMap } from "./map";
import {
  AppState,
  applyError,
  applyReport,
  applyServerView,
  initialState,
  labelsToSubmit,
  setLabel,
  setMapIteration,
} from "./state";
import type { BatchView, SessionConfig } from "./types";
import { h, VNode } from "./vdom";

export class AppController {
  state: AppState = initialState();
  private renderCallback: (tree: VNode) => void;

  constructor(
    private api: AnnotationApi,
    render: (tree: VNode) => void = () => undefined,
  ) {
    this.renderCallback = render;
  }

  private update(state: AppState): void {
    this.state = state;
    this.renderCallback(this.render());
  }

  async createSession(config: SessionConfig): Promise<void> {
    try {
      const view = await this.api.createSession(config);
      this.update(applyServerView(this.state, view));
    } catch (err) {
      this.update(applyError(this.state, err));
    }
  }

  async joinSession(sessionId: string): Promise<void> {
    try {
      const view = await this.api.getBatch(sessionId);
      this.update(applyServerView(this.state, view));
    } catch (err) {
      this.update(applyError(this.state, err));
    }
  }

  async refresh(): Promise<void> {
    if (this.state.sessionId) await this.joinSession(this.state.sessionId);
  }

  label(id: string, label: string): void {
    this.update(setLabel(this.state, id, label));
  }

  /** Send labels; on a phase advance the next batch is fetched and rendered. */
  async submit(labels: Record<string, string>): Promise<BatchView | null> {
    if (!this.state.sessionId || Object.keys(labels).length === 0) return null;
    try {
      const view = await this.api.submitLabels(this.state.sessionId, labels);
      this.update(applyServerView(this.state, view));
      if (view.done) await this.loadReport();
      return view;
    } catch (err) {
      this.update(applyError(this.state, err)); // 409 -> toast, form preserved
      return null;
    }
  }

  submitAll(): Promise<BatchView | null> {
    return this.submit(labelsToSubmit(this.state));
  }

  submitPartial(): Promise<BatchView | null> {
    return this.submit(labelsToSubmit(this.state));
  }

  async loadReport(): Promise<void> {
    if (!this.state.sessionId) return;
    try {
      const report = await this.api.getReport(this.state.sessionId);
      this.update(applyReport(this.state, report));
    } catch (err) {
      this.update(applyError(this.state, err));
    }
  }

  toggleMapIteration(iteration: number | null): void {
    this.update(setMapIteration(this.state, iteration));
  }

  /** Pure render of the whole app from current state. */
  render(): VNode {
    return h("div", { class: "app" }, [
      renderBatch(this.state, {
        onLabel: (id, label) => this.label(id, label),
        onSubmitAll: () => void this.submitAll(),
        onSubmitPartial: () => void this.submitPartial(),
        onRetry: () => void this.refresh(),
      }),
      renderMap(this.state.history, this.state.mapIteration, (it) =>
        this.toggleMapIteration(it),
      ),
      renderReport(this.state),
    ]);
  }
}
