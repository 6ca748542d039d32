// Semantic-map rendering: one scatter layer per iteration, point hue encodes
// model uncertainty (green = confident, red = uncertain), selected examples
// carry a distinct marker.

import { h, VNode } from "./vdom";
import type { BatchView } from "./types";

export interface MapPoint {
  id: string;
  x: number;
  y: number;
  confidence: number | null;
  iteration: number;
}

export interface MapLayer {
  iteration: number;
  points: MapPoint[];
}

export function mapLayers(history: BatchView[]): MapLayer[] {
  const layers: MapLayer[] = [];
  for (const view of history) {
    const points: MapPoint[] = [];
    for (const item of view.batch) {
      const [x, y] = item.pca;
      if (x === null || y === null) continue;
      points.push({ id: item.id, x, y, confidence: item.confidence, iteration: view.iteration });
    }
    layers.push({ iteration: view.iteration, points });
  }
  return layers;
}

/** Confidence 1 -> green (hue 120), 0 -> red (hue 0); unknown -> grey. */
export function colorForConfidence(confidence: number | null): string {
  if (confidence === null) return "hsl(0, 0%, 60%)";
  const c = Math.max(0, Math.min(1, confidence));
  return `hsl(${Math.round(120 * c)}, 80%, 45%)`;
}

interface Extent {
  minX: number;
  maxX: number;
  minY: number;
  maxY: number;
}

function extentOf(layers: MapLayer[]): Extent {
  let minX = Infinity,
    maxX = -Infinity,
    minY = Infinity,
    maxY = -Infinity;
  for (const layer of layers) {
    for (const p of layer.points) {
      minX = Math.min(minX, p.x);
      maxX = Math.max(maxX, p.x);
      minY = Math.min(minY, p.y);
      maxY = Math.max(maxY, p.y);
    }
  }
  if (!isFinite(minX)) return { minX: -1, maxX: 1, minY: -1, maxY: 1 };
  const padX = (maxX - minX || 1) * 0.08;
  const padY = (maxY - minY || 1) * 0.08;
  return { minX: minX - padX, maxX: maxX + padX, minY: minY - padY, maxY: maxY + padY };
}

const SIZE = 360;

export function renderMap(
  history: BatchView[],
  activeIteration: number | null,
  onToggle: (iteration: number | null) => void,
): VNode {
  const layers = mapLayers(history);
  if (layers.length === 0) {
    return h("div", { class: "map-panel empty" }, ["No selections yet"]);
  }
  const extent = extentOf(layers);
  const sx = (x: number) =>
    ((x - extent.minX) / (extent.maxX - extent.minX)) * (SIZE - 20) + 10;
  const sy = (y: number) =>
    SIZE - (((y - extent.minY) / (extent.maxY - extent.minY)) * (SIZE - 20) + 10);

  const shown = layers.filter(
    (l) => activeIteration === null || l.iteration === activeIteration,
  );
  const circles: VNode[] = [];
  for (const layer of shown) {
    for (const p of layer.points) {
      circles.push(
        h("circle", {
          class: "map-point selected-marker",
          cx: sx(p.x).toFixed(2),
          cy: sy(p.y).toFixed(2),
          r: "6",
          fill: colorForConfidence(p.confidence),
          stroke: "#1d3557",
          "stroke-width": "2",
          "data-id": p.id,
          "data-iteration": String(p.iteration),
        }, [h("title", {}, [`${p.id} (conf ${p.confidence ?? "n/a"})`])]),
      );
    }
  }
  const toggles: VNode[] = [
    h(
      "button",
      { class: activeIteration === null ? "toggle active" : "toggle" },
      ["all"],
      { click: () => onToggle(null) },
    ),
  ];
  for (const layer of layers) {
    toggles.push(
      h(
        "button",
        {
          class: activeIteration === layer.iteration ? "toggle active" : "toggle",
          "data-iteration": String(layer.iteration),
        },
        [`iter ${layer.iteration}`],
        { click: () => onToggle(layer.iteration) },
      ),
    );
  }
  return h("div", { class: "map-panel" }, [
    h("div", { class: "map-toggles" }, toggles),
    h(
      "svg",
      {
        viewBox: `0 0 ${SIZE} ${SIZE}`,
        width: String(SIZE),
        height: String(SIZE),
        class: "semantic-map",
      },
      circles,
    ),
    h("div", { class: "map-legend" }, [
      "hue: model uncertainty (green = confident, red = uncertain)",
    ]),
  ]);
}
