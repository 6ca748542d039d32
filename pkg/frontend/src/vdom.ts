// Minimal virtual nodes: rendering stays a pure function of state and the
// real DOM is touched in exactly one place (mount).

export interface VNode {
  tag: string;
  attrs: Record<string, string>;
  on: Record<string, (ev: Event) => void>;
  children: (VNode | string)[];
}

export function h(
  tag: string,
  attrs: Record<string, string> = {},
  children: (VNode | string)[] = [],
  on: Record<string, (ev: Event) => void> = {},
): VNode {
  return { tag, attrs, on, children };
}

export function text(node: VNode | string): string {
  if (typeof node === "string") return node;
  return node.children.map(text).join("");
}

/** Depth-first search for nodes matching a predicate (test helper). */
export function findAll(node: VNode | string, pred: (n: VNode) => boolean): VNode[] {
  if (typeof node === "string") return [];
  const hits = pred(node) ? [node] : [];
  return hits.concat(...node.children.map((c) => findAll(c, pred)));
}

const SVG_NS = "http://www.w3.org/2000/svg";
const SVG_TAGS = new Set(["svg", "circle", "rect", "line", "g", "path", "title"]);

export function toDom(node: VNode | string, doc: Document): Node {
  if (typeof node === "string") return doc.createTextNode(node);
  const el = SVG_TAGS.has(node.tag)
    ? doc.createElementNS(SVG_NS, node.tag)
    : doc.createElement(node.tag);
  for (const [key, value] of Object.entries(node.attrs)) {
    el.setAttribute(key, value);
  }
  for (const [event, handler] of Object.entries(node.on)) {
    el.addEventListener(event, handler);
  }
  for (const child of node.children) {
    el.appendChild(toDom(child, doc));
  }
  return el;
}

export function mount(root: Element, node: VNode): void {
  root.replaceChildren(toDom(node, root.ownerDocument));
}
