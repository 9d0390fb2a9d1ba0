/**
 * Headless learning-path editor: the document model behind the drawing
 * area and the properties panel.  Every operation keeps the element set
 * referentially consistent (deleting a node cascades to its edges, with
 * undo); `toDocument()` always yields a well-formed fragment document.
 *
 * The editor holds no grading or validation logic — structural and
 * condition validation round-trip through the HTTP API.
 */

import {
  ConditionDoc,
  EdgeDoc,
  FragmentDoc,
  KindData,
  Modality,
  NodeDoc,
  NodeKind,
  Point,
  defaultKindData,
} from "./document.js";
import { JsonValue, Num, decimal, parseJson } from "./jsontext.js";
import { canonicalJson } from "./jsontext.js";

export type Selection =
  | { kind: "node"; id: string }
  | { kind: "edge"; id: string }
  | null;

// structuredClone would strip the Num prototype, so clone manually and
// share Num instances (they are immutable)
function clone<T>(v: T): T {
  if (v instanceof Num) return v;
  if (Array.isArray(v)) return v.map(clone) as T;
  if (v !== null && typeof v === "object") {
    return Object.fromEntries(
      Object.entries(v).map(([k, x]) => [k, clone(x)]),
    ) as T;
  }
  return v;
}

function snap(at: Point): Point {
  return { x: Math.round(at.x), y: Math.round(at.y) };
}

interface EditorState {
  nodes: Map<string, NodeDoc>; // insertion order = document order
  edges: EdgeDoc[]; // list order = evaluation priority per source
  layout: Map<string, Point>;
  entry: string | null;
}

function cloneState(s: EditorState): EditorState {
  return {
    nodes: new Map([...s.nodes].map(([k, v]) => [k, clone(v)])),
    edges: s.edges.map((e) => clone(e)),
    layout: new Map([...s.layout].map(([k, v]) => [k, { ...v }])),
    entry: s.entry,
  };
}

export class EditorModel {
  id: string;
  title: string;
  version = 1;
  cost: Num = decimal(1);
  provides: string[] = [];
  requires: string[] = [];
  selection: Selection = null;

  private state: EditorState = { nodes: new Map(), edges: [], layout: new Map(), entry: null };
  private undoStack: EditorState[] = [];

  constructor(id: string, title = "") {
    this.id = id;
    this.title = title;
  }

  // -- queries --------------------------------------------------------------

  get nodes(): NodeDoc[] {
    return [...this.state.nodes.values()];
  }

  get edges(): EdgeDoc[] {
    return [...this.state.edges];
  }

  get entry(): string | null {
    return this.state.entry;
  }

  node(id: string): NodeDoc {
    const node = this.state.nodes.get(id);
    if (!node) throw new Error(`no node ${id}`);
    return node;
  }

  edge(id: string): EdgeDoc {
    const edge = this.state.edges.find((e) => e.id === id);
    if (!edge) throw new Error(`no edge ${id}`);
    return edge;
  }

  position(id: string): Point {
    return this.state.layout.get(id) ?? { x: 0, y: 0 };
  }

  outgoing(id: string): EdgeDoc[] {
    return this.state.edges.filter((e) => e.source === id);
  }

  // -- canvas operations ------------------------------------------------------

  private checkpoint(): void {
    this.undoStack.push(cloneState(this.state));
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (!prev) return false;
    this.state = prev;
    if (this.selection) {
      const { kind, id } = this.selection;
      const exists =
        kind === "node" ? this.state.nodes.has(id) : this.state.edges.some((e) => e.id === id);
      if (!exists) this.selection = null;
    }
    return true;
  }

  addNode(id: string, kind: NodeKind, at: Point, title = id): NodeDoc {
    if (this.state.nodes.has(id)) throw new Error(`duplicate node id ${id}`);
    this.checkpoint();
    const node: NodeDoc = {
      id,
      kind,
      title,
      representations: {},
      max_attempts: null,
      kind_data: defaultKindData(kind),
    };
    this.state.nodes.set(id, node);
    this.state.layout.set(id, snap(at));
    if (this.state.entry === null) this.state.entry = id;
    this.selection = { kind: "node", id };
    return node;
  }

  moveNode(id: string, to: Point): void {
    this.node(id);
    this.state.layout.set(id, snap(to));
  }

  /** Drag source handle onto target handle; the new edge defaults to "pass". */
  connect(edgeId: string, source: string, target: string): EdgeDoc {
    this.node(source);
    this.node(target); // self-loops allowed; cycle rules are validated server-side
    if (this.state.edges.some((e) => e.id === edgeId)) {
      throw new Error(`duplicate edge id ${edgeId}`);
    }
    this.checkpoint();
    const edge: EdgeDoc = {
      id: edgeId,
      source,
      target,
      condition: { builtin: "pass" },
      label: null,
    };
    this.state.edges.push(edge);
    this.selection = { kind: "edge", id: edgeId };
    return edge;
  }

  deleteNode(id: string): void {
    this.node(id);
    this.checkpoint();
    this.state.nodes.delete(id);
    this.state.layout.delete(id);
    this.state.edges = this.state.edges.filter((e) => e.source !== id && e.target !== id);
    if (this.state.entry === id) {
      this.state.entry = this.state.nodes.keys().next().value ?? null;
    }
    if (this.selection?.kind === "node" && this.selection.id === id) this.selection = null;
  }

  deleteEdge(id: string): void {
    this.edge(id);
    this.checkpoint();
    this.state.edges = this.state.edges.filter((e) => e.id !== id);
    if (this.selection?.kind === "edge" && this.selection.id === id) this.selection = null;
  }

  /** Move an edge within its source's outgoing list (evaluation priority). */
  reorderEdge(id: string, offset: number): void {
    const edge = this.edge(id);
    this.checkpoint();
    const siblings = this.outgoing(edge.source);
    const from = siblings.indexOf(edge);
    const to = Math.max(0, Math.min(siblings.length - 1, from + offset));
    siblings.splice(from, 1);
    siblings.splice(to, 0, edge);
    const queue = [...siblings];
    this.state.edges = this.state.edges.map((e) => (e.source === edge.source ? queue.shift()! : e));
  }

  select(sel: Selection): void {
    if (sel?.kind === "node") this.node(sel.id);
    if (sel?.kind === "edge") this.edge(sel.id);
    this.selection = sel;
  }

  // -- properties panel -------------------------------------------------------

  setEntry(id: string): void {
    this.node(id);
    this.state.entry = id;
  }

  setTitle(id: string, title: string): void {
    this.node(id).title = title;
  }

  setMaxAttempts(id: string, max: number | null): void {
    this.node(id).max_attempts = max;
  }

  setRepresentation(id: string, modality: Modality, payload: string | null): void {
    const reps = this.node(id).representations;
    if (payload === null) delete reps[modality];
    else reps[modality] = payload;
  }

  setKindData(id: string, data: KindData): void {
    this.node(id).kind_data = data;
  }

  patchKindData(id: string, patch: KindData): void {
    Object.assign(this.node(id).kind_data, patch);
  }

  setCondition(edgeId: string, condition: ConditionDoc): void {
    this.edge(edgeId).condition = condition;
  }

  setEdgeLabel(edgeId: string, label: string | null): void {
    this.edge(edgeId).label = label;
  }

  // -- documents ----------------------------------------------------------------

  toDocument(opts: { layout?: boolean } = {}): FragmentDoc {
    if (this.state.entry === null) throw new Error("empty canvas has no document");
    const doc: FragmentDoc = {
      id: this.id,
      title: this.title,
      version: this.version,
      entry: this.state.entry,
      cost: this.cost,
      provides: [...this.provides].sort(),
      requires: [...this.requires].sort(),
      nodes: this.nodes.map((n) => clone(n)),
      edges: this.edges.map((e) => clone(e)),
    };
    if (opts.layout !== false) {
      const layout: Record<string, Point> = {};
      for (const [id, at] of this.state.layout) layout[id] = { ...at };
      doc.ui = { layout };
    }
    return doc;
  }

  serialize(opts: { layout?: boolean } = {}): string {
    return canonicalJson(this.toDocument(opts) as unknown as JsonValue);
  }

  static fromDocument(doc: FragmentDoc): EditorModel {
    const editor = new EditorModel(doc.id, doc.title);
    editor.version = doc.version;
    editor.cost = doc.cost;
    editor.provides = [...doc.provides];
    editor.requires = [...doc.requires];
    for (const node of doc.nodes) editor.state.nodes.set(node.id, clone(node));
    editor.state.edges = doc.edges.map((e) => clone(e));
    editor.state.entry = doc.entry;
    const layout = doc.ui?.layout ?? {};
    for (const [id, at] of Object.entries(layout)) {
      if (editor.state.nodes.has(id)) editor.state.layout.set(id, { ...at });
    }
    editor.undoStack = [];
    return editor;
  }

  static fromText(text: string): EditorModel {
    return EditorModel.fromDocument(parseJson(text) as unknown as FragmentDoc);
  }
}
