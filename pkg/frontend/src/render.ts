/**
 * HTML rendering for the two faces of the app: the editor (drawing area +
 * properties panel) and the student runner.  Pure string templates over
 * the headless models, so they are testable without a browser and can be
 * mounted with a one-line `element.innerHTML = ...`.
 */

import { ValidationIssue } from "./client.js";
import { EdgeDoc, NodeDoc } from "./document.js";
import { EditorModel } from "./editor.js";
import { DraftControl, RunnerState, controlFor } from "./runner.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

// ---------------------------------------------------------------------------
// Drawing area

function renderNode(editor: EditorModel, node: NodeDoc): string {
  const at = editor.position(node.id);
  const selected =
    editor.selection?.kind === "node" && editor.selection.id === node.id ? " selected" : "";
  const entry = editor.entry === node.id ? " entry" : "";
  return (
    `<div class="node kind-${node.kind}${selected}${entry}" data-node="${escapeHtml(node.id)}"` +
    ` style="left:${at.x}px;top:${at.y}px" draggable="true">` +
    `<span class="node-id">${escapeHtml(node.id)}</span>` +
    `<span class="node-title">${escapeHtml(node.title)}</span>` +
    `<span class="handle out" data-handle="out"></span>` +
    `<span class="handle in" data-handle="in"></span></div>`
  );
}

function renderEdge(editor: EditorModel, edge: EdgeDoc): string {
  const from = editor.position(edge.source);
  const to = editor.position(edge.target);
  const selected =
    editor.selection?.kind === "edge" && editor.selection.id === edge.id ? " selected" : "";
  const caption = "builtin" in edge.condition ? edge.condition.builtin : edge.condition.expr;
  return (
    `<g class="edge${selected}" data-edge="${escapeHtml(edge.id)}">` +
    `<line x1="${from.x}" y1="${from.y}" x2="${to.x}" y2="${to.y}" marker-end="url(#arrow)"/>` +
    `<text x="${(from.x + to.x) / 2}" y="${(from.y + to.y) / 2}">${escapeHtml(caption)}</text></g>`
  );
}

export function renderCanvas(editor: EditorModel): string {
  const edges = editor.edges.map((e) => renderEdge(editor, e)).join("");
  const nodes = editor.nodes.map((n) => renderNode(editor, n)).join("");
  return (
    `<div class="canvas" data-fragment="${escapeHtml(editor.id)}">` +
    `<svg class="edges"><defs><marker id="arrow"/></defs>${edges}</svg>` +
    `${nodes}</div>`
  );
}

// ---------------------------------------------------------------------------
// Properties panel

const BUILTINS = ["pass", "fail", "always", "retry_exceeded(n)"];

function conditionEditor(edge: EdgeDoc, issues: ValidationIssue[]): string {
  const builtin = "builtin" in edge.condition ? edge.condition.builtin : "";
  const expr = "expr" in edge.condition ? edge.condition.expr : "";
  const options = BUILTINS.map(
    (b) =>
      `<option value="${escapeHtml(b)}"${b === builtin ? " selected" : ""}>${escapeHtml(b)}</option>`,
  ).join("");
  const errors = issues
    .map((i) => `<p class="error" data-code="${escapeHtml(i.code)}">${escapeHtml(i.message)}</p>`)
    .join("");
  return (
    `<fieldset class="condition"><legend>Condition</legend>` +
    `<select name="builtin"><option value=""></option>${options}</select>` +
    `<input name="expr" value="${escapeHtml(expr)}" placeholder='e.g. label == "average_value"'/>` +
    `${errors}</fieldset>`
  );
}

/** The panel for the current selection; `issues` are server findings for it. */
export function renderProperties(editor: EditorModel, issues: ValidationIssue[] = []): string {
  const sel = editor.selection;
  if (!sel) return `<aside class="properties empty">Select a node or edge.</aside>`;
  if (sel.kind === "edge") {
    const edge = editor.edge(sel.id);
    return (
      `<aside class="properties" data-edge="${escapeHtml(edge.id)}">` +
      `<label>Source <input name="source" value="${escapeHtml(edge.source)}" readonly/></label>` +
      `<label>Target <input name="target" value="${escapeHtml(edge.target)}" readonly/></label>` +
      `<label>Label <input name="label" value="${escapeHtml(edge.label ?? "")}"/></label>` +
      conditionEditor(edge, issues) +
      `</aside>`
    );
  }
  const node = editor.node(sel.id);
  const reps = Object.entries(node.representations)
    .map(
      ([m, payload]) =>
        `<label>${escapeHtml(m)} <textarea name="rep-${escapeHtml(m)}">${escapeHtml(String(payload))}</textarea></label>`,
    )
    .join("");
  const errors = issues
    .map((i) => `<p class="error" data-code="${escapeHtml(i.code)}">${escapeHtml(i.message)}</p>`)
    .join("");
  return (
    `<aside class="properties" data-node="${escapeHtml(node.id)}">` +
    `<label>Title <input name="title" value="${escapeHtml(node.title)}"/></label>` +
    `<label>Kind <input name="kind" value="${escapeHtml(node.kind)}" readonly/></label>` +
    `<label>Max attempts <input name="max_attempts" value="${node.max_attempts ?? ""}"/></label>` +
    `${reps}${errors}</aside>`
  );
}

// ---------------------------------------------------------------------------
// Student runner

function renderControl(control: DraftControl): string {
  switch (control.control) {
    case "acknowledge":
      return `<button name="acknowledge">Continue</button>`;
    case "text_answer":
      return `<input name="answer" type="text"/><button name="send">Answer</button>`;
    case "choices":
      return (
        control.items
          .map(
            (n, i) =>
              `<fieldset name="item-${i}">` +
              Array.from(
                { length: n },
                (_, c) => `<label><input type="radio" name="item-${i}" value="${c}"/></label>`,
              ).join("") +
              `</fieldset>`,
          )
          .join("") + `<button name="send">Submit quiz</button>`
      );
    case "code_editor":
      return `<textarea name="source" class="code"></textarea><button name="send">Run checks</button>`;
  }
}

function renderAwards(state: RunnerState): string {
  const badges = state.badges
    .map((b) => `<span class="badge" data-badge="${escapeHtml(b)}">${escapeHtml(b)}</span>`)
    .join("");
  return (
    `<div class="gamification"><span class="points">${state.points} pts</span>` +
    `<span class="streak">streak ${state.streak}</span>${badges}</div>`
  );
}

export function renderRunner(state: RunnerState): string {
  const toast = state.toast
    ? `<div class="toast error">${escapeHtml(state.toast)}</div>`
    : "";
  if (state.phase === "completed") {
    return (
      `<main class="runner completed">${toast}<h1>All done!</h1>` +
      renderAwards(state) +
      `</main>`
    );
  }
  if (state.phase === "failed") {
    return (
      `<main class="runner failed">${toast}<h1>Session failed</h1>` +
      `<p class="reason">${escapeHtml(state.failureReason ?? "")}</p>` +
      renderAwards(state) +
      `</main>`
    );
  }
  if (state.phase === "idle" || !state.activity) {
    return `<main class="runner idle">${toast}<p>No session.</p></main>`;
  }
  const activity = state.activity;
  return (
    `<main class="runner active" data-node="${escapeHtml(activity.node)}">${toast}` +
    `<section class="activity kind-${escapeHtml(activity.kind)}" data-modality="${escapeHtml(activity.modality)}">` +
    `<div class="payload">${escapeHtml(String(activity.payload))}</div>` +
    `<form class="submission">${renderControl(controlFor(activity))}</form>` +
    `</section>` +
    renderAwards(state) +
    `</main>`
  );
}
