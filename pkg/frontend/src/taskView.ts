/* Task panel: statement plus either the code listing to explain or the
 * exemplar table of a visually specified problem.
 *
 * The listing pane is render-only. Selection and clipboard events are
 * cancelled on that pane alone; this dissuades paste-the-code answers
 * but is not a security boundary, and generated-code panes elsewhere
 * stay copyable.
 */

import { clear, el } from "./dom.js";
import { formatTyped } from "./format.js";
import { highlightPython } from "./highlight.js";
import { KIND_EIPE, KIND_PROMPT_PROBLEM, type TaskDetail } from "./types.js";

const SUPPRESSED_EVENTS = ["copy", "cut", "selectstart", "dragstart"];

export function suppressCopy(pane: HTMLElement): void {
  pane.style.userSelect = "none";
  pane.style.webkitUserSelect = "none";
  for (const type of SUPPRESSED_EVENTS) {
    pane.addEventListener(type, (event) => event.preventDefault());
  }
}

function signatureLine(detail: TaskDetail): string {
  const params = detail.signature.params
    .map((p) => `${p.name}: ${p.kind}`)
    .join(", ");
  return `${detail.signature.name}(${params}) -> ${detail.signature.result_kind}`;
}

function exemplarTable(detail: TaskDetail): HTMLTableElement {
  const table = el("table", "exemplar-table");
  const head = table.createTHead().insertRow();
  head.append(el("th", "", "input"), el("th", "", "output"));
  const body = table.createTBody();
  for (const exemplar of detail.visual?.exemplars ?? []) {
    const row = body.insertRow();
    row.insertCell().textContent = exemplar.inputs.map(formatTyped).join(", ");
    row.insertCell().textContent = formatTyped(exemplar.output);
  }
  return table;
}

function visibleCaseTable(detail: TaskDetail): HTMLTableElement {
  const table = el("table", "case-table");
  const head = table.createTHead().insertRow();
  head.append(el("th", "", "case"), el("th", "", "input"), el("th", "", "expected"));
  const body = table.createTBody();
  for (const c of detail.cases) {
    const row = body.insertRow();
    row.insertCell().textContent = c.case_id;
    if (c.hidden) {
      const cell = row.insertCell();
      cell.colSpan = 2;
      cell.className = "hidden-case";
      cell.textContent = "hidden";
    } else {
      row.insertCell().textContent = (c.inputs ?? []).map(formatTyped).join(", ");
      row.insertCell().textContent = c.expected ? formatTyped(c.expected) : "";
    }
  }
  return table;
}

export function renderTaskView(root: HTMLElement, detail: TaskDetail): void {
  clear(root);
  const header = el("div", "task-header");
  header.append(
    el("h2", "task-title", detail.title),
    el("span", "task-kind", detail.kind),
    el("span", "task-lab", `lab ${detail.lab}`),
  );
  root.append(header);
  root.append(el("p", "task-statement", detail.statement));
  root.append(el("p", "task-signature", signatureLine(detail)));

  if (detail.kind === KIND_EIPE && detail.eipe_source !== undefined) {
    const pane = el("pre", "listing-pane");
    pane.append(highlightPython(detail.eipe_source));
    suppressCopy(pane);
    root.append(pane);
  }
  if (detail.kind === KIND_PROMPT_PROBLEM && detail.visual) {
    const pane = el("div", "exemplar-pane");
    pane.append(exemplarTable(detail));
    if (detail.visual.illustration) {
      pane.append(el("pre", "illustration", detail.visual.illustration));
    }
    root.append(pane);
  }

  const cases = el("details", "suite-cases");
  cases.append(el("summary", "", "test cases"));
  cases.append(visibleCaseTable(detail));
  root.append(cases);
}

export function renderTaskError(
  root: HTMLElement,
  message: string,
  options: { notFound?: boolean } = {},
): void {
  clear(root);
  const cls = options.notFound ? "error-panel not-found" : "error-panel";
  root.append(el("div", cls, message));
}
