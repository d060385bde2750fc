/* Result panel: outcome banner, the generated code, per-case verdicts.
 * Everything shown comes from the server response; nothing is graded
 * or recomputed here.
 */

import { clear, el } from "./dom.js";
import { formatObserved, formatTyped } from "./format.js";
import { highlightPython } from "./highlight.js";
import type { AttemptResult } from "./types.js";

function bannerText(result: AttemptResult): string {
  return `${result.outcome} (attempt ${result.seq})`;
}

function verdictTable(result: AttemptResult): HTMLTableElement {
  const table = el("table", "verdict-table");
  const head = table.createTHead().insertRow();
  head.append(
    el("th", "", "case"),
    el("th", "", "verdict"),
    el("th", "", "expected"),
    el("th", "", "observed"),
  );
  const body = table.createTBody();
  for (const row of result.verdicts) {
    const tr = body.insertRow();
    tr.className = row.verdict === "Pass" ? "verdict-pass" : "verdict-fail";
    tr.insertCell().textContent = row.case_id;
    const verdictCell = tr.insertCell();
    verdictCell.className = "verdict-cell";
    verdictCell.textContent = row.verdict;
    if (row.hidden) {
      const cell = tr.insertCell();
      cell.colSpan = 2;
      cell.className = "hidden-case";
      cell.textContent = "hidden";
    } else {
      tr.insertCell().textContent = row.expected ? formatTyped(row.expected) : "";
      const observed = tr.insertCell();
      observed.textContent = formatObserved(row.observed);
      if (row.diagnostics) {
        observed.append(el("div", "diagnostics", row.diagnostics));
      }
    }
  }
  return table;
}

export function renderResultView(root: HTMLElement, result: AttemptResult): void {
  clear(root);
  const success = result.outcome === "Success";
  const banner = el(
    "div",
    success ? "outcome-banner success" : "outcome-banner failure",
    bannerText(result),
  );
  root.append(banner);

  if (result.extracted_code !== null) {
    const codePane = el("pre", "generated-code");
    codePane.append(highlightPython(result.extracted_code));
    root.append(codePane);
  } else {
    root.append(el("p", "no-code", "no code was generated for this attempt"));
  }

  if (result.verdicts.length > 0) {
    root.append(verdictTable(result));
  }
}
