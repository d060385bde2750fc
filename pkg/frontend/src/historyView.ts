import { clear, el } from "./dom.js";
import { formatTimestamp } from "./format.js";
import type { HistoryEntry } from "./types.js";

// Newest attempt first; each entry expands to the verbatim prompt and
// offers to reload it into the editor for another round.
export function renderHistory(
  root: HTMLElement,
  entries: HistoryEntry[],
  onReload: (prompt: string) => void,
): void {
  clear(root);
  root.append(el("h3", "", "attempts"));
  if (entries.length === 0) {
    root.append(el("p", "history-empty", "no attempts yet"));
    return;
  }
  const list = el("ol", "history-list");
  const newestFirst = [...entries].sort((a, b) => b.seq - a.seq);
  for (const entry of newestFirst) {
    const item = el("li", "history-entry");
    const details = el("details");
    const summary = el("summary");
    summary.append(
      el("span", "history-seq", `#${entry.seq}`),
      el("span", `history-outcome outcome-${entry.outcome}`, entry.outcome),
      el("span", "history-time", formatTimestamp(entry.created_at)),
    );
    details.append(summary);
    details.append(el("pre", "history-prompt", entry.prompt));
    const reload = el("button", "history-reload", "edit this prompt");
    reload.type = "button";
    reload.addEventListener("click", () => onReload(entry.prompt));
    details.append(reload);
    item.append(details);
    list.append(item);
  }
  root.append(list);
}
