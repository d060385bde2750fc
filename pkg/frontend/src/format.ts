import type { TypedValue } from "./types.js";

export function formatTyped(value: TypedValue): string {
  if (value.t === "str") return JSON.stringify(value.v);
  return plain(value.v);
}

// observed values arrive decoded; junk output arrives as { raw: text }
export function formatObserved(observed: unknown): string {
  if (observed === null || observed === undefined) return "";
  if (typeof observed === "object" && "raw" in (observed as object)) {
    return `raw output: ${(observed as { raw: string }).raw}`;
  }
  if (typeof observed === "string") return JSON.stringify(observed);
  return plain(observed);
}

function plain(v: unknown): string {
  if (Array.isArray(v)) return `[${v.map(plain).join(", ")}]`;
  return String(v);
}

export function formatTimestamp(iso: string): string {
  const at = new Date(iso);
  if (Number.isNaN(at.getTime())) return iso;
  return at.toLocaleString();
}
