// Small python highlighter. Builds text nodes and spans, never innerHTML,
// so model-generated code cannot smuggle markup into the page.

const KEYWORDS = new Set([
  "and", "as", "assert", "async", "await", "break", "class", "continue",
  "def", "del", "elif", "else", "except", "finally", "for", "from",
  "global", "if", "import", "in", "is", "lambda", "nonlocal", "not",
  "or", "pass", "raise", "return", "try", "while", "with", "yield",
  "True", "False", "None",
]);

const TOKEN = new RegExp(
  [
    String.raw`(?<comment>#[^\n]*)`,
    String.raw`(?<string>'''[\s\S]*?'''|"""[\s\S]*?"""|'(?:\\.|[^'\\\n])*'|"(?:\\.|[^"\\\n])*")`,
    String.raw`(?<number>\b\d+(?:\.\d+)?\b)`,
    String.raw`(?<word>\b[A-Za-z_]\w*\b)`,
  ].join("|"),
  "g",
);

export function highlightPython(source: string): DocumentFragment {
  const fragment = document.createDocumentFragment();
  let cursor = 0;
  for (const match of source.matchAll(TOKEN)) {
    const start = match.index ?? 0;
    if (start > cursor) {
      fragment.append(document.createTextNode(source.slice(cursor, start)));
    }
    const groups = match.groups ?? {};
    let cls = "";
    if (groups.comment !== undefined) cls = "tok-comment";
    else if (groups.string !== undefined) cls = "tok-string";
    else if (groups.number !== undefined) cls = "tok-number";
    else if (groups.word !== undefined && KEYWORDS.has(groups.word)) {
      cls = "tok-keyword";
    }
    if (cls) {
      const span = document.createElement("span");
      span.className = cls;
      span.textContent = match[0];
      fragment.append(span);
    } else {
      fragment.append(document.createTextNode(match[0]));
    }
    cursor = start + match[0].length;
  }
  if (cursor < source.length) {
    fragment.append(document.createTextNode(source.slice(cursor)));
  }
  return fragment;
}
