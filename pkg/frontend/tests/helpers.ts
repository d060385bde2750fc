import { vi } from "vitest";
import type {
  AttemptResult,
  HistoryEntry,
  TaskDetail,
  TaskSummary,
} from "../src/types.js";

export function jsonResponse(
  status: number,
  body: unknown,
  headers: Record<string, string> = {},
): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json", ...headers },
  });
}

export type FetchHandler = (
  url: string,
  init?: RequestInit,
) => Response | Promise<Response>;

// replaces global fetch; returns the mock so tests can inspect calls
export function stubFetch(handler: FetchHandler) {
  const mock = vi.fn((input: RequestInfo | URL, init?: RequestInit) =>
    Promise.resolve(handler(String(input), init)),
  );
  vi.stubGlobal("fetch", mock);
  return mock;
}

export const SUMMARIES: TaskSummary[] = [
  { id: "t-eipe", lab: 8, kind: "EiPE", title: "MysteryLoop" },
  { id: "t-vis", lab: 9, kind: "PromptProblem", title: "Doubler" },
];

export const EIPE_DETAIL: TaskDetail = {
  id: "t-eipe",
  lab: 8,
  ordinal: 1,
  kind: "EiPE",
  title: "MysteryLoop",
  statement: "Describe, in one sentence, what this code does.",
  signature: {
    name: "foo",
    params: [{ name: "a", kind: "str" }],
    result_kind: "str",
  },
  eipe_source: "def foo(a):\n    # keep it\n    return a[::-1]\n",
  cases: [
    {
      case_id: "c1",
      hidden: false,
      inputs: [{ t: "str", v: "ab" }],
      expected: { t: "str", v: "ba" },
    },
    { case_id: "c2", hidden: true },
  ],
};

export const VISUAL_DETAIL: TaskDetail = {
  id: "t-vis",
  lab: 9,
  ordinal: 1,
  kind: "PromptProblem",
  title: "Doubler",
  statement: "Write a prompt for a program matching the examples.",
  signature: {
    name: "foo",
    params: [{ name: "a", kind: "int" }],
    result_kind: "int",
  },
  visual: {
    exemplars: [
      { inputs: [{ t: "int", v: 2 }], output: { t: "int", v: 4 } },
      { inputs: [{ t: "int", v: 5 }], output: { t: "int", v: 10 } },
    ],
    illustration: "2 -> 4\n5 -> 10",
  },
  cases: [
    {
      case_id: "c1",
      hidden: false,
      inputs: [{ t: "int", v: 3 }],
      expected: { t: "int", v: 6 },
    },
    { case_id: "c2", hidden: true },
  ],
};

export const SUCCESS_RESULT: AttemptResult = {
  attempt_id: "a-1",
  seq: 1,
  outcome: "Success",
  extracted_code: "def foo(a):\n    return a[::-1]\n",
  generated_code_shown: true,
  verdicts: [
    {
      case_id: "c1",
      verdict: "Pass",
      hidden: false,
      expected: { t: "str", v: "ba" },
      observed: "ba",
      diagnostics: null,
    },
    { case_id: "c2", verdict: "Pass", hidden: true },
  ],
  created_at: "2026-03-01T10:00:00+00:00",
};

export const FAILURE_RESULT: AttemptResult = {
  attempt_id: "a-2",
  seq: 2,
  outcome: "TestFailure",
  extracted_code: "def foo(a):\n    return a\n",
  generated_code_shown: true,
  verdicts: [
    {
      case_id: "c1",
      verdict: "WrongOutput",
      hidden: false,
      expected: { t: "str", v: "ba" },
      observed: "ab",
      diagnostics: null,
    },
    { case_id: "c2", verdict: "Pass", hidden: true },
  ],
  created_at: "2026-03-01T10:01:00+00:00",
};

export const HISTORY: HistoryEntry[] = [
  {
    attempt_id: "a-1",
    seq: 1,
    outcome: "TestFailure",
    prompt: "does something",
    created_at: "2026-03-01T10:00:00+00:00",
  },
  {
    attempt_id: "a-2",
    seq: 2,
    outcome: "Success",
    prompt: "reverses a string",
    created_at: "2026-03-01T10:01:00+00:00",
  },
];
