#!/usr/bin/env python3
"""Seeds the replay fixture store shipped with the package.

The recordings cover the string-reversal task with six student prompts
of varying quality, so the whole pipeline (submit, extract, sandbox,
grade) can run offline. Three prompts yield code that passes the suite,
three yield code that does not; the expectations are asserted here
before anything is written.

Run from the repo root:  python3 scripts/build_replay_fixtures.py
"""

from __future__ import annotations

import sys
from pathlib import Path

from promptgrader import sandbox
from promptgrader.bank import default_bank_dir, load_bank
from promptgrader.gateway import (
    FixtureStore,
    ProviderConfig,
    build_envelope,
    extract_code,
)

DEST = Path(__file__).resolve().parent.parent / "src" / "promptgrader" / "fixtures" / "demo"

MODEL_ID = "gpt-3.5-turbo"

# (prompt, recorded response, expected to pass the suite)
RECORDINGS = [
    (
        "reverses a string",
        "```python\ndef foo(a):\n    return a[::-1]\n```\n",
        True,
    ),
    (
        "takes one string as input and loops till length of the string - 1 "
        "and replaces str i with str of j and replaces str of j with str of "
        "i which is called a char temp, and increases i and decreases j index",
        "def foo(a):\n"
        "    chars = list(a)\n"
        "    i = 0\n"
        "    j = len(a) - 1\n"
        "    while i < j:\n"
        "        temp = chars[i]\n"
        "        chars[i] = chars[j]\n"
        "        chars[j] = temp\n"
        "        i += 1\n"
        "        j -= 1\n"
        "    return ''.join(chars)\n",
        True,
    ),
    (
        "reverses the input string array",
        "Sure! Here is the code:\n"
        "```python\n"
        "def foo(a):\n"
        "    result = ''\n"
        "    for ch in a:\n"
        "        result = ch + result\n"
        "    return result\n"
        "```\n",
        True,
    ),
    (
        "takes a string and turns it backwards",
        "def foo(a):\n"
        "    words = a.split()\n"
        "    words.reverse()\n"
        "    return ' '.join(words)\n",
        False,
    ),
    (
        "writes words in a sentence backwards",
        "```python\n"
        "def foo(a):\n"
        "    return ' '.join(word[::-1] for word in a.split())\n"
        "```\n",
        False,
    ),
    (
        "converts a character input array to an output array of its ascii values",
        "def foo(a):\n"
        "    return [ord(ch) for ch in a]\n",
        False,
    ),
]


def main() -> int:
    bank = load_bank(default_bank_dir())
    task = bank.get("lab10-q1")
    assert task is not None, "string-reversal task missing from default bank"
    config = ProviderConfig(provider_id="replay_mock")
    store = FixtureStore(DEST)
    for prompt, response, should_pass in RECORDINGS:
        envelope = build_envelope(prompt, task, config)
        code = extract_code(response)
        prepared = sandbox.prepare_program(code, task.signature)
        with prepared:
            results = sandbox.run_suite(prepared, task.suite)
        passed = all(r.verdict == sandbox.PASS for r in results)
        if passed != should_pass:
            verdicts = [r.verdict for r in results]
            print(f"FIXTURE MISMATCH {prompt[:40]!r}: {verdicts}", file=sys.stderr)
            return 1
        store.put(envelope, response, MODEL_ID)
        print(f"{'pass' if passed else 'fail'}  {prompt[:60]}")
    print(f"{len(RECORDINGS)} recordings written to {DEST}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
