#!/usr/bin/env python3
"""Regenerates the default task bank shipped with the package.

Authoring happens here, in code: reference solutions are written with
meaningful names, the shipped listing for a code-reading task is the
obfuscated form of its reference, and every claim baked into a test
case is checked against the reference before anything is written out.

Run from the repo root:  python3 scripts/build_default_bank.py
"""

from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

from promptgrader.bank import (
    Exemplar,
    TaskBank,
    TaskSpec,
    TestCase,
    VisualSpec,
    load_bank,
    self_check,
    write_bank,
)
from promptgrader.obfuscate import obfuscate_source
from promptgrader.values import Compare, Signature

DEST = Path(__file__).resolve().parent.parent / "src" / "promptgrader" / "banks" / "default"

EXACT = Compare("exact")
ARRAY = Compare("array_exact")
REALS = Compare("array_numeric", tolerance=1e-6)

EIPE_STATEMENT = (
    "Read the function shown in the code pane. In one or two plain English "
    "sentences, describe what it computes. Your description is sent to a "
    "code-generating model, and the generated code must pass the same tests "
    "as the function you are looking at. Stating the overall purpose works "
    "better than narrating the code line by line. Do not paste code."
)

VISUAL_STATEMENT = (
    "Study the worked examples. Each one shows the inputs a hidden function "
    "received and the value it returned. Write a prompt that gets the model "
    "to generate a function with the same behavior on any valid input. The "
    "generated code runs against tests you cannot see in advance."
)


def hide_tail(cases, count=2):
    """Last cases of every suite stay hidden from the task view."""
    cut = max(len(cases) - count, 1)
    return tuple(
        replace(c, hidden=True) if i >= cut else c for i, c in enumerate(cases)
    )


def eipe(task_id, lab, ordinal, title, signature, reference, cases):
    return TaskSpec(
        id=task_id,
        lab=lab,
        ordinal=ordinal,
        kind="EiPE",
        title=title,
        statement=EIPE_STATEMENT,
        signature=signature,
        suite=hide_tail(cases),
        reference_solution=reference,
        eipe_source=obfuscate_source(reference),
    )


def visual(task_id, lab, ordinal, title, signature, reference, cases, exemplars,
           extra_statement="", illustration=None):
    statement = VISUAL_STATEMENT + (" " + extra_statement if extra_statement else "")
    return TaskSpec(
        id=task_id,
        lab=lab,
        ordinal=ordinal,
        kind="PromptProblem",
        title=title,
        statement=statement,
        signature=signature,
        suite=hide_tail(cases),
        reference_solution=reference,
        visual_spec=VisualSpec(exemplars=tuple(exemplars), illustration=illustration),
    )


def case(n, inputs, expected, compare=EXACT, hidden=False):
    return TestCase(
        case_id=f"c{n}",
        inputs=tuple(inputs),
        expected=expected,
        compare=compare,
        hidden=hidden,
    )


def queens_attack(a, b):
    (ra, ca), (rb, cb) = a, b
    return ra == rb or ca == cb or abs(ra - rb) == abs(ca - cb)


def assert_queens_clear(board):
    for i in range(len(board)):
        for j in range(i + 1, len(board)):
            assert not queens_attack(board[i], board[j]), (board[i], board[j])


def build() -> TaskBank:
    tasks = []

    sig_ii_i = Signature("foo", ("a", "b"), ("int", "int"), "int")
    tasks.append(eipe(
        "lab08-q1", 8, 1, "FindSumBetween", sig_ii_i,
        "def foo(low, high):\n"
        "    total = 0\n"
        "    for value in range(low, high + 1):\n"
        "        total += value\n"
        "    return total\n",
        [
            case(1, [("int", 1), ("int", 5)], ("int", 15)),
            case(2, [("int", 3), ("int", 3)], ("int", 3)),
            case(3, [("int", 5), ("int", 1)], ("int", 0)),
            case(4, [("int", -2), ("int", 2)], ("int", 0)),
            case(5, [("int", -5), ("int", -1)], ("int", -15)),
            case(6, [("int", 0), ("int", 10)], ("int", 55)),
        ],
    ))

    sig_arr_i = Signature("foo", ("a",), ("int_array",), "int")
    tasks.append(eipe(
        "lab08-q2", 8, 2, "CountEvensInArray", sig_arr_i,
        "def foo(values):\n"
        "    count = 0\n"
        "    for value in values:\n"
        "        if value % 2 == 0:\n"
        "            count += 1\n"
        "    return count\n",
        [
            case(1, [("int_array", [2, 3, 4])], ("int", 2)),
            case(2, [("int_array", [])], ("int", 0)),
            case(3, [("int_array", [1, 3, 5])], ("int", 0)),
            case(4, [("int_array", [0])], ("int", 1)),
            case(5, [("int_array", [-2, -3, 8])], ("int", 2)),
            case(6, [("int_array", [7, 7, 7, 7])], ("int", 0)),
        ],
    ))

    last_zero_ref = (
        "def foo(values):\n"
        "    position = -1\n"
        "    for index in range(len(values)):\n"
        "        if values[index] == 0:\n"
        "            position = index\n"
        "    return position\n"
    )
    tasks.append(eipe(
        "lab08-q3", 8, 3, "LastZero", sig_arr_i, last_zero_ref,
        [
            case(1, [("int_array", [0, 1, 0, 3])], ("int", 2)),
            case(2, [("int_array", [0])], ("int", 0)),
            case(3, [("int_array", [1, 2, 3])], ("int", -1)),
            case(4, [("int_array", [])], ("int", -1)),
            case(5, [("int_array", [0, 0, 0])], ("int", 2)),
            case(6, [("int_array", [5, 0])], ("int", 1)),
        ],
    ))

    tasks.append(eipe(
        "lab08-q4", 8, 4, "SumPositiveValues", sig_arr_i,
        "def foo(values):\n"
        "    total = 0\n"
        "    for value in values:\n"
        "        if value > 0:\n"
        "            total += value\n"
        "    return total\n",
        [
            case(1, [("int_array", [1, -2, 3])], ("int", 4)),
            case(2, [("int_array", [])], ("int", 0)),
            case(3, [("int_array", [-1, -2])], ("int", 0)),
            case(4, [("int_array", [0, 5])], ("int", 5)),
            case(5, [("int_array", [10])], ("int", 10)),
            case(6, [("int_array", [-3, 7, -1, 2])], ("int", 9)),
        ],
    ))

    sig_rarr_rarr = Signature("foo", ("a",), ("real_array",), "real_array")
    tasks.append(visual(
        "lab09-q1", 9, 1, "Average", sig_rarr_rarr,
        "def foo(values):\n"
        "    mean = sum(values) / len(values)\n"
        "    return [mean for _ in values]\n",
        [
            case(1, [("real_array", [1.0, 2.0, 3.0])],
                 ("real_array", [2.0, 2.0, 2.0]), REALS),
            case(2, [("real_array", [5.0])], ("real_array", [5.0]), REALS),
            case(3, [("real_array", [1.5, 2.5])], ("real_array", [2.0, 2.0]), REALS),
            case(4, [("real_array", [0.0, 0.0, 0.0, 0.0])],
                 ("real_array", [0.0, 0.0, 0.0, 0.0]), REALS),
            case(5, [("real_array", [-1.0, 1.0])], ("real_array", [0.0, 0.0]), REALS),
            case(6, [("real_array", [2.0, 4.0, 9.0])],
                 ("real_array", [5.0, 5.0, 5.0]), REALS),
        ],
        [
            Exemplar((("real_array", [1.0, 2.0, 3.0]),), ("real_array", [2.0, 2.0, 2.0])),
            Exemplar((("real_array", [5.0]),), ("real_array", [5.0])),
            Exemplar((("real_array", [2.0, 4.0]),), ("real_array", [3.0, 3.0])),
        ],
        extra_statement="The tests compare each returned number with a tolerance of 1e-6.",
    ))

    tasks.append(visual(
        "lab09-q2", 9, 2, "Sum", sig_arr_i,
        "def foo(values):\n"
        "    total = 0\n"
        "    for value in values:\n"
        "        if value % 2 == 0:\n"
        "            total += value\n"
        "    return total\n",
        [
            case(1, [("int_array", [1, 2, 3, 4])], ("int", 6)),
            case(2, [("int_array", [])], ("int", 0)),
            case(3, [("int_array", [1, 3])], ("int", 0)),
            case(4, [("int_array", [2, 4, 6])], ("int", 12)),
            case(5, [("int_array", [-2, 5])], ("int", -2)),
            case(6, [("int_array", [0, 1])], ("int", 0)),
        ],
        [
            Exemplar((("int_array", [1, 2, 3, 4]),), ("int", 6)),
            Exemplar((("int_array", [5]),), ("int", 0)),
            Exemplar((("int_array", [2, 2]),), ("int", 4)),
        ],
    ))

    tasks.append(visual(
        "lab09-q3", 9, 3, "Find", sig_arr_i, last_zero_ref,
        [
            case(1, [("int_array", [4, 0, 9])], ("int", 1)),
            case(2, [("int_array", [0, 0])], ("int", 1)),
            case(3, [("int_array", [3])], ("int", -1)),
            case(4, [("int_array", [])], ("int", -1)),
            case(5, [("int_array", [0, 7, 0, 7])], ("int", 2)),
            case(6, [("int_array", [1, 0])], ("int", 1)),
        ],
        [
            Exemplar((("int_array", [4, 0, 9]),), ("int", 1)),
            Exemplar((("int_array", [3]),), ("int", -1)),
            Exemplar((("int_array", [0, 0]),), ("int", 1)),
        ],
    ))

    sig_s_s = Signature("foo", ("a",), ("str",), "str")
    tasks.append(eipe(
        "lab10-q1", 10, 1, "ReverseString", sig_s_s,
        "def foo(text):\n"
        "    flipped = ''\n"
        "    for ch in text:\n"
        "        flipped = ch + flipped\n"
        "    return flipped\n",
        [
            case(1, [("str", "abc")], ("str", "cba")),
            case(2, [("str", "")], ("str", "")),
            case(3, [("str", "a")], ("str", "a")),
            case(4, [("str", "ab")], ("str", "ba")),
            case(5, [("str", "racecar")], ("str", "racecar")),
            case(6, [("str", "hello world")], ("str", "dlrow olleh")),
        ],
    ))

    sig_mat_i = Signature("foo", ("a", "b"), ("int_matrix", "int"), "int")
    tasks.append(eipe(
        "lab10-q2", 10, 2, "FindSumOfGivenRow", sig_mat_i,
        "def foo(grid, row):\n"
        "    total = 0\n"
        "    for value in grid[row]:\n"
        "        total += value\n"
        "    return total\n",
        [
            case(1, [("int_matrix", [[1, 2], [3, 4]]), ("int", 0)], ("int", 3)),
            case(2, [("int_matrix", [[1, 2], [3, 4]]), ("int", 1)], ("int", 7)),
            case(3, [("int_matrix", [[5]]), ("int", 0)], ("int", 5)),
            case(4, [("int_matrix", [[0, 0, 0], [1, 1, 1]]), ("int", 1)], ("int", 3)),
            case(5, [("int_matrix", [[2, 4, 6], [1, 3, 5], [7, 8, 9]]), ("int", 2)],
                 ("int", 24)),
            case(6, [("int_matrix", [[-1, 1], [10, -10]]), ("int", 1)], ("int", 0)),
        ],
    ))

    sig_s_b = Signature("foo", ("a",), ("str",), "bool")
    tasks.append(eipe(
        "lab10-q3", 10, 3, "DoesStringContainVowel", sig_s_b,
        "def foo(text):\n"
        "    for ch in text.lower():\n"
        "        if ch in 'aeiou':\n"
        "            return True\n"
        "    return False\n",
        [
            case(1, [("str", "sky")], ("bool", False)),
            case(2, [("str", "cat")], ("bool", True)),
            case(3, [("str", "")], ("bool", False)),
            case(4, [("str", "AEIOU")], ("bool", True)),
            case(5, [("str", "bcdfg")], ("bool", False)),
            case(6, [("str", "xyzE")], ("bool", True)),
        ],
    ))

    sig_ss_b = Signature("foo", ("a", "b"), ("str", "str"), "bool")
    tasks.append(eipe(
        "lab10-q4", 10, 4, "DoesStringContainSubstring", sig_ss_b,
        "def foo(text, part):\n"
        "    for start in range(len(text) - len(part) + 1):\n"
        "        if text[start:start + len(part)] == part:\n"
        "            return True\n"
        "    return False\n",
        [
            case(1, [("str", "hello"), ("str", "ell")], ("bool", True)),
            case(2, [("str", "hello"), ("str", "xyz")], ("bool", False)),
            case(3, [("str", "abc"), ("str", "")], ("bool", True)),
            case(4, [("str", ""), ("str", "a")], ("bool", False)),
            case(5, [("str", "Case"), ("str", "case")], ("bool", False)),
            case(6, [("str", "banana"), ("str", "ana")], ("bool", True)),
        ],
    ))

    sig_pos_b = Signature("foo", ("a",), ("positions",), "bool")
    queens_extra = (
        "Conventions: the board is 8 by 8, and each piece is a (row, column) "
        "pair, both 1-based. Pieces threaten each other when they share a "
        "row, a column, or a diagonal. Return true or false."
    )
    tasks.append(visual(
        "lab12-q1", 12, 1, "TwoQueens", sig_pos_b,
        "def foo(queens):\n"
        "    (row_a, col_a), (row_b, col_b) = queens\n"
        "    if row_a == row_b or col_a == col_b:\n"
        "        return True\n"
        "    return abs(row_a - row_b) == abs(col_a - col_b)\n",
        [
            case(1, [("positions", [(1, 1), (2, 3)])], ("bool", False)),
            case(2, [("positions", [(3, 4), (3, 7)])], ("bool", True)),
            case(3, [("positions", [(2, 5), (7, 5)])], ("bool", True)),
            case(4, [("positions", [(1, 1), (8, 8)])], ("bool", True)),
            case(5, [("positions", [(8, 1), (1, 8)])], ("bool", True)),
            case(6, [("positions", [(5, 5), (4, 3)])], ("bool", False)),
            case(7, [("positions", [(2, 6), (5, 1)])], ("bool", False)),
        ],
        [
            Exemplar((("positions", [(3, 4), (3, 7)]),), ("bool", True)),
            Exemplar((("positions", [(1, 1), (2, 3)]),), ("bool", False)),
            Exemplar((("positions", [(1, 1), (8, 8)]),), ("bool", True)),
        ],
        extra_statement=queens_extra,
    ))

    solution_a = [(1, 1), (2, 5), (3, 8), (4, 6), (5, 3), (6, 7), (7, 2), (8, 4)]
    solution_b = [(1, 4), (2, 2), (3, 7), (4, 3), (5, 6), (6, 8), (7, 5), (8, 1)]
    assert_queens_clear(solution_a)
    assert_queens_clear(solution_b)
    same_row = [(1, c) for c in range(1, 9)]
    diagonal = [(i, i) for i in range(1, 9)]
    near_miss = list(solution_a)
    near_miss[7] = (8, 5)  # column clash with (2, 5)
    columns_only = [(1, 1), (2, 2), (3, 3), (4, 4), (5, 5), (6, 6), (7, 8), (8, 7)]
    tasks.append(visual(
        "lab12-q2", 12, 2, "FullQueens", sig_pos_b,
        "def foo(queens):\n"
        "    for first in range(len(queens)):\n"
        "        for second in range(first + 1, len(queens)):\n"
        "            row_a, col_a = queens[first]\n"
        "            row_b, col_b = queens[second]\n"
        "            if row_a == row_b or col_a == col_b:\n"
        "                return False\n"
        "            if abs(row_a - row_b) == abs(col_a - col_b):\n"
        "                return False\n"
        "    return True\n",
        [
            case(1, [("positions", solution_a)], ("bool", True)),
            case(2, [("positions", same_row)], ("bool", False)),
            case(3, [("positions", diagonal)], ("bool", False)),
            case(4, [("positions", near_miss)], ("bool", False)),
            case(5, [("positions", solution_b)], ("bool", True)),
            case(6, [("positions", columns_only)], ("bool", False)),
        ],
        [
            Exemplar((("positions", solution_a),), ("bool", True)),
            Exemplar((("positions", same_row),), ("bool", False)),
            Exemplar((("positions", diagonal),), ("bool", False)),
        ],
        extra_statement=(
            "Conventions: 8 by 8 board, eight pieces given as 1-based "
            "(row, column) pairs. Return true when no piece threatens "
            "another; threats work along rows, columns, and diagonals."
        ),
    ))

    sig_leaf = Signature("foo", ("a", "b"), ("int_array", "int_array"), "int")
    leaf_ref = (
        "def foo(leaves, steps):\n"
        "    position = 0\n"
        "    eaten = leaves[0]\n"
        "    for step in steps:\n"
        "        position += step\n"
        "        if position >= len(leaves):\n"
        "            break\n"
        "        eaten += leaves[position]\n"
        "    return eaten\n"
    )

    def leaf_oracle(leaves, steps):
        position = 0
        eaten = leaves[0]
        for step in steps:
            position += step
            if position >= len(leaves):
                break
            eaten += leaves[position]
        return eaten

    leaf_cases = [
        ([3, 1, 4, 1, 5], [2, 2], 12),
        ([2], [], 2),
        ([1, 2, 3], [5], 1),
        ([5, 1, 1, 1], [1, 1, 1], 8),
        ([2, 7, 1, 8], [3], 10),
        ([0, 0], [1], 0),
    ]
    for leaves, steps, want in leaf_cases:
        assert leaf_oracle(leaves, steps) == want, (leaves, steps, want)
    tasks.append(visual(
        "lab12-q3", 12, 3, "LeafEater", sig_leaf, leaf_ref,
        [
            case(n + 1, [("int_array", leaves), ("int_array", steps)], ("int", want))
            for n, (leaves, steps, want) in enumerate(leaf_cases)
        ],
        [
            Exemplar(
                (("int_array", [3, 1, 4, 1, 5]), ("int_array", [2, 2])), ("int", 12)
            ),
            Exemplar((("int_array", [2]), ("int_array", [])), ("int", 2)),
            Exemplar((("int_array", [1, 2, 3]), ("int_array", [5])), ("int", 1)),
        ],
        extra_statement=(
            "Conventions: the first array holds the number of leaves at each "
            "position along a branch, the second holds step sizes. The bug "
            "starts at the leftmost position and eats the leaves there. Each "
            "step moves it right by the given amount; landing past the end "
            "stops it, otherwise it eats the leaves where it lands. Return "
            "the total eaten."
        ),
        illustration="lab12-q3.illustration.txt",
    ))

    return TaskBank(tasks=tuple(tasks))


ILLUSTRATION = """\
leaves:   3   1   4   1   5
position  0   1   2   3   4

          @
start at position 0, eat 3

steps [2, 2]:
          . . @          eat 4 at position 2
          . . . . @      eat 5 at position 4
total eaten: 12
"""


def main() -> int:
    bank = build()
    for task in bank:
        task.validate()
    write_bank(bank, DEST)
    (DEST / "lab12-q3.illustration.txt").write_text(ILLUSTRATION, encoding="utf-8")
    reloaded = load_bank(DEST)
    if reloaded != bank:
        print("round-trip mismatch", file=sys.stderr)
        return 1
    checks = self_check(reloaded)
    bad = [c for c in checks if not c.passed]
    for c in checks:
        print(f"{c.task_id}: {'ok' if c.passed else 'FAIL'}")
        if not c.passed:
            for r in c.reference + (c.eipe or ()):
                if r.verdict != "Pass":
                    print(f"  {r.case_id}: {r.verdict} {r.diagnostics[:200]}")
    if bad:
        return 1
    print(f"{len(checks)} tasks written to {DEST}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
