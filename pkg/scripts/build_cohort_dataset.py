#!/usr/bin/env python3
"""Generate the synthetic cohort dataset under tests/data/cohort/.

Deterministic (fixed seed). The attempt log, survey, and score files are
constructed so the rendered analytics report matches the frozen target
table cell for cell: group sizes, per-kind tries/first/final, exam means,
and combined project means. The script verifies that property itself and
refuses to write a dataset that misses any cell.

Roster: 861 students; 726 satisfy the cohort filter, 135 are excluded
(60 missing a required-lab attempt, 40 missing an assessment score, 35
missing the survey).
"""

from __future__ import annotations

import csv
import json
import random
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from promptgrader import sandbox
from promptgrader.analytics import (
    ASSESS_C_EXAM,
    ASSESS_C_PROJECT,
    ASSESS_FINAL_EXAM,
    ASSESS_MATLAB_EXAM,
    ASSESS_MATLAB_PROJECT,
    GROUP_ORDER,
    build_summary,
    emit_report,
    load_attempts,
    load_scores,
    load_survey,
)
from promptgrader.bank import KIND_EIPE, KIND_PROMPT_PROBLEM, default_bank_dir, load_bank
from promptgrader.grading import (
    OUTCOME_COMPILE_ERROR,
    OUTCOME_EXTRACTION_FAILURE,
    OUTCOME_PROVIDER_FAILURE,
    OUTCOME_SUCCESS,
    OUTCOME_TEST_FAILURE,
    Attempt,
)

SEED = 20240916
OUT_DIR = Path(__file__).resolve().parents[1] / "tests" / "data" / "cohort"

# included-group sizes; D/SD is 13 strong-disagree + 55 disagree
GROUP_SIZES = {"D/SD": 68, "N": 208, "A": 311, "SA": 139}
SD_COUNT = 13

# per group: (first-attempt successes, ever-successful pairs, total
# attempts-to-first-success sum) over the group's (student, task) pairs
EIPE_TARGETS = {
    "D/SD": (367, 542, 912),
    "N": (1048, 1659, 3028),
    "A": (1493, 2473, 4678),
    "SA": (666, 1098, 2102),
}
PP_TARGETS = {
    "D/SD": (114, 204, 665),
    "N": (335, 624, 2253),
    "A": (490, 933, 3434),
    "SA": (191, 416, 1801),
}

# per group: matlab exam, c exam, final exam, combined projects
SCORE_TARGETS = {
    "D/SD": (72.1, 82.4, 87.0, 93.8),
    "N": (57.2, 77.0, 83.9, 92.4),
    "A": (48.0, 69.8, 78.3, 87.3),
    "SA": (42.8, 66.0, 73.1, 82.8),
}

EXPECTED_ROWS = [
    ["D/SD", "68", "1.68", "67.5", "99.6", "3.26", "55.9", "100.0",
     "72.1", "82.4", "87.0", "93.8"],
    ["N", "208", "1.82", "63.0", "99.7", "3.61", "53.7", "100.0",
     "57.2", "77.0", "83.9", "92.4"],
    ["A", "311", "1.88", "60.0", "99.4", "3.68", "52.5", "100.0",
     "48.0", "69.8", "78.3", "87.3"],
    ["SA", "139", "1.89", "59.9", "98.7", "4.32", "45.8", "99.8",
     "42.8", "66.0", "73.1", "82.8"],
]

LIKERT_OF_GROUP = {"D/SD": "Disagree", "N": "Neutral", "A": "Agree",
                   "SA": "Strongly agree"}
ENJOY_TAGS = ["creativity", "problem-solving", "new-skills", "autonomy", ""]
FRUSTRATION_TAGS = ["debugging", "syntax", "time-pressure", "ambiguity", ""]

BASE_TIME = datetime(2024, 9, 16, 9, 0, tzinfo=timezone.utc)

PASS_VERDICT = sandbox.ExecutionResult(
    sandbox.PASS, observed=None, diagnostics="",
    resources=sandbox.ResourceUsage(wall_ms=24, cpu_ms=11),
).to_json()
FAIL_VERDICT = sandbox.ExecutionResult(
    sandbox.WRONG_OUTPUT, observed=None, diagnostics="value mismatch",
    resources=sandbox.ResourceUsage(wall_ms=31, cpu_ms=14),
).to_json()


def student_ids() -> dict:
    """Block-assign ids: included 1..726 by group, then the excluded."""
    ids = [f"s{n:04d}" for n in range(1, 862)]
    cursor = 0
    blocks = {}
    for group in GROUP_ORDER:
        size = GROUP_SIZES[group]
        blocks[group] = ids[cursor:cursor + size]
        cursor += size
    blocks["missing_lab"] = ids[cursor:cursor + 60]; cursor += 60
    blocks["missing_assessment"] = ids[cursor:cursor + 40]; cursor += 40
    blocks["missing_survey"] = ids[cursor:cursor + 35]; cursor += 35
    assert cursor == 861
    return blocks


def plan_pair_tries(rng, pairs, first, final, total_sum):
    """attempts-to-first-success per pair; -t means never succeeded.

    first pairs get 1; the rest get >= 2, distributed to hit total_sum.
    """
    rest = pairs - first
    later = final - first
    budget = total_sum - first - 2 * rest
    assert budget >= 0, "targets infeasible"
    extras = [0] * rest
    for _ in range(budget):
        extras[rng.randrange(rest)] += 1
    plan = [1] * first
    for i, extra in enumerate(extras):
        tries = 2 + extra
        plan.append(tries if i < later else -tries)
    rng.shuffle(plan)
    assert sum(abs(t) for t in plan) == total_sum
    assert sum(1 for t in plan if t == 1) == first
    assert sum(1 for t in plan if t > 0) == final
    return plan


def fail_outcome(rng) -> str:
    r = rng.random()
    if r < 0.8:
        return OUTCOME_TEST_FAILURE
    return OUTCOME_COMPILE_ERROR if r < 0.9 else OUTCOME_EXTRACTION_FAILURE


def attempt_row(sid, tid, seq, outcome, when) -> dict:
    verdicts = []
    if outcome == OUTCOME_SUCCESS:
        verdicts = [PASS_VERDICT]
    elif outcome == OUTCOME_TEST_FAILURE:
        verdicts = [FAIL_VERDICT]
    att = Attempt(
        attempt_id=f"{sid}-{tid}-{seq:02d}",
        student_id=sid,
        task_id=tid,
        seq=seq,
        prompt=f"attempt {seq} description for {tid}",
        transcript_id=None,
        verdicts=tuple(sandbox.ExecutionResult.from_json(v) for v in verdicts),
        outcome=outcome,
        created_at=when.isoformat(timespec="seconds"),
    )
    att.validate()
    return att.to_json()


def pair_attempts(rng, sid, tid, tries, when) -> list:
    """Outcome sequence for one pair; occasionally a provider outage row."""
    outcomes = []
    if tries == 1:
        outcomes = [OUTCOME_SUCCESS]
    elif tries > 1:
        outcomes = [fail_outcome(rng) for _ in range(tries - 1)] + [OUTCOME_SUCCESS]
    else:
        outcomes = [fail_outcome(rng) for _ in range(-tries)]
    if rng.random() < 0.03:
        outcomes.insert(rng.randrange(len(outcomes) + 1), OUTCOME_PROVIDER_FAILURE)
    rows = []
    for i, outcome in enumerate(outcomes, start=1):
        rows.append(attempt_row(sid, tid, i, outcome, when + timedelta(minutes=3 * i)))
    return rows


def jitter_cycle(values):
    """Zero-sum pairwise jitters: +j, -j, +j', -j', ... (odd tail gets 0)."""
    while True:
        for j in values:
            yield j
            yield -j


def main() -> None:
    rng = random.Random(SEED)
    bank = load_bank(default_bank_dir())
    eipe_tasks = sorted(
        (t.id for t in bank if t.kind == KIND_EIPE and t.lab in (8, 10)))
    pp_tasks = sorted(
        (t.id for t in bank if t.kind == KIND_PROMPT_PROBLEM and t.lab == 9))
    optional_tasks = sorted((t.id for t in bank if t.lab == 12))
    assert len(eipe_tasks) == 8 and len(pp_tasks) == 3 and len(optional_tasks) == 3
    required_tasks = eipe_tasks + pp_tasks

    blocks = student_ids()
    attempt_lines: list[dict] = []
    survey_rows: list[list] = []
    score_rows: list[list] = []

    # --- included students ---
    for group in GROUP_ORDER:
        members = blocks[group]
        for kind_tasks, (first, final, total) in (
            (eipe_tasks, EIPE_TARGETS[group]),
            (pp_tasks, PP_TARGETS[group]),
        ):
            pairs = [(sid, tid) for sid in members for tid in kind_tasks]
            plan = plan_pair_tries(rng, len(pairs), first, final, total)
            for (sid, tid), tries in zip(pairs, plan):
                when = BASE_TIME + timedelta(
                    hours=rng.randrange(14 * 24), seconds=rng.randrange(3600))
                attempt_lines.extend(pair_attempts(rng, sid, tid, tries, when))

        # a sliver of optional-lab attempts; analytics must ignore them
        for sid in members:
            if rng.random() < 0.08:
                tid = rng.choice(optional_tasks)
                outcome = (OUTCOME_SUCCESS if rng.random() < 0.5
                           else OUTCOME_TEST_FAILURE)
                when = BASE_TIME + timedelta(days=40, hours=rng.randrange(48))
                attempt_lines.append(attempt_row(sid, tid, 1, outcome, when))

        # survey: SD_COUNT leading D/SD members answer Strongly disagree
        for i, sid in enumerate(members):
            label = LIKERT_OF_GROUP[group]
            if group == "D/SD" and i < SD_COUNT:
                label = "Strongly disagree"
            stamp = (BASE_TIME + timedelta(days=30, minutes=i)).isoformat(
                timespec="seconds")
            survey_rows.append([
                sid, label, rng.choice(ENJOY_TAGS), rng.choice(FRUSTRATION_TAGS),
                stamp,
            ])

        # scores: zero-sum jitter around each group target
        matlab_t, c_t, final_t, proj_t = SCORE_TARGETS[group]
        exam_j = jitter_cycle([0.5, 1.5, 2.5, 3.5, 4.5])
        proj_j = jitter_cycle([0.5, 1.5, 2.5])
        for i, sid in enumerate(members):
            ej = next(exam_j) if i < len(members) - len(members) % 2 else 0.0
            pj = next(proj_j) if i < len(members) - len(members) % 2 else 0.0
            combined = proj_t + pj
            score_rows.extend([
                [sid, ASSESS_MATLAB_EXAM, f"{matlab_t + ej:.1f}"],
                [sid, ASSESS_C_EXAM, f"{c_t + ej:.1f}"],
                [sid, ASSESS_FINAL_EXAM, f"{final_t + ej:.1f}"],
                [sid, ASSESS_MATLAB_PROJECT, f"{combined - 1.2:.1f}"],
                [sid, ASSESS_C_PROJECT, f"{combined + 1.2:.1f}"],
            ])

    # a few students revised their survey answer; the later row must win
    for sid, early_label in [("s0001", "Agree"), ("s0100", "Strongly agree"),
                             ("s0300", "Neutral"), ("s0600", "Disagree")]:
        stamp = (BASE_TIME - timedelta(days=2)).isoformat(timespec="seconds")
        survey_rows.append([sid, early_label, "", "", stamp])

    # --- excluded students ---
    all_likert = ["Strongly disagree", "Disagree", "Neutral", "Agree",
                  "Strongly agree"]

    def full_scores(sid, skip=None):
        for a, base in ((ASSESS_MATLAB_EXAM, 55), (ASSESS_C_EXAM, 70),
                        (ASSESS_FINAL_EXAM, 75), (ASSESS_MATLAB_PROJECT, 85),
                        (ASSESS_C_PROJECT, 88)):
            if a != skip:
                score_rows.append([sid, a, f"{base + rng.randrange(-9, 10)}"])

    def some_attempts(sid, tasks):
        for tid in tasks:
            when = BASE_TIME + timedelta(hours=rng.randrange(14 * 24))
            outcome = (OUTCOME_SUCCESS if rng.random() < 0.5
                       else OUTCOME_TEST_FAILURE)
            attempt_lines.append(attempt_row(sid, tid, 1, outcome, when))

    for i, sid in enumerate(blocks["missing_lab"]):
        # first few never engaged at all; the rest skipped one task
        if i >= 5:
            dropped = rng.randrange(len(required_tasks))
            some_attempts(sid, [t for j, t in enumerate(required_tasks)
                                if j != dropped])
        survey_rows.append([
            sid, rng.choice(all_likert), "", "",
            (BASE_TIME + timedelta(days=30)).isoformat(timespec="seconds")])
        full_scores(sid)

    for sid in blocks["missing_assessment"]:
        some_attempts(sid, required_tasks)
        survey_rows.append([
            sid, rng.choice(all_likert), "", "",
            (BASE_TIME + timedelta(days=30)).isoformat(timespec="seconds")])
        full_scores(sid, skip=rng.choice([
            ASSESS_C_EXAM, ASSESS_MATLAB_PROJECT, ASSESS_FINAL_EXAM]))

    for sid in blocks["missing_survey"]:
        some_attempts(sid, required_tasks)
        full_scores(sid)

    # --- write ---
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    with open(OUT_DIR / "attempts.jsonl", "w", encoding="utf-8") as fh:
        for doc in attempt_lines:
            fh.write(json.dumps(doc, sort_keys=True, separators=(",", ":")))
            fh.write("\n")
    with open(OUT_DIR / "survey.csv", "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(survey_rows)
    with open(OUT_DIR / "scores.csv", "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(score_rows)

    # --- verify every rendered cell ---
    attempts = load_attempts(OUT_DIR / "attempts.jsonl")
    surveys = load_survey(OUT_DIR / "survey.csv")
    scores = load_scores(OUT_DIR / "scores.csv")
    summary, exclusions = build_summary(attempts, surveys, scores, list(bank))
    assert summary.cohort_size == 726, summary.cohort_size
    reasons = sorted(exclusions.values())
    assert reasons.count("missing lab attempts") == 60
    assert reasons.count("missing assessment") == 40
    assert reasons.count("missing survey") == 35
    rendered = emit_report(summary, "csv").splitlines()
    got_rows = [line.split(",") for line in rendered[1:]]
    for got, want in zip(got_rows, EXPECTED_ROWS):
        assert got == want, f"\n got {got}\nwant {want}"
    print(f"attempts: {len(attempt_lines)} rows")
    print(f"survey:   {len(survey_rows)} rows")
    print(f"scores:   {len(score_rows)} rows")
    print("all report cells match the targets")


if __name__ == "__main__":
    main()
