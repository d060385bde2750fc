"""Cohort analytics over attempt logs, survey responses, and scores.

Students are partitioned by their answer to the programming-difficulty
survey item, the cohort is filtered to students who attempted every
required lab task and have complete assessment records, and per-group
attempt metrics (tries, first-attempt rate, completion rate) are
computed over (student, task) pairs. Everything here is a pure function
over immutable snapshots; nothing mutates the stores.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import datetime
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Mapping

from .bank import KIND_EIPE, KIND_PROMPT_PROBLEM
from .errors import DuplicateId, EmptyGroup, ParseError, UnknownLikertLabel
from .grading import Attempt, AttemptStore, OUTCOME_PROVIDER_FAILURE, OUTCOME_SUCCESS

LIKERT_SD = "SD"
LIKERT_D = "D"
LIKERT_N = "N"
LIKERT_A = "A"
LIKERT_SA = "SA"

LIKERT_LABELS = {
    "Strongly disagree": LIKERT_SD,
    "Disagree": LIKERT_D,
    "Neutral": LIKERT_N,
    "Agree": LIKERT_A,
    "Strongly agree": LIKERT_SA,
}

GROUP_DSD = "D/SD"
GROUP_N = "N"
GROUP_A = "A"
GROUP_SA = "SA"

# report row order is fixed
GROUP_ORDER = (GROUP_DSD, GROUP_N, GROUP_A, GROUP_SA)

_GROUP_OF_LIKERT = {
    LIKERT_SD: GROUP_DSD,
    LIKERT_D: GROUP_DSD,
    LIKERT_N: GROUP_N,
    LIKERT_A: GROUP_A,
    LIKERT_SA: GROUP_SA,
}

ASSESS_MATLAB_EXAM = "MATLAB_exam"
ASSESS_C_EXAM = "C_exam"
ASSESS_FINAL_EXAM = "Final_exam"
ASSESS_MATLAB_PROJECT = "MATLAB_project"
ASSESS_C_PROJECT = "C_project"

ASSESSMENTS = (
    ASSESS_MATLAB_EXAM,
    ASSESS_C_EXAM,
    ASSESS_FINAL_EXAM,
    ASSESS_MATLAB_PROJECT,
    ASSESS_C_PROJECT,
)

REQUIRED_LABS = frozenset({8, 9, 10})
EIPE_LABS = frozenset({8, 10})
PROMPT_PROBLEM_LABS = frozenset({9})


@dataclass(frozen=True)
class SurveyResponse:
    student_id: str
    likert: str
    enjoyment_tag: str | None
    frustration_tag: str | None
    collected_at: datetime

    def __post_init__(self) -> None:
        if self.likert not in _GROUP_OF_LIKERT:
            raise UnknownLikertLabel(f"unknown likert value {self.likert!r}")


@dataclass(frozen=True)
class AssessmentScore:
    student_id: str
    assessment: str
    percent: float

    def __post_init__(self) -> None:
        if self.assessment not in ASSESSMENTS:
            raise ParseError(f"unknown assessment {self.assessment!r}")
        if not (0.0 <= self.percent <= 100.0):
            raise ParseError(f"percent out of range: {self.percent!r}")


def assign_group(resp: SurveyResponse) -> str:
    """Difficulty group from the likert answer; SD folds into D/SD."""
    return _GROUP_OF_LIKERT[resp.likert]


# --- loaders ---


def load_survey(path: str | Path) -> list[SurveyResponse]:
    """Parse survey CSV rows; the latest response per student wins.

    Columns: student_id, likert_label, enjoyment_tag, frustration_tag,
    timestamp. Tags may be empty. An exact header row is tolerated.
    """
    path = Path(path)
    header = ["student_id", "likert_label", "enjoyment_tag", "frustration_tag",
              "timestamp"]
    latest: dict[str, SurveyResponse] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for n, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if n == 1 and row == header:
                continue
            if len(row) != 5:
                raise ParseError(f"{path}:{n}: expected 5 fields, got {len(row)}")
            sid, label, enjoy, frustration, stamp = (f.strip() for f in row)
            if not sid:
                raise ParseError(f"{path}:{n}: empty student_id")
            if label not in LIKERT_LABELS:
                raise UnknownLikertLabel(f"{path}:{n}: unknown likert label {label!r}")
            try:
                collected = datetime.fromisoformat(stamp)
            except ValueError:
                raise ParseError(f"{path}:{n}: bad timestamp {stamp!r}")
            resp = SurveyResponse(
                student_id=sid,
                likert=LIKERT_LABELS[label],
                enjoyment_tag=enjoy or None,
                frustration_tag=frustration or None,
                collected_at=collected,
            )
            prev = latest.get(sid)
            if prev is None or collected >= prev.collected_at:
                latest[sid] = resp
    return list(latest.values())


def load_scores(path: str | Path) -> list[AssessmentScore]:
    """Parse scores CSV; duplicate (student, assessment) rows are an error."""
    path = Path(path)
    header = ["student_id", "assessment", "percent"]
    seen: set[tuple[str, str]] = set()
    out: list[AssessmentScore] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for n, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if n == 1 and row == header:
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{n}: expected 3 fields, got {len(row)}")
            sid, assessment, pct_text = (f.strip() for f in row)
            if not sid:
                raise ParseError(f"{path}:{n}: empty student_id")
            try:
                pct = float(pct_text)
            except ValueError:
                raise ParseError(f"{path}:{n}: bad percent {pct_text!r}")
            try:
                score = AssessmentScore(sid, assessment, pct)
            except ParseError as exc:
                raise ParseError(f"{path}:{n}: {exc}")
            key = (sid, assessment)
            if key in seen:
                raise DuplicateId(f"{path}:{n}: duplicate score for {key}")
            seen.add(key)
            out.append(score)
    return out


def load_attempts(path: str | Path) -> list[Attempt]:
    return list(AttemptStore(path))


# --- cohort filtering ---


@dataclass(frozen=True)
class CohortFilter:
    included: frozenset
    exclusions: dict  # student_id -> reason


def filter_cohort(
    students: Iterable[str],
    attempts: Iterable[Attempt],
    scores: Iterable[AssessmentScore],
    surveys: Iterable[SurveyResponse],
    tasks: Iterable,
    required_labs: frozenset = REQUIRED_LABS,
) -> CohortFilter:
    """Keep students who attempted every required-lab task, hold all five
    assessment scores, and answered the survey; others get a reason."""
    required_tasks = {
        t.id for t in tasks if t.lab in required_labs
    }
    attempted: dict[str, set] = {}
    for a in attempts:
        if a.task_id in required_tasks:
            attempted.setdefault(a.student_id, set()).add(a.task_id)
    scored: dict[str, set] = {}
    for s in scores:
        scored.setdefault(s.student_id, set()).add(s.assessment)
    surveyed = {r.student_id for r in surveys}

    included = set()
    exclusions: dict[str, str] = {}
    for sid in students:
        if attempted.get(sid, set()) != required_tasks:
            exclusions[sid] = "missing lab attempts"
        elif scored.get(sid, set()) != set(ASSESSMENTS):
            exclusions[sid] = "missing assessment"
        elif sid not in surveyed:
            exclusions[sid] = "missing survey"
        else:
            included.add(sid)
    return CohortFilter(included=frozenset(included), exclusions=exclusions)


# --- attempt metrics ---


@dataclass(frozen=True)
class KindMetrics:
    tries: float
    first_pct: float
    final_pct: float
    pairs: int

    def __post_init__(self) -> None:
        if self.pairs < 1:
            raise EmptyGroup("metrics need at least one pair")
        if self.tries < 1.0:
            raise ValueError("tries below one attempt")
        if not (0.0 <= self.first_pct <= self.final_pct <= 100.0):
            raise ValueError("first/final rates out of order or range")


def _pair_stats(ordered: list[Attempt]) -> tuple[int, bool, bool] | None:
    """(attempts to first success, first-try success, ever succeeded) for
    one pair, over counted attempts only; None when nothing counts."""
    counted = [a for a in ordered if a.outcome != OUTCOME_PROVIDER_FAILURE]
    if not counted:
        return None
    tries = len(counted)
    for i, a in enumerate(counted, start=1):
        if a.outcome == OUTCOME_SUCCESS:
            tries = i
            break
    ever = any(a.outcome == OUTCOME_SUCCESS for a in counted)
    first = counted[0].outcome == OUTCOME_SUCCESS
    return tries, first, ever


def compute_group_metrics(
    attempts: Iterable[Attempt],
    cohort: frozenset,
    groups: Mapping[str, str],
    tasks: Iterable,
    kind: str,
    labs: frozenset,
) -> dict:
    """Per-group tries / first_pct / final_pct over (student, task) pairs.

    A pair enters the denominators only if it has at least one counted
    (non-ProviderFailure) attempt. Groups with no such pair map to None.
    """
    task_ids = {t.id for t in tasks if t.kind == kind and t.lab in labs}
    by_pair: dict[tuple[str, str], list[Attempt]] = {}
    for a in attempts:
        if a.student_id in cohort and a.task_id in task_ids:
            by_pair.setdefault((a.student_id, a.task_id), []).append(a)

    stats: dict[str, list[tuple[int, bool, bool]]] = {g: [] for g in GROUP_ORDER}
    for (sid, _), rows in by_pair.items():
        group = groups.get(sid)
        if group is None:
            continue
        rows.sort(key=lambda a: a.seq)
        st = _pair_stats(rows)
        if st is not None:
            stats[group].append(st)

    out: dict[str, KindMetrics | None] = {}
    for g in GROUP_ORDER:
        rows = stats[g]
        if not rows:
            out[g] = None
            continue
        n = len(rows)
        out[g] = KindMetrics(
            tries=sum(t for t, _, _ in rows) / n,
            first_pct=100.0 * sum(1 for _, f, _ in rows if f) / n,
            final_pct=100.0 * sum(1 for _, _, e in rows if e) / n,
            pairs=n,
        )
    return out


# --- score summaries ---


@dataclass(frozen=True)
class ScoreMeans:
    matlab_exam_pct: float
    c_exam_pct: float
    final_exam_pct: float
    projects_combined_pct: float


def summarize_scores(
    scores: Iterable[AssessmentScore],
    cohort: frozenset,
    groups: Mapping[str, str],
) -> dict:
    """Arithmetic score means per group; projects average the two modules."""
    by_student: dict[str, dict[str, float]] = {}
    for s in scores:
        if s.student_id in cohort:
            by_student.setdefault(s.student_id, {})[s.assessment] = s.percent

    out: dict[str, ScoreMeans | None] = {}
    for g in GROUP_ORDER:
        members = [
            sid for sid, grp in groups.items() if grp == g and sid in by_student
        ]
        rows = [by_student[sid] for sid in members
                if set(by_student[sid]) == set(ASSESSMENTS)]
        if not rows:
            out[g] = None
            continue
        n = len(rows)
        out[g] = ScoreMeans(
            matlab_exam_pct=sum(r[ASSESS_MATLAB_EXAM] for r in rows) / n,
            c_exam_pct=sum(r[ASSESS_C_EXAM] for r in rows) / n,
            final_exam_pct=sum(r[ASSESS_FINAL_EXAM] for r in rows) / n,
            projects_combined_pct=sum(
                (r[ASSESS_MATLAB_PROJECT] + r[ASSESS_C_PROJECT]) / 2 for r in rows
            ) / n,
        )
    return out


# --- the full summary ---


@dataclass(frozen=True)
class GroupRow:
    group: str
    n: int
    eipe: KindMetrics | None
    prompt_problems: KindMetrics | None
    scores: ScoreMeans | None


@dataclass(frozen=True)
class CohortSummary:
    rows: tuple
    cohort_size: int

    def validate(self) -> None:
        if sum(r.n for r in self.rows) != self.cohort_size:
            raise ValueError("group sizes do not partition the cohort")
        for r in self.rows:
            for m in (r.eipe, r.prompt_problems):
                if m is None:
                    continue
                if not (0 <= m.first_pct <= m.final_pct <= 100):
                    raise ValueError(f"{r.group}: first/final out of order")


def build_summary(
    attempts: Iterable[Attempt],
    surveys: Iterable[SurveyResponse],
    scores: Iterable[AssessmentScore],
    tasks: Iterable,
    required_labs: frozenset = REQUIRED_LABS,
    eipe_labs: frozenset = EIPE_LABS,
    prompt_problem_labs: frozenset = PROMPT_PROBLEM_LABS,
) -> tuple[CohortSummary, dict]:
    """Filter the cohort and compute every report cell.

    The roster is the union of students seen in any input. Returns the
    summary plus the exclusion reasons from filtering.
    """
    attempts = list(attempts)
    surveys = list(surveys)
    scores = list(scores)
    tasks = list(tasks)
    roster = (
        {a.student_id for a in attempts}
        | {r.student_id for r in surveys}
        | {s.student_id for s in scores}
    )
    cohort = filter_cohort(
        sorted(roster), attempts, scores, surveys, tasks, required_labs
    )
    groups = {
        r.student_id: assign_group(r)
        for r in surveys
        if r.student_id in cohort.included
    }
    eipe = compute_group_metrics(
        attempts, cohort.included, groups, tasks, KIND_EIPE, eipe_labs
    )
    pp = compute_group_metrics(
        attempts, cohort.included, groups, tasks, KIND_PROMPT_PROBLEM,
        prompt_problem_labs,
    )
    means = summarize_scores(scores, cohort.included, groups)
    sizes = {g: 0 for g in GROUP_ORDER}
    for sid in cohort.included:
        sizes[groups[sid]] += 1
    rows = tuple(
        GroupRow(group=g, n=sizes[g], eipe=eipe[g], prompt_problems=pp[g],
                 scores=means[g])
        for g in GROUP_ORDER
    )
    summary = CohortSummary(rows=rows, cohort_size=len(cohort.included))
    summary.validate()
    return summary, cohort.exclusions


# --- rendering ---

REPORT_COLUMNS = (
    "group",
    "students",
    "eipe_tries",
    "eipe_first_pct",
    "eipe_final_pct",
    "pp_tries",
    "pp_first_pct",
    "pp_final_pct",
    "matlab_exam_pct",
    "c_exam_pct",
    "final_exam_pct",
    "projects_pct",
)


def _render(value: float | None, places: int) -> str:
    """Fixed-point decimal string, round-half-up; absent values render empty."""
    if value is None:
        return ""
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


def render_tries(value: float | None) -> str:
    return _render(value, 2)


def render_pct(value: float | None) -> str:
    return _render(value, 1)


def _row_cells(row: GroupRow) -> list[str]:
    e, p, s = row.eipe, row.prompt_problems, row.scores
    return [
        row.group,
        str(row.n),
        render_tries(e.tries if e else None),
        render_pct(e.first_pct if e else None),
        render_pct(e.final_pct if e else None),
        render_tries(p.tries if p else None),
        render_pct(p.first_pct if p else None),
        render_pct(p.final_pct if p else None),
        render_pct(s.matlab_exam_pct if s else None),
        render_pct(s.c_exam_pct if s else None),
        render_pct(s.final_exam_pct if s else None),
        render_pct(s.projects_combined_pct if s else None),
    ]


def emit_report(summary: CohortSummary, format: str = "csv") -> str:
    """Report text in the fixed group order; csv or markdown."""
    if format not in ("csv", "markdown"):
        raise ValueError(f"unknown report format {format!r}")
    data_rows = [_row_cells(r) for r in summary.rows if r.n > 0]
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(data_rows)
        return buf.getvalue()
    widths = [
        max(len(REPORT_COLUMNS[i]), *(len(r[i]) for r in data_rows), 1)
        if data_rows else len(REPORT_COLUMNS[i])
        for i in range(len(REPORT_COLUMNS))
    ]
    def line(cells):
        return "| " + " | ".join(
            c.ljust(w) for c, w in zip(cells, widths)
        ) + " |"
    out = [line(REPORT_COLUMNS),
           "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    out.extend(line(r) for r in data_rows)
    return "\n".join(out) + "\n"
