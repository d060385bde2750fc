"""Task definitions: loading, validation, serialization, self-checks.

A bank on disk is a directory holding a manifest (bank.json) that lists
task documents in order. Each task document is JSON; program texts live
verbatim in sibling source files referenced by relative path. Banks are
immutable after load, so concurrent readers need no locking.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib.resources import files
from pathlib import Path
from typing import Any, Iterator

from . import sandbox
from .errors import DuplicateId, ParseError, SchemaViolation
from .values import (
    Compare,
    Signature,
    compare_compatible,
    validate_value,
    value_from_json,
    value_to_json,
)

KIND_EIPE = "EiPE"
KIND_PROMPT_PROBLEM = "PromptProblem"
TASK_KINDS = (KIND_EIPE, KIND_PROMPT_PROBLEM)

MANIFEST_NAME = "bank.json"

# eipe listings must not leak meaning through identifiers
_GENERIC_NAME = re.compile(r"^[a-z][0-9]*$")


@dataclass(frozen=True)
class TestCase:
    case_id: str
    inputs: tuple
    expected: tuple
    compare: Compare
    hidden: bool = False

    def to_json(self) -> dict:
        return {
            "case_id": self.case_id,
            "inputs": [value_to_json(k, v) for k, v in self.inputs],
            "expected": value_to_json(*self.expected),
            "compare": self.compare.to_json(),
            "hidden": self.hidden,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TestCase":
        if not isinstance(obj, dict):
            raise SchemaViolation(f"malformed test case: {obj!r}")
        raw_inputs = obj.get("inputs")
        if not isinstance(raw_inputs, list):
            raise SchemaViolation("test case inputs must be a list")
        return cls(
            case_id=obj.get("case_id", ""),
            inputs=tuple(value_from_json(v) for v in raw_inputs),
            expected=value_from_json(obj.get("expected")),
            compare=Compare.from_json(obj.get("compare")),
            hidden=bool(obj.get("hidden", False)),
        )


@dataclass(frozen=True)
class Exemplar:
    """One worked input -> output pair shown for a visual task."""

    inputs: tuple
    output: tuple

    def to_json(self) -> dict:
        return {
            "inputs": [value_to_json(k, v) for k, v in self.inputs],
            "output": value_to_json(*self.output),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Exemplar":
        if not isinstance(obj, dict) or not isinstance(obj.get("inputs"), list):
            raise SchemaViolation(f"malformed exemplar: {obj!r}")
        return cls(
            inputs=tuple(value_from_json(v) for v in obj["inputs"]),
            output=value_from_json(obj.get("output")),
        )


@dataclass(frozen=True)
class VisualSpec:
    exemplars: tuple
    illustration: str | None = None

    def to_json(self) -> dict:
        out: dict[str, Any] = {"exemplars": [e.to_json() for e in self.exemplars]}
        if self.illustration is not None:
            out["illustration"] = self.illustration
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "VisualSpec":
        if not isinstance(obj, dict) or not isinstance(obj.get("exemplars"), list):
            raise SchemaViolation(f"malformed visual spec: {obj!r}")
        illustration = obj.get("illustration")
        if illustration is not None and not isinstance(illustration, str):
            raise SchemaViolation("illustration reference must be a string")
        return cls(
            exemplars=tuple(Exemplar.from_json(e) for e in obj["exemplars"]),
            illustration=illustration,
        )


def _normalize(text: str) -> str:
    return "".join(c for c in text.lower() if c.isalnum())


@dataclass(frozen=True)
class TaskSpec:
    id: str
    lab: int
    ordinal: int
    kind: str
    title: str
    statement: str
    signature: Signature
    suite: tuple
    reference_solution: str
    eipe_source: str | None = None
    visual_spec: VisualSpec | None = None

    def validate(self) -> None:
        """Check every structural invariant; raises SchemaViolation."""
        if not self.id:
            raise SchemaViolation("task id must be non-empty")
        if self.kind not in TASK_KINDS:
            raise SchemaViolation(f"{self.id}: unknown kind {self.kind!r}")
        if not isinstance(self.lab, int) or self.lab < 1:
            raise SchemaViolation(f"{self.id}: lab must be a positive integer")
        if not isinstance(self.ordinal, int) or self.ordinal < 1:
            raise SchemaViolation(f"{self.id}: ordinal must be >= 1")
        if not self.title:
            raise SchemaViolation(f"{self.id}: title must be non-empty")
        if not self.suite:
            raise SchemaViolation(f"{self.id}: suite must be non-empty")
        if not self.reference_solution.strip():
            raise SchemaViolation(f"{self.id}: reference solution missing")
        if self.kind == KIND_EIPE:
            if self.eipe_source is None:
                raise SchemaViolation(f"{self.id}: EiPE task needs eipe_source")
            if self.visual_spec is not None:
                raise SchemaViolation(f"{self.id}: EiPE task cannot carry visual_spec")
            self._validate_eipe_listing()
            if _normalize(self.title) in _normalize(self.statement):
                raise SchemaViolation(
                    f"{self.id}: statement leaks the task title"
                )
        else:
            if self.visual_spec is None or not self.visual_spec.exemplars:
                raise SchemaViolation(
                    f"{self.id}: visual task needs at least one exemplar"
                )
            if self.eipe_source is not None:
                raise SchemaViolation(
                    f"{self.id}: visual task cannot carry eipe_source"
                )
            for ex in self.visual_spec.exemplars:
                self._check_values(ex.inputs, ex.output, "exemplar")
        seen_cases: set[str] = set()
        for case in self.suite:
            if not case.case_id:
                raise SchemaViolation(f"{self.id}: case_id must be non-empty")
            if case.case_id in seen_cases:
                raise SchemaViolation(f"{self.id}: duplicate case {case.case_id}")
            seen_cases.add(case.case_id)
            self._check_values(case.inputs, case.expected, case.case_id)
            if not compare_compatible(case.compare, case.expected[0]):
                raise SchemaViolation(
                    f"{self.id}/{case.case_id}: compare mode "
                    f"{case.compare.mode} incompatible with {case.expected[0]}"
                )

    def _check_values(self, inputs: tuple, expected: tuple, where: str) -> None:
        kinds = self.signature.param_kinds
        if len(inputs) != len(kinds):
            raise SchemaViolation(
                f"{self.id}/{where}: {len(inputs)} inputs, signature "
                f"takes {len(kinds)}"
            )
        for (kind, value), want in zip(inputs, kinds):
            if kind != want:
                raise SchemaViolation(
                    f"{self.id}/{where}: input kind {kind} != signature {want}"
                )
            validate_value(kind, value)
        ekind, evalue = expected
        if ekind != self.signature.result_kind:
            raise SchemaViolation(
                f"{self.id}/{where}: expected kind {ekind} != "
                f"signature result {self.signature.result_kind}"
            )
        validate_value(ekind, evalue)

    def _validate_eipe_listing(self) -> None:
        import ast

        try:
            tree = ast.parse(self.eipe_source)
        except SyntaxError as exc:
            raise SchemaViolation(f"{self.id}: eipe listing: {exc.msg}")
        defs = [n for n in tree.body if isinstance(n, ast.FunctionDef)]
        if len(defs) != 1:
            raise SchemaViolation(f"{self.id}: eipe listing must hold one function")
        fn = defs[0]
        if fn.name != "foo":
            raise SchemaViolation(f"{self.id}: eipe function must be named foo")
        for arg in fn.args.posonlyargs + fn.args.args:
            if not _GENERIC_NAME.match(arg.arg):
                raise SchemaViolation(
                    f"{self.id}: eipe parameter {arg.arg!r} is not generic"
                )

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "id": self.id,
            "lab": self.lab,
            "ordinal": self.ordinal,
            "kind": self.kind,
            "title": self.title,
            "statement": self.statement,
            "signature": self.signature.to_json(),
            "suite": [c.to_json() for c in self.suite],
        }
        if self.visual_spec is not None:
            out["visual_spec"] = self.visual_spec.to_json()
        return out


@dataclass(frozen=True)
class TaskBank:
    tasks: tuple

    def __iter__(self) -> Iterator[TaskSpec]:
        return iter(self.tasks)

    def __len__(self) -> int:
        return len(self.tasks)

    def get(self, task_id: str) -> TaskSpec | None:
        for task in self.tasks:
            if task.id == task_id:
                return task
        return None


def _read_json(path: Path) -> Any:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}")


def _read_source_ref(doc: dict, key: str, task_dir: Path, task_id: str) -> str | None:
    ref = doc.get(key)
    if ref is None:
        return None
    if not isinstance(ref, str) or not ref:
        raise SchemaViolation(f"{task_id}: {key} must be a relative file path")
    rel = Path(ref)
    if rel.is_absolute() or ".." in rel.parts:
        raise SchemaViolation(f"{task_id}: {key} must stay inside the bank")
    try:
        return (task_dir / rel).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{task_id}: cannot read {key} ({exc})")


def load_task(path: Path) -> TaskSpec:
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: task document must be an object")
    task_id = doc.get("id", "")
    try:
        signature = Signature.from_json(doc.get("signature"))
        suite = tuple(TestCase.from_json(c) for c in doc.get("suite") or [])
        visual = doc.get("visual_spec")
        task = TaskSpec(
            id=task_id,
            lab=doc.get("lab", 0),
            ordinal=doc.get("ordinal", 0),
            kind=doc.get("kind", ""),
            title=doc.get("title", ""),
            statement=doc.get("statement", ""),
            signature=signature,
            suite=suite,
            reference_solution=_read_source_ref(
                doc, "reference_solution", path.parent, task_id
            )
            or "",
            eipe_source=_read_source_ref(doc, "eipe_source", path.parent, task_id),
            visual_spec=VisualSpec.from_json(visual) if visual is not None else None,
        )
    except SchemaViolation as exc:
        raise SchemaViolation(f"{path.name}: {exc}") from None
    task.validate()
    return task


def load_bank(path: str | Path) -> TaskBank:
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.exists():
        raise ParseError(f"{manifest_path}: bank manifest not found")
    manifest = _read_json(manifest_path)
    if not isinstance(manifest, dict) or not isinstance(manifest.get("tasks"), list):
        raise ParseError(f"{manifest_path}: manifest needs a tasks list")
    tasks: list[TaskSpec] = []
    seen: set[str] = set()
    for entry in manifest["tasks"]:
        if not isinstance(entry, str):
            raise ParseError(f"{manifest_path}: task entries must be file names")
        rel = Path(entry)
        if rel.is_absolute() or ".." in rel.parts:
            raise ParseError(f"{manifest_path}: task path {entry!r} escapes the bank")
        task = load_task(root / rel)
        if task.id in seen:
            raise DuplicateId(f"duplicate task id {task.id!r}")
        seen.add(task.id)
        tasks.append(task)
    return TaskBank(tasks=tuple(tasks))


def write_bank(bank: TaskBank, path: str | Path) -> None:
    """Serialize a bank so load_bank reads back an equal value."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    entries: list[str] = []
    for task in bank:
        doc = task.to_json()
        ref_name = f"{task.id}.ref.py"
        (root / ref_name).write_text(task.reference_solution, encoding="utf-8")
        doc["reference_solution"] = ref_name
        if task.eipe_source is not None:
            eipe_name = f"{task.id}.eipe.py"
            (root / eipe_name).write_text(task.eipe_source, encoding="utf-8")
            doc["eipe_source"] = eipe_name
        task_name = f"{task.id}.json"
        (root / task_name).write_text(
            json.dumps(doc, indent=2, sort_keys=False) + "\n", encoding="utf-8"
        )
        entries.append(task_name)
    manifest = {"tasks": entries}
    (root / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )


@dataclass(frozen=True)
class TaskSummary:
    id: str
    lab: int
    kind: str
    title: str


def list_tasks(
    bank: TaskBank, lab: int | None = None, kind: str | None = None
) -> list[TaskSummary]:
    rows = [
        TaskSummary(id=t.id, lab=t.lab, kind=t.kind, title=t.title)
        for t in bank
        if (lab is None or t.lab == lab) and (kind is None or t.kind == kind)
    ]
    order = {t.id: (t.lab, t.ordinal) for t in bank}
    rows.sort(key=lambda r: order[r.id])
    return rows


@dataclass(frozen=True)
class CaseReport:
    case_id: str
    verdict: str
    diagnostics: str = ""


def _run_source(task: TaskSpec, source: str, limits) -> list[CaseReport]:
    prepared = sandbox.prepare_program(source, task.signature)
    with prepared:
        results = sandbox.run_suite(prepared, task.suite, limits)
    return [
        CaseReport(case.case_id, res.verdict, res.diagnostics)
        for case, res in zip(task.suite, results)
    ]


def reference_oracle_check(
    task: TaskSpec, limits: sandbox.ResourceLimits | None = None
) -> list[CaseReport]:
    """Run the reference solution against the full suite."""
    return _run_source(task, task.reference_solution, limits)


def eipe_listing_check(
    task: TaskSpec, limits: sandbox.ResourceLimits | None = None
) -> list[CaseReport]:
    """Run the obfuscated listing against the suite (EiPE tasks only)."""
    if task.eipe_source is None:
        raise SchemaViolation(f"{task.id}: not an EiPE task")
    return _run_source(task, task.eipe_source, limits)


@dataclass(frozen=True)
class TaskCheck:
    task_id: str
    passed: bool
    reference: tuple
    eipe: tuple | None


def self_check(
    bank: TaskBank, limits: sandbox.ResourceLimits | None = None
) -> list[TaskCheck]:
    """Reference and obfuscated listings must both pass every case."""
    checks: list[TaskCheck] = []
    for task in bank:
        ref = tuple(reference_oracle_check(task, limits))
        eipe = None
        ok = all(r.verdict == sandbox.PASS for r in ref)
        if task.kind == KIND_EIPE:
            eipe = tuple(eipe_listing_check(task, limits))
            ok = ok and all(r.verdict == sandbox.PASS for r in eipe)
        checks.append(TaskCheck(task_id=task.id, passed=ok, reference=ref, eipe=eipe))
    return checks


def default_bank_dir() -> Path:
    return Path(str(files("promptgrader") / "banks" / "default"))
