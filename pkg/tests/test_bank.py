import json
from dataclasses import replace

import pytest

from promptgrader import bank as bank_mod
from promptgrader.bank import (
    KIND_EIPE,
    KIND_PROMPT_PROBLEM,
    Exemplar,
    TaskBank,
    TaskSpec,
    VisualSpec,
    eipe_listing_check,
    list_tasks,
    load_bank,
    load_task,
    reference_oracle_check,
    self_check,
    write_bank,
)
from promptgrader.bank import TestCase as BankCase
from promptgrader.errors import DuplicateId, ParseError, SchemaViolation
from promptgrader.values import Compare, Signature

SIG = Signature("foo", ("a",), ("str",), "str")
REF = "def foo(a):\n    return a[::-1]\n"
LISTING = "def foo(a):\n    b = ''\n    for c in a:\n        b = c + b\n    return b\n"


def case(cid, inp, out, hidden=False):
    return BankCase(
        case_id=cid, inputs=(("str", inp),), expected=("str", out),
        compare=Compare("exact"), hidden=hidden,
    )


def eipe_task(task_id="t-eipe", lab=8, ordinal=1):
    return TaskSpec(
        id=task_id, lab=lab, ordinal=ordinal, kind=KIND_EIPE,
        title="Reverse a string",
        statement="Describe, in one sentence, what this code does.",
        signature=SIG,
        suite=(case("c1", "ab", "ba"), case("c2", "xyz", "zyx", hidden=True)),
        reference_solution=REF,
        eipe_source=LISTING,
    )


def visual_task(task_id="t-vis", lab=9, ordinal=1):
    return TaskSpec(
        id=task_id, lab=lab, ordinal=ordinal, kind=KIND_PROMPT_PROBLEM,
        title="Mirror text",
        statement="Make the function produce the outputs shown.",
        signature=SIG,
        suite=(case("c1", "ab", "ba"),),
        reference_solution=REF,
        visual_spec=VisualSpec(
            exemplars=(Exemplar(inputs=(("str", "dog"),), output=("str", "god")),),
        ),
    )


class TestDefaultBank:
    def test_loads_fourteen_tasks(self, bank):
        assert len(bank) == 14
        labs = sorted({t.lab for t in bank})
        assert labs == [8, 9, 10, 12]

    def test_kinds_by_lab(self, bank):
        for t in bank:
            if t.lab in (8, 10):
                assert t.kind == KIND_EIPE
                assert t.eipe_source is not None
            else:
                assert t.kind == KIND_PROMPT_PROBLEM
                assert t.visual_spec is not None

    def test_every_task_hides_two_cases(self, bank):
        for t in bank:
            hidden = [c for c in t.suite if c.hidden]
            assert len(hidden) == 2, t.id
            # hidden cases sit at the tail of each suite
            assert all(c.hidden for c in t.suite[-2:])

    def test_listing_order_and_filters(self, bank):
        rows = list_tasks(bank)
        keys = [(r.lab, r.id) for r in rows]
        assert keys == sorted(keys)
        lab9 = list_tasks(bank, lab=9)
        assert [r.id for r in lab9] == ["lab09-q1", "lab09-q2", "lab09-q3"]
        eipe = list_tasks(bank, kind=KIND_EIPE)
        assert len(eipe) == 8
        assert list_tasks(bank, lab=9, kind=KIND_EIPE) == []

    def test_get(self, bank):
        assert bank.get("lab08-q1").lab == 8
        assert bank.get("nope") is None


class TestRoundTrip:
    def test_write_then_load_preserves_tasks(self, tmp_path):
        original = TaskBank(tasks=(eipe_task(), visual_task()))
        write_bank(original, tmp_path / "b")
        loaded = load_bank(tmp_path / "b")
        assert len(loaded) == 2
        for before, after in zip(original, loaded):
            assert before == after

    def test_default_bank_round_trips(self, bank, tmp_path):
        write_bank(bank, tmp_path / "copy")
        loaded = load_bank(tmp_path / "copy")
        assert tuple(loaded) == tuple(bank)


class TestValidation:
    def test_valid_tasks_pass(self):
        eipe_task().validate()
        visual_task().validate()

    @pytest.mark.parametrize("mutation,fragment", [
        (dict(id=""), "id"),
        (dict(kind="Quiz"), "kind"),
        (dict(lab=0), "lab"),
        (dict(ordinal=0), "ordinal"),
        (dict(title=""), "title"),
        (dict(suite=()), "suite"),
        (dict(reference_solution="  \n"), "reference"),
    ])
    def test_structural_failures(self, mutation, fragment):
        with pytest.raises(SchemaViolation) as exc:
            replace(eipe_task(), **mutation).validate()
        assert fragment in str(exc.value)

    def test_eipe_needs_listing(self):
        with pytest.raises(SchemaViolation):
            replace(eipe_task(), eipe_source=None).validate()

    def test_eipe_rejects_visual_spec(self):
        vs = visual_task().visual_spec
        with pytest.raises(SchemaViolation):
            replace(eipe_task(), visual_spec=vs).validate()

    def test_visual_needs_exemplars(self):
        with pytest.raises(SchemaViolation):
            replace(visual_task(), visual_spec=VisualSpec(exemplars=())).validate()

    def test_visual_rejects_listing(self):
        with pytest.raises(SchemaViolation):
            replace(visual_task(), eipe_source=LISTING).validate()

    def test_eipe_listing_must_be_foo(self):
        bad = LISTING.replace("def foo", "def reverse")
        with pytest.raises(SchemaViolation):
            replace(eipe_task(), eipe_source=bad).validate()

    def test_eipe_listing_params_must_be_generic(self):
        bad = "def foo(word):\n    return word[::-1]\n"
        with pytest.raises(SchemaViolation):
            replace(eipe_task(), eipe_source=bad).validate()

    def test_eipe_statement_must_not_leak_title(self):
        leaky = "What does this do? Hint: Reverse a String."
        with pytest.raises(SchemaViolation) as exc:
            replace(eipe_task(), statement=leaky).validate()
        assert "leak" in str(exc.value)

    def test_duplicate_case_ids(self):
        t = replace(eipe_task(), suite=(case("c1", "a", "a"), case("c1", "b", "b")))
        with pytest.raises(SchemaViolation) as exc:
            t.validate()
        assert "duplicate" in str(exc.value)

    def test_input_arity_checked(self):
        bad = BankCase(
            case_id="c9", inputs=(("str", "a"), ("str", "b")),
            expected=("str", "a"), compare=Compare("exact"),
        )
        with pytest.raises(SchemaViolation):
            replace(eipe_task(), suite=(bad,)).validate()

    def test_input_kind_checked(self):
        bad = BankCase(
            case_id="c9", inputs=(("int", 3),),
            expected=("str", "a"), compare=Compare("exact"),
        )
        with pytest.raises(SchemaViolation):
            replace(eipe_task(), suite=(bad,)).validate()

    def test_expected_kind_checked(self):
        bad = BankCase(
            case_id="c9", inputs=(("str", "a"),),
            expected=("int", 1), compare=Compare("exact"),
        )
        with pytest.raises(SchemaViolation):
            replace(eipe_task(), suite=(bad,)).validate()

    def test_compare_mode_must_fit_result_kind(self):
        bad = BankCase(
            case_id="c9", inputs=(("str", "a"),),
            expected=("str", "a"), compare=Compare("numeric", tolerance=0.1),
        )
        with pytest.raises(SchemaViolation) as exc:
            replace(eipe_task(), suite=(bad,)).validate()
        assert "incompatible" in str(exc.value)

    def test_exemplar_values_checked_against_signature(self):
        vs = VisualSpec(exemplars=(Exemplar(
            inputs=(("int", 1),), output=("str", "x")),))
        with pytest.raises(SchemaViolation):
            replace(visual_task(), visual_spec=vs).validate()


class TestLoadErrors:
    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ParseError) as exc:
            load_bank(tmp_path)
        assert "manifest" in str(exc.value)

    def test_bad_json_reports_line(self, tmp_path):
        (tmp_path / "bank.json").write_text('{"tasks": [\n  "x.json",\n]}')
        with pytest.raises(ParseError) as exc:
            load_bank(tmp_path)
        assert ":3:" in str(exc.value)

    def test_task_path_may_not_escape(self, tmp_path):
        (tmp_path / "bank.json").write_text(json.dumps({"tasks": ["../out.json"]}))
        with pytest.raises(ParseError) as exc:
            load_bank(tmp_path)
        assert "escape" in str(exc.value)

    def test_source_ref_may_not_escape(self, tmp_path):
        write_bank(TaskBank(tasks=(eipe_task(),)), tmp_path)
        doc = json.loads((tmp_path / "t-eipe.json").read_text())
        doc["reference_solution"] = "/etc/passwd"
        (tmp_path / "t-eipe.json").write_text(json.dumps(doc))
        with pytest.raises(SchemaViolation):
            load_task(tmp_path / "t-eipe.json")

    def test_duplicate_task_ids(self, tmp_path):
        write_bank(TaskBank(tasks=(eipe_task(),)), tmp_path)
        manifest = json.loads((tmp_path / "bank.json").read_text())
        manifest["tasks"] = manifest["tasks"] * 2
        (tmp_path / "bank.json").write_text(json.dumps(manifest))
        with pytest.raises(DuplicateId):
            load_bank(tmp_path)

    def test_invalid_task_rejected_at_load(self, tmp_path):
        write_bank(TaskBank(tasks=(eipe_task(),)), tmp_path)
        doc = json.loads((tmp_path / "t-eipe.json").read_text())
        doc["suite"] = []
        (tmp_path / "t-eipe.json").write_text(json.dumps(doc))
        with pytest.raises(SchemaViolation):
            load_bank(tmp_path)


class TestChecks:
    def test_reference_oracle_passes(self, quick_limits):
        reports = reference_oracle_check(eipe_task(), quick_limits)
        assert [r.verdict for r in reports] == ["Pass", "Pass"]

    def test_eipe_listing_check(self, quick_limits):
        reports = eipe_listing_check(eipe_task(), quick_limits)
        assert all(r.verdict == "Pass" for r in reports)
        with pytest.raises(SchemaViolation):
            eipe_listing_check(visual_task(), quick_limits)

    def test_self_check_flags_broken_reference(self, quick_limits):
        broken = replace(
            eipe_task(), reference_solution="def foo(a):\n    return a\n"
        )
        checks = self_check(TaskBank(tasks=(broken, visual_task())), quick_limits)
        assert [c.passed for c in checks] == [False, True]
        assert any(r.verdict != "Pass" for r in checks[0].reference)

    def test_self_check_flags_broken_listing(self, quick_limits):
        broken = replace(
            eipe_task(), eipe_source="def foo(a):\n    return a\n"
        )
        checks = self_check(TaskBank(tasks=(broken,)), quick_limits)
        assert not checks[0].passed
        assert all(r.verdict == "Pass" for r in checks[0].reference)
        assert any(r.verdict != "Pass" for r in checks[0].eipe)


class TestDefaultBankDir:
    def test_points_at_packaged_data(self):
        d = bank_mod.default_bank_dir()
        assert (d / "bank.json").exists()
