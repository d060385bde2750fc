import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from promptgrader.errors import SchemaViolation
from promptgrader.values import (
    Compare,
    RawOutput,
    Signature,
    WireSyntaxError,
    compare_compatible,
    decode_output,
    encode_values,
    format_real,
    validate_value,
    value_from_json,
    value_to_json,
    values_match,
)

ints = st.integers(-(10**15), 10**15)
reals = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e9, max_value=1e9)
texts = st.text(st.characters(exclude_categories=("Cs",)), max_size=200)


@st.composite
def matrices(draw):
    cols = draw(st.integers(0, 6))
    rows = draw(st.integers(0, 6))
    if rows == 0 or cols == 0:
        return []
    return draw(
        st.lists(st.lists(ints, min_size=cols, max_size=cols),
                 min_size=rows, max_size=rows)
    )


def roundtrip(kind, value):
    return decode_output(encode_values([(kind, value)]))


class TestRoundTrip:
    @given(ints)
    def test_int(self, v):
        assert roundtrip("int", v) == v

    @given(st.booleans())
    def test_bool_rides_as_int(self, v):
        assert roundtrip("bool", v) == (1 if v else 0)

    @given(reals)
    def test_real_within_nine_digits(self, v):
        got = roundtrip("real", float(v))
        assert isinstance(got, float)
        assert abs(got - v) <= abs(v) * 1e-8 + 1e-12

    @given(texts)
    def test_str(self, v):
        assert roundtrip("str", v) == v

    def test_str_payload_with_newlines_and_colons(self):
        for s in ["a\nb\nc", "x:y:z", "", "\n", "S:3:abc", "tail\n"]:
            assert roundtrip("str", s) == s

    @given(st.lists(ints, max_size=50))
    def test_int_array(self, v):
        assert roundtrip("int_array", v) == v

    @given(st.lists(reals, max_size=30))
    def test_real_array(self, v):
        got = roundtrip("real_array", [float(x) for x in v])
        assert len(got) == len(v)
        for g, x in zip(got, v):
            assert abs(g - x) <= abs(x) * 1e-8 + 1e-12

    @given(matrices())
    def test_int_matrix(self, v):
        got = roundtrip("int_matrix", v)
        assert got == v

    @given(st.lists(st.tuples(ints, ints), min_size=1, max_size=20))
    def test_positions_decode_as_matrix(self, v):
        got = roundtrip("positions", list(v))
        assert got == [[r, c] for r, c in v]
        assert values_match(list(v), got, Compare("array_exact"))


class TestDecodeErrors:
    @pytest.mark.parametrize(
        "data",
        [
            b"",
            b"1\n2\n",  # trailing value
            b"A:2\n1\n",  # short array
            b"M:2:2\n1\n2\n3\n",  # short matrix
            b"S:5:abc\n",  # short string payload
            b"A:-1\n",
            b"M:1:x\n",
            b"1_0\n",  # underscores are not wire integers
            b"0x10\n",
            b"nan\n",
            b"A:1\nA:1\n5\n",  # nested array is not a scalar slot
        ],
    )
    def test_rejects(self, data):
        with pytest.raises(WireSyntaxError):
            decode_output(data)

    def test_string_length_is_bytes_not_chars(self):
        s = "héllo"
        enc = encode_values([("str", s)])
        assert f"S:{len(s.encode('utf-8'))}:".encode() in enc
        assert decode_output(enc) == s


class TestValuesMatch:
    def test_bool_int_unify(self):
        assert values_match(True, 1, Compare("exact"))
        assert values_match(False, 0, Compare("exact"))
        assert not values_match(True, 0, Compare("exact"))

    def test_exact_keeps_int_and_real_apart(self):
        assert not values_match(1, 1.0, Compare("exact"))
        assert not values_match(1.0, 1, Compare("exact"))
        assert values_match(1.0, 1.0, Compare("exact"))

    def test_numeric_tolerance_boundary(self):
        cmp = Compare("numeric", tolerance=0.5)
        assert values_match(1.0, 1.5, cmp)
        assert not values_match(1.0, 1.5000001, cmp)
        assert values_match(1.0, 1, cmp)

    def test_array_shape_checked(self):
        cmp = Compare("array_exact")
        assert not values_match([1, 2], [1, 2, 3], cmp)
        assert not values_match([[1], [2]], [1, 2], cmp)
        assert not values_match([[1, 2]], [[1], [2]], cmp)
        assert values_match([[1, 2]], [[1, 2]], cmp)

    def test_array_numeric(self):
        cmp = Compare("array_numeric", tolerance=1e-6)
        assert values_match([1.0, 2.0], [1.0000005, 2.0], cmp)
        assert not values_match([1.0, 2.0], [1.1, 2.0], cmp)

    def test_raw_output_never_matches(self):
        assert not values_match(1, RawOutput("1"), Compare("exact"))

    def test_string_type_strict(self):
        assert not values_match("1", 1, Compare("exact"))
        assert values_match("ab", "ab", Compare("exact"))


class TestCompareCompatible:
    def test_numeric_only_for_reals(self):
        assert compare_compatible(Compare("numeric", 1e-6), "real")
        assert not compare_compatible(Compare("numeric", 1e-6), "int")
        assert compare_compatible(Compare("array_numeric", 1e-6), "real_array")
        assert not compare_compatible(Compare("array_numeric", 1e-6), "int_array")

    def test_exact_scalars_vs_arrays(self):
        assert compare_compatible(Compare("exact"), "int")
        assert compare_compatible(Compare("exact"), "bool")
        assert not compare_compatible(Compare("exact"), "int_array")
        assert compare_compatible(Compare("array_exact"), "positions")
        assert compare_compatible(Compare("array_exact"), "int_matrix")
        assert not compare_compatible(Compare("array_exact"), "str")


class TestCompareConstruction:
    def test_numeric_needs_positive_tolerance(self):
        with pytest.raises(SchemaViolation):
            Compare("numeric")
        with pytest.raises(SchemaViolation):
            Compare("numeric", tolerance=0.0)
        with pytest.raises(SchemaViolation):
            Compare("banana")


class TestValidateValue:
    def test_strictness(self):
        validate_value("int", 3)
        validate_value("bool", True)
        validate_value("real", 0.5)
        with pytest.raises(SchemaViolation):
            validate_value("int", True)
        with pytest.raises(SchemaViolation):
            validate_value("bool", 1)
        with pytest.raises(SchemaViolation):
            validate_value("real", 1)
        with pytest.raises(SchemaViolation):
            validate_value("real", float("inf"))
        with pytest.raises(SchemaViolation):
            validate_value("int_matrix", [[1, 2], [3]])

    @given(st.sampled_from(["int", "real", "str", "bool"]), st.data())
    def test_json_roundtrip_scalars(self, kind, data):
        v = data.draw({"int": ints, "real": reals, "str": texts,
                       "bool": st.booleans()}[kind])
        if kind == "real":
            v = float(v)
        assert value_from_json(value_to_json(kind, v)) == (kind, v)

    def test_json_roundtrip_positions(self):
        v = [(1, 2), (3, 4)]
        obj = value_to_json("positions", v)
        assert obj == {"t": "positions", "v": [[1, 2], [3, 4]]}
        assert value_from_json(obj) == ("positions", v)


class TestFormatReal:
    def test_integral_reals_keep_a_point(self):
        assert format_real(2.0) == "2.0"
        assert format_real(-10.0) == "-10.0"
        assert "." in format_real(1e200) or "e" in format_real(1e200)

    def test_nine_significant_digits(self):
        assert format_real(1.23456789012) == "1.23456789"

    @given(reals)
    def test_parseable(self, v):
        assert float(format_real(float(v))) == pytest.approx(v, rel=1e-8, abs=1e-12)


class TestSignature:
    def test_roundtrip(self):
        sig = Signature("foo", ("a", "b"), ("int", "str"), "bool")
        assert Signature.from_json(sig.to_json()) == sig

    def test_rejects_malformed(self):
        with pytest.raises(SchemaViolation):
            Signature.from_json({"name": "foo", "params": "nope"})
