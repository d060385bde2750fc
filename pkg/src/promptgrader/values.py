"""Typed values, the sandbox wire protocol, and verdict comparison.

Every value that crosses a boundary (task files, test inputs, program
output) is one of a small set of kinds: int, real, str, bool, int_array,
real_array, int_matrix, positions. On the wire each value is encoded
line-oriented and self-describing:

    integers        decimal, no dot           42
    reals           decimal with a dot        2.5   (9 significant digits)
    strings         S:<len>:<utf8 bytes>      S:3:abc
    arrays          A:<len> + value lines     A:2 / 1 / 2
    2D arrays       M:<rows>:<cols> + row-major value lines
    position pairs  encoded as an n x 2 matrix

Booleans are carried as integers 1/0. Comparison happens on parsed
values, never on strings.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Any, Iterator

from .errors import SchemaViolation

SCALAR_KINDS = ("int", "real", "str", "bool")
ARRAY_KINDS = ("int_array", "real_array")
ALL_KINDS = SCALAR_KINDS + ARRAY_KINDS + ("int_matrix", "positions")

COMPARE_MODES = ("exact", "numeric", "array_exact", "array_numeric")


@dataclass(frozen=True)
class Compare:
    """A test case's comparison rule."""

    mode: str
    tolerance: float | None = None

    def __post_init__(self) -> None:
        if self.mode not in COMPARE_MODES:
            raise SchemaViolation(f"unknown compare mode {self.mode!r}")
        if self.mode in ("numeric", "array_numeric"):
            if self.tolerance is None or not self.tolerance > 0:
                raise SchemaViolation("numeric compare modes need tolerance > 0")
        elif self.tolerance is not None:
            raise SchemaViolation(f"compare mode {self.mode!r} takes no tolerance")

    def to_json(self) -> dict:
        out: dict[str, Any] = {"mode": self.mode}
        if self.tolerance is not None:
            out["tolerance"] = self.tolerance
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Compare":
        if not isinstance(obj, dict):
            raise SchemaViolation(f"malformed compare spec: {obj!r}")
        return cls(mode=obj.get("mode", ""), tolerance=obj.get("tolerance"))


@dataclass(frozen=True)
class RawOutput:
    """Program output that did not parse as a wire value."""

    text: str


@dataclass(frozen=True)
class Signature:
    """The callable interface a graded program must expose."""

    name: str
    param_names: tuple[str, ...]
    param_kinds: tuple[str, ...]
    result_kind: str

    def __post_init__(self) -> None:
        if not self.name.isidentifier():
            raise SchemaViolation(f"bad function name {self.name!r}")
        if len(self.param_names) != len(self.param_kinds):
            raise SchemaViolation("param_names and param_kinds disagree")
        for n in self.param_names:
            if not n.isidentifier():
                raise SchemaViolation(f"bad parameter name {n!r}")
        for k in self.param_kinds + (self.result_kind,):
            if k not in ALL_KINDS:
                raise SchemaViolation(f"unknown value kind {k!r}")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "params": [
                {"name": n, "kind": k}
                for n, k in zip(self.param_names, self.param_kinds)
            ],
            "result_kind": self.result_kind,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Signature":
        if not isinstance(obj, dict):
            raise SchemaViolation(f"malformed signature: {obj!r}")
        params = obj.get("params")
        if not isinstance(params, list):
            raise SchemaViolation("signature params must be a list")
        try:
            names = tuple(p["name"] for p in params)
            kinds = tuple(p["kind"] for p in params)
        except (TypeError, KeyError):
            raise SchemaViolation("each param needs name and kind")
        return cls(
            name=obj.get("name", ""),
            param_names=names,
            param_kinds=kinds,
            result_kind=obj.get("result_kind", ""),
        )


def validate_value(kind: str, value: Any) -> None:
    """Raise SchemaViolation unless `value` matches `kind`.

    Bank data is strict: bools are not ints here, ints are not reals.
    """
    if not _check(kind, value):
        raise SchemaViolation(f"value {value!r} does not match kind {kind!r}")


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _check(kind: str, value: Any) -> bool:
    if kind == "int":
        return _is_int(value)
    if kind == "real":
        return isinstance(value, float) and math.isfinite(value)
    if kind == "str":
        return isinstance(value, str)
    if kind == "bool":
        return isinstance(value, bool)
    if kind == "int_array":
        return isinstance(value, list) and all(_is_int(v) for v in value)
    if kind == "real_array":
        return isinstance(value, list) and all(
            isinstance(v, float) and math.isfinite(v) for v in value
        )
    if kind == "int_matrix":
        if not isinstance(value, list):
            return False
        if not value:
            return True
        widths = set()
        for row in value:
            if not isinstance(row, list) or not all(_is_int(v) for v in row):
                return False
            widths.add(len(row))
        return len(widths) == 1
    if kind == "positions":
        return isinstance(value, list) and all(
            isinstance(p, (list, tuple)) and len(p) == 2 and all(_is_int(c) for c in p)
            for p in value
        )
    raise SchemaViolation(f"unknown value kind {kind!r}")


def value_to_json(kind: str, value: Any) -> dict:
    validate_value(kind, value)
    if kind == "positions":
        value = [list(p) for p in value]
    return {"t": kind, "v": value}


def value_from_json(obj: Any) -> tuple[str, Any]:
    if not isinstance(obj, dict) or set(obj) != {"t", "v"}:
        raise SchemaViolation(f"malformed typed value: {obj!r}")
    kind, value = obj["t"], obj["v"]
    if kind == "positions":
        if not isinstance(value, list):
            raise SchemaViolation("positions value must be a list of pairs")
        value = [tuple(p) for p in value]
    validate_value(kind, value)
    return kind, value


# --- wire encoding ---


def format_real(v: float) -> str:
    """9 significant digits, always distinguishable from an integer."""
    if math.isnan(v) or math.isinf(v):
        return repr(float(v))
    s = f"{v:.9g}"
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def encode_value(kind: str, value: Any) -> list[str]:
    """Encode one typed value as wire lines (no trailing newline)."""
    if kind == "int":
        return [str(int(value))]
    if kind == "bool":
        return [str(1 if value else 0)]
    if kind == "real":
        return [format_real(float(value))]
    if kind == "str":
        raw = value.encode("utf-8")
        return [f"S:{len(raw)}:{value}"]
    if kind == "int_array":
        return [f"A:{len(value)}"] + [str(v) for v in value]
    if kind == "real_array":
        return [f"A:{len(value)}"] + [format_real(v) for v in value]
    if kind == "int_matrix":
        rows = len(value)
        cols = len(value[0]) if rows else 0
        out = [f"M:{rows}:{cols}"]
        for row in value:
            out.extend(str(v) for v in row)
        return out
    if kind == "positions":
        out = [f"M:{len(value)}:2"]
        for r, c in value:
            out.extend([str(r), str(c)])
        return out
    raise SchemaViolation(f"unknown value kind {kind!r}")


def encode_values(kinds_and_values: list[tuple[str, Any]]) -> bytes:
    lines: list[str] = []
    for kind, value in kinds_and_values:
        lines.extend(encode_value(kind, value))
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


class WireSyntaxError(ValueError):
    """Byte stream is not a well-formed wire value."""


class _Reader:
    """Byte-stream reader for the wire protocol.

    Strings are length-prefixed and may contain newline bytes, so the
    stream cannot be split into lines eagerly.
    """

    def __init__(self, data: bytes):
        self._buf = io.BytesIO(data)

    def _raw_line(self) -> bytes:
        line = self._buf.readline()
        if not line:
            raise WireSyntaxError("unexpected end of stream")
        return line

    def _read_string(self, raw: bytes) -> str:
        # raw = b"S:<len>:<payload start...>"; payload may span lines.
        _, length_s, payload = raw.split(b":", 2)
        try:
            length = int(length_s)
        except ValueError:
            raise WireSyntaxError(f"bad string header in {raw[:40]!r}")
        if length < 0:
            raise WireSyntaxError("negative string length")
        while len(payload) < length:
            chunk = self._buf.readline()
            if not chunk:
                raise WireSyntaxError("truncated string payload")
            payload += chunk
        terminator = payload[length:]
        payload = payload[:length]
        if terminator == b"":
            terminator = self._buf.readline()
        if terminator not in (b"", b"\n", b"\r\n"):
            raise WireSyntaxError("garbage after string payload")
        try:
            return payload.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise WireSyntaxError(f"string payload not utf-8: {exc}")

    def read_scalar(self) -> Any:
        raw = self._raw_line()
        if raw.startswith(b"S:"):
            return self._read_string(raw)
        return _parse_number(_decode_line(raw))

    def at_eof(self) -> bool:
        tail = self._buf.read()
        return tail.strip() == b""

    def read_value(self) -> Any:
        """Decode one self-describing value."""
        raw = self._raw_line()
        if raw.startswith(b"S:"):
            return self._read_string(raw)
        line = _decode_line(raw)
        if line.startswith("A:"):
            try:
                count = int(line[2:])
            except ValueError:
                raise WireSyntaxError(f"bad array header {line!r}")
            if count < 0:
                raise WireSyntaxError("negative array length")
            return [self.read_scalar() for _ in range(count)]
        if line.startswith("M:"):
            try:
                _, rows_s, cols_s = line.split(":")
                rows, cols = int(rows_s), int(cols_s)
            except ValueError:
                raise WireSyntaxError(f"bad matrix header {line!r}")
            if rows < 0 or cols < 0:
                raise WireSyntaxError("negative matrix dimension")
            return [[self.read_scalar() for _ in range(cols)] for _ in range(rows)]
        return _parse_number(line)


def _decode_line(raw: bytes) -> str:
    try:
        return raw.rstrip(b"\r\n").decode("utf-8")
    except UnicodeDecodeError as exc:
        raise WireSyntaxError(f"line not utf-8: {exc}")


_INT_CHARS = set("-0123456789")


def _parse_number(line: str) -> Any:
    if line and set(line) <= _INT_CHARS:
        try:
            return int(line)
        except ValueError:
            raise WireSyntaxError(f"bad integer line {line!r}")
    if "_" in line:
        raise WireSyntaxError(f"unparseable value line {line!r}")
    try:
        value = float(line)
    except ValueError:
        raise WireSyntaxError(f"unparseable value line {line!r}")
    if not math.isfinite(value):
        raise WireSyntaxError(f"non-finite value line {line!r}")
    return value


def decode_output(data: bytes) -> Any:
    """Parse a program's entire stdout as exactly one wire value."""
    reader = _Reader(data)
    value = reader.read_value()
    if not reader.at_eof():
        raise WireSyntaxError("trailing data after value")
    return value


def decode_typed(kind: str, reader: _Reader) -> Any:
    """Decode one value and convert it to the requested parameter kind."""
    value = reader.read_value()
    if kind == "positions":
        if not isinstance(value, list) or any(
            not isinstance(r, list) or len(r) != 2 for r in value
        ):
            raise WireSyntaxError("positions input must be an n x 2 matrix")
        return [(r[0], r[1]) for r in value]
    if kind == "bool":
        return bool(value)
    return value


# --- comparison ---


def _numeric(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _norm(v: Any) -> Any:
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_norm(x) for x in v]
    return v


def _exact_equal(expected: Any, observed: Any) -> bool:
    if isinstance(expected, list) or isinstance(observed, list):
        if not (isinstance(expected, list) and isinstance(observed, list)):
            return False
        return len(expected) == len(observed) and all(
            _exact_equal(e, o) for e, o in zip(expected, observed)
        )
    if _numeric(expected) != _numeric(observed):
        return False
    if _numeric(expected):
        # exact mode keeps ints and reals apart: 1 != 1.0
        if isinstance(expected, float) != isinstance(observed, float):
            return False
        return expected == observed
    return type(expected) is type(observed) and expected == observed


def _numeric_close(expected: Any, observed: Any, tol: float) -> bool:
    if not (_numeric(expected) and _numeric(observed)):
        return False
    return abs(float(expected) - float(observed)) <= tol


def _flatten_shape(v: Any) -> tuple[list, tuple]:
    if isinstance(v, list) and v and all(isinstance(r, list) for r in v):
        widths = {len(r) for r in v}
        if len(widths) != 1:
            raise WireSyntaxError("ragged matrix")
        return [x for row in v for x in row], (len(v), len(v[0]))
    if isinstance(v, list):
        if any(isinstance(r, list) for r in v):
            raise WireSyntaxError("mixed array nesting")
        return list(v), (len(v),)
    raise WireSyntaxError("not an array")


def values_match(expected: Any, observed: Any, compare: Compare) -> bool:
    """Apply the case's compare mode; False on any shape/type mismatch."""
    if isinstance(observed, RawOutput):
        return False
    expected = _norm(expected)
    observed = _norm(observed)
    if compare.mode == "exact":
        return _exact_equal(expected, observed)
    if compare.mode == "numeric":
        return _numeric_close(expected, observed, compare.tolerance or 0.0)
    if not isinstance(observed, list) or not isinstance(expected, list):
        return False
    try:
        exp_flat, exp_shape = _flatten_shape(expected)
        obs_flat, obs_shape = _flatten_shape(observed)
    except WireSyntaxError:
        return False
    if exp_shape != obs_shape:
        return False
    if compare.mode == "array_exact":
        return all(_exact_equal(e, o) for e, o in zip(exp_flat, obs_flat))
    return all(
        _numeric_close(e, o, compare.tolerance or 0.0)
        for e, o in zip(exp_flat, obs_flat)
    )


def compare_compatible(compare: Compare, expected_kind: str) -> bool:
    """Numeric modes are only valid for real-valued outputs."""
    if compare.mode == "numeric":
        return expected_kind == "real"
    if compare.mode == "array_numeric":
        return expected_kind == "real_array"
    if compare.mode == "exact":
        return expected_kind in SCALAR_KINDS
    if compare.mode == "array_exact":
        return expected_kind in ("int_array", "real_array", "int_matrix", "positions")
    return False


def iter_scalars(value: Any) -> Iterator[Any]:
    if isinstance(value, list):
        for v in value:
            yield from iter_scalars(v)
    else:
        yield value
