"""Subprocess sandbox for running generated programs against test cases.

Each test case runs in a fresh interpreter with its own process group,
hard resource limits, and no file or network access. Inputs arrive on
stdin in the wire format; the single result value comes back on stdout.
The parent never trusts the child: pipes are read up to a byte budget,
the process group is killed on wall timeout, and CPU time is taken from
the kernel via wait4, not from the child's own accounting.
"""

from __future__ import annotations

import ast
import math
import os
import resource
import shutil
import signal
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Iterable

from .errors import CompileError, SandboxUnavailable, SignatureMismatch
from .values import (
    Compare,
    RawOutput,
    Signature,
    WireSyntaxError,
    decode_output,
    encode_values,
    values_match,
)

PASS = "Pass"
WRONG_OUTPUT = "WrongOutput"
COMPILE_ERROR = "CompileError"
RUNTIME_ERROR = "RuntimeError"
TIMEOUT = "Timeout"
OUTPUT_LIMIT = "OutputLimit"

EXECUTION_VERDICTS = (PASS, WRONG_OUTPUT, RUNTIME_ERROR, TIMEOUT, OUTPUT_LIMIT)

_STDERR_BUDGET = 32 * 1024


@dataclass(frozen=True)
class ResourceLimits:
    wall_ms: int = 5000
    cpu_ms: int = 2000
    memory_bytes: int = 256 * 1024 * 1024
    max_stdout_bytes: int = 64 * 1024

    def __post_init__(self) -> None:
        for name in ("wall_ms", "cpu_ms", "memory_bytes", "max_stdout_bytes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.wall_ms < self.cpu_ms:
            raise ValueError("wall_ms must be >= cpu_ms")


@dataclass(frozen=True)
class ResourceUsage:
    wall_ms: int
    cpu_ms: int

    def to_json(self) -> dict:
        return {"wall_ms": self.wall_ms, "cpu_ms": self.cpu_ms}

    @classmethod
    def from_json(cls, obj: dict) -> "ResourceUsage":
        return cls(wall_ms=int(obj.get("wall_ms", 0)), cpu_ms=int(obj.get("cpu_ms", 0)))


@dataclass(frozen=True)
class ExecutionResult:
    verdict: str
    observed: Any = None
    diagnostics: str = ""
    resources: ResourceUsage = field(default_factory=lambda: ResourceUsage(0, 0))

    def to_json(self) -> dict:
        if isinstance(self.observed, RawOutput):
            observed: Any = {"raw": self.observed.text}
        else:
            observed = self.observed
        return {
            "verdict": self.verdict,
            "observed": observed,
            "diagnostics": self.diagnostics,
            "resources": self.resources.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ExecutionResult":
        observed = obj.get("observed")
        if isinstance(observed, dict) and set(observed) == {"raw"}:
            observed = RawOutput(observed["raw"])
        elif isinstance(observed, list):
            observed = _relist(observed)
        return cls(
            verdict=obj.get("verdict", ""),
            observed=observed,
            diagnostics=obj.get("diagnostics", ""),
            resources=ResourceUsage.from_json(obj.get("resources") or {}),
        )


def _relist(value: Any) -> Any:
    if isinstance(value, list):
        return [_relist(v) for v in value]
    return value


# The child process is a single self-contained script: the interpreter
# runs with -S so nothing outside the stdlib is importable. Config
# constants (SOURCE, FUNC, KINDS) are prepended at prepare time.
_HARNESS_BODY = r'''
import builtins
import io
import os
import socket
import sys

_REAL_OUT = sys.stdout
_STDIN = sys.stdin.buffer.read()
_JOB_DIR = os.path.realpath(os.getcwd())
CAPTURE_BUDGET = int(os.environ.get("HARNESS_PRINT_BUDGET", "1048576"))


def _fail(code, msg):
    sys.stderr.write(msg + "\n")
    sys.stderr.flush()
    os._exit(code)


class _CaptureOverflow(BaseException):
    pass


class _CappedCapture(io.StringIO):
    """Swallows the program's prints, up to a budget."""

    def __init__(self, budget):
        io.StringIO.__init__(self)
        self._left = budget

    def write(self, s):
        self._left -= len(s)
        if self._left < 0:
            raise _CaptureOverflow()
        return io.StringIO.write(self, s)


class _Reader(object):
    def __init__(self, data):
        self._buf = io.BytesIO(data)

    def _raw_line(self):
        line = self._buf.readline()
        if not line:
            _fail(4, "harness: truncated input stream")
        return line

    def _read_string(self, raw):
        _, length_s, payload = raw.split(b":", 2)
        length = int(length_s)
        while len(payload) < length:
            chunk = self._buf.readline()
            if not chunk:
                _fail(4, "harness: truncated string input")
            payload += chunk
        term = payload[length:]
        payload = payload[:length]
        if term == b"":
            term = self._buf.readline()
        if term not in (b"", b"\n", b"\r\n"):
            _fail(4, "harness: garbage after string input")
        return payload.decode("utf-8")

    def _scalar(self):
        raw = self._raw_line()
        if raw.startswith(b"S:"):
            return self._read_string(raw)
        line = raw.rstrip(b"\r\n").decode("utf-8")
        if line and not set(line) - set("-0123456789"):
            return int(line)
        return float(line)

    def value(self):
        raw = self._raw_line()
        if raw.startswith(b"S:"):
            return self._read_string(raw)
        line = raw.rstrip(b"\r\n").decode("utf-8")
        if line.startswith("A:"):
            return [self._scalar() for _ in range(int(line[2:]))]
        if line.startswith("M:"):
            _, rows, cols = line.split(":")
            return [
                [self._scalar() for _ in range(int(cols))]
                for _ in range(int(rows))
            ]
        if line and not set(line) - set("-0123456789"):
            return int(line)
        return float(line)


def _fmt_real(v):
    if v != v or v in (float("inf"), float("-inf")):
        return repr(v)
    s = "%.9g" % v
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def _enc_scalar(v, out):
    if isinstance(v, bool):
        out.append("1" if v else "0")
    elif isinstance(v, int):
        out.append(str(v))
    elif isinstance(v, float):
        out.append(_fmt_real(v))
    elif isinstance(v, str):
        out.append("S:%d:%s" % (len(v.encode("utf-8")), v))
    else:
        raise TypeError("result of type %s is not encodable" % type(v).__name__)


def _encode_result(v):
    out = []
    if isinstance(v, tuple):
        v = list(v)
    if isinstance(v, list):
        if v and all(isinstance(r, (list, tuple)) for r in v):
            rows = [list(r) for r in v]
            if len(set(len(r) for r in rows)) != 1:
                raise TypeError("ragged matrix result")
            out.append("M:%d:%d" % (len(rows), len(rows[0])))
            for r in rows:
                for x in r:
                    _enc_scalar(x, out)
        else:
            out.append("A:%d" % len(v))
            for x in v:
                _enc_scalar(x, out)
    else:
        _enc_scalar(v, out)
    return "\n".join(out) + "\n"


reader = _Reader(_STDIN)
args = []
for kind in KINDS:
    v = reader.value()
    if kind == "positions":
        v = [(r[0], r[1]) for r in v]
    elif kind == "bool":
        v = bool(v)
    args.append(v)


def _deny(*a, **k):
    raise PermissionError("file writes and network access are disabled in the sandbox")


_real_open = builtins.open


def _readonly_open(file, mode="r", *a, **k):
    # Reads inside the job directory stay allowed; everything else is not.
    if isinstance(file, int) or any(c in str(mode) for c in "wax+"):
        _deny()
    path = os.path.realpath(os.fspath(file))
    if path != _JOB_DIR and not path.startswith(_JOB_DIR + os.sep):
        _deny()
    return _real_open(file, mode, *a, **k)


builtins.open = _readonly_open
io.open = _readonly_open
os.open = _deny
os.fdopen = _deny
for _name in (
    "remove", "unlink", "rename", "replace", "rmdir", "mkdir", "makedirs",
    "removedirs", "truncate", "link", "symlink", "chmod", "chown", "system",
    "fork", "forkpty", "posix_spawn", "posix_spawnp", "execv", "execve",
    "execvp", "execvpe", "spawnv", "spawnve",
):
    if hasattr(os, _name):
        setattr(os, _name, _deny)
socket.socket = _deny
socket.socketpair = _deny
socket.create_connection = _deny
socket.create_server = _deny

sys.stdin = io.StringIO("")
_capture = _CappedCapture(CAPTURE_BUDGET)
sys.stdout = _capture

ns = {"__name__": "__student__"}
try:
    exec(compile(SOURCE, "<student>", "exec"), ns)
    fn = ns.get(FUNC)
    if not callable(fn):
        _fail(5, "harness: function %r not defined after exec" % FUNC)
    result = fn(*args)
except _CaptureOverflow:
    sys.stdout = _REAL_OUT
    _fail(6, "harness: print output budget exceeded")
except SystemExit:
    raise
except BaseException:
    sys.stdout = _REAL_OUT
    import traceback

    traceback.print_exc()
    sys.exit(1)

sys.stdout = _REAL_OUT
try:
    payload = _encode_result(result)
except TypeError as exc:
    _fail(3, "harness: %s" % exc)
_REAL_OUT.write(payload)
_REAL_OUT.flush()
'''


@dataclass
class PreparedProgram:
    """A compiled program staged in its own scratch directory.

    A handle may be reused across cases but never runs two at once; the
    lock serializes concurrent callers.
    """

    signature: Signature
    source: str
    job_dir: str
    harness_path: str
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def cleanup(self) -> None:
        shutil.rmtree(self.job_dir, ignore_errors=True)

    def __enter__(self) -> "PreparedProgram":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.cleanup()


@dataclass(frozen=True)
class SimpleCase:
    """Minimal case shape accepted by execute_test_case."""

    inputs: tuple
    expected: tuple
    compare: Compare


def prepare_program(code: str, signature: Signature) -> PreparedProgram:
    """Compile-check `code`, verify its interface, stage a harness.

    Raises CompileError on syntax problems and SignatureMismatch when the
    required function is missing, async, or has the wrong arity.
    """
    try:
        tree = ast.parse(code)
    except SyntaxError as exc:
        raise CompileError(f"line {exc.lineno}: {exc.msg}")
    except (ValueError, RecursionError) as exc:
        raise CompileError(str(exc) or "unparseable source")
    target = None
    for node in tree.body:
        if isinstance(node, ast.AsyncFunctionDef) and node.name == signature.name:
            raise SignatureMismatch(f"{signature.name} must be a regular function")
        if isinstance(node, ast.FunctionDef) and node.name == signature.name:
            target = node
    if target is None:
        raise SignatureMismatch(f"no top-level function named {signature.name!r}")
    arity = len(target.args.posonlyargs) + len(target.args.args)
    want = len(signature.param_kinds)
    if arity != want:
        raise SignatureMismatch(
            f"{signature.name} takes {arity} parameters, expected {want}"
        )
    required_kw = len(target.args.kwonlyargs) - sum(
        1 for d in target.args.kw_defaults if d is not None
    )
    if required_kw:
        raise SignatureMismatch(
            f"{signature.name} has keyword-only parameters without defaults"
        )

    job_dir = tempfile.mkdtemp(prefix="grader-job-")
    header = (
        "SOURCE = " + repr(code) + "\n"
        "FUNC = " + repr(signature.name) + "\n"
        "KINDS = " + repr(list(signature.param_kinds)) + "\n"
    )
    harness_path = os.path.join(job_dir, "harness.py")
    with open(harness_path, "w", encoding="utf-8") as fh:
        fh.write(header + _HARNESS_BODY)
    return PreparedProgram(
        signature=signature, source=code, job_dir=job_dir, harness_path=harness_path
    )


def _rlimit_setter(limits: ResourceLimits):
    cpu_s = max(1, math.ceil(limits.cpu_ms / 1000))

    def _apply() -> None:
        resource.setrlimit(resource.RLIMIT_CPU, (cpu_s, cpu_s + 1))
        resource.setrlimit(resource.RLIMIT_AS, (limits.memory_bytes, limits.memory_bytes))
        resource.setrlimit(resource.RLIMIT_FSIZE, (0, 0))
        resource.setrlimit(resource.RLIMIT_CORE, (0, 0))
        try:
            resource.setrlimit(resource.RLIMIT_NPROC, (64, 64))
        except (ValueError, OSError):
            pass

    return _apply


class _Drain(threading.Thread):
    """Reads a pipe up to a byte budget.

    Past the budget either stop reading (stdout: the stalled child gets
    killed and the verdict is OutputLimit) or keep discarding (stderr:
    overflow there is not a verdict, so never let it block the child).
    """

    def __init__(self, stream, budget: int, discard_past_budget: bool):
        super().__init__(daemon=True)
        self._stream = stream
        self._budget = budget
        self._discard = discard_past_budget
        self.data = b""
        self.overflowed = threading.Event()

    def run(self) -> None:
        chunks: list[bytes] = []
        total = 0
        try:
            while True:
                chunk = self._stream.read(8192)
                if not chunk:
                    break
                if total <= self._budget:
                    chunks.append(chunk)
                total += len(chunk)
                if total > self._budget:
                    self.overflowed.set()
                    if not self._discard:
                        break
        except (OSError, ValueError):
            pass
        self.data = b"".join(chunks)[: self._budget]


def _tail(text: str, limit: int = 2000) -> str:
    return text if len(text) <= limit else "...\n" + text[-limit:]


def _killpg(pid: int) -> None:
    try:
        os.killpg(pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError, OSError):
        pass


def execute_test_case(
    prepared: PreparedProgram,
    case: Any,
    limits: ResourceLimits | None = None,
) -> ExecutionResult:
    """Run one test case (anything with .inputs/.expected/.compare)."""
    with prepared._lock:
        return _run_case(prepared, case.inputs, case.expected, case.compare, limits)


def _run_case(
    prepared: PreparedProgram,
    inputs: Any,
    expected: tuple[str, Any],
    compare: Compare,
    limits: ResourceLimits | None = None,
) -> ExecutionResult:
    limits = limits or ResourceLimits()
    stdin_data = encode_values(list(inputs))
    env = {
        "PYTHONHASHSEED": "0",
        "PYTHONIOENCODING": "utf-8",
        "PATH": "/usr/bin:/bin",
        "HOME": prepared.job_dir,
        "HARNESS_PRINT_BUDGET": str(16 * limits.max_stdout_bytes),
    }
    # -S/-s keep site customization out; -E is deliberately absent so the
    # pinned PYTHONHASHSEED above takes effect.
    try:
        proc = subprocess.Popen(
            [sys.executable, "-B", "-S", "-s", "-u", prepared.harness_path],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            env=env,
            cwd=prepared.job_dir,
            start_new_session=True,
            preexec_fn=_rlimit_setter(limits),
        )
    except OSError as exc:
        raise SandboxUnavailable(f"cannot spawn sandbox interpreter: {exc}")
    start = time.monotonic()

    def _feed() -> None:
        try:
            proc.stdin.write(stdin_data)
            proc.stdin.close()
        except (BrokenPipeError, OSError, ValueError):
            pass

    feeder = threading.Thread(target=_feed, daemon=True)
    feeder.start()
    out_reader = _Drain(proc.stdout, limits.max_stdout_bytes, discard_past_budget=False)
    err_reader = _Drain(proc.stderr, _STDERR_BUDGET, discard_past_budget=True)
    out_reader.start()
    err_reader.start()

    reaped = threading.Event()
    wait_status: list[Any] = [None, None]

    def _reap() -> None:
        try:
            _, status, ru = os.wait4(proc.pid, 0)
            wait_status[0] = status
            wait_status[1] = ru
        except ChildProcessError:
            pass
        reaped.set()

    reaper = threading.Thread(target=_reap, daemon=True)
    reaper.start()

    deadline = start + limits.wall_ms / 1000.0
    killed_wall = False
    killed_overflow = False
    while not reaped.wait(0.01):
        if not killed_overflow and out_reader.overflowed.is_set():
            killed_overflow = True
            _killpg(proc.pid)
        if not killed_wall and not killed_overflow and time.monotonic() > deadline:
            killed_wall = True
            _killpg(proc.pid)
    wall_ms = int((time.monotonic() - start) * 1000)

    # Sweep stragglers the child may have left in its process group, then
    # let the readers hit EOF.
    _killpg(proc.pid)
    status, ru = wait_status
    if status is None:
        proc.returncode = proc.returncode if proc.returncode is not None else 1
    elif os.WIFSIGNALED(status):
        proc.returncode = -os.WTERMSIG(status)
    elif os.WIFEXITED(status):
        proc.returncode = os.WEXITSTATUS(status)
    else:
        proc.returncode = 1
    cpu_ms = int((ru.ru_utime + ru.ru_stime) * 1000) if ru is not None else 0
    out_reader.join(timeout=2.0)
    err_reader.join(timeout=2.0)
    feeder.join(timeout=2.0)
    for stream in (proc.stdin, proc.stdout, proc.stderr):
        try:
            stream.close()
        except (OSError, ValueError):
            pass

    usage = ResourceUsage(wall_ms=wall_ms, cpu_ms=cpu_ms)
    stderr_text = err_reader.data.decode("utf-8", "replace")
    rc = proc.returncode

    if killed_overflow:
        return ExecutionResult(OUTPUT_LIMIT, None, "stdout byte budget exceeded", usage)
    if killed_wall:
        return ExecutionResult(TIMEOUT, None, "wall clock limit exceeded", usage)
    if rc == -signal.SIGXCPU or (rc == -signal.SIGKILL and cpu_ms >= limits.cpu_ms):
        return ExecutionResult(TIMEOUT, None, "cpu time limit exceeded", usage)
    if rc < 0:
        return ExecutionResult(
            RUNTIME_ERROR, None, f"terminated by signal {-rc}", usage
        )
    if rc == 6:
        return ExecutionResult(OUTPUT_LIMIT, None, "print output budget exceeded", usage)
    if rc != 0:
        return ExecutionResult(RUNTIME_ERROR, None, _tail(stderr_text), usage)

    try:
        observed: Any = decode_output(out_reader.data)
    except WireSyntaxError:
        observed = RawOutput(out_reader.data.decode("utf-8", "replace"))
    if values_match(expected[1], observed, compare):
        return ExecutionResult(PASS, observed, "", usage)
    return ExecutionResult(WRONG_OUTPUT, observed, "", usage)


def run_suite(
    prepared: PreparedProgram,
    cases: Iterable[Any],
    limits: ResourceLimits | None = None,
) -> list[ExecutionResult]:
    """Run every case in order; never short-circuits on failure.

    Each case must expose .inputs, .expected, and .compare.
    """
    return [execute_test_case(prepared, case, limits) for case in cases]
