"""C source handling: assert normalization/extraction, call graphs, rendering.

Assertion recognition is deliberately lexical: the token ``assert`` at
statement position, followed by a parenthesized expression and ``;``.
``static_assert``, asserts inside comments or string literals, and asserts
embedded in an unbraced ``if`` body are left alone.  Everything downstream
(logical lines, rendering, fact embedding) works on the normalized form in
which each recognized assert occupies exactly one physical line.
"""

from __future__ import annotations

import enum
import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    ConfigurationError,
    ConsistencyError,
    FrontendError,
    NormalizationError,
    ToolMissingError,
)
from .model import Assertion, FunctionInfo, ProgramModel

DEFAULT_COMPILER = "gcc"
# Missing includes must fail the gate, so implicit declarations are errors.
DEFAULT_COMPILE_FLAGS = ("-std=c11", "-fsyntax-only", "-Wall",
                         "-Werror=implicit-function-declaration")


# ---------------------------------------------------------------------------
# lexical scanning
# ---------------------------------------------------------------------------

def code_mask(source: str) -> list[bool]:
    """True for each character that is code (not comment, string, or char)."""
    mask = [True] * len(source)
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        nxt = source[i + 1] if i + 1 < n else ""
        if c == "/" and nxt == "/":
            j = source.find("\n", i)
            j = n if j == -1 else j
            for k in range(i, j):
                mask[k] = False
            i = j
        elif c == "/" and nxt == "*":
            j = source.find("*/", i + 2)
            j = n if j == -1 else j + 2
            for k in range(i, j):
                mask[k] = False
            i = j
        elif c in "\"'":
            quote = c
            mask[i] = False
            j = i + 1
            while j < n:
                if source[j] == "\\":
                    mask[j] = False
                    if j + 1 < n:
                        mask[j + 1] = False
                    j += 2
                    continue
                mask[j] = False
                if source[j] == quote:
                    j += 1
                    break
                j += 1
            i = j
        else:
            i += 1
    return mask


@dataclass(frozen=True)
class AssertStatement:
    """Span of one recognized assert statement in a source string."""

    start: int          # offset of the 'assert' token
    end: int            # offset one past the terminating ';'
    pred_start: int     # offset just inside '('
    pred_end: int       # offset of ')'
    line: int           # 1-based physical line of the token

    def predicate(self, source: str) -> str:
        return source[self.pred_start:self.pred_end].strip()


_ASSERT_TOKEN = re.compile(r"\bassert\b")
_STATEMENT_LEADERS = {";", "{", "}", ":"}


def _line_of(source: str, offset: int) -> int:
    return source.count("\n", 0, offset) + 1


def find_assert_statements(source: str) -> list[AssertStatement]:
    """Locate every statement-position ``assert(...);`` in document order."""
    mask = code_mask(source)
    found = []
    for m in _ASSERT_TOKEN.finditer(source):
        start = m.start()
        if not mask[start]:
            continue
        # statement position: previous code character is a statement boundary
        j = start - 1
        while j >= 0 and (not mask[j] or source[j].isspace()):
            j -= 1
        if j >= 0 and source[j] not in _STATEMENT_LEADERS:
            continue
        # must be followed by a parenthesized expression
        k = m.end()
        while k < len(source) and (not mask[k] or source[k].isspace()):
            k += 1
        if k >= len(source) or source[k] != "(":
            continue
        depth = 0
        pred_start = k + 1
        pred_end = -1
        while k < len(source):
            if mask[k]:
                if source[k] == "(":
                    depth += 1
                elif source[k] == ")":
                    depth -= 1
                    if depth == 0:
                        pred_end = k
                        break
            k += 1
        if pred_end == -1:
            raise NormalizationError("unbalanced parentheses in assert",
                                     _line_of(source, start))
        k = pred_end + 1
        while k < len(source) and (not mask[k] or source[k].isspace()):
            k += 1
        if k >= len(source) or source[k] != ";":
            raise NormalizationError("missing ';' after assert",
                                     _line_of(source, start))
        found.append(AssertStatement(start, k + 1, pred_start, pred_end,
                                     _line_of(source, start)))
    return found


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------

def _flatten_predicate(source: str, stmt: AssertStatement) -> str:
    """Collapse newline-containing whitespace runs in the predicate to spaces."""
    mask = code_mask(source)
    out = []
    i = stmt.pred_start
    while i < stmt.pred_end:
        if mask[i] and source[i].isspace():
            j = i
            while j < stmt.pred_end and mask[j] and source[j].isspace():
                j += 1
            run = source[i:j]
            out.append(" " if "\n" in run else run)
            i = j
        else:
            out.append(source[i])
            i += 1
    return "".join(out).strip()


def _needs_rewrite(source: str, stmt: AssertStatement) -> bool:
    if "\n" in source[stmt.start:stmt.end]:
        return True
    return _prefix_has_code(source, stmt) or _suffix_has_code(source, stmt)


def _prefix_has_code(source: str, stmt: AssertStatement) -> bool:
    mask = code_mask(source)
    bol = source.rfind("\n", 0, stmt.start) + 1
    return any(mask[i] and not source[i].isspace() for i in range(bol, stmt.start))


def _suffix_has_code(source: str, stmt: AssertStatement) -> bool:
    mask = code_mask(source)
    eol = source.find("\n", stmt.end)
    eol = len(source) if eol == -1 else eol
    return any(mask[i] and not source[i].isspace() for i in range(stmt.end, eol))


def normalize_assertions(source: str) -> str:
    """Put every recognized assert statement alone on one physical line.

    Idempotent; sources without multi-line or line-sharing asserts pass
    through byte-identical.
    """
    text = source
    while True:
        statements = find_assert_statements(text)
        target = next((s for s in statements if _needs_rewrite(text, s)), None)
        if target is None:
            return text
        bol = text.rfind("\n", 0, target.start) + 1
        indent_match = re.match(r"[ \t]*", text[bol:])
        indent = indent_match.group(0) if indent_match else ""
        flat = f"assert({_flatten_predicate(text, target)});"
        before = text[:target.start]
        after = text[target.end:]
        if _prefix_has_code(text, target):
            before = before.rstrip(" \t") + "\n" + indent
        if _suffix_has_code(text, target):
            after = "\n" + indent + after.lstrip(" \t")
        text = before + flat + after


# ---------------------------------------------------------------------------
# compile gate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompileDiagnostics:
    success: bool
    messages: tuple[str, ...]

    def text(self) -> str:
        return "\n".join(self.messages)


def compile_check(source: str, compiler: str = DEFAULT_COMPILER,
                  flags: Sequence[str] = DEFAULT_COMPILE_FLAGS) -> CompileDiagnostics:
    """Run the external compiler in syntax-only mode and capture diagnostics."""
    if shutil.which(compiler) is None:
        raise ToolMissingError(compiler, "configure the compiler path")
    with tempfile.TemporaryDirectory(prefix="cofact-cc-") as tmp:
        path = Path(tmp) / "prog.c"
        path.write_text(source, encoding="utf-8")
        proc = subprocess.run([compiler, *flags, str(path)],
                              capture_output=True, text=True)
    messages = tuple(proc.stderr.splitlines())
    return CompileDiagnostics(success=proc.returncode == 0, messages=messages)


# ---------------------------------------------------------------------------
# parsing (libclang)
# ---------------------------------------------------------------------------

_CLANG_ARGS = ["-std=c11"]


def _clang_index():
    from clang import cindex
    return cindex


def parse_program(source: str, unwind_bound: int = 5) -> ProgramModel:
    """Parse normalized C text into a program model with function extents."""
    cindex = _clang_index()
    index = cindex.Index.create()
    tu = index.parse("input.c", args=_CLANG_ARGS,
                     unsaved_files=[("input.c", source)])
    errors = [str(d) for d in tu.diagnostics if d.severity >= d.Error]
    if errors:
        raise FrontendError("C parse failed", errors)

    functions = []
    for cur in tu.cursor.get_children():
        if cur.kind != cindex.CursorKind.FUNCTION_DECL or not cur.is_definition():
            continue
        if cur.location.file is None or cur.location.file.name != "input.c":
            continue
        body = next((ch for ch in cur.get_children()
                     if ch.kind == cindex.CursorKind.COMPOUND_STMT), None)
        if body is None:
            continue
        functions.append(FunctionInfo(
            name=cur.spelling,
            start_line=cur.extent.start.line,
            end_line=cur.extent.end.line,
            body_open_line=body.extent.start.line,
            body_close_line=body.extent.end.line,
        ))
    functions.sort(key=lambda f: f.start_line)

    covered = set()
    for fn in functions:
        covered.update(range(fn.start_line, fn.end_line + 1))
    lines = source.splitlines()
    global_lines = [ln for i, ln in enumerate(lines, start=1) if i not in covered]
    return ProgramModel(source=source, global_code="\n".join(global_lines),
                        functions=tuple(functions), unwind_bound=unwind_bound)


# ---------------------------------------------------------------------------
# logical lines and assertion extraction
# ---------------------------------------------------------------------------

def _line_has_code(line: str) -> bool:
    mask = code_mask(line)
    return any(mask[i] and not ch.isspace() for i, ch in enumerate(line))


def _classify_lines(model: ProgramModel) -> tuple[set[int], set[int]]:
    """Return (assert_lines, code_lines) as 1-based physical line sets."""
    assert_lines = {s.line for s in find_assert_statements(model.source)}
    code_lines = {i for i, ln in enumerate(model.lines(), start=1)
                  if _line_has_code(ln)}
    return assert_lines, code_lines


def _statement_lines(fn: FunctionInfo, assert_lines: set[int],
                     code_lines: set[int]) -> list[int]:
    """Token-bearing non-assert lines strictly inside the function body."""
    return [i for i in range(fn.body_open_line + 1, fn.body_close_line)
            if i in code_lines and i not in assert_lines]


def logical_line_of(fn: FunctionInfo, physical_line: int, assert_lines: set[int],
                    code_lines: set[int], inclusive: bool = False) -> int:
    """Count of body statement lines before ``physical_line``.

    With ``inclusive`` the line itself counts when it is a statement line;
    call sites use that so assertions written after a call on the same
    statement see the callee's facts while earlier ones do not.
    """
    stmts = _statement_lines(fn, assert_lines, code_lines)
    if inclusive:
        return sum(1 for s in stmts if s <= physical_line)
    return sum(1 for s in stmts if s < physical_line)


def skeleton_length(model: ProgramModel, function: str) -> int:
    assert_lines, code_lines = _classify_lines(model)
    return len(_statement_lines(model.function(function), assert_lines, code_lines))


def extract_assertions(model: ProgramModel) -> list[Assertion]:
    """All recognized assertions with logical lines, in document order."""
    assert_lines, code_lines = _classify_lines(model)
    out = []
    for stmt in find_assert_statements(model.source):
        owner = next((fn for fn in model.functions
                      if fn.start_line <= stmt.line <= fn.end_line), None)
        if owner is None:
            raise FrontendError(
                f"assert on line {stmt.line} is outside every function extent")
        if not (owner.body_open_line < stmt.line < owner.body_close_line):
            raise FrontendError(
                f"assert on line {stmt.line} is outside the body of {owner.name}")
        out.append(Assertion(
            function=owner.name,
            logical_line=logical_line_of(owner, stmt.line, assert_lines, code_lines),
            predicate=stmt.predicate(model.source),
            source_line=stmt.line,
        ))
    return out


# ---------------------------------------------------------------------------
# call graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CallEdge:
    caller: str
    callee: str
    logical_line: int


@dataclass(frozen=True)
class CallGraph:
    """Direct calls between extracted functions, in per-caller document order."""

    nodes: frozenset[str]
    edges: tuple[CallEdge, ...]

    def edges_from(self, caller: str) -> list[CallEdge]:
        return [e for e in self.edges if e.caller == caller]


def build_call_graph(model: ProgramModel) -> CallGraph:
    """Direct call edges between extracted functions, with call-site lines.

    Calls to anything that is not an extracted function (asserts expand to
    library aborts, stdio, intrinsics) contribute no edges.
    """
    cindex = _clang_index()
    index = cindex.Index.create()
    tu = index.parse("input.c", args=_CLANG_ARGS,
                     unsaved_files=[("input.c", model.source)])
    names = model.function_names()
    assert_lines, code_lines = _classify_lines(model)

    raw: list[tuple[str, str, int, int]] = []  # caller, callee, line, col

    def walk(node, caller: str):
        for child in node.get_children():
            if child.kind == cindex.CursorKind.CALL_EXPR:
                callee = child.spelling
                loc = child.location
                if callee in names and loc.file is not None:
                    raw.append((caller, callee, loc.line, loc.column))
            walk(child, caller)

    for cur in tu.cursor.get_children():
        if cur.kind != cindex.CursorKind.FUNCTION_DECL or not cur.is_definition():
            continue
        if cur.location.file is None or cur.location.file.name != "input.c":
            continue
        if cur.spelling in names:
            walk(cur, cur.spelling)

    edges = []
    seen = set()
    for caller, callee, line, _col in sorted(raw, key=lambda r: (r[2], r[3])):
        fn = model.function(caller)
        lc = logical_line_of(fn, line, assert_lines, code_lines, inclusive=True)
        key = (caller, callee, lc)
        if key in seen:
            continue
        seen.add(key)
        edges.append(CallEdge(caller, callee, lc))
    return CallGraph(nodes=frozenset(names), edges=tuple(edges))


# ---------------------------------------------------------------------------
# role rendering
# ---------------------------------------------------------------------------

class AssertionRole(enum.Enum):
    KEEP_AS_ASSERT = "keep"
    CONVERT_TO_ASSUME = "assume"
    DROP = "drop"


@dataclass(frozen=True)
class AssumeDialect:
    """How one checker family spells assumptions, plus a compile preamble."""

    name: str
    intrinsic: str
    preamble: str


_DIALECTS: dict[str, AssumeDialect] = {}


def register_dialect(dialect: AssumeDialect) -> None:
    _DIALECTS[dialect.name] = dialect


def get_dialect(name: str) -> AssumeDialect:
    try:
        return _DIALECTS[name]
    except KeyError:
        raise ConfigurationError(
            f"unregistered assume dialect: {name!r} "
            f"(known: {sorted(_DIALECTS)})") from None


register_dialect(AssumeDialect(
    name="cbmc",
    intrinsic="__CPROVER_assume",
    preamble="#ifndef __CPROVER__\nvoid __CPROVER_assume(int cond);\n#endif",
))
register_dialect(AssumeDialect(
    name="esbmc",
    intrinsic="__ESBMC_assume",
    preamble="#ifndef __ESBMC__\nvoid __ESBMC_assume(int cond);\n#endif",
))
# Used by enumeration harnesses that compile and run the program.
register_dialect(AssumeDialect(
    name="exec",
    intrinsic="cofact_assume",
    preamble="void cofact_assume(int cond);",
))


def render_with_roles(model: ProgramModel,
                      roles: Mapping[Assertion, AssertionRole],
                      solver_dialect: str) -> str:
    """Rewrite the program with each assertion kept, assumed, or dropped.

    All-keep renderings are byte-identical to the input; the dialect
    preamble is prepended only when an assume is actually emitted.
    """
    dialect = get_dialect(solver_dialect)
    extracted = extract_assertions(model)
    role_by_line: dict[int, tuple[Assertion, AssertionRole]] = {}
    for assertion in extracted:
        role = roles.get(assertion)
        if role is None:
            raise ConsistencyError(
                f"no role for extracted assertion at line {assertion.source_line}")
        role_by_line[assertion.source_line] = (assertion, role)

    statements = {s.line: s for s in find_assert_statements(model.source)}
    out_lines = []
    any_assume = False
    for lineno, line in enumerate(model.lines(), start=1):
        entry = role_by_line.get(lineno)
        if entry is None:
            out_lines.append(line)
            continue
        assertion, role = entry
        if role is AssertionRole.KEEP_AS_ASSERT:
            out_lines.append(line)
        elif role is AssertionRole.CONVERT_TO_ASSUME:
            stmt = statements[lineno]
            bol = model.source.rfind("\n", 0, stmt.start) + 1
            prefix = model.source[bol:stmt.start]
            eol = model.source.find("\n", stmt.end)
            eol = len(model.source) if eol == -1 else eol
            suffix = model.source[stmt.end:eol]
            out_lines.append(
                f"{prefix}{dialect.intrinsic}({assertion.predicate});{suffix}")
            any_assume = True
        elif role is AssertionRole.DROP:
            continue
    text = "\n".join(out_lines)
    if model.source.endswith("\n"):
        text += "\n"
    if any_assume:
        text = dialect.preamble + "\n" + text
    return text


def strip_assertions(model: ProgramModel) -> str:
    """The assertion-free skeleton of the whole program."""
    roles = {a: AssertionRole.DROP for a in extract_assertions(model)}
    return render_with_roles(model, roles, "cbmc")
