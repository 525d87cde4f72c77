"""Reading and writing protocol files.

The format is line oriented; ``#`` starts a comment and a statement continues
onto following lines while a ``[`` is unclosed::

    layout 4 2
    param p 0.1
    operator even = [[1,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,1]]
    operator odd  = [[0,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,0]]
    state vector [sqrt(p/3), sqrt(p/3), sqrt((1-p)/2), 0,
                  sqrt((1-p)/2), 0, 0, sqrt(p/3)]
    measure 1 even odd as m1
    when m1=0 unitary 2 [[0,1],[1,0]]
    broadcast 1 "done"

Matrix entries are complex literals (``0.5``, ``-2i``, ``1e-3+0.5i``) or
arithmetic over declared parameters using ``sqrt exp cos sin conj``, ``pi``
and the imaginary unit ``i``. Parties are numbered from 1.
"""

from __future__ import annotations

import ast
import cmath
import re
from dataclasses import dataclass, field

import numpy as np

from .engine import Broadcast, Measure, MeasurementSet, Protocol, Unitary
from .errors import LayoutError, ParseError, ProtocolError
from .tensor_core import GlobalState, PartyLayout, projector, validate_density
from .tolerances import DEFAULT, Tolerances

__all__ = ["ProtocolFile", "parse_protocol", "serialize_protocol", "parse_complex", "format_complex"]


@dataclass(eq=False)
class ProtocolFile:
    protocol: Protocol
    initial: GlobalState | None = None
    params: dict[str, float] = field(default_factory=dict)
    operators: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def layout(self) -> PartyLayout:
        return self.protocol.layout


# --- scalars

_LITERAL = re.compile(r"[+-]?[0-9.eE+\-]*i?")
_FUNCS = {"sqrt": cmath.sqrt, "exp": cmath.exp, "cos": cmath.cos, "sin": cmath.sin, "conj": lambda z: complex(z).conjugate()}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}


def _eval_node(node, names):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, names)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return complex(node.value)
    if isinstance(node, ast.Name):
        if node.id not in names:
            raise ValueError(f"unknown name {node.id!r}")
        return complex(names[node.id])
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        v = _eval_node(node.operand, names)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left, names), _eval_node(node.right, names))
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCS
        and len(node.args) == 1
        and not node.keywords
    ):
        return complex(_FUNCS[node.func.id](_eval_node(node.args[0], names)))
    raise ValueError(f"unsupported expression {ast.dump(node)[:40]}")


def parse_complex(text: str, params: dict[str, float] | None = None) -> complex:
    """Evaluate a complex literal such as ``1-2.5i`` or a parameter expression."""
    t = text.strip().replace(" ", "")
    if not t:
        raise ValueError("empty number")
    if _LITERAL.fullmatch(t) and any(c.isdigit() for c in t) or t in ("i", "+i", "-i"):
        try:
            return complex(t[:-1] + "j" if t.endswith("i") else t)
        except ValueError:
            pass
    names = {"i": 1j, "pi": cmath.pi}
    names.update(params or {})
    try:
        tree = ast.parse(text.strip(), mode="eval")
        value = _eval_node(tree, names)
    except SyntaxError:
        raise ValueError(f"cannot parse number {text.strip()!r}") from None
    except ZeroDivisionError:
        raise ValueError(f"division by zero in {text.strip()!r}") from None
    return value


def format_complex(z: complex) -> str:
    """Exact (repr-precision) ``a+bi`` literal."""
    z = complex(z)
    re_, im = float(z.real), float(z.imag)
    if im == 0.0:
        return repr(re_)
    sign = "-" if im < 0 or (im == 0 and str(im).startswith("-")) else "+"
    return f"{re_!r}{sign}{abs(im)!r}i"


# --- tokens


@dataclass
class _Tok:
    kind: str  # "word", "group", "string"
    text: str
    line: int
    col: int


def _strip_comment(line: str) -> str:
    in_str = False
    for k, ch in enumerate(line):
        if ch == '"':
            in_str = not in_str
        elif ch == "#" and not in_str:
            return line[:k]
    return line


def _statements(text: str):
    """Yield token lists, one per statement, joining lines inside brackets."""
    lines = text.splitlines()
    issues = []
    current: list[_Tok] = []
    depth = 0
    group: list[str] = []
    group_start = (0, 0)
    for ln, raw in enumerate(lines, start=1):
        line = _strip_comment(raw)
        col = 0
        while col < len(line):
            ch = line[col]
            if depth > 0:
                group.append(ch)
                if ch == "[":
                    depth += 1
                elif ch == "]":
                    depth -= 1
                    if depth == 0:
                        current.append(_Tok("group", "".join(group), *group_start))
                        group = []
                col += 1
            elif ch.isspace():
                col += 1
            elif ch == "[":
                depth = 1
                group = ["["]
                group_start = (ln, col + 1)
                col += 1
            elif ch == "]":
                issues.append((ln, col + 1, "unmatched ']'"))
                col += 1
            elif ch == '"':
                end = line.find('"', col + 1)
                if end < 0:
                    issues.append((ln, col + 1, "unterminated string"))
                    col = len(line)
                else:
                    current.append(_Tok("string", line[col + 1 : end], ln, col + 1))
                    col = end + 1
            else:
                start = col
                while col < len(line) and not line[col].isspace() and line[col] not in '["':
                    col += 1
                current.append(_Tok("word", line[start:col], ln, start + 1))
        if depth > 0:
            group.append("\n")
        elif current:
            yield current, issues
            current, issues = [], []
    if depth > 0:
        issues.append((group_start[0], group_start[1], "unclosed '['"))
    if current or issues:
        yield current, issues


def _split_group(tok: _Tok):
    """Parse a bracket group into nested lists of ``(text, line, col)`` leaves."""
    s = tok.text
    pos = 0
    line, col = tok.line, tok.col

    def advance(n=1):
        nonlocal pos, line, col
        for _ in range(n):
            if s[pos] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            pos += 1

    def skip_ws():
        while pos < len(s) and s[pos].isspace():
            advance()

    def parse_list():
        items = []
        advance()  # '['
        skip_ws()
        if pos < len(s) and s[pos] == "]":
            advance()
            return items
        while True:
            skip_ws()
            if pos < len(s) and s[pos] == "[":
                items.append(parse_list())
            else:
                start_line, start_col, start = line, col, pos
                paren = 0
                while pos < len(s) and not (paren == 0 and s[pos] in ",]"):
                    if s[pos] == "(":
                        paren += 1
                    elif s[pos] == ")":
                        paren -= 1
                    advance()
                items.append((s[start:pos].strip(), start_line, start_col))
            skip_ws()
            if pos >= len(s):
                raise ParseError([(line, col, "unexpected end of bracket group")])
            if s[pos] == ",":
                advance()
                continue
            if s[pos] == "]":
                advance()
                return items
            raise ParseError([(line, col, f"unexpected character {s[pos]!r}")])

    return parse_list()


def _eval_array(tok: _Tok, params, issues) -> np.ndarray | None:
    try:
        nested = _split_group(tok)
    except ParseError as exc:
        issues.extend(exc.issues)
        return None

    def leaf(item):
        text, ln, col = item
        try:
            return parse_complex(text, params)
        except ValueError as exc:
            issues.append((ln, col, str(exc)))
            return 0j

    if nested and all(isinstance(r, list) for r in nested):
        widths = {len(r) for r in nested}
        if len(widths) != 1 or any(isinstance(x, list) for r in nested for x in r):
            issues.append((tok.line, tok.col, "matrix rows must be flat and of equal length"))
            return None
        return np.array([[leaf(x) for x in r] for r in nested], dtype=np.complex128)
    if any(isinstance(x, list) for x in nested):
        issues.append((tok.line, tok.col, "mixed scalars and rows"))
        return None
    return np.array([leaf(x) for x in nested], dtype=np.complex128)


def _parse_party(tok: _Tok | None, layout: PartyLayout | None, issues, where) -> int | None:
    if tok is None or tok.kind != "word":
        issues.append((where.line, where.col, "expected a party index"))
        return None
    try:
        party = int(tok.text)
    except ValueError:
        issues.append((tok.line, tok.col, f"party index must be an integer, got {tok.text!r}"))
        return None
    if layout is not None and not 1 <= party <= layout.n:
        issues.append((tok.line, tok.col, f"party {party} out of range 1..{layout.n}"))
        return None
    return party


def _parse_guard(tok: _Tok, issues) -> dict[str, int]:
    out = {}
    for part in tok.text.split(","):
        label, sep, value = part.partition("=")
        try:
            if not sep or not label:
                raise ValueError
            out[label] = int(value)
        except ValueError:
            issues.append((tok.line, tok.col, f"bad guard {part!r}; expected label=outcome"))
    return out


def parse_protocol(
    text: str,
    params: dict[str, float] | None = None,
    tol: Tolerances = DEFAULT,
) -> ProtocolFile:
    """Parse and validate a protocol file.

    Args:
        text: file contents.
        params: overrides for ``param`` declarations in the file.
        tol: tolerances for unitarity, completeness and state validity.

    Raises:
        ParseError: with every positioned problem found.
    """
    overrides = dict(params or {})
    issues: list[tuple[int, int, str]] = []
    layout: PartyLayout | None = None
    values: dict[str, float] = {}
    operators: dict[str, np.ndarray] = {}
    steps = []
    step_pos: list[tuple[int, int]] = []
    initial = None
    labels = set()

    def resolve(tok: _Tok, party: int | None):
        if tok.kind == "group":
            m = _eval_array(tok, values, issues)
        elif tok.kind == "word" and tok.text in operators:
            m = operators[tok.text]
        else:
            issues.append((tok.line, tok.col, f"unresolved operator {tok.text!r}"))
            return None
        if m is None:
            return None
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            issues.append((tok.line, tok.col, f"operator must be a square matrix, got shape {m.shape}"))
            return None
        if layout is not None and party is not None and m.shape[0] != layout.dim(party):
            issues.append(
                (tok.line, tok.col, f"shape mismatch: {m.shape} on party {party} of dimension {layout.dim(party)}")
            )
            return None
        return m

    for toks, tok_issues in _statements(text):
        issues.extend(tok_issues)
        if not toks:
            continue
        head = toks[0]
        guard = {}
        if head.kind == "word" and head.text == "when":
            if len(toks) < 3:
                issues.append((head.line, head.col, "'when' needs a guard and a step"))
                continue
            guard = _parse_guard(toks[1], issues)
            toks = toks[2:]
            head = toks[0]
        kw = head.text if head.kind == "word" else ""
        args = toks[1:]
        if guard and kw not in ("unitary", "measure", "broadcast"):
            issues.append((head.line, head.col, f"'when' cannot guard {kw!r}"))
            continue

        if kw == "layout":
            if layout is not None:
                issues.append((head.line, head.col, "layout declared twice"))
                continue
            try:
                layout = PartyLayout(int(t.text) for t in args)
            except (ValueError, LayoutError) as exc:
                issues.append((head.line, head.col, f"bad layout: {exc}"))
        elif kw == "param":
            if len(args) != 2 or args[0].kind != "word":
                issues.append((head.line, head.col, "expected: param NAME VALUE"))
                continue
            name = args[0].text
            if name in overrides:
                values[name] = overrides[name]
                continue
            try:
                v = parse_complex(args[1].text, values)
            except ValueError as exc:
                issues.append((args[1].line, args[1].col, str(exc)))
                continue
            values[name] = v.real if v.imag == 0 else v
        elif kw == "operator":
            rest = [t for t in args if not (t.kind == "word" and t.text == "=")]
            if len(rest) != 2 or rest[0].kind != "word" or rest[1].kind != "group":
                issues.append((head.line, head.col, "expected: operator NAME = [[...]]"))
                continue
            m = _eval_array(rest[1], values, issues)
            if m is not None:
                if m.ndim != 2:
                    issues.append((rest[1].line, rest[1].col, "operator must be a matrix"))
                else:
                    operators[rest[0].text] = m
        elif kw == "state":
            if layout is None:
                issues.append((head.line, head.col, "state declared before layout"))
                continue
            if len(args) != 2 or args[0].text not in ("vector", "density") or args[1].kind != "group":
                issues.append((head.line, head.col, "expected: state vector [...] or state density [[...]]"))
                continue
            arr = _eval_array(args[1], values, issues)
            if arr is None:
                continue
            if args[0].text == "vector":
                if arr.shape != (layout.total,):
                    issues.append((args[1].line, args[1].col, f"state vector needs {layout.total} entries, got {arr.shape}"))
                    continue
                norm2 = float(np.vdot(arr, arr).real)
                if abs(norm2 - 1.0) > tol.trace:
                    issues.append((args[1].line, args[1].col, f"state vector is not normalized (norm^2 = {norm2:.12g})"))
                    continue
                rho = projector(arr)
            else:
                if arr.shape != (layout.total, layout.total):
                    issues.append((args[1].line, args[1].col, f"density must be {layout.total}x{layout.total}, got {arr.shape}"))
                    continue
                rho = arr
            if initial is not None:
                issues.append((head.line, head.col, "state declared twice"))
                continue
            report = validate_density(rho, tol.trace)
            if not report.passed:
                issues.append((args[1].line, args[1].col, f"invalid density matrix: {report}"))
                continue
            initial = GlobalState(layout, rho)
        elif kw in ("unitary", "measure", "broadcast"):
            if layout is None:
                issues.append((head.line, head.col, f"{kw} before layout"))
                continue
            party = _parse_party(args[0] if args else None, layout, issues, head)
            if party is None:
                continue
            if kw == "unitary":
                if len(args) != 2:
                    issues.append((head.line, head.col, "expected: unitary PARTY OPERATOR"))
                    continue
                u = resolve(args[1], party)
                if u is not None:
                    steps.append(Unitary(party, u, guard))
                    step_pos.append((head.line, head.col))
            elif kw == "measure":
                opt = args[1:]
                label = None
                if len(opt) >= 2 and opt[-2].kind == "word" and opt[-2].text == "as":
                    label = opt[-1].text
                    opt = opt[:-2]
                if not opt:
                    issues.append((head.line, head.col, "measure needs at least one operator"))
                    continue
                ops = [resolve(t, party) for t in opt]
                if any(o is None for o in ops):
                    continue
                if label is None:
                    k = len(labels) + 1
                    while f"m{k}" in labels:
                        k += 1
                    label = f"m{k}"
                labels.add(label)
                steps.append(Measure(MeasurementSet(party, tuple(ops)), label, guard))
                step_pos.append((head.line, head.col))
            else:
                if len(args) != 2:
                    issues.append((head.line, head.col, "expected: broadcast PARTY TAG"))
                    continue
                steps.append(Broadcast(party, args[1].text, guard))
                step_pos.append((head.line, head.col))
        else:
            issues.append((head.line, head.col, f"unknown statement {head.text!r}"))

    if layout is None:
        issues.append((1, 1, "missing layout declaration"))
    if issues:
        raise ParseError(sorted(issues))
    try:
        protocol = Protocol(layout, steps, tol)
    except ProtocolError as exc:
        positioned = []
        for k, msg in exc.issues:
            ln, col = step_pos[k - 1] if k else (1, 1)
            positioned.append((ln, col, msg))
        raise ParseError(positioned) from None
    return ProtocolFile(protocol, initial, values, operators)


def _format_matrix(m: np.ndarray) -> str:
    return "[" + ", ".join("[" + ", ".join(format_complex(z) for z in row) + "]" for row in m) + "]"


def serialize_protocol(pf: ProtocolFile) -> str:
    """Write a protocol file that parses back to an equivalent protocol.

    Parameters are already folded into the numbers, so none are written.
    """
    proto = pf.protocol
    lines = ["layout " + " ".join(str(d) for d in proto.layout.dims)]
    body = []

    table = list(pf.operators.items())
    written: list[tuple[str, np.ndarray]] = []

    def name_of(m: np.ndarray) -> str:
        for name, op in written:
            if op.shape == m.shape and np.array_equal(op, m):
                return name
        name = next((n for n, op in table if op.shape == m.shape and np.array_equal(op, m)), None)
        taken = {n for n, _ in written}
        if name is None or name in taken:
            k = len(written) + 1
            while f"op{k}" in taken or f"op{k}" in pf.operators:
                k += 1
            name = f"op{k}"
        written.append((name, m))
        lines.append(f"operator {name} = {_format_matrix(m)}")
        return name

    if pf.initial is not None:
        body.append(f"state density {_format_matrix(pf.initial.rho)}")
    for step in proto.steps:
        prefix = ""
        if step.guard:
            prefix = "when " + ",".join(f"{k}={v}" for k, v in step.guard) + " "
        if isinstance(step, Unitary):
            body.append(f"{prefix}unitary {step.party} {name_of(step.u)}")
        elif isinstance(step, Measure):
            ops = " ".join(name_of(op) for op in step.mset.ops)
            body.append(f"{prefix}measure {step.party} {ops} as {step.label}")
        else:
            tag = step.tag.replace('"', "'")
            body.append(f'{prefix}broadcast {step.party} "{tag}"')
    return "\n".join(lines + body) + "\n"
