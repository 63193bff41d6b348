"""OpenQASM 2.0 reader and writer for the gate subset used by the toolkit.

Supported statements: the ``OPENQASM 2.0`` header, ``include "qelib1.inc"``,
``qreg``/``creg`` declarations, the gates in :data:`~qforensics.circuit.GATE_SPECS`,
``u1``/``u2``/``u3`` (rewritten into ``rz``/``sx`` on the way in), ``measure``
and ``barrier``. Angles accept numeric literals and ``pi`` combined with
``*``, ``/`` and unary minus. Anything else is rejected with a
:class:`QasmUnsupportedError` that names the construct.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .circuit import GATE_SPECS, Circuit, CircuitError, GateOp

PHYSICAL_MARKER = "// qforensics: physical-qubits"

_MARKER_RE = re.compile(r"^\s*//\s*qforensics:\s*physical-qubits\s*$", re.MULTILINE)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<eqeq>==)
  | (?P<sym>[;,()\[\]{}*/+\-^=])
    """,
    re.VERBOSE,
)

_UNSUPPORTED_KEYWORDS = {
    "gate": "custom gate definition (gate)",
    "opaque": "opaque declaration (opaque)",
    "if": "classical conditional (if)",
    "reset": "reset",
    "U": "builtin U gate",
    "CX": "builtin CX gate",
    "qubit": "OpenQASM 3 qubit declaration",
    "bit": "OpenQASM 3 bit declaration",
    "def": "OpenQASM 3 subroutine",
    "for": "OpenQASM 3 loop",
    "while": "OpenQASM 3 loop",
}

# u-family arity, rewritten at parse time
_U_GATES = {"u1": 1, "u2": 2, "u3": 3}


class QasmError(ValueError):
    """Base class for QASM input errors; carries the source position."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        self.reason = message
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)


class QasmSyntaxError(QasmError):
    pass


class QasmUnsupportedError(QasmError):
    pass


class QasmArityError(QasmError):
    pass


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QasmSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(_Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.qregs: dict[str, tuple[int, int]] = {}
        self.cregs: dict[str, tuple[int, int]] = {}
        self.nq = 0
        self.nc = 0
        self.ops: list[GateOp] = []

    # token helpers
    def peek(self) -> _Token:
        return self.toks[self.i]

    def next(self) -> _Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str, kind: str | None = None) -> _Token:
        tok = self.next()
        if (kind is not None and tok.kind != kind) or (kind is None and tok.value != value):
            want = kind if kind is not None else repr(value)
            got = repr(tok.value) if tok.kind != "eof" else "end of input"
            raise QasmSyntaxError(f"expected {want}, found {got}", tok.line, tok.col)
        return tok

    def parse(self) -> None:
        self._header()
        while self.peek().kind != "eof":
            self._statement()

    def _header(self):
        tok = self.peek()
        if tok.value != "OPENQASM":
            raise QasmSyntaxError("missing 'OPENQASM 2.0;' header", tok.line, tok.col)
        self.next()
        ver = self.expect("", kind="number")
        if ver.value not in ("2.0", "2"):
            raise QasmUnsupportedError(f"OpenQASM version {ver.value}", ver.line, ver.col)
        self.expect(";")

    def _statement(self):
        tok = self.peek()
        if tok.kind != "id":
            raise QasmSyntaxError(f"unexpected {tok.value!r}", tok.line, tok.col)
        word = tok.value
        if word in _UNSUPPORTED_KEYWORDS:
            raise QasmUnsupportedError(_UNSUPPORTED_KEYWORDS[word], tok.line, tok.col)
        if word == "OPENQASM":
            raise QasmSyntaxError("duplicate header", tok.line, tok.col)
        if word == "include":
            self.next()
            path = self.expect("", kind="string")
            if path.value != '"qelib1.inc"':
                raise QasmUnsupportedError(f"include of {path.value}", path.line, path.col)
            self.expect(";")
        elif word in ("qreg", "creg"):
            self._declaration()
        elif word == "measure":
            self._measure()
        elif word == "barrier":
            self.next()
            args = self._arglist()
            qubits = []
            for group in args:
                qubits.extend(q for q in group if q not in qubits)
            self.expect(";")
            self.ops.append(GateOp("barrier", (), tuple(qubits)))
        else:
            self._gate_call()

    def _declaration(self):
        kw = self.next()
        name = self.expect("", kind="id")
        self.expect("[")
        size_tok = self.expect("", kind="number")
        if not size_tok.value.isdigit() or int(size_tok.value) < 1:
            raise QasmSyntaxError(f"bad register size {size_tok.value}", size_tok.line, size_tok.col)
        self.expect("]")
        self.expect(";")
        size = int(size_tok.value)
        if name.value in self.qregs or name.value in self.cregs:
            raise QasmSyntaxError(f"register {name.value!r} redeclared", name.line, name.col)
        if kw.value == "qreg":
            self.qregs[name.value] = (self.nq, size)
            self.nq += size
        else:
            self.cregs[name.value] = (self.nc, size)
            self.nc += size

    def _argument(self, regs: dict[str, tuple[int, int]], what: str) -> list[int]:
        name = self.expect("", kind="id")
        if name.value not in regs:
            raise QasmSyntaxError(f"undeclared {what} register {name.value!r}", name.line, name.col)
        offset, size = regs[name.value]
        if self.peek().value != "[":
            return list(range(offset, offset + size))
        self.next()
        idx = self.expect("", kind="number")
        if not idx.value.isdigit():
            raise QasmSyntaxError(f"bad index {idx.value}", idx.line, idx.col)
        if int(idx.value) >= size:
            raise QasmSyntaxError(
                f"index {idx.value} out of range for {name.value}[{size}]", idx.line, idx.col
            )
        self.expect("]")
        return [offset + int(idx.value)]

    def _arglist(self) -> list[list[int]]:
        args = [self._argument(self.qregs, "quantum")]
        while self.peek().value == ",":
            self.next()
            args.append(self._argument(self.qregs, "quantum"))
        return args

    def _measure(self):
        start = self.next()
        src = self._argument(self.qregs, "quantum")
        self.expect("->")
        dst = self._argument(self.cregs, "classical")
        self.expect(";")
        if len(src) != len(dst):
            raise QasmArityError("measure register sizes differ", start.line, start.col)
        for q, c in zip(src, dst):
            self.ops.append(GateOp("measure", (), (q,), (c,)))

    def _gate_call(self):
        name_tok = self.next()
        name = name_tok.value
        if name in _U_GATES:
            arity, nparams = 1, _U_GATES[name]
        elif name in GATE_SPECS:
            arity, nparams = GATE_SPECS[name]
        else:
            raise QasmUnsupportedError(f"gate {name!r}", name_tok.line, name_tok.col)
        params = []
        if self.peek().value == "(":
            self.next()
            if self.peek().value != ")":
                params.append(self._expr())
                while self.peek().value == ",":
                    self.next()
                    params.append(self._expr())
            self.expect(")")
        if len(params) != nparams:
            raise QasmArityError(
                f"{name} takes {nparams} parameter(s), got {len(params)}",
                name_tok.line, name_tok.col,
            )
        args = self._arglist()
        self.expect(";")
        if len(args) != arity:
            raise QasmArityError(
                f"{name} takes {arity} qubit(s), got {len(args)}", name_tok.line, name_tok.col
            )
        sizes = {len(a) for a in args if len(a) > 1}
        if len(sizes) > 1:
            raise QasmArityError("mismatched register sizes in broadcast", name_tok.line, name_tok.col)
        width = sizes.pop() if sizes else 1
        for j in range(width):
            qubits = tuple(a[j] if len(a) > 1 else a[0] for a in args)
            try:
                self._emit(name, params, qubits)
            except CircuitError as exc:
                raise QasmArityError(str(exc), name_tok.line, name_tok.col) from None

    def _emit(self, name: str, params: list[float], qubits: tuple[int, ...]):
        if name == "u1":
            self.ops.append(GateOp("rz", (params[0],), qubits))
        elif name in ("u2", "u3"):
            theta, phi, lam = (math.pi / 2, *params) if name == "u2" else params
            self.ops.extend(
                GateOp(n, p, qubits)
                for n, p in (
                    ("rz", (lam,)),
                    ("sx", ()),
                    ("rz", (theta + math.pi,)),
                    ("sx", ()),
                    ("rz", (phi + math.pi,)),
                )
            )
        else:
            self.ops.append(GateOp(name, tuple(params), qubits))

    # angle := factor (('*' | '/') factor)*
    def _expr(self) -> float:
        value = self._factor()
        while self.peek().value in ("*", "/"):
            op = self.next()
            rhs = self._factor()
            if op.value == "*":
                value *= rhs
            else:
                if rhs == 0:
                    raise QasmSyntaxError("division by zero in angle", op.line, op.col)
                value /= rhs
        tok = self.peek()
        if tok.value in ("+", "-", "^", "("):
            raise QasmUnsupportedError(f"angle expression operator {tok.value!r}", tok.line, tok.col)
        return value

    def _factor(self) -> float:
        tok = self.next()
        if tok.value == "-":
            return -self._factor()
        if tok.kind == "number":
            return float(tok.value)
        if tok.value == "pi":
            return math.pi
        if tok.value == "(" or tok.kind == "id":
            raise QasmUnsupportedError(f"angle expression {tok.value!r}", tok.line, tok.col)
        raise QasmSyntaxError(f"expected angle, found {tok.value!r}", tok.line, tok.col)


def parse(text: str, physical: bool | None = None) -> Circuit:
    """Parse OpenQASM 2.0 source into a :class:`Circuit`.

    Registers are folded into one flat index space in declaration order.
    ``physical`` forces the ``is_physical`` flag; by default it is taken from
    the marker comment that :func:`serialize` writes for physical circuits.
    """
    p = _Parser(text)
    p.parse()
    if p.nq == 0:
        tok = p.peek()
        raise QasmSyntaxError("no qreg declared", tok.line, tok.col)
    if physical is None:
        physical = _MARKER_RE.search(text) is not None
    return Circuit(p.nq, tuple(p.ops), num_clbits=p.nc, is_physical=physical)


def _format_op(op: GateOp) -> str:
    if op.name == "measure":
        return f"measure q[{op.qubits[0]}] -> c[{op.clbits[0]}];"
    args = ",".join(f"q[{q}]" for q in op.qubits)
    if op.params:
        return f"{op.name}({','.join(repr(float(p)) for p in op.params)}) {args};"
    return f"{op.name} {args};"


def serialize(circuit: Circuit) -> str:
    """Render ``circuit`` as OpenQASM 2.0; angles use shortest round-trip reprs."""
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";']
    if circuit.is_physical:
        lines.append(PHYSICAL_MARKER)
    lines.append(f"qreg q[{circuit.num_qubits}];")
    if circuit.num_clbits:
        lines.append(f"creg c[{circuit.num_clbits}];")
    lines.extend(_format_op(op) for op in circuit.ops)
    return "\n".join(lines) + "\n"


def load(path, physical: bool | None = None) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), physical=physical)


def dump(circuit: Circuit, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize(circuit))
