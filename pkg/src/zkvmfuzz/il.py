"""Typed expression circuits with a single 32-bit output, and their evaluator.

The circuit language is deliberately small: word-valued inputs, one output
expression, no loops or memory. Integer semantics follow RV32IM conventions
(wrapping arithmetic, total division: x/0 = 0xFFFFFFFF and x%0 = x), so the
evaluator, the emitted source code and the bundled VM agree on exactly one
semantics. Base integer operators are unsigned; signed behavior is reachable
only through the custom-call functions (mulh, divs, sra, ...), which map
one-to-one onto machine instructions.

Circuits have a canonical text form::

    inputs : a, b#priv, c
    outputs: out
    out = (a % (b + c))

Private inputs carry a ``#priv`` suffix; visibility is metadata only.
Expressions render fully parenthesized; the parser also accepts plain
C-like precedence. Pattern atoms (``?x``, ``?x:int``, ``$r:bool``) are part
of the grammar so rewrite rules share the same reader and printer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping, Union

MASK32 = 0xFFFFFFFF

INT_OPS = ("add", "sub", "mul", "div", "rem", "pow", "and", "or", "xor")
BOOL_OPS = ("land", "lor", "lxor")
CMP_OPS = ("eq", "neq", "lt", "leq", "gt", "geq")
CUSTOM_FNS = ("mulh", "mulhsu", "mulhu", "divs", "rems", "sll", "srl", "sra", "slt", "sltu")
POW_EXPONENTS = (2, 3)

PUBLIC = "public"
PRIVATE = "private"


class Ty(Enum):
    INT = "int"
    BOOL = "bool"


# --------------------------------------------------------------------------- #
# Expression nodes
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, slots=True)
class Var:
    """Reference to a declared circuit input (always word-valued)."""

    name: str


@dataclass(frozen=True, slots=True)
class IntLit:
    """Word constant in [0, 2^32)."""

    value: int


@dataclass(frozen=True, slots=True)
class BoolLit:
    value: bool


@dataclass(frozen=True, slots=True)
class IntOp:
    """Binary integer operator; ``pow`` requires a literal exponent of 2 or 3."""

    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True, slots=True)
class BoolOp:
    """Binary logical operator; ``lxor`` is boolean inequality."""

    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True, slots=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True, slots=True)
class Cmp:
    """Unsigned comparison of two integer operands; yields Bool."""

    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True, slots=True)
class Ite:
    """Conditional integer choice: the only bridge from Bool back to Int."""

    cond: "Expr"
    then: "Expr"
    orelse: "Expr"


@dataclass(frozen=True, slots=True)
class Call:
    """Machine-level custom function (two word arguments, word result)."""

    fn: str
    args: tuple["Expr", ...]


@dataclass(frozen=True, slots=True)
class Capture:
    """Rewrite-pattern hole ``?name`` matching any subexpression.

    An optional type annotation (``?a:int`` / ``?a:bool``) restricts the
    match. Repeated occurrences of the same name must bind structurally
    equal subexpressions.
    """

    name: str
    ty: Ty | None = None


@dataclass(frozen=True, slots=True)
class Fresh:
    """Rewrite-template hole ``$name:ty`` filled with one shared constant.

    Every occurrence of the same name within one rule application receives
    the same drawn value. ``nonzero`` forces the draw away from zero (used
    where a zero constant would change semantics, e.g. a fresh divisor).
    """

    name: str
    ty: Ty
    nonzero: bool = False


Expr = Union[Var, IntLit, BoolLit, IntOp, BoolOp, Not, Cmp, Ite, Call, Capture, Fresh]


# --------------------------------------------------------------------------- #
# Structure helpers
# --------------------------------------------------------------------------- #


def children(expr: Expr) -> tuple[Expr, ...]:
    match expr:
        case IntOp(_, lhs, rhs) | BoolOp(_, lhs, rhs) | Cmp(_, lhs, rhs):
            return (lhs, rhs)
        case Not(operand):
            return (operand,)
        case Ite(cond, then, orelse):
            return (cond, then, orelse)
        case Call(_, args):
            return args
        case _:
            return ()


def with_children(expr: Expr, kids: tuple[Expr, ...]) -> Expr:
    match expr:
        case IntOp(op, _, _):
            return IntOp(op, kids[0], kids[1])
        case BoolOp(op, _, _):
            return BoolOp(op, kids[0], kids[1])
        case Cmp(op, _, _):
            return Cmp(op, kids[0], kids[1])
        case Not(_):
            return Not(kids[0])
        case Ite(_, _, _):
            return Ite(kids[0], kids[1], kids[2])
        case Call(fn, _):
            return Call(fn, tuple(kids))
        case _:
            if kids:
                raise ValueError(f"leaf node {expr!r} takes no children")
            return expr


def walk(expr: Expr) -> Iterator[tuple[tuple[int, ...], Expr]]:
    """Yield (path, node) pairs in pre-order; path is a tuple of child indices."""
    stack: list[tuple[tuple[int, ...], Expr]] = [((), expr)]
    while stack:
        path, node = stack.pop()
        yield path, node
        kids = children(node)
        for i in range(len(kids) - 1, -1, -1):
            stack.append((path + (i,), kids[i]))


def subexpr_at(expr: Expr, path: tuple[int, ...]) -> Expr:
    node = expr
    for i in path:
        node = children(node)[i]
    return node


def replace_at(expr: Expr, path: tuple[int, ...], new: Expr) -> Expr:
    if not path:
        return new
    kids = list(children(expr))
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return with_children(expr, tuple(kids))


def expr_size(expr: Expr) -> int:
    return sum(1 for _ in walk(expr))


def expr_depth(expr: Expr) -> int:
    kids = children(expr)
    return 1 + (max(map(expr_depth, kids)) if kids else 0)


def expr_type(expr: Expr) -> Ty:
    """Structural type of a concrete expression (inputs are words)."""
    match expr:
        case Var() | IntLit() | IntOp() | Ite() | Call():
            return Ty.INT
        case BoolLit() | BoolOp() | Not() | Cmp():
            return Ty.BOOL
        case Capture(_, ty) if ty is not None:
            return ty
        case Fresh(_, ty):
            return ty
        case _:
            raise ValueError(f"type of {expr!r} is not structurally determined")


# --------------------------------------------------------------------------- #
# Type checking
# --------------------------------------------------------------------------- #


class TypeCheckError(Exception):
    """An ill-formed expression; the message names the offending node."""


def typecheck(expr: Expr, declared: frozenset[str] | set[str]) -> Ty:
    """Check ``expr`` against the declared input names and return its type."""

    def bad(node: Expr, why: str) -> TypeCheckError:
        return TypeCheckError(f"{why} in {render_expr(node)}")

    def check(node: Expr) -> Ty:
        match node:
            case Var(name):
                if name not in declared:
                    raise bad(node, f"undeclared input {name!r}")
                return Ty.INT
            case IntLit(value):
                if not 0 <= value <= MASK32:
                    raise bad(node, f"literal {value} outside 32-bit range")
                return Ty.INT
            case BoolLit(_):
                return Ty.BOOL
            case IntOp("pow", lhs, rhs):
                if check(lhs) is not Ty.INT:
                    raise bad(node, "pow base must be Int")
                if not isinstance(rhs, IntLit) or rhs.value not in POW_EXPONENTS:
                    raise bad(node, "pow exponent must be a literal 2 or 3")
                return Ty.INT
            case IntOp(op, lhs, rhs):
                if op not in INT_OPS:
                    raise bad(node, f"unknown integer operator {op!r}")
                if check(lhs) is not Ty.INT or check(rhs) is not Ty.INT:
                    raise bad(node, f"{op} requires Int operands")
                return Ty.INT
            case BoolOp(op, lhs, rhs):
                if op not in BOOL_OPS:
                    raise bad(node, f"unknown logical operator {op!r}")
                if check(lhs) is not Ty.BOOL or check(rhs) is not Ty.BOOL:
                    raise bad(node, f"{op} requires Bool operands")
                return Ty.BOOL
            case Not(operand):
                if check(operand) is not Ty.BOOL:
                    raise bad(node, "! requires a Bool operand")
                return Ty.BOOL
            case Cmp(op, lhs, rhs):
                if op not in CMP_OPS:
                    raise bad(node, f"unknown comparison {op!r}")
                if check(lhs) is not Ty.INT or check(rhs) is not Ty.INT:
                    raise bad(node, f"{op} requires Int operands")
                return Ty.BOOL
            case Ite(cond, then, orelse):
                if check(cond) is not Ty.BOOL:
                    raise bad(node, "condition must be Bool")
                if check(then) is not Ty.INT or check(orelse) is not Ty.INT:
                    raise bad(node, "branches must be Int")
                return Ty.INT
            case Call(fn, args):
                if fn not in CUSTOM_FNS:
                    raise bad(node, f"unknown custom function {fn!r}")
                if len(args) != 2:
                    raise bad(node, f"{fn} takes 2 arguments, got {len(args)}")
                if any(check(a) is not Ty.INT for a in args):
                    raise bad(node, f"{fn} requires Int arguments")
                return Ty.INT
            case _:
                raise bad(node, "pattern holes are not executable")

    return check(expr)


# --------------------------------------------------------------------------- #
# Evaluation
# --------------------------------------------------------------------------- #


def to_word(value: int) -> int:
    return value & MASK32


def to_signed(word: int) -> int:
    return word - 0x1_0000_0000 if word & 0x8000_0000 else word


def _div_trunc(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def eval_custom(fn: str, args: list[int] | tuple[int, ...]) -> int:
    """Evaluate a custom function under RV32IM semantics."""
    a, b = args
    sa, sb = to_signed(a), to_signed(b)
    match fn:
        case "mulh":
            return to_word((sa * sb) >> 32)
        case "mulhsu":
            return to_word((sa * b) >> 32)
        case "mulhu":
            return (a * b) >> 32
        case "divs":
            if b == 0:
                return MASK32
            if a == 0x8000_0000 and sb == -1:  # overflow case: quotient wraps to dividend
                return a
            return to_word(_div_trunc(sa, sb))
        case "rems":
            if b == 0:
                return a
            if a == 0x8000_0000 and sb == -1:
                return 0
            return to_word(sa - sb * _div_trunc(sa, sb))
        case "sll":
            return to_word(a << (b & 31))
        case "srl":
            return a >> (b & 31)
        case "sra":
            return to_word(sa >> (b & 31))
        case "slt":
            return 1 if sa < sb else 0
        case "sltu":
            return 1 if a < b else 0
        case _:
            raise ValueError(f"unknown custom function {fn!r}")


def eval_expr(expr: Expr, env: Mapping[str, int]) -> int | bool:
    """Evaluate a well-typed expression; total for every input vector."""
    match expr:
        case Var(name):
            return env[name]
        case IntLit(value):
            return value
        case BoolLit(value):
            return value
        case IntOp(op, lhs, rhs):
            a = eval_expr(lhs, env)
            b = eval_expr(rhs, env)
            match op:
                case "add":
                    return to_word(a + b)
                case "sub":
                    return to_word(a - b)
                case "mul":
                    return to_word(a * b)
                case "div":
                    return MASK32 if b == 0 else a // b
                case "rem":
                    return a if b == 0 else a % b
                case "pow":
                    result = a
                    for _ in range(b - 1):
                        result = to_word(result * a)
                    return result
                case "and":
                    return a & b
                case "or":
                    return a | b
                case "xor":
                    return a ^ b
        case BoolOp(op, lhs, rhs):
            a = eval_expr(lhs, env)
            b = eval_expr(rhs, env)
            match op:
                case "land":
                    return a and b
                case "lor":
                    return a or b
                case "lxor":
                    return a != b
        case Not(operand):
            return not eval_expr(operand, env)
        case Cmp(op, lhs, rhs):
            a = eval_expr(lhs, env)
            b = eval_expr(rhs, env)
            match op:
                case "eq":
                    return a == b
                case "neq":
                    return a != b
                case "lt":
                    return a < b
                case "leq":
                    return a <= b
                case "gt":
                    return a > b
                case "geq":
                    return a >= b
        case Ite(cond, then, orelse):
            return eval_expr(then, env) if eval_expr(cond, env) else eval_expr(orelse, env)
        case Call(fn, args):
            return eval_custom(fn, [eval_expr(a, env) for a in args])
    raise ValueError(f"cannot evaluate {expr!r}")


# --------------------------------------------------------------------------- #
# Circuits
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class Circuit:
    """Declared inputs plus one Int-typed output expression."""

    inputs: tuple[tuple[str, str], ...]  # (name, "public" | "private")
    output_expr: Expr
    output_name: str = "out"

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.inputs)

    @property
    def arity(self) -> int:
        return len(self.inputs)


def typecheck_circuit(circuit: Circuit) -> Ty:
    names = circuit.input_names
    if len(set(names)) != len(names):
        raise TypeCheckError(f"duplicate input names in {names}")
    for _, vis in circuit.inputs:
        if vis not in (PUBLIC, PRIVATE):
            raise TypeCheckError(f"bad visibility {vis!r}")
    ty = typecheck(circuit.output_expr, frozenset(names))
    if ty is not Ty.INT:
        raise TypeCheckError("circuit output must be Int-typed")
    return ty


def eval_circuit(circuit: Circuit, values: list[int] | tuple[int, ...]) -> int:
    """Ground-truth semantics: evaluate the output under an input binding."""
    if len(values) != circuit.arity:
        raise ValueError(f"expected {circuit.arity} inputs, got {len(values)}")
    env = {name: to_word(v) for (name, _), v in zip(circuit.inputs, values)}
    result = eval_expr(circuit.output_expr, env)
    return to_word(int(result))


# --------------------------------------------------------------------------- #
# Text format
# --------------------------------------------------------------------------- #

_INT_SYMS = {
    "add": "+", "sub": "-", "mul": "*", "div": "/", "rem": "%",
    "pow": "**", "and": "&", "or": "|", "xor": "^",
}
_BOOL_SYMS = {"land": "&&", "lor": "||", "lxor": "^^"}
_CMP_SYMS = {"eq": "==", "neq": "!=", "lt": "<", "leq": "<=", "gt": ">", "geq": ">="}


def fmt_word(value: int) -> str:
    return hex(value) if value >= 0x1_0000 else str(value)


def render_expr(expr: Expr) -> str:
    """Render fully parenthesized; inverse of :func:`parse_expr`."""
    match expr:
        case Var(name):
            return name
        case IntLit(value):
            return fmt_word(value)
        case BoolLit(value):
            return "T" if value else "F"
        case IntOp(op, lhs, rhs):
            return f"({render_expr(lhs)} {_INT_SYMS[op]} {render_expr(rhs)})"
        case BoolOp(op, lhs, rhs):
            return f"({render_expr(lhs)} {_BOOL_SYMS[op]} {render_expr(rhs)})"
        case Not(operand):
            return f"(!{render_expr(operand)})"
        case Cmp(op, lhs, rhs):
            return f"({render_expr(lhs)} {_CMP_SYMS[op]} {render_expr(rhs)})"
        case Ite(cond, then, orelse):
            return f"({render_expr(cond)} ? {render_expr(then)} : {render_expr(orelse)})"
        case Call(fn, args):
            return f"{fn}({', '.join(render_expr(a) for a in args)})"
        case Capture(name, ty):
            return f"?{name}" + (f":{ty.value}" if ty else "")
        case Fresh(name, ty, _):
            return f"${name}:{ty.value}"
    raise ValueError(f"cannot render {expr!r}")


def render_circuit(circuit: Circuit) -> str:
    decls = ", ".join(
        name + ("#priv" if vis == PRIVATE else "") for name, vis in circuit.inputs
    )
    return (
        f"inputs : {decls}\n"
        f"outputs: {circuit.output_name}\n"
        f"{circuit.output_name} = {render_expr(circuit.output_expr)}\n"
    )


class ParseError(Exception):
    pass


_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<hex>0[xX][0-9a-fA-F]+)
      | (?P<int>\d+)
      | (?P<meta>[?$][A-Za-z_][A-Za-z_0-9]*(?::(?:int|bool))?)
      | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op>\*\*|&&|\|\||\^\^|==|!=|<=|>=|[-+*/%&|^!<>?:(),])
    )""",
    re.VERBOSE,
)


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise ParseError(f"bad token at: {text[pos:pos + 20]!r}")
            break
        tokens.append(m.group().strip())
        pos = m.end()
    return tokens


# Binary operator levels, loosest binding first.
_LEVELS: list[dict[str, tuple[type, str]]] = [
    {"||": (BoolOp, "lor")},
    {"^^": (BoolOp, "lxor")},
    {"&&": (BoolOp, "land")},
    {"|": (IntOp, "or")},
    {"^": (IntOp, "xor")},
    {"&": (IntOp, "and")},
    {"==": (Cmp, "eq"), "!=": (Cmp, "neq")},
    {"<": (Cmp, "lt"), "<=": (Cmp, "leq"), ">": (Cmp, "gt"), ">=": (Cmp, "geq")},
    {"+": (IntOp, "add"), "-": (IntOp, "sub")},
    {"*": (IntOp, "mul"), "/": (IntOp, "div"), "%": (IntOp, "rem")},
    {"**": (IntOp, "pow")},
]


class _Parser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of expression")
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, found {tok!r}")
        self.pos += 1
        return tok

    def parse(self) -> Expr:
        expr = self.ternary()
        if self.peek() is not None:
            raise ParseError(f"trailing tokens after expression: {self.peek()!r}")
        return expr

    def ternary(self) -> Expr:
        expr = self.binary(0)
        if self.peek() == "?":
            self.take()
            then = self.ternary()
            self.take(":")
            orelse = self.ternary()
            return Ite(expr, then, orelse)
        return expr

    def binary(self, level: int) -> Expr:
        if level >= len(_LEVELS):
            return self.unary()
        ops = _LEVELS[level]
        expr = self.binary(level + 1)
        while self.peek() in ops:
            cls, name = ops[self.take()]
            rhs = self.binary(level + 1)
            expr = cls(name, expr, rhs)
        return expr

    def unary(self) -> Expr:
        if self.peek() == "!":
            self.take()
            return Not(self.unary())
        return self.atom()

    def atom(self) -> Expr:
        tok = self.take()
        if tok == "(":
            expr = self.ternary()
            self.take(")")
            return expr
        if tok.startswith("0x") or tok.startswith("0X"):
            return IntLit(int(tok, 16))
        if tok.isdigit():
            return IntLit(int(tok))
        if tok == "T":
            return BoolLit(True)
        if tok == "F":
            return BoolLit(False)
        if tok[0] in "?$":
            name, _, ann = tok[1:].partition(":")
            ty = Ty(ann) if ann else None
            if tok[0] == "$":
                if ty is None:
                    raise ParseError(f"fresh hole {tok!r} needs a type annotation")
                return Fresh(name, ty)
            return Capture(name, ty)
        if re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", tok):
            if self.peek() == "(":
                self.take()
                args = [self.ternary()]
                while self.peek() == ",":
                    self.take()
                    args.append(self.ternary())
                self.take(")")
                return Call(tok, tuple(args))
            return Var(tok)
        raise ParseError(f"unexpected token {tok!r}")


def parse_expr(text: str) -> Expr:
    return _Parser(_tokenize(text)).parse()


def parse_circuit(text: str) -> Circuit:
    """Parse the canonical three-line circuit format."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if len(lines) != 3:
        raise ParseError(f"expected 3 lines (inputs/outputs/definition), got {len(lines)}")
    m = re.fullmatch(r"inputs\s*:\s*(.*)", lines[0])
    if not m:
        raise ParseError(f"bad inputs line: {lines[0]!r}")
    inputs: list[tuple[str, str]] = []
    decls = m.group(1).strip()
    if decls:
        for decl in decls.split(","):
            decl = decl.strip()
            if decl.endswith("#priv"):
                inputs.append((decl[: -len("#priv")].strip(), PRIVATE))
            else:
                inputs.append((decl, PUBLIC))
    m = re.fullmatch(r"outputs\s*:\s*([A-Za-z_][A-Za-z_0-9]*)", lines[1])
    if not m:
        raise ParseError(f"bad outputs line: {lines[1]!r}")
    output_name = m.group(1)
    m = re.fullmatch(rf"{re.escape(output_name)}\s*=\s*(.*)", lines[2])
    if not m:
        raise ParseError(f"definition line must assign {output_name!r}: {lines[2]!r}")
    circuit = Circuit(tuple(inputs), parse_expr(m.group(1)), output_name)
    typecheck_circuit(circuit)
    return circuit
