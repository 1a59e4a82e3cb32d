"""Circuit-to-source translation and product-program construction.

Two backends share one product definition:

* Rust-style source text for external VM adapters. Each circuit becomes a
  standalone function over ``u32`` parameters; custom calls expand to an
  inline-assembly macro, division and remainder go through explicit
  zero-guard helpers so the text reproduces the evaluator's total
  semantics, and the merged entry point chains pairwise inequality checks
  returning OOPS on any mismatch and SUCCESS otherwise.

* Direct compilation to the reference VM. Expressions compile with a
  virtual-stack discipline (registers first, spill slots beyond), each
  integer operator maps to its machine opcode, comparisons lower to
  slt-style sequences and conditionals to branches. Function results are
  committed byte-by-byte to the result buffer -- the journal-style output
  path -- then reloaded as words for the comparison chain.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import il, isa
from .il import Circuit, Expr, to_signed, to_word
from .isa import DATA_BASE, INPUT_BASE, Instruction, RefProgram

SUCCESS_WORD = 0xC0FFEE
OOPS_WORD = 0x0

DEFAULT_ENTRY_ATTR = "[zkvm::entry(main)]"

# Custom IL functions to assembly mnemonics (signed div/rem drop the suffix).
_ASM_NAMES = {fn: fn for fn in il.CUSTOM_FNS} | {"divs": "div", "rems": "rem"}


@dataclass(frozen=True)
class SourceFunction:
    name: str
    arity: int
    text: str


@dataclass(frozen=True)
class ProductProgram:
    """Bundle of semantically comparable circuits plus the merged oracle."""

    circuits: tuple[Circuit, ...]
    names: tuple[str, ...]
    source_text: str
    success_word: int = SUCCESS_WORD
    oops_word: int = OOPS_WORD

    @property
    def arity(self) -> int:
        return self.circuits[0].arity

    @property
    def input_names(self) -> tuple[str, ...]:
        return self.circuits[0].input_names


def product_semantics(product: ProductProgram, inputs) -> int:
    """Expected product output straight from the circuit evaluator."""
    outputs = [il.eval_circuit(c, inputs) for c in product.circuits]
    if all(o == outputs[0] for o in outputs):
        return product.success_word
    return product.oops_word


# --------------------------------------------------------------------------- #
# Source emission
# --------------------------------------------------------------------------- #

_RUST_INT = {"add": "wrapping_add", "sub": "wrapping_sub", "mul": "wrapping_mul"}
_RUST_BITS = {"and": "&", "or": "|", "xor": "^"}
_RUST_CMP = {"eq": "==", "neq": "!=", "lt": "<", "leq": "<=", "gt": ">", "geq": ">="}
_RUST_BOOL = {"land": "&&", "lor": "||"}

_DIV_HELPER = (
    "  fn divu(n: u32, d: u32) -> u32 { if d == 0 { 0xffffffff } else { n / d } }\n"
)
_REM_HELPER = "  fn remu(n: u32, d: u32) -> u32 { if d == 0 { n } else { n % d } }\n"
_POW2_HELPER = "  fn pow2(x: u32) -> u32 { x.wrapping_mul(x) }\n"
_POW3_HELPER = "  fn pow3(x: u32) -> u32 { x.wrapping_mul(x).wrapping_mul(x) }\n"

_ASM_MACRO = """  macro_rules! {name} {{
    ($a:expr, $b:expr) => {{{{
      let result: u32;
      unsafe {{
        core::arch::asm!(
          "{mnemonic} {{result}}, {{a}}, {{b}}",
          result = out(reg) result,
          a = in(reg) $a,
          b = in(reg) $b,
        );
      }}
      result
    }}}}
  }}
"""


def _rust_word(value: int) -> str:
    return hex(value) if value >= 0x1_0000 else str(value)


def _rust_expr(expr: Expr) -> str:
    match expr:
        case il.Var(name):
            return name
        case il.IntLit(value):
            return _rust_word(value)
        case il.BoolLit(value):
            return "true" if value else "false"
        case il.IntOp(op, lhs, rhs) if op in _RUST_INT:
            return f"{_paren(lhs)}.{_RUST_INT[op]}({_rust_expr(rhs)})"
        case il.IntOp(op, lhs, rhs) if op in _RUST_BITS:
            return f"({_rust_expr(lhs)} {_RUST_BITS[op]} {_rust_expr(rhs)})"
        case il.IntOp("div", lhs, rhs):
            return f"divu({_rust_expr(lhs)}, {_rust_expr(rhs)})"
        case il.IntOp("rem", lhs, rhs):
            return f"remu({_rust_expr(lhs)}, {_rust_expr(rhs)})"
        case il.IntOp("pow", lhs, rhs):
            return f"pow{rhs.value}({_rust_expr(lhs)})"
        case il.BoolOp("lxor", lhs, rhs):
            return f"({_rust_expr(lhs)} != {_rust_expr(rhs)})"
        case il.BoolOp(op, lhs, rhs):
            return f"({_rust_expr(lhs)} {_RUST_BOOL[op]} {_rust_expr(rhs)})"
        case il.Not(operand):
            return f"!{_paren(operand)}"
        case il.Cmp(op, lhs, rhs):
            return f"({_rust_expr(lhs)} {_RUST_CMP[op]} {_rust_expr(rhs)})"
        case il.Ite(cond, then, orelse):
            return f"(if {_rust_expr(cond)} {{ {_rust_expr(then)} }} else {{ {_rust_expr(orelse)} }})"
        case il.Call(fn, args):
            return f"{fn}!({_rust_expr(args[0])}, {_rust_expr(args[1])})"
    raise ValueError(f"cannot emit {expr!r}")


def _paren(expr: Expr) -> str:
    text = _rust_expr(expr)
    if isinstance(expr, (il.Var, il.IntLit, il.BoolLit)) or text.startswith("("):
        return text
    return f"({text})"


def emit_function(circuit: Circuit, name: str) -> SourceFunction:
    """Translate one circuit into a self-contained source function."""
    il.typecheck_circuit(circuit)
    used_ops = {n.op for _, n in il.walk(circuit.output_expr) if isinstance(n, il.IntOp)}
    used_pows = {
        n.rhs.value
        for _, n in il.walk(circuit.output_expr)
        if isinstance(n, il.IntOp) and n.op == "pow"
    }
    used_fns = sorted({n.fn for _, n in il.walk(circuit.output_expr) if isinstance(n, il.Call)})

    params = ", ".join(f"{n}: u32" for n in circuit.input_names)
    lines = [f"fn {name}({params}) -> u32 {{"]
    if "div" in used_ops:
        lines.append(_DIV_HELPER.rstrip("\n"))
    if "rem" in used_ops:
        lines.append(_REM_HELPER.rstrip("\n"))
    if 2 in used_pows:
        lines.append(_POW2_HELPER.rstrip("\n"))
    if 3 in used_pows:
        lines.append(_POW3_HELPER.rstrip("\n"))
    for fn in used_fns:
        lines.append(_ASM_MACRO.format(name=fn, mnemonic=_ASM_NAMES[fn]).rstrip("\n"))
    lines.append(f"  {_rust_expr(circuit.output_expr)}")
    lines.append("}")
    return SourceFunction(name, circuit.arity, "\n".join(lines) + "\n")


def emit_product_program(
    circuits: list[Circuit] | tuple[Circuit, ...],
    names: list[str] | tuple[str, ...] | None = None,
    entry_attr: str = DEFAULT_ENTRY_ATTR,
) -> ProductProgram:
    """Merge circuits into one program with the comparison-chain entry point."""
    circuits = tuple(circuits)
    if len(circuits) < 2:
        raise ValueError("a product program bundles at least 2 circuits")
    arity = circuits[0].arity
    input_names = circuits[0].input_names
    for c in circuits:
        if c.input_names != input_names:
            raise ValueError("all bundled circuits must share the same declared inputs")
    names = tuple(names) if names else tuple(f"c{i + 1}" for i in range(len(circuits)))

    functions = [emit_function(c, n) for c, n in zip(circuits, names)]
    args = ", ".join(input_names)
    params = ", ".join(f"{n}: u32" for n in input_names)

    out = [
        f"const OOPS: u32 = {_rust_word(OOPS_WORD)};",
        f"const SUCCESS: u32 = {_rust_word(SUCCESS_WORD)};",
        "",
    ]
    for fn in functions:
        out.append(f"// circuit {fn.name} as a source function")
        out.append(fn.text.rstrip("\n"))
        out.append("")
    out.append("// VM entry point")
    out.append("// <adapter prologue: bind program inputs here>")
    out.append(entry_attr)
    out.append(f"fn main({params}) -> u32 {{")
    for name in names:
        out.append(f"  let {name}_out = {name}({args});")
    out.append("")
    out.append("  // check if violation occurred")
    first = True
    for left, right in zip(names, names[1:]):
        guard = "if" if first else "} else if"
        out.append(f"  {guard} {left}_out != {right}_out {{")
        out.append("    OOPS    // unexpected result")
        first = False
    out.append("  } else {")
    out.append("    SUCCESS // expected result")
    out.append("  }")
    out.append("}")
    return ProductProgram(circuits, names, "\n".join(out) + "\n")


# --------------------------------------------------------------------------- #
# Reference-VM compilation
# --------------------------------------------------------------------------- #

# Expression stack registers; positions beyond spill to memory.
_STACK_REGS = (5, 6, 7, 8, 9, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22,
               23, 24, 25, 26, 27)
_SCRATCH_A = 28
_SCRATCH_B = 29
_GP = 3  # data base
_TP = 4  # input base
_A0 = isa.OUTPUT_REG

_SPILL_OFF = 0x1000  # spill slots at DATA_BASE + _SPILL_OFF


class _Asm:
    """Instruction buffer with label fixups for branch/jump offsets."""

    def __init__(self) -> None:
        self.instrs: list[Instruction] = []
        self.fixups: list[tuple[int, str]] = []
        self.labels: dict[str, int] = {}
        self._label_count = 0

    def emit(self, op: str, rd: int = 0, rs1: int = 0, rs2: int = 0, imm: int = 0) -> None:
        self.instrs.append(Instruction(op, rd, rs1, rs2, to_word(imm)))

    def new_label(self, hint: str) -> str:
        self._label_count += 1
        return f"{hint}_{self._label_count}"

    def bind(self, label: str) -> None:
        self.labels[label] = len(self.instrs)

    def branch(self, op: str, rs1: int, rs2: int, label: str) -> None:
        self.fixups.append((len(self.instrs), label))
        self.emit(op, 0, rs1, rs2, 0)

    def jump(self, label: str) -> None:
        self.fixups.append((len(self.instrs), label))
        self.emit("jal", 0, 0, 0, 0)

    def li(self, rd: int, value: int) -> None:
        value = to_word(value)
        if -2048 <= to_signed(value) <= 2047:
            self.emit("addi", rd, 0, 0, value)
            return
        low = value & 0xFFF
        if low >= 0x800:
            low -= 0x1000
        high = to_word(value - low) >> 12
        self.emit("lui", rd, 0, 0, high)
        if low:
            self.emit("addi", rd, rd, 0, low)

    def finalize(self, arity: int) -> RefProgram:
        for index, label in self.fixups:
            target = self.labels[label]
            old = self.instrs[index]
            self.instrs[index] = Instruction(
                old.op, old.rd, old.rs1, old.rs2, to_word((target - index) * 4)
            )
        program = RefProgram(tuple(self.instrs), arity)
        isa.validate_program(program)
        return program


class _Compiler:
    def __init__(self, asm: _Asm, input_names: tuple[str, ...]):
        self.asm = asm
        self.input_index = {n: i for i, n in enumerate(input_names)}

    # A stack position lives in a register or, beyond the register file,
    # in a spill slot addressed off the data base register.

    def _reg(self, pos: int) -> int | None:
        return _STACK_REGS[pos] if pos < len(_STACK_REGS) else None

    def _spill_imm(self, pos: int) -> int:
        return _SPILL_OFF + 4 * (pos - len(_STACK_REGS))

    def load_pos(self, pos: int, scratch: int) -> int:
        reg = self._reg(pos)
        if reg is not None:
            return reg
        self.asm.emit("lw", scratch, _GP, 0, self._spill_imm(pos))
        return scratch

    def store_pos(self, pos: int, value_reg: int) -> None:
        reg = self._reg(pos)
        if reg is None:
            self.asm.emit("sw", 0, _GP, value_reg, self._spill_imm(pos))
        elif reg != value_reg:
            self.asm.emit("addi", reg, value_reg, 0, 0)

    def target_reg(self, pos: int) -> int:
        return self._reg(pos) or _SCRATCH_A

    def compile(self, expr: Expr, pos: int) -> None:
        asm = self.asm
        match expr:
            case il.Var(name):
                dst = self.target_reg(pos)
                asm.emit("lw", dst, _TP, 0, 4 * self.input_index[name])
                self.store_pos(pos, dst)
            case il.IntLit(value):
                dst = self.target_reg(pos)
                asm.li(dst, value)
                self.store_pos(pos, dst)
            case il.BoolLit(value):
                dst = self.target_reg(pos)
                asm.li(dst, 1 if value else 0)
                self.store_pos(pos, dst)
            case il.IntOp("pow", base, il.IntLit(exponent)):
                self.compile(base, pos)
                a = self.load_pos(pos, _SCRATCH_A)
                dst = self.target_reg(pos)
                if exponent == 2:
                    asm.emit("mul", dst, a, a)
                else:
                    asm.emit("mul", _SCRATCH_B, a, a)
                    asm.emit("mul", dst, _SCRATCH_B, a)
                self.store_pos(pos, dst)
            case il.IntOp(op, lhs, rhs):
                self.compile(lhs, pos)
                self.compile(rhs, pos + 1)
                a = self.load_pos(pos, _SCRATCH_A)
                b = self.load_pos(pos + 1, _SCRATCH_B)
                dst = self.target_reg(pos)
                mnemonic = {"div": "divu", "rem": "remu"}.get(op, op)
                asm.emit(mnemonic, dst, a, b)
                self.store_pos(pos, dst)
            case il.BoolOp(op, lhs, rhs):
                self.compile(lhs, pos)
                self.compile(rhs, pos + 1)
                a = self.load_pos(pos, _SCRATCH_A)
                b = self.load_pos(pos + 1, _SCRATCH_B)
                dst = self.target_reg(pos)
                asm.emit({"land": "and", "lor": "or", "lxor": "xor"}[op], dst, a, b)
                self.store_pos(pos, dst)
            case il.Not(operand):
                self.compile(operand, pos)
                a = self.load_pos(pos, _SCRATCH_A)
                dst = self.target_reg(pos)
                asm.emit("xori", dst, a, 0, 1)
                self.store_pos(pos, dst)
            case il.Cmp(op, lhs, rhs):
                self.compile(lhs, pos)
                self.compile(rhs, pos + 1)
                a = self.load_pos(pos, _SCRATCH_A)
                b = self.load_pos(pos + 1, _SCRATCH_B)
                dst = self.target_reg(pos)
                match op:
                    case "eq":
                        asm.emit("sub", dst, a, b)
                        asm.emit("sltiu", dst, dst, 0, 1)
                    case "neq":
                        asm.emit("sub", dst, a, b)
                        asm.emit("sltu", dst, 0, dst)
                    case "lt":
                        asm.emit("sltu", dst, a, b)
                    case "gt":
                        asm.emit("sltu", dst, b, a)
                    case "leq":
                        asm.emit("sltu", dst, b, a)
                        asm.emit("xori", dst, dst, 0, 1)
                    case "geq":
                        asm.emit("sltu", dst, a, b)
                        asm.emit("xori", dst, dst, 0, 1)
                self.store_pos(pos, dst)
            case il.Ite(cond, then, orelse):
                self.compile(cond, pos)
                c = self.load_pos(pos, _SCRATCH_A)
                else_label = asm.new_label("else")
                end_label = asm.new_label("end")
                asm.branch("beq", c, 0, else_label)
                self.compile(then, pos)
                asm.jump(end_label)
                asm.bind(else_label)
                self.compile(orelse, pos)
                asm.bind(end_label)
            case il.Call(fn, args):
                self.compile(args[0], pos)
                self.compile(args[1], pos + 1)
                a = self.load_pos(pos, _SCRATCH_A)
                b = self.load_pos(pos + 1, _SCRATCH_B)
                dst = self.target_reg(pos)
                asm.emit(_ASM_NAMES[fn], dst, a, b)
                self.store_pos(pos, dst)
            case _:
                raise ValueError(f"cannot compile {expr!r}")


def compile_to_refvm(product: ProductProgram) -> RefProgram:
    """Compile the whole product: each function body in sequence, results
    committed to the result buffer, then the comparison chain."""
    asm = _Asm()
    asm.emit("lui", _TP, 0, 0, INPUT_BASE >> 12)
    asm.emit("lui", _GP, 0, 0, DATA_BASE >> 12)

    for index, circuit in enumerate(product.circuits):
        compiler = _Compiler(asm, product.input_names)
        compiler.compile(circuit.output_expr, 0)
        result = compiler.load_pos(0, _SCRATCH_A)
        base = 4 * index
        asm.emit("sb", 0, _GP, result, base)
        for byte in (1, 2, 3):
            asm.emit("srli", _SCRATCH_B, result, 0, 8 * byte)
            asm.emit("sb", 0, _GP, _SCRATCH_B, base + byte)

    oops_label = asm.new_label("oops")
    end_label = asm.new_label("end")
    for index in range(len(product.circuits) - 1):
        asm.emit("lw", _SCRATCH_A, _GP, 0, 4 * index)
        asm.emit("lw", _SCRATCH_B, _GP, 0, 4 * (index + 1))
        asm.branch("bne", _SCRATCH_A, _SCRATCH_B, oops_label)
    asm.li(_A0, product.success_word)
    asm.jump(end_label)
    asm.bind(oops_label)
    asm.li(_A0, product.oops_word)
    asm.bind(end_label)
    asm.emit("halt")
    return asm.finalize(product.arity)
