"""RV32IM-style instruction dialect shared by the executor and the verifier.

Instructions are kept decoded: a mnemonic plus register indices and a full
32-bit immediate (the compiler stores immediates already sign-extended).
Memory is word-addressed with byte and halfword sub-access emulated inside
a word. One semantics function serves both execution and constraint replay
so the two sides cannot drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass

from .il import MASK32, to_signed, to_word

R_FORMAT = frozenset({
    "add", "sub", "mul", "mulh", "mulhsu", "mulhu", "div", "divu", "rem", "remu",
    "and", "or", "xor", "sll", "srl", "sra", "slt", "sltu",
})
I_FORMAT = frozenset({"addi", "andi", "ori", "xori", "slti", "sltiu", "slli", "srli", "srai"})
LOAD_FORMAT = frozenset({"lw", "lb", "lh", "lbu", "lhu"})
STORE_FORMAT = frozenset({"sw", "sh", "sb"})
BRANCH_FORMAT = frozenset({"beq", "bne", "blt", "bge", "bltu", "bgeu"})
U_FORMAT = frozenset({"lui", "auipc"})

MNEMONICS = (
    R_FORMAT | I_FORMAT | LOAD_FORMAT | STORE_FORMAT | BRANCH_FORMAT | U_FORMAT
    | {"jal", "jalr", "halt"}
)

_FORMAT_GROUPS: tuple[frozenset[str], ...] = (
    R_FORMAT, I_FORMAT, LOAD_FORMAT, STORE_FORMAT, BRANCH_FORMAT, U_FORMAT,
    frozenset({"jal"}), frozenset({"jalr"}), frozenset({"halt"}),
)

READS_RS1 = R_FORMAT | I_FORMAT | LOAD_FORMAT | STORE_FORMAT | BRANCH_FORMAT | {"jalr"}
READS_RS2 = R_FORMAT | STORE_FORMAT | BRANCH_FORMAT
WRITES_RD = R_FORMAT | I_FORMAT | LOAD_FORMAT | U_FORMAT | {"jal", "jalr"}
USES_IMM = I_FORMAT | LOAD_FORMAT | STORE_FORMAT | BRANCH_FORMAT | U_FORMAT | {"jal", "jalr"}

# Fixed memory map: inputs preloaded read-only at INPUT_BASE, scratch data
# (result slots, spills) at DATA_BASE.
INPUT_BASE = 0x1000
DATA_BASE = 0x2000
OUTPUT_REG = 10  # a0 holds the program output at halt

REG_NAMES = (
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0", "a1",
    "a2", "a3", "a4", "a5", "a6", "a7", "s2", "s3", "s4", "s5", "s6", "s7",
    "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6",
)


@dataclass(frozen=True, slots=True)
class Instruction:
    op: str
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0


class MalformedInstruction(ValueError):
    pass


def validate_instruction(instr: Instruction) -> None:
    if instr.op not in MNEMONICS:
        raise MalformedInstruction(f"unknown mnemonic {instr.op!r}")
    for field_name in ("rd", "rs1", "rs2"):
        reg = getattr(instr, field_name)
        if not 0 <= reg <= 31:
            raise MalformedInstruction(f"{field_name}={reg} out of range in {instr}")
    if not 0 <= instr.imm <= MASK32:
        raise MalformedInstruction(f"imm={instr.imm:#x} not a 32-bit word in {instr}")


def format_group(op: str) -> frozenset[str]:
    for group in _FORMAT_GROUPS:
        if op in group:
            return group
    raise MalformedInstruction(f"unknown mnemonic {op!r}")


@dataclass(frozen=True, slots=True)
class RefProgram:
    """Compiled program: entry at pc 0, exactly one trailing halt."""

    instructions: tuple[Instruction, ...]
    arity: int
    input_base: int = INPUT_BASE
    data_base: int = DATA_BASE

    def fetch(self, pc: int) -> Instruction | None:
        index = pc >> 2
        if pc % 4 == 0 and 0 <= index < len(self.instructions):
            return self.instructions[index]
        return None

    def fetch_lenient(self, pc: int) -> Instruction | None:
        index = (pc & ~0x3) >> 2
        if 0 <= index < len(self.instructions):
            return self.instructions[index]
        return None

    @property
    def mnemonics(self) -> frozenset[str]:
        return frozenset(i.op for i in self.instructions)


def validate_program(program: RefProgram) -> None:
    halts = [i for i, instr in enumerate(program.instructions) if instr.op == "halt"]
    if halts != [len(program.instructions) - 1]:
        raise MalformedInstruction("program must end in exactly one halt")
    for pc, instr in enumerate(program.instructions):
        validate_instruction(instr)
        if instr.op in BRANCH_FORMAT or instr.op == "jal":
            target = to_word(pc * 4 + instr.imm)
            if target % 4 != 0 or target >> 2 >= len(program.instructions):
                raise MalformedInstruction(f"jump target {target:#x} out of range at pc {pc * 4:#x}")


# --------------------------------------------------------------------------- #
# Semantics
# --------------------------------------------------------------------------- #


def alu(op: str, a: int, b: int) -> int:
    """Result of a three-register computation; also covers the I-format ops
    with ``b`` bound to the immediate."""
    sa, sb = to_signed(a), to_signed(b)
    match op:
        case "add" | "addi":
            return to_word(a + b)
        case "sub":
            return to_word(a - b)
        case "mul":
            return to_word(a * b)
        case "mulh":
            return to_word((sa * sb) >> 32)
        case "mulhsu":
            return to_word((sa * b) >> 32)
        case "mulhu":
            return (a * b) >> 32
        case "div":
            if b == 0:
                return MASK32
            if a == 0x8000_0000 and sb == -1:
                return a
            q = abs(sa) // abs(sb)
            return to_word(-q if (sa < 0) != (sb < 0) else q)
        case "divu":
            return MASK32 if b == 0 else a // b
        case "rem":
            if b == 0:
                return a
            if a == 0x8000_0000 and sb == -1:
                return 0
            q = abs(sa) // abs(sb)
            q = -q if (sa < 0) != (sb < 0) else q
            return to_word(sa - sb * q)
        case "remu":
            return a if b == 0 else a % b
        case "and" | "andi":
            return a & b
        case "or" | "ori":
            return a | b
        case "xor" | "xori":
            return a ^ b
        case "sll" | "slli":
            return to_word(a << (b & 31))
        case "srl" | "srli":
            return a >> (b & 31)
        case "sra" | "srai":
            return to_word(sa >> (b & 31))
        case "slt" | "slti":
            return 1 if sa < sb else 0
        case "sltu" | "sltiu":
            return 1 if a < b else 0
    raise MalformedInstruction(f"not an ALU mnemonic: {op!r}")


def branch_taken(op: str, a: int, b: int) -> bool:
    match op:
        case "beq":
            return a == b
        case "bne":
            return a != b
        case "blt":
            return to_signed(a) < to_signed(b)
        case "bge":
            return to_signed(a) >= to_signed(b)
        case "bltu":
            return a < b
        case "bgeu":
            return a >= b
    raise MalformedInstruction(f"not a branch mnemonic: {op!r}")


def mem_address(op: str, rs1_val: int, imm: int) -> int:
    assert op in LOAD_FORMAT or op in STORE_FORMAT
    return to_word(rs1_val + imm)


def access_width(op: str) -> int:
    if op in ("lb", "lbu", "sb"):
        return 1
    if op in ("lh", "lhu", "sh"):
        return 2
    return 4


def load_extract(op: str, word: int, addr: int) -> int:
    """Register value produced by a load from the containing word."""
    shift = 8 * (addr & 3)
    match op:
        case "lw":
            return word
        case "lbu":
            return (word >> shift) & 0xFF
        case "lhu":
            return (word >> shift) & 0xFFFF
        case "lb":
            byte = (word >> shift) & 0xFF
            return byte | 0xFFFFFF00 if byte & 0x80 else byte
        case "lh":
            half = (word >> shift) & 0xFFFF
            return half | 0xFFFF0000 if half & 0x8000 else half
    raise MalformedInstruction(f"not a load mnemonic: {op!r}")


def store_merge(op: str, old_word: int, value: int, addr: int) -> int:
    """Word written back by a store (sub-word lanes merged into the old word)."""
    shift = 8 * (addr & 3)
    match op:
        case "sw":
            return value
        case "sb":
            lane = 0xFF << shift
            return (old_word & ~lane | (value & 0xFF) << shift) & MASK32
        case "sh":
            lane = (0xFFFF << shift) & MASK32  # truncated at the word boundary
            return (old_word & ~lane | ((value & 0xFFFF) << shift) & MASK32) & MASK32
    raise MalformedInstruction(f"not a store mnemonic: {op!r}")


def store_lane_mask(op: str, addr: int) -> int:
    """Bits of the written word that carry the store value."""
    shift = 8 * (addr & 3)
    match op:
        case "sw":
            return MASK32
        case "sb":
            return (0xFF << shift) & MASK32
        case "sh":
            return (0xFFFF << shift) & MASK32
    raise MalformedInstruction(f"not a store mnemonic: {op!r}")


def store_value_mask(op: str) -> int:
    """Portion of the source register a store consumes."""
    return {"sb": 0xFF, "sh": 0xFFFF, "sw": MASK32}[op]


@dataclass(frozen=True, slots=True)
class Effect:
    """Architectural effect of one instruction, before memory resolution."""

    rd_val: int | None
    next_pc: int
    mem_addr: int | None = None
    mem_kind: str | None = None  # "load" | "store"


def isa_semantics(instr: Instruction, rs1_val: int, rs2_val: int, imm: int, pc: int) -> Effect:
    """Pure single-instruction semantics.

    Loads and stores report their address; the caller resolves the memory
    word through :func:`load_extract` / :func:`store_merge`.
    """
    op = instr.op
    if op in R_FORMAT:
        return Effect(alu(op, rs1_val, rs2_val), to_word(pc + 4))
    if op in I_FORMAT:
        return Effect(alu(op, rs1_val, imm), to_word(pc + 4))
    if op in U_FORMAT:
        if op == "lui":
            return Effect(to_word(imm << 12), to_word(pc + 4))
        return Effect(to_word(pc + (imm << 12)), to_word(pc + 4))
    if op in BRANCH_FORMAT:
        taken = branch_taken(op, rs1_val, rs2_val)
        return Effect(None, to_word(pc + imm) if taken else to_word(pc + 4))
    if op == "jal":
        return Effect(to_word(pc + 4), to_word(pc + imm))
    if op == "jalr":
        return Effect(to_word(pc + 4), to_word(rs1_val + imm) & ~1)
    if op in LOAD_FORMAT:
        return Effect(None, to_word(pc + 4), mem_address(op, rs1_val, imm), "load")
    if op in STORE_FORMAT:
        return Effect(None, to_word(pc + 4), mem_address(op, rs1_val, imm), "store")
    if op == "halt":
        return Effect(None, to_word(pc + 4))
    raise MalformedInstruction(f"unknown mnemonic {op!r}")


def disasm(instr: Instruction) -> str:
    op = instr.op
    rd, rs1, rs2 = REG_NAMES[instr.rd], REG_NAMES[instr.rs1], REG_NAMES[instr.rs2]
    simm = to_signed(instr.imm)
    if op in R_FORMAT:
        return f"{op} {rd}, {rs1}, {rs2}"
    if op in I_FORMAT:
        return f"{op} {rd}, {rs1}, {simm}"
    if op in LOAD_FORMAT:
        return f"{op} {rd}, {simm}({rs1})"
    if op in STORE_FORMAT:
        return f"{op} {rs2}, {simm}({rs1})"
    if op in BRANCH_FORMAT:
        return f"{op} {rs1}, {rs2}, {simm}"
    if op == "jal":
        return f"jal {rd}, {simm}"
    if op == "jalr":
        return f"jalr {rd}, {rs1}, {simm}"
    if op == "lui" or op == "auipc":
        return f"{op} {rd}, {instr.imm:#x}"
    return "halt"


def disassemble(program: RefProgram) -> str:
    lines = [
        f"{pc * 4:#06x}: {disasm(instr)}"
        for pc, instr in enumerate(program.instructions)
    ]
    return "\n".join(lines) + "\n"
