"""Reference mini-VM: a trace-recording executor and a replaying verifier.

The executor runs a compiled program and records one row per executed
instruction. A row carries the committed instruction identity (mnemonic and
register indices bound to the program text), the immediate actually used,
the operand values actually consumed, the value written back, any memory
effect, and the next pc. Injected faults write through architecturally, so
downstream instructions consume the faulty values and the rest of the trace
stays self-consistent with respect to the faulty state.

The verifier replays a shadow machine over the trace and checks, per row:

  C1  the claimed instruction (and its immediate) equals the program's
  C2  consumed operand values equal the shadow register file
  C3  the written-back value follows the ISA from the consumed operands
  C4  control flow: rows chain on pc and next_pc follows the ISA
  C5  memory: loads return the last stored/initial word, stores merge the
      consumed value into the old word
  C6  the trace ends in a clean halt and the final output matches the
      shadow output register

After each row the shadow absorbs the recorded values, so a single fault
shows up as exactly one local inconsistency. Weakness flags delete specific
checks; defect flags add spurious rejections. All are off by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import isa
from .il import MASK32, to_word
from .inject import ActiveInjection, InjectionPlan
from .isa import (
    BRANCH_FORMAT,
    LOAD_FORMAT,
    OUTPUT_REG,
    R_FORMAT,
    STORE_FORMAT,
    Instruction,
    RefProgram,
)

DEFAULT_STEP_BUDGET = 1_000_000

# Verifier-side trace layout: proofs are organized in fixed row segments;
# the cycle-count defect manifests at segment boundaries.
SEGMENT_ROWS = 32
SHORT_TRACE_ROWS = 256

WEAKNESS_NAMES = ("W_TRIREG", "W_STORE_LOW", "W_LUI_IMM", "D_SHORT_TRACE", "D_CYCLE_OFF_BY_ONE")


@dataclass(frozen=True)
class WeaknessSet:
    """Seeded verifier bugs: soundness flags delete checks, completeness
    defects spuriously reject valid traces. Default all off (correct VM)."""

    w_trireg: bool = False          # drop the rs2-value check on three-register ops
    w_store_low: bool = False       # drop low-8-bit agreement on store values
    w_lui_imm: bool = False         # drop the immediate binding for lui
    d_short_trace: bool = False     # reject traces shorter than 256 rows
    d_cycle_off_by_one: bool = False  # miscount rows by one at segment boundaries

    @classmethod
    def from_names(cls, names) -> "WeaknessSet":
        names = set(names)
        unknown = names - set(WEAKNESS_NAMES)
        if unknown:
            raise ValueError(f"unknown weakness flags: {sorted(unknown)}")
        return cls(*(n in names for n in WEAKNESS_NAMES))

    def names(self) -> tuple[str, ...]:
        flags = (self.w_trireg, self.w_store_low, self.w_lui_imm,
                 self.d_short_trace, self.d_cycle_off_by_one)
        return tuple(n for n, on in zip(WEAKNESS_NAMES, flags) if on)


@dataclass(frozen=True, slots=True)
class TraceRow:
    step: int
    pc: int
    op: str
    rd: int
    rs1: int
    rs2: int
    imm: int
    rs1_val: int
    rs2_val: int
    rd_val: int
    mem_addr: int | None
    mem_val: int | None
    next_pc: int


@dataclass(frozen=True, slots=True)
class ExitStatus:
    kind: str  # "clean" | "fault" | "step-budget-exceeded"
    detail: str = ""

    @property
    def clean(self) -> bool:
        return self.kind == "clean"


EXIT_CLEAN = ExitStatus("clean")


@dataclass(frozen=True)
class TraceRecord:
    rows: tuple[TraceRow, ...]
    final_output: int
    exit: ExitStatus
    inputs: tuple[int, ...]  # the public input binding the verifier checks against

    def __len__(self) -> int:
        return len(self.rows)


# --------------------------------------------------------------------------- #
# Executor
# --------------------------------------------------------------------------- #


def execute(
    program: RefProgram,
    inputs: list[int] | tuple[int, ...],
    plan: InjectionPlan | None = None,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> TraceRecord:
    """Run a program; with a plan, apply its fault once and run leniently.

    Lenient mode tolerates misaligned accesses and input-region writes so
    injected faults propagate instead of aborting (executor sanity checks
    model prover-internal assertions, which a malicious prover disables).
    """
    if len(inputs) != program.arity:
        raise ValueError(f"expected {program.arity} inputs, got {len(inputs)}")
    inputs = tuple(to_word(v) for v in inputs)
    inj = ActiveInjection(plan) if plan is not None else None
    lenient = inj is not None

    regs = [0] * 32
    mem: dict[int, int] = {program.input_base + 4 * i: v for i, v in enumerate(inputs)}
    input_lo = program.input_base
    input_hi = program.input_base + 4 * len(inputs)
    rows: list[TraceRow] = []
    pc = 0

    def finish(kind: str, detail: str = "") -> TraceRecord:
        return TraceRecord(tuple(rows), regs[OUTPUT_REG], ExitStatus(kind, detail), inputs)

    while True:
        if len(rows) >= step_budget:
            return finish("step-budget-exceeded", f"budget {step_budget}")

        if inj is not None:
            if inj.should_fire("PRE_EXEC_PC_MOD"):
                pc = inj.new_pc(pc)
            if inj.should_fire("PRE_EXEC_REG_MOD"):
                reg = inj.random_register()
                regs[reg] = inj.register_payload(regs[reg])
            if inj.should_fire("PRE_EXEC_MEM_MOD"):
                addr = inj.random_address(program.data_base) & ~0x3
                mem[addr] = inj.register_payload(mem.get(addr, 0))

        if pc % 4 != 0 and not lenient:
            return finish("fault", f"misaligned pc {pc:#x}")
        committed = program.fetch_lenient(pc) if lenient else program.fetch(pc)
        if committed is None:
            return finish("fault", f"pc {pc:#x} outside program")

        actual = committed
        if inj is not None and inj.should_fire("INSTR_WORD_MOD"):
            actual = inj.new_instruction(committed)

        op = actual.op
        rs1_val = regs[actual.rs1]
        rs2_val = regs[actual.rs2]
        rd_val = 0
        mem_addr: int | None = None
        mem_val: int | None = None
        next_pc = to_word(pc + 4)
        halted = False

        if op == "halt":
            halted = True
        elif op in BRANCH_FORMAT:
            taken = isa.branch_taken(op, rs1_val, rs2_val)
            if inj is not None and inj.should_fire("BR_NEG_COND"):
                taken = not taken
            next_pc = to_word(pc + actual.imm) if taken else to_word(pc + 4)
        elif op in LOAD_FORMAT:
            addr = isa.mem_address(op, rs1_val, actual.imm)
            if addr % isa.access_width(op) != 0 and not lenient:
                return finish("fault", f"misaligned {op} at {addr:#x}")
            word = mem.get(addr & ~0x3, 0)
            if inj is not None and inj.should_fire("LOAD_VAL_MOD"):
                word = inj.mod_word(word)
            mem_addr, mem_val = addr, word
            out = isa.load_extract(op, word, addr)
            if actual.rd:
                regs[actual.rd] = out
            rd_val = regs[actual.rd]
        elif op in STORE_FORMAT:
            addr = isa.mem_address(op, rs1_val, actual.imm)
            if not lenient:
                if addr % isa.access_width(op) != 0:
                    return finish("fault", f"misaligned {op} at {addr:#x}")
                if input_lo <= addr < input_hi:
                    return finish("fault", f"store into read-only input region at {addr:#x}")
            word_addr = addr & ~0x3
            merged = isa.store_merge(op, mem.get(word_addr, 0), rs2_val, addr)
            if inj is not None and inj.should_fire("STORE_OUT_MOD"):
                merged = inj.mod_word(merged)
            mem[word_addr] = merged
            mem_addr, mem_val = addr, merged
        else:
            eff = isa.isa_semantics(actual, rs1_val, rs2_val, actual.imm, pc)
            out = eff.rd_val
            next_pc = eff.next_pc
            if inj is not None and inj.should_fire("COMP_OUT_MOD"):
                out = inj.mod_word(out)
            if actual.rd:
                regs[actual.rd] = out
            rd_val = regs[actual.rd]

        if inj is not None and not halted:
            if inj.should_fire("POST_EXEC_PC_MOD"):
                next_pc = inj.new_pc(next_pc)
            if inj.should_fire("POST_EXEC_REG_MOD"):
                reg = inj.random_register()
                regs[reg] = inj.register_payload(regs[reg])
            if inj.should_fire("POST_EXEC_MEM_MOD"):
                waddr = inj.random_address(program.data_base) & ~0x3
                mem[waddr] = inj.register_payload(mem.get(waddr, 0))

        rows.append(TraceRow(
            step=len(rows),
            pc=pc,
            op=committed.op,
            rd=committed.rd,
            rs1=committed.rs1,
            rs2=committed.rs2,
            imm=actual.imm,
            rs1_val=rs1_val,
            rs2_val=rs2_val,
            rd_val=rd_val,
            mem_addr=mem_addr,
            mem_val=mem_val,
            next_pc=next_pc,
        ))
        if inj is not None:
            inj.tick()
        if halted:
            return finish("clean")
        pc = next_pc


# --------------------------------------------------------------------------- #
# Verifier
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class VerifyResult:
    accepted: bool
    constraint: str | None = None
    row: int | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.accepted


ACCEPT = VerifyResult(True)


def _reject(constraint: str, row: int | None, detail: str) -> VerifyResult:
    return VerifyResult(False, constraint, row, detail)


def verify(
    program: RefProgram,
    trace: TraceRecord,
    weaknesses: WeaknessSet = WeaknessSet(),
) -> VerifyResult:
    """Replay the trace against the program's constraints; pure and total."""
    rows = trace.rows

    if weaknesses.d_short_trace and len(rows) < SHORT_TRACE_ROWS:
        return _reject("D_SHORT_TRACE", None,
                       f"commitment stage cannot handle {len(rows)} rows (< {SHORT_TRACE_ROWS})")
    if weaknesses.d_cycle_off_by_one and rows:
        counted = len(rows) - 1  # the final processing step goes uncounted
        if math.ceil(counted / SEGMENT_ROWS) != math.ceil(len(rows) / SEGMENT_ROWS):
            return _reject("D_CYCLE_OFF_BY_ONE", None,
                           f"cycle count {counted} inconsistent with {len(rows)} committed rows")

    shadow_regs = [0] * 32
    shadow_mem: dict[int, int] = {
        program.input_base + 4 * i: to_word(v) for i, v in enumerate(trace.inputs)
    }
    expected_pc = 0

    for i, row in enumerate(rows):
        if row.pc != expected_pc:
            return _reject("C4", i, f"pc {row.pc:#x} does not chain from {expected_pc:#x}")
        committed = program.fetch_lenient(row.pc)
        if committed is None:
            return _reject("C1", i, f"pc {row.pc:#x} outside program")
        if (row.op, row.rd, row.rs1, row.rs2) != (committed.op, committed.rd, committed.rs1, committed.rs2):
            return _reject("C1", i, f"instruction identity differs from program: {row.op}")
        if row.op in isa.USES_IMM and row.imm != committed.imm:
            if not (weaknesses.w_lui_imm and row.op == "lui"):
                return _reject("C1", i,
                               f"imm {row.imm:#x} differs from committed {committed.imm:#x}")

        if row.op in isa.READS_RS1 and row.rs1_val != shadow_regs[row.rs1]:
            return _reject("C2", i,
                           f"rs1 value {row.rs1_val:#x} != shadow {shadow_regs[row.rs1]:#x}")
        if row.op in isa.READS_RS2:
            if row.op in STORE_FORMAT:
                mask = isa.store_value_mask(row.op)
                if weaknesses.w_store_low:
                    mask &= ~0xFF
                if (row.rs2_val ^ shadow_regs[row.rs2]) & mask:
                    return _reject("C2", i,
                                   f"store value {row.rs2_val:#x} != shadow {shadow_regs[row.rs2]:#x}")
            elif row.op in R_FORMAT and weaknesses.w_trireg:
                pass  # seeded gap: second operand of three-register ops unchecked
            elif row.rs2_val != shadow_regs[row.rs2]:
                return _reject("C2", i,
                               f"rs2 value {row.rs2_val:#x} != shadow {shadow_regs[row.rs2]:#x}")

        claimed = Instruction(row.op, row.rd, row.rs1, row.rs2, row.imm)
        eff = isa.isa_semantics(claimed, row.rs1_val, row.rs2_val, row.imm, row.pc)

        if row.op in LOAD_FORMAT:
            if row.mem_addr != eff.mem_addr:
                return _reject("C5", i, f"load address {row.mem_addr} != {eff.mem_addr:#x}")
            expected_word = shadow_mem.get(row.mem_addr & ~0x3, 0)
            if row.mem_val != expected_word:
                return _reject("C5", i,
                               f"load word {row.mem_val:#x} != memory {expected_word:#x}")
            expected_rd = isa.load_extract(row.op, row.mem_val, row.mem_addr)
            if row.rd_val != (expected_rd if row.rd else 0):
                return _reject("C3", i, f"loaded rd value {row.rd_val:#x} wrong")
            if row.rd:
                shadow_regs[row.rd] = row.rd_val
        elif row.op in STORE_FORMAT:
            if row.mem_addr != eff.mem_addr:
                return _reject("C5", i, f"store address {row.mem_addr} != {eff.mem_addr:#x}")
            word_addr = row.mem_addr & ~0x3
            expected_word = isa.store_merge(
                row.op, shadow_mem.get(word_addr, 0), row.rs2_val, row.mem_addr
            )
            mask = MASK32
            if weaknesses.w_store_low:
                mask &= ~isa.store_lane_mask("sb", row.mem_addr)  # value's low byte lane
            if (row.mem_val ^ expected_word) & mask:
                return _reject("C5", i,
                               f"stored word {row.mem_val:#x} != expected {expected_word:#x}")
            shadow_mem[word_addr] = row.mem_val
        else:
            if row.mem_addr is not None or row.mem_val is not None:
                return _reject("C5", i, f"{row.op} row claims a memory effect")
            if eff.rd_val is not None:
                if row.rd_val != (eff.rd_val if row.rd else 0):
                    return _reject("C3", i,
                                   f"rd value {row.rd_val:#x} != semantics {eff.rd_val:#x}")
                if row.rd:
                    shadow_regs[row.rd] = row.rd_val

        if row.next_pc != eff.next_pc:
            return _reject("C4", i, f"next pc {row.next_pc:#x} != semantics {eff.next_pc:#x}")
        expected_pc = row.next_pc

    if not rows or rows[-1].op != "halt" or not trace.exit.clean:
        return _reject("C6", len(rows) - 1 if rows else None, "trace does not end in a clean halt")
    if trace.final_output != shadow_regs[OUTPUT_REG]:
        return _reject("C6", len(rows) - 1,
                       f"final output {trace.final_output:#x} != shadow {shadow_regs[OUTPUT_REG]:#x}")
    return ACCEPT


def shadow_replay_output(program: RefProgram, trace: TraceRecord) -> int:
    """Output register of the verifier's shadow machine after full replay."""
    shadow_regs = [0] * 32
    for row in trace.rows:
        if row.op in isa.WRITES_RD and row.rd:
            shadow_regs[row.rd] = row.rd_val
    return shadow_regs[OUTPUT_REG]


# --------------------------------------------------------------------------- #
# Trace dump format
# --------------------------------------------------------------------------- #

_DUMP_COLUMNS = ("step", "pc", "op", "rd", "rs1", "rs2", "imm", "rs1_val",
                 "rs2_val", "rd_val", "mem_addr", "mem_val", "next_pc")


def _hx(value: int | None) -> str:
    return "-" if value is None else f"{value:#010x}"


def dump_trace(trace: TraceRecord) -> str:
    """One tab-separated line per row, hex words, '-' for absent memory
    fields; metadata in leading comment lines."""
    lines = [
        "# inputs: " + " ".join(f"{v:#010x}" for v in trace.inputs),
        "# exit: " + (trace.exit.kind + (f" {trace.exit.detail}" if trace.exit.detail else "")),
        f"# final_output: {trace.final_output:#010x}",
    ]
    for r in trace.rows:
        lines.append("\t".join((
            str(r.step), _hx(r.pc), r.op, str(r.rd), str(r.rs1), str(r.rs2),
            _hx(r.imm), _hx(r.rs1_val), _hx(r.rs2_val), _hx(r.rd_val),
            _hx(r.mem_addr), _hx(r.mem_val), _hx(r.next_pc),
        )))
    return "\n".join(lines) + "\n"


def load_trace(text: str) -> TraceRecord:
    inputs: tuple[int, ...] = ()
    exit_status = EXIT_CLEAN
    final_output = 0
    rows: list[TraceRow] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("inputs:"):
                inputs = tuple(int(v, 16) for v in body[len("inputs:"):].split())
            elif body.startswith("exit:"):
                parts = body[len("exit:"):].strip().split(None, 1)
                exit_status = ExitStatus(parts[0], parts[1] if len(parts) > 1 else "")
            elif body.startswith("final_output:"):
                final_output = int(body[len("final_output:"):].strip(), 16)
            continue
        cols = line.split("\t")
        if len(cols) != len(_DUMP_COLUMNS):
            raise ValueError(f"bad trace row (expected {len(_DUMP_COLUMNS)} columns): {line!r}")

        def num(s: str) -> int | None:
            return None if s == "-" else int(s, 16)

        rows.append(TraceRow(
            step=int(cols[0]), pc=num(cols[1]), op=cols[2], rd=int(cols[3]),
            rs1=int(cols[4]), rs2=int(cols[5]), imm=num(cols[6]),
            rs1_val=num(cols[7]), rs2_val=num(cols[8]), rd_val=num(cols[9]),
            mem_addr=num(cols[10]), mem_val=num(cols[11]), next_pc=num(cols[12]),
        ))
    return TraceRecord(tuple(rows), final_output, exit_status, inputs)
