"""Fault-injection planning: mutation payloads and the fairness scheduler.

A plan names an injection type, the trace step at which the executor's
triple guard fires (injection enabled, type matches, step matches), and a
payload seed feeding all randomized choices, so any injected run can be
replayed exactly.

The scheduler balances injections across instruction mnemonics: it targets
a uniformly chosen member of the least-injected mnemonics present in the
trace, then a uniformly chosen occurrence of that mnemonic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import isa
from .isa import Instruction

INJECTION_TYPES = (
    "INSTR_WORD_MOD",
    "PRE_EXEC_PC_MOD",
    "POST_EXEC_PC_MOD",
    "COMP_OUT_MOD",
    "LOAD_VAL_MOD",
    "STORE_OUT_MOD",
    "PRE_EXEC_REG_MOD",
    "POST_EXEC_REG_MOD",
    "PRE_EXEC_MEM_MOD",
    "POST_EXEC_MEM_MOD",
    "BR_NEG_COND",
)

_MUTATION_CLASSES = ("opcode", "rd", "rs1", "rs2", "imm")


@dataclass(frozen=True)
class InjectionPlan:
    type: str
    target_step: int
    payload_seed: int
    target_mnemonic: str = ""  # informational; derivable from the normal trace


def random_word_mod(value: int, rng: random.Random) -> int:
    """A word guaranteed to differ from ``value``: boundary values, bit
    flips, off-by-ones, or a fresh random word."""
    new = value
    while new == value:
        match rng.randrange(8):
            case 0:
                new = 0
            case 1:
                new = 1
            case 2:
                new = 0xFFFFFFFF
            case 3:
                new = 0xFFFFFFFE
            case 4:
                flips = rng.randrange(1, 32)
                new = value
                for bit in rng.sample(range(32), flips):
                    new ^= 1 << bit
            case 5:
                new = min(value + 1, 0xFFFFFFFF)
            case 6:
                new = max(value - 1, 0)
            case 7:
                new = rng.getrandbits(32)
    return new


def random_pc_mod(pc: int, rng: random.Random) -> int:
    """Perturb a program counter by a small, medium, or large word count."""
    match rng.randrange(3):
        case 0:
            words = 1
        case 1:
            words = rng.randint(2, 10)
        case _:
            words = rng.randint(11, 1000)
    delta = words * 4
    if rng.random() < 0.5:
        return (pc + delta) & 0xFFFFFFFF
    return max(pc - delta, 0)


def mutate_instruction(instr: Instruction, rng: random.Random) -> Instruction:
    """A well-formed instruction differing from the input in one field class.

    The class is drawn uniformly from {opcode within the same operand
    format, rd, rs1, rs2, imm}; the replacement value is uniform within the
    class. The result is never ``halt``. Mutating a ``halt`` (a singleton
    format) replaces it with a random instruction instead.
    """
    if instr.op == "halt":
        op = rng.choice(sorted(isa.MNEMONICS - {"halt"}))
        mutated = Instruction(
            op, rng.randrange(32), rng.randrange(32), rng.randrange(32), rng.getrandbits(32)
        )
        isa.validate_instruction(mutated)
        return mutated

    group = sorted(isa.format_group(instr.op) - {instr.op})
    classes = list(_MUTATION_CLASSES) if group else [c for c in _MUTATION_CLASSES if c != "opcode"]
    match rng.choice(classes):
        case "opcode":
            mutated = Instruction(rng.choice(group), instr.rd, instr.rs1, instr.rs2, instr.imm)
        case "rd":
            rd = rng.choice([r for r in range(32) if r != instr.rd])
            mutated = Instruction(instr.op, rd, instr.rs1, instr.rs2, instr.imm)
        case "rs1":
            rs1 = rng.choice([r for r in range(32) if r != instr.rs1])
            mutated = Instruction(instr.op, instr.rd, rs1, instr.rs2, instr.imm)
        case "rs2":
            rs2 = rng.choice([r for r in range(32) if r != instr.rs2])
            mutated = Instruction(instr.op, instr.rd, instr.rs1, rs2, instr.imm)
        case _:
            mutated = Instruction(
                instr.op, instr.rd, instr.rs1, instr.rs2, random_word_mod(instr.imm, rng)
            )
    isa.validate_instruction(mutated)
    assert mutated != instr and mutated.op != "halt"
    return mutated


def schedule(
    trace,
    counters: dict[str, int],
    enabled_types: tuple[str, ...] | frozenset[str],
    rng: random.Random,
) -> InjectionPlan:
    """Plan one injection against a collected trace.

    Picks uniformly among the least-injected mnemonics occurring in the
    trace, then uniformly among that mnemonic's occurrences, then uniformly
    among the enabled injection types; increments the chosen mnemonic's
    counter.
    """
    if not trace.rows:
        raise ValueError("cannot schedule an injection against an empty trace")
    present = sorted({row.op for row in trace.rows})
    least = min(counters.get(m, 0) for m in present)
    candidates = [m for m in present if counters.get(m, 0) == least]
    mnemonic = rng.choice(candidates)
    occurrences = [row.step for row in trace.rows if row.op == mnemonic]
    target_step = rng.choice(occurrences)
    itype = rng.choice(sorted(enabled_types))
    counters[mnemonic] = counters.get(mnemonic, 0) + 1
    return InjectionPlan(itype, target_step, rng.getrandbits(64), mnemonic)


class ActiveInjection:
    """Executor-side state for one planned fault.

    The guard fires when the global step counter reaches the plan's target
    step and the probed type matches; the counter increments after every
    executed instruction, so the fault lands exactly once.
    """

    def __init__(self, plan: InjectionPlan):
        self.plan = plan
        self.rng = random.Random(plan.payload_seed)
        self.current_step = 0
        self.fired = False

    def should_fire(self, itype: str) -> bool:
        if self.plan.type != itype or self.current_step != self.plan.target_step:
            return False
        self.fired = True
        return True

    def tick(self) -> None:
        self.current_step += 1

    # Payload draws, all fed by the plan's seeded rng.

    def new_instruction(self, instr: Instruction) -> Instruction:
        return mutate_instruction(instr, self.rng)

    def mod_word(self, value: int) -> int:
        return random_word_mod(value, self.rng)

    def new_pc(self, pc: int) -> int:
        return random_pc_mod(pc, self.rng)

    def random_register(self) -> int:
        return self.rng.randrange(1, 32)

    def random_address(self, data_base: int) -> int:
        if self.rng.random() < 0.5:
            return data_base + 4 * self.rng.randrange(64)
        return self.rng.getrandbits(32)

    def register_payload(self, current: int) -> int:
        if self.rng.random() < 0.5:
            return self.rng.getrandbits(32)
        return random_word_mod(current, self.rng)
