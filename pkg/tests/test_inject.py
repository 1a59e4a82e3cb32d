import random
from collections import Counter

import pytest

from zkvmfuzz import codegen, il, isa, vm
from zkvmfuzz.inject import (
    INJECTION_TYPES,
    InjectionPlan,
    mutate_instruction,
    random_word_mod,
    schedule,
)
from zkvmfuzz.isa import Instruction


def sample_trace():
    c1 = il.parse_circuit("inputs : a, b, c\noutputs: out\nout = (a % (b + c))\n")
    c2 = il.parse_circuit("inputs : a, b, c\noutputs: out\nout = (a % ((c + 0) + b))\n")
    program = codegen.compile_to_refvm(codegen.emit_product_program([c1, c2]))
    return program, vm.execute(program, [7, 3, 2])


# ---------------------------------------------------------------- mutation

def test_mutation_always_differs():
    rng = random.Random(0)
    instr = Instruction("remu", 5, 5, 6, 0)
    for _ in range(2000):
        assert mutate_instruction(instr, rng) != instr


def test_mutation_never_produces_halt():
    rng = random.Random(1)
    for op in ("halt", "add", "jal", "lw"):
        instr = Instruction(op, 1, 2, 3, 4)
        for _ in range(500):
            assert mutate_instruction(instr, rng).op != "halt"


def test_mutation_output_is_well_formed():
    rng = random.Random(2)
    for op in sorted(isa.MNEMONICS):
        instr = Instruction(op, 1, 2, 3, 4)
        for _ in range(200):
            isa.validate_instruction(mutate_instruction(instr, rng))


def test_mutation_stays_within_operand_format():
    rng = random.Random(3)
    for _ in range(500):
        mutated = mutate_instruction(Instruction("sw", 0, 3, 5, 8), rng)
        assert mutated.op in isa.STORE_FORMAT
    for _ in range(500):
        mutated = mutate_instruction(Instruction("beq", 0, 1, 2, 8), rng)
        assert mutated.op in isa.BRANCH_FORMAT


def test_operand_swap_is_reachable():
    # The walkthrough mutation: remu rd, rs1, rs2 -> remu rd, rs1, rs1.
    instr = Instruction("remu", 5, 5, 6, 0)
    want = Instruction("remu", 5, 5, 5, 0)
    assert any(
        mutate_instruction(instr, random.Random(seed)) == want for seed in range(20_000)
    )


def test_all_field_classes_observed_on_add():
    rng = random.Random(4)
    instr = Instruction("add", 5, 6, 7, 0)
    classes = Counter()
    for _ in range(10_000):
        m = mutate_instruction(instr, rng)
        if m.op != instr.op:
            classes["opcode"] += 1
        elif m.rd != instr.rd:
            classes["rd"] += 1
        elif m.rs1 != instr.rs1:
            classes["rs1"] += 1
        elif m.rs2 != instr.rs2:
            classes["rs2"] += 1
        else:
            classes["imm"] += 1
    assert set(classes) == {"opcode", "rd", "rs1", "rs2", "imm"}
    for count in classes.values():
        assert count > 1000  # roughly uniform over the five classes


def test_random_word_mod_differs():
    rng = random.Random(5)
    for value in (0, 1, 0xFFFFFFFF, 0xC0FFEE):
        for _ in range(200):
            assert random_word_mod(value, rng) != value


# ---------------------------------------------------------------- scheduler

def test_scheduler_prefers_least_injected():
    _, trace = sample_trace()
    counters = {op: 5 for op in {r.op for r in trace.rows}}
    counters["remu"] = 0
    plan = schedule(trace, counters, INJECTION_TYPES, random.Random(0))
    assert plan.target_mnemonic == "remu"
    assert trace.rows[plan.target_step].op == "remu"
    assert counters["remu"] == 1


def test_scheduler_increments_only_chosen():
    _, trace = sample_trace()
    counters: dict[str, int] = {}
    plan = schedule(trace, counters, ("INSTR_WORD_MOD",), random.Random(1))
    assert counters == {plan.target_mnemonic: 1}
    assert plan.type == "INSTR_WORD_MOD"


def test_scheduler_row_choice_uniform():
    # Two remu occurrences; with everything else saturated each row should
    # be hit about half the time (tolerance +/- 5% over 10,000 draws).
    _, trace = sample_trace()
    remu_steps = [r.step for r in trace.rows if r.op == "remu"]
    assert len(remu_steps) == 2
    hits = Counter()
    rng = random.Random(2)
    for _ in range(10_000):
        counters = {op: 5 for op in {r.op for r in trace.rows}}
        counters["remu"] = 0
        plan = schedule(trace, counters, INJECTION_TYPES, rng)
        hits[plan.target_step] += 1
    assert set(hits) == set(remu_steps)
    for step in remu_steps:
        assert abs(hits[step] / 10_000 - 0.5) <= 0.05


def test_scheduler_single_row_trace():
    program, trace = sample_trace()
    single = vm.TraceRecord(trace.rows[:1], 0, vm.ExitStatus("fault", "cut"), trace.inputs)
    plan = schedule(single, {}, INJECTION_TYPES, random.Random(3))
    assert plan.target_step == trace.rows[0].step


def test_scheduler_rejects_empty_trace():
    _, trace = sample_trace()
    empty = vm.TraceRecord((), 0, vm.EXIT_CLEAN, trace.inputs)
    with pytest.raises(ValueError):
        schedule(empty, {}, INJECTION_TYPES, random.Random(0))


def test_scheduler_always_selects_from_argmin():
    program, trace = sample_trace()
    counters: dict[str, int] = {}
    rng = random.Random(4)
    for _ in range(300):
        present = {r.op for r in trace.rows}
        least = min(counters.get(m, 0) for m in present)
        argmin = {m for m in present if counters.get(m, 0) == least}
        plan = schedule(trace, counters, INJECTION_TYPES, rng)
        assert plan.target_mnemonic in argmin


# ---------------------------------------------------------------- fault application

def test_exactly_one_fault_per_run():
    from zkvmfuzz.inject import ActiveInjection

    program, trace = sample_trace()
    plan = InjectionPlan("COMP_OUT_MOD", 4, 99)
    inj = ActiveInjection(plan)
    fires = 0
    for step in range(len(trace.rows)):
        for itype in INJECTION_TYPES:
            if inj.should_fire(itype):
                fires += 1
        inj.tick()
    assert fires == 1
    assert inj.fired


def test_comp_out_mod_ripples_to_output():
    program, trace = sample_trace()
    add_row = next(r for r in trace.rows if r.op == "add")
    plan = InjectionPlan("COMP_OUT_MOD", add_row.step, 7)
    injected = vm.execute(program, [7, 3, 2], plan)
    mutated = injected.rows[add_row.step]
    assert mutated.rd_val != add_row.rd_val
    # The faulty sum is a divisor downstream; the output flips to OOPS.
    assert injected.final_output == 0x0
    assert not vm.verify(program, injected).accepted


def test_br_neg_cond_flips_branch():
    program, trace = sample_trace()
    branch_row = next(r for r in trace.rows if r.op in isa.BRANCH_FORMAT)
    plan = InjectionPlan("BR_NEG_COND", branch_row.step, 11)
    injected = vm.execute(program, [7, 3, 2], plan)
    flipped = injected.rows[branch_row.step]
    assert flipped.next_pc != branch_row.next_pc
    assert not vm.verify(program, injected).accepted


def test_load_val_mod_diverges_readback():
    program, trace = sample_trace()
    # Target a result-slot reload (lw off the data base register).
    lw_row = next(
        r for r in trace.rows
        if r.op == "lw" and program.instructions[r.pc >> 2].rs1 == 3
    )
    plan = InjectionPlan("LOAD_VAL_MOD", lw_row.step, 13)
    injected = vm.execute(program, [7, 3, 2], plan)
    assert injected.rows[lw_row.step].mem_val != lw_row.mem_val
    result = vm.verify(program, injected)
    assert not result.accepted
    assert result.constraint == "C5"
    assert result.row == lw_row.step
