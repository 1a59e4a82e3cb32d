import random

import pytest

from zkvmfuzz import codegen, il, isa, vm
from zkvmfuzz.gen import GenConfig, generate_circuit
from zkvmfuzz.inject import InjectionPlan, mutate_instruction
from zkvmfuzz.isa import Instruction
from zkvmfuzz.rewrite import CATALOG, transform
from zkvmfuzz.vm import WeaknessSet, dump_trace, execute, load_trace, verify


def fig_product():
    c1 = il.parse_circuit("inputs : a, b, c\noutputs: out\nout = (a % (b + c))\n")
    c2 = il.parse_circuit("inputs : a, b, c\noutputs: out\nout = (a % ((c + 0) + b))\n")
    return codegen.emit_product_program([c1, c2])


def fig_program():
    return codegen.compile_to_refvm(fig_product())


def aliasing_plan(program, trace, mnemonic="remu"):
    """Plan an INSTR_WORD_MOD whose mutation replaces rs2 with rs1."""
    row = next(r for r in trace.rows if r.op == mnemonic)
    target = program.instructions[row.pc >> 2]
    want = Instruction(target.op, target.rd, target.rs1, target.rs1, target.imm)
    seed = next(
        s for s in range(100_000)
        if mutate_instruction(target, random.Random(s)) == want
    )
    return InjectionPlan("INSTR_WORD_MOD", row.step, seed, mnemonic)


# ---------------------------------------------------------------- isa

def test_isa_remu():
    eff = isa.isa_semantics(Instruction("remu", 5, 1, 2), 7, 5, 0, 0)
    assert eff.rd_val == 2


def test_isa_xor_self():
    eff = isa.isa_semantics(Instruction("xor", 5, 1, 2), 8, 8, 0, 0)
    assert eff.rd_val == 0


def test_isa_lui_shifts_immediate():
    eff = isa.isa_semantics(Instruction("lui", 5, 0, 0, 0xABCD), 0, 0, 0xABCD, 0)
    assert eff.rd_val == (0xABCD * 4096) & il.MASK32


def test_isa_matches_custom_evaluator():
    rng = random.Random(3)
    for fn in il.CUSTOM_FNS:
        mnemonic = {"divs": "div", "rems": "rem"}.get(fn, fn)
        for _ in range(200):
            a, b = rng.getrandbits(32), rng.getrandbits(32)
            assert isa.alu(mnemonic, a, b) == il.eval_custom(fn, [a, b]), (fn, a, b)


def test_store_merge_sub_word():
    assert isa.store_merge("sw", 0xDEADBEEF, 0x11223344, 0x2000) == 0x11223344
    assert isa.store_merge("sb", 0xDEADBEEF, 0x11223344, 0x2001) == 0xDEAD44EF
    assert isa.store_merge("sh", 0xDEADBEEF, 0x11223344, 0x2002) == 0x3344BEEF


def test_load_extract_sign_extension():
    assert isa.load_extract("lb", 0x0000_0080, 0x2000) == 0xFFFFFF80
    assert isa.load_extract("lbu", 0x0000_0080, 0x2000) == 0x80
    assert isa.load_extract("lh", 0x8000_0000, 0x2002) == 0xFFFF8000


def test_disassemble_listing():
    text = isa.disassemble(fig_program())
    assert text.startswith("0x0000: lui tp, 0x1\n")
    assert "remu" in text
    assert text.rstrip().endswith("halt")


# ---------------------------------------------------------------- executor

def test_fig4_product_executes_to_success():
    trace = execute(fig_program(), [7, 3, 2])
    assert trace.exit.clean
    assert trace.final_output == 0xC0FFEE
    assert trace.rows[-1].op == "halt"


def test_execution_is_deterministic():
    program = fig_program()
    assert execute(program, [7, 3, 2]) == execute(program, [7, 3, 2])
    plan = InjectionPlan("COMP_OUT_MOD", 5, 1234)
    assert execute(program, [7, 3, 2], plan) == execute(program, [7, 3, 2], plan)


def test_next_pc_is_sequential_except_jumps():
    trace = execute(fig_program(), [7, 3, 2])
    for row in trace.rows:
        if row.op not in isa.BRANCH_FORMAT and row.op not in ("jal", "jalr"):
            assert row.next_pc == (row.pc + 4) & il.MASK32


def test_step_budget_is_data_not_abort():
    # A branch target perturbation can loop; the budget bounds it.
    program = fig_program()
    trace = execute(program, [7, 3, 2], step_budget=10)
    assert trace.exit.kind == "step-budget-exceeded"
    assert len(trace.rows) == 10


def test_input_region_is_read_only_in_normal_mode():
    asm_prog = codegen.RefProgram(
        (
            Instruction("lui", 5, 0, 0, 0x1),      # t0 = 0x1000
            Instruction("sw", 0, 5, 0, 0),         # store into input region
            Instruction("halt",),
        ),
        arity=1,
    )
    trace = execute(asm_prog, [7])
    assert trace.exit.kind == "fault"
    assert "read-only" in trace.exit.detail


def test_misalignment_faults_normally_tolerated_injected():
    prog = codegen.RefProgram(
        (
            Instruction("lui", 5, 0, 0, 0x2),       # t0 = 0x2000
            Instruction("lw", 6, 5, 0, 1),          # misaligned load
            Instruction("halt",),
        ),
        arity=0,
    )
    assert execute(prog, []).exit.kind == "fault"
    # Lenient mode (any plan present) floors the access and keeps going.
    plan = InjectionPlan("COMP_OUT_MOD", 10_000, 1)  # never fires
    assert execute(prog, [], plan).exit.clean


# ---------------------------------------------------------------- verifier

def test_normal_run_verifies_clean():
    program = fig_program()
    trace = execute(program, [7, 3, 2])
    assert verify(program, trace).accepted


def test_executor_verifier_agreement_on_random_programs():
    cfg = GenConfig(max_depth=5, asm_extension=True, inputs_min=2, inputs_max=4)
    for seed in range(60):
        rng = random.Random(seed)
        circ = generate_circuit(seed, cfg)
        variant = transform(circ, CATALOG, rng.randint(1, 4), rng).circuit
        product = codegen.emit_product_program([circ, variant])
        program = codegen.compile_to_refvm(product)
        values = [rng.getrandbits(32) for _ in range(circ.arity)]
        trace = execute(program, values)
        assert trace.exit.clean
        assert trace.final_output == 0xC0FFEE
        assert verify(program, trace).accepted, (seed, verify(program, trace))


def test_shadow_replay_reproduces_output():
    program = fig_program()
    trace = execute(program, [7, 3, 2])
    assert vm.shadow_replay_output(program, trace) == trace.final_output


def test_remu_aliasing_rejected_then_accepted_with_weakness():
    program = fig_program()
    normal = execute(program, [7, 3, 2])
    plan = aliasing_plan(program, normal)
    injected = execute(program, [7, 3, 2], plan)
    assert injected.final_output == 0x0  # OOPS
    row = injected.rows[plan.target_step]
    assert (row.rs1_val, row.rs2_val, row.rd_val) == (7, 7, 0)

    result = verify(program, injected)
    assert not result.accepted
    assert result.constraint == "C2"
    assert result.row == plan.target_step

    weakened = verify(program, injected, WeaknessSet(w_trireg=True))
    assert weakened.accepted


def test_injected_divergence_always_rejected_without_weaknesses():
    # Reference-VM soundness: output changed => some constraint fires.
    cfg = GenConfig(max_depth=5, asm_extension=True, inputs_min=2, inputs_max=3)
    checked = 0
    for seed in range(150):
        rng = random.Random(seed)
        circ = generate_circuit(seed, cfg)
        product = codegen.emit_product_program([circ, circ])
        program = codegen.compile_to_refvm(product)
        values = [rng.getrandbits(32) for _ in range(circ.arity)]
        normal = execute(program, values)
        itype = rng.choice(list(__import__("zkvmfuzz.inject", fromlist=["INJECTION_TYPES"]).INJECTION_TYPES))
        plan = InjectionPlan(itype, rng.randrange(len(normal.rows)), rng.getrandbits(64))
        injected = execute(program, values, plan)
        if injected.exit.clean and injected.final_output != normal.final_output:
            checked += 1
            assert not verify(program, injected).accepted, (seed, itype)
    assert checked > 10


def test_w_store_low_masks_low_byte_store_divergence():
    program = fig_program()
    normal = execute(program, [7, 3, 2])
    # Mutate the first result-byte store so it reads a different register:
    # the committed sb consumes the function result (2); aliasing rs2 to a
    # register holding a different low byte flips the committed byte.
    sb_row = next(r for r in normal.rows if r.op == "sb")
    target = program.instructions[sb_row.pc >> 2]
    want_val = None
    plan = None
    for s in range(200_000):
        mutated = mutate_instruction(target, random.Random(s))
        if mutated.op == "sb" and mutated.rs2 != target.rs2 and mutated == Instruction(
            target.op, target.rd, target.rs1, mutated.rs2, target.imm
        ):
            probe = execute(program, [7, 3, 2], InjectionPlan("INSTR_WORD_MOD", sb_row.step, s))
            if probe.exit.clean and probe.final_output == 0x0:
                plan = InjectionPlan("INSTR_WORD_MOD", sb_row.step, s, "sb")
                break
    assert plan is not None, "no low-byte store aliasing found"
    injected = execute(program, [7, 3, 2], plan)
    assert not verify(program, injected).accepted
    assert verify(program, injected, WeaknessSet(w_store_low=True)).accepted


def test_w_lui_imm_masks_immediate_mutation():
    # A large literal in a function body compiles to lui; mutating that
    # immediate diverges one bundled function and flips the output to OOPS.
    circ = il.parse_circuit("inputs : a, b\noutputs: out\nout = (a + 0x12345678)\n")
    product = codegen.emit_product_program([circ, circ])
    program = codegen.compile_to_refvm(product)
    normal = execute(program, [7, 3])
    lui_row = next(
        r for r in normal.rows
        if r.op == "lui" and program.instructions[r.pc >> 2].imm == 0x12345678 >> 12
    )
    target = program.instructions[lui_row.pc >> 2]
    seed = next(
        s for s in range(100_000)
        if (m := mutate_instruction(target, random.Random(s))).op == "lui"
        and m.imm != target.imm and m.rd == target.rd
    )
    plan = InjectionPlan("INSTR_WORD_MOD", lui_row.step, seed, "lui")
    injected = execute(program, [7, 3], plan)
    assert injected.exit.clean
    assert injected.final_output == 0x0  # OOPS: only one function diverged
    assert not verify(program, injected).accepted
    assert verify(program, injected, WeaknessSet(w_lui_imm=True)).accepted


def test_d_short_trace_rejects_valid_short_run():
    program = fig_program()
    trace = execute(program, [7, 3, 2])
    assert len(trace.rows) < 256
    result = verify(program, trace, WeaknessSet(d_short_trace=True))
    assert not result.accepted
    assert result.constraint == "D_SHORT_TRACE"


def test_d_cycle_off_by_one_fires_at_segment_boundary():
    # The defect rejects exactly when the row count is 1 past a segment
    # boundary (len % 32 == 1); collect both cases from real programs.
    cfg = GenConfig(max_depth=4, inputs_min=2, inputs_max=2)
    weak = WeaknessSet(d_cycle_off_by_one=True)
    fired = not_fired = 0
    for seed in range(200):
        rng = random.Random(seed)
        circ = generate_circuit(seed, cfg)
        variant = transform(circ, CATALOG, rng.randint(1, 4), rng).circuit
        program = codegen.compile_to_refvm(codegen.emit_product_program([circ, variant]))
        trace = execute(program, [1, 2])
        result = verify(program, trace, weak)
        if len(trace.rows) % 32 == 1:
            assert result.constraint == "D_CYCLE_OFF_BY_ONE"
            fired += 1
        else:
            assert result.accepted
            not_fired += 1
        if fired and not_fired:
            break
    assert fired and not_fired


def test_tampered_trace_rejected_c1():
    program = fig_program()
    trace = execute(program, [7, 3, 2])
    row = trace.rows[3]
    forged = vm.TraceRow(row.step, row.pc, "add", row.rd, row.rs1, row.rs2, row.imm,
                         row.rs1_val, row.rs2_val, row.rd_val, row.mem_addr,
                         row.mem_val, row.next_pc)
    rows = trace.rows[:3] + (forged,) + trace.rows[4:]
    tampered = vm.TraceRecord(rows, trace.final_output, trace.exit, trace.inputs)
    result = verify(program, tampered)
    assert not result.accepted
    assert result.constraint == "C1"
    assert result.row == 3


def test_forged_final_output_rejected_c6():
    program = fig_program()
    trace = execute(program, [7, 3, 2])
    forged = vm.TraceRecord(trace.rows, 0xBAD, trace.exit, trace.inputs)
    result = verify(program, forged)
    assert result.constraint == "C6"


# ---------------------------------------------------------------- trace dump

def test_trace_dump_roundtrip():
    program = fig_program()
    trace = execute(program, [7, 3, 2])
    assert load_trace(dump_trace(trace)) == trace


def test_trace_dump_format():
    trace = execute(fig_program(), [7, 3, 2])
    text = dump_trace(trace)
    lines = text.splitlines()
    assert lines[0] == "# inputs: 0x00000007 0x00000003 0x00000002"
    assert lines[1] == "# exit: clean"
    assert lines[2] == "# final_output: 0x00c0ffee"
    first = lines[3].split("\t")
    assert len(first) == 13
    assert first[0] == "0" and first[2] == "lui"


def test_weakness_set_names_roundtrip():
    weak = WeaknessSet.from_names(["W_TRIREG", "D_SHORT_TRACE"])
    assert weak.w_trireg and weak.d_short_trace and not weak.w_lui_imm
    assert weak.names() == ("W_TRIREG", "D_SHORT_TRACE")
    with pytest.raises(ValueError):
        WeaknessSet.from_names(["W_NOPE"])
