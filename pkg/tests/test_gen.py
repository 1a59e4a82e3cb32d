import pytest

from zkvmfuzz import il
from zkvmfuzz.gen import BOUNDARY_WORDS, GenConfig, InvalidConfig, generate_circuit


def test_seeded_determinism():
    cfg = GenConfig(max_depth=6, asm_extension=True)
    assert generate_circuit(42, cfg) == generate_circuit(42, cfg)


def test_different_seeds_differ_somewhere():
    cfg = GenConfig(max_depth=6)
    circuits = {il.render_circuit(generate_circuit(s, cfg)) for s in range(20)}
    assert len(circuits) > 1


def test_all_generated_circuits_typecheck():
    cfg = GenConfig(max_depth=7, asm_extension=True)
    for seed in range(200):
        il.typecheck_circuit(generate_circuit(seed, cfg))


def test_depth_bound_respected():
    for depth in (1, 2, 4, 6):
        cfg = GenConfig(max_depth=depth, asm_extension=True)
        for seed in range(100):
            circ = generate_circuit(seed, cfg)
            assert il.expr_depth(circ.output_expr) <= depth


def test_no_custom_calls_when_extension_off():
    cfg = GenConfig(max_depth=6, asm_extension=False)
    for seed in range(1000):
        circ = generate_circuit(seed, cfg)
        assert not any(isinstance(n, il.Call) for _, n in il.walk(circ.output_expr))


def test_extension_covers_every_custom_function():
    # Statistical: over 100 circuits with the default asm weight, each of the
    # ten custom functions is expected well over 5 times.
    cfg = GenConfig(max_depth=7, asm_extension=True, asm_weight=2.0)
    seen: dict[str, int] = {}
    for seed in range(100):
        circ = generate_circuit(seed, cfg)
        for _, node in il.walk(circ.output_expr):
            if isinstance(node, il.Call):
                seen[node.fn] = seen.get(node.fn, 0) + 1
    assert set(seen) == set(il.CUSTOM_FNS)


def test_pow_exponents_stay_in_range():
    cfg = GenConfig(max_depth=6)
    for seed in range(300):
        circ = generate_circuit(seed, cfg)
        for _, node in il.walk(circ.output_expr):
            if isinstance(node, il.IntOp) and node.op == "pow":
                assert isinstance(node.rhs, il.IntLit)
                assert node.rhs.value in (2, 3)


def test_input_count_range():
    cfg = GenConfig(inputs_min=3, inputs_max=3)
    for seed in range(20):
        assert generate_circuit(seed, cfg).arity == 3


def test_invalid_configs_rejected():
    with pytest.raises(InvalidConfig):
        generate_circuit(0, GenConfig(max_depth=0))
    with pytest.raises(InvalidConfig):
        generate_circuit(0, GenConfig(inputs_min=5, inputs_max=2))
    with pytest.raises(InvalidConfig):
        generate_circuit(0, GenConfig(op_weights={"nonsense": 1.0}))
    with pytest.raises(InvalidConfig):
        generate_circuit(0, GenConfig(op_weights={v: 0.0 for v in ("var", "lit", "add", "sub", "mul", "div", "rem", "pow", "and", "or", "xor", "ite")}))


def test_literal_pool_is_boundary_biased():
    cfg = GenConfig(max_depth=4)
    pool_hits = 0
    total = 0
    for seed in range(300):
        circ = generate_circuit(seed, cfg)
        for _, node in il.walk(circ.output_expr):
            if isinstance(node, il.IntLit) and node.value not in (2, 3):
                total += 1
                if node.value in BOUNDARY_WORDS:
                    pool_hits += 1
    assert total > 50
    assert pool_hits / total > 0.3
