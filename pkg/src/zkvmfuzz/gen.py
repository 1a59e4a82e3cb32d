"""Seeded random generation of well-typed circuits.

Generation is top-down with a depth budget: the budget shrinks by one per
level and leaves are forced when it runs out, so no path exceeds the
configured depth. Divisors are generated like any other operand; totality
comes from the evaluator's division conventions, not from generator guards.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass, field
from typing import Mapping

from . import il
from .il import BoolLit, BoolOp, Call, Circuit, Cmp, Expr, IntLit, IntOp, Ite, Not, Ty, Var

# Boundary words mirror the input-generation philosophy: zero, one, two,
# all-ones (-1), and the signed extremes.
BOUNDARY_WORDS = (0, 1, 2, 0x7FFFFFFF, 0x80000000, 0xFFFFFFFF)

INT_VARIANTS = ("var", "lit", "add", "sub", "mul", "div", "rem", "pow", "and", "or", "xor", "ite")
BOOL_VARIANTS = ("blit", "cmp", "land", "lor", "lxor", "not")


class InvalidConfig(ValueError):
    pass


@dataclass(frozen=True)
class GenConfig:
    max_depth: int = 6
    inputs_min: int = 2
    inputs_max: int = 4
    op_weights: Mapping[str, float] = field(default_factory=dict)
    asm_extension: bool = False
    asm_weight: float = 1.0
    literal_pool: tuple[int, ...] = BOUNDARY_WORDS

    def weight(self, variant: str) -> float:
        return float(self.op_weights.get(variant, 1.0))

    def validate(self) -> None:
        if self.max_depth < 1:
            raise InvalidConfig("max_depth must be >= 1")
        if not 0 <= self.inputs_min <= self.inputs_max:
            raise InvalidConfig("bad input-count range")
        for variant, w in self.op_weights.items():
            if variant not in INT_VARIANTS + BOOL_VARIANTS:
                raise InvalidConfig(f"unknown op-weight key {variant!r}")
            if w < 0:
                raise InvalidConfig(f"negative weight for {variant!r}")
        if self.asm_weight < 0:
            raise InvalidConfig("asm_weight must be >= 0")
        if all(self.weight(v) <= 0 for v in INT_VARIANTS):
            raise InvalidConfig("at least one Int-producing variant needs positive weight")


def input_names(count: int) -> tuple[str, ...]:
    letters = [c for c in string.ascii_lowercase if c not in ("t", "f")]
    if count <= len(letters):
        return tuple(letters[:count])
    return tuple(letters) + tuple(f"v{i}" for i in range(count - len(letters)))


def random_word(rng: random.Random, pool: tuple[int, ...] = BOUNDARY_WORDS) -> int:
    if pool and rng.random() < 0.5:
        return rng.choice(pool)
    return rng.getrandbits(32)


def _weighted(rng: random.Random, options: list[tuple[str, float]]) -> str:
    names = [n for n, w in options if w > 0]
    weights = [w for _, w in options if w > 0]
    return rng.choices(names, weights=weights)[0]


def random_expr(
    rng: random.Random,
    ty: Ty,
    budget: int,
    names: tuple[str, ...],
    config: GenConfig | None = None,
) -> Expr:
    """Random expression of the requested type within a node-depth budget."""
    cfg = config or GenConfig()
    if ty is Ty.INT:
        return _gen_int(rng, budget, names, cfg)
    return _gen_bool(rng, budget, names, cfg)


def _int_leaf(rng: random.Random, names: tuple[str, ...], cfg: GenConfig) -> Expr:
    wv, wl = cfg.weight("var"), cfg.weight("lit")
    if names and (wv + wl) > 0 and rng.random() * (wv + wl) < wv:
        return Var(rng.choice(names))
    return IntLit(random_word(rng, cfg.literal_pool))


def _gen_int(rng: random.Random, budget: int, names: tuple[str, ...], cfg: GenConfig) -> Expr:
    if budget <= 1:
        return _int_leaf(rng, names, cfg)
    options = [(v, cfg.weight(v)) for v in INT_VARIANTS]
    if cfg.asm_extension:
        options.append(("asm", cfg.asm_weight))
    variant = _weighted(rng, options)
    match variant:
        case "var" | "lit":
            return _int_leaf(rng, names, cfg)
        case "pow":
            base = _gen_int(rng, budget - 1, names, cfg)
            return IntOp("pow", base, IntLit(rng.choice(il.POW_EXPONENTS)))
        case "ite":
            cond = _gen_bool(rng, budget - 1, names, cfg)
            then = _gen_int(rng, budget - 1, names, cfg)
            orelse = _gen_int(rng, budget - 1, names, cfg)
            return Ite(cond, then, orelse)
        case "asm":
            fn = rng.choice(il.CUSTOM_FNS)
            args = (_gen_int(rng, budget - 1, names, cfg), _gen_int(rng, budget - 1, names, cfg))
            return Call(fn, args)
        case op:
            lhs = _gen_int(rng, budget - 1, names, cfg)
            rhs = _gen_int(rng, budget - 1, names, cfg)
            return IntOp(op, lhs, rhs)


def _gen_bool(rng: random.Random, budget: int, names: tuple[str, ...], cfg: GenConfig) -> Expr:
    if budget <= 1:
        return BoolLit(rng.random() < 0.5)
    options = [(v, cfg.weight(v)) for v in BOOL_VARIANTS]
    variant = _weighted(rng, options)
    match variant:
        case "blit":
            return BoolLit(rng.random() < 0.5)
        case "cmp":
            op = rng.choice(il.CMP_OPS)
            return Cmp(op, _gen_int(rng, budget - 1, names, cfg), _gen_int(rng, budget - 1, names, cfg))
        case "not":
            return Not(_gen_bool(rng, budget - 1, names, cfg))
        case op:
            return BoolOp(op, _gen_bool(rng, budget - 1, names, cfg), _gen_bool(rng, budget - 1, names, cfg))


def generate_circuit(seed: int, config: GenConfig | None = None) -> Circuit:
    """Deterministically generate a well-typed circuit from a seed."""
    cfg = config or GenConfig()
    cfg.validate()
    rng = random.Random(seed)
    count = rng.randint(cfg.inputs_min, cfg.inputs_max)
    names = input_names(count)
    expr = _gen_int(rng, cfg.max_depth, names, cfg)
    circuit = Circuit(tuple((n, il.PUBLIC) for n in names), expr)
    il.typecheck_circuit(circuit)
    return circuit
