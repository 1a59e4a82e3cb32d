"""Semantics-preserving rewrite rules and their application engine.

A rule pairs a match pattern with a rewrite template, both written in the
expression grammar extended with holes: ``?x`` captures a subexpression
(repeated occurrences must bind structurally equal subtrees, optional
``:int`` / ``:bool`` annotations restrict the match) and ``$r:ty`` in a
template draws one fresh constant shared across all its occurrences.

Transformation stacks a few randomly chosen rewrites on a circuit, picking
uniformly over all applicable (rule, site) pairs at each step. Constructor
rules such as ``zero-add-con`` apply to every integer node, so a step can
always make progress on a well-typed circuit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import il
from .gen import BOUNDARY_WORDS, random_word
from .il import BoolLit, Capture, Circuit, Expr, Fresh, IntLit, Ty

# Rule catalog: (id, match pattern, rewrite template). Integer and bitwise
# identities first, then the boolean and relation identities.
_RULE_TABLE: tuple[tuple[str, str, str], ...] = (
    ("comm-or", "?a | ?b", "?b | ?a"),
    ("assoc-and", "(?a & ?b) & ?c", "?a & (?b & ?c)"),
    ("comm-and", "?a & ?b", "?b & ?a"),
    ("and-zero", "?a & 0", "0"),
    ("inv-xor", "?a ^ ?a", "0"),
    ("comm-xor", "?a ^ ?b", "?b ^ ?a"),
    ("zero-or-rev", "?a | 0", "?a"),
    ("zero-xor-rev", "?a ^ 0", "?a"),
    ("inv-xor-rev", "0", "($r:int ^ $r:int)"),
    ("zero-or", "?a:int", "(?a | 0)"),
    ("zero-xor", "?a:int", "(?a ^ 0)"),
    ("idem-and", "?a:int", "(?a & ?a)"),
    ("zero-and", "0", "($r:int & 0)"),
    ("one-div", "1", "($r:int / $r:int)"),
    ("comm-add", "?a + ?b", "?b + ?a"),
    ("comm-mul", "?a * ?b", "?b * ?a"),
    ("dist-mul-add", "(?a + ?b) * ?c", "(?a * ?c) + (?b * ?c)"),
    ("dist-add-mul", "(?a * ?c) + (?b * ?c)", "(?a + ?b) * ?c"),
    ("assoc-add", "(?a + ?b) + ?c", "?a + (?b + ?c)"),
    ("assoc-add-rev", "?a + (?b + ?c)", "(?a + ?b) + ?c"),
    ("assoc-mul", "(?a * ?b) * ?c", "?a * (?b * ?c)"),
    ("assoc-mul-rev", "?a * (?b * ?c)", "(?a * ?b) * ?c"),
    ("zero-add-des", "?a + 0", "?a"),
    ("one-mul-des", "?a * 1", "?a"),
    ("one-div-des", "?a / 1", "?a"),
    ("inv-zero-add-des", "?a - 0", "?a"),
    ("inv-add-des", "?a - ?a", "0"),
    ("inv-assoc-neg2pos", "(?a - ?b) - ?c", "?a - (?b + ?c)"),
    ("inv-assoc-pos2neg", "?a - (?b + ?c)", "(?a - ?b) - ?c"),
    ("pow2-to-mul", "?a ** 2", "?a * ?a"),
    ("pow3-to-mul", "?a ** 3", "(?a * ?a) * ?a"),
    ("mul-to-pow2", "?a * ?a", "?a ** 2"),
    ("mul-to-pow3", "(?a * ?a) * ?a", "?a ** 3"),
    ("zero-add-con", "?a:int", "?a + 0"),
    ("one-mul-con", "?a:int", "?a * 1"),
    ("one-div-con", "?a:int", "?a / 1"),
    ("rem-of-one-con", "0", "$r:int % 1"),
    ("rem-of-one-des", "?a % 1", "0"),
    ("and-to-rem", "?a & 1", "?a % 2"),
    ("rem-to-and", "?a % 2", "?a & 1"),
    ("inv-zero-add-con", "?a:int", "?a - 0"),
    ("inv-addition-exp", "?a - ?c", "?a + (0 - ?c)"),
    ("double-negation-add-con", "?a:int", "0 - (0 - ?a)"),
    ("add-sub-random-value", "?a:int", "(?a - $r:int) + $r:int"),
    ("zero-lor-des", "?a || F", "?a"),
    ("zero-land-des", "?a && T", "?a"),
    ("taut-lor", "?a || T", "T"),
    ("contra-land", "?a && F", "F"),
    ("assoc-lor", "(?a || ?b) || ?c", "?a || (?b || ?c)"),
    ("assoc-land", "(?a && ?b) && ?c", "?a && (?b && ?c)"),
    ("comm-lor", "?a || ?b", "?b || ?a"),
    ("comm-lan", "?a && ?b", "?b && ?a"),
    ("dist-lor-land", "(?a && ?b) || ?c", "(?a || ?c) && (?b || ?c)"),
    ("dist-land-lor", "(?a || ?c) && (?b || ?c)", "(?a && ?b) || ?c"),
    ("de-morgan-land-con", "!(?a && ?b)", "(!?a) || (!?b)"),
    ("de-morgan-land-des", "(!?a) || (!?b)", "!(?a && ?b)"),
    ("de-morgan-lor-con", "!(?a || ?b)", "(!?a) && (!?b)"),
    ("de-morgan-lor-des", "(!?a) && (!?b)", "!(?a || ?b)"),
    ("double-negation-des", "!(!?a)", "?a"),
    ("double-land-des", "?a && ?a", "?a"),
    ("double-lor-des", "?a || ?a", "?a"),
    ("double-lxor-des", "?a ^^ ?a", "F"),
    ("comm-lxor", "?a ^^ ?b", "?b ^^ ?a"),
    ("lxor-to-or-and", "?a ^^ ?b", "((!?a) && ?b) || (?a && (!?b))"),
    ("zero-lor-con", "?a:bool", "?a || F"),
    ("zero-land-con", "?a:bool", "?a && T"),
    ("double-negation-con", "?a:bool", "!(!?a)"),
    ("double-land-con", "?a:bool", "?a && ?a"),
    ("double-lor-con", "?a:bool", "?a || ?a"),
    ("double-lxor-con", "F", "$r:bool ^^ $r:bool"),
    ("or-and-to-lxor", "((!?a) && ?b) || (?a && (!?b))", "?a ^^ ?b"),
    ("commutativity-equ", "?a == ?b", "?b == ?a"),
    ("relation-geq-to-leq", "?a >= ?b", "?b <= ?a"),
    ("relation-leq-to-geq", "?a <= ?b", "?b >= ?a"),
    ("relation-leq-to-lth-and-equ", "?a <= ?b", "(?a < ?b) || (?a == ?b)"),
    ("relation-lth-and-equ-to-leq", "(?a < ?b) || (?a == ?b)", "?a <= ?b"),
    ("relation-geq-to-gth-and-equ", "?a >= ?b", "(?a > ?b) || (?a == ?b)"),
    ("relation-gth-and-equ-to-geq", "(?a > ?b) || (?a == ?b)", "?a >= ?b"),
    ("relation-leq-to-not-gth", "?a <= ?b", "!(?a > ?b)"),
    ("relation-not-gth-to-leq", "!(?a > ?b)", "?a <= ?b"),
    ("relation-geq-to-not-lth", "?a >= ?b", "!(?a < ?b)"),
    ("relation-not-lth-to-geq", "!(?a < ?b)", "?a >= ?b"),
    ("relation-neq-to-not-equ", "?a != ?b", "!(?a == ?b)"),
    ("relation-not-equ-to-neq", "!(?a == ?b)", "?a != ?b"),
)

# Rules whose fresh constant must stay nonzero: a zero draw would change
# semantics (0/0 is all-ones under the division convention, not 1).
_FRESH_NONZERO = frozenset({"one-div"})


@dataclass(frozen=True)
class RewriteRule:
    id: str
    pattern: Expr
    template: Expr


def _mark_nonzero(expr: Expr) -> Expr:
    if isinstance(expr, Fresh):
        return Fresh(expr.name, expr.ty, nonzero=True)
    kids = il.children(expr)
    if not kids:
        return expr
    return il.with_children(expr, tuple(_mark_nonzero(k) for k in kids))


def _build_catalog() -> tuple[RewriteRule, ...]:
    rules = []
    for rule_id, pattern_text, template_text in _RULE_TABLE:
        pattern = il.parse_expr(pattern_text)
        template = il.parse_expr(template_text)
        if rule_id in _FRESH_NONZERO:
            template = _mark_nonzero(template)
        rules.append(RewriteRule(rule_id, pattern, template))
    ids = [r.id for r in rules]
    assert len(set(ids)) == len(ids)
    return tuple(rules)


CATALOG: tuple[RewriteRule, ...] = _build_catalog()
RULES_BY_ID: dict[str, RewriteRule] = {r.id: r for r in CATALOG}


# --------------------------------------------------------------------------- #
# Matching and instantiation
# --------------------------------------------------------------------------- #


def match_at(pattern: Expr, expr: Expr, binding: dict[str, Expr] | None = None) -> dict[str, Expr] | None:
    """Match ``expr`` against ``pattern``; return the capture binding or None."""
    b: dict[str, Expr] = {} if binding is None else binding
    if not _match(pattern, expr, b):
        return None
    return b


def _match(pattern: Expr, expr: Expr, binding: dict[str, Expr]) -> bool:
    match pattern:
        case Capture(name, ty):
            if ty is not None and il.expr_type(expr) is not ty:
                return False
            if name in binding:
                return binding[name] == expr
            binding[name] = expr
            return True
        case Fresh():
            return False  # fresh holes belong to templates, never to patterns
        case _:
            if type(pattern) is not type(expr):
                return False
            p_kids = il.children(pattern)
            e_kids = il.children(expr)
            if len(p_kids) != len(e_kids):
                return False
            if _head(pattern) != _head(expr):
                return False
            return all(_match(p, e, binding) for p, e in zip(p_kids, e_kids))


def _head(expr: Expr):
    match expr:
        case il.IntOp(op, _, _) | il.BoolOp(op, _, _) | il.Cmp(op, _, _):
            return op
        case il.Call(fn, _):
            return fn
        case il.Var(name):
            return name
        case IntLit(value):
            return value
        case BoolLit(value):
            return value
        case _:
            return type(expr).__name__


def instantiate(template: Expr, binding: dict[str, Expr], rng: random.Random) -> Expr:
    """Substitute captures and draw fresh constants (one draw per name)."""
    fresh: dict[str, Expr] = {}

    def build(node: Expr) -> Expr:
        match node:
            case Capture(name, _):
                return binding[name]
            case Fresh(name, ty, nonzero):
                if name not in fresh:
                    if ty is Ty.BOOL:
                        fresh[name] = BoolLit(rng.random() < 0.5)
                    else:
                        value = random_word(rng, BOUNDARY_WORDS)
                        while nonzero and value == 0:
                            value = random_word(rng, BOUNDARY_WORDS)
                        fresh[name] = IntLit(value)
                return fresh[name]
            case _:
                kids = il.children(node)
                if not kids:
                    return node
                return il.with_children(node, tuple(build(k) for k in kids))

    return build(template)


def rewritable_sites(expr: Expr):
    """Pre-order (path, node) pairs, excluding pow exponents.

    The exponent of ``pow`` is syntax (a literal 2 or 3 required by the type
    rules), not an operand position, so no rewrite may fire there.
    """
    for path, node in il.walk(expr):
        if path:
            parent = il.subexpr_at(expr, path[:-1])
            if isinstance(parent, il.IntOp) and parent.op == "pow" and path[-1] == 1:
                continue
        yield path, node


def applicable_sites(circuit: Circuit, rule: RewriteRule) -> list[tuple[int, ...]]:
    """All positions where the rule's pattern matches, in pre-order."""
    return [
        path
        for path, node in rewritable_sites(circuit.output_expr)
        if match_at(rule.pattern, node) is not None
    ]


def apply_rule(
    circuit: Circuit, rule: RewriteRule, path: tuple[int, ...], rng: random.Random
) -> Circuit:
    node = il.subexpr_at(circuit.output_expr, path)
    binding = match_at(rule.pattern, node)
    if binding is None:
        raise ValueError(f"rule {rule.id} does not match at {path}")
    replacement = instantiate(rule.template, binding, rng)
    new_expr = il.replace_at(circuit.output_expr, path, replacement)
    return Circuit(circuit.inputs, new_expr, circuit.output_name)


@dataclass(frozen=True)
class TransformResult:
    circuit: Circuit
    applied: tuple[tuple[str, tuple[int, ...]], ...]
    exhausted: bool = False  # no rule applied anywhere; circuit unchanged


def transform(
    circuit: Circuit,
    catalog: tuple[RewriteRule, ...],
    n_rules: int,
    rng: random.Random,
) -> TransformResult:
    """Stack ``n_rules`` rewrites, choosing uniformly over (rule, site) pairs."""
    if n_rules < 1:
        raise ValueError("n_rules must be >= 1")
    current = circuit
    applied: list[tuple[str, tuple[int, ...]]] = []
    for _ in range(n_rules):
        pairs = [
            (rule, path) for rule in catalog for path in applicable_sites(current, rule)
        ]
        if not pairs:
            return TransformResult(current, tuple(applied), exhausted=True)
        rule, path = pairs[rng.randrange(len(pairs))]
        current = apply_rule(current, rule, path, rng)
        applied.append((rule.id, path))
    il.typecheck_circuit(current)
    return TransformResult(current, tuple(applied))


def render_rule_table(catalog: tuple[RewriteRule, ...] = CATALOG) -> str:
    """Catalog as an aligned three-column table (id, pattern, template)."""
    rows = [(r.id, il.render_expr(r.pattern), il.render_expr(r.template)) for r in catalog]
    widths = [max(len(row[i]) for row in rows + [("Rule ID", "Match Pattern", "Rewrite Template")]) for i in range(3)]
    header = ("Rule ID".ljust(widths[0]), "Match Pattern".ljust(widths[1]), "Rewrite Template".ljust(widths[2]))
    lines = ["  ".join(header).rstrip(), "  ".join("-" * w for w in widths)]
    for row in rows:
        lines.append("  ".join(col.ljust(w) for col, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
