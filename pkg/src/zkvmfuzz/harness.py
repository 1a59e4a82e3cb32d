"""Campaign orchestration and the bug oracle.

Each campaign round runs one product program twice: a normal execution
whose trace seeds the fault scheduler, then (when injection is enabled) a
run with the planned fault applied. The three-way oracle classifies the
pair:

* the normal run crashes or the verifier rejects it -> completeness bug;
* the normal run completes but returns OOPS -> metamorphic divergence
  (soundness, completeness, or both);
* the injected run returns OOPS and the verifier still accepts -> soundness
  bug. An injected run that crashes, keeps the expected output, or gets
  rejected proves nothing and is counted but never reported.

Findings deduplicate on (verdict, violated constraint, target mnemonic)
and persist as replayable JSON reports next to their trace dumps; nothing
written contains timestamps, so reruns are byte-identical.
"""

from __future__ import annotations

import configparser
import io
import json
import random
import sys
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from . import codegen, il
from .adapter import RunResult, make_adapter
from .codegen import emit_product_program
from .gen import BOUNDARY_WORDS, GenConfig, generate_circuit
from .inject import INJECTION_TYPES, InjectionPlan, schedule
from .rewrite import CATALOG, rewritable_sites, transform
from .vm import DEFAULT_STEP_BUDGET, WeaknessSet

DEFAULT_BOUNDARY_PROB = 0.3


class Verdict(str, Enum):
    OK = "Ok"
    COMPLETENESS_BUG = "CompletenessBug"
    MT_DIVERGENCE = "MTDivergence"
    SOUNDNESS_BUG = "SoundnessBug"
    INCONCLUSIVE = "Inconclusive"


REPORTABLE = (Verdict.COMPLETENESS_BUG, Verdict.MT_DIVERGENCE, Verdict.SOUNDNESS_BUG)


@dataclass(frozen=True)
class CampaignConfig:
    seed: int = 0
    vm: str = "refvm"
    programs: int = 100
    transforms: tuple[int, int] = (1, 4)
    functions: tuple[int, int] = (2, 10)
    rounds_per_product: int = 3
    inject: bool = True
    enabled_types: tuple[str, ...] = INJECTION_TYPES
    weaknesses: WeaknessSet = field(default_factory=WeaknessSet)
    gen: GenConfig = field(default_factory=lambda: GenConfig(asm_extension=True))
    output_dir: str | None = None
    step_budget: int = DEFAULT_STEP_BUDGET
    boundary_prob: float = DEFAULT_BOUNDARY_PROB
    stop_after: int | None = None  # stop once this many findings are recorded

    def validate(self) -> None:
        lo, hi = self.transforms
        if not 1 <= lo <= hi:
            raise ValueError("bad transforms range")
        klo, khi = self.functions
        if not 2 <= klo <= khi:
            raise ValueError("functions range must start at k >= 2")
        if self.rounds_per_product < 1:
            raise ValueError("rounds_per_product must be >= 1")
        if self.programs < 0:
            raise ValueError("programs must be >= 0")
        unknown = set(self.enabled_types) - set(INJECTION_TYPES)
        if unknown:
            raise ValueError(f"unknown injection types: {sorted(unknown)}")
        if self.inject and not self.enabled_types:
            raise ValueError("injection enabled but no types enabled")
        if not 0.0 <= self.boundary_prob <= 1.0:
            raise ValueError("boundary_prob must be in [0, 1]")
        self.gen.validate()


@dataclass(frozen=True)
class VmOutcome:
    """What one run looked like from the harness: output word, exit status,
    and the verifier decision (explicit, or folded into the exit code)."""

    output: int | None
    exit_clean: bool
    accepted: bool
    constraint: str | None = None
    row: int | None = None

    @classmethod
    def from_run(cls, result: RunResult) -> "VmOutcome":
        exit_clean = result.exit_code == 0 or result.exit_code == 2
        # exit codes: 0 ok, 1 crash, 2 verifier reject, 3 budget; external
        # adapters only distinguish 0 from nonzero.
        if result.accepted is None:
            return cls(result.output, result.exit_code == 0, result.exit_code == 0)
        return cls(result.output, exit_clean, result.accepted, result.constraint, result.row)


def classify(normal: VmOutcome, injected: VmOutcome | None = None,
             success_word: int = codegen.SUCCESS_WORD,
             oops_word: int = codegen.OOPS_WORD) -> Verdict:
    """The three-way oracle over a normal run and an optional injected run."""
    if not normal.exit_clean:
        return Verdict.COMPLETENESS_BUG
    if normal.output != success_word:
        return Verdict.MT_DIVERGENCE
    if not normal.accepted:
        return Verdict.COMPLETENESS_BUG
    if injected is None:
        return Verdict.OK
    if injected.exit_clean and injected.output == oops_word and injected.accepted:
        return Verdict.SOUNDNESS_BUG
    return Verdict.INCONCLUSIVE


def generate_inputs(arity: int, rng: random.Random,
                    boundary_prob: float = DEFAULT_BOUNDARY_PROB) -> tuple[int, ...]:
    """Input words mixing boundary constants with uniform randoms."""
    return tuple(
        rng.choice(BOUNDARY_WORDS) if rng.random() < boundary_prob else rng.getrandbits(32)
        for _ in range(arity)
    )


# --------------------------------------------------------------------------- #
# Findings
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class FindingReport:
    """Replayable record of one reported bug."""

    verdict: Verdict
    signature: str
    campaign_seed: int
    program_index: int
    vm_build: str
    weaknesses: tuple[str, ...]
    circuits: tuple[str, ...]
    inputs: tuple[int, ...]
    injection: InjectionPlan | None
    normal: VmOutcome
    injected: VmOutcome | None
    trace_refs: dict[str, str] = field(default_factory=dict)
    minimized: bool = False


def finding_signature(verdict: Verdict, constraint: str | None, mnemonic: str | None) -> str:
    return f"{verdict.value}:{constraint or '-'}:{mnemonic or '-'}"


def _outcome_to_dict(outcome: VmOutcome | None):
    if outcome is None:
        return None
    return {
        "output": None if outcome.output is None else f"{outcome.output:#010x}",
        "exit_clean": outcome.exit_clean,
        "accepted": outcome.accepted,
        "constraint": outcome.constraint,
        "row": outcome.row,
    }


def _outcome_from_dict(data) -> VmOutcome | None:
    if data is None:
        return None
    return VmOutcome(
        None if data["output"] is None else int(data["output"], 16),
        data["exit_clean"], data["accepted"], data["constraint"], data["row"],
    )


def finding_to_json(finding: FindingReport) -> str:
    plan = finding.injection
    payload = {
        "verdict": finding.verdict.value,
        "signature": finding.signature,
        "campaign_seed": finding.campaign_seed,
        "program_index": finding.program_index,
        "vm_build": finding.vm_build,
        "weaknesses": list(finding.weaknesses),
        "circuits": list(finding.circuits),
        "inputs": [f"{v:#010x}" for v in finding.inputs],
        "injection": None if plan is None else {
            "type": plan.type,
            "target_step": plan.target_step,
            "payload_seed": plan.payload_seed,
            "target_mnemonic": plan.target_mnemonic,
        },
        "normal": _outcome_to_dict(finding.normal),
        "injected": _outcome_to_dict(finding.injected),
        "trace_refs": dict(sorted(finding.trace_refs.items())),
        "minimized": finding.minimized,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def finding_from_json(text: str) -> FindingReport:
    data = json.loads(text)
    plan = data["injection"]
    return FindingReport(
        verdict=Verdict(data["verdict"]),
        signature=data["signature"],
        campaign_seed=data["campaign_seed"],
        program_index=data["program_index"],
        vm_build=data["vm_build"],
        weaknesses=tuple(data["weaknesses"]),
        circuits=tuple(data["circuits"]),
        inputs=tuple(int(v, 16) for v in data["inputs"]),
        injection=None if plan is None else InjectionPlan(
            plan["type"], plan["target_step"], plan["payload_seed"], plan["target_mnemonic"]
        ),
        normal=_outcome_from_dict(data["normal"]),
        injected=_outcome_from_dict(data["injected"]),
        trace_refs=data["trace_refs"],
        minimized=data["minimized"],
    )


# --------------------------------------------------------------------------- #
# Campaign statistics
# --------------------------------------------------------------------------- #

MATRIX_CELLS = ("success_ec0", "success_ecnz", "oops_ec0", "oops_ecnz")


@dataclass
class CampaignStats:
    programs: int = 0
    rounds: int = 0
    injected_runs: int = 0
    outcome_matrix: dict[str, int] = field(default_factory=lambda: {c: 0 for c in MATRIX_CELLS})
    verdicts: dict[str, int] = field(default_factory=lambda: {v.value: 0 for v in Verdict})
    instruction_coverage: tuple[str, ...] = ()
    injection_counters: dict[str, int] = field(default_factory=dict)
    trace_presence: dict[str, int] = field(default_factory=dict)  # traces containing mnemonic
    traces_total: int = 0
    finding_signatures: tuple[str, ...] = ()
    config: dict = field(default_factory=dict)

    def matrix_cell(self, output: int | None, pipeline_ok: bool,
                    oops_word: int = codegen.OOPS_WORD) -> str:
        # A crashed run has no observable output; it counts as unchanged.
        changed = output == oops_word
        return ("oops_" if changed else "success_") + ("ec0" if pipeline_ok else "ecnz")


def stats_to_json(stats: CampaignStats) -> str:
    payload = {
        "programs": stats.programs,
        "rounds": stats.rounds,
        "injected_runs": stats.injected_runs,
        "outcome_matrix": stats.outcome_matrix,
        "verdicts": stats.verdicts,
        "instruction_coverage": list(stats.instruction_coverage),
        "injection_counters": dict(sorted(stats.injection_counters.items())),
        "trace_presence": dict(sorted(stats.trace_presence.items())),
        "traces_total": stats.traces_total,
        "finding_signatures": list(stats.finding_signatures),
        "config": stats.config,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def stats_from_json(text: str) -> CampaignStats:
    data = json.loads(text)
    return CampaignStats(
        programs=data["programs"],
        rounds=data["rounds"],
        injected_runs=data["injected_runs"],
        outcome_matrix=data["outcome_matrix"],
        verdicts=data["verdicts"],
        instruction_coverage=tuple(data["instruction_coverage"]),
        injection_counters=data["injection_counters"],
        trace_presence=data["trace_presence"],
        traces_total=data["traces_total"],
        finding_signatures=tuple(data["finding_signatures"]),
        config=data["config"],
    )


# --------------------------------------------------------------------------- #
# Campaign loop
# --------------------------------------------------------------------------- #


@dataclass
class CampaignResult:
    stats: CampaignStats
    findings: list[FindingReport]
    schedule_log: list[tuple[tuple[str, ...], str]]  # (mnemonics present, chosen)
    io_errors: list[str] = field(default_factory=list)


def _config_echo(config: CampaignConfig) -> dict:
    # output_dir deliberately excluded so rerun stats compare byte-for-byte.
    return {
        "seed": config.seed,
        "vm": config.vm,
        "programs": config.programs,
        "transforms": list(config.transforms),
        "functions": list(config.functions),
        "rounds_per_product": config.rounds_per_product,
        "inject": config.inject,
        "enabled_types": list(config.enabled_types),
        "weaknesses": list(config.weaknesses.names()),
        "boundary_prob": config.boundary_prob,
        "gen": {
            "max_depth": config.gen.max_depth,
            "inputs_min": config.gen.inputs_min,
            "inputs_max": config.gen.inputs_max,
            "asm_extension": config.gen.asm_extension,
            "asm_weight": config.gen.asm_weight,
            "op_weights": dict(sorted(config.gen.op_weights.items())),
        },
    }


def run_campaign(config: CampaignConfig, adapter=None) -> CampaignResult:
    """Drive the two fuzzing loops and classify every round.

    Deterministic for a fixed config: every random decision derives from
    the campaign seed, and scheduler state updates in program order.
    """
    config.validate()
    if adapter is None:
        adapter = make_adapter(config.vm, config.weaknesses, config.step_budget)

    stats = CampaignStats(config=_config_echo(config))
    counters: dict[str, int] = {}
    coverage: set[str] = set()
    findings: list[FindingReport] = []
    seen_signatures: set[str] = set()
    schedule_log: list[tuple[tuple[str, ...], str]] = []
    result = CampaignResult(stats, findings, schedule_log)
    out_dir = Path(config.output_dir) if config.output_dir else None
    if out_dir is not None:
        (out_dir / "findings").mkdir(parents=True, exist_ok=True)
        (out_dir / "traces").mkdir(parents=True, exist_ok=True)

    for index in range(config.programs):
        rng = random.Random(f"{config.seed}:{index}")
        circuit = generate_circuit(rng.getrandbits(64), config.gen)
        k = rng.randint(*config.functions)
        variants = [circuit]
        for _ in range(k - 1):
            variants.append(transform(circuit, CATALOG, rng.randint(*config.transforms), rng).circuit)
        product = emit_product_program(variants)
        artifact = adapter.build(product)
        if hasattr(artifact, "mnemonics"):
            coverage |= artifact.mnemonics
        stats.programs += 1

        for _ in range(config.rounds_per_product):
            inputs = generate_inputs(product.arity, rng, config.boundary_prob)
            normal_run = adapter.run(artifact, inputs)
            normal = VmOutcome.from_run(normal_run)
            stats.rounds += 1
            if normal_run.trace is not None and normal_run.trace.rows:
                stats.traces_total += 1
                for op in {r.op for r in normal_run.trace.rows}:
                    stats.trace_presence[op] = stats.trace_presence.get(op, 0) + 1

            plan = None
            injected = None
            injected_run = None
            if config.inject and normal_run.trace is not None and normal_run.trace.rows:
                plan = schedule(normal_run.trace, counters, config.enabled_types, rng)
                schedule_log.append(
                    (tuple(sorted({r.op for r in normal_run.trace.rows})), plan.target_mnemonic)
                )
                injected_run = adapter.run(artifact, inputs, plan)
                injected = VmOutcome.from_run(injected_run)
                stats.injected_runs += 1
                cell = stats.matrix_cell(
                    injected.output if injected.exit_clean else None,
                    injected.exit_clean and injected.accepted,
                )
                stats.outcome_matrix[cell] += 1

            verdict = classify(normal, injected)
            stats.verdicts[verdict.value] += 1
            if verdict not in REPORTABLE:
                continue

            if verdict is Verdict.SOUNDNESS_BUG:
                signature = finding_signature(verdict, None, plan.target_mnemonic)
            else:
                constraint = normal.constraint if normal.accepted is False else None
                if not normal.exit_clean:
                    constraint = "exec-fault"
                signature = finding_signature(verdict, constraint, None)
            if signature in seen_signatures:
                continue
            seen_signatures.add(signature)

            finding = FindingReport(
                verdict=verdict,
                signature=signature,
                campaign_seed=config.seed,
                program_index=index,
                vm_build=adapter.build_id,
                weaknesses=config.weaknesses.names(),
                circuits=tuple(il.render_circuit(c) for c in variants),
                inputs=inputs,
                injection=plan if verdict is Verdict.SOUNDNESS_BUG else None,
                normal=normal,
                injected=injected if verdict is Verdict.SOUNDNESS_BUG else None,
            )
            finding = _persist_finding(finding, len(findings) + 1, out_dir,
                                       normal_run, injected_run, result.io_errors)
            findings.append(finding)
            if config.stop_after is not None and len(findings) >= config.stop_after:
                stats.instruction_coverage = tuple(sorted(coverage))
                stats.injection_counters = dict(sorted(counters.items()))
                stats.finding_signatures = tuple(f.signature for f in findings)
                _write_stats(stats, out_dir, result.io_errors)
                return result

    stats.instruction_coverage = tuple(sorted(coverage))
    stats.injection_counters = dict(sorted(counters.items()))
    stats.finding_signatures = tuple(f.signature for f in findings)
    _write_stats(stats, out_dir, result.io_errors)
    return result


def _persist_finding(finding: FindingReport, ordinal: int, out_dir: Path | None,
                     normal_run: RunResult | None, injected_run: RunResult | None,
                     io_errors: list[str]) -> FindingReport:
    if out_dir is None:
        return finding
    from .vm import dump_trace

    stem = f"finding-{ordinal:04d}"
    refs = {}
    try:
        if normal_run is not None and normal_run.trace is not None:
            refs["normal"] = f"traces/{stem}-normal.tsv"
            (out_dir / refs["normal"]).write_text(dump_trace(normal_run.trace))
        if finding.injection is not None and injected_run is not None and injected_run.trace is not None:
            refs["injected"] = f"traces/{stem}-injected.tsv"
            (out_dir / refs["injected"]).write_text(dump_trace(injected_run.trace))
        finding = replace(finding, trace_refs=refs)
        (out_dir / "findings" / f"{stem}.json").write_text(finding_to_json(finding))
    except OSError as exc:
        io_errors.append(f"{stem}: {exc}")
        print(f"warning: could not persist {stem}: {exc}", file=sys.stderr)
    return finding


def _write_stats(stats: CampaignStats, out_dir: Path | None, io_errors: list[str]) -> None:
    if out_dir is None:
        return
    try:
        (out_dir / "stats.json").write_text(stats_to_json(stats))
    except OSError as exc:
        io_errors.append(f"stats.json: {exc}")
        print(f"warning: could not persist stats: {exc}", file=sys.stderr)


# --------------------------------------------------------------------------- #
# Replay and minimization
# --------------------------------------------------------------------------- #


def _rerun(circuits, inputs, plan, adapter):
    product = emit_product_program(circuits)
    artifact = adapter.build(product)
    normal_run = adapter.run(artifact, inputs)
    injected_run = adapter.run(artifact, inputs, plan) if plan is not None else None
    normal = VmOutcome.from_run(normal_run)
    injected = VmOutcome.from_run(injected_run) if injected_run is not None else None
    return classify(normal, injected), normal_run, injected_run


def replay(report: FindingReport, adapter) -> Verdict:
    """Re-execute exactly the recorded circuits, inputs, and plan."""
    if adapter.build_id != report.vm_build:
        print(
            f"warning: replaying on {adapter.build_id!r}, finding was recorded on "
            f"{report.vm_build!r}; the verdict may differ",
            file=sys.stderr,
        )
    circuits = [il.parse_circuit(text) for text in report.circuits]
    verdict, _, _ = _rerun(circuits, report.inputs, report.injection, adapter)
    return verdict


def _candidate_plans(finding: FindingReport, trace) -> list[InjectionPlan]:
    base = finding.injection
    if base is None:
        return [None]
    steps = [r.step for r in trace.rows if r.op == base.target_mnemonic]
    return [
        InjectionPlan(base.type, step, base.payload_seed, base.target_mnemonic)
        for step in steps
    ]


def _reproduces(finding: FindingReport, circuits, adapter):
    """Re-run a candidate reduction; return the reproducing plan or None.

    Injection targeting is structural: the fault must land on the same
    mnemonic, so each occurrence in the candidate's fresh trace is tried
    in order.
    """
    try:
        product = emit_product_program(circuits)
    except ValueError:
        return None
    artifact = adapter.build(product)
    normal_run = adapter.run(artifact, inputs=finding.inputs)
    normal = VmOutcome.from_run(normal_run)
    if finding.injection is None:
        if classify(normal) == finding.verdict and _same_signature(finding, normal, None):
            return (None,)
        return None
    if normal_run.trace is None:
        return None
    for plan in _candidate_plans(finding, normal_run.trace):
        injected_run = adapter.run(artifact, finding.inputs, plan)
        injected = VmOutcome.from_run(injected_run)
        if classify(normal, injected) == finding.verdict:
            return (plan,)
    return None


def _same_signature(finding: FindingReport, normal: VmOutcome, mnemonic: str | None) -> bool:
    if finding.verdict is Verdict.SOUNDNESS_BUG:
        return True
    constraint = normal.constraint if normal.accepted is False else None
    if not normal.exit_clean:
        constraint = "exec-fault"
    return finding.signature == finding_signature(finding.verdict, constraint, mnemonic)


def minimize(finding: FindingReport, adapter) -> FindingReport:
    """Greedy verdict-preserving reduction of a finding.

    Drops bundled functions down to two, then replaces subexpressions by
    the literal they evaluate to under the recorded inputs, re-validating
    after every step.
    """
    circuits = [il.parse_circuit(text) for text in finding.circuits]
    if _reproduces(finding, circuits, adapter) is None:
        raise ValueError("finding does not reproduce on this VM; cannot minimize")

    changed = True
    while changed and len(circuits) > 2:
        changed = False
        for i in range(len(circuits)):
            candidate = circuits[:i] + circuits[i + 1:]
            if len(candidate) >= 2 and _reproduces(finding, candidate, adapter) is not None:
                circuits = candidate
                changed = True
                break

    changed = True
    while changed:
        changed = False
        for ci, circ in enumerate(circuits):
            env = dict(zip(circ.input_names, finding.inputs))
            for path, node in rewritable_sites(circ.output_expr):
                if isinstance(node, (il.IntLit, il.BoolLit)):
                    continue
                value = il.eval_expr(node, env)
                literal = (
                    il.IntLit(il.to_word(int(value)))
                    if il.expr_type(node) is il.Ty.INT
                    else il.BoolLit(bool(value))
                )
                reduced = il.Circuit(circ.inputs, il.replace_at(circ.output_expr, path, literal),
                                     circ.output_name)
                candidate = circuits[:ci] + [reduced] + circuits[ci + 1:]
                if _reproduces(finding, candidate, adapter) is not None:
                    circuits = candidate
                    changed = True
                    break
            if changed:
                break

    outcome = _reproduces(finding, circuits, adapter)
    assert outcome is not None
    plan = outcome[0]
    verdict, normal_run, injected_run = _rerun(circuits, finding.inputs, plan, adapter)
    return replace(
        finding,
        circuits=tuple(il.render_circuit(c) for c in circuits),
        injection=plan,
        normal=VmOutcome.from_run(normal_run),
        injected=VmOutcome.from_run(injected_run) if injected_run is not None else None,
        trace_refs={},
        minimized=True,
    )


# --------------------------------------------------------------------------- #
# Config files
# --------------------------------------------------------------------------- #


def config_to_ini(config: CampaignConfig) -> str:
    parser = configparser.ConfigParser()
    parser["campaign"] = {
        "seed": str(config.seed),
        "vm": config.vm,
        "programs": str(config.programs),
        "transforms_min": str(config.transforms[0]),
        "transforms_max": str(config.transforms[1]),
        "functions_min": str(config.functions[0]),
        "functions_max": str(config.functions[1]),
        "rounds": str(config.rounds_per_product),
        "inject": str(config.inject).lower(),
        "types": ", ".join(config.enabled_types),
        "weaknesses": ", ".join(config.weaknesses.names()),
        "step_budget": str(config.step_budget),
        "boundary_prob": repr(config.boundary_prob),
    }
    if config.output_dir:
        parser["campaign"]["output_dir"] = config.output_dir
    parser["generator"] = {
        "max_depth": str(config.gen.max_depth),
        "inputs_min": str(config.gen.inputs_min),
        "inputs_max": str(config.gen.inputs_max),
        "asm_extension": str(config.gen.asm_extension).lower(),
        "asm_weight": repr(config.gen.asm_weight),
    }
    if config.gen.op_weights:
        parser["op_weights"] = {k: repr(v) for k, v in sorted(config.gen.op_weights.items())}
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def config_from_ini(text: str) -> CampaignConfig:
    parser = configparser.ConfigParser()
    parser.read_string(text)
    camp = parser["campaign"] if parser.has_section("campaign") else {}
    gen_section = parser["generator"] if parser.has_section("generator") else {}

    def split_list(value: str) -> tuple[str, ...]:
        return tuple(v.strip() for v in value.split(",") if v.strip())

    defaults = CampaignConfig()
    gen = GenConfig(
        max_depth=int(gen_section.get("max_depth", defaults.gen.max_depth)),
        inputs_min=int(gen_section.get("inputs_min", defaults.gen.inputs_min)),
        inputs_max=int(gen_section.get("inputs_max", defaults.gen.inputs_max)),
        asm_extension=_parse_bool(gen_section.get("asm_extension", "true")),
        asm_weight=float(gen_section.get("asm_weight", defaults.gen.asm_weight)),
        op_weights={k: float(v) for k, v in parser["op_weights"].items()}
        if parser.has_section("op_weights") else {},
    )
    types = split_list(camp.get("types", "")) or INJECTION_TYPES
    weaknesses = WeaknessSet.from_names(split_list(camp.get("weaknesses", "")))
    return CampaignConfig(
        seed=int(camp.get("seed", defaults.seed)),
        vm=camp.get("vm", defaults.vm),
        programs=int(camp.get("programs", defaults.programs)),
        transforms=(int(camp.get("transforms_min", defaults.transforms[0])),
                    int(camp.get("transforms_max", defaults.transforms[1]))),
        functions=(int(camp.get("functions_min", defaults.functions[0])),
                   int(camp.get("functions_max", defaults.functions[1]))),
        rounds_per_product=int(camp.get("rounds", defaults.rounds_per_product)),
        inject=_parse_bool(camp.get("inject", "true")),
        enabled_types=types,
        weaknesses=weaknesses,
        gen=gen,
        output_dir=camp.get("output_dir") or None,
        step_budget=int(camp.get("step_budget", defaults.step_budget)),
        boundary_prob=float(camp.get("boundary_prob", defaults.boundary_prob)),
    )


def _parse_bool(value: str) -> bool:
    if value.lower() in ("true", "1", "yes", "on"):
        return True
    if value.lower() in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")
