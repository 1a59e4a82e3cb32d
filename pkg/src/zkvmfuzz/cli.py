"""Command-line entry point.

Exit codes: 0 clean, 10 findings reported by fuzz, 2 usage error,
3 adapter failure.
"""

from __future__ import annotations

import os
import random
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import harness, il, isa, report
from .adapter import AdapterError, make_adapter
from .codegen import compile_to_refvm, emit_product_program
from .gen import GenConfig, generate_circuit
from .harness import CampaignConfig, config_from_ini, config_to_ini
from .rewrite import CATALOG, render_rule_table, transform
from .vm import WeaknessSet

EXIT_FINDINGS = 10
EXIT_ADAPTER = 3

OUTPUT_DIR_ENV = "ZKVMFUZZ_OUT"


@click.group()
@click.version_option()
def main() -> None:
    """Metamorphic + fault-injection fuzzer for prover/verifier VMs."""


def _split_csv(value: str | None) -> tuple[str, ...] | None:
    if value is None:
        return None
    return tuple(v.strip() for v in value.split(",") if v.strip())


@main.command()
@click.option("--config", "config_file", type=click.Path(exists=True), help="campaign config file (INI)")
@click.option("--seed", type=int, default=None)
@click.option("--vm", default=None, help="'refvm' or 'cmd:<adapter command>'")
@click.option("--programs", type=int, default=None)
@click.option("--transforms-min", type=int, default=None)
@click.option("--transforms-max", type=int, default=None)
@click.option("--functions-min", type=int, default=None)
@click.option("--functions-max", type=int, default=None)
@click.option("--rounds", type=int, default=None)
@click.option("--inject", type=click.Choice(["on", "off"]), default=None)
@click.option("--types", default=None, help="comma-separated injection types")
@click.option("--weaknesses", default=None, help="comma-separated weakness flags")
@click.option("--out", "out_dir", default=None, help="output directory (default: campaign-out)")
@click.option("--figures/--no-figures", default=True, help="render PNG figures with the report")
def fuzz(config_file, seed, vm, programs, transforms_min, transforms_max,
         functions_min, functions_max, rounds, inject, types, weaknesses,
         out_dir, figures) -> None:
    """Run a fuzzing campaign and write findings, stats, and figures."""
    config = config_from_ini(Path(config_file).read_text()) if config_file else CampaignConfig()
    updates: dict = {}
    if seed is not None:
        updates["seed"] = seed
    if vm is not None:
        updates["vm"] = vm
    if programs is not None:
        updates["programs"] = programs
    if transforms_min is not None or transforms_max is not None:
        lo, hi = config.transforms
        updates["transforms"] = (transforms_min or lo, transforms_max or hi)
    if functions_min is not None or functions_max is not None:
        lo, hi = config.functions
        updates["functions"] = (functions_min or lo, functions_max or hi)
    if rounds is not None:
        updates["rounds_per_product"] = rounds
    if inject is not None:
        updates["inject"] = inject == "on"
    if types is not None:
        updates["enabled_types"] = _split_csv(types)
    if weaknesses is not None:
        updates["weaknesses"] = WeaknessSet.from_names(_split_csv(weaknesses))
    resolved_out = out_dir or os.environ.get(OUTPUT_DIR_ENV) or config.output_dir or "campaign-out"
    updates["output_dir"] = resolved_out
    config = replace(config, **updates)
    try:
        config.validate()
    except ValueError as exc:
        raise click.UsageError(str(exc))

    try:
        result = harness.run_campaign(config)
    except AdapterError as exc:
        click.echo(f"adapter failure: {exc}", err=True)
        sys.exit(EXIT_ADAPTER)

    out_path = Path(resolved_out)
    out_path.mkdir(parents=True, exist_ok=True)
    (out_path / "config.ini").write_text(config_to_ini(replace(config, output_dir=None)))
    report.write_tables(result.stats, out_path)
    if figures:
        report.render_figures(result.stats, out_path / "figures")
    click.echo(report.summary_text(result.stats), nl=False)
    click.echo(f"\nreports written to {out_path}")
    if result.findings:
        sys.exit(EXIT_FINDINGS)


@main.command()
@click.argument("finding_file", type=click.Path(exists=True))
@click.option("--vm", default=None, help="override the recorded VM adapter")
@click.option("--weaknesses", default=None, help="override the recorded weakness flags")
@click.option("--minimize", "do_minimize", is_flag=True, help="minimize before reporting")
def replay(finding_file, vm, weaknesses, do_minimize) -> None:
    """Replay a stored finding and print its verdict."""
    try:
        finding = harness.finding_from_json(Path(finding_file).read_text())
    except (ValueError, KeyError) as exc:
        raise click.ClickException(f"cannot parse finding file: {exc}")
    weak = (WeaknessSet.from_names(_split_csv(weaknesses)) if weaknesses is not None
            else WeaknessSet.from_names(finding.weaknesses))
    try:
        adapter = make_adapter(vm or ("refvm" if finding.vm_build.startswith("refvm") else finding.vm_build), weak)
        if do_minimize:
            finding = harness.minimize(finding, adapter)
            click.echo("minimized circuits:")
            for text in finding.circuits:
                click.echo(text.rstrip())
        verdict = harness.replay(finding, adapter)
    except AdapterError as exc:
        click.echo(f"adapter failure: {exc}", err=True)
        sys.exit(EXIT_ADAPTER)
    click.echo(f"stored verdict:   {finding.verdict.value}")
    click.echo(f"replayed verdict: {verdict.value}")


@main.command()
def rules() -> None:
    """Print the rewrite-rule catalog."""
    click.echo(render_rule_table(CATALOG), nl=False)
    click.echo(f"\n{len(CATALOG)} rules")


@main.command()
@click.option("--seed", type=int, default=0)
@click.option("--functions", "k", type=int, default=2, help="circuits bundled in the product")
@click.option("--transforms", type=int, default=2, help="stacked rewrites per variant")
@click.option("--asm/--no-asm", default=True, help="enable the inline-assembly extension")
@click.option("--out", "out_dir", default="emit-out", help="output directory")
def emit(seed, k, transforms, asm, out_dir) -> None:
    """Generate one product program; write its source and disassembly."""
    if k < 2:
        raise click.UsageError("--functions must be >= 2")
    rng = random.Random(f"emit:{seed}")
    circuit = generate_circuit(rng.getrandbits(64), GenConfig(asm_extension=asm))
    variants = [circuit] + [
        transform(circuit, CATALOG, transforms, rng).circuit for _ in range(k - 1)
    ]
    product = emit_product_program(variants)
    program = compile_to_refvm(product)
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    (out_path / "product.rs").write_text(product.source_text)
    (out_path / "product.disasm").write_text(isa.disassemble(program))
    for index, circ in enumerate(variants, start=1):
        (out_path / f"c{index}.il").write_text(il.render_circuit(circ))
    click.echo(f"wrote product.rs, product.disasm, and {k} circuits to {out_path}")


@main.command("stats")
@click.argument("stats_file", type=click.Path(exists=True))
@click.option("--out", "out_dir", default=None, help="re-render tables and figures here")
@click.option("--figures/--no-figures", default=True)
def stats_cmd(stats_file, out_dir, figures) -> None:
    """Re-render a stored campaign stats file."""
    try:
        stats = harness.stats_from_json(Path(stats_file).read_text())
    except (ValueError, KeyError) as exc:
        raise click.ClickException(f"cannot parse stats file: {exc}")
    click.echo(report.summary_text(stats), nl=False)
    if out_dir:
        out_path = Path(out_dir)
        report.write_tables(stats, out_path)
        if figures:
            report.render_figures(stats, out_path / "figures")
        click.echo(f"\ntables written to {out_path}")


if __name__ == "__main__":
    main()
