"""Campaign reporting: console summary, delimited tables, and figures.

The report path writes the outcome matrix and per-mnemonic injection
counters as TSV files and renders the same data as PNG figures. Figures
are presentation artifacts; the TSV/JSON files are the stable, diffable
outputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .harness import MATRIX_CELLS, CampaignStats, Verdict

_CELL_LABELS = {
    "success_ec0": ("SUCCESS", "EC == 0"),
    "success_ecnz": ("SUCCESS", "EC != 0"),
    "oops_ec0": ("OOPS", "EC == 0"),
    "oops_ecnz": ("OOPS", "EC != 0"),
}


def summary_text(stats: CampaignStats) -> str:
    lines = [
        f"programs tested:    {stats.programs}",
        f"rounds executed:    {stats.rounds}",
        f"injected runs:      {stats.injected_runs}",
        "",
        "verdicts:",
    ]
    for verdict in Verdict:
        lines.append(f"  {verdict.value:<16} {stats.verdicts.get(verdict.value, 0)}")
    lines.append("")
    lines.append("injected outcome matrix (output x pipeline exit):")
    for cell in MATRIX_CELLS:
        output, ec = _CELL_LABELS[cell]
        count = stats.outcome_matrix.get(cell, 0)
        share = count / stats.injected_runs if stats.injected_runs else 0.0
        lines.append(f"  {output:<8} {ec:<9} {count:>8}  ({share:6.1%})")
    lines.append("")
    lines.append(
        f"instruction coverage: {len(stats.instruction_coverage)} distinct mnemonics"
    )
    if stats.instruction_coverage:
        lines.append("  " + " ".join(stats.instruction_coverage))
    if stats.finding_signatures:
        lines.append("")
        lines.append("findings:")
        for signature in stats.finding_signatures:
            lines.append(f"  {signature}")
    return "\n".join(lines) + "\n"


def write_tables(stats: CampaignStats, out_dir: Path) -> list[Path]:
    """Delimited outputs: the outcome matrix and the injection counters."""
    out_dir.mkdir(parents=True, exist_ok=True)
    matrix = out_dir / "outcome_matrix.tsv"
    rows = ["output\texit\tcount"]
    for cell in MATRIX_CELLS:
        output, ec = _CELL_LABELS[cell]
        rows.append(f"{output}\t{ec}\t{stats.outcome_matrix.get(cell, 0)}")
    matrix.write_text("\n".join(rows) + "\n")

    counters = out_dir / "injection_counters.tsv"
    rows = ["mnemonic\tinjections\ttraces_containing"]
    for mnemonic in sorted(set(stats.injection_counters) | set(stats.trace_presence)):
        rows.append(
            f"{mnemonic}\t{stats.injection_counters.get(mnemonic, 0)}"
            f"\t{stats.trace_presence.get(mnemonic, 0)}"
        )
    counters.write_text("\n".join(rows) + "\n")
    return [matrix, counters]


def render_figures(stats: CampaignStats, out_dir: Path) -> list[Path]:
    """PNG figures next to the delimited output."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    if stats.injection_counters:
        mnemonics = sorted(stats.injection_counters)
        counts = [stats.injection_counters[m] for m in mnemonics]
        fig, ax = plt.subplots(figsize=(max(6, 0.3 * len(mnemonics)), 4))
        ax.bar(mnemonics, counts, color="#4878a8")
        ax.set_ylabel("injections")
        ax.set_title("Injection count per instruction mnemonic")
        ax.tick_params(axis="x", rotation=90, labelsize=7)
        fig.tight_layout()
        path = out_dir / "injection_counts.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    if stats.injected_runs:
        fig, ax = plt.subplots(figsize=(5, 4))
        cells = [stats.outcome_matrix.get(c, 0) for c in MATRIX_CELLS]
        labels = ["\n".join(_CELL_LABELS[c]) for c in MATRIX_CELLS]
        colors = ["#6a9f58", "#d1a54f", "#c44e52", "#8172b2"]
        ax.bar(labels, cells, color=colors)
        ax.set_ylabel("injected runs")
        ax.set_title("Injected-run outcomes")
        fig.tight_layout()
        path = out_dir / "outcome_matrix.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    return written
