"""VM adapters: the bundled reference VM and the external wire protocol.

An adapter turns a product program into an opaque artifact (``build``) and
executes it (``run``), reporting the output word, an exit code, and
optionally a trace. External VMs fold their verifier into the exit code
(0 means executed cleanly and verified); the bundled reference adapter
additionally exposes the verifier decision and the full trace.

External adapters are subprocesses speaking line-delimited JSON over
stdin/stdout:

    -> {"cmd": "build", "source": <text>, "circuits": [<il>...], "arity": N}
    <- {"status": "ok", "artifact": <id>}
    -> {"cmd": "run", "artifact": <id>, "inputs": [..],
        "plan": {"type": .., "target_step": .., "payload_seed": ..} | null}
    <- {"status": "ok", "output": <word|null>, "exit_code": N,
        "trace_path": <path|null>}
    -> {"cmd": "shutdown"}
    <- {"status": "ok"}

Any failure is ``{"status": "error", "message": ...}``. ``python -m
zkvmfuzz.adapter`` serves the reference VM behind this protocol, which is
how the protocol itself is exercised in tests.
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from . import __version__, codegen, il, vm
from .codegen import ProductProgram
from .inject import InjectionPlan
from .isa import RefProgram
from .vm import TraceRecord, WeaknessSet


class AdapterError(Exception):
    pass


@dataclass(frozen=True)
class RunResult:
    """One VM execution as seen through the adapter boundary."""

    output: int | None
    exit_code: int
    accepted: bool | None = None  # explicit verifier decision (reference VM only)
    constraint: str | None = None
    row: int | None = None
    trace: TraceRecord | None = None

    @property
    def verified(self) -> bool:
        """Pipeline verdict: explicit decision if present, else the exit code."""
        if self.accepted is not None:
            return self.exit_code == 0 and self.accepted
        return self.exit_code == 0


class RefVmAdapter:
    """In-process adapter around the bundled executor and verifier."""

    name = "refvm"

    def __init__(self, weaknesses: WeaknessSet | None = None, step_budget: int = vm.DEFAULT_STEP_BUDGET):
        self.weaknesses = weaknesses or WeaknessSet()
        self.step_budget = step_budget

    @property
    def build_id(self) -> str:
        flags = ",".join(self.weaknesses.names()) or "none"
        return f"refvm-{__version__}+{flags}"

    def build(self, product: ProductProgram) -> RefProgram:
        return codegen.compile_to_refvm(product)

    def run(self, artifact: RefProgram, inputs, plan: InjectionPlan | None = None) -> RunResult:
        trace = vm.execute(artifact, inputs, plan, self.step_budget)
        if not trace.exit.clean:
            code = 3 if trace.exit.kind == "step-budget-exceeded" else 1
            return RunResult(None, code, accepted=False, trace=trace)
        result = vm.verify(artifact, trace, self.weaknesses)
        return RunResult(
            trace.final_output,
            0 if result.accepted else 2,
            accepted=result.accepted,
            constraint=result.constraint,
            row=result.row,
            trace=trace,
        )


class SubprocessAdapter:
    """Client side of the external-adapter wire protocol."""

    def __init__(self, command: list[str]):
        self.command = command
        self.name = command[0]
        self._proc: subprocess.Popen | None = None

    @property
    def build_id(self) -> str:
        return "cmd:" + " ".join(self.command)

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                )
            except OSError as exc:
                raise AdapterError(f"cannot start adapter {self.command}: {exc}") from exc
        return self._proc

    def _exchange(self, message: dict) -> dict:
        proc = self._ensure()
        try:
            proc.stdin.write(json.dumps(message) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise AdapterError(f"adapter pipe failed: {exc}") from exc
        if not line:
            raise AdapterError("adapter closed its output stream")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AdapterError(f"bad adapter response: {line!r}") from exc
        if response.get("status") != "ok":
            raise AdapterError(f"adapter error: {response.get('message', response)}")
        return response

    def build(self, product: ProductProgram) -> str:
        response = self._exchange({
            "cmd": "build",
            "source": product.source_text,
            "circuits": [il.render_circuit(c) for c in product.circuits],
            "arity": product.arity,
        })
        return response["artifact"]

    def run(self, artifact: str, inputs, plan: InjectionPlan | None = None) -> RunResult:
        message = {
            "cmd": "run",
            "artifact": artifact,
            "inputs": [int(v) for v in inputs],
            "plan": None if plan is None else {
                "type": plan.type,
                "target_step": plan.target_step,
                "payload_seed": plan.payload_seed,
            },
        }
        response = self._exchange(message)
        trace = None
        if response.get("trace_path"):
            trace = vm.load_trace(Path(response["trace_path"]).read_text())
        return RunResult(response.get("output"), int(response["exit_code"]), trace=trace)

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._exchange({"cmd": "shutdown"})
            except AdapterError:
                pass
            self._proc.wait(timeout=5)
        self._proc = None


def make_adapter(spec: str, weaknesses: WeaknessSet | None = None,
                 step_budget: int = vm.DEFAULT_STEP_BUDGET):
    """Adapter factory: ``refvm`` or ``cmd:<command line>``."""
    if spec == "refvm":
        return RefVmAdapter(weaknesses, step_budget)
    if spec.startswith("cmd:"):
        import shlex

        return SubprocessAdapter(shlex.split(spec[len("cmd:"):]))
    raise AdapterError(f"unknown vm adapter {spec!r} (use 'refvm' or 'cmd:<command>')")


# --------------------------------------------------------------------------- #
# Reference server (the wire protocol over the bundled VM)
# --------------------------------------------------------------------------- #


def serve(stdin=None, stdout=None, weaknesses: WeaknessSet | None = None) -> None:
    """Serve the reference VM behind the wire protocol until shutdown/EOF."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    adapter = RefVmAdapter(weaknesses)
    artifacts: dict[str, RefProgram] = {}
    trace_dir = Path(tempfile.mkdtemp(prefix="zkvmfuzz-adapter-"))
    runs = 0

    def reply(payload: dict) -> None:
        stdout.write(json.dumps(payload) + "\n")
        stdout.flush()

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            message = json.loads(line)
            cmd = message.get("cmd")
            if cmd == "shutdown":
                reply({"status": "ok"})
                return
            if cmd == "build":
                circuits = [il.parse_circuit(text) for text in message["circuits"]]
                product = codegen.emit_product_program(circuits)
                handle = f"prog{len(artifacts)}"
                artifacts[handle] = adapter.build(product)
                reply({"status": "ok", "artifact": handle})
            elif cmd == "run":
                program = artifacts[message["artifact"]]
                plan = None
                if message.get("plan"):
                    p = message["plan"]
                    plan = InjectionPlan(p["type"], p["target_step"], p["payload_seed"])
                result = adapter.run(program, message["inputs"], plan)
                runs += 1
                trace_path = None
                if result.trace is not None:
                    trace_path = trace_dir / f"run{runs}.tsv"
                    trace_path.write_text(vm.dump_trace(result.trace))
                reply({
                    "status": "ok",
                    "output": result.output,
                    "exit_code": result.exit_code,
                    "trace_path": str(trace_path) if trace_path else None,
                })
            else:
                reply({"status": "error", "message": f"unknown command {cmd!r}"})
        except Exception as exc:  # adapter servers must not die on bad input
            reply({"status": "error", "message": f"{type(exc).__name__}: {exc}"})


def main(argv: list[str] | None = None) -> None:
    import argparse

    parser = argparse.ArgumentParser(description="Serve the reference VM over the adapter wire protocol.")
    parser.add_argument("--weaknesses", default="", help="comma-separated weakness flags")
    args = parser.parse_args(argv)
    names = [n.strip() for n in args.weaknesses.split(",") if n.strip()]
    serve(weaknesses=WeaknessSet.from_names(names))


if __name__ == "__main__":
    main()
