"""Fuzzer for prover/verifier VM stacks.

Generates random circuits, derives semantically equivalent variants through
rewrite rules, merges them into product programs with a known expected
output, and runs them on a VM under test -- normally and under injected
prover faults -- to flag soundness and completeness bugs.
"""

__version__ = "0.1.0"
