"""Seeded test inputs for the entry function and their execution."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..heaplang.interpreter import Construct, ExecutionOutcome, Interpreter
from ..heaplang.syntax import BOOL, INT, FunctionDef, Program
from ..mutation import label_of


@dataclass(frozen=True)
class TestCase:
    __test__ = False

    inputs: tuple
    seed: Optional[int]
    index: int

    def show(self, program: Program) -> str:
        names = [p.name for p in program.entry_function.params]
        return ", ".join(f"{n}={_fmt(v)}" for n, v in zip(names, self.inputs)) or "()"


@dataclass
class TestResult:
    __test__ = False

    test: TestCase
    outcome: ExecutionOutcome
    label: str = field(init=False)

    def __post_init__(self):
        self.label = label_of(self.outcome)


def _fmt(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def constructors(program: Program, record: str) -> list[FunctionDef]:
    """Non-entry functions returning ``record`` whose parameters are all constructible."""
    out = []
    for f in program.functions:
        if f.name == program.entry or f.ret != record:
            continue
        if all(p.type in (INT, BOOL) or program.is_ref_type(p.type) for p in f.params) \
                and not any(p.by_ref for p in f.params):
            out.append(f)
    return out


def _value(program: Program, t: str, rng: random.Random, bound: int, depth: int):
    if t == INT:
        return rng.randint(-bound, bound)
    if t == BOOL:
        return rng.random() < 0.5
    cands = constructors(program, t)
    if not cands or depth <= 0 or rng.random() < 0.25:
        return None
    f = cands[rng.randrange(len(cands))]
    return Construct(f.name, tuple(_value(program, p.type, rng, bound, depth - 1) for p in f.params))


def generate_tests(program: Program, n: int, seed: int, bound: int = 5) -> list[TestCase]:
    """``n`` random inputs; ints are uniform in [-bound, bound] and reference
    inputs are constructor applications or null.  No parameters gives one
    empty test."""
    if n < 1:
        raise ValueError("test count must be at least 1")
    params = program.entry_function.params
    if not params:
        return [TestCase((), seed, 0)]
    rng = random.Random(seed)
    return [
        TestCase(tuple(_value(program, p.type, rng, bound, 3) for p in params), seed, i)
        for i in range(n)
    ]


def grid_tests(program: Program, values: Sequence[int]) -> list[TestCase]:
    """Every combination of ``values`` for integer parameters (references get null)."""
    params = program.entry_function.params
    domains = []
    for p in params:
        if p.type == INT:
            domains.append(tuple(values))
        elif p.type == BOOL:
            domains.append((False, True))
        else:
            domains.append((None,))
    return [TestCase(tuple(c), None, i) for i, c in enumerate(itertools.product(*domains))]


def execute(program: Program, tests: Sequence[TestCase], points: dict, step_budget: int) -> list[TestResult]:
    interp = Interpreter(program, step_budget, points=points)
    return [TestResult(t, interp.run(list(t.inputs))) for t in tests]
