"""Verify the example programs end to end and show what a failure looks like.

Run with ``python3 demos/verify_programs.py``.  Each program goes through
test generation, invariant learning, decomposition into per-call triples,
frame elision and exhaustive bounded checking.
"""

from importlib.resources import files

from slearner.config import Config
from slearner.heaplang import parse
from slearner.heaplang.transform import format_program, loops_to_tailrec
from slearner.verifier.pipeline import verify

corpus = files("slearner") / "corpus"


def run(name: str, **kw) -> None:
    program = parse((corpus / f"{name}.hl").read_text())
    r = verify(program, Config(seed=0, **kw), name)
    print(r.text())


# The two-list program verifies: three call triples, each checked on every
# heap with at most five records and integers in [-8, 8].
run("fig1")

# Dropping the m <= n precondition makes getSum dereference past the end of x.
# The checker reports the triple that fails and a concrete pre-state.
run("fig1_bug")

# Loops are turned into tail-recursive functions first, so the loop body
# becomes a call with its own learning points.
program = parse((corpus / "sll_build_loop.hl").read_text())
print(format_program(loops_to_tailrec(program)))

# The first round of checking finds a counterexample to a learned invariant;
# its states are added to the training rows and the adjacent points relearn.
run("sll_build_loop")

# A traversal pointer into the middle of a list needs a list-segment
# predicate the library does not have, so the verdict is Inconclusive.
run("sll_loop", max_nodes=3)
