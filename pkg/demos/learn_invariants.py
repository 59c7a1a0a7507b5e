"""Walk through invariant learning on the two-list example program.

Run with ``python3 demos/learn_invariants.py``.  The script prints the
feature catalog at the second learning point, the vectors of two concrete
tests, and the invariants learned at each point after mutation.
"""

from importlib.resources import files

from slearner.config import Config
from slearner.features import evaluate, vector_str
from slearner.heaplang import parse
from slearner.learner import report
from slearner.speclang.printer import print_formula
from slearner.verifier.learning import learn_point, point_catalog, snapshots_at
from slearner.verifier.pipeline import prepare
from slearner.verifier.points import describe_point

source = (files("slearner") / "corpus" / "fig1.hl").read_text()
print(source)

# Nine grid tests over m, n in {0, 1, 2}; the tests where m > n fail in getSum.
config = Config(seed=0, grid=(0, 1, 2))
prog, lay, tests = prepare(parse(source), config)
for t in tests:
    print(f"test {t.test.show(prog)}: {t.outcome.tag} -> {t.label}")

p2 = next(p for p in lay.points if p.id == "p2")
catalog = point_catalog(prog, p2)
print(f"\nfeatures at p2 [{describe_point(prog, p2)}]:")
print(catalog.listing())

print("\nvectors at p2:")
for graph, label in snapshots_at(p2, tests)[:3]:
    print(f"  {vector_str(evaluate(catalog, graph))}  {label}")

for p in lay.points:
    if not p.learned:
        continue
    r = learn_point(prog, p, snapshots_at(p, tests), config)
    ref = r.refined
    print(f"\n{p.id}: {ref.rounds} mutation rounds, distinct rows per round {ref.row_counts}")
    print(report(ref.matrix, ref.chosen, ref.regions))
    print(f"invariant: {print_formula(r.formula)}")
