"""Learning separation-logic invariants at call boundaries from tests and
memory-graph mutation, and checking the resulting Hoare triples by bounded
enumeration."""

__version__ = "0.1.0"
