"""Separation-logic assertion language: syntax, semantics and rewriting."""

from .ast import FALSE, TRUE, ArithAtom, Formula, IsNullAtom, Lin, PointsTo, PredApp, SymHeap
from .parser import FormulaSyntaxError, parse_formula
from .printer import print_formula
from .semantics import Unsat, models, sat_bounded
from .transform import simplify, substitute

__all__ = [
    "FALSE",
    "TRUE",
    "ArithAtom",
    "Formula",
    "FormulaSyntaxError",
    "IsNullAtom",
    "Lin",
    "PointsTo",
    "PredApp",
    "SymHeap",
    "Unsat",
    "models",
    "parse_formula",
    "print_formula",
    "sat_bounded",
    "simplify",
    "substitute",
]
