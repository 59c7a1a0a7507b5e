"""The heap language: syntax, parser, interpreter and loop transformation."""

from .interpreter import (
    BUDGET,
    MEMORY_ERROR,
    NORMAL,
    POST_VIOLATION,
    Construct,
    ExecutionOutcome,
    Interpreter,
    InterpreterError,
    run,
)
from .parser import HeapLangError, ParseError, TypeCheckError, parse
from .syntax import Program

__all__ = [
    "BUDGET",
    "MEMORY_ERROR",
    "NORMAL",
    "POST_VIOLATION",
    "Construct",
    "ExecutionOutcome",
    "HeapLangError",
    "Interpreter",
    "InterpreterError",
    "ParseError",
    "Program",
    "TypeCheckError",
    "parse",
    "run",
]
