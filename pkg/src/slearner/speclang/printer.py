"""Concrete syntax printer; ``parse_formula(print_formula(f)) == f``."""

from __future__ import annotations

from .ast import ArithAtom, Formula, IsNullAtom, Lin, PointsTo, PredApp, SymHeap

_FLIP = {"<": ">", "<=": ">="}


def _sum(terms: list[tuple[str, int]], const: int) -> str:
    parts: list[str] = []
    for v, c in terms:
        mag = abs(c)
        body = v if mag == 1 else f"{mag}*{v}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f"+ {body}" if c > 0 else f"- {body}")
    if const or not parts:
        if not parts:
            parts.append(str(const))
        else:
            parts.append(f"+ {const}" if const > 0 else f"- {-const}")
    return " ".join(parts)


def print_lin_atom(a: ArithAtom) -> str:
    lin: Lin = a.lin
    pos = [(v, c) for v, c in lin.coeffs if c > 0]
    neg = [(v, -c) for v, c in lin.coeffs if c < 0]
    if pos:
        # pos - neg + k op 0  ->  pos op neg - k
        return f"{_sum(pos, 0)} {a.op} {_sum(neg, -lin.const)}"
    if neg:
        # -neg + k op 0  ->  neg flip(op) k
        op = _FLIP.get(a.op, a.op)
        return f"{_sum(neg, 0)} {op} {lin.const}"
    return f"{lin.const} {a.op} 0"


def print_pure(p) -> str:
    if isinstance(p, IsNullAtom):
        return f"{p.var} {'=' if p.positive else '!='} null"
    return print_lin_atom(p)


def _arg(a) -> str:
    return str(a)


def print_spatial(s) -> str:
    if isinstance(s, PointsTo):
        return f"{s.root} |-> {s.record}({', '.join(_arg(a) for a in s.args)})"
    assert isinstance(s, PredApp)
    return f"{s.name}({', '.join(_arg(a) for a in s.args)})"


def print_symheap(h: SymHeap) -> str:
    parts: list[str] = []
    if h.spatial is not None:
        parts.append(" * ".join(print_spatial(s) for s in h.spatial) if h.spatial else "emp")
    parts.extend(print_pure(p) for p in h.pure)
    body = " & ".join(parts) if parts else "true"
    if h.exists:
        return f"exists {','.join(h.exists)}. {body}"
    return body


def print_formula(f: Formula) -> str:
    if not f.disjuncts:
        return "false"
    return " | ".join(print_symheap(d) for d in f.disjuncts)
