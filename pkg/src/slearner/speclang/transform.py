"""Syntactic operations on formulas: substitution and simplification."""

from __future__ import annotations

from .ast import ArithAtom, Formula, IsNullAtom, PointsTo, PredApp, SymHeap, is_var_arg


def _rename_arg(a, m: dict[str, str]):
    return m.get(a, a) if is_var_arg(a) else a


def rename_atom(atom, m: dict[str, str]):
    if isinstance(atom, PointsTo):
        return PointsTo(m.get(atom.root, atom.root), atom.record, tuple(_rename_arg(a, m) for a in atom.args))
    if isinstance(atom, PredApp):
        return PredApp(atom.name, tuple(_rename_arg(a, m) for a in atom.args))
    if isinstance(atom, IsNullAtom):
        return IsNullAtom(m.get(atom.var, atom.var), atom.positive)
    return ArithAtom.make(atom.lin.rename(m), atom.op)


def rename_symheap(h: SymHeap, m: dict[str, str]) -> SymHeap:
    """Rename variables (free or bound) according to ``m``."""
    return SymHeap(
        tuple(m.get(v, v) for v in h.exists),
        None if h.spatial is None else tuple(rename_atom(a, m) for a in h.spatial),
        tuple(rename_atom(p, m) for p in h.pure),
    )


def fresh_name(taken: set[str], base: str = "a") -> str:
    """First of a, b, c, ..., a1, b1, ... not in ``taken``."""
    i = 0
    while True:
        for ch in "abcdefghijklmnopqrstuvwxyz":
            name = ch if i == 0 else f"{ch}{i}"
            if name not in taken:
                return name
        i += 1


def substitute(f: Formula, frm: str, to: str) -> Formula:
    """Capture-avoiding replacement of free ``frm`` by ``to``."""
    if frm == to:
        return f
    out = []
    for h in f.disjuncts:
        if frm in h.exists or frm not in h.vars():
            out.append(h)
            continue
        if to in h.exists:
            new = fresh_name(h.vars() | set(h.exists) | {frm, to})
            h = rename_symheap(h, {to: new})
        out.append(rename_symheap(h, {frm: to}))
    return Formula(tuple(out))


def _dedupe(seq):
    seen = set()
    out = []
    for x in seq:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return tuple(out)


def _merge(a: SymHeap, b: SymHeap):
    """Merge two disjuncts differing only in ``L < 0`` versus ``L = 0``."""
    if a.exists != b.exists or a.spatial != b.spatial or len(a.pure) != len(b.pure):
        return None
    only_a = [p for p in a.pure if p not in b.pure]
    only_b = [p for p in b.pure if p not in a.pure]
    if len(only_a) != 1 or len(only_b) != 1:
        return None
    pa, pb = only_a[0], only_b[0]
    if not (isinstance(pa, ArithAtom) and isinstance(pb, ArithAtom)):
        return None
    ops = {pa.op, pb.op}
    if ops != {"<", "="}:
        return None
    lt = pa if pa.op == "<" else pb
    eq = pb if lt is pa else pa
    # equalities are sign-normalized, so L = 0 may be stored as -L = 0
    if eq.lin != lt.lin and eq.lin != -lt.lin:
        return None
    merged = ArithAtom(lt.lin, "<=")
    # the merged atom may already be a conjunct
    return SymHeap(a.exists, a.spatial, _dedupe(tuple(merged if p == pa else p for p in a.pure)))


def simplify(f: Formula) -> Formula:
    """Remove duplicate conjuncts and disjuncts, merge ``<``/``=`` siblings
    into ``<=``, and let a ``true`` disjunct absorb the rest."""
    if f.is_true:
        return Formula((SymHeap(),))
    ds = [SymHeap(h.exists, None if h.spatial is None else h.spatial, _dedupe(h.pure)) for h in f.disjuncts]
    ds = list(_dedupe(ds))
    changed = True
    while changed:
        changed = False
        for i in range(len(ds)):
            for j in range(i + 1, len(ds)):
                m = _merge(ds[i], ds[j])
                if m is not None:
                    ds[i] = m
                    del ds[j]
                    ds = list(_dedupe(ds))
                    changed = True
                    break
            if changed:
                break
    return Formula(tuple(ds))
