"""Deterministic tree-walking interpreter with learning-point snapshots."""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from ..memgraph import MemoryGraph, Ref, Value, build_graph, graph_state, wrap_int
from .syntax import (
    BOOL,
    INT,
    Assert,
    Assign,
    Assume,
    Binary,
    BoolLit,
    Call,
    FieldRead,
    FieldWrite,
    FunctionDef,
    If,
    IntLit,
    Loc,
    New,
    NullLit,
    Program,
    Return,
    Stmt,
    Unary,
    Var,
    VarDecl,
    While,
)

NORMAL = "Normal"
MEMORY_ERROR = "MemoryError"
POST_VIOLATION = "PostViolation"
BUDGET = "StepBudgetExceeded"

DEFAULT_STEP_BUDGET = 100_000
MAX_DEPTH = 1_000

PointKey = tuple[int, str]  # (call statement sid, "before" | "after")


@dataclass(frozen=True)
class Construct:
    """Test input built by calling a constructor function of the program."""

    func: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.func}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class ExecutionOutcome:
    tag: str
    final: Optional[MemoryGraph] = None
    location: Optional[str] = None
    detail: str = ""
    trace: tuple[tuple[str, MemoryGraph], ...] = ()
    steps: int = 0
    result: Value = None

    @property
    def positive(self) -> bool:
        return self.tag == NORMAL

    def key(self) -> tuple:
        """Comparable summary used for differential testing."""
        return (self.tag, self.final.canonical() if self.final is not None else None, self.location)


class _MemoryError(Exception):
    def __init__(self, where: str, detail: str):
        self.where = where
        self.detail = detail


class _Budget(Exception):
    pass


class _Return(Exception):
    def __init__(self, value: Value):
        self.value = value


class _TailCall(Exception):
    def __init__(self, args: list):
        self.args_ = args


class InterpreterError(Exception):
    """Misuse of the interpreter (bad inputs, non-executable statements)."""


def _default(t: str) -> Value:
    if t == INT:
        return 0
    if t == BOOL:
        return False
    return None


def _show(e) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, FieldRead):
        return f"{_show(e.obj)}.{e.name}"
    return "<expr>"


class Interpreter:
    """Runs one program.  An instance is single-threaded but cheap to create."""

    def __init__(
        self,
        program: Program,
        step_budget: int = DEFAULT_STEP_BUDGET,
        max_depth: int = MAX_DEPTH,
        points: Optional[Mapping[PointKey, str]] = None,
        check_post: bool = True,
    ):
        if step_budget <= 0:
            raise ValueError("step budget must be positive")
        self.program = program
        self.budget = step_budget
        self.max_depth = max_depth
        self.points = dict(points or {})
        self.check_post = check_post
        self.funcs = {f.name: f for f in program.functions}
        self.schema = program.schema
        self._post_cache: dict[str, object] = {}
        self._reset()

    def _reset(self) -> None:
        self.heap: dict[int, list] = {}
        self.next_id = 2
        self.steps = 0
        self.depth = 0
        self.trace: list[tuple[str, MemoryGraph]] = []
        self.fn_stack: list[str] = []

    # -- public entry points --
    def run(self, inputs: Sequence) -> ExecutionOutcome:
        """Run the entry function on concrete inputs (constructor recipes allowed)."""
        self._reset()
        entry = self.funcs[self.program.entry]
        if len(inputs) != len(entry.params):
            raise InterpreterError(f"{entry.name} expects {len(entry.params)} inputs, got {len(inputs)}")
        return self._guard(lambda: self._run_entry(entry, inputs))

    def run_from_graph(self, graph: MemoryGraph, resume: Optional[PointKey] = None) -> ExecutionOutcome:
        """Run from the state in ``graph``.

        Without ``resume`` the graph's variables are the entry parameters.
        With ``resume = (sid, side)`` execution re-enters the entry function
        body just before or after the call statement ``sid``.
        """
        self._reset()
        env, heap = graph_state(graph)
        for hid, (rtype, fields) in heap.items():
            self.heap[hid] = [rtype, dict(fields)]
        self.next_id = max(graph.types) + 1
        entry = self.funcs[self.program.entry]
        if resume is None:
            missing = [p.name for p in entry.params if p.name not in env]
            if missing:
                raise InterpreterError(f"graph lacks entry parameters {missing}")
            args = [env[p.name] for p in entry.params]
            return self._guard(lambda: self._finish(entry, *self._invoke_top(entry, args)))
        path = find_stmt_path(entry.body, resume[0])
        if path is None:
            raise InterpreterError(f"no statement {resume[0]} in {entry.name}")
        return self._guard(lambda: self._resume(entry, dict(env), path, resume[1]))

    def call_function(self, graph: MemoryGraph, call: Call) -> tuple[ExecutionOutcome, dict[str, Value]]:
        """Execute one call statement in the environment held by ``graph``.

        Returns the outcome (``final`` is the post-state with the result bound
        to ``res``) and the resulting environment.
        """
        self._reset()
        env, heap = graph_state(graph)
        for hid, (rtype, fields) in heap.items():
            self.heap[hid] = [rtype, dict(fields)]
        self.next_id = max(graph.types) + 1
        env = dict(env)
        box: dict[str, Value] = {}

        def body():
            self.fn_stack.append("<obligation>")
            try:
                result = self._call(call, env)
            finally:
                self.fn_stack.pop()
            bindings = dict(env)
            if call.target is not None:
                bindings.pop(call.target, None)
                bindings["res"] = result
            box.update(bindings)
            return ExecutionOutcome(NORMAL, self._graph(bindings), steps=self.steps, result=result)

        out = self._guard(body)
        return out, box

    def run_block(self, graph: MemoryGraph, stmts: Sequence[Stmt]) -> tuple[ExecutionOutcome, bool]:
        """Execute straight-line entry code from ``graph``.

        Returns (outcome, returned) where ``returned`` tells whether a return
        statement ended the function (``res`` is then bound).
        """
        self._reset()
        env, heap = graph_state(graph)
        for hid, (rtype, fields) in heap.items():
            self.heap[hid] = [rtype, dict(fields)]
        self.next_id = max(graph.types) + 1
        env = dict(env)
        flag = [False]

        def body():
            self.fn_stack.append(self.program.entry)
            try:
                self._block(stmts, env)
            except _Return as r:
                flag[0] = True
                bindings = dict(env)
                bindings["res"] = r.value
                return ExecutionOutcome(NORMAL, self._graph(bindings), steps=self.steps, result=r.value)
            finally:
                self.fn_stack.pop()
            return ExecutionOutcome(NORMAL, self._graph(env), steps=self.steps)

        out = self._guard(body)
        return out, flag[0]

    # -- driver --
    def _guard(self, thunk) -> ExecutionOutcome:
        limit = sys.getrecursionlimit()
        if limit < 20 * self.max_depth + 1000:
            sys.setrecursionlimit(20 * self.max_depth + 1000)
        try:
            out = thunk()
        except _MemoryError as e:
            out = ExecutionOutcome(MEMORY_ERROR, None, e.where, e.detail, steps=self.steps)
        except _Budget:
            out = ExecutionOutcome(BUDGET, None, None, "step budget or recursion depth exceeded", steps=self.steps)
        except RecursionError:
            out = ExecutionOutcome(BUDGET, None, None, "host recursion limit", steps=self.steps)
        finally:
            sys.setrecursionlimit(limit)
        if self.trace:
            from dataclasses import replace

            out = replace(out, trace=tuple(self.trace))
        return out

    def _run_entry(self, entry: FunctionDef, inputs: Sequence) -> ExecutionOutcome:
        args = []
        for prm, v in zip(entry.params, inputs):
            if isinstance(v, Construct):
                v = self._construct(v)
            self._check_input(prm.type, v, prm.name)
            args.append(v)
        return self._finish(entry, *self._invoke_top(entry, args))

    def _construct(self, c: Construct) -> Value:
        fn = self.funcs.get(c.func)
        if fn is None:
            raise InterpreterError(f"unknown constructor {c.func}")
        args = [self._construct(a) if isinstance(a, Construct) else a for a in c.args]
        self.fn_stack.append("<input>")
        try:
            return self._invoke(fn, args, [None] * len(args))
        finally:
            self.fn_stack.pop()

    def _check_input(self, t: str, v: Value, name: str) -> None:
        ok = (
            (t == INT and isinstance(v, int) and not isinstance(v, bool))
            or (t == BOOL and isinstance(v, bool))
            or (t not in (INT, BOOL) and (v is None or (isinstance(v, Ref) and self.heap[v.id][0] == t)))
        )
        if not ok:
            raise InterpreterError(f"input {name} does not have type {t}")

    def _invoke_top(self, entry: FunctionDef, args: list) -> tuple[dict, Value]:
        env = {p.name: a for p, a in zip(entry.params, args)}
        self.depth = 1
        self.fn_stack.append(entry.name)
        try:
            self._block(entry.body, env, top=True)
            result = None
        except _Return as r:
            result = r.value
        self.fn_stack.pop()
        return env, result

    def _resume(self, entry: FunctionDef, env: dict, path: list[int], side: str) -> ExecutionOutcome:
        self.depth = 1
        self.fn_stack.append(entry.name)
        result = None
        try:
            self._resume_block(entry.body, env, path, side)
        except _Return as r:
            result = r.value
        self.fn_stack.pop()
        return self._finish(entry, env, result)

    def _resume_block(self, stmts, env, path, side) -> None:
        i = path[0]
        if len(path) == 1:
            start = i + 1 if side == "after" else i
            for s in stmts[start:]:
                self._stmt(s, env, True)
            return
        s = stmts[i]
        branch = s.then if path[1] == 0 else s.orelse
        self._resume_block(branch, env, path[2:], side)
        for s2 in stmts[i + 1:]:
            self._stmt(s2, env, True)

    def _finish(self, entry: FunctionDef, env: dict, result: Value) -> ExecutionOutcome:
        bindings = dict(env)
        if result is not None or entry.ret != "void":
            bindings["res"] = result
        final = self._graph(bindings)
        if self.check_post and entry.ensures is not None:
            if not self._holds(entry.ensures, final):
                return ExecutionOutcome(POST_VIOLATION, None, None, f"ensures of {entry.name} violated",
                                        steps=self.steps, result=result)
        return ExecutionOutcome(NORMAL, final, None, "", steps=self.steps, result=result)

    def _holds(self, text: str, graph: MemoryGraph) -> bool:
        from ..speclang.parser import parse_formula
        from ..speclang.semantics import models

        f = self._post_cache.get(text)
        if f is None:
            f = self._post_cache[text] = parse_formula(text)
        return models(graph, f)

    def _graph(self, bindings: Mapping[str, Value]) -> MemoryGraph:
        heap = {hid: (obj[0], obj[1]) for hid, obj in self.heap.items()}
        return build_graph(bindings.items(), heap, self.schema)

    def snapshot(self, env: Mapping[str, Value]) -> MemoryGraph:
        return self._graph(env)

    # -- statements --
    def _tick(self) -> None:
        self.steps += 1
        if self.steps > self.budget:
            raise _Budget()

    def _block(self, stmts, env, top: bool = False) -> None:
        for s in stmts:
            self._stmt(s, env, top)

    def _stmt(self, s: Stmt, env: dict, top: bool) -> None:
        self._tick()
        t = type(s)
        if t is Assign:
            env[s.name] = self._eval(s.value, env)
        elif t is VarDecl:
            env[s.name] = _default(s.type) if s.init is None else self._eval(s.init, env)
        elif t is FieldWrite:
            obj = self._eval(s.obj, env)
            if obj is None:
                self._null_deref(s.obj, s.name, s.loc)
            v = self._eval(s.value, env)
            self.heap[obj.id][1][s.name] = v
        elif t is If:
            c = self._eval(s.cond, env)
            self._block(s.then if c else s.orelse, env, top)
        elif t is While:
            while self._eval(s.cond, env):
                self._tick()
                self._block(s.body, env, top)
        elif t is Call:
            if top and self.points:
                key = self.points.get((s.sid, "before"))
                if key is not None:
                    self.trace.append((key, self._graph(env)))
                result = self._call(s, env)
                if s.target is not None:
                    env[s.target] = result
                key = self.points.get((s.sid, "after"))
                if key is not None:
                    self.trace.append((key, self._graph(env)))
            else:
                result = self._call(s, env)
                if s.target is not None:
                    env[s.target] = result
        elif t is Return:
            raise _Return(None if s.value is None else self._eval(s.value, env))
        elif t is Assert:
            if not self._holds(s.formula, self._graph(env)):
                raise _MemoryError(self._where(s.loc), f"assertion {s.formula} failed")
        elif t is Assume:
            raise InterpreterError("assume statements are not executable; check obligations instead")
        else:
            raise InterpreterError(f"unknown statement {s!r}")

    def _call(self, s: Call, env: dict) -> Value:
        fn = self.funcs[s.func]
        args = [self._eval(a, env) for a in s.args]
        if s.tail and self.fn_stack and self.fn_stack[-1] == s.func:
            raise _TailCall(args)
        ref_names = [a.name if p.by_ref else None for a, p in zip(s.args, fn.params)]
        result, outs = self._invoke_with_outs(fn, args)
        for name, p in zip(ref_names, fn.params):
            if name is not None:
                env[name] = outs[p.name]
        return result

    def _invoke(self, fn: FunctionDef, args: list, _names) -> Value:
        return self._invoke_with_outs(fn, args)[0]

    def _invoke_with_outs(self, fn: FunctionDef, args: list) -> tuple[Value, dict]:
        self.depth += 1
        if self.depth > self.max_depth:
            raise _Budget()
        self.fn_stack.append(fn.name)
        try:
            while True:
                env = {p.name: a for p, a in zip(fn.params, args)}
                try:
                    self._block(fn.body, env)
                    result = None
                except _Return as r:
                    result = r.value
                except _TailCall as tc:
                    self._tick()
                    args = tc.args_
                    continue
                return result, env
        finally:
            self.fn_stack.pop()
            self.depth -= 1

    # -- expressions --
    def _where(self, loc: Loc) -> str:
        fn = self.fn_stack[-1] if self.fn_stack else "?"
        return f"{fn}@{loc}"

    def _null_deref(self, obj_expr, fname: str, loc: Loc):
        raise _MemoryError(self._where(loc), f"null dereference of {_show(obj_expr)}.{fname}")

    def _eval(self, e, env) -> Value:
        t = type(e)
        if t is Var:
            try:
                return env[e.name]
            except KeyError:
                raise InterpreterError(f"variable {e.name} is not defined in this state") from None
        if t is IntLit:
            return wrap_int(e.value)
        if t is FieldRead:
            obj = self._eval(e.obj, env)
            if obj is None:
                self._null_deref(e.obj, e.name, e.loc)
            return self.heap[obj.id][1][e.name]
        if t is Binary:
            op = e.op
            if op == "&&":
                return bool(self._eval(e.left, env)) and bool(self._eval(e.right, env))
            if op == "||":
                return bool(self._eval(e.left, env)) or bool(self._eval(e.right, env))
            a = self._eval(e.left, env)
            b = self._eval(e.right, env)
            if op == "+":
                return wrap_int(a + b)
            if op == "-":
                return wrap_int(a - b)
            if op == "*":
                return wrap_int(a * b)
            if op == "==":
                return a == b
            if op == "!=":
                return a != b
            if op == "<":
                return a < b
            if op == "<=":
                return a <= b
            if op == ">":
                return a > b
            if op == ">=":
                return a >= b
            raise InterpreterError(f"unknown operator {op}")
        if t is NullLit:
            return None
        if t is BoolLit:
            return e.value
        if t is Unary:
            v = self._eval(e.operand, env)
            return wrap_int(-v) if e.op == "-" else (not v)
        if t is New:
            vals = [self._eval(a, env) for a in e.args]
            rec = self.program.record(e.record)
            hid = self.next_id
            self.next_id += 1
            self.heap[hid] = [e.record, {f: v for (f, _), v in zip(rec.fields, vals)}]
            return Ref(hid)
        raise InterpreterError(f"unknown expression {e!r}")


def find_stmt_path(stmts, sid: int) -> Optional[list[int]]:
    """Index path to statement ``sid``: [i] or [i, branch, j, ...] through ifs."""
    for i, s in enumerate(stmts):
        if s.sid == sid:
            return [i]
        if isinstance(s, If):
            for b, body in enumerate((s.then, s.orelse)):
                sub = find_stmt_path(body, sid)
                if sub is not None:
                    return [i, b] + sub
    return None


def run(
    program: Program,
    inputs: Sequence,
    step_budget: int = DEFAULT_STEP_BUDGET,
    points: Optional[Mapping[PointKey, str]] = None,
) -> ExecutionOutcome:
    """Execute the entry function; see Interpreter.run."""
    return Interpreter(program, step_budget, points=points).run(inputs)
