"""Finite-domain oracle: expression evaluation, exhaustive validity checking,
and a small-step program interpreter.

Integers range over a window [lo, hi]; arrays are total over that window
(one cell per index), so the oracle explores every assignment of cells.
Evaluation is over mathematical integers restricted to the window: expression
values may leave it, but variable enumeration and array indexing do not.
States where evaluation is undefined (index outside the window, div by zero,
MAX/MIN over an empty range) are skipped and the verdict flagged
domain-limited.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from calx.errors import (
    Abort,
    BudgetExceeded,
    EvaluationUndefined,
    FuelExhausted,
    SortError,
)
from calx.formula import (
    ArrayRead,
    ArraySort,
    ArrayWrite,
    BinOp,
    BOOL,
    BoolLit,
    Expr,
    free_vars,
    INT,
    IntLit,
    meta_vars,
    MetaVar,
    Quantified,
    Sort,
    UnaryOp,
    Var,
)
from calx.gcl import (
    ArrayTarget,
    Assignment,
    Composition,
    Construct,
    If,
    Skip,
    UnkProg,
    While,
)

Value = Union[int, bool, tuple]
State = dict[str, Value]


@dataclass(frozen=True)
class FiniteDomain:
    """Enumeration window; array cells span the same window unless capped."""

    lo: int = 0
    hi: int = 3
    max_states: int = 2_000_000
    array_cells: Optional[int] = None

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    @property
    def cells(self) -> int:
        return self.width if self.array_cells is None else min(self.width, self.array_cells)

    def ints(self) -> range:
        return range(self.lo, self.hi + 1)

    def values_of(self, sort: Sort) -> list:
        if sort == BOOL:
            return [False, True]
        if sort == INT:
            return list(self.ints())
        if isinstance(sort, ArraySort):
            cell = self.values_of(sort.elem)
            return [tuple(cs) for cs in itertools.product(cell, repeat=self.cells)]
        raise SortError(f"cannot enumerate sort {sort}")


@dataclass(frozen=True)
class Verdict:
    """Outcome of a discharge attempt.  ``kind`` is valid/invalid/unknown;
    invalid verdicts carry a falsifying state."""

    kind: str
    model: Optional[dict] = None
    reason: Optional[str] = None
    source: str = ""
    domain_limited: bool = False

    @property
    def is_valid(self) -> bool:
        return self.kind == "valid"

    @property
    def is_invalid(self) -> bool:
        return self.kind == "invalid"

    def __str__(self):
        bits = [self.kind]
        if self.reason:
            bits.append(f"({self.reason})")
        if self.model is not None:
            bits.append(f"model={format_model(self.model)}")
        if self.source:
            bits.append(f"[{self.source}]")
        return " ".join(bits)


def format_model(model: dict) -> str:
    def v(x):
        if isinstance(x, bool):
            return "true" if x else "false"
        if isinstance(x, tuple):
            return "[" + ",".join(v(c) for c in x) + "]"
        return str(x)

    return "{" + ", ".join(f"{k}={v(model[k])}" for k in sorted(model)) + "}"


# --- evaluation -----------------------------------------------------------------


def evaluate(e: Expr, state: State, dom: FiniteDomain) -> Value:
    """Evaluate a closed-over-`state` expression.  Metavariables must appear
    in the state like ordinary variables (the oracle treats them as rigid)."""
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, (Var, MetaVar)):
        try:
            return state[e.name]
        except KeyError:
            raise EvaluationUndefined(f"unassigned variable {e.name}") from None
    if isinstance(e, ArrayRead):
        arr = evaluate(e.array, state, dom)
        idx = evaluate(e.index, state, dom)
        off = idx - dom.lo
        if not 0 <= off < len(arr):
            raise EvaluationUndefined(f"index {idx} outside modeled window")
        return arr[off]
    if isinstance(e, ArrayWrite):
        arr = list(evaluate(e.array, state, dom))
        idx = evaluate(e.index, state, dom)
        val = evaluate(e.value, state, dom)
        off = idx - dom.lo
        if not 0 <= off < len(arr):
            raise EvaluationUndefined(f"index {idx} outside modeled window")
        arr[off] = val
        return tuple(arr)
    if isinstance(e, UnaryOp):
        v = evaluate(e.arg, state, dom)
        return (not v) if e.op == "¬" else -v
    if isinstance(e, BinOp):
        return _binop(e, state, dom)
    if isinstance(e, Quantified):
        return _quantified(e, state, dom)
    raise TypeError(type(e))


def _binop(e: BinOp, state: State, dom: FiniteDomain) -> Value:
    op = e.op
    # short-circuiting keeps guarded formulas total where possible
    if op == "∧":
        return bool(evaluate(e.lhs, state, dom)) and bool(evaluate(e.rhs, state, dom))
    if op == "∨":
        return bool(evaluate(e.lhs, state, dom)) or bool(evaluate(e.rhs, state, dom))
    if op == "⇒":
        return (not evaluate(e.lhs, state, dom)) or bool(evaluate(e.rhs, state, dom))
    a = evaluate(e.lhs, state, dom)
    b = evaluate(e.rhs, state, dom)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "div":
        if b == 0:
            raise EvaluationUndefined("division by zero")
        return a // b  # floored, as documented
    if op == "mod":
        if b == 0:
            raise EvaluationUndefined("division by zero")
        return a % b
    if op == "<":
        return a < b
    if op == "≤":
        return a <= b
    if op == ">":
        return a > b
    if op == "≥":
        return a >= b
    if op == "=":
        return a == b
    if op == "≠":
        return a != b
    if op == "≡":
        return bool(a) == bool(b)
    raise TypeError(op)


def _quantified(e: Quantified, state: State, dom: FiniteDomain) -> Value:
    names = [n for n, _ in e.bound]
    domains = [dom.values_of(s) for _, s in e.bound]
    terms = []
    inner = dict(state)
    for combo in itertools.product(*domains):
        for n, v in zip(names, combo):
            inner[n] = v
        if evaluate(e.range, inner, dom):
            terms.append(evaluate(e.term, inner, dom))
    op = e.op.name
    if op == "forall":
        return all(terms)
    if op == "exists":
        return any(terms)
    if op == "sum":
        return sum(terms)
    if op == "count":
        return sum(1 for t in terms if t)
    if not terms:
        raise EvaluationUndefined(f"{e.op.symbol} over an empty range")
    return max(terms) if op == "max" else min(terms)


def holds(hypotheses: list[Expr], goal: Expr, state: State, dom: FiniteDomain) -> bool:
    """(∧ hypotheses) ⇒ goal at one state."""
    for h in hypotheses:
        if not evaluate(h, state, dom):
            return True
    return bool(evaluate(goal, state, dom))


# --- compiled evaluation (one closure per formula, shared across states) -----------


def compile_expr(e: Expr, dom: FiniteDomain):
    """Compile to a closure state -> value.  Exhaustive checks evaluate the
    same formulas at thousands of states; compiling once removes the
    dispatch cost."""
    if isinstance(e, IntLit):
        v = e.value
        return lambda s: v
    if isinstance(e, BoolLit):
        b = e.value
        return lambda s: b
    if isinstance(e, (Var, MetaVar)):
        name = e.name

        def var_fn(s):
            try:
                return s[name]
            except KeyError:
                raise EvaluationUndefined(f"unassigned variable {name}") from None

        return var_fn
    if isinstance(e, ArrayRead):
        fa = compile_expr(e.array, dom)
        fi = compile_expr(e.index, dom)
        lo = dom.lo

        def read_fn(s):
            arr = fa(s)
            off = fi(s) - lo
            if 0 <= off < len(arr):
                return arr[off]
            raise EvaluationUndefined(f"index {off + lo} outside modeled window")

        return read_fn
    if isinstance(e, ArrayWrite):
        fa = compile_expr(e.array, dom)
        fi = compile_expr(e.index, dom)
        fv = compile_expr(e.value, dom)
        lo = dom.lo

        def write_fn(s):
            arr = list(fa(s))
            off = fi(s) - lo
            if not 0 <= off < len(arr):
                raise EvaluationUndefined(f"index {off + lo} outside modeled window")
            arr[off] = fv(s)
            return tuple(arr)

        return write_fn
    if isinstance(e, UnaryOp):
        fa = compile_expr(e.arg, dom)
        if e.op == "¬":
            return lambda s: not fa(s)
        return lambda s: -fa(s)
    if isinstance(e, BinOp):
        return _compile_binop(e, dom)
    if isinstance(e, Quantified):
        return _compile_quant(e, dom)
    raise TypeError(type(e))


def _compile_binop(e: BinOp, dom: FiniteDomain):
    la = compile_expr(e.lhs, dom)
    ra = compile_expr(e.rhs, dom)
    op = e.op
    if op == "∧":
        return lambda s: la(s) and ra(s)
    if op == "∨":
        return lambda s: la(s) or ra(s)
    if op == "⇒":
        return lambda s: (not la(s)) or ra(s)
    if op == "+":
        return lambda s: la(s) + ra(s)
    if op == "-":
        return lambda s: la(s) - ra(s)
    if op == "*":
        return lambda s: la(s) * ra(s)
    if op == "div":

        def div_fn(s):
            b = ra(s)
            if b == 0:
                raise EvaluationUndefined("division by zero")
            return la(s) // b

        return div_fn
    if op == "mod":

        def mod_fn(s):
            b = ra(s)
            if b == 0:
                raise EvaluationUndefined("division by zero")
            return la(s) % b

        return mod_fn
    if op == "<":
        return lambda s: la(s) < ra(s)
    if op == "≤":
        return lambda s: la(s) <= ra(s)
    if op == ">":
        return lambda s: la(s) > ra(s)
    if op == "≥":
        return lambda s: la(s) >= ra(s)
    if op == "=":
        return lambda s: la(s) == ra(s)
    if op == "≠":
        return lambda s: la(s) != ra(s)
    if op == "≡":
        return lambda s: bool(la(s)) == bool(ra(s))
    raise TypeError(op)


def _compile_quant(e: Quantified, dom: FiniteDomain):
    names = [n for n, _ in e.bound]
    domains = [dom.values_of(s) for _, s in e.bound]
    combos = list(itertools.product(*domains))
    fr = compile_expr(e.range, dom)
    ft = compile_expr(e.term, dom)
    op = e.op.name
    if op == "forall":

        def forall_fn(s):
            inner = dict(s)
            for combo in combos:
                for n, v in zip(names, combo):
                    inner[n] = v
                if fr(inner) and not ft(inner):
                    return False
            return True

        return forall_fn
    if op == "exists":

        def exists_fn(s):
            inner = dict(s)
            for combo in combos:
                for n, v in zip(names, combo):
                    inner[n] = v
                if fr(inner) and ft(inner):
                    return True
            return False

        return exists_fn

    def fold_fn(s):
        inner = dict(s)
        acc = []
        for combo in combos:
            for n, v in zip(names, combo):
                inner[n] = v
            if fr(inner):
                acc.append(ft(inner))
        if op == "sum":
            return sum(acc)
        if op == "count":
            return sum(1 for t in acc if t)
        if not acc:
            raise EvaluationUndefined(f"{e.op.symbol} over an empty range")
        return max(acc) if op == "max" else min(acc)

    return fold_fn


# --- state enumeration ------------------------------------------------------------


def obligation_vars(hypotheses: list[Expr], goal: Expr) -> list[tuple[str, Sort]]:
    """Free variables plus metavariables (rigid), sorted by name — the
    documented enumeration order."""
    seen: dict[str, Sort] = {}
    for e in list(hypotheses) + [goal]:
        for n, s in sorted(free_vars(e) | meta_vars(e)):
            if n in seen and seen[n] != s:
                raise SortError(f"{n} used at two sorts: {seen[n]} vs {s}")
            seen[n] = s
    return sorted(seen.items())


def count_states(variables: list[tuple[str, Sort]], dom: FiniteDomain) -> int:
    total = 1
    for _, s in variables:
        total *= len(dom.values_of(s))
    return total


def enumerate_states(
    variables: list[tuple[str, Sort]], dom: FiniteDomain
) -> Iterator[State]:
    """Lexicographic by variable name, then by value in canonical order."""
    names = [n for n, _ in variables]
    domains = [dom.values_of(s) for _, s in variables]
    for combo in itertools.product(*domains):
        yield dict(zip(names, combo))


def brute_force(
    hypotheses: list[Expr], goal: Expr, dom: FiniteDomain
) -> Verdict:
    """Exhaustive check of (∧ hypotheses) ⇒ goal over the finite domain.

    Returns the first falsifying state in enumeration order, or a
    domain-limited Valid.  Raises BudgetExceeded when the state space
    outgrows the configured budget.
    """
    variables = obligation_vars(hypotheses, goal)
    n = count_states(variables, dom)
    if n > dom.max_states:
        raise BudgetExceeded(f"{n} states exceed budget {dom.max_states}")
    compiled_hyps = [compile_expr(h, dom) for h in hypotheses]
    compiled_goal = compile_expr(goal, dom)
    skipped = 0
    for state in enumerate_states(variables, dom):
        try:
            if all(h(state) for h in compiled_hyps) and not compiled_goal(state):
                return Verdict("invalid", model=dict(state), source="oracle")
        except EvaluationUndefined:
            skipped += 1
    return Verdict(
        "valid",
        source="oracle",
        domain_limited=True,
        reason=f"within [{dom.lo},{dom.hi}]" + (f", {skipped} undefined states skipped" if skipped else ""),
    )


# --- program interpretation ----------------------------------------------------------


def _assign(construct: Assignment, state: State, dom: FiniteDomain) -> State:
    values = [evaluate(e, state, dom) for e in construct.exprs]
    out = dict(state)
    for t, v in zip(construct.targets, values):
        if isinstance(t, ArrayTarget):
            idx = evaluate(t.index, state, dom)
            arr = list(state[t.name])
            off = idx - dom.lo
            if not 0 <= off < len(arr):
                raise EvaluationUndefined(f"index {idx} outside modeled window")
            arr[off] = v
            out[t.name] = tuple(arr)
        else:
            out[t.name] = v
    return out


def interpret(
    c: Construct, state: State, fuel: int, dom: FiniteDomain
) -> State:
    """Run a metavariable-free construct; guarded if takes the first true
    guard (a deterministic refinement of the demonic semantics), no true
    guard aborts, loops step until the guard fails or fuel runs out."""
    if isinstance(c, Skip):
        return state
    if isinstance(c, UnkProg):
        raise Abort(f"cannot execute unknown fragment {c.tag}")
    if isinstance(c, Assignment):
        return _assign(c, state, dom)
    if isinstance(c, Composition):
        for comp in c.components:
            state = interpret(comp.body, state, fuel, dom)
        return state
    if isinstance(c, If):
        for g, sub in c.branches:
            if evaluate(g, state, dom):
                return interpret(sub.body, state, fuel, dom)
        raise Abort("no guard holds")
    if isinstance(c, While):
        steps = 0
        while evaluate(c.guard, state, dom):
            steps += 1
            if steps > fuel:
                raise FuelExhausted(f"loop still running after {fuel} iterations")
            state = interpret(c.body.body, state, fuel, dom)
        return state
    raise TypeError(type(c))


def interpret_all(
    c: Construct, state: State, dom: FiniteDomain
) -> list[Optional[State]]:
    """All demonic outcomes of a loop-free construct; None marks an aborted
    branch.  This is the wp testing oracle: wp(c, R) holds at a state iff
    every outcome is a final state satisfying R."""
    if isinstance(c, Skip):
        return [state]
    if isinstance(c, Assignment):
        return [_assign(c, state, dom)]
    if isinstance(c, Composition):
        outcomes: list[Optional[State]] = [state]
        for comp in c.components:
            nxt: list[Optional[State]] = []
            for s in outcomes:
                if s is None:
                    nxt.append(None)
                else:
                    nxt.extend(interpret_all(comp.body, s, dom))
            outcomes = nxt
        return outcomes
    if isinstance(c, If):
        out: list[Optional[State]] = []
        any_true = False
        for g, sub in c.branches:
            if evaluate(g, state, dom):
                any_true = True
                out.extend(interpret_all(sub.body, state, dom))
        if not any_true:
            return [None]
        return out
    raise TypeError(f"interpret_all is for loop-free programs, got {type(c).__name__}")
