"""The SimplifyAuto rewrite system.

Fixed catalog, applied bottom-up to a fixpoint:

* one-point rule          (OP v: v = E: T)            →  T[v:=E]
* upper range split       (OP vs: R ∧ v < E+1: T),    also  v ≤ E
* empty range             (OP v: false: T)            →  identity element
* ∧/∨ unit, zero and idempotence laws
* double negation and ¬ on literals

Each split that discharges a residual range (turning ``R[E] ⇒ T[E]`` into
``T[E]``) records the side condition together with the checker's verdict;
rewrites whose side condition does not discharge fall back to the
unconditional form.  Descending into a term releases facts the position
guarantees (quantifier ranges, antecedents, earlier conjuncts), which is what
lets the ``i < n+1`` split land in the shape the derivations need.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from calx.formula import (
    BinOp,
    BoolLit,
    conj,
    conjuncts,
    Expr,
    FALSE,
    free_names,
    IntLit,
    negate,
    Quantified,
    Substitution,
    substitute,
    TRUE,
    UnaryOp,
)
from calx.oracle import Verdict


@dataclass(frozen=True)
class RewriteRecord:
    rule: str
    before: Expr
    after: Expr
    condition: Optional[Expr] = None
    verdict: Optional[str] = None


class Simplifier:
    """One simplification run; collects the applied rules and their side
    conditions for the proof-information display."""

    def __init__(self, checker, assumptions: tuple[Expr, ...], max_passes: int = 25):
        self.checker = checker
        self.assumptions = assumptions
        self.max_passes = max_passes
        self.records: list[RewriteRecord] = []

    def simplify(self, e: Expr) -> Expr:
        return self._fix(e, self.assumptions)

    # --- engine -----------------------------------------------------------------

    def _fix(self, e: Expr, assumptions: tuple[Expr, ...]) -> Expr:
        for _ in range(self.max_passes):
            nxt = self._pass(e, assumptions)
            if nxt == e:
                return nxt
            e = nxt
        return e

    def _pass(self, e: Expr, assumptions: tuple[Expr, ...]) -> Expr:
        e = self._descend(e, assumptions)
        while True:
            nxt = self._root(e, assumptions)
            if nxt is None:
                return e
            e = nxt

    def _descend(self, e: Expr, assumptions: tuple[Expr, ...]) -> Expr:
        if isinstance(e, BinOp) and e.op == "∧":
            lhs = self._pass(e.lhs, assumptions + (e.rhs,))
            rhs = self._pass(e.rhs, assumptions + (lhs,))
            return BinOp("∧", lhs, rhs)
        if isinstance(e, BinOp) and e.op == "∨":
            lhs = self._pass(e.lhs, assumptions + (negate(e.rhs),))
            rhs = self._pass(e.rhs, assumptions + (negate(lhs),))
            return BinOp("∨", lhs, rhs)
        if isinstance(e, BinOp) and e.op == "⇒":
            lhs = self._pass(e.lhs, assumptions)
            rhs = self._pass(e.rhs, assumptions + (lhs,))
            return BinOp("⇒", lhs, rhs)
        if isinstance(e, Quantified):
            rng = self._pass(e.range, assumptions)
            term = self._pass(e.term, assumptions + (rng,))
            return Quantified(e.op, e.bound, rng, term)
        kids = e.children()
        if not kids:
            return e
        return e.replace_children(tuple(self._pass(c, assumptions) for c in kids))

    # --- root rules ----------------------------------------------------------------

    def _root(self, e: Expr, assumptions: tuple[Expr, ...]) -> Optional[Expr]:
        for rule in (self._prop_laws, self._empty_range, self._one_point, self._range_split):
            out = rule(e, assumptions)
            if out is not None and out != e:
                return out
        return None

    def _record(self, rule, before, after, condition=None, verdict=None):
        self.records.append(RewriteRecord(rule, before, after, condition, verdict))

    def _prop_laws(self, e: Expr, assumptions) -> Optional[Expr]:
        if isinstance(e, UnaryOp) and e.op == "¬":
            if isinstance(e.arg, BoolLit):
                out = BoolLit(not e.arg.value)
                self._record("neg-literal", e, out)
                return out
            if isinstance(e.arg, UnaryOp) and e.arg.op == "¬":
                self._record("double-negation", e, e.arg.arg)
                return e.arg.arg
        if isinstance(e, BinOp) and e.op in ("∧", "∨"):
            a, b = e.lhs, e.rhs
            unit = TRUE if e.op == "∧" else FALSE
            zero = FALSE if e.op == "∧" else TRUE
            if a == unit:
                self._record(f"{e.op}-unit", e, b)
                return b
            if b == unit:
                self._record(f"{e.op}-unit", e, a)
                return a
            if a == zero or b == zero:
                self._record(f"{e.op}-zero", e, zero)
                return zero
            if a == b:
                self._record(f"{e.op}-idempotent", e, a)
                return a
        return None

    def _empty_range(self, e: Expr, assumptions) -> Optional[Expr]:
        if isinstance(e, Quantified) and e.range == FALSE:
            ident = e.op.identity
            if ident is None:
                return None  # MAX/MIN have no identity element
            out = BoolLit(ident) if isinstance(ident, bool) else IntLit(ident)
            self._record("empty-range", e, out)
            return out
        return None

    def _one_point(self, e: Expr, assumptions) -> Optional[Expr]:
        if not isinstance(e, Quantified):
            return None
        bound_names = {n for n, _ in e.bound}
        parts = conjuncts(e.range)
        for k, c in enumerate(parts):
            pin = self._pin(c, bound_names)
            if pin is None:
                continue
            name, value = pin
            rest = parts[:k] + parts[k + 1 :]
            others = tuple(b for b in e.bound if b[0] != name)
            sub = Substitution.of((name, value))
            if e.op.name in ("forall", "exists"):
                rng = substitute(conj(rest), sub) if rest else TRUE
                term = substitute(e.term, sub)
                if others:
                    out: Expr = Quantified(e.op, others, rng, term)
                elif e.op.name == "forall":
                    out = term if rng == TRUE else BinOp("⇒", rng, term)
                else:
                    out = term if rng == TRUE else BinOp("∧", rng, term)
                self._record("one-point", e, out)
                return out
            if not rest and not others:
                out = substitute(e.term, sub)
                self._record("one-point", e, out)
                return out
        return None

    def _pin(self, c: Expr, bound_names: set[str]) -> Optional[tuple[str, Expr]]:
        """v = E (or E = v) with E independent of every bound variable."""
        from calx.formula import Var

        if not (isinstance(c, BinOp) and c.op == "="):
            return None
        for v, other in ((c.lhs, c.rhs), (c.rhs, c.lhs)):
            if (
                isinstance(v, Var)
                and v.name in bound_names
                and not (free_names(other) & bound_names)
            ):
                return (v.name, other)
        return None

    def _range_split(self, e: Expr, assumptions) -> Optional[Expr]:
        """Split off the top index: R ∧ v < E+1 (or v ≤ E) becomes the
        quantification over v < E joined with the v := E instance."""
        if not isinstance(e, Quantified) or e.op.name not in ("forall", "exists", "sum"):
            return None
        bound_names = {n for n, _ in e.bound}
        parts = conjuncts(e.range)
        for k, c in enumerate(parts):
            top = self._split_point(c, bound_names)
            if top is None:
                continue
            name, edge = top
            from calx.formula import Var

            var = Var(name, next(s for n, s in e.bound if n == name))
            rest = parts[:k] + parts[k + 1 :]
            others = tuple(b for b in e.bound if b[0] != name)
            shrunk = conj(rest + [BinOp("<", var, edge)])
            sub = Substitution.of((name, edge))
            residual = substitute(conj(rest), sub) if rest else TRUE
            inst = substitute(e.term, sub)
            if e.op.name in ("forall", "exists"):
                join = "∧" if e.op.name == "forall" else "∨"
                glue = "⇒" if e.op.name == "forall" else "∧"
                first = Quantified(e.op, e.bound, shrunk, e.term)
                if others:
                    second: Expr = Quantified(e.op, others, residual, inst)
                    self._record("range-split", e, first)
                    return BinOp(join, first, second)
                if residual == TRUE:
                    self._record("range-split", e, first)
                    return BinOp(join, first, inst)
                verdict = self.checker.check(assumptions, residual)
                if verdict.is_valid:
                    out = BinOp(join, first, inst)
                    self._record("range-split", e, out, condition=residual, verdict="valid")
                    return out
                out = BinOp(join, first, BinOp(glue, residual, inst))
                self._record(
                    "range-split", e, out, condition=residual, verdict=verdict.kind
                )
                return out
            # sum: only split when the residual discharges or other vars remain
            first = Quantified(e.op, e.bound, shrunk, e.term)
            if others:
                self._record("range-split", e, first)
                return BinOp("+", first, Quantified(e.op, others, residual, inst))
            if residual == TRUE:
                self._record("range-split", e, first)
                return BinOp("+", first, inst)
            verdict = self.checker.check(assumptions, residual)
            if verdict.is_valid:
                out = BinOp("+", first, inst)
                self._record("range-split", e, out, condition=residual, verdict="valid")
                return out
        return None

    def _split_point(self, c: Expr, bound_names: set[str]) -> Optional[tuple[str, Expr]]:
        """v < E+1 or v ≤ E with E independent of the bound variables;
        returns (v, E)."""
        from calx.formula import Var

        if not isinstance(c, BinOp):
            return None
        if (
            c.op == "<"
            and isinstance(c.lhs, Var)
            and c.lhs.name in bound_names
            and isinstance(c.rhs, BinOp)
            and c.rhs.op == "+"
            and isinstance(c.rhs.rhs, IntLit)
            and c.rhs.rhs.value == 1
            and not (free_names(c.rhs.lhs) & bound_names)
        ):
            return (c.lhs.name, c.rhs.lhs)
        if (
            c.op == "≤"
            and isinstance(c.lhs, Var)
            and c.lhs.name in bound_names
            and not (free_names(c.rhs) & bound_names)
        ):
            return (c.lhs.name, c.rhs)
        return None


def simplify_auto(e: Expr, assumptions: tuple[Expr, ...], checker) -> tuple[Expr, list[RewriteRecord]]:
    s = Simplifier(checker, assumptions)
    out = s.simplify(e)
    return out, s.records
