"""SMT-LIB v2 emission and the external solver subprocess driver.

Scripts are fed to solvers over stdin; ``unsat`` on the negated goal means the
obligation is valid.  Arrays use the standard theory with an Int index sort.
Eindhoven Σ and # quantifiers are expanded only when their ranges pin the
bound variable between integer literals; anything else routes the obligation
to the finite-domain oracle instead.

``div``/``mod`` evaluate floored in the oracle, which matches SMT-LIB Ints
for positive divisors (the only kind the bundled derivations use); negative
divisors would diverge and are documented as out of contract.
"""

from __future__ import annotations

import re
import subprocess
from dataclasses import dataclass
from typing import Optional

from calx.errors import CalxError
from calx.formula import (
    ArrayRead,
    ArraySort,
    ArrayWrite,
    BinOp,
    BOOL,
    BoolLit,
    Expr,
    free_vars,
    has_metavars,
    INT,
    IntLit,
    MetaVar,
    Quantified,
    Sort,
    UnaryOp,
    Var,
)
from calx.oracle import FiniteDomain, Verdict


class UnsupportedQuantifier(CalxError):
    """Raised when an obligation cannot be finitely expanded for SMT; the
    caller falls back to the brute-force oracle."""


@dataclass(frozen=True)
class SolverConfig:
    name: str
    path: str
    args: tuple[str, ...] = ()
    timeout: float = 5.0
    enabled: bool = True

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("solver timeout must be positive")


def smt_sort(s: Sort) -> str:
    if s == INT:
        return "Int"
    if s == BOOL:
        return "Bool"
    if isinstance(s, ArraySort):
        return f"(Array Int {smt_sort(s.elem)})"
    raise CalxError(f"no SMT sort for {s}")


_BIN_SMT = {
    "+": "+", "-": "-", "*": "*", "div": "div", "mod": "mod",
    "<": "<", "≤": "<=", ">": ">", "≥": ">=",
    "∧": "and", "∨": "or", "⇒": "=>",
}


def smt_expr(e: Expr) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, MetaVar):
        raise CalxError("obligations with metavariables are never sent to a solver")
    if isinstance(e, ArrayRead):
        return f"(select {smt_expr(e.array)} {smt_expr(e.index)})"
    if isinstance(e, ArrayWrite):
        return f"(store {smt_expr(e.array)} {smt_expr(e.index)} {smt_expr(e.value)})"
    if isinstance(e, UnaryOp):
        return f"(not {smt_expr(e.arg)})" if e.op == "¬" else f"(- {smt_expr(e.arg)})"
    if isinstance(e, BinOp):
        if e.op in ("=", "≡"):
            return f"(= {smt_expr(e.lhs)} {smt_expr(e.rhs)})"
        if e.op == "≠":
            return f"(distinct {smt_expr(e.lhs)} {smt_expr(e.rhs)})"
        return f"({_BIN_SMT[e.op]} {smt_expr(e.lhs)} {smt_expr(e.rhs)})"
    if isinstance(e, Quantified):
        return _smt_quant(e)
    raise CalxError(f"cannot translate {type(e).__name__}")


def _smt_quant(e: Quantified) -> str:
    binders = " ".join(f"({n} {smt_sort(s)})" for n, s in e.bound)
    if e.op.name == "forall":
        return f"(forall ({binders}) (=> {smt_expr(e.range)} {smt_expr(e.term)}))"
    if e.op.name == "exists":
        return f"(exists ({binders}) (and {smt_expr(e.range)} {smt_expr(e.term)}))"
    if e.op.name in ("sum", "count"):
        return _expand_fold(e)
    raise UnsupportedQuantifier(f"({e.op.symbol} …) has no SMT encoding")


def _literal_bounds(e: Quantified, name: str) -> tuple[int, int]:
    """[lo, hi] window for a bound variable pinned between integer literals."""
    from calx.formula import conjuncts

    lo: Optional[int] = None
    hi: Optional[int] = None
    for c in conjuncts(e.range):
        if isinstance(c, BinOp) and isinstance(c.lhs, IntLit) and isinstance(c.rhs, Var) and c.rhs.name == name:
            if c.op == "≤":
                lo = c.lhs.value
            elif c.op == "<":
                lo = c.lhs.value + 1
        if isinstance(c, BinOp) and isinstance(c.rhs, IntLit) and isinstance(c.lhs, Var) and c.lhs.name == name:
            if c.op == "≤":
                hi = c.rhs.value
            elif c.op == "<":
                hi = c.rhs.value - 1
    if lo is None or hi is None:
        raise UnsupportedQuantifier(
            f"range does not pin '{name}' between integer literals"
        )
    return lo, hi


def _expand_fold(e: Quantified) -> str:
    from calx.formula import Substitution, substitute

    windows = [(n, s, _literal_bounds(e, n)) for n, s in e.bound]
    terms: list[str] = []
    combos = [[]]
    for n, s, (lo, hi) in windows:
        if s != INT:
            raise UnsupportedQuantifier("only Int bound variables expand")
        combos = [c + [(n, v)] for c in combos for v in range(lo, hi + 1)]
    for combo in combos:
        sub = Substitution(tuple((n, IntLit(v)) for n, v in combo))
        rng = smt_expr(substitute(e.range, sub))
        if e.op.name == "sum":
            term = smt_expr(substitute(e.term, sub))
            terms.append(f"(ite {rng} {term} 0)")
        else:
            term = smt_expr(substitute(e.term, sub))
            terms.append(f"(ite (and {rng} {term}) 1 0)")
    if not terms:
        return "0"
    if len(terms) == 1:
        return terms[0]
    return "(+ " + " ".join(terms) + ")"


def to_smtlib(hypotheses: list[Expr], goal: Expr, comment: str = "") -> str:
    """Script asserting the hypotheses and the negated goal; unsat ⇒ valid."""
    if any(has_metavars(h) for h in hypotheses) or has_metavars(goal):
        raise CalxError("obligations with metavariables are never sent to a solver")
    decls: dict[str, Sort] = {}
    for e in list(hypotheses) + [goal]:
        for n, s in sorted(free_vars(e)):
            decls[n] = s
    lines = []
    if comment:
        lines.append(f"; {comment}")
    lines.append("(set-logic ALL)")
    for n in sorted(decls):
        lines.append(f"(declare-const {n} {smt_sort(decls[n])})")
    for h in hypotheses:
        lines.append(f"(assert {smt_expr(h)})")
    lines.append(f"(assert (not {smt_expr(goal)}))")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# --- subprocess driver -------------------------------------------------------------


def run_solver(cfg: SolverConfig, script: str) -> Verdict:
    """One solver, one script.  unsat → valid; sat → invalid with the parsed
    model (best effort); everything else → unknown."""
    try:
        proc = subprocess.run(
            [cfg.path, *cfg.args],
            input=script,
            capture_output=True,
            text=True,
            timeout=cfg.timeout,
        )
    except subprocess.TimeoutExpired:
        return Verdict("unknown", reason="timeout", source=cfg.name)
    except OSError as exc:
        return Verdict("unknown", reason=f"solver-error: {exc}", source=cfg.name)
    out = proc.stdout.strip()
    first = out.split(None, 1)[0] if out else ""
    if first == "unsat":
        return Verdict("valid", source=cfg.name)
    if first == "sat":
        model = parse_model(out)
        return Verdict("invalid", model=model, source=cfg.name)
    if first == "unknown":
        return Verdict("unknown", reason="incomplete", source=cfg.name)
    return Verdict(
        "unknown",
        reason=f"solver-error: {out[:200] or proc.stderr[:200]}",
        source=cfg.name,
    )


# --- model extraction ----------------------------------------------------------------


def _sexprs(text: str) -> list:
    """Tolerant s-expression reader for solver model output."""
    toks = re.findall(r"\(|\)|[^\s()]+", text)
    def read(i):
        items = []
        while i < len(toks):
            t = toks[i]
            if t == "(":
                sub, i = read(i + 1)
                items.append(sub)
            elif t == ")":
                return items, i + 1
            else:
                items.append(t)
                i += 1
        return items, i
    out, _ = read(0)
    return out

def _model_value(sexpr):
    if sexpr == "true":
        return True
    if sexpr == "false":
        return False
    if isinstance(sexpr, str):
        try:
            return int(sexpr)
        except ValueError:
            return None
    if isinstance(sexpr, list):
        if len(sexpr) == 2 and sexpr[0] == "-":
            inner = _model_value(sexpr[1])
            return -inner if isinstance(inner, int) else None
        # ((as const (Array ...)) v) — constant array
        if (
            len(sexpr) == 2
            and isinstance(sexpr[0], list)
            and sexpr[0][:2] == ["as", "const"]
        ):
            return ("const-array", _model_value(sexpr[1]))
        if sexpr and sexpr[0] == "store" and len(sexpr) == 4:
            base = _model_value(sexpr[1])
            idx = _model_value(sexpr[2])
            val = _model_value(sexpr[3])
            return ("store", base, idx, val)
    return None


def parse_model(output: str) -> dict:
    """define-fun constants from a (get-model) answer.  Array values come
    back as ('const-array', v) / ('store', base, i, v) plans that
    materialize_model turns into window tuples."""
    body = output.split("\n", 1)[1] if "\n" in output else ""
    model: dict = {}

    def scan(items):
        for item in items:
            if not isinstance(item, list):
                continue
            if (
                len(item) >= 5
                and item[0] == "define-fun"
                and isinstance(item[1], str)
                and item[2] == []
            ):
                val = _model_value(item[4])
                if val is not None:
                    model[item[1]] = val
            else:
                scan(item)

    scan(_sexprs(body))
    return model


def materialize_model(
    model: dict, variables: list[tuple[str, Sort]], dom: FiniteDomain
) -> Optional[dict]:
    """Concrete oracle state from a parsed model; None when entries are
    missing or not understood (the cross-check then reports unverified)."""
    state: dict = {}
    for name, sort in variables:
        if name not in model:
            return None
        raw = model[name]
        if isinstance(sort, ArraySort):
            cells = _array_cells(raw, dom)
            if cells is None:
                return None
            state[name] = cells
        elif isinstance(raw, (bool, int)) and not isinstance(raw, tuple):
            state[name] = raw
        else:
            return None
    return state


def _array_cells(plan, dom: FiniteDomain) -> Optional[tuple]:
    if isinstance(plan, tuple) and plan and plan[0] == "const-array":
        return tuple(plan[1] for _ in range(dom.cells))
    if isinstance(plan, tuple) and plan and plan[0] == "store":
        base = _array_cells(plan[1], dom)
        if base is None or not isinstance(plan[2], int):
            return None
        off = plan[2] - dom.lo
        cells = list(base)
        if 0 <= off < len(cells):
            cells[off] = plan[3]
        return tuple(cells)
    return None
