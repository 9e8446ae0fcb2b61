"""Precedence-aware rendering of expressions.

Conventions (mirrored by the parser in parse.py):

* parentheses appear only where required, except that mixed ∧/∨ is always
  parenthesized — the calculational house style treats them as incomparable;
* ascending relational runs that share an endpoint render as chains,
  ``0 ≤ i < n+1``, and the parser splices such chains back into the
  enclosing conjunction;
* lower-precedence operators get more breathing room (``p  ≡  q``) while
  additive/multiplicative symbols stay tight (``n+1``);
* quantifications are self-delimiting: ``(∀i: R: T)``.

Selection mode produces a Span tree instead of a flat string: every subterm
carries its path so a client can map clicks back to tree positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from calx.formula.ast import (
    ArrayRead,
    ArrayWrite,
    BinOp,
    BoolLit,
    BOOL,
    Expr,
    IntLit,
    MetaVar,
    Quantified,
    UnaryOp,
    Var,
)

ATOM = 9
UNARY = 7
MUL = 6
ADD = 5
REL = 4
AND = 3
OR = 2
IMP = 1
EQUIV = 0

_BIN_LEVEL = {
    "*": MUL, "div": MUL, "mod": MUL,
    "+": ADD, "-": ADD,
    "<": REL, "≤": REL, ">": REL, "≥": REL, "=": REL, "≠": REL,
    "∧": AND, "∨": OR, "⇒": IMP, "≡": EQUIV,
}
_ASSOC = {  # how the parser folds runs of the same operator
    "*": "left", "div": "left", "mod": "left",
    "+": "left", "-": "left",
    "∧": "left", "∨": "left",
    "⇒": "right",
}
_SPACING = {
    "*": "*", "+": "+", "-": "-",
    "div": " div ", "mod": " mod ",
    "<": " < ", "≤": " ≤ ", ">": " > ", "≥": " ≥ ", "=": " = ", "≠": " ≠ ",
    "∧": " ∧ ", "∨": " ∨ ", "⇒": " ⇒ ", "≡": "  ≡  ",
}
CHAIN_OPS = {"<", "≤"}


@dataclass
class Span:
    """Rendered subterm with its tree path; parts interleave literal text and
    child spans."""

    path: tuple[int, ...]
    kind: str
    parts: list[Union[str, "Span"]] = field(default_factory=list)

    def text(self) -> str:
        return "".join(p if isinstance(p, str) else p.text() for p in self.parts)

    def to_json(self) -> dict:
        return {
            "path": ".".join(str(i) for i in self.path),
            "kind": self.kind,
            "parts": [p if isinstance(p, str) else p.to_json() for p in self.parts],
        }


def _level(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _BIN_LEVEL[e.op]
    if isinstance(e, UnaryOp):
        return UNARY
    return ATOM  # literals, vars, reads, quantifications self-delimit


def _needs_parens(child: Expr, parent_op: str, side: str) -> bool:
    cl, pl = _level(child), _BIN_LEVEL[parent_op]
    if cl < pl:
        return True
    if cl == pl:
        if isinstance(child, BinOp) and child.op == parent_op:
            return _ASSOC.get(parent_op) != side
        return True  # same level, different op: relational pairs, ≡ under ≡
    # house style: parenthesize ∧ under ∨ even though precedence decides it
    if parent_op == "∨" and isinstance(child, BinOp) and child.op == "∧":
        return True
    return False


def _render(e: Expr, path: tuple[int, ...], chains: bool) -> Span:
    sp = Span(path, type(e).__name__)

    if isinstance(e, IntLit):
        sp.parts.append(str(e.value))
    elif isinstance(e, BoolLit):
        sp.parts.append("true" if e.value else "false")
    elif isinstance(e, (Var, MetaVar)):
        sp.parts.append(e.name)
    elif isinstance(e, ArrayRead):
        sp.parts.append(_child(e.array, e, path + (0,), "left", chains))
        sp.parts.append("[")
        sp.parts.append(_render(e.index, path + (1,), chains))
        sp.parts.append("]")
    elif isinstance(e, ArrayWrite):
        sp.parts.append(_child(e.array, e, path + (0,), "left", chains))
        sp.parts.append("[")
        sp.parts.append(_render(e.index, path + (1,), chains))
        sp.parts.append(" ↦ ")
        sp.parts.append(_render(e.value, path + (2,), chains))
        sp.parts.append("]")
    elif isinstance(e, UnaryOp):
        sp.parts.append(e.op)
        arg = e.arg
        if _level(arg) < UNARY:
            sp.parts.append("(")
            sp.parts.append(_render(arg, path + (0,), chains))
            sp.parts.append(")")
        else:
            sp.parts.append(_render(arg, path + (0,), chains))
    elif isinstance(e, Quantified):
        lead = e.op.symbol + (" " if e.op.symbol.isalpha() else "")
        sp.parts.append("(" + lead)
        decls = ", ".join(
            n if s != BOOL else f"({n} : Bool)" for n, s in e.bound
        )
        sp.parts.append(decls + ": ")
        sp.parts.append(_render(e.range, path + (0,), chains))
        sp.parts.append(": ")
        sp.parts.append(_render(e.term, path + (1,), chains))
        sp.parts.append(")")
    elif isinstance(e, BinOp):
        if e.op == "∧" and chains:
            _render_conj(e, path, sp)
        else:
            sp.parts.append(_child(e.lhs, e, path + (0,), "left", chains))
            sp.parts.append(_SPACING[e.op])
            sp.parts.append(_child(e.rhs, e, path + (1,), "right", chains))
    else:  # pragma: no cover
        raise TypeError(f"cannot render {type(e)}")
    return sp


def _child(c: Expr, parent: BinOp | Expr, path, side: str, chains: bool):
    if isinstance(parent, (ArrayRead, ArrayWrite)):
        # postfix [..] binds tightest; anything non-atomic needs parens
        if _level(c) < ATOM:
            inner = _render(c, path, chains)
            wrap = Span(path, "paren", ["(", inner, ")"])
            return wrap
        return _render(c, path, chains)
    assert isinstance(parent, BinOp)
    if _needs_parens(c, parent.op, side):
        inner = _render(c, path, chains)
        return Span(path, "paren", ["(", inner, ")"])
    return _render(c, path, chains)


def _conj_spine(e: Expr, path: tuple[int, ...]):
    """Left spine of an ∧-tree as (expr, path) items, outermost last."""
    if isinstance(e, BinOp) and e.op == "∧":
        yield from _conj_spine(e.lhs, path + (0,))
        yield (e.rhs, path + (1,))
    else:
        yield (e, path)


def _render_conj(e: BinOp, path: tuple[int, ...], sp: Span) -> None:
    items = list(_conj_spine(e, path))
    rendered: list[tuple[Expr, Span]] = []
    for sub, p in items:
        if isinstance(sub, BinOp) and sub.op == "∧":
            # only reachable for parenthesized right-children
            inner = _render(sub, p, True)
            rendered.append((sub, Span(p, "paren", ["(", inner, ")"])))
        elif isinstance(sub, BinOp) and _needs_parens(sub, "∧", "left"):
            inner = _render(sub, p, True)
            rendered.append((sub, Span(p, "paren", ["(", inner, ")"])))
        else:
            rendered.append((sub, _render(sub, p, True)))
    # fuse adjacent ascending links sharing an endpoint: a ≤ b ∧ b < c
    out: list[Span] = []
    i = 0
    while i < len(rendered):
        sub, span = rendered[i]
        run = [rendered[i]]
        while (
            i + 1 < len(rendered)
            and _chainable(run[-1][0], rendered[i + 1][0])
        ):
            run.append(rendered[i + 1])
            i += 1
        if len(run) > 1:
            chain = Span(run[0][1].path, "chain")
            first = run[0][0]
            assert isinstance(first, BinOp)
            chain.parts.append(_render(first.lhs, run[0][1].path + (0,), True))
            for link, link_span in run:
                assert isinstance(link, BinOp)
                chain.parts.append(_SPACING[link.op])
                chain.parts.append(_render(link.rhs, link_span.path + (1,), True))
            out.append(chain)
        else:
            out.append(span)
        i += 1
    for k, piece in enumerate(out):
        if k:
            sp.parts.append(_SPACING["∧"])
        sp.parts.append(piece)


def _chainable(a: Expr, b: Expr) -> bool:
    return (
        isinstance(a, BinOp)
        and isinstance(b, BinOp)
        and a.op in CHAIN_OPS
        and b.op in CHAIN_OPS
        and _text(a.rhs) == _text(b.lhs)
    )


def _text(e: Expr) -> str:
    return _render(e, (), True).text()


def pretty_print(e: Expr, mode: str = "normal") -> Union[str, Span]:
    """Render an expression.

    mode="normal" returns the flat text; mode="selection" returns the Span
    tree with subterm paths (chain fusion is disabled there so every tree
    node owns a contiguous piece of text).
    """
    if mode == "normal":
        return _render(e, (), True).text()
    if mode == "selection":
        return _render(e, (), False)
    raise ValueError(f"unknown mode {mode!r}")
