"""Parser for the LaTeX-flavored formula input language.

The accepted surface is deliberately small:

* identifiers ``[a-zA-Z][a-zA-Z0-9_]*``, metavariables with a trailing
  apostrophe (``r'``);
* LaTeX macros ``\\forall \\exists \\sum \\count \\max \\min \\wedge \\vee
  \\neg \\Rightarrow \\equiv \\le \\ge \\ne \\mapsto`` — the corresponding
  Unicode symbols are accepted interchangeably, so printer output reparses;
* Eindhoven quantification ``(\\forall i, j : R : T)``; bound variables
  default to Int, ``(p : Bool)`` declares a boolean one;
* array read ``f[i]`` and update ``f[i \\mapsto e]``;
* ascending relational chains ``0 \\le i < n`` which splice into the
  enclosing conjunction, and conjunctive ``\\equiv`` chains.

Precedence, high to low: postfix ``[ ]``; unary ``¬ -``; ``* div mod``;
``+ -``; relational; ``∧``; ``∨``; ``⇒`` (right-assoc); ``≡``.
"""

from __future__ import annotations

import re
from typing import Mapping

from calx.errors import ParseError, SortError, UnknownIdentifier
from calx.formula.ast import (
    ArrayRead,
    ArrayWrite,
    BinOp,
    BoolLit,
    conj,
    Expr,
    INT,
    IntLit,
    is_meta_name,
    MetaVar,
    parse_sort,
    QUANT_OPS,
    Quantified,
    QuantOp,
    Sort,
    UnaryOp,
    Var,
)

LATEX_MAP = {
    "forall": "∀", "exists": "∃", "sum": "Σ", "count": "#",
    "max": "MAX", "min": "MIN",
    "wedge": "∧", "land": "∧", "vee": "∨", "lor": "∨",
    "neg": "¬", "lnot": "¬",
    "Rightarrow": "⇒", "implies": "⇒",
    "Leftarrow": "⇐",
    "equiv": "≡",
    "le": "≤", "leq": "≤", "ge": "≥", "geq": "≥", "ne": "≠", "neq": "≠",
    "mapsto": "↦",
}

_QUANT_SYMBOL = {"∀": "forall", "∃": "exists", "Σ": "sum", "#": "count",
                 "MAX": "max", "MIN": "min"}
RESERVED = {"true", "false", "div", "mod", "MAX", "MIN", "skip"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<macro>\\[a-zA-Z]+)
  | (?P<num>[0-9]+)
  | (?P<ident>[a-zA-Z][a-zA-Z0-9_]*'?)
  | (?P<assign>:=)
  | (?P<sym>[()\[\],:+\-*<>=#∀∃Σ∧∨¬⇒⇐≡≤≥≠↦])
    """,
    re.VERBOSE,
)


class Token:
    __slots__ = ("kind", "value", "pos")

    def __init__(self, kind: str, value: str, pos: int):
        self.kind = kind
        self.value = value
        self.pos = pos

    def __repr__(self):
        return f"Token({self.kind},{self.value!r}@{self.pos})"


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", pos=i)
        i = m.end()
        if m.lastgroup == "ws":
            continue
        val = m.group()
        if m.lastgroup == "macro":
            name = val[1:]
            if name not in LATEX_MAP:
                raise ParseError(f"unknown LaTeX token '{val}'", pos=m.start())
            out.append(Token("sym", LATEX_MAP[name], m.start()))
        elif m.lastgroup == "num":
            out.append(Token("num", val, m.start()))
        elif m.lastgroup == "ident":
            if val in ("MAX", "MIN"):
                out.append(Token("sym", val, m.start()))
            else:
                out.append(Token("ident", val, m.start()))
        elif m.lastgroup == "assign":
            out.append(Token("sym", ":=", m.start()))
        else:
            out.append(Token("sym", val, m.start()))
    out.append(Token("eof", "", len(text)))
    return out


def split_top(text: str, sep: str = ",") -> list[str]:
    """Split at top-level separators, respecting (), [] and {} nesting."""
    parts: list[str] = []
    depth = 0
    cur: list[str] = []
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


_REL_OPS = {"<", "≤", ">", "≥", "=", "≠"}
_CHAIN_OPS = {"<", "≤"}


class _Parser:
    def __init__(self, tokens: list[Token], env: Mapping[str, Sort]):
        self.toks = tokens
        self.i = 0
        self.env = env
        self.scopes: list[dict[str, Sort]] = []

    # token plumbing ---------------------------------------------------------
    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str) -> Token:
        t = self.peek()
        if t.kind == "sym" and t.value == value:
            return self.next()
        raise ParseError(
            f"expected '{value}', found {t.value!r}" if t.kind != "eof"
            else f"expected '{value}', found end of input",
            pos=t.pos,
            expected=[value],
        )

    def at_sym(self, *values: str) -> bool:
        t = self.peek()
        return t.kind == "sym" and t.value in values

    def lookup(self, name: str, pos: int) -> Sort:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        if name in self.env:
            return self.env[name]
        raise UnknownIdentifier(name, pos=pos)

    def build(self, ctor, *args, pos: int):
        try:
            return ctor(*args)
        except SortError as exc:
            raise SortError(f"{exc} (at position {pos})") from exc

    # grammar ------------------------------------------------------------------
    def parse(self) -> Expr:
        e = self.equiv()
        t = self.peek()
        if t.kind != "eof":
            raise ParseError(f"trailing input {t.value!r}", pos=t.pos)
        return e

    def equiv(self) -> Expr:
        pos = self.peek().pos
        items = [self.implication()]
        while self.at_sym("≡"):
            self.next()
            items.append(self.implication())
        if len(items) == 1:
            return items[0]
        if len(items) == 2:
            return self.build(BinOp, "≡", items[0], items[1], pos=pos)
        links = [
            self.build(BinOp, "≡", a, b, pos=pos)
            for a, b in zip(items, items[1:])
        ]
        return conj(links)

    def implication(self) -> Expr:
        pos = self.peek().pos
        lhs = self.disjunction()
        if self.at_sym("⇒"):
            self.next()
            rhs = self.implication()
            return self.build(BinOp, "⇒", lhs, rhs, pos=pos)
        return lhs

    def disjunction(self) -> Expr:
        pos = self.peek().pos
        out = self.conjunction()
        while self.at_sym("∨"):
            self.next()
            out = self.build(BinOp, "∨", out, self.conjunction(), pos=pos)
        return out

    def conjunction(self) -> Expr:
        pos = self.peek().pos
        items = list(self.relational_items())
        while self.at_sym("∧"):
            self.next()
            items.extend(self.relational_items())
        out = items[0]
        for item in items[1:]:
            out = self.build(BinOp, "∧", out, item, pos=pos)
        return out

    def relational_items(self) -> list[Expr]:
        """One relational group; a ≤/< chain yields one conjunct per link."""
        pos = self.peek().pos
        operands = [self.additive()]
        ops: list[str] = []
        while self.at_sym(*_REL_OPS):
            ops.append(self.next().value)
            operands.append(self.additive())
        if not ops:
            return [operands[0]]
        if len(ops) == 1:
            return [self.build(BinOp, ops[0], operands[0], operands[1], pos=pos)]
        bad = [o for o in ops if o not in _CHAIN_OPS]
        if bad:
            raise ParseError(
                f"relational operator '{bad[0]}' does not chain; add parentheses",
                pos=pos,
            )
        return [
            self.build(BinOp, op, a, b, pos=pos)
            for op, a, b in zip(ops, operands, operands[1:])
        ]

    def additive(self) -> Expr:
        pos = self.peek().pos
        out = self.multiplicative()
        while self.at_sym("+", "-"):
            op = self.next().value
            out = self.build(BinOp, op, out, self.multiplicative(), pos=pos)
        return out

    def multiplicative(self) -> Expr:
        pos = self.peek().pos
        out = self.unary()
        while self.at_sym("*") or (
            self.peek().kind == "ident" and self.peek().value in ("div", "mod")
        ):
            t = self.next()
            out = self.build(BinOp, t.value, out, self.unary(), pos=pos)
        return out

    def unary(self) -> Expr:
        t = self.peek()
        if self.at_sym("¬"):
            self.next()
            return self.build(UnaryOp, "¬", self.unary(), pos=t.pos)
        if self.at_sym("-"):
            self.next()
            return self.build(UnaryOp, "-", self.unary(), pos=t.pos)
        return self.postfix()

    def postfix(self) -> Expr:
        out = self.primary()
        while self.at_sym("["):
            pos = self.next().pos
            index = self.equiv()
            if self.at_sym("↦"):
                self.next()
                value = self.equiv()
                self.expect("]")
                out = self.build(ArrayWrite, out, index, value, pos=pos)
            else:
                self.expect("]")
                out = self.build(ArrayRead, out, index, pos=pos)
        return out

    def primary(self) -> Expr:
        t = self.next()
        if t.kind == "num":
            return IntLit(int(t.value))
        if t.kind == "ident":
            if t.value == "true":
                return BoolLit(True)
            if t.value == "false":
                return BoolLit(False)
            if t.value in ("div", "mod"):
                raise ParseError(f"'{t.value}' is an operator", pos=t.pos)
            sort = self.lookup(t.value, t.pos)
            if is_meta_name(t.value):
                return MetaVar(t.value, sort)
            return Var(t.value, sort)
        if t.kind == "sym" and t.value == "(":
            if self.peek().kind == "sym" and self.peek().value in _QUANT_SYMBOL:
                return self.quantified()
            e = self.equiv()
            self.expect(")")
            return e
        raise ParseError(
            f"unexpected {t.value!r}" if t.kind != "eof" else "unexpected end of input",
            pos=t.pos,
            expected=["identifier", "number", "("],
        )

    def quantified(self) -> Expr:
        qt = self.next()
        op: QuantOp = QUANT_OPS[_QUANT_SYMBOL[qt.value]]
        bound: list[tuple[str, Sort]] = []
        while True:
            bound.append(self.bound_var())
            if self.at_sym(","):
                self.next()
                continue
            break
        self.expect(":")
        self.scopes.append(dict(bound))
        try:
            rng = self.equiv()
            self.expect(":")
            term = self.equiv()
        finally:
            self.scopes.pop()
        self.expect(")")
        return self.build(Quantified, op, tuple(bound), rng, term, pos=qt.pos)

    def bound_var(self) -> tuple[str, Sort]:
        t = self.next()
        if t.kind == "ident":
            if t.value in RESERVED or is_meta_name(t.value):
                raise ParseError(f"cannot bind '{t.value}'", pos=t.pos)
            return (t.value, INT)
        if t.kind == "sym" and t.value == "(":
            name = self.next()
            if name.kind != "ident" or is_meta_name(name.value):
                raise ParseError("expected a variable name", pos=name.pos)
            self.expect(":")
            sort_tok = self.next()
            if sort_tok.kind != "ident":
                raise ParseError("expected a sort", pos=sort_tok.pos)
            sort = parse_sort(sort_tok.value)
            self.expect(")")
            return (name.value, sort)
        raise ParseError("expected a bound variable", pos=t.pos)


def parse_formula(text: str, env: Mapping[str, Sort]) -> Expr:
    """Parse `text` against the declared identifiers in `env`.

    Every free identifier (including metavariables) must be declared; bound
    variables shadow declarations inside their quantifier.
    """
    return _Parser(tokenize(text), env).parse()


def parse_declarations(text: str) -> list[tuple[str, Sort]]:
    """Parse a declaration list like ``[n:Int, f:Array(Bool)]``."""
    t = text.strip()
    if t.startswith("[") and t.endswith("]"):
        t = t[1:-1]
    decls: list[tuple[str, Sort]] = []
    if not t.strip():
        return decls
    for item in split_top(t):
        if ":" not in item:
            raise ParseError(f"declaration '{item.strip()}' needs name : Sort")
        name, _, sort_text = item.partition(":")
        name = name.strip()
        if not re.fullmatch(r"[a-zA-Z][a-zA-Z0-9_]*'?", name):
            raise ParseError(f"bad identifier '{name}'")
        decls.append((name, parse_sort(sort_text)))
    names = [n for n, _ in decls]
    if len(set(names)) != len(names):
        raise ParseError(f"duplicate declarations in {text!r}")
    return decls


def parse_ident_list(text: str) -> list[str]:
    t = text.strip()
    if t.startswith("[") and t.endswith("]"):
        t = t[1:-1]
    if not t.strip():
        return []
    names = [p.strip() for p in split_top(t)]
    for n in names:
        if not re.fullmatch(r"[a-zA-Z][a-zA-Z0-9_]*'?", n):
            raise ParseError(f"bad identifier '{n}'")
    return names


def parse_expr_list(text: str, env: Mapping[str, Sort]) -> list[Expr]:
    t = text.strip()
    if t.startswith("[") and t.endswith("]"):
        t = t[1:-1]
    if not t.strip():
        return []
    return [parse_formula(p, env) for p in split_top(t)]


def scan_metavar_names(text: str) -> list[str]:
    """Primed identifiers appearing lexically in `text` (for sort inference
    before the real parse)."""
    names = []
    for t in tokenize(text):
        if t.kind == "ident" and is_meta_name(t.value) and t.value not in names:
            names.append(t.value)
    return names
