"""Sorted first-order expression trees with Eindhoven quantifiers.

Expressions are immutable; sorts are computed and checked at construction, so
any expression you can hold is well-sorted.  Equality and hashing are up to
renaming of bound variables.  Metavariables (placeholders for not-yet-derived
expressions) share the expression namespace but their names carry a trailing
apostrophe, e.g. ``r'``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union

from calx.errors import InvalidPath, SortError

# --- sorts -------------------------------------------------------------------


class Sort:
    def __repr__(self) -> str:
        return str(self)


class _BoolSort(Sort):
    def __str__(self) -> str:
        return "Bool"

    def __eq__(self, other) -> bool:
        return isinstance(other, _BoolSort)

    def __hash__(self) -> int:
        return hash("Bool")


class _IntSort(Sort):
    def __str__(self) -> str:
        return "Int"

    def __eq__(self, other) -> bool:
        return isinstance(other, _IntSort)

    def __hash__(self) -> int:
        return hash("Int")


class ArraySort(Sort):
    """Integer-indexed array.  Element sorts are restricted to Bool and Int."""

    def __init__(self, elem: Sort):
        if isinstance(elem, ArraySort):
            raise SortError("nested array sorts are not supported")
        self.elem = elem

    def __str__(self) -> str:
        return f"Array({self.elem})"

    def __eq__(self, other) -> bool:
        return isinstance(other, ArraySort) and self.elem == other.elem

    def __hash__(self) -> int:
        return hash(("Array", self.elem))


BOOL = _BoolSort()
INT = _IntSort()


def parse_sort(text: str) -> Sort:
    t = text.strip()
    if t == "Bool":
        return BOOL
    if t == "Int":
        return INT
    if t.startswith("Array(") and t.endswith(")"):
        return ArraySort(parse_sort(t[6:-1]))
    raise SortError(f"unknown sort '{text}'")


def is_meta_name(name: str) -> bool:
    return name.endswith("'")


# --- operators ---------------------------------------------------------------

UNARY_OPS = {"¬": (BOOL, BOOL), "-": (INT, INT)}

# op -> (operand sort or None for any-matching, result sort)
BINOP_SORTS = {
    "+": (INT, INT),
    "-": (INT, INT),
    "*": (INT, INT),
    "div": (INT, INT),
    "mod": (INT, INT),
    "<": (INT, BOOL),
    "≤": (INT, BOOL),
    ">": (INT, BOOL),
    "≥": (INT, BOOL),
    "=": (None, BOOL),
    "≠": (None, BOOL),
    "∧": (BOOL, BOOL),
    "∨": (BOOL, BOOL),
    "⇒": (BOOL, BOOL),
    "≡": (BOOL, BOOL),
}


@dataclass(frozen=True)
class QuantOp:
    """Quantifier flavour plus the identity element of its underlying binary
    operator (None when there is none, e.g. MAX/MIN over unbounded Int)."""

    name: str
    symbol: str
    term_sort: Sort
    result_sort: Sort
    identity: Optional[Union[bool, int]]

    def __str__(self) -> str:
        return self.symbol


FORALL = QuantOp("forall", "∀", BOOL, BOOL, True)
EXISTS = QuantOp("exists", "∃", BOOL, BOOL, False)
SUM = QuantOp("sum", "Σ", INT, INT, 0)
COUNT = QuantOp("count", "#", BOOL, INT, 0)
MAX = QuantOp("max", "MAX", INT, INT, None)
MIN = QuantOp("min", "MIN", INT, INT, None)

QUANT_OPS = {q.name: q for q in (FORALL, EXISTS, SUM, COUNT, MAX, MIN)}


# --- expressions -------------------------------------------------------------


class Expr:
    """Base class.  Subclasses set ``self.sort`` during construction."""

    sort: Sort
    __slots__ = ()

    # children, in path order
    def children(self) -> tuple[Expr, ...]:
        return ()

    def replace_children(self, kids: tuple[Expr, ...]) -> Expr:
        raise NotImplementedError

    def _alpha(self, env: dict[str, int]) -> tuple:
        raise NotImplementedError

    def alpha_key(self) -> tuple:
        key = getattr(self, "_alpha_cache", None)
        if key is None:
            key = self._alpha({})
            object.__setattr__(self, "_alpha_cache", key)
        return key

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return self.alpha_key() == other.alpha_key()

    def __hash__(self) -> int:
        return hash(self.alpha_key())

    def __repr__(self) -> str:
        from calx.formula.pprint import pretty_print

        return f"<{type(self).__name__} {pretty_print(self)}>"

    def subterm(self, path: tuple[int, ...]) -> Expr:
        node: Expr = self
        for step in path:
            kids = node.children()
            if not 0 <= step < len(kids):
                raise InvalidPath(f"no child {step} at {type(node).__name__}")
            node = kids[step]
        return node

    def with_subterm(self, path: tuple[int, ...], new: Expr) -> Expr:
        if not path:
            return new
        kids = self.children()
        i = path[0]
        if not 0 <= i < len(kids):
            raise InvalidPath(f"no child {path[0]} at {type(self).__name__}")
        kids = kids[:i] + (kids[i].with_subterm(path[1:], new),) + kids[i + 1 :]
        return self.replace_children(kids)


class IntLit(Expr):
    __slots__ = ("value", "sort", "_alpha_cache")

    def __init__(self, value: int):
        if value < 0:
            raise SortError("negative literals are spelled with unary minus")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "sort", INT)

    def _alpha(self, env):
        return ("int", self.value)


class BoolLit(Expr):
    __slots__ = ("value", "sort", "_alpha_cache")

    def __init__(self, value: bool):
        object.__setattr__(self, "value", bool(value))
        object.__setattr__(self, "sort", BOOL)

    def _alpha(self, env):
        return ("bool", self.value)


TRUE = BoolLit(True)
FALSE = BoolLit(False)


class Var(Expr):
    __slots__ = ("name", "sort", "_alpha_cache")

    def __init__(self, name: str, sort: Sort):
        if is_meta_name(name):
            raise SortError(f"'{name}' is a metavariable name; use MetaVar")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "sort", sort)

    def _alpha(self, env):
        if self.name in env:
            return ("bvar", env[self.name])
        return ("var", self.name, str(self.sort))


class MetaVar(Expr):
    """Placeholder for an unknown expression, e.g. the ``r'`` of an envisioned
    assignment.  Never bound by quantifiers."""

    __slots__ = ("name", "sort", "_alpha_cache")

    def __init__(self, name: str, sort: Sort):
        if not is_meta_name(name):
            raise SortError(f"metavariable name must end with ': '{name}'")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "sort", sort)

    def _alpha(self, env):
        return ("meta", self.name, str(self.sort))


class ArrayRead(Expr):
    __slots__ = ("array", "index", "sort", "_alpha_cache")

    def __init__(self, array: Expr, index: Expr):
        if not isinstance(array.sort, ArraySort):
            raise SortError(f"cannot index into sort {array.sort}")
        if index.sort != INT:
            raise SortError(f"array index must be Int, got {index.sort}")
        object.__setattr__(self, "array", array)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "sort", array.sort.elem)

    def children(self):
        return (self.array, self.index)

    def replace_children(self, kids):
        return ArrayRead(*kids)

    def _alpha(self, env):
        return ("read", self.array._alpha(env), self.index._alpha(env))


class ArrayWrite(Expr):
    """Whole-array update ``f[i ↦ e]``; the image of an array-element
    assignment under wp."""

    __slots__ = ("array", "index", "value", "sort", "_alpha_cache")

    def __init__(self, array: Expr, index: Expr, value: Expr):
        if not isinstance(array.sort, ArraySort):
            raise SortError(f"cannot update sort {array.sort}")
        if index.sort != INT:
            raise SortError(f"array index must be Int, got {index.sort}")
        if value.sort != array.sort.elem:
            raise SortError(f"array element update: {value.sort} vs {array.sort.elem}")
        object.__setattr__(self, "array", array)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "sort", array.sort)

    def children(self):
        return (self.array, self.index, self.value)

    def replace_children(self, kids):
        return ArrayWrite(*kids)

    def _alpha(self, env):
        return (
            "write",
            self.array._alpha(env),
            self.index._alpha(env),
            self.value._alpha(env),
        )


class UnaryOp(Expr):
    __slots__ = ("op", "arg", "sort", "_alpha_cache")

    def __init__(self, op: str, arg: Expr):
        if op not in UNARY_OPS:
            raise SortError(f"unknown unary operator '{op}'")
        operand, result = UNARY_OPS[op]
        if arg.sort != operand:
            raise SortError(f"'{op}' expects {operand}, got {arg.sort}")
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "arg", arg)
        object.__setattr__(self, "sort", result)

    def children(self):
        return (self.arg,)

    def replace_children(self, kids):
        return UnaryOp(self.op, kids[0])

    def _alpha(self, env):
        return ("un", self.op, self.arg._alpha(env))


class BinOp(Expr):
    __slots__ = ("op", "lhs", "rhs", "sort", "_alpha_cache")

    def __init__(self, op: str, lhs: Expr, rhs: Expr):
        if op not in BINOP_SORTS:
            raise SortError(f"unknown binary operator '{op}'")
        operand, result = BINOP_SORTS[op]
        if operand is None:
            if lhs.sort != rhs.sort:
                raise SortError(f"'{op}' needs equal sorts: {lhs.sort} vs {rhs.sort}")
        else:
            if lhs.sort != operand or rhs.sort != operand:
                raise SortError(
                    f"'{op}' expects {operand} operands, got {lhs.sort}, {rhs.sort}"
                )
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "lhs", lhs)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "sort", result)

    def children(self):
        return (self.lhs, self.rhs)

    def replace_children(self, kids):
        return BinOp(self.op, kids[0], kids[1])

    def _alpha(self, env):
        return ("bin", self.op, self.lhs._alpha(env), self.rhs._alpha(env))


class Quantified(Expr):
    """Eindhoven three-part quantification ``(OP i: R: T)``."""

    __slots__ = ("op", "bound", "range", "term", "sort", "_alpha_cache")

    def __init__(
        self,
        op: QuantOp,
        bound: tuple[tuple[str, Sort], ...],
        range_: Expr,
        term: Expr,
    ):
        bound = tuple((n, s) for n, s in bound)
        if not bound:
            raise SortError("quantifier needs at least one bound variable")
        names = [n for n, _ in bound]
        if len(set(names)) != len(names):
            raise SortError(f"duplicate bound variables {names}")
        for n, s in bound:
            if is_meta_name(n):
                raise SortError("cannot bind a metavariable name")
            if isinstance(s, ArraySort):
                raise SortError("bound variables must be Int or Bool")
        if range_.sort != BOOL:
            raise SortError(f"quantifier range must be Bool, got {range_.sort}")
        if term.sort != op.term_sort:
            raise SortError(f"({op}) term must be {op.term_sort}, got {term.sort}")
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "bound", bound)
        object.__setattr__(self, "range", range_)
        object.__setattr__(self, "term", term)
        object.__setattr__(self, "sort", op.result_sort)

    def children(self):
        return (self.range, self.term)

    def replace_children(self, kids):
        return Quantified(self.op, self.bound, kids[0], kids[1])

    def _alpha(self, env):
        inner = dict(env)
        base = len(env)
        for k, (n, _) in enumerate(self.bound):
            inner[n] = base + k
        sorts = tuple(str(s) for _, s in self.bound)
        return (
            "quant",
            self.op.name,
            sorts,
            self.range._alpha(inner),
            self.term._alpha(inner),
        )


# --- convenience constructors -------------------------------------------------


def conj(parts: list[Expr]) -> Expr:
    """Left-associated conjunction; [] is true."""
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = BinOp("∧", out, p)
    return out


def conjuncts(e: Expr) -> list[Expr]:
    """Flatten the ∧-spine (both sides) into a list."""
    if isinstance(e, BinOp) and e.op == "∧":
        return conjuncts(e.lhs) + conjuncts(e.rhs)
    return [e]


_REL_NEGATION = {"<": "≥", "≥": "<", "≤": ">", ">": "≤", "=": "≠", "≠": "="}


def negate(e: Expr) -> Expr:
    """Negation normalized so that relational guards flip instead of growing a
    ¬; involutive on its own output."""
    if isinstance(e, BoolLit):
        return BoolLit(not e.value)
    if isinstance(e, UnaryOp) and e.op == "¬":
        return e.arg
    if isinstance(e, BinOp) and e.op in _REL_NEGATION:
        return BinOp(_REL_NEGATION[e.op], e.lhs, e.rhs)
    return UnaryOp("¬", e)


# --- variable discovery -------------------------------------------------------


def _walk_free(e: Expr, shadowed: frozenset[str], out_vars, out_metas) -> None:
    if isinstance(e, Var):
        if e.name not in shadowed:
            out_vars.add((e.name, e.sort))
    elif isinstance(e, MetaVar):
        out_metas.add((e.name, e.sort))
    elif isinstance(e, Quantified):
        inner = shadowed | {n for n, _ in e.bound}
        _walk_free(e.range, inner, out_vars, out_metas)
        _walk_free(e.term, inner, out_vars, out_metas)
    else:
        for c in e.children():
            _walk_free(c, shadowed, out_vars, out_metas)


def free_vars(e: Expr) -> set[tuple[str, Sort]]:
    """Free program variables (metavariables excluded; see meta_vars)."""
    vs: set = set()
    ms: set = set()
    _walk_free(e, frozenset(), vs, ms)
    return vs


def meta_vars(e: Expr) -> set[tuple[str, Sort]]:
    vs: set = set()
    ms: set = set()
    _walk_free(e, frozenset(), vs, ms)
    return ms


def has_metavars(e: Expr) -> bool:
    return bool(meta_vars(e))


def free_names(e: Expr) -> set[str]:
    return {n for n, _ in free_vars(e)} | {n for n, _ in meta_vars(e)}


# --- substitution --------------------------------------------------------------


@dataclass(frozen=True)
class Substitution:
    """Simultaneous bindings target-name -> replacement.  Targets may be
    program variables or metavariables (primed names)."""

    bindings: tuple[tuple[str, Expr], ...]

    def __post_init__(self):
        names = [n for n, _ in self.bindings]
        if len(set(names)) != len(names):
            raise SortError(f"substitution targets must be distinct: {names}")

    @staticmethod
    def of(*pairs: tuple[str, Expr]) -> "Substitution":
        return Substitution(tuple(pairs))

    def as_dict(self) -> dict[str, Expr]:
        return dict(self.bindings)

    def __bool__(self) -> bool:
        return bool(self.bindings)


def fresh_name(base: str, taken: set[str]) -> str:
    """Minimal numeric suffix not colliding with anything in scope."""
    k = 0
    while f"{base}{k}" in taken:
        k += 1
    return f"{base}{k}"


def _subst(e: Expr, mapping: dict[str, Expr]) -> Expr:
    if not mapping:
        return e
    if isinstance(e, Var):
        rep = mapping.get(e.name)
        if rep is None:
            return e
        if rep.sort != e.sort:
            raise SortError(
                f"replacement for {e.name}:{e.sort} has sort {rep.sort}"
            )
        return rep
    if isinstance(e, MetaVar):
        rep = mapping.get(e.name)
        if rep is None:
            return e
        if rep.sort != e.sort:
            raise SortError(
                f"replacement for {e.name}:{e.sort} has sort {rep.sort}"
            )
        return rep
    if isinstance(e, Quantified):
        live = {k: v for k, v in mapping.items() if k not in {n for n, _ in e.bound}}
        if not live:
            return e
        incoming = set()
        for v in live.values():
            incoming |= free_names(v)
        clashing = [(n, s) for n, s in e.bound if n in incoming]
        bound = e.bound
        rng, term = e.range, e.term
        if clashing:
            avoid = (
                incoming
                | free_names(rng)
                | free_names(term)
                | {n for n, _ in bound}
                | set(live.keys())
            )
            rename: dict[str, Expr] = {}
            new_bound = []
            for n, s in bound:
                if n in incoming:
                    fresh = fresh_name(n, avoid)
                    avoid.add(fresh)
                    rename[n] = Var(fresh, s)
                    new_bound.append((fresh, s))
                else:
                    new_bound.append((n, s))
            rng = _subst(rng, rename)
            term = _subst(term, rename)
            bound = tuple(new_bound)
        return Quantified(e.op, bound, _subst(rng, live), _subst(term, live))
    kids = e.children()
    if not kids:
        return e
    new_kids = tuple(_subst(c, mapping) for c in kids)
    if all(a is b for a, b in zip(kids, new_kids)):
        return e
    return e.replace_children(new_kids)


def substitute(e: Expr, s: Substitution) -> Expr:
    """Simultaneous, capture-avoiding substitution of free occurrences.

    Bound variables that would capture a replacement's free variables are
    renamed with the minimal fresh numeric suffix, so results are
    deterministic and replay-stable.
    """
    return _subst(e, s.as_dict())


def instantiate_metavars(e: Expr, s: Substitution) -> Expr:
    """Replace bound metavariables; targets must all be primed names."""
    for name, _ in s.bindings:
        if not is_meta_name(name):
            raise SortError(f"'{name}' is not a metavariable name")
    return _subst(e, s.as_dict())


# --- subterm enumeration (selection mode, focusing) ----------------------------


def subterm_paths(e: Expr) -> Iterator[tuple[tuple[int, ...], Expr]]:
    """All (path, subterm) pairs in preorder."""

    def walk(node: Expr, path: tuple[int, ...]):
        yield path, node
        for i, c in enumerate(node.children()):
            yield from walk(c, path + (i,))

    yield from walk(e, ())


def bound_vars_on_path(e: Expr, path: tuple[int, ...]) -> tuple[tuple[str, Sort], ...]:
    """Bound variables whose scope encloses the subterm at `path`."""
    out: list[tuple[str, Sort]] = []
    node = e
    for step in path:
        if isinstance(node, Quantified):
            out.extend(node.bound)
        node = node.children()[step]
    return tuple(out)
