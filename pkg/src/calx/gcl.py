"""Annotated guarded-command programs.

Every construct carries its own precondition and postcondition, which is what
makes focused derivation of a subprogram possible: the local spec is the whole
story.  ``UnkProg`` marks a fragment that has not been derived yet.

Programs are immutable; tactics build new ones.  Node addressing uses paths of
segments: an integer selects a Composition component or an If branch body,
"body" enters a While.  The root path is the empty tuple, printed ``·``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Optional, Union

from calx.errors import InvalidPath, MetaVarNotAllowed, SortError
from calx.formula import (
    BOOL,
    conj,
    conjuncts,
    Expr,
    has_metavars,
    INT,
    negate,
    Sort,
    Var,
)

PathSeg = Union[int, str]
Path = tuple[PathSeg, ...]


def path_text(path: Path) -> str:
    return ".".join(str(s) for s in path) if path else "·"


def parse_path(text: str) -> Path:
    t = text.strip()
    if t in ("", "·"):
        return ()
    segs: list[PathSeg] = []
    for part in t.split("."):
        segs.append(int(part) if part.isdigit() else part)
    return tuple(segs)


# --- constructs ---------------------------------------------------------------


class Construct:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Construct):
    pass


@dataclass(frozen=True)
class ArrayTarget:
    """Assignment target ``f[i]``."""

    array: Var
    index: Expr

    def __post_init__(self):
        if self.index.sort != INT:
            raise SortError("array target index must be Int")

    @property
    def name(self) -> str:
        return self.array.name

    @property
    def sort(self) -> Sort:
        return self.array.sort.elem


Target = Union[Var, ArrayTarget]


@dataclass(frozen=True)
class Assignment(Construct):
    """Simultaneous assignment; right-hand sides may contain metavariables."""

    targets: tuple[Target, ...]
    exprs: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.targets) != len(self.exprs):
            raise SortError("assignment arity mismatch")
        names = [t.name for t in self.targets]
        if len(set(names)) != len(names):
            raise SortError(f"assignment targets must be distinct: {names}")
        for t, e in zip(self.targets, self.exprs):
            if t.sort != e.sort:
                raise SortError(f"cannot assign {e.sort} to {t.name}:{t.sort}")


@dataclass(frozen=True)
class UnkProg(Construct):
    """A not-yet-derived fragment; its enclosing pre/post is its whole spec."""

    tag: str


@dataclass(frozen=True)
class Composition(Construct):
    components: tuple["AnnotatedProgram", ...]


@dataclass(frozen=True)
class If(Construct):
    branches: tuple[tuple[Expr, "AnnotatedProgram"], ...]


@dataclass(frozen=True)
class While(Construct):
    """Single-guard loop; invariants kept as a list of conjuncts (P0, P1 …).

    The optional bound is an Int expression; termination obligations are
    generated only when it is present.
    """

    invariants: tuple[Expr, ...]
    guard: Expr
    body: "AnnotatedProgram"
    bound: Optional[Expr] = None


@dataclass(frozen=True)
class AnnotatedProgram:
    pre: Expr
    post: Expr
    body: Construct

    def __post_init__(self):
        if self.pre.sort != BOOL or self.post.sort != BOOL:
            raise SortError("pre/post must be Bool")

    # --- navigation -----------------------------------------------------------

    def child(self, seg: PathSeg) -> "AnnotatedProgram":
        b = self.body
        if isinstance(b, Composition) and isinstance(seg, int) and 0 <= seg < len(b.components):
            return b.components[seg]
        if isinstance(b, If) and isinstance(seg, int) and 0 <= seg < len(b.branches):
            return b.branches[seg][1]
        if isinstance(b, While) and seg == "body":
            return b.body
        raise InvalidPath(f"no child {seg!r} under {type(b).__name__}")

    def at(self, path: Path) -> "AnnotatedProgram":
        node = self
        for seg in path:
            node = node.child(seg)
        return node

    def with_node(self, path: Path, new: "AnnotatedProgram") -> "AnnotatedProgram":
        if not path:
            return new
        seg, rest = path[0], path[1:]
        b = self.body
        if isinstance(b, Composition) and isinstance(seg, int):
            comps = list(b.components)
            comps[seg] = comps[seg].with_node(rest, new)
            return replace(self, body=Composition(tuple(comps)))
        if isinstance(b, If) and isinstance(seg, int):
            brs = list(b.branches)
            g, sub = brs[seg]
            brs[seg] = (g, sub.with_node(rest, new))
            return replace(self, body=If(tuple(brs)))
        if isinstance(b, While) and seg == "body":
            return replace(self, body=replace(b, body=b.body.with_node(rest, new)))
        raise InvalidPath(f"no child {seg!r} under {type(b).__name__}")

    def walk(self, path: Path = ()) -> Iterator[tuple[Path, "AnnotatedProgram"]]:
        yield path, self
        b = self.body
        if isinstance(b, Composition):
            for i, c in enumerate(b.components):
                yield from c.walk(path + (i,))
        elif isinstance(b, If):
            for i, (_, c) in enumerate(b.branches):
                yield from c.walk(path + (i,))
        elif isinstance(b, While):
            yield from b.body.walk(path + ("body",))


# --- specification root --------------------------------------------------------


def mk_specification(pre: Expr, post: Expr, tag: str = "S") -> AnnotatedProgram:
    """The derivation root: the whole program is one unknown."""
    if has_metavars(pre) or has_metavars(post):
        raise MetaVarNotAllowed("specification must not contain metavariables")
    return AnnotatedProgram(pre, post, UnkProg(tag))


# --- well-formedness -----------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    path: Path
    rule: str
    message: str

    def __str__(self):
        return f"{path_text(self.path)}: {self.rule}: {self.message}"


def _flat_key(exprs: list[Expr]) -> list[tuple]:
    return [e.alpha_key() for e in exprs]


def _same_conjunction(a: Expr, b: Expr) -> bool:
    return _flat_key(conjuncts(a)) == _flat_key(conjuncts(b))


def _same_conjunct_multiset(a: list[Expr], b: list[Expr]) -> bool:
    return sorted(map(repr, _flat_key(a))) == sorted(map(repr, _flat_key(b)))


def check_wellformed(p: AnnotatedProgram) -> list[Violation]:
    """Structural invariants; an empty list means the program is coherent.

    Adjacent composition components must agree, If branches carry pre∧guard,
    a While body runs from invariant∧guard back to the invariant, and the
    loop's postcondition is the invariants plus the negated guard (compared
    as conjunct multisets, so tactic-normalized shapes pass).
    """
    out: list[Violation] = []
    for path, node in p.walk():
        b = node.body
        if isinstance(b, Composition):
            if len(b.components) < 2:
                out.append(Violation(path, "CompositionArity", "needs ≥ 2 components"))
                continue
            if not _same_conjunction(b.components[0].pre, node.pre):
                out.append(Violation(path, "CompositionEnds", "first pre differs from own pre"))
            if not _same_conjunction(b.components[-1].post, node.post):
                out.append(Violation(path, "CompositionEnds", "last post differs from own post"))
            for k in range(len(b.components) - 1):
                if not _same_conjunction(b.components[k].post, b.components[k + 1].pre):
                    out.append(
                        Violation(
                            path + (k,),
                            "AdjacencyMismatch",
                            f"post of component {k} differs from pre of component {k + 1}",
                        )
                    )
        elif isinstance(b, If):
            if not b.branches:
                out.append(Violation(path, "IfNoBranches", "if needs ≥ 1 branch"))
                continue
            for k, (g, sub) in enumerate(b.branches):
                if g.sort != BOOL:
                    out.append(Violation(path + (k,), "GuardSort", "guard must be Bool"))
                    continue
                want_pre = conjuncts(node.pre) + conjuncts(g)
                if not _same_conjunct_multiset(conjuncts(sub.pre), want_pre):
                    out.append(Violation(path + (k,), "IfBranchPre", "branch pre ≠ pre ∧ guard"))
                if not _same_conjunction(sub.post, node.post):
                    out.append(Violation(path + (k,), "IfBranchPost", "branch post ≠ post"))
        elif isinstance(b, While):
            if not b.invariants:
                out.append(Violation(path, "WhileNoInvariant", "loop needs ≥ 1 invariant"))
                continue
            if b.guard.sort != BOOL:
                out.append(Violation(path, "GuardSort", "guard must be Bool"))
                continue
            if b.bound is not None and b.bound.sort != INT:
                out.append(Violation(path, "BoundSort", "bound must be Int"))
            inv = [c for i in b.invariants for c in conjuncts(i)]
            if not _same_conjunct_multiset(
                conjuncts(b.body.pre), inv + conjuncts(b.guard)
            ):
                out.append(Violation(path + ("body",), "WhileBodyPre", "body pre ≠ invariant ∧ guard"))
            if not _same_conjunct_multiset(conjuncts(b.body.post), inv):
                out.append(Violation(path + ("body",), "WhileBodyPost", "body post ≠ invariant"))
            if not _same_conjunct_multiset(
                conjuncts(node.post), inv + conjuncts(negate(b.guard))
            ):
                out.append(Violation(path, "WhileExitPost", "post ≠ invariant ∧ ¬guard"))
        elif isinstance(b, Assignment):
            pass  # arity/sorts enforced at construction
        # metavariables may only appear in assignment right-hand sides
        if not isinstance(b, Assignment):
            if has_metavars(node.pre) or has_metavars(node.post):
                out.append(Violation(path, "MetaVarPlacement", "metavariable in annotation"))
        if isinstance(b, While):
            for i in b.invariants:
                if has_metavars(i):
                    out.append(Violation(path, "MetaVarPlacement", "metavariable in invariant"))
            if has_metavars(b.guard):
                out.append(Violation(path, "MetaVarPlacement", "metavariable in guard"))
        if isinstance(b, If):
            for g, _ in b.branches:
                if has_metavars(g):
                    out.append(Violation(path, "MetaVarPlacement", "metavariable in guard"))
    return out


# --- unknowns -------------------------------------------------------------------


def collect_unknowns(p: AnnotatedProgram) -> list[tuple[Path, str, Expr, Expr]]:
    """All UnkProg nodes in document order as (path, tag, pre, post)."""
    return [
        (path, node.body.tag, node.pre, node.post)
        for path, node in p.walk()
        if isinstance(node.body, UnkProg)
    ]


def next_unknown_index(p: AnnotatedProgram) -> int:
    """Next free numeric suffix for fresh fragment tags (S0, S1, …)."""
    import re

    best = -1
    for _, tag, _, _ in collect_unknowns(p):
        m = re.fullmatch(r"[A-Za-z]+(\d+)", tag)
        if m:
            best = max(best, int(m.group(1)))
    return best + 1


def program_metavars(p: AnnotatedProgram) -> set[tuple[str, Sort]]:
    from calx.formula import meta_vars

    out: set = set()
    for _, node in p.walk():
        b = node.body
        if isinstance(b, Assignment):
            for e in b.exprs:
                out |= meta_vars(e)
        out |= meta_vars(node.pre)
        out |= meta_vars(node.post)
    return out


# --- annotation views -------------------------------------------------------------


@dataclass(frozen=True)
class AnnotationView:
    """Which (path, role) annotation slots a display mode exposes.

    Roles: "pre"/"post" on the outermost program, "invariant" on loops,
    "mid:<k>" for the assertion between components k and k+1 of a
    Composition.
    """

    mode: str
    visible: frozenset[tuple[Path, str]]


def minimal_annotations(p: AnnotatedProgram) -> AnnotationView:
    """The three annotation families everything else can be rebuilt from:
    outermost spec, loop invariants, composition intermediate assertions."""
    vis: set[tuple[Path, str]] = {((), "pre"), ((), "post")}
    for path, node in p.walk():
        b = node.body
        if isinstance(b, While):
            vis.add((path, "invariant"))
        elif isinstance(b, Composition):
            for k in range(len(b.components) - 1):
                vis.add((path, f"mid:{k}"))
    return AnnotationView("minimal", frozenset(vis))


def full_annotations(p: AnnotatedProgram) -> AnnotationView:
    vis: set[tuple[Path, str]] = set()
    for path, _ in p.walk():
        vis.add((path, "pre"))
        vis.add((path, "post"))
    view = minimal_annotations(p)
    return AnnotationView("full", frozenset(vis) | view.visible)


# Sparse skeletons: the program structure with only the annotations a view
# exposes.  Reconstruction re-derives every hidden pre/post purely from the
# structure — no substitution pass is needed.


@dataclass(frozen=True)
class SparseNode:
    construct: str
    tag: Optional[str] = None
    targets: tuple = ()
    exprs: tuple = ()
    guards: tuple = ()
    invariants: tuple = ()
    guard: Optional[Expr] = None
    bound: Optional[Expr] = None
    children: tuple["SparseNode", ...] = ()
    mids: tuple = ()
    pre: Optional[Expr] = None
    post: Optional[Expr] = None


def sparsify(p: AnnotatedProgram, view: AnnotationView, path: Path = ()) -> SparseNode:
    b = p.body
    pre = p.pre if (path, "pre") in view.visible else None
    post = p.post if (path, "post") in view.visible else None
    if isinstance(b, Skip):
        return SparseNode("skip", pre=pre, post=post)
    if isinstance(b, UnkProg):
        return SparseNode("unknown", tag=b.tag, pre=pre, post=post)
    if isinstance(b, Assignment):
        return SparseNode("assign", targets=b.targets, exprs=b.exprs, pre=pre, post=post)
    if isinstance(b, Composition):
        mids = tuple(
            b.components[k].post if (path, f"mid:{k}") in view.visible else None
            for k in range(len(b.components) - 1)
        )
        kids = tuple(
            sparsify(c, view, path + (i,)) for i, c in enumerate(b.components)
        )
        return SparseNode("seq", children=kids, mids=mids, pre=pre, post=post)
    if isinstance(b, If):
        kids = tuple(sparsify(c, view, path + (i,)) for i, (_, c) in enumerate(b.branches))
        return SparseNode("if", guards=tuple(g for g, _ in b.branches), children=kids, pre=pre, post=post)
    if isinstance(b, While):
        inv = b.invariants if (path, "invariant") in view.visible else ()
        return SparseNode(
            "while",
            invariants=inv,
            guard=b.guard,
            bound=b.bound,
            children=(sparsify(b.body, view, path + ("body",)),),
            pre=pre,
            post=post,
        )
    raise TypeError(type(b))


def reconstruct_annotations(sparse: SparseNode) -> AnnotatedProgram:
    """Rebuild the fully annotated program from a minimal-view skeleton.

    Hidden annotations are inferred downward: composition boundaries come from
    the recorded intermediate assertions, branch bodies from pre∧guard / post,
    loop bodies from invariant∧guard / invariant.
    """
    if sparse.pre is None or sparse.post is None:
        raise ValueError("outermost pre/post must be visible")
    return _rebuild(sparse, sparse.pre, sparse.post)


def _rebuild(s: SparseNode, pre: Expr, post: Expr) -> AnnotatedProgram:
    pre = s.pre if s.pre is not None else pre
    post = s.post if s.post is not None else post
    if s.construct == "skip":
        return AnnotatedProgram(pre, post, Skip())
    if s.construct == "unknown":
        return AnnotatedProgram(pre, post, UnkProg(s.tag or "S"))
    if s.construct == "assign":
        return AnnotatedProgram(pre, post, Assignment(s.targets, s.exprs))
    if s.construct == "seq":
        bounds = [pre]
        for k, mid in enumerate(s.mids):
            hint = mid if mid is not None else s.children[k + 1].pre
            if hint is None:
                hint = s.children[k].post
            if hint is None:
                raise ValueError(f"intermediate assertion {k} is not recoverable")
            bounds.append(hint)
        bounds.append(post)
        comps = tuple(
            _rebuild(c, bounds[k], bounds[k + 1]) for k, c in enumerate(s.children)
        )
        return AnnotatedProgram(pre, post, Composition(comps))
    if s.construct == "if":
        branches = tuple(
            (g, _rebuild(c, conj(conjuncts(pre) + conjuncts(g)), post))
            for g, c in zip(s.guards, s.children)
        )
        return AnnotatedProgram(pre, post, If(branches))
    if s.construct == "while":
        if not s.invariants:
            raise ValueError("loop invariants must be visible")
        inv = [c for i in s.invariants for c in conjuncts(i)]
        body = _rebuild(
            s.children[0],
            conj(inv + conjuncts(s.guard)),
            conj(inv),
        )
        return AnnotatedProgram(
            pre, post, While(s.invariants, s.guard, body, s.bound)
        )
    raise ValueError(s.construct)
