"""Weakest preconditions and proof-obligation generation.

Obligation labels follow a fixed grammar so scripts and the UI can address
them:

    unknown[<tag>]                      an underived fragment's standing goal
    Skip.correctness[k]                 k-th postcondition conjunct (index
    Assignment.correctness[k]           omitted when there is only one)
    While.invariant-preservation[Pk]    loop-body obligation per invariant
    While.initiation                    loop pre establishes the invariants
    While.exit                          invariant ∧ ¬guard gives the post
    While.bound-positive / -decrease    only when a bound is supplied
    If.guards-exhaustive                some guard must hold

Obligations for an Assignment or Skip are split over the top-level conjuncts
of the postcondition (wp distributes over ∧), and when the construct sits at
the tail position of a loop body the conjuncts are the invariants, named
P0, P1, … in list order.  Duplicate labels get a stable ``#i`` suffix in
document order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from calx.errors import CalxError
from calx.formula import (
    ArrayWrite,
    BinOp,
    conj,
    conjuncts,
    Expr,
    free_vars,
    fresh_name,
    has_metavars,
    INT,
    IntLit,
    negate,
    substitute,
    Substitution,
    Var,
)
from calx.gcl import (
    AnnotatedProgram,
    ArrayTarget,
    Assignment,
    Composition,
    Construct,
    If,
    Path,
    path_text,
    Skip,
    UnkProg,
    While,
)


class UnsupportedConstruct(CalxError):
    pass


def assignment_substitution(a: Assignment) -> Substitution:
    """The simultaneous substitution an assignment induces; array-element
    targets desugar to whole-array updates."""
    pairs = []
    for t, e in zip(a.targets, a.exprs):
        if isinstance(t, ArrayTarget):
            pairs.append((t.name, ArrayWrite(t.array, t.index, e)))
        else:
            pairs.append((t.name, e))
    return Substitution(tuple(pairs))


def wp(c: Construct, post: Expr) -> Expr:
    """Dijkstra wp for loop-free, fully derived constructs.

    While and UnkProg have no closed form here — loops are specified through
    their obligations, unknowns through their spec."""
    if isinstance(c, Skip):
        return post
    if isinstance(c, Assignment):
        return substitute(post, assignment_substitution(c))
    if isinstance(c, Composition):
        out = post
        for comp in reversed(c.components):
            out = wp(comp.body, out)
        return out
    if isinstance(c, If):
        some_guard = c.branches[0][0]
        for g, _ in c.branches[1:]:
            some_guard = BinOp("∨", some_guard, g)
        parts = [some_guard]
        for g, sub in c.branches:
            parts.append(BinOp("⇒", g, wp(sub.body, post)))
        return conj(parts)
    raise UnsupportedConstruct(f"wp undefined for {type(c).__name__}")


# --- proof obligations -----------------------------------------------------------


OPEN = "open"
VALID = "valid"
INVALID = "invalid"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class ProofObligation:
    """A validity goal (∧ hypotheses) ⇒ goal with provenance.

    Obligations containing metavariables stay open until instantiated; they
    are never shipped to a solver (the finite oracle can still probe them by
    treating metavariables as rigid unknowns)."""

    label: str
    hypotheses: tuple[Expr, ...]
    goal: Expr
    origin: Path
    status: str = OPEN
    always_open: bool = False

    @property
    def has_metavars(self) -> bool:
        return any(has_metavars(h) for h in self.hypotheses) or has_metavars(self.goal)

    def key(self) -> tuple:
        return (tuple(h.alpha_key() for h in self.hypotheses), self.goal.alpha_key())

    def with_status(self, status: str) -> "ProofObligation":
        return replace(self, status=status)


def _leaf_obligations(
    node: AnnotatedProgram, path: Path, kind: str, inv_named: bool
) -> list[ProofObligation]:
    posts = conjuncts(node.post)
    out = []
    for k, ck in enumerate(posts):
        goal = ck if isinstance(node.body, Skip) else wp(node.body, ck)
        if inv_named:
            label = f"While.invariant-preservation[P{k}]"
        elif len(posts) > 1:
            label = f"{kind}.correctness[{k}]"
        else:
            label = f"{kind}.correctness"
        out.append(ProofObligation(label, (node.pre,), goal, path))
    return out


def _gen(node: AnnotatedProgram, path: Path, tail_of_loop: bool) -> list[ProofObligation]:
    b = node.body
    if isinstance(b, UnkProg):
        return [
            ProofObligation(
                f"unknown[{b.tag}]", (node.pre,), node.post, path, always_open=True
            )
        ]
    if isinstance(b, Skip):
        return _leaf_obligations(node, path, "Skip", tail_of_loop)
    if isinstance(b, Assignment):
        return _leaf_obligations(node, path, "Assignment", tail_of_loop)
    if isinstance(b, Composition):
        out: list[ProofObligation] = []
        last = len(b.components) - 1
        for k, comp in enumerate(b.components):
            out.extend(_gen(comp, path + (k,), tail_of_loop and k == last))
        return out
    if isinstance(b, If):
        some = b.branches[0][0]
        for g, _ in b.branches[1:]:
            some = BinOp("∨", some, g)
        out = [ProofObligation("If.guards-exhaustive", (node.pre,), some, path)]
        for k, (_, sub) in enumerate(b.branches):
            out.extend(_gen(sub, path + (k,), tail_of_loop))
        return out
    if isinstance(b, While):
        inv = conj([c for i in b.invariants for c in conjuncts(i)])
        out = [ProofObligation("While.initiation", (node.pre,), inv, path)]
        out.extend(_gen(b.body, path + ("body",), True))
        out.append(
            ProofObligation(
                "While.exit",
                tuple(conjuncts(inv)) + (negate(b.guard),),
                node.post,
                path,
            )
        )
        if b.bound is not None:
            hyp = tuple(conjuncts(inv)) + (b.guard,)
            out.append(
                ProofObligation(
                    "While.bound-positive",
                    hyp,
                    BinOp(">", b.bound, IntLit(0)),
                    path,
                )
            )
            taken = {n for n, _ in free_vars(b.bound)} | {
                n for p, q in ((node.pre, node.post),) for n, _ in free_vars(p) | free_vars(q)
            }
            t0 = Var(fresh_name("T", taken), INT)
            try:
                decr = wp(b.body.body, BinOp("<", b.bound, t0))
            except UnsupportedConstruct:
                decr = None
            if decr is not None:
                out.append(
                    ProofObligation(
                        "While.bound-decrease",
                        hyp + (BinOp("=", b.bound, t0),),
                        decr,
                        path,
                    )
                )
        return out
    raise TypeError(type(b))


def generate_obligations(p: AnnotatedProgram) -> list[ProofObligation]:
    """Every correctness condition of the annotated program, in document
    order, with de-duplicated labels."""
    obls = _gen(p, (), False)
    counts: dict[str, int] = {}
    for o in obls:
        counts[o.label] = counts.get(o.label, 0) + 1
    seen: dict[str, int] = {}
    out = []
    for o in obls:
        if counts[o.label] > 1:
            i = seen.get(o.label, 0)
            seen[o.label] = i + 1
            out.append(replace(o, label=f"{o.label}#{i}"))
        else:
            out.append(o)
    return out


# --- focused contexts ---------------------------------------------------------------


@dataclass(frozen=True)
class LocalContext:
    """Everything needed to derive the fragment at focus_path on its own:
    its spec plus the facts the surrounding loops and branches guarantee."""

    focus_path: Path
    pre: Expr
    post: Expr
    frame_vars: frozenset[str]
    surrounding_facts: tuple[Expr, ...]

    def describe(self) -> str:
        return f"focused {path_text(self.focus_path)}"


def extract_context(p: AnnotatedProgram, path: Path) -> LocalContext:
    """Local spec and released context of the node at `path`.

    surrounding_facts collects the invariants and guards of every While/If on
    the way down — the conservative, always-sound extraction rule.  Splicing
    any fragment that meets (pre, post) at this path leaves every other
    obligation of the program untouched.
    """
    facts: list[Expr] = []
    node = p
    for seg in path:
        b = node.body
        if isinstance(b, While):
            facts.extend(b.invariants)
            facts.append(b.guard)
        elif isinstance(b, If) and isinstance(seg, int) and 0 <= seg < len(b.branches):
            facts.append(b.branches[seg][0])
        node = node.child(seg)
    names = set()
    for e in [node.pre, node.post, *facts]:
        names |= {n for n, _ in free_vars(e)}
    return LocalContext(
        focus_path=path,
        pre=node.pre,
        post=node.post,
        frame_vars=frozenset(names),
        surrounding_facts=tuple(facts),
    )
