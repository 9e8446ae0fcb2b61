"""The tactic engine: the only producer of new derivation states.

A state is either in program mode (an annotated program under construction)
or formula mode (a stack of calculation frames opened on one proof
obligation).  Tactics are pure: they validate, build a new state, discharge
the side conditions they induce, and either return the new state with a
report or raise without leaving anything behind.

Frame polarity governs which step relations are sound: a positive frame may
strengthen (⇐) or rewrite (≡), a negative frame may weaken (⇒) or rewrite,
a frame opened inside an ≡ or arithmetic context rewrites only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Callable, Optional

from calx.errors import (
    ChainBroken,
    ConstNotPresent,
    Inapplicable,
    MetaVarNotAllowed,
    NameClash,
    NoSuchObligation,
    NotAConjunction,
    ParamValidation,
    ParseError,
    SideConditionFailed,
    SortError,
    UnboundMetaVar,
    UnknownTactic,
)
from calx.formula import (
    ArrayRead,
    BinOp,
    BOOL,
    conj,
    conjuncts,
    Expr,
    free_vars,
    has_metavars,
    instantiate_metavars,
    is_meta_name,
    negate,
    parse_declarations,
    parse_formula,
    parse_sort,
    Quantified,
    Sort,
    split_top,
    substitute,
    Substitution,
    UnaryOp,
    Var,
)
from calx.formula.parse import scan_metavar_names
from calx.gcl import (
    AnnotatedProgram,
    ArrayTarget,
    Assignment,
    check_wellformed,
    Composition,
    If,
    mk_specification,
    next_unknown_index,
    parse_path,
    Path,
    path_text,
    program_metavars,
    Skip,
    UnkProg,
    While,
)
from calx.simplify import RewriteRecord, simplify_auto
from calx.wp import generate_obligations, ProofObligation, wp

POSITIVE = "positive"
NEGATIVE = "negative"
EQUIV_ONLY = "equivalence"

_FLIP = {POSITIVE: NEGATIVE, NEGATIVE: POSITIVE, EQUIV_ONLY: EQUIV_ONLY}
_ALLOWED_RELS = {
    POSITIVE: {"≡", "⇐"},
    NEGATIVE: {"≡", "⇒"},
    EQUIV_ONLY: {"≡"},
}


# --- state -----------------------------------------------------------------------


@dataclass(frozen=True)
class Declarations:
    entries: tuple[tuple[str, Sort], ...] = ()

    def env(self) -> dict[str, Sort]:
        return dict(self.entries)

    def __contains__(self, name: str) -> bool:
        return any(n == name for n, _ in self.entries)

    def sort_of(self, name: str) -> Sort:
        for n, s in self.entries:
            if n == name:
                return s
        raise KeyError(name)

    def with_added(self, name: str, sort: Sort) -> "Declarations":
        if name in self:
            raise NameClash(f"'{name}' is already declared")
        return Declarations(self.entries + ((name, sort),))

    def without(self, names: set[str]) -> "Declarations":
        return Declarations(tuple((n, s) for n, s in self.entries if n not in names))


@dataclass(frozen=True)
class Step:
    relation: str  # ≡, ⇒ or ⇐ (= for Int currents, rendered ≡)
    formula: Expr
    justification: str
    records: tuple[RewriteRecord, ...] = ()


@dataclass(frozen=True)
class Frame:
    """One calculation: assumptions ⊢ initial —steps→ current."""

    assumptions: tuple[Expr, ...]
    initial: Expr
    steps: tuple[Step, ...] = ()
    focus_path: Optional[tuple[int, ...]] = None
    polarity: str = POSITIVE
    bound_vars: tuple[tuple[str, Sort], ...] = ()

    @property
    def current(self) -> Expr:
        return self.steps[-1].formula if self.steps else self.initial


@dataclass(frozen=True)
class DerivationState:
    program: AnnotatedProgram
    decls: Declarations
    frames: tuple[Frame, ...] = ()
    obligation_label: Optional[str] = None

    @property
    def mode(self) -> str:
        return "formula" if self.frames else "program"

    @property
    def pending_metavars(self) -> tuple[tuple[str, Sort], ...]:
        return tuple(sorted(program_metavars(self.program)))


@dataclass(frozen=True)
class TacticInvocation:
    name: str
    params: tuple[tuple[str, str], ...] = ()

    def get(self, key: str) -> Optional[str]:
        for k, v in self.params:
            if k == key:
                return v
        return None

    def render(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.params)
        return f"{self.name}{{{inner}}}"


@dataclass(frozen=True)
class TacticReport:
    messages: tuple[str, ...] = ()
    obligations: tuple[ProofObligation, ...] = ()

    def summary(self) -> str:
        return "; ".join(self.messages)


# --- registry ----------------------------------------------------------------------


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str  # formula | exprs | targets | idents | indices | ident | sort | path | label | decls | relation | program
    required: bool = True
    help: str = ""


@dataclass(frozen=True)
class TacticDef:
    name: str
    mode: str  # root | program | formula
    params: tuple[ParamSpec, ...]
    summary: str
    fn: Callable
    variadic: bool = False  # accepts metavariable bindings as extra keys

    def metadata(self) -> dict:
        return {
            "name": self.name,
            "mode": self.mode,
            "summary": self.summary,
            "variadic": self.variadic,
            "params": [
                {"name": p.name, "kind": p.kind, "required": p.required, "help": p.help}
                for p in self.params
            ],
        }


REGISTRY: dict[str, TacticDef] = {}


def _tactic(name, mode, params, summary, variadic=False):
    def wrap(fn):
        REGISTRY[name] = TacticDef(name, mode, tuple(params), summary, fn, variadic)
        return fn

    return wrap


def registry_metadata() -> list[dict]:
    return [REGISTRY[k].metadata() for k in sorted(REGISTRY)]


# --- obligation policy ---------------------------------------------------------------


def _audit(program: AnnotatedProgram, checker, require_valid: bool = False):
    """Check every ground obligation; reject invalid ones (and, at step-out,
    anything short of valid)."""
    resolved = []
    for po in generate_obligations(program):
        r = checker.check_obligation(po)
        resolved.append(r)
        if r.always_open:
            continue
        if r.status == "invalid":
            raise SideConditionFailed(r.label, checker.check(r.hypotheses, r.goal))
        if require_valid and r.status not in ("valid",):
            raise SideConditionFailed(
                r.label, checker.check(r.hypotheses, r.goal),
                message=f"obligation '{r.label}' is {r.status}, not valid",
            )
    return tuple(resolved)


def _assert_wellformed(program: AnnotatedProgram) -> None:
    bad = check_wellformed(program)
    if bad:  # pragma: no cover - guards tactic implementation bugs
        raise Inapplicable("tactic built an ill-formed program: " + "; ".join(map(str, bad)))


# --- param handling -------------------------------------------------------------------


def _require(inv: TacticInvocation, spec: ParamSpec) -> Optional[str]:
    v = inv.get(spec.name)
    if v is None and spec.required:
        raise ParamValidation(f"{inv.name}: missing parameter '{spec.name}'")
    return v


def _target_unknown(state: DerivationState, inv: TacticInvocation) -> tuple[Path, AnnotatedProgram]:
    at = inv.get("at")
    if at is not None:
        path = parse_path(at)
        node = state.program.at(path)
    else:
        spots = [
            (p, n) for p, n in state.program.walk() if isinstance(n.body, UnkProg)
        ]
        if not spots:
            raise Inapplicable("no unknown fragment to work on")
        path, node = spots[0]
    if not isinstance(node.body, UnkProg):
        raise Inapplicable(f"{path_text(path)} is not an unknown fragment")
    return path, node


def _parse_targets(text: str, env: dict[str, Sort]) -> tuple:
    targets = []
    for part in parse_expr_list_texts(text):
        e = parse_formula(part, env)
        if isinstance(e, Var):
            targets.append(e)
        elif isinstance(e, ArrayRead) and isinstance(e.array, Var):
            targets.append(ArrayTarget(e.array, e.index))
        else:
            raise ParamValidation(f"'{part.strip()}' is not an assignable target")
    return tuple(targets)


def parse_expr_list_texts(text: str) -> list[str]:
    t = text.strip()
    if t.startswith("[") and t.endswith("]"):
        t = t[1:-1]
    if not t.strip():
        return []
    return split_top(t)


def _parse_exprs_with_metavars(
    text: str, decls: Declarations, target_sorts: list[Sort]
) -> tuple[list[Expr], list[tuple[str, Sort]]]:
    """Assignment right-hand sides; fresh primed names take the sort of the
    positional target."""
    parts = parse_expr_list_texts(text)
    if len(parts) != len(target_sorts):
        raise ParamValidation(
            f"{len(target_sorts)} targets but {len(parts)} expressions"
        )
    new_metas: dict[str, Sort] = {}
    for part, sort in zip(parts, target_sorts):
        for name in scan_metavar_names(part):
            if name in decls or name in new_metas:
                continue
            new_metas[name] = sort
    env = decls.env() | new_metas
    exprs = [parse_formula(p, env) for p in parts]
    return exprs, sorted(new_metas.items())


_REL_ALIASES = {
    "≡": "≡", "\\equiv": "≡", "equiv": "≡", "=": "≡",
    "⇒": "⇒", "\\Rightarrow": "⇒", "implies": "⇒",
    "⇐": "⇐", "\\Leftarrow": "⇐", "follows": "⇐",
}


# --- tactics: program construction ------------------------------------------------------


@_tactic(
    "init4",
    "root",
    [
        ParamSpec("pre", "formula", help="precondition of the program to derive"),
        ParamSpec("post", "formula", help="postcondition of the program to derive"),
        ParamSpec("vars", "decls", help="variable declarations, e.g. [n:Int, f:Array(Bool)]"),
    ],
    "start a derivation from a formal specification",
)
def _t_init4(state, inv: TacticInvocation, checker):
    if state is not None:
        raise Inapplicable("init4 starts a derivation; this session already has one")
    decls = Declarations(tuple(parse_declarations(_require(inv, REGISTRY["init4"].params[2]))))
    for n, _ in decls.entries:
        if is_meta_name(n):
            raise MetaVarNotAllowed("specification variables cannot be metavariables")
    env = decls.env()
    pre = parse_formula(_require(inv, REGISTRY["init4"].params[0]), env)
    post = parse_formula(_require(inv, REGISTRY["init4"].params[1]), env)
    program = mk_specification(pre, post)
    new = DerivationState(program=program, decls=decls)
    return new, TacticReport(("specification created",), _audit(program, checker))


@_tactic(
    "replaceConstantByVariable",
    "program",
    [
        ParamSpec("const", "ident", help="constant to replace"),
        ParamSpec("fresh", "ident", help="fresh variable name"),
        ParamSpec("bounds", "formula", help="bounds tying the fresh variable down"),
        ParamSpec("at", "path", required=False, help="unknown fragment to transform"),
    ],
    "replace a constant in the postcondition by a fresh bounded variable",
)
def _t_replace_const(state: DerivationState, inv, checker):
    path, node = _target_unknown(state, inv)
    const = _require(inv, REGISTRY[inv.name].params[0]).strip()
    fresh = _require(inv, REGISTRY[inv.name].params[1]).strip()
    if const not in state.decls:
        raise ParamValidation(f"'{const}' is not declared")
    if fresh in state.decls or is_meta_name(fresh):
        raise NameClash(f"'{fresh}' is not fresh")
    if not re.fullmatch(r"[a-zA-Z][a-zA-Z0-9_]*", fresh):
        raise ParamValidation(f"bad identifier '{fresh}'")
    sort = state.decls.sort_of(const)
    if const not in {n for n, _ in free_vars(node.post)}:
        raise ConstNotPresent(f"'{const}' does not occur in the postcondition")
    decls = state.decls.with_added(fresh, sort)
    env = decls.env()
    bounds = parse_formula(_require(inv, REGISTRY[inv.name].params[2]), env)
    fresh_var = Var(fresh, sort)
    rewritten = substitute(node.post, Substitution.of((const, fresh_var)))
    post = conj(
        conjuncts(rewritten)
        + conjuncts(bounds)
        + [BinOp("=", fresh_var, Var(const, sort))]
    )
    program = state.program.with_node(path, AnnotatedProgram(node.pre, post, node.body))
    _assert_wellformed(program)
    new = replace(state, program=program, decls=decls)
    return new, TacticReport(
        (f"replaced {const} by {fresh} at {path_text(path)}",),
        _audit(program, checker),
    )


@_tactic(
    "takeConjunctsAsInvariants",
    "program",
    [
        ParamSpec("which", "indices", help="postcondition conjuncts to keep invariant"),
        ParamSpec("at", "path", required=False),
    ],
    "turn selected postcondition conjuncts into loop invariants",
)
def _t_take_conjuncts(state: DerivationState, inv, checker):
    path, node = _target_unknown(state, inv)
    parts = conjuncts(node.post)
    if len(parts) < 2:
        raise NotAConjunction("postcondition must be a conjunction")
    raw = _require(inv, REGISTRY[inv.name].params[0])
    try:
        which = [int(x) for x in parse_expr_list_texts(raw)]
    except ValueError:
        raise ParamValidation(f"'which' must be conjunct indices, got {raw!r}")
    if not which:
        raise ParamValidation("'which' must select at least one conjunct")
    if len(set(which)) != len(which) or any(not 0 <= i < len(parts) for i in which):
        raise ParamValidation(f"bad conjunct indices {which} for {len(parts)} conjuncts")
    invariants = [parts[i] for i in which]
    leftovers = [p for i, p in enumerate(parts) if i not in which]
    if not leftovers:
        raise ParamValidation("the guard needs at least one leftover conjunct")
    guard = negate(leftovers[0] if len(leftovers) == 1 else conj(leftovers))
    k = next_unknown_index(state.program)
    body = AnnotatedProgram(
        conj(invariants + [guard]), conj(invariants), UnkProg(f"S{k}")
    )
    loop = AnnotatedProgram(
        conj(invariants),
        node.post,
        While(tuple(invariants), guard, body),
    )
    init = AnnotatedProgram(node.pre, conj(invariants), UnkProg(f"Init{k}"))
    program = state.program.with_node(
        path, AnnotatedProgram(node.pre, node.post, Composition((init, loop)))
    )
    _assert_wellformed(program)
    new = replace(state, program=program)
    names = ", ".join(f"P{i}" for i in range(len(invariants)))
    return new, TacticReport(
        (f"loop with invariants {names} at {path_text(path)}",),
        _audit(program, checker),
    )


@_tactic(
    "introAssignment",
    "program",
    [
        ParamSpec("targets", "targets", help="assignment targets, e.g. [r, n]"),
        ParamSpec("exprs", "exprs", help="right-hand sides; may contain metavariables"),
        ParamSpec("at", "path", required=False),
    ],
    "replace an unknown fragment by a simultaneous assignment",
)
def _t_intro_assignment(state: DerivationState, inv, checker):
    path, node = _target_unknown(state, inv)
    env = state.decls.env()
    targets = _parse_targets(_require(inv, REGISTRY[inv.name].params[0]), env)
    exprs, new_metas = _parse_exprs_with_metavars(
        _require(inv, REGISTRY[inv.name].params[1]),
        state.decls,
        [t.sort for t in targets],
    )
    assign = Assignment(targets, tuple(exprs))
    program = state.program.with_node(
        path, AnnotatedProgram(node.pre, node.post, assign)
    )
    _assert_wellformed(program)
    decls = state.decls
    for n, s in new_metas:
        decls = decls.with_added(n, s)
    new = replace(state, program=program, decls=decls)
    msg = f"assignment at {path_text(path)}"
    if new_metas:
        msg += " with metavariables " + ", ".join(n for n, _ in new_metas)
    return new, TacticReport((msg,), _audit(program, checker))


@_tactic(
    "splitComposition",
    "program",
    [
        ParamSpec("assertion", "formula", help="intermediate assertion between the halves"),
        ParamSpec("at", "path", required=False),
    ],
    "split an unknown fragment into two around an intermediate assertion",
)
def _t_split_composition(state: DerivationState, inv, checker):
    path, node = _target_unknown(state, inv)
    mid = parse_formula(_require(inv, REGISTRY[inv.name].params[0]), state.decls.env())
    if has_metavars(mid):
        raise MetaVarNotAllowed("intermediate assertions cannot contain metavariables")
    k = next_unknown_index(state.program)
    first = AnnotatedProgram(node.pre, mid, UnkProg(f"S{k}"))
    second = AnnotatedProgram(mid, node.post, UnkProg(f"S{k + 1}"))
    program = state.program.with_node(
        path, AnnotatedProgram(node.pre, node.post, Composition((first, second)))
    )
    _assert_wellformed(program)
    new = replace(state, program=program)
    return new, TacticReport(
        (f"split {path_text(path)} into S{k}; S{k + 1}",),
        _audit(program, checker),
    )


@_tactic(
    "strengthenInvariant",
    "program",
    [
        ParamSpec("name", "ident", help="fresh variable to introduce"),
        ParamSpec("sort", "sort", help="its sort"),
        ParamSpec("invariant", "formula", help="the strengthening conjunct"),
        ParamSpec("at", "path", required=False),
    ],
    "introduce a fresh variable and strengthen the specification with a new invariant",
)
def _t_strengthen(state: DerivationState, inv, checker):
    at = inv.get("at")
    path = parse_path(at) if at is not None else ()
    node = state.program.at(path) if at is not None else None
    if node is None:
        path, node = _target_unknown(state, inv)
    if isinstance(node.body, While):
        raise Inapplicable(
            "strengthen at the specification node above the loop (backtrack first); "
            "fragments derived under the weaker invariant would be invalidated"
        )
    if not isinstance(node.body, UnkProg):
        raise Inapplicable(f"{path_text(path)} is not a specification fragment")
    name = _require(inv, REGISTRY[inv.name].params[0]).strip()
    if name in state.decls or is_meta_name(name):
        raise NameClash(f"'{name}' is not fresh")
    sort = parse_sort(_require(inv, REGISTRY[inv.name].params[1]))
    decls = state.decls.with_added(name, sort)
    strengthening = parse_formula(
        _require(inv, REGISTRY[inv.name].params[2]), decls.env()
    )
    if has_metavars(strengthening):
        raise MetaVarNotAllowed("invariants cannot contain metavariables")
    post = conj(conjuncts(node.post) + conjuncts(strengthening))
    program = state.program.with_node(
        path, AnnotatedProgram(node.pre, post, node.body)
    )
    _assert_wellformed(program)
    new = replace(state, program=program, decls=decls)
    return new, TacticReport(
        (f"strengthened {path_text(path)} with fresh {name} : {sort}",),
        _audit(program, checker),
    )


@_tactic(
    "guessProgram",
    "program",
    [
        ParamSpec("program", "program", help="skip, or an assignment like s := s \\wedge f[n]"),
        ParamSpec("at", "path", required=False),
    ],
    "propose a fragment directly; accepted only if its obligation discharges",
)
def _t_guess_program(state: DerivationState, inv, checker):
    path, node = _target_unknown(state, inv)
    text = _require(inv, REGISTRY[inv.name].params[0]).strip()
    if text.startswith("{") and text.endswith("}"):
        text = text[1:-1].strip()
    env = state.decls.env()
    if text == "skip":
        candidate = Skip()
    elif ":=" in text:
        lhs, _, rhs = text.partition(":=")
        targets = _parse_targets(lhs, env)
        exprs = [parse_formula(p, env) for p in split_top(rhs)]
        candidate = Assignment(targets, tuple(exprs))
    else:
        raise ParamValidation("guessable fragments are 'skip' or an assignment")
    goal = wp(candidate, node.post)
    verdict = checker.check((node.pre,), goal)
    if not verdict.is_valid:
        raise SideConditionFailed(f"guess@{path_text(path)}", verdict)
    program = state.program.with_node(
        path, AnnotatedProgram(node.pre, node.post, candidate)
    )
    _assert_wellformed(program)
    new = replace(state, program=program)
    return new, TacticReport(
        (f"accepted {text} at {path_text(path)}",),
        _audit(program, checker),
    )


# --- tactics: formula mode ------------------------------------------------------------------


@_tactic(
    "stepInto",
    "program",
    [ParamSpec("label", "label", help="an open obligation containing metavariables")],
    "enter formula mode on a proof obligation",
)
def _t_step_into(state: DerivationState, inv, checker):
    label = _require(inv, REGISTRY[inv.name].params[0]).strip()
    obls = generate_obligations(state.program)
    match = [o for o in obls if o.label == label]
    if not match:
        raise NoSuchObligation(
            f"no obligation '{label}'; have: " + ", ".join(o.label for o in obls)
        )
    po = match[0]
    if po.always_open:
        raise Inapplicable("unknown-fragment obligations are closed by deriving programs")
    if not po.has_metavars:
        raise Inapplicable("step into is for open obligations with metavariables")
    frame = Frame(assumptions=po.hypotheses, initial=po.goal)
    new = replace(state, frames=(frame,), obligation_label=label)
    return new, TacticReport((f"stepped into {label}",))


def _focus_walk(current: Expr, path: tuple[int, ...], polarity: str):
    released: list[Expr] = []
    bound: list[tuple[str, Sort]] = []
    node = current
    for seg in path:
        kids = node.children()
        if not 0 <= seg < len(kids):
            raise ParamValidation(f"no subterm {seg} under {type(node).__name__}")
        if isinstance(node, BinOp):
            op = node.op
            if op == "⇒":
                if seg == 1:
                    released.extend(conjuncts(node.lhs))
                else:
                    polarity = _FLIP[polarity]
            elif op == "∧":
                released.extend(conjuncts(node.rhs if seg == 0 else node.lhs))
            elif op == "∨":
                released.extend(conjuncts(negate(node.rhs if seg == 0 else node.lhs)))
            else:  # ≡, relational and arithmetic contexts admit ≡ steps only
                polarity = EQUIV_ONLY
        elif isinstance(node, UnaryOp):
            polarity = _FLIP[polarity] if node.op == "¬" else EQUIV_ONLY
        elif isinstance(node, Quantified):
            bound.extend(node.bound)
            if node.op.name == "forall":
                if seg == 0:
                    polarity = _FLIP[polarity]
                else:
                    released.extend(conjuncts(node.range))
            elif node.op.name == "exists":
                if seg == 1:
                    released.extend(conjuncts(node.range))
            else:
                if seg == 1:
                    released.extend(conjuncts(node.range))
                polarity = EQUIV_ONLY
        else:
            polarity = EQUIV_ONLY
        node = kids[seg]
    return node, released, bound, polarity


@_tactic(
    "focus",
    "formula",
    [ParamSpec("path", "path", help="subterm path in the current formula, e.g. 1.0")],
    "open an inner frame on a subformula, releasing the facts its position guarantees",
)
def _t_focus(state: DerivationState, inv, checker):
    frame = state.frames[-1]
    raw = _require(inv, REGISTRY[inv.name].params[0]).strip()
    try:
        path = tuple(int(x) for x in raw.split(".")) if raw not in ("", "·") else ()
    except ValueError:
        raise ParamValidation(f"bad formula path {raw!r}")
    sub, released, bound, polarity = _focus_walk(frame.current, path, frame.polarity)
    existing = {n for n, _ in frame.bound_vars} | {n for n, _ in state.decls.entries}
    for n, _ in bound:
        if n in existing:
            raise Inapplicable(
                f"focusing would capture '{n}'; the binder shadows a variable in scope"
            )
    inner = Frame(
        assumptions=frame.assumptions + tuple(released),
        initial=sub,
        focus_path=path,
        polarity=polarity,
        bound_vars=frame.bound_vars + tuple(bound),
    )
    new = replace(state, frames=state.frames + (inner,))
    msg = f"focused {'.'.join(map(str, path)) or '·'} ({polarity})"
    if released:
        msg += f", released {len(released)} assumption(s)"
    return new, TacticReport((msg,))


def _step_goal(cur: Expr, nxt: Expr, rel: str) -> Expr:
    if cur.sort != nxt.sort:
        raise SortError(f"step changes sort: {cur.sort} vs {nxt.sort}")
    if cur.sort == BOOL:
        if rel == "≡":
            return BinOp("≡", cur, nxt)
        if rel == "⇒":
            return BinOp("⇒", cur, nxt)
        return BinOp("⇒", nxt, cur)
    if rel != "≡":
        raise Inapplicable("directional steps need a Bool formula")
    return BinOp("=", cur, nxt)


@_tactic(
    "guessFormula",
    "formula",
    [
        ParamSpec("next", "formula", help="the next line of the calculation"),
        ParamSpec("rel", "relation", help="≡, ⇒ or ⇐ (must fit the frame polarity)"),
    ],
    "step to a given formula; accepted only if the relation discharges",
)
def _t_guess_formula(state: DerivationState, inv, checker):
    frame = state.frames[-1]
    rel_raw = _require(inv, REGISTRY[inv.name].params[1]).strip()
    rel = _REL_ALIASES.get(rel_raw)
    if rel is None:
        raise ParamValidation(f"unknown relation {rel_raw!r}")
    if rel not in _ALLOWED_RELS[frame.polarity]:
        raise Inapplicable(f"{rel} steps are not sound in a {frame.polarity} frame")
    env = state.decls.env() | dict(frame.bound_vars)
    nxt = parse_formula(_require(inv, REGISTRY[inv.name].params[0]), env)
    goal = _step_goal(frame.current, nxt, rel)
    verdict = checker.check(frame.assumptions, goal)
    if not verdict.is_valid:
        raise SideConditionFailed("step", verdict)
    step = Step(rel, nxt, "guess")
    new = replace(
        state,
        frames=state.frames[:-1] + (replace(frame, steps=frame.steps + (step,)),),
    )
    return new, TacticReport((f"{rel} step accepted",))


@_tactic(
    "simplifyAuto",
    "formula",
    [],
    "rewrite the current formula to normal form with the bundled rule catalog",
)
def _t_simplify_auto(state: DerivationState, inv, checker):
    frame = state.frames[-1]
    out, records = simplify_auto(frame.current, frame.assumptions, checker)
    if out == frame.current:
        return state, TacticReport(("already in normal form",))
    step = Step("≡", out, "simplifyAuto", tuple(records))
    new = replace(
        state,
        frames=state.frames[:-1] + (replace(frame, steps=frame.steps + (step,)),),
    )
    return new, TacticReport(
        (f"applied {len(records)} rewrite(s): " + ", ".join(r.rule for r in records),)
    )


def _compose_relation(frame: Frame) -> str:
    if all(s.relation == "≡" for s in frame.steps):
        return "≡"
    return "⇐" if frame.polarity == POSITIVE else "⇒"


def _pop_frame(state: DerivationState) -> DerivationState:
    child = state.frames[-1]
    parent = state.frames[-2]
    rel = _compose_relation(child)
    new_current = parent.current.with_subterm(child.focus_path, child.current)
    parent_rel = "≡" if rel == "≡" else ("⇐" if parent.polarity == POSITIVE else "⇒")
    step = Step(parent_rel, new_current, "unfocus")
    return replace(
        state,
        frames=state.frames[:-2] + (replace(parent, steps=parent.steps + (step,)),),
    )


@_tactic(
    "unfocus",
    "formula",
    [],
    "close the innermost frame, substituting its result back",
)
def _t_unfocus(state: DerivationState, inv, checker):
    if len(state.frames) < 2:
        raise Inapplicable("no inner frame to close")
    new = _pop_frame(state)
    return new, TacticReport(("frame closed",))


def _validate_frames(state: DerivationState, checker) -> None:
    for fi, frame in enumerate(state.frames):
        prev = frame.initial
        for si, step in enumerate(frame.steps):
            if step.justification == "guess":
                goal = _step_goal(prev, step.formula, step.relation)
                if not checker.check(frame.assumptions, goal).is_valid:
                    raise ChainBroken(fi, si)
            prev = step.formula


@_tactic(
    "stepOut",
    "formula",
    [],
    "bind every pending metavariable and return to program mode",
    variadic=True,
)
def _t_step_out(state: DerivationState, inv, checker):
    _validate_frames(state, checker)
    while len(state.frames) > 1:
        state = _pop_frame(state)
    frame = state.frames[0]
    pending = dict(state.pending_metavars)
    bindings: list[tuple[str, Expr]] = []
    ignored: list[str] = []
    decl_env = state.decls.env()
    for key, raw in inv.params:
        if not is_meta_name(key):
            raise ParamValidation(f"stepOut parameters are metavariable bindings, got '{key}'")
        value = parse_formula(raw, decl_env)
        if has_metavars(value):
            raise ParamValidation(f"binding for {key} must be metavariable-free")
        if key not in pending:
            ignored.append(key)
            continue
        if value.sort != pending[key]:
            raise SortError(f"{key} : {pending[key]} cannot be bound to {value.sort}")
        bindings.append((key, value))
    missing = sorted(set(pending) - {k for k, _ in bindings})
    if missing:
        raise UnboundMetaVar("no binding for " + ", ".join(missing))
    sub = Substitution(tuple(bindings))
    closed = instantiate_metavars(frame.current, sub)
    hyps = tuple(
        instantiate_metavars(h, sub) if has_metavars(h) else h
        for h in frame.assumptions
    )
    verdict = checker.check(hyps, closed)
    if not verdict.is_valid:
        raise SideConditionFailed("stepOut closure", verdict)
    program = _instantiate_program(state.program, sub)
    _assert_wellformed(program)
    decls = state.decls.without(set(pending))
    new = DerivationState(program=program, decls=decls)
    resolved = _audit(program, checker, require_valid=False)
    # everything the instantiation touched must now be valid
    for po in resolved:
        if not po.always_open and po.status != "valid":
            raise SideConditionFailed(
                po.label,
                checker.check(po.hypotheses, po.goal),
                message=f"after instantiation, '{po.label}' is {po.status}",
            )
    msgs = ["metavariables bound: " + ", ".join(k for k, _ in bindings)]
    if ignored:
        msgs.append("ignored bindings: " + ", ".join(ignored))
    return new, TacticReport(tuple(msgs), resolved)


def _instantiate_program(p: AnnotatedProgram, sub: Substitution) -> AnnotatedProgram:
    b = p.body
    if isinstance(b, Assignment):
        body: object = Assignment(
            b.targets, tuple(instantiate_metavars(e, sub) for e in b.exprs)
        )
    elif isinstance(b, Composition):
        body = Composition(tuple(_instantiate_program(c, sub) for c in b.components))
    elif isinstance(b, If):
        body = If(tuple((g, _instantiate_program(c, sub)) for g, c in b.branches))
    elif isinstance(b, While):
        body = While(b.invariants, b.guard, _instantiate_program(b.body, sub), b.bound)
    else:
        body = b
    return AnnotatedProgram(p.pre, p.post, body)


# --- command text ------------------------------------------------------------------------------

_NAME_RE = re.compile(r"\s*([a-zA-Z][a-zA-Z0-9_]*)\s*\{")
_KEY_RE = re.compile(r"\s*([a-zA-Z][a-zA-Z0-9_]*'?)\s*=")


def parse_tactic(text: str, validate: bool = True) -> TacticInvocation:
    """Parse ``name{key=value, ...}`` command text.

    Values are kept verbatim (trimmed); they are interpreted against the
    tactic signature at application time, so a command parses the same way
    regardless of session state.  Nesting in (), [] and {} protects commas;
    a value may be wrapped in braces to protect top-level ones.
    """
    m = _NAME_RE.match(text)
    if not m:
        raise ParseError("expected tactic{...}", pos=0)
    name = m.group(1)
    body = text[m.end():]
    depth = 1
    for i, ch in enumerate(body):
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
            if depth == 0:
                if body[i + 1 :].strip():
                    raise ParseError("trailing input after '}'", pos=m.end() + i + 1)
                body = body[:i]
                break
    else:
        raise ParseError("unbalanced '{' in tactic command", pos=len(text))
    params: list[tuple[str, str]] = []
    if body.strip():
        for part in split_top(body):
            km = _KEY_RE.match(part)
            if not km:
                raise ParseError(f"expected key=value, got {part.strip()!r}")
            params.append((km.group(1), part[km.end():].strip()))
    keys = [k for k, _ in params]
    if len(set(keys)) != len(keys):
        raise ParseError(f"duplicate parameter in {text!r}")
    inv = TacticInvocation(name, tuple(params))
    if validate:
        td = REGISTRY.get(name)
        if td is None:
            raise UnknownTactic(f"unknown tactic '{name}'")
        for p in td.params:
            if p.required and inv.get(p.name) is None:
                raise ParamValidation(f"{name}: missing parameter '{p.name}'")
    return inv


# --- dispatcher -------------------------------------------------------------------------------


def apply_tactic(
    state: Optional[DerivationState], inv: TacticInvocation, checker
) -> tuple[DerivationState, TacticReport]:
    """Validate and run one tactic.  Raises without side effects on any
    failure; the returned state is a fresh value sharing structure with the
    input."""
    td = REGISTRY.get(inv.name)
    if td is None:
        raise UnknownTactic(f"unknown tactic '{inv.name}'")
    if td.mode == "root":
        if state is not None:
            raise Inapplicable(f"{inv.name} only starts a derivation")
    else:
        if state is None:
            raise Inapplicable("start the derivation with init4 first")
        if state.mode != td.mode:
            raise Inapplicable(
                f"{inv.name} is a {td.mode}-mode tactic; the derivation is in {state.mode} mode"
            )
    known = {p.name for p in td.params}
    if not td.variadic:
        for k, _ in inv.params:
            if k not in known:
                raise ParamValidation(f"{inv.name}: unexpected parameter '{k}'")
    for p in td.params:
        if p.required and inv.get(p.name) is None:
            raise ParamValidation(f"{inv.name}: missing parameter '{p.name}'")
    return td.fn(state, inv, checker)
