"""Rendering of derivation states: plain text for the REPL and golden files,
structured JSON layout for the web client.

The JSON layout is the server-authoritative view: every block carries its
node path and role so a thin client can implement selection mode, collapsing
and annotation toggling without parsing anything.
"""

from __future__ import annotations

from typing import Optional

from calx.formula import conjuncts, Expr, pretty_print
from calx.gcl import (
    AnnotatedProgram,
    AnnotationView,
    ArrayTarget,
    Assignment,
    Composition,
    full_annotations,
    If,
    minimal_annotations,
    Path,
    path_text,
    Skip,
    UnkProg,
    While,
)
from calx.tactics import DerivationState, Frame
from calx.wp import ProofObligation


def _inv_flat(w: While) -> list[Expr]:
    return [c for i in w.invariants for c in conjuncts(i)]


def _target_text(t) -> str:
    if isinstance(t, ArrayTarget):
        return f"{t.name}[{pretty_print(t.index)}]"
    return t.name


def assignment_text(a: Assignment) -> str:
    lhs = ", ".join(_target_text(t) for t in a.targets)
    rhs = ", ".join(pretty_print(e) for e in a.exprs)
    return f"{lhs} := {rhs}"


# --- program text -----------------------------------------------------------------


def render_program_text(
    p: AnnotatedProgram, view: Optional[AnnotationView] = None
) -> str:
    """Indented text form.  With a minimal view only the outer spec, the loop
    invariants and composition intermediate assertions appear; full shows
    every annotation once, between statements."""
    if view is None:
        view = full_annotations(p)
    show = view.visible
    full = view.mode == "full"
    lines: list[str] = []

    def assertion(text: str, indent: int):
        lines.append("    " * indent + "{ " + text + " }")

    def emit(node: AnnotatedProgram, path: Path, indent: int):
        b = node.body
        if isinstance(b, Skip):
            lines.append("    " * indent + "skip")
        elif isinstance(b, UnkProg):
            lines.append("    " * indent + f"?{b.tag}")
        elif isinstance(b, Assignment):
            lines.append("    " * indent + assignment_text(b))
        elif isinstance(b, Composition):
            for k, comp in enumerate(b.components):
                if k > 0 and (full or (path, f"mid:{k - 1}") in show):
                    assertion(pretty_print(comp.pre), indent)
                emit(comp, path + (k,), indent)
        elif isinstance(b, If):
            for k, (g, sub) in enumerate(b.branches):
                head = "if" if k == 0 else "[]"
                lines.append("    " * indent + f"{head} {pretty_print(g)} →")
                if full:
                    assertion(pretty_print(sub.pre), indent + 1)
                emit(sub, path + (k,), indent + 1)
                if full:
                    assertion(pretty_print(sub.post), indent + 1)
            lines.append("    " * indent + "fi")
        elif isinstance(b, While):
            if full or (path, "invariant") in show:
                for k, c in enumerate(_inv_flat(b)):
                    assertion(f"inv P{k}: {pretty_print(c)}", indent)
            if b.bound is not None:
                assertion(f"bnd: {pretty_print(b.bound)}", indent)
            lines.append("    " * indent + f"do {pretty_print(b.guard)} →")
            if full:
                assertion(pretty_print(b.body.pre), indent + 1)
            emit(b.body, path + ("body",), indent + 1)
            if full:
                assertion(pretty_print(b.body.post), indent + 1)
            lines.append("    " * indent + "od")
        else:  # pragma: no cover
            raise TypeError(type(b))

    assertion(pretty_print(p.pre), 0)
    emit(p, (), 0)
    assertion(pretty_print(p.post), 0)
    return "\n".join(lines)


# --- frames text ---------------------------------------------------------------------


def render_frames_text(state: DerivationState) -> str:
    lines = [f"obligation {state.obligation_label}"]
    for fi, frame in enumerate(state.frames):
        pad = "  " * fi
        lines.append(f"{pad}frame {fi} ({frame.polarity})"
                     + (f" at {'.'.join(map(str, frame.focus_path))}" if frame.focus_path else ""))
        for a in frame.assumptions:
            lines.append(f"{pad}  assume {pretty_print(a)}")
        lines.append(f"{pad}  ⊢ {pretty_print(frame.initial)}")
        for step in frame.steps:
            lines.append(f"{pad}  {step.relation}  {{ {step.justification} }}")
            lines.append(f"{pad}     {pretty_print(step.formula)}")
    return "\n".join(lines)


def render_state_text(state: DerivationState, mode: str = "minimal") -> str:
    view = (
        minimal_annotations(state.program)
        if mode == "minimal"
        else full_annotations(state.program)
    )
    text = render_program_text(state.program, view)
    if state.mode == "formula":
        text += "\n\n" + render_frames_text(state)
    return text


# --- JSON layout -----------------------------------------------------------------------


def _formula_json(e: Expr, spans: bool) -> dict:
    out = {"text": pretty_print(e)}
    if spans:
        out["spans"] = pretty_print(e, "selection").to_json()
    return out


def program_layout(
    node: AnnotatedProgram,
    view: AnnotationView,
    path: Path = (),
    spans: bool = False,
) -> dict:
    b = node.body
    full = view.mode == "full"
    base = {
        "path": path_text(path),
        "pre": {
            **_formula_json(node.pre, spans),
            "visible": full or (path, "pre") in view.visible,
        },
        "post": {
            **_formula_json(node.post, spans),
            "visible": full or (path, "post") in view.visible,
        },
    }
    if isinstance(b, Skip):
        return {**base, "construct": "skip"}
    if isinstance(b, UnkProg):
        return {**base, "construct": "unknown", "tag": b.tag}
    if isinstance(b, Assignment):
        return {
            **base,
            "construct": "assignment",
            "text": assignment_text(b),
            "targets": [_target_text(t) for t in b.targets],
            "exprs": [pretty_print(e) for e in b.exprs],
        }
    if isinstance(b, Composition):
        return {
            **base,
            "construct": "composition",
            "intermediate": [
                {
                    **_formula_json(b.components[k].pre, spans),
                    "visible": full or (path, f"mid:{k - 1}") in view.visible,
                }
                for k in range(1, len(b.components))
            ],
            "children": [
                program_layout(c, view, path + (k,), spans)
                for k, c in enumerate(b.components)
            ],
        }
    if isinstance(b, If):
        return {
            **base,
            "construct": "if",
            "guards": [_formula_json(g, spans) for g, _ in b.branches],
            "children": [
                program_layout(c, view, path + (k,), spans)
                for k, (_, c) in enumerate(b.branches)
            ],
        }
    if isinstance(b, While):
        return {
            **base,
            "construct": "while",
            "invariants": [
                {"name": f"P{k}", **_formula_json(c, spans), "visible": full or (path, "invariant") in view.visible}
                for k, c in enumerate(_inv_flat(b))
            ],
            "guard": _formula_json(b.guard, spans),
            "bound": _formula_json(b.bound, spans) if b.bound is not None else None,
            "children": [program_layout(b.body, view, path + ("body",), spans)],
        }
    raise TypeError(type(b))


def frame_layout(frame: Frame, spans: bool) -> dict:
    return {
        "polarity": frame.polarity,
        "focusPath": ".".join(map(str, frame.focus_path)) if frame.focus_path else None,
        "assumptions": [_formula_json(a, spans) for a in frame.assumptions],
        "boundVars": [{"name": n, "sort": str(s)} for n, s in frame.bound_vars],
        "initial": _formula_json(frame.initial, spans),
        "steps": [
            {
                "relation": st.relation,
                "justification": st.justification,
                "formula": _formula_json(st.formula, spans),
                "proofInfo": [
                    {
                        "rule": r.rule,
                        "condition": pretty_print(r.condition) if r.condition is not None else None,
                        "verdict": r.verdict,
                    }
                    for r in st.records
                ],
            }
            for st in frame.steps
        ],
    }


def state_layout(state: DerivationState, view_mode: str = "minimal", spans: bool = False) -> dict:
    view = (
        minimal_annotations(state.program)
        if view_mode == "minimal"
        else full_annotations(state.program)
    )
    out = {
        "mode": state.mode,
        "view": view_mode,
        "program": program_layout(state.program, view, spans=spans),
        "declarations": [
            {"name": n, "sort": str(s)} for n, s in state.decls.entries
        ],
        "pendingMetavars": [
            {"name": n, "sort": str(s)} for n, s in state.pending_metavars
        ],
        "text": render_state_text(state, view_mode),
    }
    if state.mode == "formula":
        out["obligation"] = state.obligation_label
        out["frames"] = [frame_layout(f, spans) for f in state.frames]
    return out


def obligation_json(po: ProofObligation) -> dict:
    return {
        "label": po.label,
        "origin": path_text(po.origin),
        "status": po.status,
        "hypotheses": [pretty_print(h) for h in po.hypotheses],
        "goal": pretty_print(po.goal),
        "metavars": po.has_metavars,
    }
