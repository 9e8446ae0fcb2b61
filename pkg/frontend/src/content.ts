// The contents panel: DOM for the server's structured layout.
//
// Annotations are always rendered; the minimal/full toggle flips a class on
// the container and CSS does the hiding, so the toggle never changes
// content.  In selection mode every block and formula span is a clickable
// box carrying its node path; double-clicking a program block collapses it.
// Proof information for rewrite steps is present but hidden until the
// ProofInfo link is clicked.

import type {
  ContentLayout,
  FormulaRender,
  FrameLayout,
  ProgramLayout,
  SpanNode,
} from "./api.js";

export interface ContentHandlers {
  /** selection-mode click on a formula subterm (formula mode → focus). */
  onFormulaSelect?(path: string): void;
  /** selection-mode click on a program block (program mode → work here). */
  onProgramSelect?(path: string): void;
}

function spanTree(doc: Document, node: SpanNode, handlers: ContentHandlers): HTMLElement {
  const el = doc.createElement("span");
  el.className = `fspan fspan-${node.kind.toLowerCase()}`;
  el.dataset.path = node.path;
  for (const part of node.parts) {
    if (typeof part === "string") {
      el.appendChild(doc.createTextNode(part));
    } else {
      el.appendChild(spanTree(doc, part, handlers));
    }
  }
  if (handlers.onFormulaSelect && node.kind !== "paren" && node.kind !== "chain") {
    el.addEventListener("click", (ev) => {
      ev.stopPropagation();
      handlers.onFormulaSelect!(node.path);
    });
  }
  return el;
}

function formula(
  doc: Document,
  f: FormulaRender,
  handlers: ContentHandlers,
  selectable: boolean,
): HTMLElement {
  if (selectable && f.spans) {
    return spanTree(doc, f.spans, handlers);
  }
  const el = doc.createElement("span");
  el.className = "formula";
  el.textContent = f.text;
  return el;
}

function annotation(
  doc: Document,
  f: FormulaRender,
  role: string,
  label = "",
): HTMLElement {
  const el = doc.createElement("div");
  el.className = "annotation" + (f.visible === false ? " ann-extra" : "");
  el.dataset.role = role;
  el.textContent = `{ ${label}${f.text} }`;
  return el;
}

export function programBlock(
  doc: Document,
  layout: ProgramLayout,
  handlers: ContentHandlers,
): HTMLElement {
  const block = doc.createElement("div");
  block.className = `pblock construct-${layout.construct}`;
  block.dataset.path = layout.path;

  block.appendChild(annotation(doc, layout.pre, "pre"));
  const body = doc.createElement("div");
  body.className = "pbody";
  switch (layout.construct) {
    case "skip":
      body.textContent = "skip";
      break;
    case "unknown":
      body.textContent = `?${layout.tag ?? ""}`;
      break;
    case "assignment":
      body.textContent = layout.text ?? "";
      break;
    case "composition": {
      (layout.children ?? []).forEach((child, k) => {
        if (k > 0) {
          body.appendChild(
            annotation(doc, layout.intermediate![k - 1], `mid:${k - 1}`),
          );
        }
        body.appendChild(programBlock(doc, child, handlers));
      });
      break;
    }
    case "if": {
      (layout.children ?? []).forEach((child, k) => {
        const head = doc.createElement("div");
        head.className = "guard";
        head.textContent = `${k === 0 ? "if" : "[]"} ${layout.guards![k].text} →`;
        body.appendChild(head);
        body.appendChild(programBlock(doc, child, handlers));
      });
      const fi = doc.createElement("div");
      fi.textContent = "fi";
      body.appendChild(fi);
      break;
    }
    case "while": {
      for (const inv of layout.invariants ?? []) {
        body.appendChild(annotation(doc, inv, "invariant", `inv ${inv.name}: `));
      }
      const head = doc.createElement("div");
      head.className = "guard";
      head.textContent = `do ${layout.guard!.text} →`;
      body.appendChild(head);
      body.appendChild(programBlock(doc, layout.children![0], handlers));
      const od = doc.createElement("div");
      od.textContent = "od";
      body.appendChild(od);
      break;
    }
  }
  block.appendChild(body);
  block.appendChild(annotation(doc, layout.post, "post"));

  if (handlers.onProgramSelect) {
    block.addEventListener("click", (ev) => {
      ev.stopPropagation();
      handlers.onProgramSelect!(layout.path);
    });
  }
  block.addEventListener("dblclick", (ev) => {
    ev.stopPropagation();
    block.classList.toggle("collapsed");
  });
  return block;
}

function frameBox(
  doc: Document,
  frame: FrameLayout,
  innermost: boolean,
  handlers: ContentHandlers,
): HTMLElement {
  const box = doc.createElement("div");
  box.className = `frame polarity-${frame.polarity}`;
  const assumptions = doc.createElement("ul");
  assumptions.className = "assumptions";
  for (const a of frame.assumptions) {
    const li = doc.createElement("li");
    li.textContent = a.text;
    assumptions.appendChild(li);
  }
  box.appendChild(assumptions);

  const lines = doc.createElement("div");
  lines.className = "calc";
  const first = doc.createElement("div");
  first.className = "calc-line";
  first.appendChild(doc.createTextNode("⊢ "));
  first.appendChild(formula(doc, frame.initial, handlers, innermost && frame.steps.length === 0));
  lines.appendChild(first);
  frame.steps.forEach((step, k) => {
    const hint = doc.createElement("div");
    hint.className = "calc-hint";
    hint.appendChild(doc.createTextNode(`${step.relation} { ${step.justification} }`));
    if (step.proofInfo.length) {
      const link = doc.createElement("a");
      link.className = "proofinfo-link";
      link.textContent = "ProofInfo";
      const detail = doc.createElement("ul");
      detail.className = "proofinfo hidden";
      for (const info of step.proofInfo) {
        const li = doc.createElement("li");
        li.textContent =
          info.condition === null
            ? info.rule
            : `${info.rule}: ${info.condition} [${info.verdict}]`;
        detail.appendChild(li);
      }
      link.addEventListener("click", () => detail.classList.toggle("hidden"));
      hint.appendChild(link);
      hint.appendChild(detail);
    }
    lines.appendChild(hint);
    const line = doc.createElement("div");
    line.className = "calc-line";
    const last = k === frame.steps.length - 1;
    line.appendChild(formula(doc, step.formula, handlers, innermost && last));
    lines.appendChild(line);
  });
  box.appendChild(lines);
  return box;
}

/** Render the contents panel for one derivation node. */
export function renderContent(
  doc: Document,
  layout: ContentLayout,
  opts: { view: "minimal" | "full"; selection: boolean },
  handlers: ContentHandlers = {},
): HTMLElement {
  const root = doc.createElement("div");
  root.className = `contents view-${opts.view}${opts.selection ? " selection-mode" : ""}`;
  const programHandlers: ContentHandlers =
    opts.selection && layout.mode === "program" ? handlers : {};
  root.appendChild(programBlock(doc, layout.program, programHandlers));
  if (layout.mode === "formula" && layout.frames) {
    const head = doc.createElement("div");
    head.className = "obligation-head";
    head.textContent = `obligation ${layout.obligation}`;
    root.appendChild(head);
    // frames nest: each inner frame renders inside its parent's box
    let parent: HTMLElement = root;
    layout.frames.forEach((frame, k) => {
      const innermost = k === layout.frames!.length - 1;
      const box = frameBox(
        doc,
        frame,
        innermost,
        opts.selection ? handlers : {},
      );
      parent.appendChild(box);
      parent = box;
    });
  }
  return root;
}
