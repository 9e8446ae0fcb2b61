// Tactic input forms generated from the server's registry metadata.  There
// is no per-tactic UI code: the parameter list drives everything, so new
// tactics appear in the client without changes here.

import type { TacticMeta, TacticParam } from "./api.js";
import { renderPreview } from "./latex.js";

const PLACEHOLDERS: Record<string, string> = {
  formula: "e.g. 0 \\le n \\wedge n \\le N",
  exprs: "e.g. [r', n+1]",
  targets: "e.g. [r, n]",
  idents: "e.g. [r, n]",
  indices: "e.g. [0,1]",
  ident: "a declared name",
  sort: "Int, Bool or Array(...)",
  path: "e.g. 1.body.0",
  label: "e.g. While.invariant-preservation[P0]",
  decls: "e.g. [n:Int, f:Array(Bool)]",
  relation: "≡, ⇒ or ⇐",
  program: "skip, or s := s \\wedge f[n]",
};

const LATEX_KINDS = new Set(["formula", "exprs", "program"]);

export interface TacticForm {
  element: HTMLElement;
  setField(name: string, value: string): void;
  addBinding(metavar: string, value: string): void;
  command(): string;
}

function fieldRow(
  doc: Document,
  param: TacticParam,
  onInput: (value: string, preview: HTMLElement) => void,
): { row: HTMLElement; input: HTMLInputElement; preview: HTMLElement } {
  const row = doc.createElement("div");
  row.className = "form-row";
  const label = doc.createElement("label");
  label.textContent = param.required ? param.name : `${param.name} (optional)`;
  if (param.help) {
    label.title = param.help;
  }
  const input = doc.createElement("input");
  input.name = param.name;
  input.dataset.kind = param.kind;
  input.placeholder = PLACEHOLDERS[param.kind] ?? "";
  const preview = doc.createElement("span");
  preview.className = "preview-slot";
  input.addEventListener("input", () => onInput(input.value, preview));
  row.appendChild(label);
  row.appendChild(input);
  row.appendChild(preview);
  return { row, input, preview };
}

/** Build the dynamically generated input form for one tactic.  Formula-like
 * fields get a live LaTeX preview; submitted values stay raw LaTeX. */
export function buildForm(
  doc: Document,
  meta: TacticMeta,
  onSubmit: (command: string) => void,
): TacticForm {
  const element = doc.createElement("form");
  element.className = "tactic-form";
  element.dataset.tactic = meta.name;
  const title = doc.createElement("div");
  title.className = "form-title";
  title.textContent = meta.name;
  title.title = meta.summary;
  element.appendChild(title);

  const inputs = new Map<string, HTMLInputElement>();
  const bindings = new Map<string, string>();

  for (const param of meta.params) {
    const { row, input, preview } = fieldRow(doc, param, (value, slot) => {
      slot.replaceChildren();
      if (LATEX_KINDS.has(param.kind) && value) {
        slot.appendChild(renderPreview(doc, value));
      }
    });
    inputs.set(param.name, input);
    element.appendChild(row);
  }

  if (meta.variadic) {
    const hint = doc.createElement("div");
    hint.className = "form-hint";
    hint.textContent = "bindings: one field per metavariable (added by the app)";
    element.appendChild(hint);
  }

  const submit = doc.createElement("button");
  submit.type = "submit";
  submit.textContent = "apply";
  element.appendChild(submit);

  const form: TacticForm = {
    element,
    setField(name, value) {
      const input = inputs.get(name);
      if (!input) {
        throw new Error(`${meta.name} has no parameter '${name}'`);
      }
      input.value = value;
      input.dispatchEvent(new (doc.defaultView as any).Event("input"));
    },
    addBinding(metavar, value) {
      bindings.set(metavar, value);
    },
    command() {
      const parts: string[] = [];
      for (const param of meta.params) {
        const value = inputs.get(param.name)!.value.trim();
        if (value) {
          parts.push(`${param.name}=${value}`);
        }
      }
      for (const [name, value] of bindings) {
        parts.push(`${name}=${value}`);
      }
      return `${meta.name}{${parts.join(", ")}}`;
    },
  };

  element.addEventListener("submit", (ev) => {
    ev.preventDefault();
    onSubmit(form.command());
  });
  return form;
}

/** The tactic picker plus the generated form for the current selection. */
export function buildInputPanel(
  doc: Document,
  tactics: TacticMeta[],
  mode: string,
  onSubmit: (command: string) => void,
): { element: HTMLElement; select(name: string): TacticForm } {
  const element = doc.createElement("div");
  element.className = "input-panel";
  const picker = doc.createElement("select");
  picker.className = "tactic-picker";
  const slot = doc.createElement("div");
  slot.className = "form-slot";
  const applicable = tactics.filter(
    (t) => t.mode === mode || (mode === "program" && t.mode === "root"),
  );
  for (const t of applicable) {
    const opt = doc.createElement("option");
    opt.value = t.name;
    opt.textContent = `${t.name} — ${t.summary}`;
    picker.appendChild(opt);
  }
  let current: TacticForm | null = null;
  const select = (name: string): TacticForm => {
    const meta = tactics.find((t) => t.name === name);
    if (!meta) {
      throw new Error(`unknown tactic ${name}`);
    }
    current = buildForm(doc, meta, onSubmit);
    slot.replaceChildren(current.element);
    picker.value = name;
    return current;
  };
  picker.addEventListener("change", () => select(picker.value));
  element.appendChild(picker);
  element.appendChild(slot);
  if (applicable.length) {
    select(applicable[0].name);
  }
  return { element, select };
}
