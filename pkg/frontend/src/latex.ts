// Live LaTeX-to-symbol conversion for formula inputs.  Mirrors the server's
// token table; the raw LaTeX text is what gets submitted — the preview is
// cosmetic.

export const LATEX_SYMBOLS: Record<string, string> = {
  forall: "∀",
  exists: "∃",
  sum: "Σ",
  count: "#",
  max: "MAX",
  min: "MIN",
  wedge: "∧",
  land: "∧",
  vee: "∨",
  lor: "∨",
  neg: "¬",
  lnot: "¬",
  Rightarrow: "⇒",
  implies: "⇒",
  Leftarrow: "⇐",
  equiv: "≡",
  le: "≤",
  leq: "≤",
  ge: "≥",
  geq: "≥",
  ne: "≠",
  neq: "≠",
  mapsto: "↦",
};

export interface Segment {
  text: string;
  kind: "plain" | "symbol" | "unknown";
}

function extendsToLongerMacro(name: string): boolean {
  return Object.keys(LATEX_SYMBOLS).some(
    (k) => k !== name && k.startsWith(name),
  );
}

/** Split the input into plain text, converted symbols and highlighted
 * unknown tokens.  A macro converts as soon as it is unambiguously complete:
 * either a non-letter follows it, or the input ends and no longer macro
 * could still be being typed (`\le` waits because `\leq` exists). */
export function convertLive(input: string): Segment[] {
  const out: Segment[] = [];
  const re = /\\([a-zA-Z]+)/g;
  let cursor = 0;
  let m: RegExpExecArray | null;
  while ((m = re.exec(input)) !== null) {
    const name = m[1];
    const end = m.index + m[0].length;
    const complete =
      end < input.length || !extendsToLongerMacro(name);
    if (m.index > cursor) {
      out.push({ text: input.slice(cursor, m.index), kind: "plain" });
    }
    if (!complete) {
      out.push({ text: m[0], kind: "plain" });
    } else if (name in LATEX_SYMBOLS) {
      out.push({ text: LATEX_SYMBOLS[name], kind: "symbol" });
    } else {
      out.push({ text: m[0], kind: "unknown" });
    }
    cursor = end;
  }
  if (cursor < input.length) {
    out.push({ text: input.slice(cursor), kind: "plain" });
  }
  return out;
}

export function previewText(input: string): string {
  return convertLive(input)
    .map((s) => s.text)
    .join("");
}

/** Render the preview into a container; unknown tokens get a highlight
 * class so typos are visible at a glance. */
export function renderPreview(doc: Document, input: string): HTMLElement {
  const el = doc.createElement("span");
  el.className = "latex-preview";
  for (const seg of convertLive(input)) {
    const piece = doc.createElement("span");
    piece.textContent = seg.text;
    if (seg.kind === "unknown") {
      piece.className = "latex-unknown";
    } else if (seg.kind === "symbol") {
      piece.className = "latex-symbol";
    }
    el.appendChild(piece);
  }
  return el;
}
