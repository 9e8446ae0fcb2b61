// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import type { ContentLayout } from "../src/api.js";
import { renderContent } from "../src/content.js";
import { renderTacticsPanel } from "../src/panels.js";

const PROGRAM: ContentLayout = {
  mode: "program",
  view: "minimal",
  declarations: [{ name: "x", sort: "Int" }],
  pendingMetavars: [],
  text: "",
  program: {
    construct: "composition",
    path: "·",
    pre: { text: "0 ≤ x", visible: true },
    post: { text: "x = 0", visible: true },
    intermediate: [{ text: "0 ≤ x ∧ true", visible: true }],
    children: [
      {
        construct: "assignment",
        path: "0",
        text: "x := x",
        pre: { text: "0 ≤ x", visible: false },
        post: { text: "0 ≤ x ∧ true", visible: false },
      },
      {
        construct: "unknown",
        path: "1",
        tag: "S1",
        pre: { text: "0 ≤ x ∧ true", visible: false },
        post: { text: "x = 0", visible: false },
      },
    ],
  },
};

const FORMULA: ContentLayout = {
  ...PROGRAM,
  mode: "formula",
  obligation: "Assignment.correctness",
  frames: [
    {
      polarity: "positive",
      focusPath: null,
      assumptions: [{ text: "0 ≤ x" }],
      boundVars: [],
      initial: { text: "p ⇒ q ∧ p" },
      steps: [
        {
          relation: "≡",
          justification: "simplifyAuto",
          formula: { text: "p ⇒ q" },
          proofInfo: [{ rule: "∧-unit", condition: "0 ≤ x", verdict: "valid" }],
        },
      ],
    },
    {
      polarity: "positive",
      focusPath: "1",
      assumptions: [{ text: "0 ≤ x" }, { text: "p" }],
      boundVars: [],
      initial: {
        text: "q",
        spans: { path: "1", kind: "Var", parts: ["q"] },
      },
      steps: [],
    },
  ],
};

describe("contents panel", () => {
  it("renders nested blocks with node paths", () => {
    const el = renderContent(document, PROGRAM, { view: "minimal", selection: false });
    const blocks = [...el.querySelectorAll(".pblock")].map(
      (b) => (b as HTMLElement).dataset.path,
    );
    expect(blocks).toEqual(["·", "0", "1"]);
    expect(el.querySelector(".construct-unknown")?.textContent).toContain("?S1");
  });

  it("annotation toggle changes visibility classes only", () => {
    const el = renderContent(document, PROGRAM, { view: "minimal", selection: false });
    const before = el.innerHTML;
    el.classList.toggle("view-minimal");
    el.classList.toggle("view-full");
    const after = el.innerHTML;
    expect(before).toBe(after); // inner content untouched
    // hidden-in-minimal annotations are still in the DOM, marked only by class
    const extras = el.querySelectorAll(".annotation.ann-extra");
    expect(extras.length).toBe(4);
    expect([...extras][0].textContent).toContain("0 ≤ x");
  });

  it("double click collapses a program block", () => {
    const el = renderContent(document, PROGRAM, { view: "minimal", selection: false });
    const block = el.querySelector('[data-path="0"]') as HTMLElement;
    block.dispatchEvent(new window.MouseEvent("dblclick", { bubbles: true }));
    expect(block.classList.contains("collapsed")).toBe(true);
    block.dispatchEvent(new window.MouseEvent("dblclick", { bubbles: true }));
    expect(block.classList.contains("collapsed")).toBe(false);
  });

  it("selection mode clicks report the block path", () => {
    let picked = "";
    const el = renderContent(
      document,
      PROGRAM,
      { view: "minimal", selection: true },
      { onProgramSelect: (p) => (picked = p) },
    );
    const block = el.querySelector('[data-path="1"]') as HTMLElement;
    block.dispatchEvent(new window.MouseEvent("click", { bubbles: true }));
    expect(picked).toBe("1");
  });

  it("frames show their assumptions, nested inner-in-outer", () => {
    const el = renderContent(document, FORMULA, { view: "minimal", selection: false });
    const frames = el.querySelectorAll(".frame");
    expect(frames.length).toBe(2);
    expect(frames[1].parentElement).toBe(frames[0]);
    const inner = frames[1].querySelectorAll(".assumptions li");
    expect([...inner].map((li) => li.textContent)).toEqual(["0 ≤ x", "p"]);
  });

  it("proof information is present but hidden until requested", () => {
    const el = renderContent(document, FORMULA, { view: "minimal", selection: false });
    const detail = el.querySelector(".proofinfo") as HTMLElement;
    expect(detail.classList.contains("hidden")).toBe(true);
    expect(detail.textContent).toContain("∧-unit");
    (el.querySelector(".proofinfo-link") as HTMLElement).click();
    expect(detail.classList.contains("hidden")).toBe(false);
  });

  it("selection mode exposes formula spans for the innermost frame", () => {
    let picked = "";
    const el = renderContent(
      document,
      FORMULA,
      { view: "minimal", selection: true },
      { onFormulaSelect: (p) => (picked = p) },
    );
    const span = el.querySelector('.fspan[data-path="1"]') as HTMLElement;
    span.dispatchEvent(new window.MouseEvent("click", { bubbles: true }));
    expect(picked).toBe("1");
  });
});

describe("tactics panel", () => {
  const path = [
    { id: 0, tactic: "init4", command: "init4{...}", mode: "program", siblings: [0], children: [1] },
    { id: 1, tactic: "splitComposition", command: "splitComposition{...}", mode: "program", siblings: [1, 4], children: [] },
  ];

  it("lists the active path and marks siblings", () => {
    const el = renderTacticsPanel(document, path, {
      onNavigate: () => {},
      onSibling: () => {},
    });
    const rows = el.querySelectorAll(".tactic-row");
    expect(rows.length).toBe(2);
    expect(rows[0].querySelector(".sibling-markers")).toBeNull();
    const markers = rows[1].querySelectorAll(".sibling-marker");
    expect(markers.length).toBe(2);
  });

  it("routes clicks: rows navigate exactly, markers descend", () => {
    const calls: string[] = [];
    const el = renderTacticsPanel(document, path, {
      onNavigate: (n) => calls.push(`nav:${n}`),
      onSibling: (n) => calls.push(`sib:${n}`),
    });
    (el.querySelectorAll(".tactic-name")[1] as HTMLElement).click();
    (el.querySelector('.sibling-marker[data-node="4"]') as HTMLElement).click();
    expect(calls).toEqual(["nav:1", "sib:4"]);
  });
});
