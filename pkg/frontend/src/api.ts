// Typed client for the calx session API.  The client never interprets or
// rewrites formulas: everything it shows comes from the server's renders.

export interface FormulaRender {
  text: string;
  visible?: boolean;
  spans?: SpanNode;
}

export interface SpanNode {
  path: string;
  kind: string;
  parts: (string | SpanNode)[];
}

export interface ProgramLayout {
  construct: string;
  path: string;
  pre: FormulaRender;
  post: FormulaRender;
  tag?: string;
  text?: string;
  guard?: FormulaRender;
  guards?: FormulaRender[];
  invariants?: (FormulaRender & { name: string })[];
  intermediate?: FormulaRender[];
  bound?: FormulaRender | null;
  children?: ProgramLayout[];
}

export interface StepLayout {
  relation: string;
  justification: string;
  formula: FormulaRender;
  proofInfo: { rule: string; condition: string | null; verdict: string | null }[];
}

export interface FrameLayout {
  polarity: string;
  focusPath: string | null;
  assumptions: FormulaRender[];
  boundVars: { name: string; sort: string }[];
  initial: FormulaRender;
  steps: StepLayout[];
}

export interface ContentLayout {
  mode: "program" | "formula";
  view: string;
  program: ProgramLayout;
  declarations: { name: string; sort: string }[];
  pendingMetavars: { name: string; sort: string }[];
  text: string;
  obligation?: string;
  frames?: FrameLayout[];
}

export interface PathEntry {
  id: number;
  tactic: string;
  command: string;
  mode: string;
  siblings: number[];
  children: number[];
}

export interface NodeView {
  activePath: PathEntry[];
  activeLeaf: number;
  node?: number;
  content: ContentLayout;
  report?: {
    messages: string[];
    obligations: ObligationView[];
  };
}

export interface ObligationView {
  label: string;
  origin: string;
  status: string;
  hypotheses: string[];
  goal: string;
  metavars: boolean;
}

export interface TacticParam {
  name: string;
  kind: string;
  required: boolean;
  help: string;
}

export interface TacticMeta {
  name: string;
  mode: string;
  summary: string;
  variadic: boolean;
  params: TacticParam[];
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public payload: Record<string, unknown>,
  ) {
    super(`${payload["error"] ?? status}: ${payload["message"] ?? ""}`);
  }
}

async function unwrap<T>(res: Response): Promise<T> {
  const body = (await res.json()) as Record<string, unknown>;
  if (!res.ok) {
    throw new ApiError(res.status, body);
  }
  return body as T;
}

export class Api {
  constructor(private base: string) {}

  createSession(): Promise<{ id: string }> {
    return fetch(`${this.base}/sessions`, { method: "POST" }).then((r) =>
      unwrap(r),
    );
  }

  tree(sid: string): Promise<{ nodes: PathEntry[]; activeLeaf: number | null; activePath: PathEntry[] }> {
    return fetch(`${this.base}/sessions/${sid}/tree`).then((r) => unwrap(r));
  }

  node(sid: string, id: number, view = "minimal", spans = true): Promise<NodeView> {
    const q = `view=${view}&spans=${spans ? 1 : 0}`;
    return fetch(`${this.base}/sessions/${sid}/node/${id}?${q}`).then((r) =>
      unwrap(r),
    );
  }

  tactic(sid: string, text: string, at?: number): Promise<NodeView> {
    const init: RequestInit =
      at === undefined
        ? { method: "POST", body: text, headers: { "content-type": "text/plain" } }
        : {
            method: "POST",
            body: JSON.stringify({ text, at }),
            headers: { "content-type": "application/json" },
          };
    return fetch(`${this.base}/sessions/${sid}/tactic`, init).then((r) =>
      unwrap(r),
    );
  }

  navigate(sid: string, node: number, descend = false): Promise<NodeView> {
    return fetch(`${this.base}/sessions/${sid}/navigate`, {
      method: "POST",
      body: JSON.stringify({ node, descend }),
      headers: { "content-type": "application/json" },
    }).then((r) => unwrap(r));
  }

  tactics(sid: string): Promise<{ tactics: TacticMeta[] }> {
    return fetch(`${this.base}/sessions/${sid}/tactics`).then((r) => unwrap(r));
  }

  obligations(sid: string): Promise<{ obligations: ObligationView[] }> {
    return fetch(`${this.base}/sessions/${sid}/obligations`).then((r) =>
      unwrap(r),
    );
  }
}
