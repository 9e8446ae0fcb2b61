// Wiring: three panels over one ClientState.  All verification and formula
// work happens server-side; this file only routes clicks to API calls and
// re-renders from the responses.

import { Api, ApiError, NodeView } from "./api.js";
import { renderContent } from "./content.js";
import { buildInputPanel } from "./forms.js";
import { renderTacticsPanel } from "./panels.js";
import { ClientState } from "./state.js";

export class App {
  readonly state: ClientState;
  private left: HTMLElement;
  private center: HTMLElement;
  private bottom: HTMLElement;
  private status: HTMLElement;
  /** selection-mode program click target, offered to the next form as `at` */
  selectedProgramPath: string | null = null;

  constructor(
    private doc: Document,
    private root: HTMLElement,
    api: Api,
  ) {
    this.state = new ClientState(api);
    this.left = doc.createElement("div");
    this.left.className = "panel panel-left";
    this.center = doc.createElement("div");
    this.center.className = "panel panel-center";
    this.bottom = doc.createElement("div");
    this.bottom.className = "panel panel-bottom";
    this.status = doc.createElement("div");
    this.status.className = "status-line";
    root.replaceChildren(this.left, this.center, this.bottom, this.status);
  }

  async start(): Promise<void> {
    await this.state.start();
    this.render();
  }

  toggleAnnotations(): void {
    // visibility only: flip the container class, never refetch or rebuild
    this.state.modes.annotations =
      this.state.modes.annotations === "minimal" ? "full" : "minimal";
    const contents = this.center.querySelector(".contents");
    if (contents) {
      contents.classList.toggle("view-minimal");
      contents.classList.toggle("view-full");
    }
  }

  toggleSelection(): void {
    this.state.modes.interaction =
      this.state.modes.interaction === "normal" ? "selection" : "normal";
    // selection needs the span-annotated render; refetch before redrawing
    void this.state.refresh().then(() => this.renderCenter());
  }

  async submit(command: string): Promise<NodeView | null> {
    try {
      const view = await this.state.applyTactic(command);
      this.selectedProgramPath = null;
      this.report(view.report?.messages.join("; ") ?? "ok");
      this.render();
      return view;
    } catch (err) {
      this.reportError(err);
      return null;
    }
  }

  async navigate(node: number, descend = false): Promise<void> {
    try {
      await this.state.navigate(node, descend);
      this.render();
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        // stale node id: refresh the cache once and retry
        await this.state.refresh();
        this.render();
        return;
      }
      this.reportError(err);
    }
  }

  render(): void {
    this.left.replaceChildren(
      renderTacticsPanel(this.doc, this.state.activePath, {
        onNavigate: (node) => void this.navigate(node, false),
        onSibling: (node) => void this.navigate(node, true),
      }),
    );
    this.renderCenter();
    this.renderBottom();
  }

  renderCenter(): void {
    const view = this.state.current;
    if (!view?.content) {
      this.center.replaceChildren();
      return;
    }
    const el = renderContent(
      this.doc,
      view.content,
      {
        view: this.state.modes.annotations,
        selection: this.state.modes.interaction === "selection",
      },
      {
        onFormulaSelect: (path) => {
          void this.submit(`focus{path=${path}}`);
        },
        onProgramSelect: (path) => {
          // focusing a subprogram: the next tactic form targets it
          this.selectedProgramPath = path;
          this.report(`working on ${path}`);
          this.renderBottom();
        },
      },
    );
    this.center.replaceChildren(el);
  }

  renderBottom(): void {
    const panel = buildInputPanel(
      this.doc,
      this.state.tactics,
      this.state.current ? this.state.mode : "root",
      (command) => void this.submit(command),
    );
    this.bottom.replaceChildren(panel.element);
    if (this.selectedProgramPath !== null) {
      const input = panel.element.querySelector<HTMLInputElement>(
        'input[name="at"]',
      );
      if (input) {
        input.value = this.selectedProgramPath;
      }
    }
  }

  report(message: string): void {
    this.status.textContent = message;
    this.status.classList.remove("error");
  }

  reportError(err: unknown): void {
    const message =
      err instanceof ApiError
        ? `${err.payload["error"]}: ${err.payload["message"]}`
        : String(err);
    this.status.textContent = message;
    this.status.classList.add("error");
  }
}

export function mount(doc: Document, rootId: string, base: string): App {
  const root = doc.getElementById(rootId);
  if (!root) {
    throw new Error(`no element #${rootId}`);
  }
  return new App(doc, root, new Api(base));
}
