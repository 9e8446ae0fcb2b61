// Client-side cache of the derivation.  The server stays authoritative:
// every mutating response replaces the cached view wholesale, and the
// cached tree summary only saves navigation round trips.

import type { Api, NodeView, PathEntry, TacticMeta } from "./api.js";

export interface PanelModes {
  annotations: "minimal" | "full";
  interaction: "normal" | "selection";
}

export class ClientState {
  sessionId = "";
  activePath: PathEntry[] = [];
  activeLeaf = -1;
  current: NodeView | null = null;
  tactics: TacticMeta[] = [];
  modes: PanelModes = { annotations: "minimal", interaction: "normal" };
  pendingRequest = false;

  constructor(private api: Api) {}

  async start(): Promise<void> {
    const { id } = await this.api.createSession();
    this.sessionId = id;
    const { tactics } = await this.api.tactics(id);
    this.tactics = tactics;
  }

  /** Apply a mutating response: invalidate and replace the cache. */
  absorb(view: NodeView): NodeView {
    this.activePath = view.activePath;
    this.activeLeaf = view.activeLeaf;
    this.current = view;
    return view;
  }

  async applyTactic(command: string, at?: number): Promise<NodeView> {
    if (this.pendingRequest) {
      throw new Error("another request is in flight");
    }
    this.pendingRequest = true;
    try {
      return this.absorb(await this.api.tactic(this.sessionId, command, at));
    } finally {
      this.pendingRequest = false;
    }
  }

  async navigate(node: number, descend = false): Promise<NodeView> {
    return this.absorb(await this.api.navigate(this.sessionId, node, descend));
  }

  async refresh(node?: number): Promise<NodeView> {
    const id = node ?? this.activeLeaf;
    return this.absorb(await this.api.node(this.sessionId, id));
  }

  get mode(): string {
    return this.current?.content ? this.current.content.mode : "program";
  }
}
