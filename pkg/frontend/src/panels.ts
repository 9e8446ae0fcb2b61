// The tactics panel: the active path of the derivation tree, one row per
// applied tactic, with sibling markers for hopping across branches.
// Clicking a row backtracks (exact navigation); clicking a sibling marker
// navigates with rightmost descent, per the house rule.

import type { PathEntry } from "./api.js";

export interface TacticsHandlers {
  onNavigate(node: number): void;
  onSibling(node: number): void;
}

export function renderTacticsPanel(
  doc: Document,
  activePath: PathEntry[],
  handlers: TacticsHandlers,
): HTMLElement {
  const panel = doc.createElement("div");
  panel.className = "tactics-panel";
  for (const entry of activePath) {
    const row = doc.createElement("div");
    row.className = "tactic-row";
    row.dataset.node = String(entry.id);
    const name = doc.createElement("span");
    name.className = "tactic-name";
    name.textContent = entry.tactic;
    name.title = entry.command;
    name.addEventListener("click", () => handlers.onNavigate(entry.id));
    row.appendChild(name);
    if (entry.siblings.length > 1) {
      const markers = doc.createElement("span");
      markers.className = "sibling-markers";
      for (const sib of entry.siblings) {
        const marker = doc.createElement("button");
        marker.type = "button";
        marker.className =
          "sibling-marker" + (sib === entry.id ? " current" : "");
        marker.dataset.node = String(sib);
        marker.textContent = sib === entry.id ? "●" : "○";
        marker.title = `branch ${sib}`;
        if (sib !== entry.id) {
          marker.addEventListener("click", () => handlers.onSibling(sib));
        }
        markers.appendChild(marker);
      }
      row.appendChild(markers);
    }
    panel.appendChild(row);
  }
  return panel;
}
