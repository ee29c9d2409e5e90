// Browser shell: wires the tree view, live badges, command panel, symbol and
// waypoint lists, and the top-down scene schematic to the runtime API and
// event stream. All state logic lives in the imported modules; this file is
// DOM plumbing only.

import { ApiClient } from "./api.js";
import { BadgeBoard } from "./badges.js";
import { EventStreamClient } from "./events.js";
import { PlanEditor } from "./editor.js";
import { INTERNAL_TEMPLATES, leafFromPalette, paletteEntries } from "./palette.js";
import {
  TreeViewNode,
  applyStatus,
  buildTreeView,
  categoryIndex,
  toggleCollapsed,
  visibleRows,
} from "./treeView.js";
import type { BusMessage, SymbolJson } from "./types.js";

const el = <K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] => {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
};

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

async function boot(): Promise<void> {
  const base = "";
  const api = new ApiClient(base, (url, init) => fetch(url, init));
  const components = await api.components();
  const categories = categoryIndex(components);
  const badges = new BadgeBoard();

  let editor: PlanEditor | null = null;
  let view: TreeViewNode | null = null;
  let selectedNode: string | null = null;

  const treeHost = byId("tree");
  const banner = byId("banner");
  const symbolHost = byId("symbols");
  const waypointHost = byId("waypoints");
  const paletteHost = byId("palette");
  const diagnosticsHost = byId("diagnostics");
  const schematic = byId("schematic") as HTMLCanvasElement;

  function renderDiagnostics(): void {
    diagnosticsHost.replaceChildren();
    for (const d of editor?.lastDiagnostics ?? []) {
      diagnosticsHost.appendChild(el("div", "diagnostic", `${d.nodeId}: ${d.message}`));
    }
  }

  function renderTree(): void {
    treeHost.replaceChildren();
    if (!editor) return;
    view = buildTreeView(editor.tree, categories);
    for (const [nodeId, status] of badges.statuses) {
      applyStatus(view, nodeId, status);
    }
    for (const { node, depth } of visibleRows(view)) {
      const row = el("div", `tree-row ${node.colorClass}`);
      row.style.paddingLeft = `${depth * 18}px`;
      row.dataset.nodeId = node.id;
      if (node.children.length > 0) {
        const twisty = el("span", "twisty", node.collapsed ? "+" : "-");
        twisty.onclick = () => {
          if (view && toggleCollapsed(view, node.id)) renderTree();
        };
        row.appendChild(twisty);
      }
      row.appendChild(el("span", "label", node.label));
      if (node.status) {
        row.appendChild(el("span", `badge badge-${node.status.toLowerCase()}`, node.status));
      }
      row.onclick = () => {
        selectedNode = node.id;
        renderParams();
      };
      treeHost.appendChild(row);
    }
    renderDiagnostics();
  }

  function renderParams(): void {
    const host = byId("params");
    host.replaceChildren();
    if (!editor || !selectedNode) return;
    const node = editor.find(selectedNode);
    if (!node || node.kind !== "leaf") return;
    for (const [key, value] of Object.entries(node.params)) {
      const row = el("div", "param-row");
      row.appendChild(el("span", "param-key", key));
      const input = el("input") as HTMLInputElement;
      input.value = typeof value === "object" ? `@${value.$sym}` : String(value);
      input.onchange = () => {
        const text = input.value;
        const parsed = text.startsWith("@") ? { $sym: text.slice(1) }
          : text === "true" ? true : text === "false" ? false
          : text !== "" && !Number.isNaN(Number(text)) ? Number(text) : text;
        editor!.setParam(selectedNode!, key, parsed);
        renderTree();
      };
      row.appendChild(input);
      host.appendChild(row);
    }
  }

  function renderPalette(): void {
    paletteHost.replaceChildren();
    for (const template of INTERNAL_TEMPLATES) {
      const label = template.kind === "leaf" ? "" : template.kind;
      const button = el("button", "palette-internal", label);
      button.onclick = () => {
        if (editor && selectedNode) {
          editor.addChild(selectedNode, 9999, template);
          renderTree();
        }
      };
      paletteHost.appendChild(button);
    }
    for (const entry of paletteEntries(components)) {
      const button = el("button", `palette-${entry.category}`,
                        `${entry.component}.${entry.operation}`);
      button.onclick = () => {
        if (editor && selectedNode) {
          editor.addChild(selectedNode, 9999, leafFromPalette(entry));
          renderTree();
        }
      };
      paletteHost.appendChild(button);
    }
  }

  function renderSymbols(symbols: SymbolJson[]): void {
    symbolHost.replaceChildren();
    waypointHost.replaceChildren();
    for (const sym of symbols) {
      const line = `${sym.name} [${sym.kind}${sym.classLabel ? ` ${sym.classLabel}` : ""}]`;
      if (sym.kind === "waypoint") {
        const row = el("div", "waypoint-row", line);
        const del = el("button", "waypoint-delete", "x");
        del.onclick = () => void api.invokeOperation("arm", "Teach", { name: sym.name });
        row.appendChild(del);
        waypointHost.appendChild(row);
      } else {
        symbolHost.appendChild(el("div", "symbol-row", line));
      }
    }
  }

  function drawSchematic(payload: Record<string, unknown>): void {
    const ctx = schematic.getContext("2d");
    if (!ctx) return;
    const scale = 280; // pixels per meter, table occupies +-0.5 m
    const cx = schematic.width / 2;
    const cy = schematic.height / 2;
    ctx.clearRect(0, 0, schematic.width, schematic.height);
    const toPx = (x: number, y: number): [number, number] =>
      [cx + y * scale, cy - x * scale]; // top-down: +x up, +y right
    const objects = (payload.objects ?? []) as {
      id: string; class: string; pose: number[]; grasped: boolean;
    }[];
    for (const obj of objects) {
      const [px, py] = toPx(obj.pose[0], obj.pose[1]);
      ctx.fillStyle = obj.grasped ? "#999" : obj.class === "node" ? "#2e9e44" : "#8a4fd3";
      ctx.fillRect(px - 5, py - 5, 10, 10);
      ctx.fillStyle = "#333";
      ctx.fillText(obj.id, px + 7, py + 3);
    }
    const endpoint = payload.endpoint as number[] | undefined;
    if (endpoint) {
      const [px, py] = toPx(endpoint[0], endpoint[1]);
      ctx.strokeStyle = "#2f6fd0";
      ctx.beginPath();
      ctx.arc(px, py, 7, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }

  // --- command panel --------------------------------------------------------

  const commands: [string, () => Promise<unknown>][] = [
    ["Teach", () => api.invokeOperation("arm", "Teach")],
    ["DetectObjects", () => api.invokeOperation("perception", "DetectObjects")],
    ["Open gripper", () => api.invokeOperation("gripper", "Open")],
    ["Close gripper", () => api.invokeOperation("gripper", "Close", { require_object: false })],
    ["Calibrate", () => api.calibrate()],
  ];
  const panel = byId("commands");
  for (const [label, action] of commands) {
    const button = el("button", "command", label);
    button.onclick = () => void action().then(() => refreshSymbols());
    panel.appendChild(button);
  }

  async function refreshSymbols(): Promise<void> {
    renderSymbols(await api.symbols());
  }

  // --- plan loading and running ---------------------------------------------

  byId("load-plan").onclick = async () => {
    const id = (byId("plan-id") as HTMLInputElement).value.trim();
    if (!id) return;
    const plan = await api.plan(id);
    editor = new PlanEditor(plan.name, plan.tree, categories, api, plan.id);
    badges.reset();
    renderTree();
  };

  byId("save-plan").onclick = async () => {
    if (!editor) return;
    try {
      const saved = await editor.save();
      (byId("plan-id") as HTMLInputElement).value = saved.id;
    } finally {
      renderDiagnostics();
    }
  };

  byId("run-plan").onclick = async () => {
    if (!editor?.savedId) return;
    const scene = (byId("scene-name") as HTMLInputElement).value.trim() || "assembly";
    badges.reset();
    await api.runPlan(editor.savedId, scene);
  };

  // --- event stream ------------------------------------------------------------

  const wsBase = location.origin.replace(/^http/, "ws");
  const stream = new EventStreamClient(wsBase, (url) => {
    const ws = new WebSocket(url);
    const adapter: import("./events.js").MinimalSocket = {
      onopen: null,
      onmessage: null,
      onclose: null,
      close: () => ws.close(),
    };
    ws.onopen = () => adapter.onopen?.();
    ws.onmessage = (e) => adapter.onmessage?.({ data: String(e.data) });
    ws.onclose = () => adapter.onclose?.();
    return adapter;
  });
  stream.onStateChange((state) => {
    banner.textContent = state === "live" ? "" : "connection lost: showing stale state";
    banner.className = state === "live" ? "banner-hidden" : "banner-stale";
  });
  stream.onMessage((message: BusMessage) => {
    badges.consume(message);
    if (message.topic === "bt" && view) {
      const t = message.payload as { nodeId: string; status: string };
      applyStatus(view, t.nodeId, t.status as "SUCCESS" | "BUSY" | "FAILURE");
      renderTree();
    } else if (message.topic === "symbols") {
      renderSymbols((message.payload as { symbols: SymbolJson[] }).symbols);
    } else if (message.topic === "sim") {
      drawSchematic(message.payload);
    }
  });
  stream.connect();

  renderPalette();
  await refreshSymbols();
}

boot().catch((err) => {
  document.body.appendChild(el("pre", "boot-error", String(err)));
});
