// View model for the behavior-tree panel. Children render left to right in
// tick order; node colors follow the house convention: internal nodes blue,
// leaves that act on the robot green, leaves that update or query knowledge
// purple. Subtrees are collapsible.

import type { ComponentJson, PlanNodeJson } from "./types.js";
import { isLeaf } from "./types.js";

export type NodeColor = "internal" | "action" | "knowledge";
export type NodeStatus = "SUCCESS" | "BUSY" | "FAILURE" | null;

export interface TreeViewNode {
  id: string;
  kind: string;
  label: string;
  color: NodeColor;
  colorClass: string;
  children: TreeViewNode[];
  collapsed: boolean;
  status: NodeStatus;
}

export const COLOR_CLASS: Record<NodeColor, string> = {
  internal: "node-internal",
  action: "node-action",
  knowledge: "node-knowledge",
};

export type CategoryIndex = Map<string, "action" | "knowledge">;

export function categoryIndex(components: ComponentJson[]): CategoryIndex {
  const index: CategoryIndex = new Map();
  for (const component of components) {
    for (const op of component.operations) {
      index.set(`${component.name}.${op.name}`, op.category);
    }
  }
  return index;
}

const INTERNAL_SYMBOL: Record<string, string> = {
  sequence: "→", // the sequence arrow
  selector: "?",
};

export function nodeLabel(node: PlanNodeJson): string {
  if (isLeaf(node)) {
    return `${node.component}.${node.operation}`;
  }
  const symbol = INTERNAL_SYMBOL[node.kind];
  if (symbol) {
    return `${symbol} ${node.kind}`;
  }
  return `${node.kind.toUpperCase()} ${node.count ?? ""}`.trim();
}

export function buildTreeView(tree: PlanNodeJson, categories: CategoryIndex): TreeViewNode {
  const build = (node: PlanNodeJson): TreeViewNode => {
    let color: NodeColor = "internal";
    if (isLeaf(node)) {
      color = categories.get(`${node.component}.${node.operation}`) ?? "action";
    }
    return {
      id: node.id,
      kind: node.kind,
      label: nodeLabel(node),
      color,
      colorClass: COLOR_CLASS[color],
      children: isLeaf(node) ? [] : node.children.map(build),
      collapsed: false,
      status: null,
    };
  };
  return build(tree);
}

export function findNode(root: TreeViewNode, id: string): TreeViewNode | null {
  if (root.id === id) return root;
  for (const child of root.children) {
    const hit = findNode(child, id);
    if (hit) return hit;
  }
  return null;
}

export function toggleCollapsed(root: TreeViewNode, id: string): boolean {
  const node = findNode(root, id);
  if (!node || node.children.length === 0) return false;
  node.collapsed = !node.collapsed;
  return true;
}

export function applyStatus(root: TreeViewNode, nodeId: string, status: NodeStatus): boolean {
  const node = findNode(root, nodeId);
  if (!node) return false;
  node.status = status;
  return true;
}

/** Depth-first flatten honouring collapse state, for list-style rendering. */
export function visibleRows(root: TreeViewNode): { node: TreeViewNode; depth: number }[] {
  const rows: { node: TreeViewNode; depth: number }[] = [];
  const walk = (node: TreeViewNode, depth: number) => {
    rows.push({ node, depth });
    if (!node.collapsed) {
      for (const child of node.children) walk(child, depth + 1);
    }
  };
  walk(root, 0);
  return rows;
}
