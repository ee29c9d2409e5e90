// Plan editing: immutable mutations over the JSON tree with local structural
// validation mirroring the server's rules. Every committed state gets a fresh
// version number; saving round-trips through POST /plan (content-addressed
// ids) and surfaces server diagnostics. Invalid mutations are rejected and
// leave the document untouched, so a save can never ship a locally known
// broken structure.

import type { ApiClient } from "./api.js";
import type { DiagnosticJson, ParamValue, PlanNodeJson } from "./types.js";
import { isLeaf } from "./types.js";
import type { CategoryIndex } from "./treeView.js";

export interface MutationResult {
  ok: boolean;
  diagnostics: DiagnosticJson[];
}

const ok: MutationResult = { ok: true, diagnostics: [] };

function reject(nodeId: string, message: string): MutationResult {
  return { ok: false, diagnostics: [{ nodeId, message }] };
}

function clone(tree: PlanNodeJson): PlanNodeJson {
  return JSON.parse(JSON.stringify(tree)) as PlanNodeJson;
}

function renumber(tree: PlanNodeJson): void {
  let next = 0;
  const walk = (node: PlanNodeJson) => {
    node.id = `n${next++}`;
    if (!isLeaf(node)) node.children.forEach(walk);
  };
  walk(tree);
}

export function validateTree(tree: PlanNodeJson, known: CategoryIndex | null,
                             ): DiagnosticJson[] {
  const out: DiagnosticJson[] = [];
  const walk = (node: PlanNodeJson) => {
    if (isLeaf(node)) {
      if (known && !known.has(`${node.component}.${node.operation}`)) {
        out.push({ nodeId: node.id,
                   message: `unbound operation ${node.component}.${node.operation}` });
      }
      return;
    }
    if ((node.kind === "repeat" || node.kind === "reset")) {
      if (node.children.length !== 1) {
        out.push({ nodeId: node.id, message: `${node.kind} requires exactly one child` });
      }
      if (node.count === undefined || node.count < 0) {
        out.push({ nodeId: node.id, message: `${node.kind} requires a non-negative count` });
      }
    }
    node.children.forEach(walk);
  };
  walk(tree);
  return out;
}

export class PlanEditor {
  tree: PlanNodeJson;
  version = 0; // bumps on every committed mutation (optimistic lock)
  savedId: string | null;
  lastDiagnostics: DiagnosticJson[] = [];

  constructor(public name: string, tree: PlanNodeJson,
              private known: CategoryIndex | null = null,
              private api: ApiClient | null = null,
              savedId: string | null = null) {
    this.tree = clone(tree);
    renumber(this.tree);
    this.savedId = savedId;
  }

  find(id: string, node: PlanNodeJson | null = null): PlanNodeJson | null {
    const current = node ?? this.tree;
    if (current.id === id) return current;
    if (!isLeaf(current)) {
      for (const child of current.children) {
        const hit = this.find(id, child);
        if (hit) return hit;
      }
    }
    return null;
  }

  /** Try a structural edit; commit only if the result stays locally valid. */
  private commit(edit: (tree: PlanNodeJson) => MutationResult | null): MutationResult {
    const draft = clone(this.tree);
    const outcome = edit(draft);
    if (outcome !== null && !outcome.ok) {
      this.lastDiagnostics = outcome.diagnostics;
      return outcome;
    }
    renumber(draft);
    const diagnostics = validateTree(draft, this.known);
    if (diagnostics.length > 0) {
      this.lastDiagnostics = diagnostics;
      return { ok: false, diagnostics };
    }
    this.tree = draft;
    this.version += 1;
    this.lastDiagnostics = [];
    return ok;
  }

  addChild(parentId: string, index: number, child: PlanNodeJson): MutationResult {
    return this.commit((draft) => {
      const parent = this.find(parentId, draft);
      if (!parent || isLeaf(parent)) {
        return reject(parentId, "parent must be an internal node");
      }
      const position = Math.max(0, Math.min(index, parent.children.length));
      parent.children.splice(position, 0, clone(child));
      return null;
    });
  }

  removeNode(id: string): MutationResult {
    return this.commit((draft) => {
      if (draft.id === id) return reject(id, "cannot remove the root node");
      const parent = this.parentOfIn(draft, id);
      if (!parent || isLeaf(parent)) return reject(id, "node not found");
      parent.children = parent.children.filter((c) => c.id !== id);
      return null;
    });
  }

  /** Drag-to-reorder: move a child within its parent. */
  moveChild(parentId: string, from: number, to: number): MutationResult {
    return this.commit((draft) => {
      const parent = this.find(parentId, draft);
      if (!parent || isLeaf(parent)) return reject(parentId, "parent not found");
      if (from < 0 || from >= parent.children.length
          || to < 0 || to >= parent.children.length) {
        return reject(parentId, "reorder index out of range");
      }
      const [moved] = parent.children.splice(from, 1);
      parent.children.splice(to, 0, moved);
      return null;
    });
  }

  setParam(id: string, key: string, value: ParamValue): MutationResult {
    return this.commit((draft) => {
      const node = this.find(id, draft);
      if (!node || !isLeaf(node)) return reject(id, "parameters exist on leaves only");
      node.params[key] = value;
      return null;
    });
  }

  removeParam(id: string, key: string): MutationResult {
    return this.commit((draft) => {
      const node = this.find(id, draft);
      if (!node || !isLeaf(node)) return reject(id, "parameters exist on leaves only");
      delete node.params[key];
      return null;
    });
  }

  setCount(id: string, count: number): MutationResult {
    return this.commit((draft) => {
      const node = this.find(id, draft);
      if (!node || isLeaf(node) || (node.kind !== "repeat" && node.kind !== "reset")) {
        return reject(id, "count applies to repeat/reset nodes");
      }
      node.count = count;
      return null;
    });
  }

  private parentOfIn(draft: PlanNodeJson, id: string): PlanNodeJson | null {
    const walk = (node: PlanNodeJson): PlanNodeJson | null => {
      if (isLeaf(node)) return null;
      for (const child of node.children) {
        if (child.id === id) return node;
        const hit = walk(child);
        if (hit) return hit;
      }
      return null;
    };
    return walk(draft);
  }

  /** Persist through the plan API; returns the new content-addressed id. */
  async save(): Promise<{ id: string; diagnostics: DiagnosticJson[] }> {
    if (!this.api) throw new Error("editor has no API client");
    const local = validateTree(this.tree, this.known);
    if (local.length > 0) {
      this.lastDiagnostics = local;
      throw new Error(`cannot save: ${local[0].message}`);
    }
    const saved = await this.api.savePlanTree(this.name, this.tree);
    const diagnostics = await this.api.validatePlan(saved.id);
    this.savedId = saved.id;
    this.lastDiagnostics = diagnostics;
    return { id: saved.id, diagnostics };
  }
}
