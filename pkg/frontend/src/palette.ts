// Operation palette: the list of available operations, derived from the
// component descriptors, from which leaves are added to a plan.

import type { ComponentJson, PlanNodeJson } from "./types.js";

export interface PaletteEntry {
  component: string;
  operation: string;
  category: "action" | "knowledge";
  params: string[];
}

export function paletteEntries(components: ComponentJson[]): PaletteEntry[] {
  const entries: PaletteEntry[] = [];
  for (const component of components) {
    for (const op of component.operations) {
      entries.push({
        component: component.name,
        operation: op.name,
        category: op.category,
        params: op.params,
      });
    }
  }
  entries.sort((a, b) =>
    a.component === b.component
      ? a.operation.localeCompare(b.operation)
      : a.component.localeCompare(b.component));
  return entries;
}

export function leafFromPalette(entry: PaletteEntry): PlanNodeJson {
  return {
    id: "",
    kind: "leaf",
    component: entry.component,
    operation: entry.operation,
    params: {},
  };
}

export const INTERNAL_TEMPLATES: PlanNodeJson[] = [
  { id: "", kind: "sequence", children: [] },
  { id: "", kind: "selector", children: [] },
  { id: "", kind: "repeat", count: 1, children: [] },
  { id: "", kind: "reset", count: 1, children: [] },
];
