import { describe, expect, it } from "vitest";

import { INTERNAL_TEMPLATES, leafFromPalette, paletteEntries } from "../src/palette.js";
import { componentList } from "./fixtures.js";

describe("operation palette", () => {
  const entries = paletteEntries(componentList());

  it("lists every advertised operation, sorted", () => {
    const names = entries.map((e) => `${e.component}.${e.operation}`);
    expect(names).toContain("arm.Move");
    expect(names).toContain("perception.SmartMove");
    expect(names).toContain("predicator.Check");
    expect([...names].sort()).toEqual(names);
  });

  it("keeps categories for leaf coloring", () => {
    const smartMove = entries.find((e) => e.operation === "SmartMove")!;
    expect(smartMove.category).toBe("action");
    const detect = entries.find((e) => e.operation === "DetectObjects")!;
    expect(detect.category).toBe("knowledge");
  });

  it("palette leaves start with empty params", () => {
    const entry = entries.find((e) => e.operation === "Move")!;
    const node = leafFromPalette(entry);
    expect(node).toMatchObject({ kind: "leaf", component: "arm", operation: "Move" });
    expect(node.kind === "leaf" && node.params).toEqual({});
  });

  it("internal templates cover the node vocabulary", () => {
    expect(INTERNAL_TEMPLATES.map((t) => t.kind)).toEqual(
      ["sequence", "selector", "repeat", "reset"]);
  });
});
