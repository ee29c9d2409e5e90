import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { BusMessage, ComponentJson, PlanJson } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

export function loadFixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "..", "fixtures", name), "utf-8")) as T;
}

export const polishingPlan = (): PlanJson => loadFixture<PlanJson>("polishing_plan.json");
export const assemblyPlan = (): PlanJson => loadFixture<PlanJson>("assembly_plan.json");
export const componentList = (): ComponentJson[] =>
  loadFixture<{ components: ComponentJson[] }>("components.json").components;
export const assemblyTrace = (): BusMessage[] =>
  loadFixture<{ messages: BusMessage[] }>("assembly_trace.json").messages;
