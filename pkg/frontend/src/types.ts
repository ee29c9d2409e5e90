// Wire formats of the runtime API. Poses travel as 7-tuples
// [x, y, z, qw, qx, qy, qz]; symbol references in plan parameters as
// {"$sym": name}.

export type ParamValue = string | number | boolean | { $sym: string };

export interface LeafNodeJson {
  id: string;
  kind: "leaf";
  component: string;
  operation: string;
  params: Record<string, ParamValue>;
}

export interface InternalNodeJson {
  id: string;
  kind: "sequence" | "selector" | "repeat" | "reset";
  count?: number;
  children: PlanNodeJson[];
}

export type PlanNodeJson = LeafNodeJson | InternalNodeJson;

export interface PlanJson {
  id: string;
  name: string;
  text?: string;
  tree: PlanNodeJson;
}

export interface OperationJson {
  name: string;
  params: string[];
  category: "action" | "knowledge";
}

export interface ComponentJson {
  name: string;
  operations: OperationJson[];
  predicates: string[];
  symbolKinds: string[];
  inputTopics: string[];
  outputTopics: string[];
}

export interface SymbolJson {
  name: string;
  kind: string;
  pose: number[] | null;
  classLabel: string | null;
  source: string;
}

export interface BusMessage {
  topic: string;
  payload: Record<string, unknown>;
  sequence: number;
  global: number;
  timestamp: number;
}

export interface TreeTransition {
  nodeId: string;
  status: "SUCCESS" | "BUSY" | "FAILURE";
  tickIndex: number;
}

export interface DiagnosticJson {
  nodeId: string;
  message: string;
}

export interface TrialReportJson {
  planId: string;
  scene: string;
  trials: number;
  successes: number;
  perTrial: {
    seed: number;
    status: string;
    tickCount: number;
    failureNode: string | null;
    diagnostic: string | null;
  }[];
}

export function isLeaf(node: PlanNodeJson): node is LeafNodeJson {
  return node.kind === "leaf";
}
