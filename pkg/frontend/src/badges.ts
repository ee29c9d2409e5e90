// Live status badges: consumes tree-transition events from the bus stream
// and keeps a per-node status plus the exact order transitions arrived in,
// which must match the server's event trace.

import type { BusMessage, TreeTransition } from "./types.js";

export class BadgeBoard {
  readonly statuses = new Map<string, TreeTransition["status"]>();
  readonly log: TreeTransition[] = [];
  private listeners: ((t: TreeTransition) => void)[] = [];

  onTransition(cb: (t: TreeTransition) => void): void {
    this.listeners.push(cb);
  }

  /** Feed any bus message; only tree-transition topic messages apply. */
  consume(message: BusMessage): void {
    if (message.topic !== "bt") return;
    const t = message.payload as unknown as TreeTransition;
    this.statuses.set(t.nodeId, t.status);
    this.log.push(t);
    for (const cb of this.listeners) cb(t);
  }

  statusOf(nodeId: string): TreeTransition["status"] | null {
    return this.statuses.get(nodeId) ?? null;
  }

  reset(): void {
    this.statuses.clear();
    this.log.length = 0;
  }
}
