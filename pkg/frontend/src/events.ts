// Event-stream client over the /events websocket.
//
// The server assigns every message a global sequence number and replays from
// `?from=N` on connect, so resuming from the next unseen sequence after a
// disconnect yields a gap-free stream. While disconnected the state is
// "stale" (the UI shows a banner) and reconnection is automatic.

import type { BusMessage } from "./types.js";

export interface MinimalSocket {
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => MinimalSocket;
export type Scheduler = (fn: () => void, delayMs: number) => void;

export type StreamState = "connecting" | "live" | "stale";

export interface EventStreamOptions {
  reconnectDelayMs?: number;
  schedule?: Scheduler;
}

export class GapError extends Error {
  constructor(expected: number, got: number) {
    super(`event stream gap: expected global ${expected}, got ${got}`);
  }
}

export class EventStreamClient {
  private cursor = 0; // next global sequence we expect
  private socket: MinimalSocket | null = null;
  private stopped = false;
  private state: StreamState = "connecting";
  private messageListeners: ((m: BusMessage) => void)[] = [];
  private stateListeners: ((s: StreamState) => void)[] = [];
  private readonly delay: number;
  private readonly schedule: Scheduler;

  constructor(private baseUrl: string, private factory: SocketFactory,
              options: EventStreamOptions = {}) {
    this.delay = options.reconnectDelayMs ?? 500;
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
  }

  onMessage(cb: (m: BusMessage) => void): void {
    this.messageListeners.push(cb);
  }

  onStateChange(cb: (s: StreamState) => void): void {
    this.stateListeners.push(cb);
  }

  get currentState(): StreamState {
    return this.state;
  }

  get nextSequence(): number {
    return this.cursor;
  }

  connect(): void {
    this.stopped = false;
    this.open();
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
    this.socket = null;
  }

  private setState(state: StreamState): void {
    if (this.state === state) return;
    this.state = state;
    for (const cb of this.stateListeners) cb(state);
  }

  private open(): void {
    const socket = this.factory(`${this.baseUrl}/events?from=${this.cursor}`);
    this.socket = socket;
    socket.onopen = () => this.setState("live");
    socket.onmessage = (event) => this.handle(JSON.parse(event.data) as BusMessage);
    socket.onclose = () => {
      if (this.stopped) return;
      this.setState("stale");
      this.schedule(() => {
        if (!this.stopped) this.open();
      }, this.delay);
    };
  }

  private handle(message: BusMessage): void {
    if (message.global < this.cursor) {
      return; // replayed duplicate after resume; already delivered
    }
    if (message.global > this.cursor) {
      throw new GapError(this.cursor, message.global);
    }
    this.cursor = message.global + 1;
    for (const cb of this.messageListeners) cb(message);
  }
}
