import { ControlMessage, TickMessage, isTick, parseMessage } from "./types.js";

export interface Transport {
  send(text: string): void;
  close?(): void;
}

type TickHandler = (tick: TickMessage) => void;
type ControlHandler = (msg: ControlMessage) => void;

/** Dispatches incoming telemetry-channel messages and tracks freshness. */
export class TelemetryFeed {
  lastTick: TickMessage | null = null;
  lastTickWallMs: number | null = null;
  malformed = 0;

  private tickHandlers: TickHandler[] = [];
  private controlHandlers: ControlHandler[] = [];

  constructor(private now: () => number = () => Date.now()) {}

  onTick(handler: TickHandler): void {
    this.tickHandlers.push(handler);
  }

  onControl(handler: ControlHandler): void {
    this.controlHandlers.push(handler);
  }

  handleMessage(text: string): void {
    const msg = parseMessage(text);
    if (msg === null) {
      this.malformed += 1;
      return;
    }
    if (isTick(msg)) {
      this.lastTick = msg;
      this.lastTickWallMs = this.now();
      for (const h of this.tickHandlers) h(msg);
    } else {
      for (const h of this.controlHandlers) h(msg);
    }
  }

  /** True once ticks have been seen but none within the threshold. */
  isStale(thresholdMs = 1000): boolean {
    if (this.lastTickWallMs === null) return false;
    return this.now() - this.lastTickWallMs > thresholdMs;
  }
}

export function connectWebSocket(url: string, feed: TelemetryFeed): Transport {
  const ws = new WebSocket(url);
  ws.onmessage = (ev) => feed.handleMessage(String(ev.data));
  return {
    send: (text: string) => ws.send(text),
    close: () => ws.close(),
  };
}
