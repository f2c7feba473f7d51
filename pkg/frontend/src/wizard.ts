import { ControlMessage } from "./types.js";
import { Transport } from "./telemetry.js";

// Must match the gateway's action vocabulary (and its tie-break order).
export const ACTIONS = [
  "Up",
  "Down",
  "Left",
  "Right",
  "FarLeft",
  "FarRight",
  "Wide",
  "Squint",
  "Center",
  "Raise",
] as const;

export type ActionName = (typeof ACTIONS)[number];

export type WizardPhase =
  | "idle"
  | "starting"
  | "collecting"
  | "finishing"
  | "done"
  | "aborted"
  | "failed";

export interface WizardEvents {
  onPrompt?(action: string, index: number, total: number): void;
  onProgress?(action: string, collected: number, needed: number): void;
  onPhase?(phase: WizardPhase): void;
  onError?(message: string): void;
}

/**
 * Drives a full calibration pass over the telemetry channel: ten prompts,
 * sample collection per action, retry of actions the gateway rejects as
 * noisy, and a final profile confirmation. Aborting mid-pass leaves no
 * profile behind.
 */
export class CalibrationWizard {
  phase: WizardPhase = "idle";
  current: ActionName | null = null;
  promptsIssued: string[] = [];
  profile: unknown = null;
  lastError: string | null = null;

  private queue: ActionName[] = [];
  private retries = new Map<string, number>();

  constructor(
    private transport: Transport,
    private events: WizardEvents = {},
    private samplesPerAction = 30,
    private maxRetriesPerAction = 2,
  ) {}

  start(): void {
    this.queue = [...ACTIONS];
    this.promptsIssued = [];
    this.profile = null;
    this.lastError = null;
    this.retries.clear();
    this.setPhase("starting");
    this.transport.send(JSON.stringify({ type: "calibration_start" }));
  }

  abort(): void {
    if (this.phase === "idle" || this.phase === "done") return;
    this.transport.send(JSON.stringify({ type: "calibration_abort" }));
    this.setPhase("aborted");
  }

  handleMessage(msg: ControlMessage): void {
    if (this.phase === "aborted" || this.phase === "done") return;
    switch (msg.type) {
      case "calibration_ack":
        this.handleAck(msg);
        break;
      case "prompt":
        this.events.onPrompt?.(
          String(msg.action),
          Number(msg.index ?? 0),
          Number(msg.total ?? ACTIONS.length),
        );
        break;
      case "calibration_progress":
        this.events.onProgress?.(
          String(msg.action),
          Number(msg.collected ?? 0),
          Number(msg.needed ?? this.samplesPerAction),
        );
        break;
      case "calibration_error":
        this.handleError(msg);
        break;
    }
  }

  private handleAck(msg: ControlMessage): void {
    const op = String(msg.op);
    if (op === "start") {
      this.collectNext();
    } else if (op === "collect") {
      if (msg.complete === true) {
        this.collectNext();
      } else {
        // timed out short of the target: ask for the same action again
        this.recollect(String(msg.action));
      }
    } else if (op === "finish") {
      this.profile = msg.profile ?? null;
      this.setPhase("done");
    } else if (op === "abort") {
      this.setPhase("aborted");
    }
  }

  private handleError(msg: ControlMessage): void {
    this.lastError = String(msg.error ?? "calibration failed");
    const action = typeof msg.action === "string" ? msg.action : null;
    if (action !== null && this.canRetry(action)) {
      // the gateway rejected this action (noisy/underfilled): redo it
      this.events.onError?.(this.lastError);
      this.recollect(action);
      return;
    }
    this.events.onError?.(this.lastError);
    this.setPhase("failed");
  }

  private canRetry(action: string): boolean {
    return (this.retries.get(action) ?? 0) < this.maxRetriesPerAction;
  }

  private recollect(action: string): void {
    this.retries.set(action, (this.retries.get(action) ?? 0) + 1);
    this.sendCollect(action as ActionName);
  }

  private collectNext(): void {
    const next = this.queue.shift();
    if (next === undefined) {
      this.setPhase("finishing");
      this.transport.send(JSON.stringify({ type: "calibration_finish" }));
      return;
    }
    this.sendCollect(next);
  }

  private sendCollect(action: ActionName): void {
    this.current = action;
    this.promptsIssued.push(action);
    this.setPhase("collecting");
    this.transport.send(
      JSON.stringify({
        type: "calibration_collect",
        action,
        count: this.samplesPerAction,
      }),
    );
  }

  private setPhase(phase: WizardPhase): void {
    this.phase = phase;
    this.events.onPhase?.(phase);
  }
}
