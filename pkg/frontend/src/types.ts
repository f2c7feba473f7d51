// Message shapes on the gateway's telemetry channel. Tick records carry no
// "type" field (their schema is fixed by the gateway); everything else is a
// typed control/broadcast message.

export interface DronePose {
  x: number;
  y: number;
  z: number;
  yaw: number;
  vx: number;
  vy: number;
  vz: number;
}

export interface TickMessage {
  t_us: number;
  action: string;
  phase: string;
  drone: DronePose;
  gates_passed: number;
}

export interface ControlMessage {
  type: string;
  [key: string]: unknown;
}

export type GatewayMessage = TickMessage | ControlMessage;

export interface Gate {
  center: [number, number, number];
  normal_yaw: number;
  size: number;
}

export interface Track {
  start: { x: number; y: number; z: number; yaw: number };
  gates: Gate[];
}

export function isTick(msg: unknown): msg is TickMessage {
  return (
    typeof msg === "object" &&
    msg !== null &&
    !("type" in msg) &&
    "t_us" in msg &&
    "drone" in msg &&
    "gates_passed" in msg
  );
}

export function parseMessage(text: string): GatewayMessage | null {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  if (isTick(doc)) return doc;
  if ("type" in doc && typeof (doc as ControlMessage).type === "string") {
    return doc as ControlMessage;
  }
  return null;
}
