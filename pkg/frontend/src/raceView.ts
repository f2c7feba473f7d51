import { TickMessage, Track } from "./types.js";

export interface GateTick {
  gate: number; // 1-based gate number
  t_us: number;
}

/**
 * View state for the live race panel: recent drone poses, which gates have
 * been ticked off (in the order the gateway reported them), and the current
 * action/phase readout.
 */
export class RaceViewModel {
  track: Track | null = null;
  poses: TickMessage[] = [];
  gateTicks: GateTick[] = [];

  constructor(public maxPoses = 3000) {}

  setTrack(track: Track): void {
    this.track = track;
  }

  get lastPose(): TickMessage | null {
    return this.poses.length ? this.poses[this.poses.length - 1] : null;
  }

  get gatesPassed(): number {
    return this.gateTicks.length;
  }

  onTick(tick: TickMessage): void {
    const before = this.lastPose?.gates_passed ?? 0;
    this.poses.push(tick);
    if (this.poses.length > this.maxPoses) {
      this.poses.splice(0, this.poses.length - this.maxPoses);
    }
    for (let g = before + 1; g <= tick.gates_passed; g++) {
      this.gateTicks.push({ gate: g, t_us: tick.t_us });
    }
  }

  reset(): void {
    this.poses = [];
    this.gateTicks = [];
  }
}
