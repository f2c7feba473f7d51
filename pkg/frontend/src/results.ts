export interface RaceOutcome {
  finished: boolean;
  gates_passed: number;
  gates_total: number;
  total_time_s: number | null;
  splits_s: number[];
}

export interface RunMetrics {
  time_s: number;
  path_length_m: number;
  avg_velocity_mps: number;
  max_velocity_mps: number;
}

export interface RunRecord {
  outcome: RaceOutcome;
  metrics: RunMetrics | null;
}

/** Keeps every attempt and surfaces the best ones by flight time. */
export class ResultsTracker {
  runs: RunRecord[] = [];

  record(run: RunRecord): void {
    this.runs.push(run);
  }

  get attempts(): number {
    return this.runs.length;
  }

  /** Finished runs ranked by time, best first; k limits the list. */
  bestRuns(k = 3): RunRecord[] {
    return this.runs
      .filter((r) => r.outcome.finished && r.metrics !== null)
      .sort((a, b) => a.metrics!.time_s - b.metrics!.time_s)
      .slice(0, k);
  }

  best(): RunRecord | null {
    const ranked = this.bestRuns(1);
    return ranked.length ? ranked[0] : null;
  }
}
