/** Per-stage timing with an injectable clock.
 *
 * A stage timer starts when the stage opens and stops at approval; reopening
 * an approved stage never restarts it, so totals are monotone. Export matches
 * the harness's per-arm time-field shape.
 */

import type { ArmTimePayload, Stage } from "./types.js";

export type ClockSource = () => number; // seconds

export class TimingCapture {
  private openedAt = new Map<Stage, number>();
  private elapsed = new Map<Stage, number>();
  private stopped = new Set<Stage>();

  constructor(private readonly clock: ClockSource) {}

  openStage(stage: Stage): void {
    if (this.stopped.has(stage) || this.openedAt.has(stage)) {
      return; // approved stages stay stopped; double-open is a no-op
    }
    this.openedAt.set(stage, this.clock());
  }

  stopStage(stage: Stage): void {
    const startedAt = this.openedAt.get(stage);
    if (startedAt === undefined || this.stopped.has(stage)) {
      this.stopped.add(stage);
      return;
    }
    this.elapsed.set(stage, (this.elapsed.get(stage) ?? 0) + this.clock() - startedAt);
    this.openedAt.delete(stage);
    this.stopped.add(stage);
  }

  stageSeconds(stage: Stage): number {
    return this.elapsed.get(stage) ?? 0;
  }

  totalSeconds(): number {
    let total = 0;
    for (const value of this.elapsed.values()) {
      total += value;
    }
    return total;
  }

  /** Export one case's total in the ArmResult time-field schema. */
  exportForArm(arm: string, previousTimes: number[] = []): ArmTimePayload {
    const times = [...previousTimes, this.totalSeconds()];
    const mean = times.reduce((a, b) => a + b, 0) / times.length;
    let sd: number | null = null;
    if (times.length > 1) {
      const variance =
        times.reduce((acc, t) => acc + (t - mean) ** 2, 0) / (times.length - 1);
      sd = Math.sqrt(variance);
    }
    return { arm, times, time_mean: mean, time_sd: sd };
  }
}
