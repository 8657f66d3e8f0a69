import { describe, expect, it } from "vitest";

import { TimingCapture } from "../src/timing.js";
import type { Stage } from "../src/types.js";

function scriptedClock(step = 100) {
  let now = 0;
  return () => {
    now += step;
    return now;
  };
}

describe("timing capture", () => {
  it("scripted clock advancing 100 s per stage totals 400 s over 4 stages", () => {
    const timing = new TimingCapture(scriptedClock(100));
    const stages: Stage[] = ["intake", "imaging", "risk", "therapy"];
    for (const stage of stages) {
      timing.openStage(stage); // tick
      timing.stopStage(stage); // tick (+100 s elapsed)
    }
    expect(timing.totalSeconds()).toBe(400);
    for (const stage of stages) {
      expect(timing.stageSeconds(stage)).toBe(100);
    }
  });

  it("reopening an approved stage does not restart its timer (monotone total)", () => {
    const timing = new TimingCapture(scriptedClock(50));
    timing.openStage("intake");
    timing.stopStage("intake");
    const total = timing.totalSeconds();
    timing.openStage("intake"); // reopened after approval
    timing.stopStage("intake");
    expect(timing.totalSeconds()).toBe(total);
  });

  it("double-open is a no-op while running", () => {
    const clock = scriptedClock(10);
    const timing = new TimingCapture(clock);
    timing.openStage("risk");
    timing.openStage("risk");
    timing.stopStage("risk");
    expect(timing.stageSeconds("risk")).toBe(10);
  });

  it("export payload matches the ArmResult time-field schema arithmetic", () => {
    const timing = new TimingCapture(scriptedClock(100));
    timing.openStage("intake");
    timing.stopStage("intake");
    const payload = timing.exportForArm("physicians+kom", [300]);
    expect(payload).toEqual({
      arm: "physicians+kom",
      times: [300, 100],
      time_mean: 200,
      time_sd: Math.sqrt(((300 - 200) ** 2 + (100 - 200) ** 2) / 1),
    });
    expect(Object.keys(payload).sort()).toEqual(["arm", "time_mean", "time_sd", "times"]);
  });

  it("single case exports a null sd", () => {
    const timing = new TimingCapture(scriptedClock(75));
    timing.openStage("therapy");
    timing.stopStage("therapy");
    const payload = timing.exportForArm("kom");
    expect(payload.times).toEqual([75]);
    expect(payload.time_mean).toBe(75);
    expect(payload.time_sd).toBeNull();
  });
});
