/** Console acceptance: the end-to-end checks against the mocked service. */

import { describe, expect, it } from "vitest";

import { ApiClient, StageOrderError } from "../src/api.js";
import { buildForcePlot, renderForcePlotSvg } from "../src/forceplot.js";
import { TimingCapture } from "../src/timing.js";
import type { RiskReport, Stage } from "../src/types.js";
import { SessionWorkflow, WorkflowError } from "../src/workflow.js";
import { approvalCount, editCount, MockService } from "./mockService.js";

describe("console acceptance", () => {
  it("runs the supervised loop end-to-end against a mocked service", async () => {
    const service = new MockService();
    let now = 0;
    const timing = new TimingCapture(() => (now += 100));
    const api = new ApiClient("http://mock", service.fetch, "dr-reviewer");
    const workflow = new SessionWorkflow(api, timing);
    await workflow.start();

    // 1. stage order enforced (locally and by the service)
    expect(() => workflow.openStage("therapy")).toThrow(WorkflowError);
    await expect(workflow.runPlan()).rejects.toBeInstanceOf(StageOrderError);

    await workflow.answer("yes");
    await workflow.answer("I am 62, BMI 29");

    // 2. an edit produces exactly one audit event
    await workflow.fetchDocument("report");
    workflow.edit("report", (draft) => {
      draft.reviewed = true;
    });
    await workflow.save("report");
    expect(editCount(service, workflow.id)).toBe(1);

    // 3. approve is idempotent: two clicks, one audit event
    await workflow.approve("intake");
    await workflow.approve("intake");
    expect(approvalCount(service, workflow.id)).toBe(1);

    await workflow.attachImaging({ study_id: "s", knees: {} });
    await workflow.approve("imaging");
    const risk = await workflow.runRisk();
    await workflow.approve("risk");
    await workflow.runPlan();
    await workflow.approve("therapy");
    expect(workflow.currentStage).toBe("done");

    // 4. scripted clock totals match the ArmResult schema arithmetic:
    // every stage opened/stopped once at 100 s per tick -> 4 x 100 s
    const stages: Stage[] = ["intake", "imaging", "risk", "therapy"];
    for (const stage of stages) {
      expect(timing.stageSeconds(stage)).toBe(100);
    }
    expect(timing.totalSeconds()).toBe(400);
    const payload = timing.exportForArm("physicians+kom");
    expect(payload.times).toEqual([400]);
    expect(payload.time_mean).toBe(400);

    // 5. the force-plot fixture renders with correct bar signs and ordering
    const report = risk.document as unknown as RiskReport;
    const model = buildForcePlot(report, "koos_symptoms_left_v01");
    expect(model.prediction).toBeCloseTo(72.18, 10);
    expect(model.cohortMean).toBeCloseTo(75.5, 10);
    expect(model.bars.map((b) => [b.feature, b.direction])).toEqual([
      ["peak_knee_extension_torque_left", "positive"],
      ["osteophyte_score_left", "negative"],
      ["koos_pain_left", "negative"],
    ]);
    const svg = renderForcePlotSvg(model);
    expect(svg).toContain("prediction 72.18");
    expect(svg).toContain("cohort mean 75.50");
  });
});
