import { describe, expect, it } from "vitest";

import { buildForcePlot, renderForcePlotSvg } from "../src/forceplot.js";
import type { RiskReport } from "../src/types.js";

const FIXTURE: RiskReport = {
  schema_version: 1,
  report_id: "risk-fixture",
  tasks: {
    koos_symptoms_left_v01: {
      unavailable: false,
      prediction: 72.18,
      cohort_mean: 75.5,
      below_cohort_mean: true,
    },
    empty_task: { unavailable: true },
  },
  force_plots: {
    koos_symptoms_left_v01: [
      { feature: "osteophyte_score_left", value: 2.0, contribution: -1.08 },
      { feature: "koos_pain_left", value: 61.0, contribution: -1.02 },
      { feature: "peak_knee_extension_torque_left", value: 86.0, contribution: 1.19 },
    ],
    empty_task: [],
  },
};

describe("force plot model", () => {
  it("orders bars by magnitude with correct signs", () => {
    const model = buildForcePlot(FIXTURE, "koos_symptoms_left_v01");
    expect(model.placeholder).toBe(false);
    expect(model.bars.map((b) => b.feature)).toEqual([
      "peak_knee_extension_torque_left",
      "osteophyte_score_left",
      "koos_pain_left",
    ]);
    expect(model.bars.map((b) => b.direction)).toEqual(["positive", "negative", "negative"]);
    expect(model.bars[0]!.length).toBe(1);
    expect(model.prediction).toBeCloseTo(72.18, 10);
    expect(model.cohortMean).toBeCloseTo(75.5, 10);
    expect(model.belowCohortMean).toBe(true);
  });

  it("renders one bar per contributor with both reference markers", () => {
    const svg = renderForcePlotSvg(buildForcePlot(FIXTURE, "koos_symptoms_left_v01"));
    expect(svg.match(/<rect/g)).toHaveLength(3);
    expect(svg).toContain('class="bar positive"');
    expect(svg).toContain('class="bar negative"');
    expect(svg).toContain("prediction 72.18");
    expect(svg).toContain("cohort mean 75.50");
    // torque bar points the opposite way from the negatives
    const torque = svg.match(/<rect x="([\d.]+)"[^>]*torque[^>]*\/>/);
    expect(torque).not.toBeNull();
  });

  it("positive bars sit right of the axis, negative bars left", () => {
    const width = 480;
    const svg = renderForcePlotSvg(buildForcePlot(FIXTURE, "koos_symptoms_left_v01"), width);
    const mid = width / 2;
    const rects = [...svg.matchAll(/<rect x="([\d.]+)" [^>]*data-feature="([^"]+)" data-contribution="([-\d.]+)"/g)];
    expect(rects).toHaveLength(3);
    for (const match of rects) {
      const x = Number(match[1]);
      const contribution = Number(match[3]);
      if (contribution >= 0) {
        expect(x).toBeCloseTo(mid, 5);
      } else {
        expect(x).toBeLessThan(mid);
      }
    }
  });

  it("single contributor still renders one bar", () => {
    const report: RiskReport = {
      ...FIXTURE,
      force_plots: {
        koos_symptoms_left_v01: [{ feature: "bmi", value: 31, contribution: -0.4 }],
      },
    };
    const model = buildForcePlot(report, "koos_symptoms_left_v01");
    expect(model.bars).toHaveLength(1);
    expect(renderForcePlotSvg(model).match(/<rect/g)).toHaveLength(1);
  });

  it("zero contributors produce the placeholder", () => {
    const model = buildForcePlot(FIXTURE, "empty_task");
    expect(model.placeholder).toBe(true);
    expect(renderForcePlotSvg(model)).toContain("no contributors available");
  });
});
