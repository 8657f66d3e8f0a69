/** Force-plot rendering: signed contributor bars around the base value. */

import type { ForceContribution, RiskReport } from "./types.js";

export interface ForceBar {
  feature: string;
  value: number | null;
  contribution: number;
  direction: "positive" | "negative";
  /** Bar length as a fraction of the largest magnitude (0..1]. */
  length: number;
}

export interface ForcePlotModel {
  task: string;
  prediction: number | null;
  cohortMean: number | null;
  belowCohortMean: boolean;
  bars: ForceBar[];
  placeholder: boolean;
}

/** Sorted, signed bar model for one task's force plot. */
export function buildForcePlot(report: RiskReport, task: string): ForcePlotModel {
  const section = report.tasks[task];
  const contributions: ForceContribution[] = report.force_plots[task] ?? [];
  if (!section || section.unavailable || contributions.length === 0) {
    return {
      task,
      prediction: section?.prediction ?? null,
      cohortMean: section?.cohort_mean ?? null,
      belowCohortMean: section?.below_cohort_mean ?? false,
      bars: [],
      placeholder: true,
    };
  }
  const sorted = [...contributions].sort(
    (a, b) => Math.abs(b.contribution) - Math.abs(a.contribution) || a.feature.localeCompare(b.feature),
  );
  const maxMagnitude = Math.abs(sorted[0]?.contribution ?? 1) || 1;
  const bars: ForceBar[] = sorted.map((item) => ({
    feature: item.feature,
    value: item.value,
    contribution: item.contribution,
    direction: item.contribution >= 0 ? "positive" : "negative",
    length: Math.abs(item.contribution) / maxMagnitude,
  }));
  return {
    task,
    prediction: section.prediction ?? null,
    cohortMean: section.cohort_mean ?? null,
    belowCohortMean: section.below_cohort_mean ?? false,
    bars,
    placeholder: false,
  };
}

/** Plain SVG rendering of the model (positive bars right, negative left). */
export function renderForcePlotSvg(model: ForcePlotModel, width = 480, rowHeight = 22): string {
  if (model.placeholder) {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="40">` +
      `<text x="8" y="24" class="placeholder">no contributors available</text></svg>`
    );
  }
  const mid = width / 2;
  const height = (model.bars.length + 2) * rowHeight;
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}">`,
    `<line x1="${mid}" y1="0" x2="${mid}" y2="${height}" class="axis"/>`,
  ];
  model.bars.forEach((bar, index) => {
    const y = (index + 1) * rowHeight;
    const barWidth = Math.max(1, bar.length * (mid - 60));
    const x = bar.direction === "positive" ? mid : mid - barWidth;
    parts.push(
      `<rect x="${x.toFixed(1)}" y="${y - 14}" width="${barWidth.toFixed(1)}" height="12" ` +
        `class="bar ${bar.direction}" data-feature="${bar.feature}" ` +
        `data-contribution="${bar.contribution}"/>`,
      `<text x="${bar.direction === "positive" ? mid + barWidth + 4 : mid - barWidth - 4}" ` +
        `y="${y - 4}" text-anchor="${bar.direction === "positive" ? "start" : "end"}">` +
        `${bar.feature} (${bar.contribution >= 0 ? "+" : ""}${bar.contribution.toFixed(2)})</text>`,
    );
  });
  if (model.prediction !== null) {
    parts.push(
      `<text x="8" y="${height - 6}" class="marker prediction">prediction ${model.prediction.toFixed(2)}</text>`,
    );
  }
  if (model.cohortMean !== null) {
    parts.push(
      `<text x="${width - 8}" y="${height - 6}" text-anchor="end" class="marker cohort">` +
        `cohort mean ${model.cohortMean.toFixed(2)}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
