/** ROI + heatmap overlay state: per-task toggles and opacity control. */

export interface OverlayState {
  roi: number[][];
  heatmaps: Record<string, number[][]>;
  activeTask: string | null;
  opacity: number;
}

export function createOverlay(roi: number[][], heatmaps: Record<string, number[][]>): OverlayState {
  for (const [task, map] of Object.entries(heatmaps)) {
    if (map.length !== roi.length || (map[0]?.length ?? 0) !== (roi[0]?.length ?? 0)) {
      throw new Error(`heatmap ${task} dimensions do not match the ROI`);
    }
  }
  return { roi, heatmaps, activeTask: null, opacity: 0.5 };
}

export function setOpacity(state: OverlayState, opacity: number): OverlayState {
  if (!(opacity >= 0 && opacity <= 1)) {
    throw new Error("opacity must lie in [0, 1]");
  }
  return { ...state, opacity };
}

export function toggleTask(state: OverlayState, task: string | null): OverlayState {
  if (task !== null && !(task in state.heatmaps)) {
    throw new Error(`no heatmap for task ${task}`);
  }
  return { ...state, activeTask: task };
}

/** Blend the active heatmap over the ROI (both in [0, 1]). */
export function composite(state: OverlayState): number[][] {
  if (state.activeTask === null) {
    return state.roi;
  }
  const heat = state.heatmaps[state.activeTask];
  if (heat === undefined) {
    return state.roi;
  }
  return state.roi.map((row, y) =>
    row.map((pixel, x) => (1 - state.opacity) * pixel + state.opacity * (heat[y]?.[x] ?? 0)),
  );
}
