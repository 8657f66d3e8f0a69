/** Browser entry: wires the workflow to a minimal DOM shell.
 *
 * All state lives in SessionWorkflow/TimingCapture; this file only paints.
 */

import { ApiClient } from "./api.js";
import { buildForcePlot, renderForcePlotSvg } from "./forceplot.js";
import { TimingCapture } from "./timing.js";
import type { DocumentKind, RiskReport, Stage } from "./types.js";
import { STAGES } from "./types.js";
import { SessionWorkflow } from "./workflow.js";

const REVIEWABLE: Array<{ kind: DocumentKind; label: string }> = [
  { kind: "report", label: "Evaluation report" },
  { kind: "risk-report", label: "Risk report" },
  { kind: "plan", label: "Management plan" },
];

export function mountApp(root: HTMLElement, baseUrl: string): SessionWorkflow {
  const api = new ApiClient(baseUrl, fetch.bind(globalThis));
  const timing = new TimingCapture(() => performance.now() / 1000);
  const workflow = new SessionWorkflow(api, timing);

  root.innerHTML = `
    <header>
      <h1>KOM review console</h1>
      <div id="banner" hidden></div>
      <nav id="stages"></nav>
    </header>
    <section id="chat">
      <div id="prompt"></div>
      <input id="answer" placeholder="patient answer..." />
      <button id="send">Send</button>
    </section>
    <section id="documents"></section>
    <section id="forceplots"></section>
    <footer>
      <button id="approve">Approve stage</button>
      <span id="elapsed"></span>
    </footer>
  `;

  const paintStages = () => {
    const nav = root.querySelector("#stages")!;
    nav.innerHTML = STAGES.map(
      (stage) =>
        `<span class="stage ${workflow.stageUnlocked(stage) ? "unlocked" : "locked"} ` +
        `${stage === workflow.currentStage ? "active" : ""}">${stage}</span>`,
    ).join(" → ");
    const banner = root.querySelector<HTMLElement>("#banner")!;
    banner.hidden = workflow.networkBanner === null;
    banner.textContent = workflow.networkBanner ?? "";
  };

  const paintPrompt = () => {
    const prompt = workflow.currentPrompt;
    root.querySelector("#prompt")!.textContent = prompt ? prompt.text : "(intake idle)";
  };

  const paintDocuments = async () => {
    const section = root.querySelector("#documents")!;
    section.innerHTML = "";
    for (const { kind, label } of REVIEWABLE) {
      try {
        const view = await workflow.fetchDocument(kind);
        const editor = document.createElement("textarea");
        editor.value = JSON.stringify(view.buffer, null, 2);
        const save = document.createElement("button");
        save.textContent = `Save ${label}`;
        save.disabled = true;
        editor.addEventListener("input", () => {
          try {
            const parsed = JSON.parse(editor.value) as Record<string, unknown>;
            workflow.edit(kind, (draft) => {
              for (const key of Object.keys(draft)) delete draft[key];
              Object.assign(draft, parsed);
            });
            save.disabled = !workflow.canSave(kind);
          } catch {
            save.disabled = true;
          }
        });
        save.addEventListener("click", async () => {
          await workflow.save(kind);
          save.disabled = true;
          await paintDocuments();
        });
        const heading = document.createElement("h2");
        heading.textContent = label;
        section.append(heading, editor, save);
        if (kind === "risk-report") {
          paintForcePlots(view.document as unknown as RiskReport);
        }
      } catch {
        // document not produced yet; stage still upstream
      }
    }
  };

  const paintForcePlots = (report: RiskReport) => {
    const section = root.querySelector("#forceplots")!;
    section.innerHTML = Object.keys(report.tasks ?? {})
      .map((task) => renderForcePlotSvg(buildForcePlot(report, task)))
      .join("");
  };

  root.querySelector("#send")!.addEventListener("click", async () => {
    const input = root.querySelector<HTMLInputElement>("#answer")!;
    await workflow.answer(input.value);
    input.value = "";
    paintPrompt();
    paintStages();
  });

  root.querySelector("#approve")!.addEventListener("click", async () => {
    const stage = workflow.currentStage as Stage;
    await workflow.approve(stage);
    root.querySelector("#elapsed")!.textContent = `total ${timing.totalSeconds().toFixed(0)}s`;
    paintStages();
    await paintDocuments();
  });

  void workflow.start().then(() => {
    paintStages();
    paintPrompt();
  });
  return workflow;
}
