import { WorkbenchApi, type Job, type ScreenReport } from "./api.js";
import { CompareView } from "./compare.js";
import { renderImageGrid, renderKeptStatus } from "./grid_view.js";
import { parseHeightsCsv } from "./heights.js";
import { renderIndicatorPanel } from "./indicators.js";
import { pollJob } from "./poll.js";
import { CurationState } from "./state.js";

// The service normally runs on another port; ?api=... overrides.
const params = new URLSearchParams(window.location.search);
const api = new WorkbenchApi(params.get("api") ?? "http://127.0.0.1:8750");

const el = (id: string) => document.getElementById(id) as HTMLElement;
const button = (id: string) => el(id) as HTMLButtonElement;

let state: CurationState;
let lastReports: ScreenReport[] = [];
let compare: CompareView;

function logLine(text: string, cls = ""): void {
  const item = document.createElement("li");
  item.textContent = text;
  if (cls) item.className = cls;
  const log = el("job-log");
  log.prepend(item);
  while (log.children.length > 12) log.removeChild(log.lastChild as Node);
}

function repaint(dataset: Awaited<ReturnType<typeof api.fetchDataset>>): void {
  renderImageGrid(el("image-grid"), dataset, state, {
    thumbUrl: (id) => api.thumbUrl(id),
    onToggle: (id) => {
      state.toggle(id);
      repaint(dataset);
    },
  });
  const runButtons = [
    button("run-screen"),
    button("run-indicators"),
    button("reconstruct-a"),
    button("reconstruct-b"),
  ];
  renderKeptStatus(el("kept-count"), el("kept-message"), state, runButtons);
  renderIndicatorPanel(el("indicator-panel"), lastReports);
}

async function track(job: Job): Promise<Job> {
  state.activeJobIds.add(job.id);
  logLine(`job ${job.id} (${job.kind} ${job.params.method}) submitted`);
  const settled = await pollJob(api, job.id, {
    onUpdate: (j) => {
      el("job-status").textContent = `job ${j.id}: ${j.state}`;
    },
  });
  state.activeJobIds.delete(settled.id);
  logLine(
    `job ${settled.id} ${settled.state}` +
      (settled.error ? `: ${settled.error.message}` : ""),
    settled.state,
  );
  return settled;
}

async function runScreen(dataset: Awaited<ReturnType<typeof api.fetchDataset>>) {
  const method = (el("screen-method") as HTMLSelectElement).value;
  const job = await track(
    await api.submitJob({ kind: "screen", method, kept: state.kept() }),
  );
  if (job.state !== "done" || !job.result?.reports) return;
  lastReports = job.result.reports;
  const suggestion = lastReports.find((r) => !r.error);
  const apply = button("apply-suggestion");
  apply.disabled = suggestion === undefined;
  apply.onclick = () => {
    if (suggestion) {
      state.applySuggestion(suggestion);
      repaint(dataset);
    }
  };
  repaint(dataset);
}

async function runIndicators(dataset: Awaited<ReturnType<typeof api.fetchDataset>>) {
  const job = await track(
    await api.submitJob({ kind: "indicators", kept: state.kept() }),
  );
  if (job.state !== "done" || !job.result?.indicators) return;
  // present the standalone run as a one-row report table
  lastReports = [
    {
      method: "indicators",
      indicators: job.result.indicators,
      trace: [],
      removed: [],
      restored: null,
      kept: job.result.kept,
      breakdown: job.result.indicators.breakdown,
      error: null,
    },
  ];
  repaint(dataset);
}

async function runReconstruct(which: 0 | 1) {
  const method = (el("reconstruct-method") as HTMLSelectElement).value;
  const submitted = await api.submitJob({
    kind: "reconstruct",
    method,
    kept: state.kept(),
  });
  state.compareSlots[which] = submitted;
  compare.model.setPending(which, submitted);
  compare.refresh(which);
  const job = await track(submitted);
  state.compareSlots[which] = job;
  if (job.state === "failed" || !job.result?.artifacts) {
    compare.model.setFailed(which, job);
  } else {
    const csv = await api.fetchArtifactText(job.id, "heights.csv");
    compare.model.setReady(which, job, parseHeightsCsv(csv));
  }
  compare.refresh(which);
}

async function boot(): Promise<void> {
  let dataset;
  try {
    dataset = await api.fetchDataset();
  } catch (error) {
    el("banner").textContent =
      `curation service unreachable at ${api.baseUrl} - start it with ` +
      `"psideal serve" and reload (${error})`;
    el("banner").hidden = false;
    return;
  }
  el("dataset-title").textContent =
    `${dataset.name} - ${dataset.image_count} images`;
  state = new CurationState(dataset.image_count);
  compare = new CompareView(el("slot-a"), el("slot-b"));

  button("run-screen").addEventListener("click", () => void runScreen(dataset));
  button("run-indicators").addEventListener("click", () => void runIndicators(dataset));
  button("select-all").addEventListener("click", () => {
    state.selectAll();
    repaint(dataset);
  });
  button("reconstruct-a").addEventListener("click", () => void runReconstruct(0));
  button("reconstruct-b").addEventListener("click", () => void runReconstruct(1));
  (el("difference-toggle") as HTMLInputElement).addEventListener("change", (event) => {
    const on = (event.target as HTMLInputElement).checked;
    const message = compare.setDifference(on);
    el("compare-message").textContent = message ?? "";
    if (message) (event.target as HTMLInputElement).checked = false;
  });

  repaint(dataset);
}

void boot();
