import { TelemetryFeed, Transport, connectWebSocket } from "./telemetry.js";
import { CalibrationWizard } from "./wizard.js";
import { RaceViewModel } from "./raceView.js";
import { ResultsTracker, RunRecord } from "./results.js";
import { drawAltitude, drawTopDown } from "./render.js";
import { Track } from "./types.js";

const $ = (id: string) => document.getElementById(id)!;

const feed = new TelemetryFeed();
const view = new RaceViewModel();
const results = new ResultsTracker();

const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws/telemetry`;
let transport: Transport = connectWebSocket(wsUrl, feed);

const wizard = new CalibrationWizard(
  { send: (t) => transport.send(t) },
  {
    onPrompt: (action, index, total) => {
      $("wizard-prompt").textContent = `Hold the ${action} gesture (${index + 1}/${total})`;
    },
    onProgress: (action, collected, needed) => {
      $("wizard-progress").textContent = `${action}: ${collected}/${needed}`;
    },
    onPhase: (phase) => {
      $("wizard-state").textContent = phase;
      if (phase === "done") $("wizard-prompt").textContent = "Calibration saved.";
      if (phase === "aborted") $("wizard-prompt").textContent = "Calibration aborted; no profile written.";
    },
    onError: (message) => {
      $("wizard-prompt").textContent = `Re-run needed: ${message}`;
    },
  },
);

feed.onTick((tick) => view.onTick(tick));
feed.onControl((msg) => wizard.handleMessage(msg));

fetch("/api/track")
  .then((r) => r.json())
  .then((track: Track) => view.setTrack(track))
  .catch(() => {});

async function refreshResult(): Promise<void> {
  try {
    const r = await fetch("/api/result");
    if (!r.ok) return;
    const body = await r.json();
    const run: RunRecord = { outcome: body.result, metrics: body.metrics };
    results.record(run);
    renderResults();
  } catch {
    /* gateway not reachable; banner already shows staleness */
  }
}

function renderResults(): void {
  const rows = results.bestRuns(3).map(
    (r, i) =>
      `#${i + 1}  time ${r.metrics!.time_s.toFixed(2)} s  ` +
      `path ${r.metrics!.path_length_m.toFixed(2)} m  ` +
      `avg ${r.metrics!.avg_velocity_mps.toFixed(2)} m/s`,
  );
  $("results-list").textContent = rows.length
    ? rows.join("\n")
    : "no finished runs yet";
  $("results-attempts").textContent = `${results.attempts} attempt(s) recorded`;
}

let lastPhase = "";
function frame() {
  const top = $("topdown") as HTMLCanvasElement;
  const alt = $("altitude") as HTMLCanvasElement;
  drawTopDown(top.getContext("2d")!, view, top.width, top.height);
  drawAltitude(alt.getContext("2d")!, view, alt.width, alt.height);

  const last = feed.lastTick;
  $("action-value").textContent = last ? last.action : "-";
  $("phase-value").textContent = last ? last.phase : "-";
  $("gates-value").textContent = view.track
    ? `${view.gatesPassed}/${view.track.gates.length}`
    : String(view.gatesPassed);
  if (last) {
    const v = Math.hypot(last.drone.vx, last.drone.vy, last.drone.vz);
    $("velocity-value").textContent = `${v.toFixed(2)} m/s`;
  }
  $("stale-banner").style.display = feed.isStale(1000) ? "block" : "none";

  // a landing just completed: pull the run result from the gateway
  if (last && lastPhase === "Landing" && last.phase === "Disarmed") {
    void refreshResult();
  }
  lastPhase = last?.phase ?? lastPhase;
  requestAnimationFrame(frame);
}

$("btn-calibrate").addEventListener("click", () => wizard.start());
$("btn-abort").addEventListener("click", () => wizard.abort());
$("btn-reset-view").addEventListener("click", () => view.reset());
$("btn-refresh-results").addEventListener("click", () => void refreshResult());

renderResults();
requestAnimationFrame(frame);
