// Panel wiring: one telemetry stream in, command POSTs out, and a
// render pass that projects the folded UiState onto the static DOM.

import { ApiClient, TelemetryStream } from "./client.js";
import { CARDINALS, cardinalPosition, compassView, dialTicksPath, needleTransform } from "./compass.js";
import { mapView } from "./map.js";
import { driveCommand, tripResetCommand, type DriveDirection } from "./protocol.js";
import { canDrive, initialState, reduce, type UiEvent, type UiState } from "./state.js";
import { sparklineLabel, sparklinePath } from "./sparkline.js";

const MAP_W = 420;
const MAP_H = 420;
const DIAL_C = 110;
const DIAL_R = 95;

const KEY_TO_DIRECTION: Record<string, DriveDirection> = {
  ArrowUp: "Forward",
  ArrowDown: "Backward",
  ArrowLeft: "TurnLeft",
  ArrowRight: "TurnRight",
  " ": "Stop",
};

let state: UiState = initialState();
const client = new ApiClient();
let noticeTimer: number | undefined;

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el;
}

function dispatch(event: UiEvent): void {
  state = reduce(state, event);
  if (event.type === "refused") {
    window.clearTimeout(noticeTimer);
    noticeTimer = window.setTimeout(() => dispatch({ type: "notice-cleared" }), 4000);
  }
  render();
}

async function sendDrive(direction: DriveDirection): Promise<void> {
  if (state.connection !== "Connected" || state.session === null) {
    dispatch({ type: "refused", error: "not connected" });
    return;
  }
  try {
    const reply = await client.command(driveCommand(direction, state.session));
    if (!reply.ok) {
      dispatch({ type: "refused", error: reply.error ?? "refused" });
    }
  } catch {
    dispatch({ type: "refused", error: "command failed: connection error" });
  }
}

async function sendTripReset(): Promise<void> {
  if (state.session === null) return;
  try {
    const reply = await client.command(tripResetCommand(state.session));
    if (!reply.ok) dispatch({ type: "refused", error: reply.error ?? "refused" });
  } catch {
    dispatch({ type: "refused", error: "command failed: connection error" });
  }
}

function render(): void {
  const status = $("status");
  status.textContent = state.connection;
  status.className = `status ${state.connection.toLowerCase()}`;

  const badge = $("driver-badge");
  badge.textContent = state.session === null ? "no session" : state.driver ? "driver" : "viewer";
  badge.className = `badge ${state.driver ? "driver" : "viewer"}`;
  ($("claim") as HTMLButtonElement).hidden = state.driver || state.connection !== "Connected";

  const notice = $("notice");
  notice.hidden = state.notice === null;
  notice.textContent = state.notice ?? "";

  const driving = canDrive(state);
  for (const button of document.querySelectorAll<HTMLButtonElement>("button[data-drive]")) {
    button.disabled = !driving;
  }
  ($("trip-reset") as HTMLButtonElement).disabled = state.connection !== "Connected";

  const dial = compassView(state.lastFrame);
  $("compass").classList.toggle("dimmed", dial.dimmed);
  if (dial.angle !== null) {
    $("needle").setAttribute("transform", needleTransform(dial.angle, DIAL_C, DIAL_C));
  }
  $("bearing-deg").textContent = dial.degreesText;
  $("bearing-byte").textContent = dial.byteText;

  const map = mapView(state.lastFrame, MAP_W, MAP_H);
  $("trail").setAttribute("d", map.path);
  const marker = $("marker");
  if (map.marker === null) {
    marker.setAttribute("visibility", "hidden");
  } else {
    marker.setAttribute("visibility", "visible");
    marker.setAttribute("cx", map.marker[0].toFixed(2));
    marker.setAttribute("cy", map.marker[1].toFixed(2));
  }
  $("total").textContent = map.totalText;
  $("net").textContent = map.netText;
  $("drive-state").textContent = state.lastFrame ? state.lastFrame.drive_state : "--";

  renderSensors();
  renderAge();
}

function renderSensors(): void {
  const host = $("sensors");
  for (const [id, series] of Object.entries(state.sensorHistory)) {
    let card = document.getElementById(`sensor-${id}`);
    if (card === null) {
      card = document.createElement("div");
      card.id = `sensor-${id}`;
      card.className = "sensor";
      card.innerHTML =
        `<span class="sensor-label"></span>` +
        `<svg viewBox="0 0 120 36" width="120" height="36"><path fill="none"></path></svg>`;
      host.appendChild(card);
    }
    card.querySelector(".sensor-label")!.textContent = sparklineLabel(id, series);
    card.querySelector("path")!.setAttribute("d", sparklinePath(series, 120, 36));
  }
}

function renderAge(): void {
  const el = $("age");
  if (state.lastFrameWallMs === null) {
    el.textContent = "no data";
    return;
  }
  const age = Date.now() - state.lastFrameWallMs;
  el.textContent = age > 1500 ? `stale ${(age / 1000).toFixed(1)}s` : "live";
  el.className = age > 1500 ? "age stale" : "age";
}

function drawDial(): void {
  $("dial-ticks").setAttribute("d", dialTicksPath(DIAL_C, DIAL_C, DIAL_R));
  const host = $("dial-labels");
  for (const { label, deg } of CARDINALS) {
    const pos = cardinalPosition(deg, DIAL_C, DIAL_C, DIAL_R - 22);
    const text = document.createElementNS("http://www.w3.org/2000/svg", "text");
    text.setAttribute("x", pos.x.toFixed(1));
    text.setAttribute("y", (pos.y + 4).toFixed(1));
    text.textContent = label;
    host.appendChild(text);
  }
}

function wireControls(): void {
  for (const button of document.querySelectorAll<HTMLButtonElement>("button[data-drive]")) {
    button.addEventListener("click", () => void sendDrive(button.dataset.drive as DriveDirection));
  }
  $("trip-reset").addEventListener("click", () => void sendTripReset());
  $("claim").addEventListener("click", () => stream.reconnect());
  document.addEventListener("keydown", (event) => {
    const direction = KEY_TO_DIRECTION[event.key];
    if (direction === undefined || event.repeat) return;
    event.preventDefault();
    void sendDrive(direction);
  });
}

const stream = new TelemetryStream(client, 100, { onEvent: dispatch });

drawDial();
wireControls();
render();
window.setInterval(renderAge, 500);
void stream.run();
