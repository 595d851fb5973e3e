// Panel state as a pure fold over (telemetry frames, session events).
// Replaying the same event sequence reproduces the identical state, so
// the rendered panel is reproducible from a recorded stream.

import type { TelemetryFrame } from "./protocol.js";

export type Connection = "Connected" | "Reconnecting" | "Closed";

export interface UiState {
  connection: Connection;
  session: string | null;
  driver: boolean;
  lastFrame: TelemetryFrame | null;
  /** Footprint trail of the last frame (the invariant the map renders). */
  trail: [number, number][];
  /** Last 100 filtered values per sensor, oldest first. */
  sensorHistory: Record<string, number[]>;
  /** Visible notice (authorization refusal, protocol error); never silent. */
  notice: string | null;
  /** Wall-clock ms when the last frame arrived, for the stale-data age. */
  lastFrameWallMs: number | null;
}

export type UiEvent =
  | { type: "connected" }
  | { type: "reconnecting" }
  | { type: "closed" }
  | { type: "subscribed"; session: string; driver: boolean }
  | { type: "frame"; frame: TelemetryFrame; wallMs: number }
  | { type: "refused"; error: string }
  | { type: "notice-cleared" };

export const SENSOR_HISTORY_LIMIT = 100;

export function initialState(): UiState {
  return {
    connection: "Closed",
    session: null,
    driver: false,
    lastFrame: null,
    trail: [],
    sensorHistory: {},
    notice: null,
    lastFrameWallMs: null,
  };
}

export function reduce(state: UiState, event: UiEvent): UiState {
  switch (event.type) {
    case "connected":
      return { ...state, connection: "Connected" };
    case "reconnecting":
      // the stream is gone, so the session (and any driver token) is too
      return { ...state, connection: "Reconnecting", session: null, driver: false };
    case "closed":
      return { ...state, connection: "Closed", session: null, driver: false };
    case "subscribed":
      return { ...state, session: event.session, driver: event.driver };
    case "frame": {
      const history = { ...state.sensorHistory };
      for (const [id, value] of Object.entries(event.frame.sensors)) {
        const series = history[id] ? [...history[id], value] : [value];
        history[id] = series.slice(-SENSOR_HISTORY_LIMIT);
      }
      return {
        ...state,
        lastFrame: event.frame,
        trail: event.frame.footprints,
        sensorHistory: history,
        lastFrameWallMs: event.wallMs,
      };
    }
    case "refused":
      return { ...state, notice: event.error };
    case "notice-cleared":
      return { ...state, notice: null };
  }
}

/** Drive buttons are live only for a connected driver. */
export function canDrive(state: UiState): boolean {
  return state.driver && state.connection === "Connected";
}

export function replay(events: UiEvent[]): UiState {
  return events.reduce(reduce, initialState());
}
