// Wire types for the robot's HTTP control plane. The panel speaks only
// this public protocol; see docs/protocol.md in the repository root.

export type DriveDirection = "Forward" | "Backward" | "TurnLeft" | "TurnRight" | "Stop";

export interface TelemetryFrame {
  t_ms: number;
  bearing_deg: number;
  bearing_byte: number;
  pose_est: [number, number];
  footprints: [number, number][];
  total_distance_m: number;
  net_displacement_m: number;
  sensors: Record<string, number>;
  drive_state: DriveDirection;
}

export interface CommandReply {
  ok: boolean;
  applied_tick?: number;
  session?: string;
  driver?: boolean;
  error?: string;
}

const DIRECTIONS: DriveDirection[] = ["Forward", "Backward", "TurnLeft", "TurnRight", "Stop"];

function isPoint(v: unknown): v is [number, number] {
  return Array.isArray(v) && v.length === 2 && v.every((n) => typeof n === "number" && isFinite(n));
}

/** Parse one NDJSON telemetry line; returns null for anything malformed
 * so a corrupt line never takes the panel down. */
export function parseFrame(line: string): TelemetryFrame | null {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const f = obj as Record<string, unknown>;
  if (typeof f.t_ms !== "number" || typeof f.bearing_deg !== "number") return null;
  if (typeof f.bearing_byte !== "number") return null;
  if (!isPoint(f.pose_est)) return null;
  if (!Array.isArray(f.footprints) || !f.footprints.every(isPoint)) return null;
  if (typeof f.total_distance_m !== "number" || typeof f.net_displacement_m !== "number") return null;
  if (typeof f.sensors !== "object" || f.sensors === null) return null;
  if (!DIRECTIONS.includes(f.drive_state as DriveDirection)) return null;
  return f as unknown as TelemetryFrame;
}

export function driveCommand(direction: DriveDirection, session: string): object {
  return { kind: "Drive", drive: direction, session };
}

export function subscribeCommand(): object {
  return { kind: "Subscribe" };
}

export function tripResetCommand(session: string): object {
  return { kind: "TripReset", session };
}
