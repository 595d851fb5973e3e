// Wire types for the robot's HTTP control plane. The panel speaks only
// this public protocol; see docs/protocol.md in the repository root.
const DIRECTIONS = ["Forward", "Backward", "TurnLeft", "TurnRight", "Stop"];
function isPoint(v) {
    return Array.isArray(v) && v.length === 2 && v.every((n) => typeof n === "number" && isFinite(n));
}
/** Parse one NDJSON telemetry line; returns null for anything malformed
 * so a corrupt line never takes the panel down. */
export function parseFrame(line) {
    let obj;
    try {
        obj = JSON.parse(line);
    }
    catch {
        return null;
    }
    if (typeof obj !== "object" || obj === null)
        return null;
    const f = obj;
    if (typeof f.t_ms !== "number" || typeof f.bearing_deg !== "number")
        return null;
    if (typeof f.bearing_byte !== "number")
        return null;
    if (!isPoint(f.pose_est))
        return null;
    if (!Array.isArray(f.footprints) || !f.footprints.every(isPoint))
        return null;
    if (typeof f.total_distance_m !== "number" || typeof f.net_displacement_m !== "number")
        return null;
    if (typeof f.sensors !== "object" || f.sensors === null)
        return null;
    if (!DIRECTIONS.includes(f.drive_state))
        return null;
    return f;
}
export function driveCommand(direction, session) {
    return { kind: "Drive", drive: direction, session };
}
export function subscribeCommand() {
    return { kind: "Subscribe" };
}
export function tripResetCommand(session) {
    return { kind: "TripReset", session };
}
