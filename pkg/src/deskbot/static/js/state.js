// Panel state as a pure fold over (telemetry frames, session events).
// Replaying the same event sequence reproduces the identical state, so
// the rendered panel is reproducible from a recorded stream.
export const SENSOR_HISTORY_LIMIT = 100;
export function initialState() {
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
export function reduce(state, event) {
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
export function canDrive(state) {
    return state.driver && state.connection === "Connected";
}
export function replay(events) {
    return events.reduce(reduce, initialState());
}
