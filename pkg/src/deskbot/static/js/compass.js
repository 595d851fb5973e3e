// Virtual compass dial geometry. Pure functions from a frame to SVG
// attribute values; the needle angle is the frame bearing verbatim, no
// client-side smoothing.
export function compassView(frame) {
    if (frame === null) {
        return { angle: null, byteText: "byte --", degreesText: "---.-°", dimmed: true };
    }
    return {
        angle: frame.bearing_deg,
        byteText: `byte ${frame.bearing_byte}`,
        degreesText: `${frame.bearing_deg.toFixed(1)}°`,
        dimmed: false,
    };
}
export function needleTransform(angle, cx, cy) {
    return `rotate(${angle} ${cx} ${cy})`;
}
/** Tick marks every 45 degrees, drawn as one path around the rim. */
export function dialTicksPath(cx, cy, radius) {
    const parts = [];
    for (let i = 0; i < 8; i++) {
        const a = (i * 45 * Math.PI) / 180;
        const inner = i % 2 === 0 ? radius - 10 : radius - 6;
        const x1 = cx + inner * Math.sin(a);
        const y1 = cy - inner * Math.cos(a);
        const x2 = cx + radius * Math.sin(a);
        const y2 = cy - radius * Math.cos(a);
        parts.push(`M${x1.toFixed(2)},${y1.toFixed(2)}L${x2.toFixed(2)},${y2.toFixed(2)}`);
    }
    return parts.join("");
}
export const CARDINALS = [
    { label: "N", deg: 0 },
    { label: "E", deg: 90 },
    { label: "S", deg: 180 },
    { label: "W", deg: 270 },
];
export function cardinalPosition(deg, cx, cy, radius) {
    const a = (deg * Math.PI) / 180;
    return { x: cx + radius * Math.sin(a), y: cy - radius * Math.cos(a) };
}
