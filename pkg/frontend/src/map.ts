// Footprint map projection: world metres (x east, y north) into an SVG
// viewport, north up, auto-scaled to the trail's bounding box.

import type { TelemetryFrame } from "./protocol.js";

export interface MapTransform {
  scale: number; // px per metre
  offsetX: number;
  offsetY: number;
}

const MIN_SPAN_M = 0.2; // a fresh trail still gets a sane scale

export function fitTransform(
  points: [number, number][],
  width: number,
  height: number,
  margin = 20,
): MapTransform {
  let minX = 0, maxX = 0, minY = 0, maxY = 0;
  if (points.length > 0) {
    minX = Math.min(...points.map((p) => p[0]));
    maxX = Math.max(...points.map((p) => p[0]));
    minY = Math.min(...points.map((p) => p[1]));
    maxY = Math.max(...points.map((p) => p[1]));
  }
  const spanX = Math.max(maxX - minX, MIN_SPAN_M);
  const spanY = Math.max(maxY - minY, MIN_SPAN_M);
  const scale = Math.min((width - 2 * margin) / spanX, (height - 2 * margin) / spanY);
  const cx = (minX + maxX) / 2;
  const cy = (minY + maxY) / 2;
  return {
    scale,
    offsetX: width / 2 - cx * scale,
    offsetY: height / 2 + cy * scale,
  };
}

/** World metres to viewport pixels; north points up the screen. */
export function project(point: [number, number], t: MapTransform): [number, number] {
  return [point[0] * t.scale + t.offsetX, -point[1] * t.scale + t.offsetY];
}

export function trailPath(points: [number, number][], t: MapTransform): string {
  if (points.length === 0) return "";
  return points
    .map((p, i) => {
      const [x, y] = project(p, t);
      return `${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`;
    })
    .join("");
}

export interface MapView {
  path: string;
  marker: [number, number] | null;
  totalText: string;
  netText: string;
}

export function mapView(frame: TelemetryFrame | null, width: number, height: number): MapView {
  if (frame === null) {
    return { path: "", marker: null, totalText: "total --", netText: "net --" };
  }
  const t = fitTransform(frame.footprints, width, height);
  return {
    path: trailPath(frame.footprints, t),
    marker: project(frame.pose_est, t),
    totalText: `total ${frame.total_distance_m.toFixed(3)} m`,
    netText: `net ${frame.net_displacement_m.toFixed(3)} m`,
  };
}
