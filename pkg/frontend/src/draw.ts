// Canvas drawing for the top-down scene view. Pure functions of
// (context, viewport, data); no state beyond the 2D context itself.

import { Attempt } from "./history.js";
import { Viewport, WorldBounds, toScreen } from "./transform.js";

export const GT_COLOR = "#2e7d32";
export const ATTEMPT_COLORS = [
  "#1565c0", "#c62828", "#6a1b9a", "#ef6c00", "#00838f", "#4e342e",
];

export function colorFor(index: number): string {
  return ATTEMPT_COLORS[index % ATTEMPT_COLORS.length];
}

export function drawBounds(
  ctx: CanvasRenderingContext2D, view: Viewport, bounds: WorldBounds,
): void {
  const [x0, y0] = toScreen(view, [bounds.min_x, bounds.max_y]);
  const [x1, y1] = toScreen(view, [bounds.max_x, bounds.min_y]);
  ctx.save();
  ctx.strokeStyle = "#90a4ae";
  ctx.setLineDash([6, 4]);
  ctx.lineWidth = 1;
  ctx.strokeRect(x0, y0, x1 - x0, y1 - y0);
  ctx.restore();
}

export function drawPolyline(
  ctx: CanvasRenderingContext2D,
  view: Viewport,
  points: [number, number][],
  color: string,
  options: { width?: number; dashed?: boolean; markers?: boolean } = {},
): void {
  if (points.length === 0) return;
  ctx.save();
  ctx.strokeStyle = color;
  ctx.fillStyle = color;
  ctx.lineWidth = options.width ?? 2;
  if (options.dashed) ctx.setLineDash([8, 5]);
  ctx.beginPath();
  const [sx, sy] = toScreen(view, points[0]);
  ctx.moveTo(sx, sy);
  for (const p of points.slice(1)) {
    const [x, y] = toScreen(view, p);
    ctx.lineTo(x, y);
  }
  ctx.stroke();
  if (options.markers ?? true) {
    for (const p of points) {
      const [x, y] = toScreen(view, p);
      ctx.beginPath();
      ctx.arc(x, y, 2.5, 0, Math.PI * 2);
      ctx.fill();
    }
  }
  ctx.restore();
}

export function drawEgoMarker(
  ctx: CanvasRenderingContext2D, view: Viewport,
  position: [number, number], heading: number,
): void {
  const [x, y] = toScreen(view, position);
  ctx.save();
  ctx.translate(x, y);
  ctx.rotate(-heading); // screen y is flipped
  ctx.fillStyle = "#263238";
  ctx.beginPath();
  ctx.moveTo(9, 0);
  ctx.lineTo(-6, 5);
  ctx.lineTo(-6, -5);
  ctx.closePath();
  ctx.fill();
  ctx.restore();
}

export interface OverlayScene {
  bounds: WorldBounds;
  groundTruth: [number, number][];
  ego: { position: [number, number]; heading: number } | null;
}

export function renderScene(
  ctx: CanvasRenderingContext2D,
  view: Viewport,
  scene: OverlayScene,
  attempts: Attempt[],
): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  drawBounds(ctx, view, scene.bounds);
  drawPolyline(ctx, view, scene.groundTruth, GT_COLOR, { width: 3 });
  attempts.forEach((attempt, i) => {
    if (attempt.waypoints !== null) {
      drawPolyline(ctx, view, attempt.waypoints, colorFor(i), {
        dashed: attempt.condition === "baseline",
      });
    }
  });
  if (scene.ego !== null) {
    drawEgoMarker(ctx, view, scene.ego.position, scene.ego.heading);
  }
}
