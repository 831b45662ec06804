// Meters-to-pixels mapping for the top-down canvas. Strictly affine with a
// positive scale, so polyline point order is always preserved; world +y is
// drawn upward (screen y grows downward).

export interface WorldBounds {
  min_x: number;
  min_y: number;
  max_x: number;
  max_y: number;
}

export interface Viewport {
  scale: number; // pixels per meter, > 0
  offsetX: number;
  offsetY: number;
}

export function fitBounds(
  bounds: WorldBounds,
  width: number,
  height: number,
  marginPx = 20,
): Viewport {
  const spanX = Math.max(bounds.max_x - bounds.min_x, 1e-6);
  const spanY = Math.max(bounds.max_y - bounds.min_y, 1e-6);
  const usableW = Math.max(width - 2 * marginPx, 1);
  const usableH = Math.max(height - 2 * marginPx, 1);
  const scale = Math.min(usableW / spanX, usableH / spanY);
  const centerX = (bounds.min_x + bounds.max_x) / 2;
  const centerY = (bounds.min_y + bounds.max_y) / 2;
  return {
    scale,
    offsetX: width / 2 - centerX * scale,
    offsetY: height / 2 + centerY * scale,
  };
}

export function toScreen(view: Viewport, point: [number, number]): [number, number] {
  return [
    view.offsetX + point[0] * view.scale,
    view.offsetY - point[1] * view.scale,
  ];
}

export function expand(bounds: WorldBounds, margin: number): WorldBounds {
  return {
    min_x: bounds.min_x - margin,
    min_y: bounds.min_y - margin,
    max_x: bounds.max_x + margin,
    max_y: bounds.max_y + margin,
  };
}

/** Smallest bounds containing `bounds` and every listed point; used to zoom
 * out when an attempt escapes the scene. */
export function including(
  bounds: WorldBounds,
  points: [number, number][],
): WorldBounds {
  let { min_x, min_y, max_x, max_y } = bounds;
  for (const [x, y] of points) {
    if (x < min_x) min_x = x;
    if (x > max_x) max_x = x;
    if (y < min_y) min_y = y;
    if (y > max_y) max_y = y;
  }
  return { min_x, min_y, max_x, max_y };
}
