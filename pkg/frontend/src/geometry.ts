import type { Vertex } from "./types.js";

/**
 * Even-odd containment with boundary points counted inside.
 * Mirrors the server's selection rule so optimistic updates agree.
 */
export function pointInPolygon(x: number, y: number, polygon: readonly Vertex[]): boolean {
  const n = polygon.length;
  let inside = false;
  for (let i = 0; i < n; i++) {
    const a = polygon[i]!;
    const b = polygon[(i + 1) % n]!;
    const [x1, y1] = a;
    const [x2, y2] = b;
    const cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1);
    if (
      cross === 0 &&
      x >= Math.min(x1, x2) &&
      x <= Math.max(x1, x2) &&
      y >= Math.min(y1, y2) &&
      y <= Math.max(y1, y2)
    ) {
      return true;
    }
    if (y1 > y !== y2 > y) {
      const xhit = ((x2 - x1) * (y - y1)) / (y2 - y1) + x1;
      if (x < xhit) inside = !inside;
    }
  }
  return inside;
}

export function polygonArea(polygon: readonly Vertex[]): number {
  let area = 0;
  const n = polygon.length;
  for (let i = 0; i < n; i++) {
    const [x1, y1] = polygon[i]!;
    const [x2, y2] = polygon[(i + 1) % n]!;
    area += x1 * y2 - x2 * y1;
  }
  return area / 2;
}
