import { pointColor } from "./colors.js";
import type { Lasso } from "./lasso.js";
import type { ColorMode, PointRecord, Vertex } from "./types.js";
import type { Viewport } from "./viewport.js";

const LOD_LIMIT = 50_000;

/** Index stride for level-of-detail thinning above the point budget. */
export function lodStride(count: number, limit = LOD_LIMIT): number {
  return count <= limit ? 1 : Math.ceil(count / limit);
}

export interface SceneOptions {
  points: PointRecord[];
  viewport: Viewport;
  colorMode: ColorMode;
  hoverId: number | null;
  lasso: Lasso;
  centroids: Map<number, Vertex>;
  pointRadius?: number;
}

/** Draw the full scene onto a 2D canvas context. */
export function renderScene(ctx: CanvasRenderingContext2D, opts: SceneOptions): void {
  const { points, viewport, colorMode, hoverId, lasso, centroids } = opts;
  const radius = opts.pointRadius ?? 3;
  ctx.clearRect(0, 0, viewport.width, viewport.height);

  const stride = lodStride(points.length);
  for (let i = 0; i < points.length; i += stride) {
    const p = points[i]!;
    const [sx, sy] = viewport.dataToScreen(p.x, p.y);
    if (sx < -radius || sy < -radius || sx > viewport.width + radius || sy > viewport.height + radius) {
      continue;
    }
    ctx.beginPath();
    ctx.arc(sx, sy, p.id === hoverId ? radius + 2 : radius, 0, Math.PI * 2);
    ctx.fillStyle = pointColor(p, colorMode);
    ctx.globalAlpha = p.id === hoverId ? 1.0 : 0.8;
    ctx.fill();
  }
  ctx.globalAlpha = 1.0;

  // Static centroid markers from the served cluster state.
  ctx.font = "bold 14px system-ui";
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  for (const [cluster, [cx, cy]] of centroids) {
    const [sx, sy] = viewport.dataToScreen(cx, cy);
    ctx.strokeStyle = "#1118";
    ctx.lineWidth = 3;
    ctx.strokeText(String(cluster), sx, sy);
    ctx.fillStyle = "#fff";
    ctx.fillText(String(cluster), sx, sy);
  }

  // Active lasso outline (vertices already in data coordinates).
  if (lasso.active && lasso.vertices.length > 0) {
    ctx.beginPath();
    lasso.vertices.forEach(([x, y], i) => {
      const [sx, sy] = viewport.dataToScreen(x, y);
      if (i === 0) ctx.moveTo(sx, sy);
      else ctx.lineTo(sx, sy);
    });
    if (lasso.closed) ctx.closePath();
    ctx.strokeStyle = "#e53935";
    ctx.lineWidth = 1.5;
    ctx.setLineDash([6, 4]);
    ctx.stroke();
    ctx.setLineDash([]);
    for (const [x, y] of lasso.vertices) {
      const [sx, sy] = viewport.dataToScreen(x, y);
      ctx.beginPath();
      ctx.arc(sx, sy, 3, 0, Math.PI * 2);
      ctx.fillStyle = "#e53935";
      ctx.fill();
    }
  }
}

/** Nearest point within a screen-pixel radius, for hover/inspect. */
export function hitTest(
  points: PointRecord[],
  viewport: Viewport,
  sx: number,
  sy: number,
  radiusPixels = 6,
): PointRecord | null {
  let best: PointRecord | null = null;
  let bestDist = radiusPixels;
  for (const p of points) {
    const [px, py] = viewport.dataToScreen(p.x, p.y);
    const d = Math.hypot(px - sx, py - sy);
    if (d <= bestDist) {
      best = p;
      bestDist = d;
    }
  }
  return best;
}
