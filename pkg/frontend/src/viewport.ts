import type { Vertex } from "./types.js";

/**
 * Pan/zoom transform between data space and screen pixels.
 * screen = data * scale + offset, y flipped so data-y grows upward.
 */
export class Viewport {
  scale = 1;
  offsetX = 0;
  offsetY = 0;

  constructor(
    public width: number,
    public height: number,
  ) {}

  /** Fit the data bounds with a relative margin; keeps aspect ratio. */
  fitBounds(points: readonly Vertex[], margin = 0.05): void {
    if (points.length === 0) return;
    let minX = Infinity;
    let maxX = -Infinity;
    let minY = Infinity;
    let maxY = -Infinity;
    for (const [x, y] of points) {
      minX = Math.min(minX, x);
      maxX = Math.max(maxX, x);
      minY = Math.min(minY, y);
      maxY = Math.max(maxY, y);
    }
    const spanX = (maxX - minX) * (1 + 2 * margin) || 1;
    const spanY = (maxY - minY) * (1 + 2 * margin) || 1;
    this.scale = Math.min(this.width / spanX, this.height / spanY);
    const cx = (minX + maxX) / 2;
    const cy = (minY + maxY) / 2;
    this.offsetX = this.width / 2 - cx * this.scale;
    this.offsetY = this.height / 2 + cy * this.scale;
  }

  dataToScreen(x: number, y: number): Vertex {
    return [x * this.scale + this.offsetX, -y * this.scale + this.offsetY];
  }

  screenToData(sx: number, sy: number): Vertex {
    return [(sx - this.offsetX) / this.scale, -(sy - this.offsetY) / this.scale];
  }

  /** Zoom by a factor keeping the screen anchor point fixed. */
  zoomAt(sx: number, sy: number, factor: number): void {
    const [dx, dy] = this.screenToData(sx, sy);
    this.scale *= factor;
    this.offsetX = sx - dx * this.scale;
    this.offsetY = sy + dy * this.scale;
  }

  pan(dxPixels: number, dyPixels: number): void {
    this.offsetX += dxPixels;
    this.offsetY += dyPixels;
  }
}
