import { polygonArea } from "./geometry.js";
import type { Vertex } from "./types.js";

export type LassoEvent = "started" | "added" | "closed" | "ignored" | "cancelled";

/**
 * Polygon lasso state machine. While active the view is modal: clicks
 * add vertices; a click near the first vertex or a double-click closes
 * the polygon (needs at least 3 vertices); Escape cancels.
 */
export class Lasso {
  vertices: Vertex[] = [];
  active = false;
  closed = false;

  constructor(public closeDistance = 8) {}

  start(): LassoEvent {
    this.vertices = [];
    this.active = true;
    this.closed = false;
    return "started";
  }

  /** Add a vertex in screen coordinates; may close on the first vertex. */
  addVertex(x: number, y: number): LassoEvent {
    if (!this.active || this.closed) return "ignored";
    if (this.vertices.length >= 3) {
      const [fx, fy] = this.vertices[0]!;
      if (Math.hypot(x - fx, y - fy) <= this.closeDistance) {
        this.closed = true;
        return "closed";
      }
    }
    const last = this.vertices[this.vertices.length - 1];
    if (last && last[0] === x && last[1] === y) return "ignored";
    this.vertices.push([x, y]);
    return "added";
  }

  /** Double-click closes when the polygon has enough vertices. */
  closeByDoubleClick(): LassoEvent {
    if (!this.active || this.closed || this.vertices.length < 3) return "ignored";
    if (polygonArea(this.vertices) === 0) return "ignored";
    this.closed = true;
    return "closed";
  }

  cancel(): LassoEvent {
    if (!this.active) return "ignored";
    this.vertices = [];
    this.active = false;
    this.closed = false;
    return "cancelled";
  }

  /** Closed polygon in the coordinates the vertices were added in. */
  polygon(): readonly Vertex[] {
    return this.vertices;
  }

  reset(): void {
    this.vertices = [];
    this.active = false;
    this.closed = false;
  }
}
