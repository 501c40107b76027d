import { ApiError, LabelServiceClient } from "./api.js";
import { pointInPolygon } from "./geometry.js";
import type { ColorMode, PointRecord, SessionStats, Vertex } from "./types.js";

export interface Toast {
  kind: "info" | "error";
  message: string;
}

export type StateListener = () => void;

/**
 * Client-side session state. The server is the single source of truth:
 * local labels change only optimistically around an acknowledged bulk
 * call, roll back on rejection, and converge by reload whenever the
 * server's affected count disagrees with the optimistic guess.
 */
export class AppState {
  points: PointRecord[] = [];
  stats: SessionStats | null = null;
  colorMode: ColorMode = "by_cluster";
  selectedLabel = "";
  hoverId: number | null = null;
  toast: Toast | null = null;
  private listeners: StateListener[] = [];

  constructor(public client: LabelServiceClient) {}

  onChange(listener: StateListener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  async load(): Promise<void> {
    this.points = await this.client.points();
    this.stats = await this.client.stats();
    this.notify();
  }

  /** Distinct labels present (gold and assigned), sorted. */
  labelSet(): string[] {
    const labels = new Set<string>();
    for (const p of this.points) {
      if (p.label !== null) labels.add(p.label);
    }
    return [...labels].sort();
  }

  /** Static 2D centroids of the served cluster assignment. */
  clusterCentroids(): Map<number, Vertex> {
    const sums = new Map<number, { x: number; y: number; n: number }>();
    for (const p of this.points) {
      if (p.cluster === null) continue;
      const acc = sums.get(p.cluster) ?? { x: 0, y: 0, n: 0 };
      acc.x += p.x;
      acc.y += p.y;
      acc.n += 1;
      sums.set(p.cluster, acc);
    }
    const out = new Map<number, Vertex>();
    for (const [c, acc] of sums) out.set(c, [acc.x / acc.n, acc.y / acc.n]);
    return out;
  }

  pointById(id: number): PointRecord | undefined {
    return this.points.find((p) => p.id === id);
  }

  /** Ids the lasso would affect: inside the polygon and not gold. */
  selectionFor(polygon: readonly Vertex[]): number[] {
    return this.points
      .filter((p) => p.provenance !== "gold" && pointInPolygon(p.x, p.y, polygon))
      .map((p) => p.id);
  }

  /**
   * Commit a closed lasso: optimistic recolor, server call, rollback on
   * rejection. Returns the server's affected count (0 for an empty
   * selection, which is not sent at all).
   */
  async commitLasso(polygon: readonly Vertex[], label: string): Promise<number> {
    if (!label) {
      this.toast = { kind: "error", message: "choose a label before committing" };
      this.notify();
      return 0;
    }
    const selection = this.selectionFor(polygon);
    if (selection.length === 0) {
      this.toast = { kind: "info", message: "0 points selected" };
      this.notify();
      return 0;
    }
    const prior = new Map<number, { label: string | null; provenance: PointRecord["provenance"] }>();
    for (const p of this.points) {
      if (selection.includes(p.id)) {
        prior.set(p.id, { label: p.label, provenance: p.provenance });
        p.label = label;
        p.provenance = "bulk";
      }
    }
    this.notify();
    try {
      const { affected } = await this.client.bulk(polygon, label);
      if (affected !== selection.length) {
        // Client and server disagree; the server wins.
        await this.load();
      } else {
        this.stats = await this.client.stats();
      }
      this.toast = { kind: "info", message: `${affected} points labeled '${label}'` };
      this.notify();
      return affected;
    } catch (err) {
      for (const [id, prev] of prior) {
        const p = this.pointById(id);
        if (p) {
          p.label = prev.label;
          p.provenance = prev.provenance;
        }
      }
      const message = err instanceof ApiError ? err.message : `server unreachable: ${err}`;
      this.toast = { kind: "error", message };
      this.notify();
      return 0;
    }
  }

  async undo(): Promise<void> {
    try {
      await this.client.undo();
      await this.load();
      this.toast = { kind: "info", message: "undone" };
    } catch (err) {
      const message = err instanceof ApiError ? err.message : `server unreachable: ${err}`;
      this.toast = { kind: "error", message };
    }
    this.notify();
  }

  setColorMode(mode: ColorMode): void {
    this.colorMode = mode;
    this.notify();
  }

  setHover(id: number | null): void {
    if (this.hoverId !== id) {
      this.hoverId = id;
      this.notify();
    }
  }
}
