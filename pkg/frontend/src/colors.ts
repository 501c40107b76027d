import type { ColorMode, PointRecord } from "./types.js";

const UNLABELED = "#9aa0a6";
const PROVENANCE_COLORS: Record<string, string> = {
  gold: "#f9a825",
  bulk: "#1e88e5",
  single: "#43a047",
};

/** FNV-1a over the label text; stable across sessions and reloads. */
export function labelHash(label: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < label.length; i++) {
    h ^= label.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

/** Deterministic label -> color: hue from the hash, fixed s/l. */
export function labelColor(label: string): string {
  const hue = labelHash(label) % 360;
  return `hsl(${hue}, 65%, 48%)`;
}

/** Cluster ids get golden-angle hues so nearby ids stay distinct. */
export function clusterColor(cluster: number): string {
  const hue = Math.round((cluster * 137.508) % 360);
  return `hsl(${hue}, 70%, 45%)`;
}

export function pointColor(point: PointRecord, mode: ColorMode): string {
  if (mode === "by_cluster") {
    return point.cluster === null ? UNLABELED : clusterColor(point.cluster);
  }
  if (mode === "by_provenance") {
    return point.provenance ? PROVENANCE_COLORS[point.provenance] ?? UNLABELED : UNLABELED;
  }
  return point.label === null ? UNLABELED : labelColor(point.label);
}
