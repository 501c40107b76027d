export interface PointRecord {
  id: number;
  x: number;
  y: number;
  text: string;
  label: string | null;
  provenance: "gold" | "bulk" | "single" | null;
  cluster: number | null;
}

export interface SessionStats {
  gold: number;
  bulk: number;
  single: number;
  unlabeled: number;
  total: number;
  actions: number;
}

export type ColorMode = "by_cluster" | "by_label" | "by_provenance";

export type Vertex = [number, number];
