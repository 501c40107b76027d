import { LabelServiceClient } from "./api.js";
import { Lasso } from "./lasso.js";
import { hitTest, renderScene } from "./scatter.js";
import { AppState } from "./state.js";
import type { ColorMode } from "./types.js";
import { Viewport } from "./viewport.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function bootstrap(): void {
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? "http://127.0.0.1:8099";
  const sessionId = params.get("session") ?? "default";

  const canvas = el<HTMLCanvasElement>("scatter");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");

  const state = new AppState(new LabelServiceClient(server, sessionId));
  const viewport = new Viewport(canvas.width, canvas.height);
  const lasso = new Lasso(10);

  const labelInput = el<HTMLInputElement>("label-input");
  const labelOptions = el<HTMLDataListElement>("label-options");
  const colorMode = el<HTMLSelectElement>("color-mode");
  const lassoButton = el<HTMLButtonElement>("lasso-btn");
  const undoButton = el<HTMLButtonElement>("undo-btn");
  const statsBar = el<HTMLSpanElement>("stats");
  const toastBox = el<HTMLDivElement>("toast");
  const panel = el<HTMLDivElement>("inspect");

  let panning = false;
  let lastPan: [number, number] = [0, 0];

  function draw(): void {
    renderScene(ctx!, {
      points: state.points,
      viewport,
      colorMode: state.colorMode,
      hoverId: state.hoverId,
      lasso,
      centroids: state.clusterCentroids(),
    });
  }

  function syncChrome(): void {
    const s = state.stats;
    statsBar.textContent = s
      ? `gold ${s.gold} · bulk ${s.bulk} · single ${s.single} · unlabeled ${s.unlabeled} / ${s.total}`
      : "loading…";
    if (state.toast) {
      toastBox.textContent = state.toast.message;
      toastBox.className = `toast ${state.toast.kind}`;
      toastBox.style.display = "block";
    } else {
      toastBox.style.display = "none";
    }
    labelOptions.innerHTML = "";
    for (const label of state.labelSet()) {
      const opt = document.createElement("option");
      opt.value = label;
      labelOptions.appendChild(opt);
    }
    lassoButton.classList.toggle("armed", lasso.active);
  }

  function inspect(id: number | null): void {
    if (id === null) {
      panel.textContent = "hover or click a point";
      return;
    }
    const p = state.pointById(id);
    if (!p) return;
    panel.innerHTML = "";
    const rows: Array<[string, string]> = [
      ["text", p.text],
      ["label", p.label ?? "—"],
      ["cluster", p.cluster === null ? "—" : String(p.cluster)],
      ["provenance", p.provenance ?? "—"],
      ["id", String(p.id)],
    ];
    for (const [key, value] of rows) {
      const div = document.createElement("div");
      const k = document.createElement("b");
      k.textContent = `${key}: `;
      div.appendChild(k);
      div.appendChild(document.createTextNode(value));
      panel.appendChild(div);
    }
  }

  state.onChange(() => {
    syncChrome();
    draw();
  });

  canvas.addEventListener("mousedown", (ev) => {
    if (lasso.active) return;
    panning = true;
    lastPan = [ev.offsetX, ev.offsetY];
  });
  canvas.addEventListener("mousemove", (ev) => {
    if (panning) {
      viewport.pan(ev.offsetX - lastPan[0], ev.offsetY - lastPan[1]);
      lastPan = [ev.offsetX, ev.offsetY];
      draw();
      return;
    }
    const hit = hitTest(state.points, viewport, ev.offsetX, ev.offsetY);
    state.setHover(hit ? hit.id : null);
    inspect(hit ? hit.id : null);
  });
  canvas.addEventListener("mouseup", () => {
    panning = false;
  });
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    viewport.zoomAt(ev.offsetX, ev.offsetY, ev.deltaY < 0 ? 1.15 : 1 / 1.15);
    draw();
  });

  async function closeAndCommit(): Promise<void> {
    const polygon = [...lasso.polygon()];
    lasso.reset();
    await state.commitLasso(polygon, labelInput.value.trim());
    draw();
  }

  canvas.addEventListener("click", (ev) => {
    if (!lasso.active) {
      const hit = hitTest(state.points, viewport, ev.offsetX, ev.offsetY);
      inspect(hit ? hit.id : null);
      return;
    }
    // Lasso mode is modal: clicks only build the polygon.
    const [dx, dy] = viewport.screenToData(ev.offsetX, ev.offsetY);
    const threshold = lasso.closeDistance / viewport.scale;
    const saved = lasso.closeDistance;
    lasso.closeDistance = threshold;
    const outcome = lasso.addVertex(dx, dy);
    lasso.closeDistance = saved;
    if (outcome === "closed") void closeAndCommit();
    else draw();
  });
  canvas.addEventListener("dblclick", (ev) => {
    ev.preventDefault();
    if (lasso.active && lasso.closeByDoubleClick() === "closed") {
      void closeAndCommit();
    }
  });
  window.addEventListener("keydown", (ev) => {
    if (ev.key === "Escape" && lasso.active) {
      lasso.cancel();
      syncChrome();
      draw();
    }
  });

  lassoButton.addEventListener("click", () => {
    if (lasso.active) lasso.cancel();
    else lasso.start();
    syncChrome();
    draw();
  });
  undoButton.addEventListener("click", () => void state.undo());
  colorMode.addEventListener("change", () => {
    state.setColorMode(colorMode.value as ColorMode);
  });

  void state.load().then(() => {
    viewport.fitBounds(state.points.map((p) => [p.x, p.y]));
    syncChrome();
    draw();
  });
}

bootstrap();
