/** Browser wiring: DOM events in, session-state transitions and service
 * calls out.  All rules live in state.ts / api.ts / overlay.ts; this file
 * only connects them to widgets.
 */
import { createApi, ServiceError, type Api } from "./api.js";
import { overlayPolyline, traceCurve } from "./overlay.js";
import {
  addPoint,
  branchComplete,
  canExport,
  deletePoint,
  exportJson,
  importDoc,
  loadImage,
  markExported,
  missingRoles,
  movePoint,
  newSession,
  setControlCount,
  setFit,
  type SessionState,
} from "./state.js";
import type { AnnotationExport } from "./types.js";

const HIT_RADIUS = 8;

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

export function startApp(): void {
  const canvas = byId<HTMLCanvasElement>("board");
  const maybeCtx = canvas.getContext("2d");
  if (!maybeCtx) throw new Error("2d canvas unavailable");
  const ctx: CanvasRenderingContext2D = maybeCtx;
  const roleSelect = byId<HTMLSelectElement>("role");
  const controlsInput = byId<HTMLInputElement>("n-controls");
  const residualOut = byId<HTMLElement>("residual");
  const staleBadge = byId<HTMLElement>("stale");
  const statusOut = byId<HTMLElement>("status");
  const imageInput = byId<HTMLInputElement>("image-file");
  const importInput = byId<HTMLInputElement>("import-file");
  const exportBtn = byId<HTMLButtonElement>("export");
  const serviceInput = byId<HTMLInputElement>("service-url");

  let api: Api = createApi(serviceInput.value || "http://127.0.0.1:8000");
  let state: SessionState = newSession(["pending"]);
  let bitmap: ImageBitmap | null = null;
  let dragIndex: number | null = null;

  function activeRole(): string {
    return roleSelect.value;
  }

  function setStatus(text: string): void {
    statusOut.textContent = text;
  }

  function redraw(): void {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (bitmap) ctx.drawImage(bitmap, 0, 0);
    for (const b of state.branches) {
      const active = b.role === activeRole();
      if (b.lastFit) {
        ctx.strokeStyle = active ? "#2f9e44" : "#74c69d";
        ctx.lineWidth = 2;
        ctx.beginPath();
        traceCurve(ctx, b.lastFit);
        ctx.stroke();
      }
      ctx.fillStyle = active ? "#e8590c" : "#f4a261";
      for (const [x, y] of b.points) {
        ctx.beginPath();
        ctx.arc(x, y, 4, 0, 2 * Math.PI);
        ctx.fill();
      }
    }
    const b = state.branches.find((br) => br.role === activeRole());
    residualOut.textContent = b?.lastFit
      ? b.lastFit.residual.toExponential(3)
      : "—";
    controlsInput.value = String(b?.nControls ?? "");
    const missing = missingRoles(state);
    exportBtn.disabled = !canExport(state);
    exportBtn.title = canExport(state)
      ? "download annotation"
      : `incomplete: ${missing.join(", ") || "no image"}`;
  }

  async function refit(role: string): Promise<void> {
    const b = state.branches.find((br) => br.role === role);
    if (!b || !branchComplete(b)) {
      staleBadge.hidden = true;
      redraw();
      return;
    }
    try {
      const fit = await api.fit(b.points, b.nControls);
      if (fit === null) return; // superseded by a newer edit
      state = setFit(state, role, fit);
      staleBadge.hidden = true;
    } catch (err) {
      // Service down or rejecting: keep the stale overlay, keep the edits,
      // and say so.  Points stay buffered in the session for a later retry.
      staleBadge.hidden = false;
      setStatus(
        err instanceof ServiceError
          ? `fit failed: ${err.detail}`
          : "service unreachable — overlay is stale, edits kept",
      );
    }
    redraw();
  }

  async function boot(): Promise<void> {
    try {
      const cfg = await api.config();
      state = newSession(cfg.roles);
      roleSelect.replaceChildren(
        ...cfg.roles.map((r) => {
          const o = document.createElement("option");
          o.value = r;
          o.textContent = r;
          return o;
        }),
      );
      setStatus("ready");
    } catch {
      setStatus("cannot reach service — check the URL and retry");
    }
    redraw();
  }

  serviceInput.addEventListener("change", () => {
    api = createApi(serviceInput.value);
    void boot();
  });

  imageInput.addEventListener("change", async () => {
    const file = imageInput.files?.[0];
    if (!file) return;
    bitmap = await createImageBitmap(file);
    canvas.width = bitmap.width;
    canvas.height = bitmap.height;
    state = loadImage(state, file.name);
    redraw();
  });

  function hitTest(x: number, y: number): number | null {
    const b = state.branches.find((br) => br.role === activeRole());
    if (!b) return null;
    for (let i = 0; i < b.points.length; i++) {
      const p = b.points[i]!;
      if (Math.hypot(p[0] - x, p[1] - y) <= HIT_RADIUS) return i;
    }
    return null;
  }

  canvas.addEventListener("pointerdown", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const x = ev.clientX - rect.left;
    const y = ev.clientY - rect.top;
    const hit = hitTest(x, y);
    if (ev.shiftKey && hit !== null) {
      state = deletePoint(state, activeRole(), hit);
      void refit(activeRole());
      return;
    }
    if (hit !== null) {
      dragIndex = hit;
      return;
    }
    state = addPoint(state, activeRole(), x, y);
    void refit(activeRole());
  });

  canvas.addEventListener("pointermove", (ev) => {
    if (dragIndex === null) return;
    const rect = canvas.getBoundingClientRect();
    state = movePoint(
      state,
      activeRole(),
      dragIndex,
      ev.clientX - rect.left,
      ev.clientY - rect.top,
    );
    redraw();
  });

  canvas.addEventListener("pointerup", () => {
    if (dragIndex === null) return;
    dragIndex = null;
    void refit(activeRole());
  });

  controlsInput.addEventListener("change", () => {
    const n = Number(controlsInput.value);
    try {
      state = setControlCount(state, activeRole(), n);
    } catch (err) {
      setStatus(err instanceof Error ? err.message : String(err));
      redraw();
      return;
    }
    void refit(activeRole());
  });

  roleSelect.addEventListener("change", redraw);

  exportBtn.addEventListener("click", () => {
    if (!canExport(state)) {
      setStatus(`cannot export — incomplete: ${missingRoles(state).join(", ")}`);
      return;
    }
    const json = exportJson(state);
    const blob = new Blob([json], { type: "application/json" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "annotation.json";
    a.click();
    URL.revokeObjectURL(a.href);
    state = markExported(state);
    setStatus("annotation downloaded");
    redraw();
  });

  importInput.addEventListener("change", async () => {
    const file = importInput.files?.[0];
    if (!file) return;
    try {
      const doc = JSON.parse(await file.text()) as AnnotationExport;
      const roles = state.branches.map((b) => b.role);
      state = importDoc(roles, doc);
      setStatus(`imported ${file.name}`);
      for (const b of state.branches) {
        if (branchComplete(b)) void refit(b.role);
      }
    } catch (err) {
      setStatus(
        `import failed: ${err instanceof Error ? err.message : String(err)}`,
      );
    }
    redraw();
  });

  window.addEventListener("beforeunload", (ev) => {
    if (state.dirty) ev.preventDefault();
  });

  // Expose the polyline accessor for debugging parity by hand in devtools.
  (window as unknown as Record<string, unknown>).overlayPolyline =
    overlayPolyline;

  void boot();
}

if (typeof document !== "undefined" && document.getElementById("board")) {
  startApp();
}
