// DOM wiring: arrow keys / drag perturb the viewpoint, two panels compare
// the single-layer warp against the LDI render with live void counts.

import { RenderClient } from "./client.js";
import { RequestScheduler } from "./debounce.js";
import {
  ViewerState,
  applyResponse,
  configFromQuery,
  cycleMode,
  dragPerturbation,
  initialState,
  issueRequest,
  Perturbation,
  perturbationForKey,
} from "./state.js";

const config = configFromQuery(window.location.search);
const client = new RenderClient(config.serviceUrl);
const scheduler = new RequestScheduler(config.debounceMs);

let state: ViewerState = initialState();

const el = (id: string) => document.getElementById(id)!;
const singleImg = el("single-img") as HTMLImageElement;
const ldiImg = el("ldi-img") as HTMLImageElement;
const singlePanel = el("single-panel");
const ldiPanel = el("ldi-panel");
const banner = el("banner");

function setImage(img: HTMLImageElement, bytes: ArrayBuffer): void {
  const url = URL.createObjectURL(new Blob([bytes], { type: "image/png" }));
  const old = img.src;
  img.src = url;
  if (old.startsWith("blob:")) URL.revokeObjectURL(old);
}

function updateHud(): void {
  el("pert-label").textContent =
    `dx ${state.pert.dx.toFixed(3)} m, dy ${state.pert.dy.toFixed(3)} m`;
  el("void-single").textContent =
    state.voidSingle === null ? "-" : `${state.voidSingle} void px`;
  el("void-ldi").textContent = state.voidLdi === null ? "-" : `${state.voidLdi} void px`;
  el("mode-label").textContent = state.mode;
  singlePanel.style.display = state.mode === "ldi-only" ? "none" : "";
  ldiPanel.style.display = state.mode === "single-only" ? "none" : "";
  banner.style.display = state.banner === null ? "none" : "";
  banner.textContent = state.banner ?? "";
}

function requestRenders(pert: Perturbation): void {
  state = issueRequest(state, pert);
  const tag = state.currentTag;
  updateHud();
  scheduler.schedule(async () => {
    const wantSingle = state.mode !== "ldi-only";
    const wantLdi = state.mode !== "single-only";
    try {
      const jobs: Promise<void>[] = [];
      if (wantLdi) {
        jobs.push(
          client.render(pert, true).then((res) => {
            if (tag !== state.currentTag) return; // stale: discard silently
            state = applyResponse(state, { tag, useLdi: true, voidCount: res.voidCount });
            setImage(ldiImg, res.bytes);
          }),
        );
      }
      if (wantSingle) {
        jobs.push(
          client.render(pert, false).then((res) => {
            if (tag !== state.currentTag) return;
            state = applyResponse(state, { tag, useLdi: false, voidCount: res.voidCount });
            setImage(singleImg, res.bytes);
          }),
        );
      }
      await Promise.all(jobs);
    } catch (err) {
      state = { ...state, banner: `service unreachable: ${String(err)}` };
    }
    updateHud();
  });
}

window.addEventListener("keydown", (ev) => {
  if (ev.key === "m") {
    state = { ...state, mode: cycleMode(state.mode) };
    requestRenders(state.pert);
    return;
  }
  const next = perturbationForKey(state.pert, ev.key, config.step, config.bound);
  if (next !== null) {
    ev.preventDefault();
    requestRenders(next);
  }
});

let dragging = false;
let lastX = 0;
let lastY = 0;
for (const panel of [singlePanel, ldiPanel]) {
  panel.addEventListener("pointerdown", (ev) => {
    dragging = true;
    lastX = ev.clientX;
    lastY = ev.clientY;
    panel.setPointerCapture(ev.pointerId);
  });
  panel.addEventListener("pointermove", (ev) => {
    if (!dragging) return;
    const next = dragPerturbation(
      state.pert,
      ev.clientX - lastX,
      ev.clientY - lastY,
      config.dragScale,
      config.bound,
    );
    lastX = ev.clientX;
    lastY = ev.clientY;
    requestRenders(next);
  });
  panel.addEventListener("pointerup", () => {
    dragging = false;
  });
}

client
  .meta()
  .then((meta) => {
    el("meta-label").textContent =
      `${meta.width}x${meta.height} @ ${config.serviceUrl}`;
    requestRenders({ dx: 0, dy: 0 });
  })
  .catch((err) => {
    state = { ...state, banner: `service unreachable: ${String(err)}` };
    updateHud();
  });

updateHud();
