// Pure viewer state: perturbation stepping, clamping, response tagging.
// Kept free of DOM and network so the invariants are unit-testable.

export interface Perturbation {
  dx: number;
  dy: number;
}

export type Mode = "side-by-side" | "ldi-only" | "single-only";

export const MODES: Mode[] = ["side-by-side", "ldi-only", "single-only"];

export interface ViewerConfig {
  serviceUrl: string;
  step: number; // meters per arrow key press
  bound: number; // |dx|,|dy| never exceed this
  debounceMs: number;
  dragScale: number; // meters per dragged pixel
}

export const DEFAULT_CONFIG: ViewerConfig = {
  serviceUrl: "http://127.0.0.1:8754",
  step: 0.01,
  bound: 0.3,
  debounceMs: 50,
  dragScale: 0.002,
};

export interface ViewerState {
  pert: Perturbation;
  mode: Mode;
  // tag of the most recently issued request pair; responses carrying any
  // other tag are stale and must be discarded
  currentTag: number;
  voidLdi: number | null;
  voidSingle: number | null;
  banner: string | null;
}

export function initialState(): ViewerState {
  return {
    pert: { dx: 0, dy: 0 },
    mode: "side-by-side",
    currentTag: 0,
    voidLdi: null,
    voidSingle: null,
    banner: null,
  };
}

export function clampPert(p: Perturbation, bound: number): Perturbation {
  const clip = (v: number) => Math.min(bound, Math.max(-bound, v));
  return { dx: clip(p.dx), dy: clip(p.dy) };
}

/** Map a key press to a new perturbation; null when the key is not ours. */
export function perturbationForKey(
  pert: Perturbation,
  key: string,
  step: number,
  bound: number,
): Perturbation | null {
  switch (key) {
    case "ArrowRight":
      return clampPert({ dx: pert.dx + step, dy: pert.dy }, bound);
    case "ArrowLeft":
      return clampPert({ dx: pert.dx - step, dy: pert.dy }, bound);
    case "ArrowDown":
      return clampPert({ dx: pert.dx, dy: pert.dy + step }, bound);
    case "ArrowUp":
      return clampPert({ dx: pert.dx, dy: pert.dy - step }, bound);
    case "0":
    case "r":
    case "Home":
      return { dx: 0, dy: 0 };
    default:
      return null;
  }
}

export function dragPerturbation(
  pert: Perturbation,
  dxPixels: number,
  dyPixels: number,
  dragScale: number,
  bound: number,
): Perturbation {
  // dragging the scene right means moving the camera left
  return clampPert(
    { dx: pert.dx - dxPixels * dragScale, dy: pert.dy - dyPixels * dragScale },
    bound,
  );
}

export function cycleMode(mode: Mode): Mode {
  return MODES[(MODES.indexOf(mode) + 1) % MODES.length];
}

/** Start a new request pair: bumps the tag and records the perturbation. */
export function issueRequest(state: ViewerState, pert: Perturbation): ViewerState {
  return { ...state, pert, currentTag: state.currentTag + 1, banner: null };
}

export interface RenderResponse {
  tag: number;
  useLdi: boolean;
  voidCount: number;
}

/**
 * Fold a render response into the state. Responses whose tag is not the
 * current one are stale (a newer perturbation was requested meanwhile) and
 * leave the state untouched; callers must not display their images either.
 */
export function applyResponse(state: ViewerState, resp: RenderResponse): ViewerState {
  if (resp.tag !== state.currentTag) {
    return state;
  }
  return resp.useLdi
    ? { ...state, voidLdi: resp.voidCount }
    : { ...state, voidSingle: resp.voidCount };
}

export function serviceUnreachable(state: ViewerState, message: string): ViewerState {
  // state (perturbation, counts) is preserved so recovery resumes in place
  return { ...state, banner: message };
}

/** Parse ?service=...&step=...&bound=...&debounce=... overrides. */
export function configFromQuery(query: string, base: ViewerConfig = DEFAULT_CONFIG): ViewerConfig {
  const params = new URLSearchParams(query);
  const num = (name: string, fallback: number) => {
    const raw = params.get(name);
    if (raw === null) return fallback;
    const value = Number(raw);
    return Number.isFinite(value) && value > 0 ? value : fallback;
  };
  return {
    serviceUrl: params.get("service") ?? base.serviceUrl,
    step: num("step", base.step),
    bound: num("bound", base.bound),
    debounceMs: num("debounce", base.debounceMs),
    dragScale: num("dragScale", base.dragScale),
  };
}
