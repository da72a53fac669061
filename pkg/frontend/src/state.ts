/** Session state of one labeling sitting, kept as plain immutable data.
 *
 * Nothing in here fits curves or touches the network.  The functions below
 * are the only way the app mutates a session, which keeps every rule about
 * completeness, dirtiness and export in one reviewable place.
 */
import type { AnnotationExport, FitResponse } from "./types.js";

export interface BranchState {
  role: string;
  points: [number, number][];
  nControls: number;
  /** Verbatim last /fit answer for this branch, null before the first fit. */
  lastFit: FitResponse | null;
}

export interface SessionState {
  imageRef: string | null;
  coordinateOrigin: [number, number];
  branches: BranchState[];
  dirty: boolean;
}

export const MIN_POINTS = 2;
const MIN_CONTROLS = 2;
const MAX_CONTROLS = 32;

export function newSession(roles: string[], nControls = 6): SessionState {
  if (roles.length === 0) throw new Error("no labelable roles");
  return {
    imageRef: null,
    coordinateOrigin: [0, 0],
    branches: roles.map((role) => ({
      role,
      points: [],
      nControls,
      lastFit: null,
    })),
    dirty: false,
  };
}

function branchIndex(state: SessionState, role: string): number {
  const i = state.branches.findIndex((b) => b.role === role);
  if (i < 0) throw new Error(`unknown branch role ${JSON.stringify(role)}`);
  return i;
}

function withBranch(
  state: SessionState,
  role: string,
  update: (b: BranchState) => BranchState,
  dirty = true,
): SessionState {
  const i = branchIndex(state, role);
  const branches = state.branches.slice();
  branches[i] = update(branches[i]!);
  return { ...state, branches, dirty: dirty || state.dirty };
}

export function loadImage(state: SessionState, imageRef: string): SessionState {
  if (!imageRef) throw new Error("image reference must be non-empty");
  return { ...state, imageRef, dirty: true };
}

export function addPoint(
  state: SessionState,
  role: string,
  x: number,
  y: number,
): SessionState {
  return withBranch(state, role, (b) => ({
    ...b,
    points: [...b.points, [x, y]],
    lastFit: null,
  }));
}

export function movePoint(
  state: SessionState,
  role: string,
  index: number,
  x: number,
  y: number,
): SessionState {
  return withBranch(state, role, (b) => {
    if (index < 0 || index >= b.points.length) {
      throw new Error(`no point ${index} in ${b.role}`);
    }
    const points = b.points.slice();
    points[index] = [x, y];
    return { ...b, points, lastFit: null };
  });
}

export function deletePoint(
  state: SessionState,
  role: string,
  index: number,
): SessionState {
  return withBranch(state, role, (b) => {
    if (index < 0 || index >= b.points.length) {
      throw new Error(`no point ${index} in ${b.role}`);
    }
    return { ...b, points: b.points.filter((_, i) => i !== index), lastFit: null };
  });
}

export function setControlCount(
  state: SessionState,
  role: string,
  n: number,
): SessionState {
  if (!Number.isInteger(n) || n < MIN_CONTROLS || n > MAX_CONTROLS) {
    throw new Error(`n_controls must be an integer in ${MIN_CONTROLS}..${MAX_CONTROLS}`);
  }
  return withBranch(state, role, (b) => ({ ...b, nControls: n, lastFit: null }));
}

/** Record a fit answer without touching the dirty flag: fits are derived
 * display data, not user edits. */
export function setFit(
  state: SessionState,
  role: string,
  fit: FitResponse,
): SessionState {
  return withBranch(state, role, (b) => ({ ...b, lastFit: fit }), false);
}

export function branchComplete(b: BranchState): boolean {
  return b.points.length >= MIN_POINTS;
}

export function missingRoles(state: SessionState): string[] {
  return state.branches.filter((b) => !branchComplete(b)).map((b) => b.role);
}

export function canExport(state: SessionState): boolean {
  return state.imageRef !== null && missingRoles(state).length === 0;
}

export function exportDoc(state: SessionState): AnnotationExport {
  if (state.imageRef === null) throw new Error("no image loaded");
  const missing = missingRoles(state);
  if (missing.length > 0) {
    throw new Error(`incomplete branches: ${missing.join(", ")}`);
  }
  return {
    image: state.imageRef,
    coordinate_origin: [state.coordinateOrigin[0], state.coordinateOrigin[1]],
    branches: state.branches.map((b) => ({
      role: b.role,
      points: b.points.map(([x, y]) => [x, y]),
      n_controls: b.nControls,
    })),
  };
}

export function exportJson(state: SessionState): string {
  return JSON.stringify(exportDoc(state), null, 2) + "\n";
}

export function markExported(state: SessionState): SessionState {
  return { ...state, dirty: false };
}

/** Rebuild a session from a previously exported document.
 *
 * Every point and control count is taken over exactly as stored; roles the
 * document does not mention start empty.
 */
export function importDoc(
  roles: string[],
  doc: AnnotationExport,
): SessionState {
  let state = newSession(roles);
  state = { ...state, imageRef: doc.image };
  const origin = doc.coordinate_origin;
  if (!Array.isArray(origin) || origin.length !== 2) {
    throw new Error("coordinate_origin must be an [x, y] pair");
  }
  state = { ...state, coordinateOrigin: [origin[0]!, origin[1]!] };
  const seen = new Set<string>();
  for (const b of doc.branches) {
    if (seen.has(b.role)) throw new Error(`duplicate branch role ${b.role}`);
    seen.add(b.role);
    const i = branchIndex(state, b.role);
    for (const p of b.points) {
      if (!Array.isArray(p) || p.length !== 2) {
        throw new Error(`branch ${b.role}: points must be [x, y] pairs`);
      }
    }
    const branches = state.branches.slice();
    branches[i] = {
      role: b.role,
      points: b.points.map((p) => [p[0]!, p[1]!]),
      nControls: b.n_controls,
      lastFit: null,
    };
    state = { ...state, branches };
  }
  return { ...state, dirty: false };
}
