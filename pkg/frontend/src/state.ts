/** Pure editor state and transitions.
 *
 * Everything here is synchronous and side-effect free so the annotation
 * workflow — selection, editing, the unsaved-changes guard, save/conflict
 * handling — can be tested without a DOM or a network. The app shell in
 * app.ts only wires these transitions to events.
 */

import { rangeProblem, toCorners, toNormalized } from "./boxes.js";
import type { ApiAnnotation, ApiClass, ApiImage, EditorBox, FieldError, LabelDocument } from "./types.js";

/** Number-row keys, in class order: digit d selects class d-1, 0 selects
 * class 9, and the two keys after it cover classes 10 and 11. */
export const CLASS_KEYS = ["1", "2", "3", "4", "5", "6", "7", "8", "9", "0", "-", "="] as const;

export function classForKey(key: string): number | null {
  const index = (CLASS_KEYS as readonly string[]).indexOf(key);
  return index === -1 ? null : index;
}

export function keyForClass(classId: number): string | null {
  return CLASS_KEYS[classId] ?? null;
}

export interface ConflictInfo {
  /** What the service holds now; offered by the reload-and-merge prompt. */
  serverDocument: LabelDocument;
}

export interface EditorState {
  classes: ApiClass[];
  images: ApiImage[];
  index: number;
  selectedClass: number;
  boxes: EditorBox[];
  selectedBox: number | null;
  revision: number;
  dirty: boolean;
  fieldErrors: FieldError[];
  conflict: ConflictInfo | null;
}

export function initialState(classes: ApiClass[], images: ApiImage[]): EditorState {
  return {
    classes,
    images,
    index: 0,
    selectedClass: 0,
    boxes: [],
    selectedBox: null,
    revision: 0,
    dirty: false,
    fieldErrors: [],
    conflict: null,
  };
}

export function currentImage(state: EditorState): ApiImage {
  const image = state.images[state.index];
  if (!image) throw new Error(`no image at index ${state.index}`);
  return image;
}

/** Replace the working set with a freshly fetched document. */
export function loadDocument(state: EditorState, doc: LabelDocument): EditorState {
  const { width, height } = currentImage(state);
  return {
    ...state,
    boxes: doc.annotations.map((a) => ({ corners: toCorners(a, width, height), classId: a.class_id })),
    selectedBox: null,
    revision: doc.revision,
    dirty: false,
    fieldErrors: [],
    conflict: null,
  };
}

export function selectClass(state: EditorState, classId: number): EditorState {
  if (classId < 0 || classId >= state.classes.length) return state;
  // Re-class the selected box too: pressing a digit with a box selected
  // is the fastest way to fix a mislabeled box.
  const boxes =
    state.selectedBox === null
      ? state.boxes
      : state.boxes.map((box, i) => (i === state.selectedBox ? { ...box, classId } : box));
  return {
    ...state,
    selectedClass: classId,
    boxes,
    dirty: state.dirty || state.selectedBox !== null,
  };
}

export function addBox(state: EditorState, box: EditorBox): EditorState {
  return {
    ...state,
    boxes: [...state.boxes, box],
    selectedBox: state.boxes.length,
    dirty: true,
  };
}

export function updateBox(state: EditorState, index: number, box: EditorBox): EditorState {
  if (index < 0 || index >= state.boxes.length) return state;
  return {
    ...state,
    boxes: state.boxes.map((b, i) => (i === index ? box : b)),
    dirty: true,
  };
}

export function deleteSelectedBox(state: EditorState): EditorState {
  if (state.selectedBox === null) return state;
  return {
    ...state,
    boxes: state.boxes.filter((_, i) => i !== state.selectedBox),
    selectedBox: null,
    dirty: true,
  };
}

export function selectBox(state: EditorState, index: number | null): EditorState {
  if (index !== null && (index < 0 || index >= state.boxes.length)) return state;
  return { ...state, selectedBox: index };
}

/** The working set in wire format, converted through TRUE image dimensions. */
export function toAnnotations(state: EditorState): ApiAnnotation[] {
  const { width, height } = currentImage(state);
  return state.boxes.map((box) => toNormalized(box.corners, width, height, box.classId));
}

/** Per-box reasons the save button must stay disabled; empty means saveable. */
export function saveBlockers(state: EditorState): FieldError[] {
  return toAnnotations(state).flatMap((annotation, index) => {
    const reason = rangeProblem(annotation);
    return reason === null ? [] : [{ index, field: reason.split(" ")[0] ?? "box", reason }];
  });
}

/** Navigation away from unsaved edits needs explicit confirmation. */
export function canNavigate(state: EditorState, confirmed: boolean): boolean {
  return !state.dirty || confirmed;
}

/** Move to another image; refuses to discard edits unless confirmed. */
export function navigate(state: EditorState, delta: number, confirmed = false): EditorState {
  if (!canNavigate(state, confirmed)) return state;
  const next = state.index + delta;
  if (next < 0 || next >= state.images.length) return state;
  return {
    ...state,
    index: next,
    boxes: [],
    selectedBox: null,
    revision: 0,
    dirty: false,
    fieldErrors: [],
    conflict: null,
  };
}

/** A successful PUT: adopt the service's canonical document. */
export function applySaveSuccess(state: EditorState, doc: LabelDocument): EditorState {
  return loadDocument(state, doc);
}

/** A 409: keep local edits, surface the server's version for the prompt. */
export function applyConflict(state: EditorState, serverDocument: LabelDocument): EditorState {
  return { ...state, conflict: { serverDocument } };
}

/** A 422: show the service's per-field reasons inline. */
export function applyValidationErrors(state: EditorState, errors: FieldError[]): EditorState {
  return { ...state, fieldErrors: errors };
}

/** Resolve a conflict: take the server's version, or keep local edits and
 * retry against the server's revision. */
export function resolveConflict(state: EditorState, choice: "reload" | "keep"): EditorState {
  if (state.conflict === null) return state;
  const server = state.conflict.serverDocument;
  if (choice === "reload") {
    return loadDocument(state, server);
  }
  return { ...state, revision: server.revision, conflict: null };
}
