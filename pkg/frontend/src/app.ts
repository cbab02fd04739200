/** Browser shell: wires the pure editor state to the canvas, keyboard, and
 * the label service. Keyboard-first — number-row keys pick the class,
 * arrows move between images, Delete removes the selected box, S saves. */

import { ApiClient, ConflictError, ValidationError } from "./api.js";
import { clampToImage, cornersFromDrag, displayToImage } from "./boxes.js";
import type { Corners, EditorBox } from "./types.js";
import * as st from "./state.js";

const api = new ApiClient();

let state: st.EditorState;
let draft: Corners | null = null;
let dragStart: { x: number; y: number } | null = null;
let statusText = "";

const imageEl = document.getElementById("image") as HTMLImageElement;
const canvas = document.getElementById("overlay") as HTMLCanvasElement;
const classListEl = document.getElementById("classes") as HTMLUListElement;
const errorsEl = document.getElementById("errors") as HTMLUListElement;
const saveButton = document.getElementById("save") as HTMLButtonElement;
const statusEl = document.getElementById("status") as HTMLSpanElement;
const progressEl = document.getElementById("progress") as HTMLSpanElement;
const titleEl = document.getElementById("image-title") as HTMLSpanElement;
const conflictEl = document.getElementById("conflict") as HTMLDivElement;

function classColor(classId: number): string {
  return `hsl(${(classId * 30) % 360} 85% 45%)`;
}

function zoomFactor(): number {
  return imageEl.clientWidth > 0 ? imageEl.clientWidth / st.currentImage(state).width : 1;
}

function setState(next: st.EditorState): void {
  state = next;
  render();
}

function render(): void {
  const image = st.currentImage(state);
  titleEl.textContent = `${image.id} (${state.index + 1}/${state.images.length}) — rev ${state.revision}${state.dirty ? " *" : ""}`;

  classListEl.replaceChildren(
    ...state.classes.map((cls, i) => {
      const item = document.createElement("li");
      item.textContent = `${st.keyForClass(i) ?? "?"} ${cls.gloss} (${cls.name})`;
      item.style.borderLeftColor = classColor(i);
      if (i === state.selectedClass) item.classList.add("selected");
      item.onclick = () => setState(st.selectClass(state, i));
      return item;
    }),
  );

  const blockers = st.saveBlockers(state);
  saveButton.disabled = blockers.length > 0 || !state.dirty;
  errorsEl.replaceChildren(
    ...[...blockers, ...state.fieldErrors].map((error) => {
      const item = document.createElement("li");
      item.textContent = `box ${error.index}: ${error.reason}`;
      return item;
    }),
  );

  conflictEl.hidden = state.conflict === null;
  statusEl.textContent = statusText;
  drawOverlay();
}

function drawOverlay(): void {
  const zoom = zoomFactor();
  canvas.width = imageEl.clientWidth;
  canvas.height = imageEl.clientHeight;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.font = "12px sans-serif";

  state.boxes.forEach((box, i) => {
    const c = box.corners;
    ctx.strokeStyle = classColor(box.classId);
    ctx.lineWidth = i === state.selectedBox ? 3 : 1.5;
    ctx.strokeRect(c.x1 * zoom, c.y1 * zoom, (c.x2 - c.x1) * zoom, (c.y2 - c.y1) * zoom);
    const gloss = state.classes[box.classId]?.gloss ?? String(box.classId);
    ctx.fillStyle = classColor(box.classId);
    ctx.fillText(gloss, c.x1 * zoom + 2, Math.max(10, c.y1 * zoom - 3));
  });

  if (draft) {
    ctx.strokeStyle = classColor(state.selectedClass);
    ctx.setLineDash([4, 3]);
    ctx.strokeRect(draft.x1 * zoom, draft.y1 * zoom, (draft.x2 - draft.x1) * zoom, (draft.y2 - draft.y1) * zoom);
    ctx.setLineDash([]);
  }
}

function canvasPoint(event: PointerEvent): { x: number; y: number } {
  const rect = canvas.getBoundingClientRect();
  return displayToImage(event.clientX - rect.left, event.clientY - rect.top, zoomFactor());
}

function boxAt(point: { x: number; y: number }): number | null {
  for (let i = state.boxes.length - 1; i >= 0; i--) {
    const c = state.boxes[i]!.corners;
    if (point.x >= c.x1 && point.x <= c.x2 && point.y >= c.y1 && point.y <= c.y2) return i;
  }
  return null;
}

canvas.addEventListener("pointerdown", (event) => {
  canvas.setPointerCapture(event.pointerId);
  dragStart = canvasPoint(event);
});

canvas.addEventListener("pointermove", (event) => {
  if (!dragStart) return;
  const point = canvasPoint(event);
  const image = st.currentImage(state);
  draft = clampToImage(cornersFromDrag(dragStart.x, dragStart.y, point.x, point.y), image.width, image.height);
  drawOverlay();
});

canvas.addEventListener("pointerup", (event) => {
  if (!dragStart) return;
  const point = canvasPoint(event);
  const image = st.currentImage(state);
  const corners = clampToImage(cornersFromDrag(dragStart.x, dragStart.y, point.x, point.y), image.width, image.height);
  dragStart = null;
  draft = null;
  const tooSmall = corners.x2 - corners.x1 < 3 && corners.y2 - corners.y1 < 3;
  if (tooSmall) {
    setState(st.selectBox(state, boxAt(point)));
    return;
  }
  const box: EditorBox = { corners, classId: state.selectedClass };
  setState(st.addBox(state, box));
});

async function loadCurrent(): Promise<void> {
  const image = st.currentImage(state);
  imageEl.src = api.imageUrl(image.id);
  await imageEl.decode().catch(() => undefined);
  const doc = await api.getLabels(image.id);
  setState(st.loadDocument(state, doc));
  await refreshProgress();
}

async function refreshProgress(): Promise<void> {
  const progress = await api.getProgress();
  progressEl.textContent = `${progress.labeled}/${progress.total} labeled`;
}

async function save(): Promise<void> {
  const image = st.currentImage(state);
  statusText = "saving…";
  render();
  try {
    const doc = await api.putLabels(image.id, state.revision, st.toAnnotations(state));
    statusText = `saved rev ${doc.revision}`;
    setState(st.applySaveSuccess(state, doc));
    const images = state.images.map((img, i) => (i === state.index ? { ...img, labeled: true } : img));
    setState({ ...state, images });
    await refreshProgress();
  } catch (error) {
    if (error instanceof ConflictError) {
      statusText = error.message;
      const server = await api.getLabels(image.id);
      setState(st.applyConflict(state, server));
    } else if (error instanceof ValidationError) {
      statusText = "rejected by the service";
      setState(st.applyValidationErrors(state, error.errors));
    } else {
      statusText = String(error);
      render();
    }
  }
}

async function moveTo(delta: number): Promise<void> {
  const confirmed = state.dirty ? window.confirm("Discard unsaved changes on this image?") : false;
  const next = st.navigate(state, delta, confirmed);
  if (next === state || next.index === state.index) return;
  setState(next);
  await loadCurrent();
}

document.addEventListener("keydown", (event) => {
  if (event.target instanceof HTMLInputElement) return;
  const classId = st.classForKey(event.key);
  if (classId !== null) {
    setState(st.selectClass(state, classId));
    return;
  }
  switch (event.key) {
    case "ArrowRight":
      void moveTo(1);
      break;
    case "ArrowLeft":
      void moveTo(-1);
      break;
    case "Delete":
    case "Backspace":
      setState(st.deleteSelectedBox(state));
      break;
    case "s":
      if (!saveButton.disabled) void save();
      break;
    case "Escape":
      setState(st.selectBox(state, null));
      break;
  }
});

saveButton.addEventListener("click", () => void save());
window.addEventListener("resize", drawOverlay);

document.getElementById("conflict-reload")!.addEventListener("click", () => {
  statusText = "reloaded the service's version";
  setState(st.resolveConflict(state, "reload"));
});
document.getElementById("conflict-keep")!.addEventListener("click", () => {
  statusText = "kept local edits; save again to write them";
  setState(st.resolveConflict(state, "keep"));
});

async function main(): Promise<void> {
  const [{ classes }, { images }] = await Promise.all([api.getClasses(), api.getImages()]);
  if (images.length === 0) {
    document.body.textContent = "The service reports no images.";
    return;
  }
  state = st.initialState(classes, images);
  render();
  await loadCurrent();
}

void main();
