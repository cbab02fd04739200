/** Coordinate conversions between display pixels, true image pixels, and
 * the service's normalized center format.
 *
 * Display pixels depend on how large the image is rendered; true image
 * pixels come from the `/api/images` listing. All persistence goes through
 * the normalized form, computed from TRUE dimensions, so saved coordinates
 * are independent of zoom and viewport.
 */

import type { ApiAnnotation, Corners } from "./types.js";

/** Map a point on the displayed image to true image pixels. */
export function displayToImage(x: number, y: number, zoom: number): { x: number; y: number } {
  if (!(zoom > 0)) throw new Error(`zoom must be positive, got ${zoom}`);
  return { x: x / zoom, y: y / zoom };
}

/** Order two drag points into corners with x1<=x2, y1<=y2. */
export function cornersFromDrag(ax: number, ay: number, bx: number, by: number): Corners {
  return {
    x1: Math.min(ax, bx),
    y1: Math.min(ay, by),
    x2: Math.max(ax, bx),
    y2: Math.max(ay, by),
  };
}

/** Clamp corners to the image rectangle. */
export function clampToImage(c: Corners, width: number, height: number): Corners {
  const clamp = (v: number, hi: number) => Math.min(Math.max(v, 0), hi);
  return {
    x1: clamp(c.x1, width),
    y1: clamp(c.y1, height),
    x2: clamp(c.x2, width),
    y2: clamp(c.y2, height),
  };
}

/** Image-pixel corners -> normalized center format via true dimensions. */
export function toNormalized(c: Corners, width: number, height: number, classId: number): ApiAnnotation {
  if (!(width > 0) || !(height > 0)) {
    throw new Error(`image dimensions must be positive, got ${width}x${height}`);
  }
  return {
    class_id: classId,
    cx: (c.x1 + c.x2) / 2 / width,
    cy: (c.y1 + c.y2) / 2 / height,
    w: (c.x2 - c.x1) / width,
    h: (c.y2 - c.y1) / height,
  };
}

/** Normalized center format -> image-pixel corners. */
export function toCorners(a: ApiAnnotation, width: number, height: number): Corners {
  const halfW = (a.w * width) / 2;
  const halfH = (a.h * height) / 2;
  return {
    x1: a.cx * width - halfW,
    y1: a.cy * height - halfH,
    x2: a.cx * width + halfW,
    y2: a.cy * height + halfH,
  };
}

/** Why a normalized box cannot be saved, or null when it is valid.
 * Mirrors the service's rules: centers in [0,1], sides in (0,1]. */
export function rangeProblem(a: ApiAnnotation): string | null {
  if (!Number.isFinite(a.cx) || a.cx < 0 || a.cx > 1) return `cx outside [0, 1]: ${a.cx}`;
  if (!Number.isFinite(a.cy) || a.cy < 0 || a.cy > 1) return `cy outside [0, 1]: ${a.cy}`;
  if (!Number.isFinite(a.w) || a.w <= 0 || a.w > 1) return `w outside (0, 1]: ${a.w}`;
  if (!Number.isFinite(a.h) || a.h <= 0 || a.h > 1) return `h outside (0, 1]: ${a.h}`;
  return null;
}
