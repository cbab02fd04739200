/** Wire types mirroring the label service's JSON API. */

export interface ApiClass {
  index: number;
  gloss: string;
  name: string;
}

export interface ApiImage {
  id: string;
  width: number;
  height: number;
  labeled: boolean;
}

/** One box as the service stores it: normalized center format. */
export interface ApiAnnotation {
  class_id: number;
  cx: number;
  cy: number;
  w: number;
  h: number;
}

export interface LabelDocument {
  image_id: string;
  revision: number;
  annotations: ApiAnnotation[];
}

export interface Progress {
  total: number;
  labeled: number;
  unlabeled: number;
}

export interface FieldError {
  index: number;
  field: string;
  reason: string;
}

/** Axis-aligned corners in true image pixels (not display pixels). */
export interface Corners {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

/** An editable box: image-pixel corners plus its assigned class. */
export interface EditorBox {
  corners: Corners;
  classId: number;
}
