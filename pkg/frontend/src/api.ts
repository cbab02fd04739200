/** Typed client for the label service's HTTP/JSON API.
 *
 * The fetch implementation is injectable so tests can run without a
 * network; errors are typed so callers can branch on conflicts (409) and
 * validation failures (422) without string matching.
 */

import type { ApiAnnotation, ApiClass, ApiImage, FieldError, LabelDocument, Progress } from "./types.js";

export class HttpError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "HttpError";
  }
}

/** A PUT lost the revision race; `expected` is the service's current revision. */
export class ConflictError extends HttpError {
  constructor(
    public readonly expected: number,
    public readonly got: number,
  ) {
    super(409, `stale revision: sent ${got}, service is at ${expected}`);
    this.name = "ConflictError";
  }
}

/** The service rejected annotation fields; one entry per violation. */
export class ValidationError extends HttpError {
  constructor(public readonly errors: FieldError[]) {
    super(422, errors.map((e) => `[${e.index}].${e.field}: ${e.reason}`).join("; "));
    this.name = "ValidationError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (response.ok) return (await response.json()) as T;

    let detail: unknown = null;
    try {
      detail = (await response.json()).detail;
    } catch {
      /* non-JSON error body; fall through to the generic error */
    }
    if (response.status === 409 && detail && typeof detail === "object") {
      const d = detail as { expected?: number; got?: number };
      throw new ConflictError(d.expected ?? -1, d.got ?? -1);
    }
    if (response.status === 422 && Array.isArray(detail)) {
      throw new ValidationError(detail as FieldError[]);
    }
    throw new HttpError(response.status, `${response.status} on ${path}`);
  }

  getClasses(): Promise<{ classes: ApiClass[] }> {
    return this.request("/api/classes");
  }

  getImages(): Promise<{ images: ApiImage[] }> {
    return this.request("/api/images");
  }

  getLabels(imageId: string): Promise<LabelDocument> {
    return this.request(`/api/labels/${encodeURIComponent(imageId)}`);
  }

  putLabels(imageId: string, revision: number, annotations: ApiAnnotation[]): Promise<LabelDocument> {
    return this.request(`/api/labels/${encodeURIComponent(imageId)}`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ revision, annotations }),
    });
  }

  getProgress(): Promise<Progress> {
    return this.request("/api/progress");
  }

  /** URL for an image's raw bytes, for use as an <img> src. */
  imageUrl(imageId: string): string {
    return `${this.baseUrl}/api/images/${encodeURIComponent(imageId)}`;
  }
}
