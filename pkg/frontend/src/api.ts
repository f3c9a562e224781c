/** Thin fetch client for the review service endpoints. */
import type {
  AnnotatedParagraphDto,
  QueuePage,
  ReviewSubmission,
  SchemaDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: unknown,
    message?: string,
  ) {
    super(message ?? `HTTP ${status}`);
  }
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      throw new ApiError(response.status, body);
    }
    return body as T;
  }

  getSchema(): Promise<SchemaDoc> {
    return this.request<SchemaDoc>("/schema");
  }

  loadQueue(status = "pending", limit = 50, shuffleSeed?: number): Promise<QueuePage> {
    const params = new URLSearchParams({ status, limit: String(limit) });
    if (shuffleSeed !== undefined) params.set("shuffle", String(shuffleSeed));
    return this.request<QueuePage>(`/paragraphs?${params}`);
  }

  getParagraph(doi: string, index: number): Promise<AnnotatedParagraphDto> {
    return this.request<AnnotatedParagraphDto>(`/paragraphs/${doi}/${index}`);
  }

  submitReview(
    doi: string,
    index: number,
    submission: ReviewSubmission,
    ifUpdatedAt?: string,
  ): Promise<{ ok: boolean; updated_at: string }> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (ifUpdatedAt !== undefined) headers["X-If-Updated-At"] = ifUpdatedAt;
    return this.request(`/paragraphs/${doi}/${index}/review`, {
      method: "POST",
      headers,
      body: JSON.stringify(submission),
    });
  }

  getStats(): Promise<{ by_status: Record<string, number>; by_entity_type: Record<string, number>; total: number }> {
    return this.request("/stats");
  }
}
