import type { PointRecord, SessionStats, Vertex } from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public code: string,
    public status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin client over the label service HTTP API. */
export class LabelServiceClient {
  constructor(
    public baseUrl: string,
    public sessionId: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private url(suffix: string): string {
    return `${this.baseUrl}/session/${encodeURIComponent(this.sessionId)}/${suffix}`;
  }

  private async check<T>(resp: Response): Promise<T> {
    if (!resp.ok) {
      let code = "error";
      let message = `${resp.status}`;
      try {
        const body = (await resp.json()) as { code?: string; message?: string };
        code = body.code ?? code;
        message = body.message ?? message;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(message, code, resp.status);
    }
    return (await resp.json()) as T;
  }

  async points(): Promise<PointRecord[]> {
    return this.check(await this.fetchFn(this.url("points")));
  }

  async stats(): Promise<SessionStats> {
    return this.check(await this.fetchFn(this.url("stats")));
  }

  async bulk(polygon: readonly Vertex[], label: string): Promise<{ affected: number }> {
    return this.check(
      await this.fetchFn(this.url("bulk"), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ polygon, label }),
      }),
    );
  }

  async undo(): Promise<{ reverted: Record<string, unknown> }> {
    return this.check(await this.fetchFn(this.url("undo"), { method: "POST" }));
  }

  async exportLines(): Promise<string> {
    const resp = await this.fetchFn(this.url("export"));
    if (!resp.ok) {
      throw new ApiError(`export failed: ${resp.status}`, "error", resp.status);
    }
    return resp.text();
  }
}
