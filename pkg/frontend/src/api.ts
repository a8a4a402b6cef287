import type { ApiError, ConceptSummary, Session } from "./types";

export class ServiceError extends Error {
  code: string;
  status: number;

  constructor(status: number, detail: ApiError) {
    super(detail.message);
    this.code = detail.code;
    this.status = status;
  }
}

async function parse<T>(res: Response): Promise<T> {
  if (res.ok) {
    return (await res.json()) as T;
  }
  let detail: ApiError = { code: "unknown", message: `HTTP ${res.status}` };
  try {
    const body = await res.json();
    if (body && body.detail && body.detail.code) {
      detail = body.detail as ApiError;
    }
  } catch {
    // non-JSON error body; keep the fallback detail
  }
  throw new ServiceError(res.status, detail);
}

export interface ReviewApi {
  listConcepts(): Promise<ConceptSummary[]>;
  createSession(conceptId: string, seeds: string[]): Promise<Session>;
  getSession(sessionId: string): Promise<Session>;
  postDecisions(sessionId: string, accepts: string[], rejects: string[]): Promise<Session>;
  getContexts(term: string, limit?: number): Promise<string[]>;
}

// The UI only ever talks to the service through these five calls.
export function makeApi(base = ""): ReviewApi {
  return {
    async listConcepts() {
      return parse<ConceptSummary[]>(await fetch(`${base}/v1/concepts`));
    },
    async createSession(conceptId: string, seeds: string[]) {
      return parse<Session>(
        await fetch(`${base}/v1/sessions`, {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify({ concept_id: conceptId, seeds }),
        }),
      );
    },
    async getSession(sessionId: string) {
      return parse<Session>(await fetch(`${base}/v1/sessions/${sessionId}`));
    },
    async postDecisions(sessionId: string, accepts: string[], rejects: string[]) {
      return parse<Session>(
        await fetch(`${base}/v1/sessions/${sessionId}/decisions`, {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify({ accepts, rejects }),
        }),
      );
    },
    async getContexts(term: string, limit = 10) {
      const params = new URLSearchParams({ term, limit: String(limit) });
      const body = await parse<{ term: string; snippets: string[] }>(
        await fetch(`${base}/v1/contexts?${params}`),
      );
      return body.snippets;
    },
  };
}
