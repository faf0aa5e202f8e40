/**
 * Wire protocol: newline-delimited JSON, one object per line.
 *
 * Request:  {"id": int, "a": str, "la": str, "b": str, "lb": str}
 * Response: {"id": int, "score": float in [0,1]}
 *           {"id": int|null, "error": str}   for lines we cannot score
 *
 * Unknown request fields are ignored. Responses may be written in any
 * order; the id carries the correlation.
 */

export interface ScoreRequest {
  id: number;
  a: string;
  la: string;
  b: string;
  lb: string;
}

export interface ScoreResponse {
  id: number;
  score: number;
}

export interface ErrorResponse {
  id: number | null;
  error: string;
}

export type ParseResult =
  | { ok: true; request: ScoreRequest }
  | { ok: false; response: ErrorResponse };

/** Parse one request line. Never throws; malformed input becomes an error response. */
export function parseRequestLine(line: string): ParseResult {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    return { ok: false, response: { id: null, error: "invalid JSON" } };
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    return { ok: false, response: { id: null, error: "request must be a JSON object" } };
  }
  const rec = obj as Record<string, unknown>;
  // Salvage the id when present so the caller can correlate the failure.
  const id = typeof rec.id === "number" && Number.isInteger(rec.id) ? rec.id : null;
  if (id === null) {
    return { ok: false, response: { id: null, error: "missing integer id" } };
  }
  for (const field of ["a", "la", "b", "lb"] as const) {
    if (typeof rec[field] !== "string") {
      return { ok: false, response: { id, error: `field ${field} must be a string` } };
    }
  }
  return {
    ok: true,
    request: {
      id,
      a: rec.a as string,
      la: rec.la as string,
      b: rec.b as string,
      lb: rec.lb as string,
    },
  };
}

export function formatResponse(response: ScoreResponse | ErrorResponse): string {
  return JSON.stringify(response) + "\n";
}
