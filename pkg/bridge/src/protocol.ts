/**
 * sandwich-scorer/1 wire types and framing.
 *
 * Newline-delimited JSON: the server emits one handshake object on start,
 * then answers each `{"batch": [...]}` line with `{"scores": [...]}` (or
 * `{"error": ...}`, which terminates that batch).
 */

export const PROTOCOL = "sandwich-scorer/1";

export interface ScoreItem {
  id: string;
  context: string;
  target_start: number;
  target_end: number;
  gloss: string;
}

export interface BatchRequest {
  batch: ScoreItem[];
}

export interface ScoreEntry {
  id: string;
  score: number;
}

export interface ScoresResponse {
  scores: ScoreEntry[];
}

export interface ErrorResponse {
  error: string;
}

export function handshakeLine(name: string): string {
  return JSON.stringify({ protocol: PROTOCOL, name });
}

export function errorLine(message: string): string {
  return JSON.stringify({ error: message } satisfies ErrorResponse);
}

export function scoresLine(scores: ScoreEntry[]): string {
  return JSON.stringify({ scores } satisfies ScoresResponse);
}

export function clamp01(value: number): number {
  if (Number.isNaN(value)) return 0;
  return Math.min(1, Math.max(0, value));
}

export function parseBatchRequest(line: string): BatchRequest {
  let parsed: unknown;
  try {
    parsed = JSON.parse(line);
  } catch {
    throw new Error(`request line is not JSON: ${line.slice(0, 120)}`);
  }
  if (typeof parsed !== "object" || parsed === null || !Array.isArray((parsed as BatchRequest).batch)) {
    throw new Error("request must be an object with a 'batch' array");
  }
  const batch = (parsed as BatchRequest).batch;
  for (const item of batch) {
    if (
      typeof item !== "object" ||
      item === null ||
      typeof item.id !== "string" ||
      typeof item.context !== "string" ||
      typeof item.gloss !== "string" ||
      typeof item.target_start !== "number" ||
      typeof item.target_end !== "number"
    ) {
      throw new Error("batch items need id/context/target_start/target_end/gloss");
    }
  }
  return { batch };
}
