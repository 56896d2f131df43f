/**
 * Serving: stdio (default, newline-delimited JSON) and HTTP POST /score.
 *
 * Echo mode answers 0.5 for every request without loading a model; otherwise
 * requests are scored by a saved artifact (see model.ts). The handshake name
 * documents the input template the scorer expects: the marked context and
 * the gloss, featurized jointly.
 */

import { createInterface } from "node:readline";
import { createServer, Server } from "node:http";

import {
  BatchRequest,
  clamp01,
  errorLine,
  handshakeLine,
  parseBatchRequest,
  ScoreEntry,
  scoresLine,
} from "./protocol.js";
import { RelevanceModel } from "./model.js";

export type ScoreFn = (context: string, gloss: string) => number;

export function echoScorer(value = 0.5): ScoreFn {
  return () => value;
}

export function modelScorer(model: RelevanceModel): ScoreFn {
  return (context, gloss) => model.score(context, gloss);
}

export function scoreBatch(request: BatchRequest, scorer: ScoreFn): ScoreEntry[] {
  return request.batch.map((item) => ({
    id: item.id,
    score: clamp01(scorer(item.context, item.gloss)),
  }));
}

export function serveStdio(scorer: ScoreFn, name: string): Promise<void> {
  process.stdout.write(handshakeLine(name) + "\n");
  const lines = createInterface({ input: process.stdin, crlfDelay: Infinity });
  return new Promise((resolve) => {
    lines.on("line", (line) => {
      if (!line.trim()) return;
      try {
        const request = parseBatchRequest(line);
        process.stdout.write(scoresLine(scoreBatch(request, scorer)) + "\n");
      } catch (err) {
        process.stdout.write(errorLine((err as Error).message) + "\n");
      }
    });
    lines.on("close", resolve);
  });
}

export function serveHttp(scorer: ScoreFn, name: string, port: number): Server {
  const server = createServer((request, response) => {
    if (request.method === "GET" && request.url === "/health") {
      response.writeHead(200, { "content-type": "application/json" });
      response.end(JSON.stringify({ status: "ok", name, protocol: "sandwich-scorer/1" }));
      return;
    }
    if (request.method !== "POST" || request.url !== "/score") {
      response.writeHead(404, { "content-type": "application/json" });
      response.end(errorLine("only POST /score is supported"));
      return;
    }
    const chunks: Buffer[] = [];
    request.on("data", (chunk) => chunks.push(chunk));
    request.on("end", () => {
      try {
        const body = parseBatchRequest(Buffer.concat(chunks).toString("utf-8"));
        response.writeHead(200, { "content-type": "application/json" });
        response.end(scoresLine(scoreBatch(body, scorer)));
      } catch (err) {
        response.writeHead(400, { "content-type": "application/json" });
        response.end(errorLine((err as Error).message));
      }
    });
  });
  server.listen(port);
  return server;
}
