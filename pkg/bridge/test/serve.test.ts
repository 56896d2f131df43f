import { spawn } from "node:child_process";
import { once } from "node:events";
import { createInterface } from "node:readline";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

import { describe, expect, it } from "vitest";

import { scoreBatch, echoScorer, serveHttp } from "../src/serve.js";
import { PROTOCOL } from "../src/protocol.js";

const CLI = join(dirname(fileURLToPath(import.meta.url)), "..", "dist", "cli.js");

function batchLine(n: number): string {
  const batch = Array.from({ length: n }, (_, i) => ({
    id: `q${i}`,
    context: "the crane was lifting",
    target_start: 4,
    target_end: 9,
    gloss: `gloss ${i}`,
  }));
  return JSON.stringify({ batch });
}

async function withStdioServer(
  args: string[],
  run: (send: (line: string) => Promise<string>, handshake: string) => Promise<void>,
): Promise<number | null> {
  const child = spawn("node", [CLI, ...args], { stdio: ["pipe", "pipe", "inherit"] });
  const lines = createInterface({ input: child.stdout });
  const pending: ((line: string) => void)[] = [];
  const backlog: string[] = [];
  lines.on("line", (line) => {
    const waiter = pending.shift();
    if (waiter) waiter(line);
    else backlog.push(line);
  });
  const nextLine = () =>
    new Promise<string>((resolve) => {
      const queued = backlog.shift();
      if (queued !== undefined) resolve(queued);
      else pending.push(resolve);
    });
  const handshake = await nextLine();
  const send = (line: string) => {
    child.stdin.write(line + "\n");
    return nextLine();
  };
  try {
    await run(send, handshake);
  } finally {
    child.stdin.end();
  }
  const [code] = (await once(child, "exit")) as [number | null];
  return code;
}

describe("stdio serving", () => {
  it("echo mode: handshake first, then 0.5 for every id", async () => {
    const code = await withStdioServer(["serve", "--echo"], async (send, handshake) => {
      const header = JSON.parse(handshake);
      expect(header.protocol).toBe(PROTOCOL);
      expect(header.name).toContain("bridge-echo");
      const response = JSON.parse(await send(batchLine(3)));
      expect(response.scores).toHaveLength(3);
      for (const entry of response.scores) expect(entry.score).toBe(0.5);
      // ids join the request
      expect(response.scores.map((s: { id: string }) => s.id)).toEqual(["q0", "q1", "q2"]);
      // a second batch on the same connection
      const again = JSON.parse(await send(batchLine(70)));
      expect(again.scores).toHaveLength(70);
    });
    expect(code).toBe(0);
  });

  it("malformed request becomes an error line, connection survives", async () => {
    await withStdioServer(["serve", "--echo"], async (send) => {
      const error = JSON.parse(await send("{not json"));
      expect(error.error).toBeDefined();
      const ok = JSON.parse(await send(batchLine(1)));
      expect(ok.scores).toHaveLength(1);
    });
  });

  it("model load failure replaces handshake with an error and exits nonzero", async () => {
    const child = spawn("node", [CLI, "serve", "--model", "/nonexistent/model.json"], {
      stdio: ["pipe", "pipe", "inherit"],
    });
    const lines = createInterface({ input: child.stdout });
    const [first] = (await once(lines, "line")) as [string];
    expect(JSON.parse(first).error).toMatch(/cannot load model/);
    const [code] = (await once(child, "exit")) as [number | null];
    expect(code).not.toBe(0);
  });

  it("serve without model or echo is an error", async () => {
    const child = spawn("node", [CLI, "serve"], { stdio: ["pipe", "pipe", "inherit"] });
    const lines = createInterface({ input: child.stdout });
    const [first] = (await once(lines, "line")) as [string];
    expect(JSON.parse(first).error).toMatch(/no model/);
    const [code] = (await once(child, "exit")) as [number | null];
    expect(code).not.toBe(0);
  });
});

describe("http serving", () => {
  it("POST /score answers the wire format", async () => {
    const server = serveHttp(echoScorer(0.5), "unit-http", 0);
    if (!server.listening) {
      await new Promise((resolve) => server.once("listening", resolve));
    }
    const address = server.address();
    if (address === null || typeof address === "string") throw new Error("no port");
    try {
      const response = await fetch(`http://127.0.0.1:${address.port}/score`, {
        method: "POST",
        body: batchLine(2),
      });
      expect(response.status).toBe(200);
      const body = (await response.json()) as { scores: { id: string; score: number }[] };
      expect(body.scores).toHaveLength(2);
      const bad = await fetch(`http://127.0.0.1:${address.port}/score`, {
        method: "POST",
        body: "{}",
      });
      expect(bad.status).toBe(400);
    } finally {
      server.close();
    }
  });
});

describe("scoreBatch", () => {
  it("clamps scorer output to the wire range", () => {
    const scores = scoreBatch(
      { batch: JSON.parse(batchLine(1)).batch },
      () => 1.7,
    );
    expect(scores[0].score).toBe(1);
  });
});
