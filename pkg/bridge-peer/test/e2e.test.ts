import { spawn } from "node:child_process";
import net from "node:net";
import path from "node:path";
import { fileURLToPath } from "node:url";

import { afterEach, describe, expect, it } from "vitest";

const MAIN = path.join(
  path.dirname(fileURLToPath(import.meta.url)),
  "..",
  "dist",
  "main.js",
);

interface EngineScript {
  lines: string[];
  closeAfter?: number; // frames to read back before closing abruptly
}

interface Outcome {
  code: number | null;
  received: string[];
}

function runAgainstMockEngine(
  script: EngineScript,
  args: string[] = [],
): Promise<Outcome> {
  return new Promise((resolve, reject) => {
    const received: string[] = [];
    const server = net.createServer((conn) => {
      conn.setEncoding("utf8");
      for (const line of script.lines) {
        conn.write(line);
      }
      let buffer = "";
      conn.on("data", (chunk: string) => {
        buffer += chunk;
        let at;
        while ((at = buffer.indexOf("\n")) >= 0) {
          received.push(buffer.slice(0, at));
          buffer = buffer.slice(at + 1);
          if (script.closeAfter !== undefined &&
              received.length >= script.closeAfter) {
            conn.destroy();
          }
        }
      });
      conn.on("error", () => undefined);
    });
    server.listen(0, "127.0.0.1", () => {
      const { port } = server.address() as net.AddressInfo;
      const child = spawn(
        "node",
        [MAIN, "--connect", `127.0.0.1:${port}`, ...args],
        { stdio: ["ignore", "ignore", "pipe"] },
      );
      child.on("error", reject);
      child.on("exit", (code) => {
        server.close();
        resolve({ code, received });
      });
    });
  });
}

describe("bridge peer against a scripted engine", () => {
  afterEach(() => undefined);

  it("answers STEPs and exits 0 on BYE", async () => {
    const outcome = await runAgainstMockEngine({
      lines: ["HELLO 1 2\n", "STEP 0 1 0.5\n", "STEP 1 1 0.5\n", "BYE done\n"],
    });
    expect(outcome.code).toBe(0);
    expect(outcome.received).toHaveLength(2);
    expect(outcome.received[0]).toMatch(/^STATE 0 /);
    expect(outcome.received[1]).toMatch(/^STATE 1 /);
  });

  it("exits 4 on a version mismatch", async () => {
    const outcome = await runAgainstMockEngine({ lines: ["HELLO 7 2\n"] });
    expect(outcome.code).toBe(4);
    expect(outcome.received[0]).toMatch(/^BYE version mismatch/);
  });

  it("exits 4 on an out-of-order STEP", async () => {
    const outcome = await runAgainstMockEngine({
      lines: ["HELLO 1 1\n", "STEP 0 1\n", "STEP 9 1\n"],
    });
    expect(outcome.code).toBe(4);
    expect(outcome.received.at(-1)).toMatch(/^BYE out-of-order/);
  });

  it("exits 4 when the engine disappears mid-run", async () => {
    const outcome = await runAgainstMockEngine({
      lines: ["HELLO 1 1\n", "STEP 0 1\n"],
      closeAfter: 1,
    });
    expect(outcome.code).toBe(4);
  });

  it("honours plant flags", async () => {
    const outcome = await runAgainstMockEngine(
      { lines: ["HELLO 1 2\n", "STEP 0 1 1\n", "BYE done\n"] },
      ["--tau-p", "0.001,1.0", "--tti", "0.001", "--x0", "0"],
    );
    expect(outcome.code).toBe(0);
    const parts = outcome.received[0].split(" ");
    expect(Number(parts[2])).toBeCloseTo(1 - Math.exp(-1), 6);
    expect(Number(parts[3])).toBeLessThan(0.01);
  });
});
