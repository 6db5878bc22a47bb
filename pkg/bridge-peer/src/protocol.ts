/**
 * Wire format of the co-simulation bridge, engine side is the master:
 *
 *   HELLO <schema_version> <n_ders>     engine -> peer, once
 *   STEP <tti_index> <u_1> ... <u_n>    engine -> peer
 *   STATE <tti_index> <x_1> ... <x_n>   peer -> engine
 *   BYE <reason>                        either side, terminal
 *
 * Frames are newline-terminated, space-separated; numbers carry 9
 * significant digits.
 */

export const SCHEMA_VERSION = 1;

export class ProtocolError extends Error {}

export interface Hello {
  version: number;
  nDers: number;
}

export interface Step {
  ttiIndex: number;
  setpoints: number[];
}

/** 9 significant digits, trailing zeros trimmed. */
export function fmt9(x: number): string {
  return Number(x.toPrecision(9)).toString();
}

function parseNumber(token: string, what: string): number {
  const value = Number(token);
  if (token === "" || Number.isNaN(value)) {
    throw new ProtocolError(`${what} is not a number: '${token}'`);
  }
  return value;
}

function parseInteger(token: string, what: string): number {
  const value = parseNumber(token, what);
  if (!Number.isInteger(value)) {
    throw new ProtocolError(`${what} is not an integer: '${token}'`);
  }
  return value;
}

export function parseHello(line: string): Hello {
  const tokens = line.split(/\s+/).filter((t) => t.length > 0);
  if (tokens[0] !== "HELLO" || tokens.length !== 3) {
    throw new ProtocolError(`expected HELLO frame, got '${line}'`);
  }
  return {
    version: parseInteger(tokens[1], "schema version"),
    nDers: parseInteger(tokens[2], "DER count"),
  };
}

export function parseStep(line: string, nDers: number): Step | "BYE" {
  const tokens = line.split(/\s+/).filter((t) => t.length > 0);
  if (tokens[0] === "BYE") {
    return "BYE";
  }
  if (tokens[0] !== "STEP") {
    throw new ProtocolError(`expected STEP or BYE, got '${tokens[0] ?? ""}'`);
  }
  if (tokens.length !== 2 + nDers) {
    throw new ProtocolError(
      `STEP carries ${tokens.length - 2} set points, expected ${nDers}`,
    );
  }
  return {
    ttiIndex: parseInteger(tokens[1], "tti index"),
    setpoints: tokens.slice(2).map((t) => parseNumber(t, "set point")),
  };
}

export function formatState(ttiIndex: number, outputs: number[]): string {
  return ["STATE", String(ttiIndex), ...outputs.map(fmt9)].join(" ") + "\n";
}

export function formatBye(reason: string): string {
  return `BYE ${reason}\n`;
}

/** Reassembles newline-terminated frames from arbitrary stream chunks. */
export class LineSplitter {
  private buffer = "";

  push(chunk: string): string[] {
    this.buffer += chunk;
    const parts = this.buffer.split("\n");
    this.buffer = parts.pop() ?? "";
    return parts.filter((line) => line.length > 0);
  }
}
